//! Run configuration as INI-style key=value text. Command-line flags reuse
//! the same keys, so a flag override is one more `apply` call.

use crate::solver::SweepMode;
use crate::{Error, Result};

/// What a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Polytope,
    YGraph,
    BarrierCheck,
    LegendreTest,
}

impl RunMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "polytope" => Ok(RunMode::Polytope),
            "y-graph" => Ok(RunMode::YGraph),
            "barrier-check" => Ok(RunMode::BarrierCheck),
            "legendre-test" => Ok(RunMode::LegendreTest),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (polytope | y-graph | barrier-check | legendre-test)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RunMode::Polytope => "polytope",
            RunMode::YGraph => "y-graph",
            RunMode::BarrierCheck => "barrier-check",
            RunMode::LegendreTest => "legendre-test",
        }
    }
}

/// Full configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: RunMode,
    pub n: usize,
    /// Catalog shape name; mutually exclusive with `vertices`.
    pub preset: Option<String>,
    /// Path of a plain-text polytope file.
    pub vertices: Option<String>,
    /// Path of a segment-direction file for y-graph runs.
    pub segments: Option<String>,
    pub half_width: f64,
    pub m: usize,
    pub epsilon: f64,
    pub epsilon_tilde: f64,
    pub r0: f64,
    pub boundary_offset: f64,
    pub tol_r: f64,
    pub max_sweeps: usize,
    pub sweep: SweepMode,
    pub cascadic: bool,
    /// Output directory for artifacts; when unset the runner derives a
    /// name from the mode and grid.
    pub out: Option<String>,
    pub seed: u64,
}

impl RunConfig {
    /// Dimension-tuned defaults matching the solver pipelines.
    pub fn defaults(n: usize) -> Self {
        let p = crate::solver::PipelineConfig::defaults(n);
        RunConfig {
            mode: RunMode::Polytope,
            n,
            preset: None,
            vertices: None,
            segments: None,
            half_width: p.half_width,
            m: p.m,
            epsilon: p.epsilon,
            epsilon_tilde: 1.5 * p.epsilon,
            r0: 0.1,
            boundary_offset: p.boundary_offset,
            tol_r: p.tol_r,
            max_sweeps: p.max_sweeps,
            sweep: p.mode,
            cascadic: p.cascadic,
            out: None,
            seed: 7,
        }
    }

    /// Set one key. Both the file parser and flag overrides go through
    /// here, so the accepted keys are identical.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what} '{value}'"));
        match key {
            "mode" => self.mode = RunMode::parse(value)?,
            "n" => {
                self.n = value.parse().map_err(|_| bad("dimension"))?;
                if self.n == 0 || self.n > 4 {
                    return Err(Error::Config(format!("dimension {} not in 1..=4", self.n)));
                }
            }
            "preset" => self.preset = Some(value.to_string()),
            "vertices" => self.vertices = Some(value.to_string()),
            "segments" => self.segments = Some(value.to_string()),
            "half_width" => self.half_width = value.parse().map_err(|_| bad("half_width"))?,
            "m" => self.m = value.parse().map_err(|_| bad("node count"))?,
            "epsilon" => self.epsilon = value.parse().map_err(|_| bad("epsilon"))?,
            "epsilon_tilde" => {
                self.epsilon_tilde = value.parse().map_err(|_| bad("epsilon_tilde"))?
            }
            "r0" => self.r0 = value.parse().map_err(|_| bad("r0"))?,
            "boundary_offset" => {
                self.boundary_offset = value.parse().map_err(|_| bad("boundary_offset"))?
            }
            "tol_r" => self.tol_r = value.parse().map_err(|_| bad("tol_r"))?,
            "max_sweeps" => self.max_sweeps = value.parse().map_err(|_| bad("max_sweeps"))?,
            "sweep" => self.sweep = SweepMode::parse(value)?,
            "cascadic" => self.cascadic = value.parse().map_err(|_| bad("cascadic flag"))?,
            "out" => self.out = Some(value.to_string()),
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parse `key = value` lines; `#` and `;` start comments. Keys must
    /// not repeat. Unset keys keep the defaults for the dimension parsed
    /// first, so `n` should come before dimension-dependent overrides.
    pub fn parse(text: &str) -> Result<Self> {
        // First pass: find the dimension so the defaults match it.
        let mut n = 3usize;
        for line in text.lines() {
            let line = strip_comment(line);
            if let Some((k, v)) = split_pair(line) {
                if k == "n" {
                    n = v
                        .parse()
                        .map_err(|_| Error::Config(format!("invalid dimension '{v}'")))?;
                }
            }
        }
        let mut cfg = RunConfig::defaults(n);
        let mut seen = std::collections::BTreeSet::new();
        for (no, line) in text.lines().enumerate() {
            let line = strip_comment(line);
            if line.is_empty() {
                continue;
            }
            let (k, v) = split_pair(line).ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", no + 1))
            })?;
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", no + 1)));
            }
            cfg.apply(k, v)?;
        }
        Ok(cfg)
    }

    /// Serialize every key in a fixed order; floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_ini(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("mode", self.mode.name().into());
        kv("n", self.n.to_string());
        if let Some(p) = &self.preset {
            kv("preset", p.clone());
        }
        if let Some(p) = &self.vertices {
            kv("vertices", p.clone());
        }
        if let Some(p) = &self.segments {
            kv("segments", p.clone());
        }
        kv("half_width", format!("{:?}", self.half_width));
        kv("m", self.m.to_string());
        kv("epsilon", format!("{:?}", self.epsilon));
        kv("epsilon_tilde", format!("{:?}", self.epsilon_tilde));
        kv("r0", format!("{:?}", self.r0));
        kv("boundary_offset", format!("{:?}", self.boundary_offset));
        kv("tol_r", format!("{:?}", self.tol_r));
        kv("max_sweeps", self.max_sweeps.to_string());
        kv("sweep", self.sweep.name().into());
        kv("cascadic", self.cascadic.to_string());
        if let Some(p) = &self.out {
            kv("out", p.clone());
        }
        kv("seed", self.seed.to_string());
        out
    }
}

fn strip_comment(line: &str) -> &str {
    let end = line.find(['#', ';']).unwrap_or(line.len());
    line[..end].trim()
}

fn split_pair(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    Some((k.trim(), v.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_the_identity() {
        let mut cfg = RunConfig::defaults(3);
        cfg.mode = RunMode::YGraph;
        cfg.preset = Some("tetrahedron".into());
        cfg.segments = Some("y3.txt".into());
        cfg.epsilon = 0.07;
        cfg.epsilon_tilde = 0.105;
        cfg.tol_r = 3.5e-8;
        cfg.sweep = SweepMode::Jacobi;
        cfg.out = Some("runs/a".into());
        let back = RunConfig::parse(&cfg.to_ini()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn defaults_follow_the_dimension() {
        let cfg = RunConfig::parse("n = 2").unwrap();
        assert_eq!(cfg.m, RunConfig::defaults(2).m);
        // Dimension read before other keys regardless of line order.
        let cfg = RunConfig::parse("m = 41\nn = 4").unwrap();
        assert_eq!(cfg.n, 4);
        assert_eq!(cfg.m, 41);
    }

    #[test]
    fn unknown_keys_and_duplicates_are_rejected() {
        assert!(matches!(
            RunConfig::parse("wat = 1"),
            Err(Error::Config(msg)) if msg.contains("unknown key")
        ));
        assert!(matches!(
            RunConfig::parse("m = 3\nm = 5"),
            Err(Error::Config(msg)) if msg.contains("duplicate")
        ));
        assert!(RunConfig::parse("n = 9").is_err());
        assert!(RunConfig::parse("just words").is_err());
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let cfg = RunConfig::parse("# full line\n\nm = 21 ; trailing\n").unwrap();
        assert_eq!(cfg.m, 21);
    }
}
