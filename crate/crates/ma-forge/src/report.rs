//! Named verification checks with a JSON serialization.

use serde::{Deserialize, Serialize};

use crate::Result;

/// Direction of a check comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOp {
    /// Pass iff measured <= threshold.
    Le,
    /// Pass iff measured >= threshold.
    Ge,
}

/// One named check with its measured value and threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub op: CheckOp,
    pub pass: bool,
}

/// Collected checks of one run. Check names are unique; registering a name
/// twice is a programming error and panics.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Reference to the run manifest the checks belong to.
    pub run: String,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(run: impl Into<String>) -> Self {
        VerificationReport {
            run: run.into(),
            checks: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, measured: f64, threshold: f64, op: CheckOp) -> bool {
        assert!(
            self.checks.iter().all(|c| c.name != name),
            "duplicate check name {name}"
        );
        let pass = match op {
            CheckOp::Le => measured <= threshold,
            CheckOp::Ge => measured >= threshold,
        };
        self.checks.push(Check {
            name: name.into(),
            measured,
            threshold,
            op,
            pass,
        });
        pass
    }

    /// Record `measured <= threshold`; returns the verdict.
    pub fn check_le(&mut self, name: &str, measured: f64, threshold: f64) -> bool {
        self.push(name, measured, threshold, CheckOp::Le)
    }

    /// Record `measured >= threshold`; returns the verdict.
    pub fn check_ge(&mut self, name: &str, measured: f64, threshold: f64) -> bool {
        self.push(name, measured, threshold, CheckOp::Ge)
    }

    /// Record a plain verdict as a 0/1 check.
    pub fn check_flag(&mut self, name: &str, pass: bool) -> bool {
        self.push(name, if pass { 1.0 } else { 0.0 }, 1.0, CheckOp::Ge)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// One line per check, fixed-width verdict first.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let op = match c.op {
                CheckOp::Le => "<=",
                CheckOp::Ge => ">=",
            };
            out.push_str(&format!(
                "{} {:<44} {:>14.6e} {} {:.6e}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                op,
                c.threshold
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_follow_the_comparison_direction() {
        let mut r = VerificationReport::new("m");
        assert!(r.check_le("small enough", 0.5, 1.0));
        assert!(!r.check_le("too big", 2.0, 1.0));
        assert!(r.check_ge("big enough", 2.0, 1.0));
        assert!(r.check_flag("already decided", true));
        assert!(!r.all_pass());
        let s = r.summary();
        assert!(s.contains("PASS small enough"));
        assert!(s.contains("FAIL too big"));
    }

    #[test]
    fn json_round_trip_preserves_checks() {
        let mut r = VerificationReport::new("manifest.json");
        r.check_le("a", 1.0, 2.0);
        r.check_ge("b", 3.0, 2.0);
        let back = VerificationReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back.run, "manifest.json");
        assert_eq!(back.checks.len(), 2);
        assert_eq!(back.checks[0].name, "a");
        assert!(back.checks.iter().all(|c| c.pass));
    }

    #[test]
    #[should_panic(expected = "duplicate check name")]
    fn duplicate_names_are_rejected() {
        let mut r = VerificationReport::new("m");
        r.check_le("same", 0.0, 1.0);
        r.check_le("same", 0.0, 1.0);
    }

    #[test]
    fn serialized_reports_match_the_published_schema() {
        let schema_path = concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../schemas/report.schema.json"
        );
        let schema: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
        let validator = jsonschema::validator_for(&schema).unwrap();

        let mut r = VerificationReport::new("run-dir/manifest.json");
        r.check_le("upper", 0.5, 1.0);
        r.check_ge("lower", 2.0, 1.0);
        let doc: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert!(validator.validate(&doc).is_ok());

        let mut mangled = doc.clone();
        mangled["checks"][0]["op"] = serde_json::json!("eq");
        assert!(validator.validate(&mangled).is_err());

        let mut extra = doc;
        extra["unexpected"] = serde_json::json!(1);
        assert!(validator.validate(&extra).is_err());
    }
}
