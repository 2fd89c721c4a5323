//! Command line front end: obstacle runs with verification reports,
//! barrier and transform self tests, and VTK re-export of finished runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ma_forge::config::{RunConfig, RunMode};
use ma_forge::geometry::{self, Polytope};
use ma_forge::grid::{ScalarField, TensorGrid};
use ma_forge::report::VerificationReport;
use ma_forge::solver::{self, PipelineConfig, SolveResult, YPipelineConfig};
use ma_forge::{analysis, barriers, io, legendre, Error, Result};

#[derive(Parser)]
#[command(name = "ma-forge", version, about = "Obstacle runs for the unit Monge-Ampere equation, with contact-set and singular-structure verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a configured run, write artifacts, and verify invariants.
    Run(RunArgs),
    /// Compare analytic barrier determinants against finite differences.
    BarrierCheck(BarrierCheckArgs),
    /// Check the fast conjugate against the brute-force oracle and the
    /// transform identities.
    LegendreTest(LegendreTestArgs),
    /// Rebuild the VTK volume from a finished run directory.
    Export(ExportArgs),
}

/// Every flag mirrors a config-file key; flags override file entries.
#[derive(Args)]
struct RunArgs {
    /// Key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// polytope | y-graph | barrier-check | legendre-test.
    #[arg(long)]
    mode: Option<String>,
    /// Ambient dimension, 1 to 4.
    #[arg(long)]
    n: Option<String>,
    /// Catalog shape name (point, segment, triangle, square, tetrahedron,
    /// cube, simplex4).
    #[arg(long)]
    preset: Option<String>,
    /// Plain-text polytope file, instead of a preset.
    #[arg(long)]
    vertices: Option<String>,
    /// Segment-direction file for y-graph runs.
    #[arg(long)]
    segments: Option<String>,
    /// Half-width R of the box [-R, R]^n.
    #[arg(long)]
    half_width: Option<String>,
    /// Nodes per axis.
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    epsilon_tilde: Option<String>,
    #[arg(long)]
    r0: Option<String>,
    #[arg(long)]
    boundary_offset: Option<String>,
    #[arg(long)]
    tol_r: Option<String>,
    #[arg(long)]
    max_sweeps: Option<String>,
    /// gauss-seidel | jacobi.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    cascadic: Option<String>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args)]
struct BarrierCheckArgs {
    /// Sample points per barrier.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Finite-difference step relative to |sample|.
    #[arg(long, default_value_t = 1e-3)]
    rel_h: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output directory for the sample tables.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LegendreTestArgs {
    /// Random primal/dual pairs for the Fenchel-Young check.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output directory for the report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Run directory holding manifest.json and fields.csv.
    #[arg(long)]
    run: PathBuf,
    /// Output VTK path; defaults to fields.vtk inside the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::NonConvergence { .. } => 3,
                Error::Analysis(_) => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Run(a) => cmd_run(&a),
        Command::BarrierCheck(a) => {
            let out = a.out.clone().unwrap_or_else(|| PathBuf::from("run-barrier-check"));
            std::fs::create_dir_all(&out)?;
            barrier_check(&out, a.samples, a.rel_h, a.seed)
        }
        Command::LegendreTest(a) => {
            let out = a.out.clone().unwrap_or_else(|| PathBuf::from("run-legendre-test"));
            std::fs::create_dir_all(&out)?;
            legendre_test(&out, a.samples, a.seed)
        }
        Command::Export(a) => cmd_export(&a).map(|_| true),
    }
}

fn build_config(a: &RunArgs) -> Result<RunConfig> {
    let mut cfg = if let Some(path) = &a.config {
        RunConfig::parse(&std::fs::read_to_string(path)?)?
    } else {
        let n = match &a.n {
            Some(s) => s
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("invalid dimension '{s}'")))?,
            None => 3,
        };
        if n == 0 || n > 4 {
            return Err(Error::Config(format!("dimension {n} not in 1..=4")));
        }
        RunConfig::defaults(n)
    };
    let overrides: [(&str, &Option<String>); 17] = [
        ("n", &a.n),
        ("mode", &a.mode),
        ("preset", &a.preset),
        ("vertices", &a.vertices),
        ("segments", &a.segments),
        ("half_width", &a.half_width),
        ("m", &a.m),
        ("epsilon", &a.epsilon),
        ("epsilon_tilde", &a.epsilon_tilde),
        ("r0", &a.r0),
        ("boundary_offset", &a.boundary_offset),
        ("tol_r", &a.tol_r),
        ("max_sweeps", &a.max_sweeps),
        ("sweep", &a.sweep),
        ("cascadic", &a.cascadic),
        ("out", &a.out),
        ("seed", &a.seed),
    ];
    for (key, value) in overrides {
        if let Some(value) = value {
            cfg.apply(key, value)?;
        }
    }
    Ok(cfg)
}

fn cmd_run(a: &RunArgs) -> Result<bool> {
    let cfg = build_config(a)?;
    let out = match &cfg.out {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from(format!("run-{}-{}d-m{}", cfg.mode.name(), cfg.n, cfg.m)),
    };
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("config.ini"), cfg.to_ini())?;
    match cfg.mode {
        RunMode::Polytope => run_polytope(&cfg, &out),
        RunMode::YGraph => run_y(&cfg, &out),
        RunMode::BarrierCheck => barrier_check(&out, 200, 1e-3, cfg.seed),
        RunMode::LegendreTest => legendre_test(&out, 10_000, cfg.seed),
    }
}

fn pipeline_config(cfg: &RunConfig) -> PipelineConfig {
    PipelineConfig {
        n: cfg.n,
        half_width: cfg.half_width,
        m: cfg.m,
        epsilon: cfg.epsilon,
        boundary_offset: cfg.boundary_offset,
        tol_r: cfg.tol_r,
        max_sweeps: cfg.max_sweeps,
        mode: cfg.sweep,
        cascadic: cfg.cascadic,
    }
}

fn load_polytope(cfg: &RunConfig) -> Result<Polytope> {
    let omega = match (&cfg.preset, &cfg.vertices) {
        (Some(name), None) => geometry::preset(name, cfg.n)?,
        (None, Some(path)) => io::read_polytope(Path::new(path))?,
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give either a preset or a vertex file, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::Config(
                "polytope mode needs a preset or a vertex file".into(),
            ))
        }
    };
    if omega.ambient != cfg.n {
        return Err(Error::Config(format!(
            "polytope lives in dimension {}, config says n = {}",
            omega.ambient, cfg.n
        )));
    }
    Ok(omega)
}

fn finish_run(out: &Path, report: &VerificationReport) -> Result<bool> {
    std::fs::write(out.join("report.json"), report.to_json()?)?;
    print!("{}", report.summary());
    println!("artifacts in {}", out.display());
    Ok(report.all_pass())
}

fn run_polytope(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let omega = load_polytope(cfg)?;
    let result = solver::polytope_pipeline(&omega, &pipeline_config(cfg))?;
    let grid = result.u_star.grid;
    let tol_c = analysis::contact_tol(grid.h(), cfg.tol_r);

    let mut report = VerificationReport::new(out.join("manifest.json").display().to_string());
    let flat_bound = result.params.epsilon.unwrap_or(cfg.epsilon);
    solver_checks(&result, flat_bound, tol_c, &mut report);

    let set = analysis::contact_set(&result.u_star, &result.psi, &omega, tol_c)?;
    report.check_ge("contact_nodes", set.nodes.len() as f64, 1.0);
    let cell = grid.h().powi(grid.dim as i32);
    let min_mass = analysis::dirac_coefficients(&set)
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::INFINITY, f64::min);
    report.check_ge("min_dirac_mass", min_mass, cell);

    // Forbidden strata (levels <= n/2) must stay clear of contact; the
    // distance cap keeps an unconstrained run (all strata permitted)
    // JSON-representable.
    let cap = 2.0 * cfg.half_width * (grid.dim as f64).sqrt();
    let mut clearance = cap;
    for &flat in &set.nodes {
        let p = grid.point(flat);
        let d = analysis::forbidden_stratum_distance(&omega, &p[..grid.dim])?;
        clearance = clearance.min(d.min(cap));
    }
    report.check_ge("forbidden_stratum_clearance", clearance, 2.0 * grid.h());

    // The transform of the solution should vanish on the scaled edge
    // skeleton, the singular support of its measure.
    let delta = result.params.delta.unwrap_or(1.0);
    let skeleton = analysis::polytope_skeleton(&omega, delta);
    let lip = contact_lip(&set.nodes, &grid);
    let max_u = analysis::skeleton_value_max(&result.u_star, &skeleton, 33);
    report.check_le("skeleton_max_abs_u", max_u, 5.0 * grid.h() * lip.max(1e-3));

    if grid.dim == 3 {
        let rim = analysis::contact_rim(&set, &grid);
        let interfaces: Vec<usize> = set
            .meetings
            .iter()
            .flat_map(|m| m.nodes.iter().copied())
            .collect();
        propagation_checks(&result.u_star, &set.mask, &interfaces, &rim, cfg.seed, &mut report)?;
    }

    let contact_col: Vec<f64> = set.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let stratum_col = polytope_stratum_column(&set, &omega, &grid)?;
    write_run_artifacts(out, &result, &contact_col, &stratum_col)?;
    finish_run(out, &report)
}

fn run_y(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let path = cfg
        .segments
        .as_ref()
        .ok_or_else(|| Error::Config("y-graph mode needs a segment file".into()))?;
    let dirs = io::read_segments(Path::new(path), cfg.n)?;
    let ycfg = YPipelineConfig {
        base: pipeline_config(cfg),
        r0: cfg.r0,
        epsilon_tilde: cfg.epsilon_tilde,
        max_retries: 4,
    };
    let tol_r = cfg.tol_r;
    let result = solver::y_pipeline(&dirs, &ycfg, |res| y_run_acceptable(res, &dirs, tol_r));

    let result = result?;
    let grid = result.u_star.grid;
    let tol_c = analysis::contact_tol(grid.h(), cfg.tol_r);
    let delta = result
        .params
        .delta
        .ok_or_else(|| Error::Analysis("run carries no obstacle scale".into()))?;
    let caps = geometry::y_obstacle_affines(&dirs, delta, cfg.r0)?;
    let yset = analysis::y_contact_set(&result.u_star, &result.psi, &caps, tol_c)?;

    let mut report = VerificationReport::new(out.join("manifest.json").display().to_string());
    let flat_bound = result.params.epsilon_tilde.unwrap_or(cfg.epsilon_tilde);
    solver_checks(&result, flat_bound, tol_c, &mut report);

    let cell = grid.h().powi(grid.dim as i32);
    report.check_ge("central_mass", yset.central_volume, cell);
    let min_cap = yset
        .external_volumes
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    report.check_ge("min_endpoint_mass", min_cap, cell);
    let adjacent = (1..=dirs.len()).all(|i| yset.adjacency.contains(&(0, i)));
    report.check_flag("caps_adjacent_to_center", adjacent);

    // The transform restricted to each scaled segment should be affine.
    // The slope scale comes from the obstacle contact, not the far-field
    // anchor shell.
    let skeleton = analysis::star_skeleton(&dirs, delta);
    let mut obstacle_nodes = yset.central.clone();
    obstacle_nodes.extend(yset.external.iter().flatten().copied());
    let lip = contact_lip(&obstacle_nodes, &grid);
    let residual = analysis::affine_residuals(&result.u_star, &skeleton, 33)
        .into_iter()
        .fold(0.0, f64::max);
    report.check_le("segment_affine_residual", residual, 5.0 * grid.h() * lip.max(1e-3));

    if grid.dim == 3 {
        let mut mask = vec![false; grid.len()];
        for &f in &yset.nodes {
            mask[f] = true;
        }
        let rim = analysis::mask_rim(&mask, &grid);
        let interfaces = analysis::y_interface_nodes(&yset, &grid);
        propagation_checks(&result.u_star, &mask, &interfaces, &rim, cfg.seed, &mut report)?;
    }

    let mut contact_col = vec![0.0; grid.len()];
    let mut stratum_col = vec![-1.0; grid.len()];
    for &f in &yset.nodes {
        contact_col[f] = 1.0;
        stratum_col[f] = (caps.len() + 1) as f64;
    }
    for &f in &yset.central {
        stratum_col[f] = 0.0;
    }
    for (i, ext) in yset.external.iter().enumerate() {
        for &f in ext {
            stratum_col[f] = (1 + i) as f64;
        }
    }
    write_run_artifacts(out, &result, &contact_col, &stratum_col)?;
    finish_run(out, &report)
}

/// Retry gate for the star pipeline: the contact set must decompose into
/// a floor piece touching every cap piece, all with positive mass.
fn y_run_acceptable(res: &SolveResult, dirs: &[Vec<f64>], tol_r: f64) -> bool {
    let (Some(delta), Some(r0)) = (res.params.delta, res.params.r0) else {
        return false;
    };
    let Ok(caps) = geometry::y_obstacle_affines(dirs, delta, r0) else {
        return false;
    };
    let tol_c = analysis::contact_tol(res.u_star.grid.h(), tol_r);
    match analysis::y_contact_set(&res.u_star, &res.psi, &caps, tol_c) {
        Ok(y) => {
            y.central_volume > 0.0
                && y.external_volumes.iter().all(|&v| v > 0.0)
                && (1..=dirs.len()).all(|i| y.adjacency.contains(&(0, i)))
        }
        Err(_) => false,
    }
}

/// Checks shared by both run modes: solver invariants against their
/// pinned tolerances. The unit-ball bound is the upper sandwich height
/// actually used by the run, epsilon or epsilon_tilde.
fn solver_checks(result: &SolveResult, flat_bound: f64, tol_c: f64, report: &mut VerificationReport) {
    let h = result.u_star.grid.h();
    let inv = &result.invariants;
    report.check_flag("admissible", inv.admissible);
    report.check_flag("monotone_sweeps", inv.monotone);
    report.check_le("complementarity", inv.complementarity, tol_c);
    report.check_le("upper_sandwich_violation", inv.upper_sandwich_violation, 1e-9);
    report.check_le("lower_sandwich_violation", inv.lower_sandwich_violation, 0.5 * h * h);
    report.check_le("max_u_in_unit_ball", inv.max_u_in_unit_ball, flat_bound);
}

/// Pointwise propagation checks on an n = 3 run: subgradient dimension
/// at sampled contact-boundary points stays below n/2, and tilted
/// sublevel sets obey the volume growth bound.
fn propagation_checks(
    u_star: &ScalarField,
    mask: &[bool],
    interfaces: &[usize],
    rim: &[usize],
    seed: u64,
    report: &mut VerificationReport,
) -> Result<()> {
    let grid = u_star.grid;
    let max_dim = analysis::boundary_subgradient_max(u_star, mask, interfaces, rim, 100, seed)?;
    report.check_le("max_subgradient_dim", max_dim as f64, 1.0);

    // Anchor the cuts at interior rim nodes in the inner half of the box
    // so their sublevel sets stay clear of the wall.
    let anchors: Vec<usize> = rim
        .iter()
        .copied()
        .filter(|&f| {
            let idx = grid.multi(f);
            let p = grid.point(f);
            (0..grid.dim).all(|d| idx[d] >= 2 && idx[d] + 2 < grid.m)
                && p[..grid.dim].iter().all(|v| v.abs() <= 0.5 * grid.half_width)
        })
        .collect();
    let cuts = analysis::graze_cuts(u_star, &anchors, 20, seed);
    report.check_flag(
        "sublevel_volume_bound",
        analysis::sublevel_volume_check(u_star, &cuts)?,
    );
    Ok(())
}

fn contact_lip(nodes: &[usize], grid: &TensorGrid) -> f64 {
    nodes
        .iter()
        .map(|&f| {
            let p = grid.point(f);
            p[..grid.dim].iter().map(|c| c * c).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
}

/// Face id per node: the classified stratum of each contact node's
/// coordinates, -1 off the contact set.
fn polytope_stratum_column(
    set: &analysis::ContactSet,
    omega: &Polytope,
    grid: &TensorGrid,
) -> Result<Vec<f64>> {
    let mut col = vec![-1.0; grid.len()];
    for &flat in &set.nodes {
        let p = grid.point(flat);
        let s = analysis::classify_with_apex(omega, &p[..grid.dim])?;
        col[flat] = s.component_id as f64;
    }
    Ok(col)
}

fn write_run_artifacts(
    out: &Path,
    result: &SolveResult,
    contact: &[f64],
    stratum: &[f64],
) -> Result<()> {
    let grid = result.u_star.grid;
    let dual = legendre::conjugate_window(&result.u_star, &grid)?;
    let columns: [(&str, &[f64]); 5] = [
        ("u_star", &result.u_star.data),
        ("u", &dual.field.data),
        ("psi", &result.psi.data),
        ("contact", contact),
        ("stratum", stratum),
    ];
    io::write_fields_csv(&out.join("fields.csv"), &grid, &columns)?;
    if grid.dim == 3 {
        io::write_vtk(&out.join("fields.vtk"), &grid, &columns)?;
    }
    io::write_manifest(&out.join("manifest.json"), result)?;
    Ok(())
}

fn barrier_kind_name(kind: barriers::BarrierKind) -> String {
    match kind {
        barriers::BarrierKind::Radial { n } => format!("radial{n}"),
        barriers::BarrierKind::Split { n, k } => format!("split{n}{k}"),
    }
}

fn barrier_check(out: &Path, samples: usize, rel_h: f64, seed: u64) -> Result<bool> {
    use barriers::BarrierKind;
    let kinds = [
        BarrierKind::Radial { n: 2 },
        BarrierKind::Radial { n: 3 },
        BarrierKind::Radial { n: 4 },
        BarrierKind::Split { n: 3, k: 1 },
        BarrierKind::Split { n: 4, k: 1 },
    ];
    let mut report = VerificationReport::new("barrier-check");
    for kind in kinds {
        let name = barrier_kind_name(kind);
        let points = barriers::sample_points(kind, samples, seed);
        let rows = barriers::determinant_check(kind, &points, rel_h)?;
        let mut csv = String::new();
        let coords: Vec<String> = (1..=kind.dim()).map(|d| format!("x{d}")).collect();
        csv.push_str(&format!("{},analytic_det,fd_det,rel_err\n", coords.join(",")));
        let mut max_err = 0.0f64;
        for s in &rows {
            for c in &s.point {
                csv.push_str(&format!("{c:?},"));
            }
            csv.push_str(&format!("{:?},{:?},{:?}\n", s.exact, s.fd, s.rel_err));
            max_err = max_err.max(s.rel_err);
        }
        std::fs::write(out.join(format!("barrier-{name}.csv")), csv)?;
        report.check_le(&format!("max_rel_err_{name}"), max_err, 0.02);
    }
    finish_run(out, &report)
}

fn legendre_test(out: &Path, samples: usize, seed: u64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerificationReport::new("legendre-test");

    // Fast separable transform against the all-pairs scan, on 33-per-axis
    // grids. The dual grid shrinks with dimension to keep the scan cheap.
    for n in 1..=3usize {
        let grid = TensorGrid::new(n, 1.0, 33)?;
        let mut u = ScalarField::from_fn(grid, |x| {
            0.5 * x.iter().map(|c| c * c).sum::<f64>()
        });
        for v in u.data.iter_mut() {
            *v += 0.05 * rng.gen::<f64>();
        }
        let m_dual = [33, 33, 13][n - 1];
        let dual = legendre::default_dual_grid(&u, m_dual)?;
        let fast = legendre::conjugate_on(&u, &dual)?;
        let brute = legendre::brute_conjugate(&u, &dual);
        let diff = fast
            .field
            .data
            .iter()
            .zip(&brute.data)
            .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
            .fold(0.0, f64::max);
        report.check_le(&format!("brute_vs_fast_{n}d"), diff, 1e-13);
    }

    // Transform identities on a convex 2d field: the biconjugate stays
    // below the field, conjugating it changes nothing, and random
    // primal/dual pairs satisfy the Fenchel-Young inequality.
    let grid = TensorGrid::new(2, 1.0, 33)?;
    let u = ScalarField::from_fn(grid, |x| {
        0.5 * (x[0] * x[0] + 2.0 * x[1] * x[1]) + 0.3 * x[0].abs()
    });
    let conj = legendre::conjugate(&u, 65)?;
    let double = legendre::conjugate_window(&conj.field, &grid)?;
    let above = double
        .field
        .data
        .iter()
        .zip(&u.data)
        .map(|(b, v)| b - v)
        .fold(f64::NEG_INFINITY, f64::max);
    report.check_le("biconjugate_excess", above, 1e-12);
    let triple = legendre::conjugate_window(&double.field, &conj.field.grid)?;
    let tri_diff = triple
        .field
        .data
        .iter()
        .zip(&conj.field.data)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    report.check_le("triconjugate_drift", tri_diff, 1e-12);

    let dual_grid = conj.field.grid;
    let mut min_gap = f64::INFINITY;
    for _ in 0..samples {
        let i = rng.gen_range(0..grid.len());
        let j = rng.gen_range(0..dual_grid.len());
        let x = grid.point(i);
        let y = dual_grid.point(j);
        let pairing: f64 = x[..2].iter().zip(&y[..2]).map(|(a, b)| a * b).sum();
        min_gap = min_gap.min(u.data[i] + conj.field.data[j] - pairing);
    }
    report.check_ge("fenchel_young_min_gap", min_gap, -1e-12);

    finish_run(out, &report)
}

fn cmd_export(a: &ExportArgs) -> Result<()> {
    let grid = io::manifest_grid(&a.run.join("manifest.json"))?;
    let (names, cols) = io::read_fields_csv(&a.run.join("fields.csv"))?;
    if names.len() <= grid.dim {
        return Err(Error::Config("CSV holds no field columns".into()));
    }
    for (name, col) in names.iter().zip(&cols) {
        if col.len() != grid.len() {
            return Err(Error::Config(format!(
                "column '{name}' has {} rows for {} grid nodes",
                col.len(),
                grid.len()
            )));
        }
    }
    let fields: Vec<(&str, &[f64])> = names
        .iter()
        .zip(&cols)
        .skip(grid.dim)
        .map(|(n, c)| (n.as_str(), c.as_slice()))
        .collect();
    let target = a
        .out
        .clone()
        .unwrap_or_else(|| a.run.join("fields.vtk"));
    io::write_vtk(&target, &grid, &fields)?;
    println!("wrote {}", target.display());
    Ok(())
}
