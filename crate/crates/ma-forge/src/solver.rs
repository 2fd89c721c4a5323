//! Obstacle-problem solver: projected nonlinear sweeps driving the frame
//! operator to the prescribed density above a convex obstacle, plus the two
//! construction pipelines that feed it.
//!
//! The iteration starts from a supersolution and only ever moves node
//! values down, clamped at the obstacle:
//!
//!   u(node) <- max(psi, min(u(node), local_solve(u, node)))
//!
//! where local_solve returns the center value at which the frame-minimum
//! operator equals the density. Each frame's product of clipped second
//! differences is strictly decreasing in the center value, so the frame
//! minimum equals the density exactly when the center sits at the SMALLEST
//! of the per-frame roots: there the binding frame is at the density and
//! every other frame is above it. Monotone descent from a supersolution
//! then converges to the projected fixed point without overshoot.
//!
//! A node collar of the catalog margin is frozen at the boundary data, so
//! every updated node has all frame stencils in the box.

use crate::barriers;
use crate::geometry::{self, Polytope};
use crate::grid::{catalog_margin, ScalarField, TensorGrid};
use crate::ma_op::{self, MAConfig};
use crate::{worker_threads, Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// In-place lexicographic sweeps; fastest sequential option.
    GaussSeidel,
    /// Two-buffer sweeps; order-independent, bit-deterministic under any
    /// thread count.
    Jacobi,
}

impl SweepMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gauss-seidel" | "gs" => Ok(Self::GaussSeidel),
            "jacobi" => Ok(Self::Jacobi),
            other => Err(Error::Config(format!(
                "unknown sweep mode '{other}' (expected gauss-seidel or jacobi)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::GaussSeidel => "gauss-seidel",
            Self::Jacobi => "jacobi",
        }
    }
}

/// One discrete obstacle problem, fully assembled on a grid.
#[derive(Debug, Clone)]
pub struct ObstacleProblem {
    pub psi: ScalarField,
    /// Values imposed on the frozen collar.
    pub boundary: ScalarField,
    /// Supersolution start; clamped to >= psi before sweeping.
    pub init: ScalarField,
    /// Lower comparison function for the sandwich report (the pipelines'
    /// phi); equals boundary data on the collar.
    pub lower: ScalarField,
    /// Upper comparison function (the initialization's analytic form).
    pub upper: ScalarField,
    /// Right-hand density; 1 for the construction pipelines, 0 recovers
    /// the convex-envelope relaxation.
    pub density: f64,
    pub collar: usize,
    pub tol_r: f64,
    pub max_sweeps: usize,
    pub mode: SweepMode,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunParams {
    pub n: usize,
    pub m: usize,
    pub half_width: f64,
    pub h: f64,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub epsilon_tilde: Option<f64>,
    pub r0: Option<f64>,
    pub boundary_offset: Option<f64>,
    pub density: f64,
    pub tol_r: f64,
    pub mode: String,
    pub cascadic: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    /// u >= psi at every node, exactly.
    pub admissible: bool,
    /// max over interior nodes of |min(u - psi, density - ma_h(u))|.
    pub complementarity: f64,
    /// max(phi - u) over all nodes.
    pub lower_sandwich_violation: f64,
    /// max(u - upper) over all nodes.
    pub upper_sandwich_violation: f64,
    /// Every sweep moved values down (within rounding).
    pub monotone: bool,
    /// max of u over nodes with |x| <= 1.
    pub max_u_in_unit_ball: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u_star: ScalarField,
    pub psi: ScalarField,
    pub lower: ScalarField,
    pub upper: ScalarField,
    pub sweeps: usize,
    pub final_update: f64,
    pub residual_history: Vec<f64>,
    pub params: RunParams,
    pub invariants: InvariantReport,
}

/// Per-frame stencil data shared by every node of a grid.
struct FramePlan {
    offsets: [i64; 4],
    weights: [f64; 4],
    k: usize,
}

fn frame_plans(grid: &TensorGrid, cfg: &MAConfig) -> Vec<FramePlan> {
    let span = grid.h() * cfg.step as f64;
    cfg.frames
        .iter()
        .map(|frame| {
            let mut plan = FramePlan {
                offsets: [0; 4],
                weights: [1.0; 4],
                k: frame.dirs.len(),
            };
            for (j, dir) in frame.dirs.iter().enumerate() {
                plan.offsets[j] = grid.offset(*dir) * cfg.step as i64;
                let len2: i64 = dir.iter().map(|a| a * a).sum();
                plan.weights[j] = span * span * len2 as f64;
            }
            plan
        })
        .collect()
}

fn kth_root(x: f64, k: usize) -> f64 {
    match k {
        1 => x,
        2 => x.sqrt(),
        3 => x.cbrt(),
        _ => x.sqrt().sqrt(),
    }
}

/// Root of prod_j (sums_j - 2c) / wts_j = density, the unique solution with
/// every factor positive. The product is convex and decreasing there, so
/// Newton started anywhere in the region lands on the nonnegative side of
/// the residual after one step and then descends monotonically; no bracket
/// is needed.
fn newton_root(sums: &[f64], wts: &[f64], density: f64, start: f64) -> f64 {
    let hi = 0.5 * sums.iter().cloned().fold(f64::INFINITY, f64::min);
    let wmin = wts.iter().cloned().fold(f64::INFINITY, f64::min);
    let inset = 0.25 * wmin * kth_root(density, sums.len());
    let mut c = start.min(hi - inset);
    for _ in 0..80 {
        let mut p = 1.0;
        let mut recip = 0.0;
        for (s, w) in sums.iter().zip(wts) {
            let t = s - 2.0 * c;
            p *= t / w;
            recip += 1.0 / t;
        }
        let step = (p - density) / (2.0 * p * recip);
        c += step;
        if step.abs() <= 1e-15 * (1.0 + c.abs()) {
            break;
        }
    }
    c
}

/// Projected update at a node: `max(psi, min(old, min over frame roots))`.
/// Frames whose product at the running candidate already meets the density
/// cannot bind and are skipped; once the candidate reaches the obstacle the
/// clamp decides and the remaining frames are moot.
fn update_value(
    data: &[f64],
    flat: usize,
    plans: &[FramePlan],
    density: f64,
    psi_val: f64,
    old: f64,
) -> f64 {
    let mut best = old;
    let mut sums = [0.0f64; 4];
    for plan in plans {
        if best <= psi_val {
            return psi_val;
        }
        let k = plan.k;
        for j in 0..k {
            let off = plan.offsets[j];
            sums[j] =
                data[(flat as i64 + off) as usize] + data[(flat as i64 - off) as usize];
        }
        if density <= 0.0 {
            for &s in &sums[..k] {
                best = best.min(0.5 * s);
            }
            continue;
        }
        let mut p = 1.0;
        let mut in_region = true;
        for j in 0..k {
            let t = sums[j] - 2.0 * best;
            if t <= 0.0 {
                in_region = false;
                break;
            }
            p *= t / plan.weights[j];
        }
        if in_region && p >= density {
            continue;
        }
        best = newton_root(&sums[..k], &plan.weights[..k], density, best);
    }
    psi_val.max(best)
}

/// Center value at which the frame-minimum operator equals `density`,
/// holding all neighbors fixed.
pub fn local_solve(f: &ScalarField, flat: usize, cfg: &MAConfig, density: f64) -> Result<f64> {
    let idx = f.grid.multi(flat);
    for frame in &cfg.frames {
        for dir in &frame.dirs {
            if !ma_op::stencil_fits(f, idx, dir, cfg.step) {
                return Err(Error::Operator(format!(
                    "local_solve stencil of frame '{}' exits the grid at node {flat}",
                    frame.label
                )));
            }
        }
    }
    if !density.is_finite() || density < 0.0 {
        return Err(Error::Operator(format!("invalid density {density}")));
    }
    let plans = frame_plans(&f.grid, cfg);
    let mut best = f64::INFINITY;
    let mut sums = [0.0f64; 4];
    for plan in &plans {
        let k = plan.k;
        for j in 0..k {
            let off = plan.offsets[j];
            sums[j] =
                f.data[(flat as i64 + off) as usize] + f.data[(flat as i64 - off) as usize];
        }
        let root = if density <= 0.0 {
            0.5 * sums[..k].iter().cloned().fold(f64::INFINITY, f64::min)
        } else {
            newton_root(&sums[..k], &plan.weights[..k], density, f64::INFINITY)
        };
        best = best.min(root);
    }
    Ok(best)
}

fn interior_nodes(grid: &TensorGrid, collar: usize) -> Vec<usize> {
    (0..grid.len())
        .filter(|&flat| grid.is_interior(grid.multi(flat), collar))
        .collect()
}

/// One projected sweep; returns (max update, stayed monotone).
fn sweep(
    u: &mut ScalarField,
    psi: &ScalarField,
    interior: &[usize],
    plans: &[FramePlan],
    density: f64,
    mode: SweepMode,
    scratch: &mut Vec<f64>,
) -> (f64, bool) {
    let mut max_update = 0.0f64;
    let mut monotone = true;
    match mode {
        SweepMode::GaussSeidel => {
            for &flat in interior {
                let old = u.data[flat];
                let new = update_value(&u.data, flat, plans, density, psi.data[flat], old);
                if new > old {
                    monotone = false;
                }
                max_update = max_update.max((old - new).abs());
                u.data[flat] = new;
            }
        }
        SweepMode::Jacobi => {
            scratch.resize(interior.len(), 0.0);
            let threads = worker_threads().max(1);
            if threads <= 1 || interior.len() < 4096 {
                for (out, &flat) in scratch.iter_mut().zip(interior) {
                    *out =
                        update_value(&u.data, flat, plans, density, psi.data[flat], u.data[flat]);
                }
            } else {
                let chunk = interior.len().div_ceil(threads);
                let data: &[f64] = &u.data;
                std::thread::scope(|s| {
                    for (outs, flats) in scratch.chunks_mut(chunk).zip(interior.chunks(chunk)) {
                        s.spawn(move || {
                            for (out, &flat) in outs.iter_mut().zip(flats) {
                                *out = update_value(
                                    data,
                                    flat,
                                    plans,
                                    density,
                                    psi.data[flat],
                                    data[flat],
                                );
                            }
                        });
                    }
                });
            }
            for (i, &flat) in interior.iter().enumerate() {
                let old = u.data[flat];
                let new = scratch[i];
                if new > old {
                    monotone = false;
                }
                max_update = max_update.max((old - new).abs());
                u.data[flat] = new;
            }
        }
    }
    (max_update, monotone)
}

/// Sweep to convergence and report the solved field with its invariants.
pub fn solve_obstacle(prob: &ObstacleProblem) -> Result<SolveResult> {
    let grid = prob.psi.grid;
    for (name, f) in [
        ("boundary", &prob.boundary),
        ("init", &prob.init),
        ("lower", &prob.lower),
        ("upper", &prob.upper),
    ] {
        if f.grid != grid {
            return Err(Error::Config(format!("{name} field lives on a different grid")));
        }
    }
    let margin = catalog_margin(grid.dim);
    if prob.collar < margin {
        return Err(Error::Config(format!(
            "collar {} is thinner than the frame catalog margin {margin}",
            prob.collar
        )));
    }
    if !(prob.tol_r > 0.0) {
        return Err(Error::Config("tol_r must be positive".into()));
    }

    let mut u = prob.init.clone();
    for flat in 0..grid.len() {
        if !grid.is_interior(grid.multi(flat), prob.collar) {
            if prob.boundary.data[flat] < prob.psi.data[flat] {
                return Err(Error::Config(format!(
                    "boundary data below the obstacle at collar node {flat}"
                )));
            }
            u.data[flat] = prob.boundary.data[flat];
        } else {
            u.data[flat] = u.data[flat].max(prob.psi.data[flat]);
        }
    }

    let interior = interior_nodes(&grid, prob.collar);
    let cfg = MAConfig::for_dim(grid.dim);
    let plans = frame_plans(&grid, &cfg);
    let mut history = Vec::new();
    let mut monotone = true;
    let mut scratch = Vec::new();
    let mut converged = false;
    while history.len() < prob.max_sweeps {
        let (update, mono) = sweep(
            &mut u,
            &prob.psi,
            &interior,
            &plans,
            prob.density,
            prob.mode,
            &mut scratch,
        );
        monotone &= mono;
        history.push(update);
        if update < prob.tol_r {
            converged = true;
            break;
        }
    }
    let final_update = history.last().copied().unwrap_or(0.0);
    if !converged {
        return Err(Error::NonConvergence {
            residual: final_update,
            sweeps: history.len(),
            tol: prob.tol_r,
        });
    }

    let invariants = check_invariants(&u, prob, &interior, &cfg, monotone);
    let sweeps = history.len();
    Ok(SolveResult {
        u_star: u,
        psi: prob.psi.clone(),
        lower: prob.lower.clone(),
        upper: prob.upper.clone(),
        sweeps,
        final_update,
        residual_history: history,
        params: RunParams {
            n: grid.dim,
            m: grid.m,
            half_width: grid.half_width,
            h: grid.h(),
            delta: None,
            epsilon: None,
            epsilon_tilde: None,
            r0: None,
            boundary_offset: None,
            density: prob.density,
            tol_r: prob.tol_r,
            mode: prob.mode.name().to_string(),
            cascadic: false,
        },
        invariants,
    })
}

fn check_invariants(
    u: &ScalarField,
    prob: &ObstacleProblem,
    interior: &[usize],
    cfg: &MAConfig,
    monotone: bool,
) -> InvariantReport {
    let grid = &u.grid;
    let admissible = u.data.iter().zip(&prob.psi.data).all(|(a, b)| a >= b);
    let mut complementarity = 0.0f64;
    for &flat in interior {
        let ma = ma_op::ma_h(u, flat, cfg).expect("interior stencil fits");
        let gap = u.data[flat] - prob.psi.data[flat];
        complementarity = complementarity.max((gap.min(prob.density - ma)).abs());
    }
    let mut lower_viol = 0.0f64;
    let mut upper_viol = 0.0f64;
    let mut b1 = f64::NEG_INFINITY;
    for flat in 0..grid.len() {
        lower_viol = lower_viol.max(prob.lower.data[flat] - u.data[flat]);
        upper_viol = upper_viol.max(u.data[flat] - prob.upper.data[flat]);
        let p = grid.point(flat);
        let r2: f64 = p[..grid.dim].iter().map(|c| c * c).sum();
        if r2 <= 1.0 + 1e-12 {
            b1 = b1.max(u.data[flat]);
        }
    }
    InvariantReport {
        admissible,
        complementarity,
        lower_sandwich_violation: lower_viol,
        upper_sandwich_violation: upper_viol,
        monotone,
        max_u_in_unit_ball: b1,
    }
}

/// Pipeline knobs shared by the polytope and star constructions.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub n: usize,
    pub half_width: f64,
    pub m: usize,
    pub epsilon: f64,
    /// Added to the radial barrier on the boundary collar; 0 keeps the
    /// collar on the barrier itself, negative values push the contact set
    /// outward.
    pub boundary_offset: f64,
    pub tol_r: f64,
    pub max_sweeps: usize,
    pub mode: SweepMode,
    pub cascadic: bool,
}

impl PipelineConfig {
    pub fn defaults(n: usize) -> Self {
        Self {
            n,
            half_width: 4.0,
            m: match n {
                1 => 257,
                2 => 129,
                3 => 65,
                _ => 33,
            },
            epsilon: 0.1,
            boundary_offset: 0.0,
            tol_r: 1e-7,
            max_sweeps: 200_000,
            mode: SweepMode::GaussSeidel,
            cascadic: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct YPipelineConfig {
    pub base: PipelineConfig,
    /// Clearance of the obstacle segments from the unit sphere.
    pub r0: f64,
    pub epsilon_tilde: f64,
    pub max_retries: usize,
}

impl YPipelineConfig {
    pub fn defaults(n: usize) -> Self {
        let base = PipelineConfig::defaults(n);
        Self {
            r0: 0.1,
            epsilon_tilde: 1.5 * base.epsilon,
            max_retries: 4,
            base,
        }
    }
}

/// Coarse-to-fine node counts ending at `m`, halving the resolution while
/// at least 17 nodes remain.
fn ladder(m: usize) -> Vec<usize> {
    let mut v = vec![m];
    let mut cur = m;
    while (cur - 1) % 2 == 0 && (cur - 1) / 2 + 1 >= 17 {
        cur = (cur - 1) / 2 + 1;
        v.push(cur);
    }
    v.reverse();
    v
}

struct LevelSolve {
    result: SolveResult,
    total_sweeps: usize,
}

/// Solve the same problem family over the ladder of grids, prolonging each
/// level's solution as the next initialization.
fn cascadic_solve(
    cfg: &PipelineConfig,
    build: &dyn Fn(TensorGrid) -> Result<ObstacleProblem>,
) -> Result<LevelSolve> {
    let levels = if cfg.cascadic { ladder(cfg.m) } else { vec![cfg.m] };
    let mut carried: Option<ScalarField> = None;
    let mut total = 0usize;
    let mut last: Option<SolveResult> = None;
    for (li, &m) in levels.iter().enumerate() {
        let grid = TensorGrid::new(cfg.n, cfg.half_width, m)?;
        let mut prob = build(grid)?;
        prob.tol_r = cfg.tol_r * 4.0f64.powi((levels.len() - 1 - li) as i32);
        if let Some(coarse) = carried.take() {
            let mut fine = coarse.prolonged();
            debug_assert_eq!(fine.grid, grid);
            // The monotone iteration converges to the discrete solution
            // exactly when started anywhere above it, so lift the carried
            // field by the coarse scheme-error scale to restore domination,
            // then clamp into the admissible band.
            let lift = 4.0 * grid.h() * grid.h();
            for (v, (lo, hi)) in fine
                .data
                .iter_mut()
                .zip(prob.psi.data.iter().zip(&prob.upper.data))
            {
                *v = (*v + lift).max(*lo).min(*hi);
            }
            prob.init = fine;
        }
        let result = solve_obstacle(&prob)?;
        total += result.sweeps;
        carried = Some(result.u_star.clone());
        last = Some(result);
    }
    Ok(LevelSolve {
        result: last.expect("at least one level"),
        total_sweeps: total,
    })
}

/// Obstacle run for a polytope: obstacle delta * support function, barrier
/// boundary data, barrier + epsilon start.
pub fn polytope_pipeline(omega: &Polytope, cfg: &PipelineConfig) -> Result<SolveResult> {
    if cfg.n != omega.ambient {
        return Err(Error::Config(format!(
            "pipeline dimension {} does not match the polytope's ambient {}",
            cfg.n, omega.ambient
        )));
    }
    if !(cfg.boundary_offset <= cfg.epsilon) {
        return Err(Error::Config(format!(
            "boundary offset {} must not exceed epsilon {}",
            cfg.boundary_offset, cfg.epsilon
        )));
    }

    // Scale factor for the obstacle, from the finest grid: the largest
    // delta keeping delta * support strictly under barrier + epsilon, with
    // a 0.9 safety factor. A single-point polytope has zero support and
    // puts no constraint on it.
    let fine = TensorGrid::new(cfg.n, cfg.half_width, cfg.m)?;
    let w_fine = barriers::radial_field(fine, cfg.n);
    let mut ratio = f64::INFINITY;
    for flat in 0..fine.len() {
        let p = fine.point(flat);
        let s = omega.support_value(&p[..cfg.n]);
        if s > 1e-12 {
            ratio = ratio.min((w_fine.data[flat] + cfg.epsilon) / s);
        }
    }
    let delta = if ratio.is_finite() { 0.9 * ratio } else { 1.0 };
    if !(delta > 0.0) {
        return Err(Error::Config(format!(
            "obstacle scale collapsed: delta = {delta} (epsilon too small for this grid)"
        )));
    }

    let solved = cascadic_solve(cfg, &|grid| {
        let w = if grid == fine {
            w_fine.clone()
        } else {
            barriers::radial_field(grid, cfg.n)
        };
        let psi = ScalarField {
            grid,
            data: (0..grid.len())
                .map(|flat| {
                    let p = grid.point(flat);
                    delta * omega.support_value(&p[..cfg.n])
                })
                .collect(),
        };
        let lower = ScalarField {
            grid,
            data: w.data.iter().map(|v| v + cfg.boundary_offset).collect(),
        };
        let upper = ScalarField {
            grid,
            data: w.data.iter().map(|v| v + cfg.epsilon).collect(),
        };
        let init = upper.clone();
        Ok(ObstacleProblem {
            psi,
            boundary: lower.clone(),
            init,
            lower,
            upper,
            density: 1.0,
            collar: catalog_margin(grid.dim),
            tol_r: cfg.tol_r,
            max_sweeps: cfg.max_sweeps,
            mode: cfg.mode,
        })
    })?;

    let mut result = solved.result;
    result.sweeps = solved.total_sweeps;
    result.params.delta = Some(delta);
    result.params.epsilon = Some(cfg.epsilon);
    result.params.boundary_offset = Some(cfg.boundary_offset);
    result.params.cascadic = cfg.cascadic;
    Ok(result)
}

/// Obstacle run for a star of segments: obstacle and boundary data both
/// equal max(barrier - epsilon, 0, affine caps); on verification failure
/// the margins are halved and the run retried.
pub fn y_pipeline(
    directions: &[Vec<f64>],
    cfg: &YPipelineConfig,
    mut verify: impl FnMut(&SolveResult) -> bool,
) -> Result<SolveResult> {
    if directions.iter().any(|d| d.len() != cfg.base.n) {
        return Err(Error::Config("segment dimensions do not match n".into()));
    }
    if !(cfg.epsilon_tilde >= cfg.base.epsilon) {
        return Err(Error::Config(format!(
            "epsilon_tilde {} must be at least epsilon {}",
            cfg.epsilon_tilde, cfg.base.epsilon
        )));
    }

    let fine = TensorGrid::new(cfg.base.n, cfg.base.half_width, cfg.base.m)?;
    let w_fine = barriers::radial_field(fine, cfg.base.n);
    let norms: Vec<f64> = directions
        .iter()
        .map(|g| g.iter().map(|c| c * c).sum::<f64>().sqrt())
        .collect();

    let mut epsilon = cfg.base.epsilon;
    let mut epsilon_tilde = cfg.epsilon_tilde;
    let mut last_err: Option<Error> = None;
    for _attempt in 0..=cfg.max_retries {
        // Largest delta keeping every cap strictly under barrier + epsilon.
        let mut ratio = f64::INFINITY;
        for flat in 0..fine.len() {
            let p = fine.point(flat);
            for (gdir, norm) in directions.iter().zip(&norms) {
                let lam: f64 = gdir
                    .iter()
                    .zip(&p[..cfg.base.n])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    - norm * (1.0 - cfg.r0);
                if lam > 1e-12 {
                    ratio = ratio.min((w_fine.data[flat] + epsilon) / lam);
                }
            }
        }
        if !ratio.is_finite() {
            return Err(Error::Config(
                "no grid node sees a positive cap; segments too short for this box".into(),
            ));
        }
        let delta = 0.9 * ratio;
        let affines = geometry::y_obstacle_affines(directions, delta, cfg.r0)?;

        let attempt = cascadic_solve(&with_eps(&cfg.base, epsilon), &|grid| {
            let w = if grid == fine {
                w_fine.clone()
            } else {
                barriers::radial_field(grid, cfg.base.n)
            };
            let mut phi_data = Vec::with_capacity(grid.len());
            for flat in 0..grid.len() {
                let p = grid.point(flat);
                let caps = affines
                    .iter()
                    .map(|a| a.eval(&p[..grid.dim]))
                    .fold(f64::NEG_INFINITY, f64::max);
                phi_data.push((w.data[flat] - epsilon).max(0.0).max(caps));
            }
            let phi = ScalarField {
                grid,
                data: phi_data,
            };
            check_cap_sets_disjoint(&phi, &affines, &grid)?;
            let upper = ScalarField {
                grid,
                data: w.data.iter().map(|v| v + epsilon_tilde).collect(),
            };
            Ok(ObstacleProblem {
                psi: phi.clone(),
                boundary: phi.clone(),
                init: upper.clone(),
                lower: phi,
                upper,
                density: 1.0,
                collar: catalog_margin(grid.dim),
                tol_r: cfg.base.tol_r,
                max_sweeps: cfg.base.max_sweeps,
                mode: cfg.base.mode,
            })
        });

        match attempt {
            Ok(solved) => {
                let mut result = solved.result;
                result.sweeps = solved.total_sweeps;
                result.params.delta = Some(delta);
                result.params.epsilon = Some(epsilon);
                result.params.epsilon_tilde = Some(epsilon_tilde);
                result.params.r0 = Some(cfg.r0);
                result.params.cascadic = cfg.base.cascadic;
                if verify(&result) {
                    return Ok(result);
                }
                last_err = Some(Error::Analysis(format!(
                    "contact verification rejected the run at epsilon = {epsilon}"
                )));
            }
            Err(e) => last_err = Some(e),
        }
        epsilon *= 0.5;
        epsilon_tilde *= 0.5;
    }
    Err(last_err.unwrap_or_else(|| Error::Analysis("star pipeline produced no run".into())))
}

fn with_eps(base: &PipelineConfig, epsilon: f64) -> PipelineConfig {
    PipelineConfig {
        epsilon,
        ..base.clone()
    }
}

/// The obstacle's affine caps must win on pairwise disjoint node sets;
/// a node where two caps tie at the top marks overlapping caps.
fn check_cap_sets_disjoint(
    phi: &ScalarField,
    affines: &[geometry::Affine],
    grid: &TensorGrid,
) -> Result<()> {
    let slack = 1e-10;
    for flat in 0..grid.len() {
        let p = grid.point(flat);
        let mut top = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        for a in affines {
            let v = a.eval(&p[..grid.dim]);
            if v > top {
                second = top;
                top = v;
            } else if v > second {
                second = v;
            }
        }
        if top >= phi.data[flat] - slack && second >= top - slack && second > 0.0 {
            return Err(Error::Geometry(format!(
                "cap equality sets overlap at node {flat}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::MAX_DIM;

    #[test]
    fn local_solve_matches_the_1d_formula() {
        let grid = TensorGrid::new(1, 1.0, 9).unwrap();
        let h = grid.h();
        let mut f = ScalarField::constant(grid, 0.0);
        for (i, v) in f.data.iter_mut().enumerate() {
            *v = 0.3 * i as f64 + 0.1 * (i as f64).sin();
        }
        let cfg = MAConfig::for_dim(1);
        let c = local_solve(&f, 4, &cfg, 1.0).unwrap();
        let expect = 0.5 * (f.data[3] + f.data[5] - h * h);
        assert!((c - expect).abs() < 1e-12);
    }

    #[test]
    fn local_solve_is_exact_on_the_isotropic_quadratic() {
        for dim in 1..=3usize {
            let grid = TensorGrid::new(dim, 1.0, 17).unwrap();
            let f = ScalarField::from_fn(grid, |x| 0.5 * x.iter().map(|c| c * c).sum::<f64>());
            let cfg = MAConfig::for_dim(dim);
            let center = grid.len() / 2;
            let c = local_solve(&f, center, &cfg, 1.0).unwrap();
            assert!(
                (c - f.data[center]).abs() < 1e-12,
                "dim {dim}: {c} vs {}",
                f.data[center]
            );
        }
    }

    #[test]
    fn local_solve_rejects_boundary_nodes() {
        let grid = TensorGrid::new(2, 1.0, 9).unwrap();
        let f = ScalarField::constant(grid, 0.0);
        assert!(local_solve(&f, 0, &MAConfig::for_dim(2), 1.0).is_err());
    }

    fn affine_problem(density: f64, obstacle_drop: f64) -> ObstacleProblem {
        let grid = TensorGrid::new(2, 1.0, 17).unwrap();
        let l = ScalarField::from_fn(grid, |x| 0.4 * x[0] - 0.2 * x[1] + 1.0);
        let psi = ScalarField {
            grid,
            data: l.data.iter().map(|v| v - obstacle_drop).collect(),
        };
        let init = ScalarField {
            grid,
            data: l.data.iter().map(|v| v + 0.5).collect(),
        };
        ObstacleProblem {
            psi: psi.clone(),
            boundary: l.clone(),
            init: init.clone(),
            lower: psi,
            upper: init,
            density,
            collar: 2,
            tol_r: 1e-10,
            max_sweeps: 20_000,
            mode: SweepMode::GaussSeidel,
        }
    }

    #[test]
    fn zero_density_recovers_the_affine_envelope() {
        // Obstacle equal to the data's convex envelope: contact everywhere.
        let touching = solve_obstacle(&affine_problem(0.0, 0.0)).unwrap();
        let expect = &touching.psi;
        assert!(touching.u_star.linf_distance(expect) < 1e-9);
        assert!(touching.invariants.admissible);
        // Obstacle strictly below: the envelope detaches but stays affine.
        let detached = solve_obstacle(&affine_problem(0.0, 0.3)).unwrap();
        let gap: f64 = detached
            .u_star
            .data
            .iter()
            .zip(&detached.psi.data)
            .map(|(u, p)| u - p)
            .fold(f64::INFINITY, f64::min);
        assert!(gap > 0.25, "envelope should stay clear of the obstacle");
        assert!(detached.invariants.complementarity < 1e-8);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let mut prob = affine_problem(1.0, 0.0);
        prob.max_sweeps = 2;
        match solve_obstacle(&prob) {
            Err(Error::NonConvergence { sweeps, .. }) => assert_eq!(sweeps, 2),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn boundary_below_obstacle_is_rejected() {
        let mut prob = affine_problem(1.0, 0.0);
        for v in prob.psi.data.iter_mut() {
            *v += 1.0;
        }
        assert!(matches!(solve_obstacle(&prob), Err(Error::Config(_))));
    }

    #[test]
    fn point_pipeline_recovers_the_radial_barrier_in_2d() {
        let omega = geometry::preset("point", 2).unwrap();
        let mut cfg = PipelineConfig::defaults(2);
        cfg.m = 33;
        let res = polytope_pipeline(&omega, &cfg).unwrap();
        assert!(res.invariants.admissible);
        assert!(res.invariants.monotone);
        assert!(res.invariants.complementarity < 1e-3);
        // The lower comparison function is a continuum inequality; the
        // discrete solution sits within scheme error of it.
        let h2 = res.u_star.grid.h() * res.u_star.grid.h();
        assert!(res.invariants.lower_sandwich_violation < 0.5 * h2);
        assert!(res.invariants.upper_sandwich_violation < 1e-9);

        // Against the analytic radial profile on the middle of the box.
        let grid = res.u_star.grid;
        let mut worst = 0.0f64;
        for flat in 0..grid.len() {
            let p = grid.point(flat);
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if r <= 2.0 {
                worst = worst.max((res.u_star.data[flat] - barriers::radial_profile(2, r)).abs());
            }
        }
        assert!(worst < 0.05, "profile deviation {worst}");

        // The obstacle is 0 here, so projected contact nodes are exact
        // zeros; they should fill the unit disk and nothing much more.
        let h = grid.h();
        let mut rmax = 0.0f64;
        let mut rmin_missing = f64::INFINITY;
        for flat in 0..grid.len() {
            let p = grid.point(flat);
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if res.u_star.data[flat] == 0.0 {
                rmax = rmax.max(r);
            } else {
                rmin_missing = rmin_missing.min(r);
            }
        }
        assert!(rmax < 1.0 + 3.0 * h, "contact sticks out to {rmax}");
        assert!(rmin_missing > 1.0 - 3.0 * h, "hole inside the disk at {rmin_missing}");
    }

    #[test]
    fn jacobi_runs_are_bit_identical_and_symmetric() {
        let omega = geometry::preset("point", 2).unwrap();
        let mut cfg = PipelineConfig::defaults(2);
        cfg.m = 17;
        cfg.mode = SweepMode::Jacobi;
        cfg.cascadic = false;
        let a = polytope_pipeline(&omega, &cfg).unwrap();
        let b = polytope_pipeline(&omega, &cfg).unwrap();
        assert_eq!(a.u_star.data, b.u_star.data);
        assert_eq!(a.sweeps, b.sweeps);
        // Antipodal symmetry is exact in Jacobi mode.
        let grid = a.u_star.grid;
        for flat in 0..grid.len() {
            let idx = grid.multi(flat);
            let mut mirror = [0usize; MAX_DIM];
            for d in 0..grid.dim {
                mirror[d] = grid.m - 1 - idx[d];
            }
            assert_eq!(a.u_star.data[flat], a.u_star.data[grid.flat(mirror)]);
        }
    }

    #[test]
    fn star_pipeline_runs_in_the_plane() {
        let s = 3.0f64.sqrt() / 2.0;
        let dirs = vec![vec![0.0, 1.0], vec![-s, -0.5], vec![s, -0.5]];
        let mut cfg = YPipelineConfig::defaults(2);
        cfg.base.m = 33;
        let res = y_pipeline(&dirs, &cfg, |_| true).unwrap();
        assert!(res.invariants.admissible);
        assert!(res.invariants.monotone);
        assert!(res.invariants.complementarity < 1e-3);
        assert!(res.invariants.lower_sandwich_violation < 1e-6);
        // Contact against the caps exists: some nodes sit exactly on psi
        // with psi > 0 (an affine cap, not the flat floor).
        let hits = res
            .u_star
            .data
            .iter()
            .zip(&res.psi.data)
            .filter(|(u, p)| u == p && **p > 1e-6)
            .count();
        assert!(hits > 0, "no contact on the affine caps");
    }

    #[test]
    fn star_pipeline_retries_and_reports_failure() {
        let s = 3.0f64.sqrt() / 2.0;
        let dirs = vec![vec![0.0, 1.0], vec![-s, -0.5], vec![s, -0.5]];
        let mut cfg = YPipelineConfig::defaults(2);
        cfg.base.m = 17;
        cfg.base.cascadic = false;
        cfg.max_retries = 1;
        let mut attempts = 0;
        let out = y_pipeline(&dirs, &cfg, |_| {
            attempts += 1;
            false
        });
        assert_eq!(attempts, 2);
        assert!(matches!(out, Err(Error::Analysis(_))));
    }

    #[test]
    fn ladder_halves_down_to_17() {
        assert_eq!(ladder(65), vec![17, 33, 65]);
        assert_eq!(ladder(129), vec![17, 33, 65, 129]);
        assert_eq!(ladder(21), vec![21]);
        assert_eq!(ladder(33), vec![17, 33]);
    }
}
