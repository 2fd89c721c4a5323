//! Barrier profiles with analytically known Monge-Ampere determinants.
//!
//! Two families are provided. The radial profile vanishes on the closed unit
//! ball and solves `det D^2 = 1` outside it; it supplies boundary data,
//! initializations, and the far-field comparison for every solve. The split
//! barriers live on a coordinate splitting `R^(n-k) x R^k` and are the
//! degenerate supersolutions whose determinant drops like `(1 - s^2)^(n-k)`
//! below their branch surface; they encode why contact can fatten along
//! strata of dimension above `n/2` and are exercised here purely as
//! determinant-identity fixtures.
//!
//! Everything is evaluated by adaptive quadrature after the substitution
//! `s = 1 + t^n`, which removes the fractional-power endpoint and keeps the
//! integrand analytic, so the advertised 1e-10 relative accuracy is cheap.

use crate::quadrature::adaptive_simpson;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const QUAD_TOL: f64 = 1e-12;

/// Radial convex profile vanishing on the closed unit ball, with unit
/// Hessian determinant outside it: `integral_0^r ((s^n - 1)_+)^(1/n) ds`.
pub fn radial_profile(n: usize, r: f64) -> f64 {
    assert!(n >= 1, "dimension must be positive");
    let r = r.abs();
    if r <= 1.0 {
        return 0.0;
    }
    let nf = n as f64;
    // s = 1 + t^n turns the integrand into an analytic function of t.
    let upper = (r - 1.0).powf(1.0 / nf);
    let g = |t: f64| {
        let s = 1.0 + t.powi(n as i32);
        (s.powi(n as i32) - 1.0).powf(1.0 / nf) * nf * t.powi(n as i32 - 1)
    };
    adaptive_simpson(&g, 0.0, upper, QUAD_TOL)
}

/// [`radial_profile`] sampled over a whole grid. Node radii are `h` times
/// the square root of an integer, so the quadrature is shared across all
/// nodes at the same integer squared radius (a few thousand distinct values
/// even on the largest grids).
pub fn radial_field(grid: crate::grid::TensorGrid, n: usize) -> crate::grid::ScalarField {
    let center = (grid.m as i64 - 1) / 2;
    let mut cache = std::collections::BTreeMap::new();
    let data = (0..grid.len())
        .map(|flat| {
            let idx = grid.multi(flat);
            let q: i64 = (0..grid.dim)
                .map(|d| {
                    let o = idx[d] as i64 - center;
                    o * o
                })
                .sum();
            *cache
                .entry(q)
                .or_insert_with(|| radial_profile(n, grid.h() * (q as f64).sqrt()))
        })
        .collect();
    crate::grid::ScalarField { grid, data }
}

/// Magnitude of the gradient of [`radial_profile`]: `((r^n - 1)_+)^(1/n)`.
pub fn radial_profile_slope(n: usize, r: f64) -> f64 {
    let r = r.abs();
    if r <= 1.0 {
        return 0.0;
    }
    (r.powi(n as i32) - 1.0).powf(1.0 / (n as f64))
}

/// Far-field shift of the radial profile against the paraboloid:
/// `radial_profile(n, r) - r^2/2` converges to this negative constant as
/// `r -> infinity`, for `n >= 3` (the defect integral diverges in the plane).
pub fn radial_shift_constant(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::Barrier(format!(
            "radial shift constant requires n >= 3 (defect integral diverges), got n = {n}"
        )));
    }
    let nf = n as f64;
    // -1/2 - int_1^T [s - (s^n-1)^(1/n)] ds - tail(T), defect expanded in
    // powers of s^(-n) beyond T. Near s = 1 use the same substitution as
    // radial_profile; past s = 2 evaluate the defect via ln1p to avoid
    // cancellation.
    let head = {
        let g = |t: f64| {
            let s = 1.0 + t.powi(n as i32);
            (s - (s.powi(n as i32) - 1.0).powf(1.0 / nf)) * nf * t.powi(n as i32 - 1)
        };
        adaptive_simpson(&g, 0.0, 1.0, QUAD_TOL)
    };
    let t_cut = 100.0f64;
    let mid = {
        let g = |s: f64| {
            let u = s.powi(-(n as i32));
            -s * ((-u).ln_1p() / nf).exp_m1()
        };
        adaptive_simpson(&g, 2.0, t_cut, QUAD_TOL)
    };
    let tail = {
        let c1 = 1.0 / nf;
        let c2 = (nf - 1.0) / (2.0 * nf * nf);
        let c3 = (nf - 1.0) * (2.0 * nf - 1.0) / (6.0 * nf * nf * nf);
        c1 * t_cut.powf(2.0 - nf) / (nf - 2.0)
            + c2 * t_cut.powf(2.0 - 2.0 * nf) / (2.0 * nf - 2.0)
            + c3 * t_cut.powf(2.0 - 3.0 * nf) / (3.0 * nf - 2.0)
    };
    Ok(-0.5 - head - mid - tail)
}

/// Degenerate barrier on the splitting `R^(n-k) x R^k`.
///
/// With `r = |x|`, `t = |y|`, `gamma = 2(n-k)/(n-2k)` and normalization
/// `coef = (gamma/2)^(1-k/n) (gamma-1)^(1/n)`, the profile is
/// `(r^gamma + r^(-gamma) t^2) / (2 coef)` below the branch surface
/// `t = r^gamma` and `t / coef` above it. Its Hessian determinant equals
/// `(1 - s^2)^(n-k)` with `s = t r^(-gamma)` below the surface and vanishes
/// above it; in particular it is a supersolution of `det D^2 = 1`.
#[derive(Debug, Clone, Copy)]
pub struct SplitBarrier {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
    pub coef: f64,
}

impl SplitBarrier {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 2 || 2 * k >= n {
            return Err(Error::Barrier(format!(
                "split barrier requires 2k < n with n >= 2, got n = {n}, k = {k}"
            )));
        }
        let (nf, kf) = (n as f64, k as f64);
        let gamma = 2.0 * (nf - kf) / (nf - 2.0 * kf);
        let coef = (gamma / 2.0).powf(1.0 - kf / nf) * (gamma - 1.0).powf(1.0 / nf);
        Ok(Self { n, k, gamma, coef })
    }

    /// Evaluate at `(x, y)` with `x` of length `n - k` and `y` of length `k`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n - self.k);
        assert_eq!(y.len(), self.k);
        let r = norm(x);
        let t = norm(y);
        if r == 0.0 {
            // Apex of the homogeneous profile; the t-branch is exact here.
            return t / self.coef;
        }
        let rg = r.powf(self.gamma);
        if t <= rg {
            0.5 * (rg + t * t / rg) / self.coef
        } else {
            t / self.coef
        }
    }

    /// Exact Hessian determinant at `(x, y)`.
    pub fn determinant_at(&self, x: &[f64], y: &[f64]) -> f64 {
        let r = norm(x);
        let t = norm(y);
        let rg = r.powf(self.gamma);
        if r > 0.0 && t < rg {
            let s = t / rg;
            (1.0 - s * s).powi((self.n - self.k) as i32)
        } else {
            0.0
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Local models of the singular profiles near an edge and a vertex of the
/// dual skeleton: `edge = rho + rho^(n/2) (1 + x_n^2)` with `rho` the
/// distance to the last axis, `vertex = r + r^(n+1)`. Both are convex near
/// the singularity and have linearly growing Laplacian away from it.
pub fn edge_asymptotic_model(n: usize, x: &[f64]) -> f64 {
    assert_eq!(x.len(), n);
    let rho = norm(&x[..n - 1]);
    rho + rho.powf(n as f64 / 2.0) * (1.0 + x[n - 1] * x[n - 1])
}

pub fn vertex_asymptotic_model(n: usize, x: &[f64]) -> f64 {
    assert_eq!(x.len(), n);
    let r = norm(x);
    r + r.powi(n as i32 + 1)
}

/// Hessian determinant by central differences with step `h` (4-point mixed
/// stencils), for fields regular in a `2h`-neighborhood of `x`.
pub fn hessian_determinant_fd<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> f64 {
    let n = x.len();
    let mut hess = vec![vec![0.0f64; n]; n];
    let fx = f(x);
    let mut z = x.to_vec();
    for i in 0..n {
        z[i] = x[i] + h;
        let fp = f(&z);
        z[i] = x[i] - h;
        let fm = f(&z);
        z[i] = x[i];
        hess[i][i] = (fp + fm - 2.0 * fx) / (h * h);
        for j in (i + 1)..n {
            let mut w = x.to_vec();
            let mut quad = 0.0;
            for (si, sj, sign) in [
                (1.0, 1.0, 1.0),
                (1.0, -1.0, -1.0),
                (-1.0, 1.0, -1.0),
                (-1.0, -1.0, 1.0),
            ] {
                w[i] = x[i] + si * h;
                w[j] = x[j] + sj * h;
                quad += sign * f(&w);
            }
            let v = quad / (4.0 * h * h);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    crate::linalg::det(&mut hess)
}

/// Which barrier a determinant check targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierKind {
    Radial { n: usize },
    Split { n: usize, k: usize },
}

impl BarrierKind {
    pub fn dim(&self) -> usize {
        match *self {
            BarrierKind::Radial { n } | BarrierKind::Split { n, .. } => n,
        }
    }

    fn eval(&self, z: &[f64]) -> Result<f64> {
        match *self {
            BarrierKind::Radial { n } => Ok(radial_profile(n, norm(z))),
            BarrierKind::Split { n, k } => {
                let b = SplitBarrier::new(n, k)?;
                Ok(b.eval(&z[..n - k], &z[n - k..]))
            }
        }
    }

    fn exact_determinant(&self, z: &[f64]) -> Result<f64> {
        match *self {
            BarrierKind::Radial { n: _ } => Ok(if norm(z) > 1.0 { 1.0 } else { 0.0 }),
            BarrierKind::Split { n, k } => {
                let b = SplitBarrier::new(n, k)?;
                Ok(b.determinant_at(&z[..n - k], &z[n - k..]))
            }
        }
    }

    /// Distance from `z` to the nearest surface across which the profile is
    /// not twice differentiable (branch surface, apex, or unit sphere).
    fn singular_clearance(&self, z: &[f64]) -> Result<f64> {
        match *self {
            BarrierKind::Radial { n: _ } => Ok((norm(z) - 1.0).abs()),
            BarrierKind::Split { n, k } => {
                let b = SplitBarrier::new(n, k)?;
                let r = norm(&z[..n - k]);
                let t = norm(&z[n - k..]);
                // Distance to {t = r^gamma} estimated from the level-set
                // gradient; distance to the apex set {x = 0} is r itself.
                let rg = r.powf(b.gamma);
                let grad = (1.0 + (b.gamma * rg / r.max(1e-300)).powi(2)).sqrt();
                Ok(((t - rg).abs() / grad).min(r))
            }
        }
    }
}

/// One row of a determinant check.
#[derive(Debug, Clone)]
pub struct DetSample {
    pub point: Vec<f64>,
    pub fd: f64,
    pub exact: f64,
    pub rel_err: f64,
}

/// Check the analytic determinant identity at the given points by finite
/// differences with step `rel_h * |z|`. Errors if any point sits closer than
/// `5h` to a surface where the profile is not `C^2`.
pub fn determinant_check(kind: BarrierKind, points: &[Vec<f64>], rel_h: f64) -> Result<Vec<DetSample>> {
    let mut out = Vec::with_capacity(points.len());
    for (idx, z) in points.iter().enumerate() {
        if z.len() != kind.dim() {
            return Err(Error::Barrier(format!(
                "sample {idx} has dimension {} but barrier lives in dimension {}",
                z.len(),
                kind.dim()
            )));
        }
        let h = rel_h * norm(z);
        if h == 0.0 {
            return Err(Error::Barrier(format!("sample {idx} is the origin")));
        }
        let clearance = kind.singular_clearance(z)?;
        if clearance < 5.0 * h {
            return Err(Error::Barrier(format!(
                "sample {idx} violates clearance: distance {clearance:.3e} < 5h = {:.3e}",
                5.0 * h
            )));
        }
        let f = |w: &[f64]| kind.eval(w).expect("validated kind");
        let fd = hessian_determinant_fd(&f, z, h);
        let exact = kind.exact_determinant(z)?;
        let rel_err = (fd - exact).abs() / exact.abs().max(1.0);
        out.push(DetSample {
            point: z.clone(),
            fd,
            exact,
            rel_err,
        });
    }
    Ok(out)
}

/// Deterministic clearance-respecting sample cloud for a determinant check.
/// Radial kinds mix interior points (determinant 0) with exterior ones;
/// split kinds mix both branches and keep `s` away from 1.
pub fn sample_points(kind: BarrierKind, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = kind.dim();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z: Vec<f64> = match kind {
            BarrierKind::Radial { .. } => {
                let r = if out.len() % 4 == 0 {
                    0.2 + 0.6 * rng.gen::<f64>()
                } else {
                    1.15 + 1.35 * rng.gen::<f64>()
                };
                scaled_direction(&mut rng, n, r)
            }
            BarrierKind::Split { n, k } => {
                let b = SplitBarrier::new(n, k).expect("valid kind");
                let r = 0.7 + 0.9 * rng.gen::<f64>();
                let rg = r.powf(b.gamma);
                let t = if out.len() % 4 == 3 {
                    (1.3 + 0.7 * rng.gen::<f64>()) * rg
                } else {
                    0.8 * rng.gen::<f64>() * rg
                };
                let mut z = scaled_direction(&mut rng, n - k, r);
                z.extend_from_slice(&scaled_direction(&mut rng, k, t));
                z
            }
        };
        let h = 1e-3 * norm(&z);
        if kind.singular_clearance(&z).unwrap_or(0.0) >= 6.0 * h {
            out.push(z);
        }
    }
    out
}

fn scaled_direction(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    if dim == 0 {
        return Vec::new();
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let nv = norm(&v);
        if nv > 1e-3 {
            return v.iter().map(|a| a / nv * radius).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with 30-digit quadrature in an independent
    // implementation (mpmath); see the regression block below.
    const RADIAL_3_AT_1_5: f64 = 0.469992033276277262;
    const RADIAL_3_AT_2: f64 = 1.28515662256558996;
    const RADIAL_4_AT_2: f64 = 1.37598526276984094;
    const SHIFT_3: f64 = -0.883319375142566;
    const SHIFT_4: f64 = -0.655514388573030;

    #[test]
    fn radial_profile_vanishes_inside_ball() {
        for n in 1..=4 {
            assert_eq!(radial_profile(n, 0.3), 0.0);
            assert_eq!(radial_profile(n, 1.0), 0.0);
        }
    }

    #[test]
    fn radial_profile_line_case_is_exact() {
        // n = 1: profile is (r-1)^2/2 past the unit interval.
        assert!((radial_profile(1, 2.0) - 0.5).abs() < 1e-13);
        assert!((radial_profile(1, 3.5) - 2.5f64.powi(2) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn radial_profile_plane_matches_closed_form() {
        // n = 2: r sqrt(r^2-1)/2 - ln(r + sqrt(r^2-1))/2.
        for r in [1.2, 1.5, 2.0, 3.0, 5.0] {
            let s = (r * r - 1.0f64).sqrt();
            let exact = 0.5 * (r * s - (r + s).ln());
            let got = radial_profile(2, r);
            assert!(
                (got - exact).abs() <= 1e-10 * exact.abs(),
                "r = {r}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn radial_profile_regression_values() {
        assert!((radial_profile(3, 1.5) - RADIAL_3_AT_1_5).abs() < 1e-10);
        assert!((radial_profile(3, 2.0) - RADIAL_3_AT_2).abs() < 1e-10);
        assert!((radial_profile(4, 2.0) - RADIAL_4_AT_2).abs() < 1e-10);
    }

    #[test]
    fn radial_slope_hits_one_at_two_to_the_inverse_n() {
        for n in 1..=4usize {
            let r = 2.0f64.powf(1.0 / n as f64);
            assert!((radial_profile_slope(n, r) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_constant_regressions() {
        assert!((radial_shift_constant(3).unwrap() - SHIFT_3).abs() < 1e-9);
        assert!((radial_shift_constant(4).unwrap() - SHIFT_4).abs() < 1e-9);
        assert!(radial_shift_constant(2).is_err());
    }

    #[test]
    fn split_barrier_axis_values() {
        let b = SplitBarrier::new(3, 1).unwrap();
        // coef = 2^(2/3) 3^(1/3); on the x = 0 axis the profile is |y|/coef.
        assert!((b.coef - 2.28942848510666374).abs() < 1e-13);
        assert!((b.eval(&[0.0, 0.0], &[1.0]) - 0.436790232368149).abs() < 1e-12);
        assert_eq!(b.eval(&[0.0, 0.0], &[0.0]), 0.0);
    }

    #[test]
    fn split_barrier_branches_agree_on_surface() {
        let b = SplitBarrier::new(3, 1).unwrap();
        for r in [0.5f64, 0.9, 1.3] {
            let rg = r.powf(b.gamma);
            let below = 0.5 * (rg + rg * rg / rg) / b.coef;
            let above = rg / b.coef;
            assert!((below - above).abs() < 1e-14 * above.max(1.0));
            let x = [r, 0.0];
            assert!((b.eval(&x, &[rg]) - above).abs() < 1e-14);
        }
    }

    #[test]
    fn split_barrier_degenerate_split_is_half_square() {
        let b = SplitBarrier::new(3, 0).unwrap();
        let x = [0.3, -0.4, 1.2];
        let r2: f64 = x.iter().map(|a| a * a).sum();
        assert!((b.eval(&x, &[]) - 0.5 * r2).abs() < 1e-13);
    }

    #[test]
    fn split_barrier_homogeneity() {
        let b = SplitBarrier::new(4, 1).unwrap();
        assert!((b.gamma - 3.0).abs() < 1e-14);
        assert!((b.coef - 1.61185489773531288).abs() < 1e-13);
        let (x, y) = ([0.4, -0.2, 0.7], [0.05]);
        let lam = 1.7f64;
        let xs: Vec<f64> = x.iter().map(|a| a * lam).collect();
        let ys: Vec<f64> = y.iter().map(|a| a * lam.powf(b.gamma)).collect();
        let lhs = b.eval(&xs, &ys);
        let rhs = lam.powf(b.gamma) * b.eval(&x, &y);
        assert!((lhs - rhs).abs() < 1e-12 * rhs.abs());
    }

    #[test]
    fn split_barrier_dominates_scaled_distance() {
        // w >= |y| / coef everywhere: AM-GM on the lower branch.
        let b = SplitBarrier::new(3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let x = [rng.gen::<f64>() * 3.0 - 1.5, rng.gen::<f64>() * 3.0 - 1.5];
            let y = [rng.gen::<f64>() * 3.0 - 1.5];
            assert!(b.eval(&x, &y) + 1e-12 >= y[0].abs() / b.coef);
        }
    }

    #[test]
    fn split_barrier_midpoint_convexity() {
        let b = SplitBarrier::new(3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5000 {
            let p: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let q: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let mid: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
            let fm = b.eval(&mid[..2], &mid[2..]);
            let avg = 0.5 * (b.eval(&p[..2], &p[2..]) + b.eval(&q[..2], &q[2..]));
            assert!(fm <= avg + 1e-12, "convexity fails at {p:?} {q:?}");
        }
    }

    #[test]
    fn split_barrier_rejects_bad_split() {
        assert!(SplitBarrier::new(2, 1).is_err());
        assert!(SplitBarrier::new(4, 2).is_err());
    }

    #[test]
    fn determinant_check_split_on_axis_plane() {
        // s = 0 section: determinant is exactly 1.
        let pts = vec![vec![0.8, 0.3, 0.0], vec![1.2, -0.4, 0.0]];
        let rows = determinant_check(BarrierKind::Split { n: 3, k: 1 }, &pts, 1e-3).unwrap();
        for row in rows {
            assert!((row.exact - 1.0).abs() < 1e-14);
            assert!(row.rel_err < 2e-3, "rel err {}", row.rel_err);
        }
    }

    #[test]
    fn determinant_check_radial_inside_and_outside() {
        let rows = determinant_check(
            BarrierKind::Radial { n: 3 },
            &[vec![2.0, 0.0, 0.0], vec![0.5, 0.0, 0.0]],
            1e-3,
        )
        .unwrap();
        assert!((rows[0].exact - 1.0).abs() < 1e-14 && rows[0].rel_err < 1e-3);
        // Inside the ball the profile is identically zero, so FD is exact.
        assert_eq!(rows[1].exact, 0.0);
        assert!(rows[1].rel_err < 1e-14);
    }

    #[test]
    fn determinant_check_rejects_clearance_violation() {
        let err = determinant_check(
            BarrierKind::Radial { n: 2 },
            &[vec![1.0005, 0.0]],
            1e-3,
        );
        assert!(err.is_err());
    }

    #[test]
    fn sampled_cloud_passes_determinant_identity() {
        for kind in [
            BarrierKind::Radial { n: 2 },
            BarrierKind::Radial { n: 3 },
            BarrierKind::Split { n: 3, k: 1 },
        ] {
            let pts = sample_points(kind, 40, 42);
            let rows = determinant_check(kind, &pts, 1e-3).unwrap();
            let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
            assert!(worst < 0.02, "{kind:?}: worst rel err {worst}");
        }
    }

    #[test]
    fn asymptotic_models_basic_values() {
        assert_eq!(vertex_asymptotic_model(3, &[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(vertex_asymptotic_model(3, &[1.0, 0.0, 0.0]), 2.0);
        // Edge model vanishes on the axis it is built around.
        assert_eq!(edge_asymptotic_model(3, &[0.0, 0.0, 0.7]), 0.0);
        let v = edge_asymptotic_model(3, &[0.3, 0.4, 0.0]);
        assert!((v - (0.5 + 0.5f64.powf(1.5))).abs() < 1e-12);
    }

    #[test]
    fn hessian_fd_matches_quadratic() {
        // f = x^2 + x y + y^2 has Hessian det 2*2 - 1 = 3.
        let f = |z: &[f64]| z[0] * z[0] + z[0] * z[1] + z[1] * z[1];
        let d = hessian_determinant_fd(&f, &[0.4, -0.7], 1e-4);
        assert!((d - 3.0).abs() < 1e-6);
    }
}
