//! Monotone discrete Monge-Ampere operator and the discrete Alexandrov
//! measure.
//!
//! The operator takes, over each orthogonal integer frame, the product of
//! directional second differences clipped at zero, and reports the minimum
//! across frames. Clipping makes it nondecreasing in neighbor values and
//! nonincreasing in the center value, which is what the comparison
//! arguments downstream rely on; by the Hadamard inequality every frame
//! product of a C^2 convex function dominates the true determinant, so the
//! frame minimum is the tight side of the catalog.
//!
//! The measure of a node set is the Lebesgue volume of its subgradient
//! image, realized by attributing every dual-grid cell of the conjugate to
//! the primal node attaining the sup there. Dirac masses appear natively
//! as many dual cells mapping to one node.

use crate::grid::{frame_set, Frame, ScalarField, MAX_DIM};
use crate::legendre;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct MAConfig {
    pub frames: Vec<Frame>,
    /// Clip directional second differences at zero (degenerate ellipticity).
    pub negative_part_clip: bool,
    /// Integer multiple of the base step used by every frame direction.
    pub step: usize,
}

impl MAConfig {
    pub fn for_dim(dim: usize) -> Self {
        Self {
            frames: frame_set(dim),
            negative_part_clip: true,
            step: 1,
        }
    }

    pub fn with_step(dim: usize, step: usize) -> Self {
        Self {
            step: step.max(1),
            ..Self::for_dim(dim)
        }
    }
}

/// True when `flat +/- step * dir` stays inside the grid box.
pub fn stencil_fits(
    f: &ScalarField,
    idx: [usize; MAX_DIM],
    dir: &[i64; MAX_DIM],
    step: usize,
) -> bool {
    let g = &f.grid;
    (0..g.dim).all(|d| {
        let reach = step as i64 * dir[d];
        let i = idx[d] as i64;
        i + reach >= 0 && i + reach < g.m as i64 && i - reach >= 0 && i - reach < g.m as i64
    })
}

fn scaled_second_difference(f: &ScalarField, flat: usize, dir: &[i64; MAX_DIM], step: usize) -> f64 {
    let off = f.grid.offset(*dir) * step as i64;
    let c = f.data[flat];
    let p = f.data[(flat as i64 + off) as usize];
    let q = f.data[(flat as i64 - off) as usize];
    let len2: i64 = dir.iter().map(|a| a * a).sum();
    let span = f.grid.h() * step as f64;
    (p + q - 2.0 * c) / (span * span * len2 as f64)
}

/// Discrete Monge-Ampere operator at one node.
pub fn ma_h(f: &ScalarField, flat: usize, cfg: &MAConfig) -> Result<f64> {
    let idx = f.grid.multi(flat);
    let mut best = f64::INFINITY;
    for frame in &cfg.frames {
        let mut prod = 1.0;
        for dir in &frame.dirs {
            if !stencil_fits(f, idx, dir, cfg.step) {
                return Err(Error::Operator(format!(
                    "stencil of frame '{}' (step {}) exits the grid at node {flat}",
                    frame.label, cfg.step
                )));
            }
            let mut dd = scaled_second_difference(f, flat, dir, cfg.step);
            if cfg.negative_part_clip {
                dd = dd.max(0.0);
            }
            prod *= dd;
        }
        best = best.min(prod);
    }
    Ok(best)
}

/// Operator over the whole grid; `None` where some stencil exits the box.
pub fn ma_h_field(f: &ScalarField, cfg: &MAConfig) -> Vec<Option<f64>> {
    (0..f.grid.len())
        .map(|flat| ma_h(f, flat, cfg).ok())
        .collect()
}

/// Subgradient-image volume attributed to each node: dual cells of the
/// conjugate, each of volume h_dual^n, booked to the node attaining the
/// sup. Node masses near the box boundary absorb the truncated far-field
/// slopes and are only meaningful for interior regions.
pub fn ma_masses(f: &ScalarField, m_dual: usize) -> Result<Vec<f64>> {
    let c = legendre::conjugate(f, m_dual)?;
    let dual = c.field.grid;
    let cell = dual.h().powi(f.grid.dim as i32);
    let mut mass = vec![0.0; f.grid.len()];
    for df in 0..dual.len() {
        mass[c.argmax_flat(df)] += cell;
    }
    Ok(mass)
}

/// Monge-Ampere measure of a node set: sum of attributed dual-cell
/// volumes. The set must stay off the grid boundary, where subgradients
/// are truncated by the box.
pub fn ma_measure(f: &ScalarField, region: &[usize], m_dual: usize) -> Result<f64> {
    let g = &f.grid;
    for &flat in region {
        if flat >= g.len() {
            return Err(Error::Operator(format!("region node {flat} out of range")));
        }
        if !g.is_interior(g.multi(flat), 1) {
            return Err(Error::Operator(format!(
                "region touches the grid boundary at node {flat}; its subgradient is box-truncated"
            )));
        }
    }
    let masses = ma_masses(f, m_dual)?;
    Ok(region.iter().map(|&flat| masses[flat]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TensorGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quad_iso(x: &[f64]) -> f64 {
        0.5 * x.iter().map(|c| c * c).sum::<f64>()
    }

    #[test]
    fn quadratics_and_affines_hit_exact_values() {
        for dim in 1..=3usize {
            let grid = TensorGrid::new(dim, 1.0, 17).unwrap();
            let cfg = MAConfig::for_dim(dim);
            let f = ScalarField::from_fn(grid, quad_iso);
            let a = ScalarField::from_fn(grid, |x| 0.3 * x[0] - 0.7);
            let margin = 2;
            for flat in 0..grid.len() {
                if !grid.is_interior(grid.multi(flat), margin) {
                    continue;
                }
                assert!((ma_h(&f, flat, &cfg).unwrap() - 1.0).abs() < 1e-9);
                assert!(ma_h(&a, flat, &cfg).unwrap().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn anisotropic_quadratic_reports_the_axis_determinant() {
        let grid = TensorGrid::new(2, 1.0, 33).unwrap();
        let cfg = MAConfig::for_dim(2);
        let f = ScalarField::from_fn(grid, |x| x[0] * x[0] + 0.25 * x[1] * x[1]);
        let center = grid.len() / 2;
        // Axis frame gives 2 * 0.5 = 1; every rotated orthogonal frame
        // gives a product >= det, so the minimum is the axis value.
        assert!((ma_h(&f, center, &cfg).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn clipping_makes_the_operator_monotone() {
        let dim = 2;
        let grid = TensorGrid::new(dim, 1.0, 17).unwrap();
        let cfg = MAConfig::for_dim(dim);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let mut f = ScalarField::from_fn(grid, |x| {
                quad_iso(x) + 0.002 * (17.0 * x[0]).sin() * (13.0 * x[1]).cos()
            });
            for v in f.data.iter_mut() {
                *v += 0.001 * (rng.gen::<f64>() - 0.5);
            }
            let center = grid.flat([8, 8, 0, 0]);
            let base = ma_h(&f, center, &cfg).unwrap();
            // Raising any stencil neighbor never decreases the value.
            let target = center + 2 * grid.offset([1, 0, 0, 0]) as usize;
            let mut up = f.clone();
            up.data[target] += 0.05;
            assert!(ma_h(&up, center, &cfg).unwrap() >= base - 1e-12);
            // Raising the center never increases it.
            let mut upc = f.clone();
            upc.data[center] += 0.05;
            assert!(ma_h(&upc, center, &cfg).unwrap() <= base + 1e-12);
        }
    }

    #[test]
    fn stencils_off_the_grid_are_errors() {
        let grid = TensorGrid::new(2, 1.0, 17).unwrap();
        let f = ScalarField::from_fn(grid, quad_iso);
        let cfg = MAConfig::for_dim(2);
        assert!(ma_h(&f, 0, &cfg).is_err());
        // A wide step pushes the failure strip further inside.
        let wide = MAConfig::with_step(2, 4);
        let near = grid.flat([3, 8, 0, 0]);
        assert!(ma_h(&f, near, &wide).is_err());
        let mid = grid.flat([8, 8, 0, 0]);
        assert!((ma_h(&f, mid, &wide).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn consistency_error_shrinks_under_refinement() {
        // Radial convex profile with curvature variation:
        // f = r^2/2 + r^4/12, det D2f = (1 + r^2)(1 + r^2/3) in 2D.
        let exact = |x: &[f64]| {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            (1.0 + r2) * (1.0 + r2 / 3.0)
        };
        let profile = |x: &[f64]| {
            let r2: f64 = x.iter().map(|c| c * c).sum();
            0.5 * r2 + r2 * r2 / 12.0
        };
        let mut errs = Vec::new();
        for m in [33usize, 65] {
            let grid = TensorGrid::new(2, 1.0, m).unwrap();
            let f = ScalarField::from_fn(grid, profile);
            let cfg = MAConfig::for_dim(2);
            let mut worst = 0.0f64;
            for flat in 0..grid.len() {
                if !grid.is_interior(grid.multi(flat), 2) {
                    continue;
                }
                let p = grid.point(flat);
                worst = worst.max((ma_h(&f, flat, &cfg).unwrap() - exact(&p[..2])).abs());
            }
            errs.push(worst);
        }
        assert!(errs[1] <= errs[0] + 1e-12, "error grew under refinement: {errs:?}");
        assert!(errs[1] < 0.05, "consistency error too large: {errs:?}");
    }

    #[test]
    fn cone_masses_recover_subgradient_areas() {
        let grid = TensorGrid::new(2, 1.0, 65).unwrap();
        let center = grid.len() / 2;
        // |x|: subgradient at the tip is the unit disk.
        let cone = ScalarField::from_fn(grid, |x| x.iter().map(|c| c * c).sum::<f64>().sqrt());
        let m = ma_measure(&cone, &[center], 257).unwrap();
        assert!(
            (m - std::f64::consts::PI).abs() < 0.15,
            "disk area estimate {m}"
        );
        // |x1| + |x2|: subgradient at the tip is [-1,1]^2.
        let cross = ScalarField::from_fn(grid, |x| x[0].abs() + x[1].abs());
        let m = ma_measure(&cross, &[center], 257).unwrap();
        assert!((m - 4.0).abs() < 0.2, "square area estimate {m}");
    }

    #[test]
    fn quadratic_measure_matches_region_volume() {
        let grid = TensorGrid::new(2, 1.0, 33).unwrap();
        let f = ScalarField::from_fn(grid, quad_iso);
        // Every interior node owns a slope cell of width h centered at its
        // own gradient, so the union is a box of side 2R - h.
        let region: Vec<usize> = (0..grid.len())
            .filter(|&i| grid.is_interior(grid.multi(i), 1))
            .collect();
        let vol = ma_measure(&f, &region, 129).unwrap();
        let side = 2.0 - grid.h();
        assert!(
            (vol - side * side).abs() < 0.1,
            "volume {vol} vs {}",
            side * side
        );
    }

    #[test]
    fn measure_is_additive_over_partitions() {
        let grid = TensorGrid::new(2, 1.0, 21).unwrap();
        let f = ScalarField::from_fn(grid, |x| {
            quad_iso(x) + 0.05 * (3.0 * x[0]).sin() * x[1]
        });
        let interior: Vec<usize> = (0..grid.len())
            .filter(|&i| grid.is_interior(grid.multi(i), 1))
            .collect();
        let (left, right): (Vec<usize>, Vec<usize>) =
            interior.iter().partition(|&&i| grid.multi(i)[0] < 10);
        let whole = ma_measure(&f, &interior, 65).unwrap();
        let l = ma_measure(&f, &left, 65).unwrap();
        let r = ma_measure(&f, &right, 65).unwrap();
        assert!((whole - l - r).abs() < 1e-12);
    }

    #[test]
    fn boundary_regions_are_rejected() {
        let grid = TensorGrid::new(2, 1.0, 17).unwrap();
        let f = ScalarField::from_fn(grid, quad_iso);
        assert!(ma_measure(&f, &[0], 33).is_err());
        assert!(ma_measure(&f, &[grid.len() + 7], 33).is_err());
    }
}
