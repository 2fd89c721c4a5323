//! Discrete Legendre transforms on tensor grids.
//!
//! The conjugate sup(p . x - u(x)) over grid nodes factors into one
//! transform per axis with a sign flip between passes, so an n-dimensional
//! transform costs O(n m^n) after each line's lower convex hull instead of
//! the O(m^{2n}) brute-force scan. Each dual node also carries the primal
//! node attaining its sup, composed across passes; measure rasterization
//! leans on that map.

use crate::grid::{ScalarField, TensorGrid, MAX_DIM};
use crate::{Error, Result};

/// One-dimensional discrete conjugate: for every slope in `ps` (ascending),
/// the max of `p * x - v` over the sample points, plus the attaining index.
/// Ties resolve to the smallest index.
pub fn llt_1d(xs: &[f64], vals: &[f64], ps: &[f64]) -> (Vec<f64>, Vec<u32>) {
    assert_eq!(xs.len(), vals.len());
    debug_assert!(xs.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(ps.windows(2).all(|w| w[0] <= w[1]));
    // Lower convex hull; points on a chord are dropped, which leaves the
    // leftmost attainer in charge of tied slopes.
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let keep = (xs[b] - xs[a]) * (vals[i] - vals[a])
                - (xs[i] - xs[a]) * (vals[b] - vals[a])
                > 0.0;
            if keep {
                break;
            }
            hull.pop();
        }
        hull.push(i);
    }
    // The maximizer index along the hull is monotone in p.
    let mut out = Vec::with_capacity(ps.len());
    let mut arg = Vec::with_capacity(ps.len());
    let mut k = 0usize;
    for &p in ps {
        while k + 1 < hull.len() {
            let (a, b) = (hull[k], hull[k + 1]);
            // Advance only past segments with slope strictly below p.
            if vals[b] - vals[a] < p * (xs[b] - xs[a]) {
                k += 1;
            } else {
                break;
            }
        }
        let i = hull[k];
        out.push(p * xs[i] - vals[i]);
        arg.push(i as u32);
    }
    (out, arg)
}

/// Conjugate values on a dual grid, with the attaining primal node of each
/// dual node.
#[derive(Debug, Clone)]
pub struct Conjugate {
    pub field: ScalarField,
    pub primal: TensorGrid,
    argmax: Vec<[u32; MAX_DIM]>,
}

impl Conjugate {
    /// Multi-index of the primal node attaining the sup at a dual node.
    pub fn argmax(&self, dual_flat: usize) -> [usize; MAX_DIM] {
        let a = self.argmax[dual_flat];
        let mut out = [0usize; MAX_DIM];
        for d in 0..MAX_DIM {
            out[d] = a[d] as usize;
        }
        out
    }

    pub fn argmax_flat(&self, dual_flat: usize) -> usize {
        self.primal.flat(self.argmax(dual_flat))
    }
}

/// Largest forward-difference slope magnitude of `u` along any axis; an
/// upper bound for the slopes its convex envelope can attain.
pub fn max_forward_slope(u: &ScalarField) -> f64 {
    let g = &u.grid;
    let mut worst = 0.0f64;
    for axis in 0..g.dim {
        let mut dir = [0i64; MAX_DIM];
        dir[axis] = 1;
        let off = g.offset(dir) as usize;
        for flat in 0..g.len() {
            if g.multi(flat)[axis] + 1 < g.m {
                worst = worst.max((u.data[flat + off] - u.data[flat]).abs() / g.h());
            }
        }
    }
    worst
}

/// Symmetric dual grid with 25% headroom over the slope range of `u`.
pub fn default_dual_grid(u: &ScalarField, m_dual: usize) -> Result<TensorGrid> {
    let s = max_forward_slope(u);
    let half = if s > 0.0 { 1.25 * s } else { 1.0 };
    TensorGrid::new(u.grid.dim, half, m_dual)
}

/// Fast discrete conjugate of `u` evaluated at the nodes of `dual`.
/// The dual grid must cover the slope range of `u`, otherwise the result
/// would silently truncate the transform.
pub fn conjugate_on(u: &ScalarField, dual: &TensorGrid) -> Result<Conjugate> {
    let g = &u.grid;
    if dual.dim != g.dim {
        return Err(Error::Legendre(format!(
            "dual grid dimension {} does not match primal {}",
            dual.dim, g.dim
        )));
    }
    let s = max_forward_slope(u);
    if dual.half_width < s - 1e-12 {
        return Err(Error::Legendre(format!(
            "dual half-width {:.6} is below the slope range {:.6}; the \
             transform would be truncated",
            dual.half_width, s
        )));
    }
    Ok(transform(u, dual))
}

/// Conjugate on an arbitrary slope window, skipping the coverage check.
/// Values stay exact pointwise: the transform computes the true sup at
/// every requested slope even when the window truncates the slope range.
/// Biconjugating from such a window loses information, so use this for
/// zoomed-in views, not for round trips.
pub fn conjugate_window(u: &ScalarField, dual: &TensorGrid) -> Result<Conjugate> {
    if dual.dim != u.grid.dim {
        return Err(Error::Legendre(format!(
            "dual grid dimension {} does not match primal {}",
            dual.dim, u.grid.dim
        )));
    }
    Ok(transform(u, dual))
}

fn transform(u: &ScalarField, dual: &TensorGrid) -> Conjugate {
    let g = &u.grid;
    let n = g.dim;
    let xs: Vec<f64> = (0..g.m).map(|i| g.coord(i)).collect();
    let ps: Vec<f64> = (0..dual.m).map(|i| dual.coord(i)).collect();

    let mut ext = [1usize; MAX_DIM];
    for e in ext.iter_mut().take(n) {
        *e = g.m;
    }
    let mut data = u.data.clone();
    let mut comp: Vec<[u32; MAX_DIM]> = (0..data.len())
        .map(|flat| {
            let idx = g.multi(flat);
            let mut a = [0u32; MAX_DIM];
            for d in 0..MAX_DIM {
                a[d] = idx[d] as u32;
            }
            a
        })
        .collect();

    let mut line = vec![0.0f64; g.m];
    for axis in 0..n {
        let strides = strides_of(&ext);
        let mut next_ext = ext;
        next_ext[axis] = dual.m;
        let next_strides = strides_of(&next_ext);
        let mut next_data = vec![0.0f64; next_ext.iter().product()];
        let mut next_comp = vec![[0u32; MAX_DIM]; next_data.len()];
        // Sign flip: after the first pass the running array already holds a
        // partial conjugate, so later passes transform its negation.
        let sign = if axis == 0 { 1.0 } else { -1.0 };
        for_each_line(&ext, axis, |idx| {
            let base: usize = (0..MAX_DIM)
                .filter(|&a| a != axis)
                .map(|a| idx[a] * strides[a])
                .sum();
            let nbase: usize = (0..MAX_DIM)
                .filter(|&a| a != axis)
                .map(|a| idx[a] * next_strides[a])
                .sum();
            for (j, v) in line.iter_mut().enumerate() {
                *v = sign * data[base + j * strides[axis]];
            }
            let (fv, fa) = llt_1d(&xs, &line, &ps);
            for j in 0..dual.m {
                let dst = nbase + j * next_strides[axis];
                next_data[dst] = fv[j];
                next_comp[dst] = comp[base + fa[j] as usize * strides[axis]];
            }
        });
        data = next_data;
        comp = next_comp;
        ext = next_ext;
    }

    Conjugate {
        field: ScalarField {
            grid: *dual,
            data,
        },
        primal: *g,
        argmax: comp,
    }
}

/// Conjugate on the default dual grid.
pub fn conjugate(u: &ScalarField, m_dual: usize) -> Result<Conjugate> {
    conjugate_on(u, &default_dual_grid(u, m_dual)?)
}

/// Discrete biconjugate back on the original grid: the convex envelope of
/// the node data, up to the dual grid's slope quantization.
pub fn biconjugate(u: &ScalarField, m_dual: usize) -> Result<ScalarField> {
    let c = conjugate(u, m_dual)?;
    Ok(conjugate_on(&c.field, &u.grid)?.field)
}

/// Exact conjugate value at one slope: a full scan over primal nodes.
pub fn conjugate_value_at(u: &ScalarField, y: &[f64]) -> f64 {
    assert_eq!(y.len(), u.grid.dim);
    let g = &u.grid;
    let mut best = f64::NEG_INFINITY;
    for (flat, v) in u.data.iter().enumerate() {
        let p = g.point(flat);
        let mut dot = 0.0;
        for d in 0..g.dim {
            dot += y[d] * p[d];
        }
        best = best.max(dot - v);
    }
    best
}

/// Reference conjugate by full scan per dual node; O(m_dual^n m^n),
/// intended for cross-checking the fast transform on small grids.
pub fn brute_conjugate(u: &ScalarField, dual: &TensorGrid) -> ScalarField {
    ScalarField::from_fn(*dual, |y| conjugate_value_at(u, y))
}

fn strides_of(ext: &[usize; MAX_DIM]) -> [usize; MAX_DIM] {
    let mut s = [0usize; MAX_DIM];
    let mut acc = 1usize;
    for a in 0..MAX_DIM {
        s[a] = acc;
        acc *= ext[a];
    }
    s
}

/// Visit every multi-index with `idx[axis] = 0`, i.e. one per grid line
/// along `axis`.
fn for_each_line(ext: &[usize; MAX_DIM], axis: usize, mut f: impl FnMut(&[usize; MAX_DIM])) {
    let mut idx = [0usize; MAX_DIM];
    'outer: loop {
        f(&idx);
        for a in (0..MAX_DIM).rev() {
            if a == axis {
                continue;
            }
            idx[a] += 1;
            if idx[a] < ext[a] {
                continue 'outer;
            }
            idx[a] = 0;
        }
        return;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::radial_profile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Conjugates of the radial barrier profile at |y| = 1, 2, 3.5 for n = 3,
    // and |y| = 1, 2 for n = 2, from high-precision quadrature.
    const RADIAL_3_CONJ: [(f64, f64); 3] = [
        (1.0, 1.07162021251879907),
        (2.0, 2.71832368232376176),
        (3.5, 6.91326503208641357),
    ];
    const RADIAL_2_CONJ: [(f64, f64); 2] = [
        (1.0, 1.14779357469631904),
        (2.0, 2.95788571508919487),
    ];

    #[test]
    fn llt_of_quadratic_matches_closed_form() {
        let m = 201;
        let xs: Vec<f64> = (0..m).map(|i| -2.0 + 4.0 * i as f64 / (m - 1) as f64).collect();
        let vals: Vec<f64> = xs.iter().map(|x| 0.5 * x * x).collect();
        let ps: Vec<f64> = (0..81).map(|i| -1.6 + 3.2 * i as f64 / 80.0).collect();
        let (out, arg) = llt_1d(&xs, &vals, &ps);
        let h = xs[1] - xs[0];
        for (i, &p) in ps.iter().enumerate() {
            // Discrete sup of p x - x^2 / 2 lags p^2 / 2 by at most h^2 / 8.
            assert!(out[i] <= 0.5 * p * p + 1e-12);
            assert!(out[i] >= 0.5 * p * p - h * h / 8.0 - 1e-12);
        }
        for w in arg.windows(2) {
            assert!(w[0] <= w[1], "argmax must be monotone in the slope");
        }
    }

    #[test]
    fn llt_ties_pick_smallest_index() {
        let xs: Vec<f64> = (0..11).map(|i| i as f64 * 0.1 - 0.5).collect();
        let vals = vec![0.0; 11];
        // Every node attains the sup at p = 0; the leftmost one must win.
        let (out, arg) = llt_1d(&xs, &vals, &[0.0]);
        assert_eq!(out[0], 0.0);
        assert_eq!(arg[0], 0);
        // Same data at a slope hitting the left endpoint unambiguously.
        let (out, arg) = llt_1d(&xs, &vals, &[-1.0]);
        assert_eq!(out[0], 0.5);
        assert_eq!(arg[0], 0);
    }

    fn random_field(rng: &mut ChaCha8Rng, dim: usize, m: usize, r: f64) -> ScalarField {
        let grid = TensorGrid::new(dim, r, m).unwrap();
        let data = (0..grid.len()).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        ScalarField { grid, data }
    }

    #[test]
    fn fast_conjugate_matches_brute_force_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for dim in 1..=3usize {
            let m = [33, 13, 9][dim - 1];
            let u = random_field(&mut rng, dim, m, 1.0);
            let dual = default_dual_grid(&u, 11).unwrap();
            let fast = conjugate_on(&u, &dual).unwrap();
            let brute = brute_conjugate(&u, &dual);
            // Identical maxima up to the rounding-order difference between
            // the nested per-axis sums and the brute-force dot product.
            for (f, b) in fast.field.data.iter().zip(&brute.data) {
                assert!(
                    (f - b).abs() <= 1e-13 * (1.0 + b.abs()),
                    "dim {dim}: fast {f} vs brute {b}"
                );
            }
        }
    }

    #[test]
    fn argmax_attains_the_conjugate_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for dim in 1..=3usize {
            let m = [33, 17, 9][dim - 1];
            let u = random_field(&mut rng, dim, m, 1.0);
            let dual = default_dual_grid(&u, 9).unwrap();
            let c = conjugate_on(&u, &dual).unwrap();
            for flat in 0..dual.len() {
                let y = dual.point(flat);
                let a = c.argmax_flat(flat);
                let x = u.grid.point(a);
                let mut dot = 0.0;
                for d in 0..dim {
                    dot += y[d] * x[d];
                }
                let direct = dot - u.data[a];
                assert!(
                    (c.field.data[flat] - direct).abs()
                        <= 1e-13 * (1.0 + direct.abs()),
                    "dual node {flat} in dim {dim}: {} vs {direct}",
                    c.field.data[flat]
                );
            }
        }
    }

    #[test]
    fn radial_profile_conjugates_match_quadrature() {
        let cases: [(usize, &[(f64, f64)], usize, f64); 2] = [
            (3, &RADIAL_3_CONJ, 65, 4.0),
            (2, &RADIAL_2_CONJ, 129, 4.0),
        ];
        for (n, table, m, r) in cases {
            let grid = TensorGrid::new(n, r, m).unwrap();
            let u = ScalarField::from_fn(grid, |x| {
                radial_profile(n, x.iter().map(|c| c * c).sum::<f64>().sqrt())
            });
            for &(rho, expect) in table {
                let mut y = vec![0.0; n];
                y[0] = rho;
                let got = conjugate_value_at(&u, &y);
                // Node sup lags the continuum sup by O(h^2) curvature error.
                let h = grid.h();
                assert!(
                    (got - expect).abs() < 3.0 * h * h + 1e-9,
                    "n = {n}, |y| = {rho}: got {got}, expected {expect}"
                );
                assert!(got <= expect + 1e-9, "discrete sup cannot exceed continuum");
            }
        }
    }

    #[test]
    fn biconjugate_is_identity_on_convex_data() {
        let grid = TensorGrid::new(2, 1.0, 17).unwrap();
        let u = ScalarField::from_fn(grid, |x| {
            0.5 * (x[0] * x[0] + 1.4 * x[1] * x[1]) + 0.3 * x[0] - 0.1 * x[1]
        });
        // Dual spacing finer than h * (smallest curvature) so every primal
        // node owns at least one dual node.
        let uu = biconjugate(&u, 129).unwrap();
        assert!(u.linf_distance(&uu) < 1e-12);
    }

    #[test]
    fn biconjugate_convexifies() {
        let grid = TensorGrid::new(1, 1.0, 41).unwrap();
        let w = ScalarField::from_fn(grid, |x| (x[0] * x[0] - 0.25).abs());
        let env = biconjugate(&w, 513).unwrap();
        for (flat, (&e, &v)) in env.data.iter().zip(&w.data).enumerate() {
            assert!(e <= v + 1e-12, "envelope exceeds data at node {flat}");
        }
        // Strictly below on the non-convex well between the two minima.
        let mid = grid.len() / 2;
        assert!(env.data[mid] < w.data[mid] - 0.2);
        // Envelope of the envelope is itself.
        let env2 = biconjugate(&env, 513).unwrap();
        assert!(env.linf_distance(&env2) < 1e-12);
    }

    #[test]
    fn fenchel_young_holds_on_all_pairs() {
        let grid = TensorGrid::new(2, 1.0, 21).unwrap();
        let u = ScalarField::from_fn(grid, |x| {
            0.7 * x[0] * x[0] + 0.5 * x[1] * x[1] + 0.2 * x[0] * x[1]
        });
        let c = conjugate(&u, 41).unwrap();
        let dual = c.field.grid;
        for pf in 0..dual.len() {
            let y = dual.point(pf);
            for xf in 0..grid.len() {
                let x = grid.point(xf);
                let dot = y[0] * x[0] + y[1] * x[1];
                assert!(u.data[xf] + c.field.data[pf] >= dot - 1e-12);
            }
        }
    }

    #[test]
    fn undersized_dual_grid_is_rejected() {
        let grid = TensorGrid::new(2, 1.0, 17).unwrap();
        let u = ScalarField::from_fn(grid, |x| x[0] * x[0] + x[1] * x[1]);
        let small = TensorGrid::new(2, 0.5, 17).unwrap();
        assert!(matches!(conjugate_on(&u, &small), Err(Error::Legendre(_))));
        let wrong_dim = TensorGrid::new(3, 5.0, 17).unwrap();
        assert!(conjugate_on(&u, &wrong_dim).is_err());
    }

    #[test]
    fn default_dual_grid_has_slope_headroom() {
        let grid = TensorGrid::new(2, 1.0, 17).unwrap();
        let u = ScalarField::from_fn(grid, |x| x[0] * x[0] + x[1] * x[1]);
        let dual = default_dual_grid(&u, 17).unwrap();
        let s = max_forward_slope(&u);
        assert!((dual.half_width - 1.25 * s).abs() < 1e-12);
        assert!(conjugate_on(&u, &dual).is_ok());
    }
}
