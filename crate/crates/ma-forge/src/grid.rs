//! Uniform tensor grids on centered boxes, scalar fields over them, and the
//! orthogonal integer frames that drive the wide-stencil determinant.
//!
//! Grids always have an odd node count per axis so the origin is a node, and
//! coordinates are computed as `(i - center) * h` so that symmetric index
//! pairs produce exactly opposite floating-point coordinates. Refinement
//! inserts midpoints (`m -> 2m - 1`), keeping every coarse node a fine node
//! bit for bit, which the cascadic solver relies on.

use crate::{Error, Result};

pub const MAX_DIM: usize = 4;

/// Uniform grid with `m` nodes per axis on `[-half_width, half_width]^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorGrid {
    pub dim: usize,
    pub m: usize,
    pub half_width: f64,
    h: f64,
    strides: [usize; MAX_DIM],
    center: i64,
}

impl TensorGrid {
    pub fn new(dim: usize, half_width: f64, m: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Grid(format!("dimension {dim} not in 1..=4")));
        }
        if m < 3 || m % 2 == 0 {
            return Err(Error::Grid(format!("node count {m} must be odd and >= 3")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Grid(format!("half width {half_width} must be positive")));
        }
        let mut strides = [0usize; MAX_DIM];
        let mut s = 1usize;
        for d in 0..dim {
            strides[d] = s;
            s = s
                .checked_mul(m)
                .ok_or_else(|| Error::Grid(format!("grid {m}^{dim} overflows")))?;
        }
        Ok(Self {
            dim,
            m,
            half_width,
            h: 2.0 * half_width / (m - 1) as f64,
            strides,
            center: (m as i64 - 1) / 2,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of axis index `i`; exactly antisymmetric around the center.
    pub fn coord(&self, i: usize) -> f64 {
        (i as i64 - self.center) as f64 * self.h
    }

    pub fn flat(&self, idx: [usize; MAX_DIM]) -> usize {
        let mut f = 0;
        for d in 0..self.dim {
            debug_assert!(idx[d] < self.m);
            f += idx[d] * self.strides[d];
        }
        f
    }

    pub fn multi(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        let mut rest = flat;
        for d in 0..self.dim {
            idx[d] = rest % self.m;
            rest /= self.m;
        }
        idx
    }

    /// Point of a flat index; unused axes read 0.0.
    pub fn point(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.multi(flat);
        let mut p = [0.0; MAX_DIM];
        for d in 0..self.dim {
            p[d] = self.coord(idx[d]);
        }
        p
    }

    /// Flat-index displacement of one step along an integer direction.
    pub fn offset(&self, dir: [i64; MAX_DIM]) -> i64 {
        let mut o = 0i64;
        for d in 0..self.dim {
            o += dir[d] * self.strides[d] as i64;
        }
        o
    }

    /// True when every axis index keeps at least `margin` nodes to each wall.
    pub fn is_interior(&self, idx: [usize; MAX_DIM], margin: usize) -> bool {
        (0..self.dim).all(|d| idx[d] >= margin && idx[d] + margin < self.m)
    }

    pub fn is_boundary(&self, idx: [usize; MAX_DIM]) -> bool {
        !self.is_interior(idx, 1)
    }

    /// Nearest grid node to a point (indices clamped to the box).
    pub fn nearest(&self, p: &[f64]) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        for d in 0..self.dim {
            let i = (p[d] / self.h).round() as i64 + self.center;
            idx[d] = i.clamp(0, self.m as i64 - 1) as usize;
        }
        idx
    }

    /// Grid with the same box and midpoints inserted on every axis.
    pub fn refined(&self) -> Self {
        Self::new(self.dim, self.half_width, 2 * self.m - 1).expect("refinement stays valid")
    }
}

/// Values attached to the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: TensorGrid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: TensorGrid, v: f64) -> Self {
        Self {
            data: vec![v; grid.len()],
            grid,
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: TensorGrid, f: F) -> Self {
        let data = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                f(&p[..grid.dim])
            })
            .collect();
        Self { grid, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn linf_distance(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }

    /// Multilinear prolongation onto the midpoint refinement. Coarse nodes
    /// carry over exactly; new nodes average their coarse cell corners.
    pub fn prolonged(&self) -> ScalarField {
        let fine = self.grid.refined();
        let dim = fine.dim;
        let mut data = vec![0.0; fine.len()];
        for flat in 0..fine.len() {
            let idx = fine.multi(flat);
            // Each fine axis index j sits at coarse position j/2.
            let mut acc = 0.0;
            let corners = 1usize << dim;
            let mut total_w = 0.0;
            for corner in 0..corners {
                let mut cidx = [0usize; MAX_DIM];
                let mut w = 1.0;
                for d in 0..dim {
                    let j = idx[d];
                    if j % 2 == 0 {
                        if corner >> d & 1 == 1 {
                            w = 0.0;
                            break;
                        }
                        cidx[d] = j / 2;
                    } else {
                        w *= 0.5;
                        cidx[d] = j / 2 + (corner >> d & 1);
                    }
                }
                if w > 0.0 {
                    acc += w * self.data[self.grid.flat(cidx)];
                    total_w += w;
                }
            }
            debug_assert!((total_w - 1.0).abs() < 1e-12);
            data[flat] = acc;
        }
        ScalarField { grid: fine, data }
    }
}

/// Centered second difference along an integer direction, normalized by the
/// squared step `(h |e|)^2`; caller guarantees the stencil stays in the box.
#[inline]
pub fn second_difference(u: &ScalarField, flat: usize, dir: [i64; MAX_DIM]) -> f64 {
    let off = u.grid.offset(dir);
    let c = u.data[flat];
    let p = u.data[(flat as i64 + off) as usize];
    let q = u.data[(flat as i64 - off) as usize];
    (p + q - 2.0 * c) / (u.grid.h() * u.grid.h() * dir_len_sq(dir) as f64)
}

pub fn dir_len_sq(dir: [i64; MAX_DIM]) -> i64 {
    dir.iter().map(|a| a * a).sum()
}

/// Orthogonal set of integer directions spanning the grid dimension.
#[derive(Debug, Clone)]
pub struct Frame {
    pub dirs: Vec<[i64; MAX_DIM]>,
    pub label: &'static str,
}

impl Frame {
    fn new(label: &'static str, dirs: &[[i64; MAX_DIM]]) -> Self {
        Self {
            dirs: dirs.to_vec(),
            label,
        }
    }

    /// Largest axis excursion of any direction: the interior margin a
    /// stencil built from this frame requires.
    pub fn margin(&self) -> usize {
        self.dirs
            .iter()
            .flat_map(|d| d.iter())
            .map(|a| a.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }
}

/// The frame catalog per dimension. Each entry is a mutually orthogonal set
/// of n integer vectors; the determinant stencil minimizes over the catalog,
/// so richer catalogs tighten the upper bias of the discrete operator.
pub fn frame_set(dim: usize) -> Vec<Frame> {
    match dim {
        1 => vec![Frame::new("axis", &[[1, 0, 0, 0]])],
        2 => vec![
            Frame::new("axis", &[[1, 0, 0, 0], [0, 1, 0, 0]]),
            Frame::new("diag", &[[1, 1, 0, 0], [1, -1, 0, 0]]),
            Frame::new("skew+", &[[1, 2, 0, 0], [2, -1, 0, 0]]),
            Frame::new("skew-", &[[2, 1, 0, 0], [1, -2, 0, 0]]),
        ],
        3 => {
            let mut frames = vec![Frame::new(
                "axis",
                &[[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]],
            )];
            // Diagonal and skew rotations in each coordinate plane, the third
            // axis fixed.
            let planes: [(usize, usize, usize, &'static str); 3] = [
                (0, 1, 2, "xy"),
                (0, 2, 1, "xz"),
                (1, 2, 0, "yz"),
            ];
            let plane_pairs: [([i64; 2], [i64; 2], &'static str); 3] = [
                ([1, 1], [1, -1], "diag"),
                ([1, 2], [2, -1], "skew+"),
                ([2, 1], [1, -2], "skew-"),
            ];
            let labels: [[&'static str; 3]; 3] = [
                ["diag-xy", "diag-xz", "diag-yz"],
                ["skew+xy", "skew+xz", "skew+yz"],
                ["skew-xy", "skew-xz", "skew-yz"],
            ];
            for (pi, (a, b, c, _)) in planes.iter().enumerate() {
                for (qi, (u, v, _)) in plane_pairs.iter().enumerate() {
                    let mut d1 = [0i64; MAX_DIM];
                    let mut d2 = [0i64; MAX_DIM];
                    let mut d3 = [0i64; MAX_DIM];
                    d1[*a] = u[0];
                    d1[*b] = u[1];
                    d2[*a] = v[0];
                    d2[*b] = v[1];
                    d3[*c] = 1;
                    frames.push(Frame::new(labels[qi][pi], &[d1, d2, d3]));
                }
            }
            // Body-diagonal frames: one per diagonal of the cube.
            frames.push(Frame::new(
                "body+++",
                &[[1, 1, 1, 0], [1, -1, 0, 0], [1, 1, -2, 0]],
            ));
            frames.push(Frame::new(
                "body++-",
                &[[1, 1, -1, 0], [1, -1, 0, 0], [1, 1, 2, 0]],
            ));
            frames.push(Frame::new(
                "body+-+",
                &[[1, -1, 1, 0], [1, 1, 0, 0], [-1, 1, 2, 0]],
            ));
            frames.push(Frame::new(
                "body+--",
                &[[1, -1, -1, 0], [1, 1, 0, 0], [1, -1, 2, 0]],
            ));
            frames
        }
        4 => vec![
            Frame::new(
                "axis",
                &[[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
            ),
            Frame::new(
                "diag-01-23",
                &[[1, 1, 0, 0], [1, -1, 0, 0], [0, 0, 1, 1], [0, 0, 1, -1]],
            ),
            Frame::new(
                "diag-02-13",
                &[[1, 0, 1, 0], [1, 0, -1, 0], [0, 1, 0, 1], [0, 1, 0, -1]],
            ),
            Frame::new(
                "diag-03-12",
                &[[1, 0, 0, 1], [1, 0, 0, -1], [0, 1, 1, 0], [0, 1, -1, 0]],
            ),
            Frame::new(
                "hadamard",
                &[[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]],
            ),
        ],
        _ => panic!("frame catalog only covers dimensions 1..=4"),
    }
}

/// Stencil reach of the whole catalog in a given dimension.
pub fn catalog_margin(dim: usize) -> usize {
    frame_set(dim).iter().map(|f| f.margin()).max().unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(TensorGrid::new(0, 1.0, 5).is_err());
        assert!(TensorGrid::new(5, 1.0, 5).is_err());
        assert!(TensorGrid::new(2, 1.0, 4).is_err());
        assert!(TensorGrid::new(2, 0.0, 5).is_err());
    }

    #[test]
    fn coordinates_are_exactly_antisymmetric() {
        let g = TensorGrid::new(1, 1.7, 65).unwrap();
        for i in 0..65 {
            assert_eq!(g.coord(i), -g.coord(64 - i));
        }
        assert_eq!(g.coord(32), 0.0);
        assert_eq!(g.coord(0), -1.7);
        assert_eq!(g.coord(64), 1.7);
    }

    #[test]
    fn flat_multi_roundtrip() {
        let g = TensorGrid::new(3, 2.0, 9).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.flat(g.multi(flat)), flat);
        }
    }

    #[test]
    fn nearest_recovers_nodes() {
        let g = TensorGrid::new(2, 2.0, 17).unwrap();
        for flat in (0..g.len()).step_by(3) {
            let p = g.point(flat);
            assert_eq!(g.flat(g.nearest(&p[..2])), flat);
        }
        assert_eq!(g.nearest(&[100.0, -100.0]), [16, 0, 0, 0]);
    }

    #[test]
    fn second_difference_exact_on_quadratics() {
        let g = TensorGrid::new(2, 1.0, 33).unwrap();
        // u = x^2: pure second derivative along unit direction e-hat is
        // 2 (e-hat . x-axis)^2.
        let u = ScalarField::from_fn(g, |p| p[0] * p[0]);
        let center = g.flat([16, 16, 0, 0]);
        let d_axis = second_difference(&u, center, [1, 0, 0, 0]);
        assert!((d_axis - 2.0).abs() < 1e-9);
        let d_diag = second_difference(&u, center, [1, 1, 0, 0]);
        assert!((d_diag - 1.0).abs() < 1e-9);
        let d_skew = second_difference(&u, center, [1, 2, 0, 0]);
        assert!((d_skew - 2.0 / 5.0).abs() < 1e-9);
    }

    #[test]
    fn frames_are_orthogonal_and_complete() {
        for dim in 1..=4usize {
            let frames = frame_set(dim);
            for f in &frames {
                assert_eq!(f.dirs.len(), dim, "{}: wrong cardinality", f.label);
                for i in 0..dim {
                    assert!(dir_len_sq(f.dirs[i]) > 0);
                    // Directions must stay inside the grid dimension.
                    for d in dim..MAX_DIM {
                        assert_eq!(f.dirs[i][d], 0, "{}: leaks axis {d}", f.label);
                    }
                    for j in (i + 1)..dim {
                        let dot: i64 = (0..MAX_DIM)
                            .map(|d| f.dirs[i][d] * f.dirs[j][d])
                            .sum();
                        assert_eq!(dot, 0, "{}: dirs {i},{j} not orthogonal", f.label);
                    }
                }
            }
        }
        assert_eq!(frame_set(2).len(), 4);
        assert_eq!(frame_set(3).len(), 14);
        assert_eq!(frame_set(4).len(), 5);
        assert_eq!(catalog_margin(2), 2);
        assert_eq!(catalog_margin(3), 2);
        assert_eq!(catalog_margin(4), 1);
    }

    #[test]
    fn frame_labels_are_unique() {
        for dim in 1..=4usize {
            let frames = frame_set(dim);
            let mut labels: Vec<_> = frames.iter().map(|f| f.label).collect();
            labels.sort_unstable();
            labels.dedup();
            assert_eq!(labels.len(), frames.len());
        }
    }

    #[test]
    fn refinement_preserves_coarse_nodes_exactly() {
        let g = TensorGrid::new(2, 1.3, 9).unwrap();
        let fine = g.refined();
        assert_eq!(fine.m, 17);
        for i in 0..g.m {
            assert_eq!(fine.coord(2 * i), g.coord(i));
        }
    }

    #[test]
    fn prolongation_is_exact_on_linear_fields() {
        let g = TensorGrid::new(3, 1.0, 5).unwrap();
        let u = ScalarField::from_fn(g, |p| 1.5 * p[0] - 0.3 * p[1] + 2.0 * p[2] + 0.7);
        let fine = u.prolonged();
        let expect = ScalarField::from_fn(fine.grid, |p| {
            1.5 * p[0] - 0.3 * p[1] + 2.0 * p[2] + 0.7
        });
        assert!(fine.linf_distance(&expect) < 1e-12);
    }

    #[test]
    fn prolongation_injects_coarse_values() {
        let g = TensorGrid::new(2, 1.0, 5).unwrap();
        let u = ScalarField::from_fn(g, |p| (p[0] * 3.1).sin() + p[1] * p[1]);
        let fine = u.prolonged();
        for flat in 0..g.len() {
            let idx = g.multi(flat);
            let fidx = [2 * idx[0], 2 * idx[1], 0, 0];
            assert_eq!(fine.data[fine.grid.flat(fidx)], u.data[flat]);
        }
    }

    #[test]
    fn interior_margin_checks() {
        let g = TensorGrid::new(2, 1.0, 9).unwrap();
        assert!(g.is_interior([2, 2, 0, 0], 2));
        assert!(!g.is_interior([1, 4, 0, 0], 2));
        assert!(g.is_boundary([0, 3, 0, 0]));
        assert!(!g.is_boundary([1, 3, 0, 0]));
    }
}
