//! Convex polytopes in ambient dimension at most 4, with everything the
//! obstacle pipelines need from them: support functions, the normal-fan
//! stratification of slope space, polar duals, skeleton sampling, and the
//! capped affine families that build non-polytope obstacles.
//!
//! Vertex representation only. Faces are enumerated by brute force over
//! supporting hyperplanes through d-subsets of points, which is ample for
//! the small vertex counts used here (hard cap 64). A degenerate polytope
//! (affine dimension d below the ambient dimension) is valid throughout;
//! by convention the catalog embeds a d-dimensional shape into the last d
//! coordinates.

use crate::linalg;
use crate::{Error, Result};
use std::collections::BTreeSet;

const MAX_VERTICES: usize = 64;

/// One face of the polytope, identified by the vertex ids it contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub ids: Vec<usize>,
    pub dim: usize,
}

#[derive(Debug, Clone)]
struct Facet {
    /// Outward unit normal in hull coordinates.
    normal: Vec<f64>,
    offset: f64,
    ids: Vec<usize>,
}

/// Compact convex polytope given by its extreme points.
#[derive(Debug, Clone)]
pub struct Polytope {
    pub ambient: usize,
    /// Extreme points only, in input order.
    pub vertices: Vec<Vec<f64>>,
    /// Affine dimension of the vertex set.
    pub dim: usize,
    /// Vertex-id pairs of the 1-skeleton.
    pub edges: Vec<(usize, usize)>,
    /// Full face list (0-faces through the polytope itself), sorted by
    /// (dimension, ids); classification components index into it.
    faces: Vec<Face>,
    facets: Vec<Facet>,
    /// Orthonormal basis of the affine hull's direction space.
    basis: Vec<Vec<f64>>,
    centroid: Vec<f64>,
    /// Hull coordinates of each vertex (length = dim).
    coords: Vec<Vec<f64>>,
    tol: f64,
}

/// Where a slope-space point sits in the polytope's normal fan. The level
/// is the ambient dimension minus the dimension of the exposed face the
/// point sees; the cone over a fixed face is one connected component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratum {
    pub level: usize,
    pub component_id: usize,
    pub face: Vec<usize>,
    pub contact_permitted: bool,
}

/// Polar dual split into its bounded factor and free subspace dimension.
#[derive(Debug, Clone)]
pub struct DualPolytope {
    pub free_dim: usize,
    pub bounded: Polytope,
}

pub fn make_polytope(points: &[Vec<f64>]) -> Result<Polytope> {
    if points.is_empty() {
        return Err(Error::Geometry("empty point set".into()));
    }
    let ambient = points[0].len();
    if ambient == 0 || ambient > 4 {
        return Err(Error::Geometry(format!(
            "ambient dimension {ambient} not in 1..=4"
        )));
    }
    for p in points {
        if p.len() != ambient {
            return Err(Error::Geometry("inconsistent point dimensions".into()));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("non-finite coordinate".into()));
        }
    }

    // Scale-aware tolerance from the bounding box diameter.
    let mut diam2 = 0.0f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            diam2 = diam2.max(dist2(&points[i], &points[j]));
        }
    }
    let tol = (1e-9 * diam2.sqrt()).max(1e-12);

    // Deduplicate.
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if pts.iter().all(|q| dist2(p, q).sqrt() > tol) {
            pts.push(p.clone());
        }
    }
    if pts.len() > MAX_VERTICES {
        return Err(Error::Geometry(format!(
            "{} distinct points exceed the {MAX_VERTICES}-vertex cap",
            pts.len()
        )));
    }

    // Affine hull.
    let centroid: Vec<f64> = (0..ambient)
        .map(|d| pts.iter().map(|p| p[d]).sum::<f64>() / pts.len() as f64)
        .collect();
    let diffs: Vec<Vec<f64>> = pts.iter().map(|p| sub(p, &centroid)).collect();
    let basis = linalg::orthonormal_span(&diffs, tol);
    let dim = basis.len();

    if dim == 0 {
        let v = pts[0].clone();
        return Ok(Polytope {
            ambient,
            vertices: vec![v.clone()],
            dim: 0,
            edges: Vec::new(),
            faces: vec![Face { ids: vec![0], dim: 0 }],
            facets: Vec::new(),
            basis,
            centroid,
            coords: vec![Vec::new()],
            tol,
        });
    }

    let coords_all: Vec<Vec<f64>> = diffs
        .iter()
        .map(|d| basis.iter().map(|b| linalg::dot(d, b)).collect())
        .collect();

    // Supporting hyperplanes through d-subsets of points.
    let mut supports: Vec<Facet> = Vec::new();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    combinations(pts.len(), dim, |subset| {
        let rows: Vec<Vec<f64>> = subset[1..]
            .iter()
            .map(|&j| sub(&coords_all[j], &coords_all[subset[0]]))
            .collect();
        let Some(mut normal) = linalg::nullspace_dir(&rows, dim, tol) else {
            return;
        };
        let mut offset = linalg::dot(&normal, &coords_all[subset[0]]);
        let vals: Vec<f64> = coords_all.iter().map(|q| linalg::dot(&normal, q)).collect();
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi <= offset + tol {
            // keep orientation
        } else if lo >= offset - tol {
            for v in &mut normal {
                *v = -*v;
            }
            offset = -offset;
        } else {
            return;
        }
        let ids: Vec<usize> = (0..pts.len())
            .filter(|&i| (linalg::dot(&normal, &coords_all[i]) - offset).abs() <= tol)
            .collect();
        if seen.insert(ids.clone()) {
            supports.push(Facet {
                normal,
                offset,
                ids,
            });
        }
    });

    // A point is extreme iff its tight supporting normals span the hull.
    let mut vertex_of_point: Vec<Option<usize>> = vec![None; pts.len()];
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for i in 0..pts.len() {
        let tight: Vec<Vec<f64>> = supports
            .iter()
            .filter(|f| f.ids.contains(&i))
            .map(|f| f.normal.clone())
            .collect();
        if linalg::rank(&tight, tol) == dim {
            vertex_of_point[i] = Some(vertices.len());
            vertices.push(pts[i].clone());
        }
    }
    if vertices.is_empty() {
        return Err(Error::Geometry(
            "no extreme points found (degenerate input)".into(),
        ));
    }
    let coords: Vec<Vec<f64>> = (0..pts.len())
        .filter(|&i| vertex_of_point[i].is_some())
        .map(|i| coords_all[i].clone())
        .collect();

    // Facets: supporting hyperplanes whose tight vertex set has dimension
    // d - 1, re-indexed to vertex ids.
    let mut facets: Vec<Facet> = Vec::new();
    let mut seen_facets: BTreeSet<Vec<usize>> = BTreeSet::new();
    for s in &supports {
        let ids: Vec<usize> = s.ids.iter().filter_map(|&i| vertex_of_point[i]).collect();
        if ids.is_empty() {
            continue;
        }
        let rows: Vec<Vec<f64>> = ids[1..]
            .iter()
            .map(|&j| sub(&coords[j], &coords[ids[0]]))
            .collect();
        if linalg::rank(&rows, tol) + 1 == dim && seen_facets.insert(ids.clone()) {
            facets.push(Facet {
                normal: s.normal.clone(),
                offset: s.offset,
                ids,
            });
        }
    }

    // Face lattice: close the facet vertex sets under intersection.
    let all_ids: Vec<usize> = (0..vertices.len()).collect();
    let mut sets: BTreeSet<Vec<usize>> = BTreeSet::new();
    sets.insert(all_ids);
    for f in &facets {
        sets.insert(f.ids.clone());
    }
    loop {
        let mut added = false;
        let snapshot: Vec<Vec<usize>> = sets.iter().cloned().collect();
        for s in &snapshot {
            for f in &facets {
                let inter: Vec<usize> =
                    s.iter().filter(|i| f.ids.contains(i)).cloned().collect();
                if !inter.is_empty() && sets.insert(inter) {
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }
    let mut faces: Vec<Face> = sets
        .into_iter()
        .map(|ids| {
            let rows: Vec<Vec<f64>> = ids[1..]
                .iter()
                .map(|&j| sub(&coords[j], &coords[ids[0]]))
                .collect();
            let fdim = linalg::rank(&rows, tol);
            Face { ids, dim: fdim }
        })
        .collect();
    faces.sort_by(|a, b| (a.dim, &a.ids).cmp(&(b.dim, &b.ids)));

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for f in faces.iter().filter(|f| f.dim == 1) {
        if f.ids.len() != 2 {
            return Err(Error::Geometry(format!(
                "1-face with {} vertices; input not in convex position",
                f.ids.len()
            )));
        }
        edges.push((f.ids[0], f.ids[1]));
    }

    Ok(Polytope {
        ambient,
        vertices,
        dim,
        edges,
        faces,
        facets,
        basis,
        centroid,
        coords,
        tol,
    })
}

impl Polytope {
    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Support function: max over vertices of `v . x`.
    pub fn support_value(&self, x: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| linalg::dot(v, x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Vertex ids achieving the support value within `slack`.
    pub fn argmax_vertices(&self, x: &[f64], slack: f64) -> Vec<usize> {
        let vals: Vec<f64> = self.vertices.iter().map(|v| linalg::dot(v, x)).collect();
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..vals.len()).filter(|&i| vals[i] >= hi - slack).collect()
    }

    fn classification_slack(&self, x: &[f64]) -> f64 {
        let vmax = self
            .vertices
            .iter()
            .map(|v| linalg::norm(v))
            .fold(0.0, f64::max);
        self.tol * vmax.max(1.0) * (1.0 + linalg::norm(x))
    }

    /// Smallest face whose vertex set contains `ids` (the whole polytope in
    /// the worst case).
    pub fn minimal_face(&self, ids: &[usize]) -> &Face {
        self.faces
            .iter()
            .filter(|f| ids.iter().all(|i| f.ids.contains(i)))
            .min_by_key(|f| (f.dim, f.ids.len()))
            .expect("the improper face contains every id set")
    }

    /// Normal-fan stratum of a slope-space point. Near-ties inflate the
    /// exposed face, so boundary points classify into the lower level.
    pub fn classify(&self, x: &[f64]) -> Result<Stratum> {
        if x.len() != self.ambient {
            return Err(Error::Geometry("classify: wrong dimension".into()));
        }
        let slack = self.classification_slack(x);
        if self.dim == self.ambient && linalg::norm(x) <= slack {
            return Err(Error::Geometry(
                "classify: apex of a full-dimensional fan is unclassified".into(),
            ));
        }
        let arg = self.argmax_vertices(x, slack);
        let face = self.minimal_face(&arg);
        let component_id = self
            .faces
            .iter()
            .position(|f| f == face)
            .expect("face comes from the list");
        let level = self.ambient - face.dim;
        Ok(Stratum {
            level,
            component_id,
            face: face.ids.clone(),
            contact_permitted: 2 * level > self.ambient,
        })
    }

    /// True iff `p` lies in the normal cone at vertex `q`:
    /// `p . v_q >= p . v_j` for every vertex j, within slack.
    pub fn normal_cone_contains(&self, q: usize, p: &[f64]) -> bool {
        let slack = self.classification_slack(p);
        let own = linalg::dot(&self.vertices[q], p);
        self.vertices
            .iter()
            .all(|v| linalg::dot(v, p) <= own + slack)
    }

    /// Outward facet normals (ambient coordinates) of the facets meeting
    /// vertex `q`; together with the `ambient - dim` free directions these
    /// generate the normal cone at `q`.
    pub fn vertex_cone_facet_normals(&self, q: usize) -> Vec<Vec<f64>> {
        self.facets
            .iter()
            .filter(|f| f.ids.contains(&q))
            .map(|f| {
                let mut out = vec![0.0; self.ambient];
                for (c, b) in f.normal.iter().zip(&self.basis) {
                    for (o, bv) in out.iter_mut().zip(b) {
                        *o += c * bv;
                    }
                }
                out
            })
            .collect()
    }

    /// Polar dual `{ support <= 1 }`, split as free subspace x bounded
    /// factor. Requires the origin in the relative interior.
    pub fn dual(&self) -> Result<DualPolytope> {
        // The origin must lie in the affine hull at all.
        let r = sub(&vec![0.0; self.ambient], &self.centroid);
        let mut resid = r.clone();
        for b in &self.basis {
            let c = linalg::dot(&resid, b);
            for (ri, bi) in resid.iter_mut().zip(b) {
                *ri -= c * bi;
            }
        }
        if linalg::norm(&resid) > self.tol {
            return Err(Error::Geometry(
                "dual: origin not in the affine hull".into(),
            ));
        }
        if self.dim == 0 {
            return Ok(DualPolytope {
                free_dim: self.ambient,
                bounded: make_polytope(&[vec![0.0; self.ambient]])?,
            });
        }
        // Hull coordinates of the origin; strict interiority check.
        let zero_q: Vec<f64> = self.basis.iter().map(|b| linalg::dot(&r, b)).collect();
        for f in &self.facets {
            if linalg::dot(&f.normal, &zero_q) >= f.offset - self.tol {
                return Err(Error::Geometry(
                    "dual: origin not in the relative interior".into(),
                ));
            }
        }
        // Origin-based hull coordinates of the vertices give the polar's
        // constraint rows c_i . y <= 1.
        let cons: Vec<Vec<f64>> = self
            .coords
            .iter()
            .map(|q| sub(q, &zero_q))
            .collect();
        let scale = cons.iter().map(|c| linalg::norm(c)).fold(0.0, f64::max);
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        combinations(cons.len(), self.dim, |subset| {
            let a: Vec<Vec<f64>> = subset.iter().map(|&i| cons[i].clone()).collect();
            let Some(y) = linalg::solve(&a, &vec![1.0; self.dim], self.tol * scale) else {
                return;
            };
            let feasible = cons
                .iter()
                .all(|c| linalg::dot(c, &y) <= 1.0 + self.tol * scale.max(1.0));
            if feasible {
                candidates.push(y);
            }
        });
        if candidates.is_empty() {
            return Err(Error::Geometry("dual: polar has no vertices".into()));
        }
        let ambient_pts: Vec<Vec<f64>> = candidates
            .iter()
            .map(|y| {
                let mut x = vec![0.0; self.ambient];
                for (c, b) in y.iter().zip(&self.basis) {
                    for (xi, bi) in x.iter_mut().zip(b) {
                        *xi += c * bi;
                    }
                }
                x
            })
            .collect();
        Ok(DualPolytope {
            free_dim: self.ambient - self.dim,
            bounded: make_polytope(&ambient_pts)?,
        })
    }

    /// Sample points of the scaled 1-skeleton: every vertex plus `per_edge`
    /// interior points of each edge, all multiplied by `scale`.
    pub fn edge_points(&self, per_edge: usize, scale: f64) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self
            .vertices
            .iter()
            .map(|v| v.iter().map(|c| c * scale).collect())
            .collect();
        for &(a, b) in &self.edges {
            for j in 1..=per_edge {
                let t = j as f64 / (per_edge + 1) as f64;
                out.push(
                    self.vertices[a]
                        .iter()
                        .zip(&self.vertices[b])
                        .map(|(va, vb)| scale * (va + t * (vb - va)))
                        .collect(),
                );
            }
        }
        out
    }
}

/// Affine function `gradient . x + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub gradient: Vec<f64>,
    pub bias: f64,
}

impl Affine {
    pub fn eval(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.gradient, x) + self.bias
    }
}

/// Pointwise maximum of finitely many affine pieces. Ties resolve to the
/// smaller piece index, which keeps attribution deterministic.
#[derive(Debug, Clone)]
pub struct MaxAffine {
    pub pieces: Vec<Affine>,
}

impl MaxAffine {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax_piece(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut val = f64::NEG_INFINITY;
        for (i, p) in self.pieces.iter().enumerate() {
            let v = p.eval(x);
            if v > val {
                val = v;
                best = i;
            }
        }
        best
    }

    pub fn argmax_pieces(&self, x: &[f64], slack: f64) -> Vec<usize> {
        let vals: Vec<f64> = self.pieces.iter().map(|p| p.eval(x)).collect();
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..vals.len()).filter(|&i| vals[i] >= hi - slack).collect()
    }
}

/// The scaled support function of a polytope as a max-affine family: one
/// piece `scale * v_q . x` per vertex.
pub fn support_pieces(p: &Polytope, scale: f64) -> MaxAffine {
    MaxAffine {
        pieces: p
            .vertices
            .iter()
            .map(|v| Affine {
                gradient: v.iter().map(|c| c * scale).collect(),
                bias: 0.0,
            })
            .collect(),
    }
}

/// Affine functions over a star of segments from the origin: piece i has
/// gradient `delta * g_i` (g_i the far endpoint of segment i) and is zero
/// at the cap tangency point `(1 - r0) * g_i / |g_i|` on the unit sphere.
/// The spherical caps `{L_i >= 0} ∩ B1` must be pairwise disjoint, which
/// constrains the angles between segments against the cap aperture.
pub fn y_obstacle_affines(
    directions: &[Vec<f64>],
    delta: f64,
    r0: f64,
) -> Result<Vec<Affine>> {
    if directions.len() < 2 {
        return Err(Error::Geometry(
            "star obstacle needs at least 2 segments".into(),
        ));
    }
    if !(delta > 0.0) || !(r0 > 0.0 && r0 < 1.0) {
        return Err(Error::Geometry(format!(
            "star obstacle scale/clearance out of range: delta = {delta}, r0 = {r0}"
        )));
    }
    let norms: Vec<f64> = directions.iter().map(|g| linalg::norm(g)).collect();
    if norms.iter().any(|&n| n <= 1e-12) {
        return Err(Error::Geometry("zero-length segment".into()));
    }
    // Cap around direction i has angular radius arccos(1 - r0); two caps
    // are disjoint iff the angle between their axes exceeds the sum.
    let aperture = (1.0 - r0).acos();
    for i in 0..directions.len() {
        for j in (i + 1)..directions.len() {
            let cosang = (linalg::dot(&directions[i], &directions[j])
                / (norms[i] * norms[j]))
                .clamp(-1.0, 1.0);
            if cosang.acos() <= 2.0 * aperture + 1e-9 {
                return Err(Error::Geometry(format!(
                    "caps of segments {i} and {j} overlap: angle {:.4} rad <= {:.4} rad",
                    cosang.acos(),
                    2.0 * aperture
                )));
            }
        }
    }
    Ok(directions
        .iter()
        .zip(&norms)
        .map(|(g, n)| Affine {
            gradient: g.iter().map(|c| c * delta).collect(),
            bias: -delta * n * (1.0 - r0),
        })
        .collect())
}

/// Distance from `p` to the segment `[a, b]`.
pub fn dist_point_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = linalg::dot(&ab, &ab);
    let t = if len2 > 0.0 {
        (linalg::dot(&ap, &ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let closest: Vec<f64> = a.iter().zip(&ab).map(|(ai, d)| ai + t * d).collect();
    dist2(p, &closest).sqrt()
}

/// Distance from `p` to the ray `{ t * dir : t >= 0 }`.
pub fn dist_point_ray(p: &[f64], dir: &[f64]) -> f64 {
    let len2 = linalg::dot(dir, dir);
    if len2 <= 0.0 {
        return linalg::norm(p);
    }
    let t = (linalg::dot(p, dir) / len2).max(0.0);
    let closest: Vec<f64> = dir.iter().map(|d| t * d).collect();
    dist2(p, &closest).sqrt()
}

pub const PRESET_NAMES: [&str; 7] = [
    "point",
    "segment",
    "triangle",
    "square",
    "tetrahedron",
    "cube",
    "simplex4",
];

/// Catalog shapes, embedded into the last d coordinates of R^n.
pub fn preset(name: &str, n: usize) -> Result<Polytope> {
    if n == 0 || n > 4 {
        return Err(Error::Geometry(format!("ambient dimension {n} not in 1..=4")));
    }
    let embed = |rows: Vec<Vec<f64>>| -> Result<Polytope> {
        let d = rows[0].len();
        if d > n {
            return Err(Error::Geometry(format!(
                "preset '{name}' needs ambient dimension >= {d}, got {n}"
            )));
        }
        let pts: Vec<Vec<f64>> = rows
            .into_iter()
            .map(|r| {
                let mut p = vec![0.0; n];
                p[n - d..].copy_from_slice(&r);
                p
            })
            .collect();
        make_polytope(&pts)
    };
    match name {
        "point" => make_polytope(&[vec![0.0; n]]),
        "segment" => embed(vec![vec![1.0], vec![-1.0]]),
        "triangle" => {
            let s = 3.0f64.sqrt() / 2.0;
            embed(vec![vec![0.0, 1.0], vec![-s, -0.5], vec![s, -0.5]])
        }
        "square" => embed(vec![
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
        ]),
        "tetrahedron" => embed(vec![
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 1.0],
        ]),
        "cube" => {
            let mut rows = Vec::new();
            for sx in [-1.0, 1.0] {
                for sy in [-1.0, 1.0] {
                    for sz in [-1.0, 1.0] {
                        rows.push(vec![sx, sy, sz]);
                    }
                }
            }
            embed(rows)
        }
        "simplex4" => {
            // Regular 4-simplex: project e_i - (1/5, ..., 1/5) from the
            // zero-sum hyperplane of R^5, then rescale to circumradius 1.
            let span: Vec<Vec<f64>> = (0..4)
                .map(|i| {
                    let mut v = vec![0.0; 5];
                    v[i] = 1.0;
                    v[4] = -1.0;
                    v
                })
                .collect();
            let basis = linalg::orthonormal_span(&span, 1e-12);
            let radius = (0.8f64).sqrt();
            let rows: Vec<Vec<f64>> = (0..5)
                .map(|i| {
                    let mut q = vec![-0.2; 5];
                    q[i] += 1.0;
                    basis
                        .iter()
                        .map(|b| linalg::dot(b, &q) / radius)
                        .collect()
                })
                .collect();
            embed(rows)
        }
        other => Err(Error::Geometry(format!(
            "unknown preset '{other}' (expected one of {PRESET_NAMES:?})"
        ))),
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Visit every k-subset of 0..n in lexicographic order.
fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] + (k - i) < n {
                idx[i] += 1;
                for j in (i + 1)..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}
