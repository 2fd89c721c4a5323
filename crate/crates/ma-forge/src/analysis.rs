//! Post-solve analysis: contact-set extraction and its decomposition into
//! normal-cone pieces, Dirac coefficients, singular-set diagnostics of the
//! transformed solution, far-field fits, and convexity checks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{self, Affine, Polytope, Stratum};
use crate::grid::{second_difference, ScalarField, TensorGrid, MAX_DIM};
use crate::legendre;
use crate::linalg;
use crate::ma_op;
use crate::{Error, Result};

/// Contact threshold for a run with spacing `h` and update tolerance
/// `tol_r`. Must dominate the solver's iteration tail while staying below
/// the detachment gap of the first off-contact ring, which scales like h².
pub fn contact_tol(h: f64, tol_r: f64) -> f64 {
    (10.0 * tol_r).max(0.1 * h * h)
}

/// One stratum of the normal fan touched by a connected contact component.
#[derive(Debug, Clone)]
pub struct StratumTouch {
    pub level: usize,
    pub component_id: usize,
    pub nodes: usize,
    /// A node of this stratum inside the component carrying a full ball of
    /// contact of radius 2h; for a full-dimensional stratum the ball also
    /// stays inside the stratum itself.
    pub ball: bool,
}

/// Connected component of the contact mask under face adjacency.
#[derive(Debug, Clone)]
pub struct Component {
    pub nodes: Vec<usize>,
    pub strata: Vec<StratumTouch>,
}

/// Contact nodes owned by the normal cone of one vertex. Nodes on cone
/// boundaries belong to several pieces; the weighted count splits them
/// evenly, so piece volumes add up to the total contact volume.
#[derive(Debug, Clone)]
pub struct Piece {
    pub vertex: usize,
    pub nodes: Vec<usize>,
    pub volume: f64,
    /// A node whose full 2h-ball is contact owned by this cone alone.
    pub interior_ball: Option<usize>,
}

/// Shared nodes of two cone pieces.
#[derive(Debug, Clone)]
pub struct Meeting {
    pub vertices: (usize, usize),
    pub nodes: Vec<usize>,
    /// Subset classified exactly to the stratum over the joining edge.
    pub stratum_nodes: Vec<usize>,
    /// A stratum node carrying a full 2h-ball of contact.
    pub ball_node: Option<usize>,
}

/// The contact set of an obstacle run and its decompositions.
#[derive(Debug, Clone)]
pub struct ContactSet {
    pub tol: f64,
    pub mask: Vec<bool>,
    pub nodes: Vec<usize>,
    pub components: Vec<Component>,
    pub pieces: Vec<Piece>,
    pub meetings: Vec<Meeting>,
}

/// Integer offsets of the lattice ball of Euclidean radius 2 cells.
fn ball_offsets(dim: usize) -> Vec<[i64; MAX_DIM]> {
    let mut out = Vec::new();
    let mut cur = [0i64; MAX_DIM];
    fn rec(d: usize, dim: usize, cur: &mut [i64; MAX_DIM], out: &mut Vec<[i64; MAX_DIM]>) {
        if d == dim {
            let q: i64 = cur[..dim].iter().map(|o| o * o).sum();
            if q <= 4 {
                out.push(*cur);
            }
            return;
        }
        for o in -2..=2 {
            cur[d] = o;
            rec(d + 1, dim, cur, out);
        }
        cur[d] = 0;
    }
    rec(0, dim, &mut cur, &mut out);
    out
}

fn wall_distance_cells(grid: &TensorGrid, flat: usize) -> usize {
    let idx = grid.multi(flat);
    (0..grid.dim)
        .map(|d| idx[d].min(grid.m - 1 - idx[d]))
        .min()
        .unwrap_or(0)
}

/// Stratum of a slope-space point, with the apex of a full-dimensional fan
/// folded into the level-0 stratum over the improper face.
pub fn classify_with_apex(omega: &Polytope, x: &[f64]) -> Result<Stratum> {
    match omega.classify(x) {
        Ok(s) => Ok(s),
        Err(_) if omega.dim == omega.ambient => {
            let (component_id, face) = omega
                .faces()
                .iter()
                .enumerate()
                .find(|(_, f)| f.dim == omega.dim)
                .map(|(i, f)| (i, f.ids.clone()))
                .expect("the improper face is always listed");
            Ok(Stratum {
                level: 0,
                component_id,
                face,
                contact_permitted: false,
            })
        }
        Err(e) => Err(e),
    }
}

/// Extract the contact set `{u_star - psi <= tol_c}` and decompose it:
/// face-adjacency components with their stratum contacts, per-vertex
/// normal-cone pieces, and pairwise piece meetings. Fails when contact
/// comes within two cells of the computational boundary, since the set is
/// then likely truncated by the domain.
pub fn contact_set(
    u_star: &ScalarField,
    psi: &ScalarField,
    omega: &Polytope,
    tol_c: f64,
) -> Result<ContactSet> {
    let grid = u_star.grid;
    if psi.grid != grid {
        return Err(Error::Analysis(
            "solution and obstacle live on different grids".into(),
        ));
    }
    if omega.ambient != grid.dim {
        return Err(Error::Analysis(format!(
            "polytope dimension {} does not match the grid dimension {}",
            omega.ambient, grid.dim
        )));
    }
    let n = grid.dim;
    let h = grid.h();

    let mask: Vec<bool> = u_star
        .data
        .iter()
        .zip(&psi.data)
        .map(|(u, p)| u - p <= tol_c)
        .collect();
    let nodes: Vec<usize> = (0..grid.len()).filter(|&f| mask[f]).collect();
    for &f in &nodes {
        if wall_distance_cells(&grid, f) <= 2 {
            return Err(Error::Analysis(
                "contact set reaches within 2h of the computational boundary; \
                 enlarge the domain"
                    .into(),
            ));
        }
    }

    // Per-node stratum classification, shared by all decompositions.
    let mut strata: BTreeMap<usize, Stratum> = BTreeMap::new();
    for &f in &nodes {
        let p = grid.point(f);
        strata.insert(f, classify_with_apex(omega, &p[..n])?);
    }

    let ball = ball_offsets(n);
    let ball_flats = |flat: usize| -> Vec<usize> {
        ball.iter()
            .map(|o| (flat as i64 + grid.offset(*o)) as usize)
            .collect()
    };
    let full_contact_ball = |flat: usize| ball_flats(flat).iter().all(|&g| mask[g]);

    // Face-adjacency components by flood fill.
    let mut comp_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut components: Vec<Component> = Vec::new();
    let axis_offsets: Vec<i64> = (0..n)
        .flat_map(|d| {
            let mut dir = [0i64; MAX_DIM];
            dir[d] = 1;
            let off = grid.offset(dir);
            [off, -off]
        })
        .collect();
    for &start in &nodes {
        if comp_of.contains_key(&start) {
            continue;
        }
        let id = components.len();
        let mut queue = vec![start];
        let mut members = Vec::new();
        comp_of.insert(start, id);
        while let Some(f) = queue.pop() {
            members.push(f);
            for &off in &axis_offsets {
                let g = (f as i64 + off) as usize;
                if mask[g] && !comp_of.contains_key(&g) {
                    comp_of.insert(g, id);
                    queue.push(g);
                }
            }
        }
        members.sort_unstable();

        // Which strata the component touches, and whether each carries a
        // contact ball. A full-dimensional stratum must contain the whole
        // ball; lower-dimensional strata cannot, so there the ball is
        // contact centered on the stratum.
        let mut touches: BTreeMap<(usize, usize), (usize, bool)> = BTreeMap::new();
        for &f in &members {
            let s = &strata[&f];
            let key = (s.level, s.component_id);
            let entry = touches.entry(key).or_insert((0, false));
            entry.0 += 1;
            if !entry.1 && full_contact_ball(f) {
                let inside = if s.level == n {
                    ball_flats(f)
                        .iter()
                        .all(|g| strata[g].component_id == s.component_id)
                } else {
                    true
                };
                entry.1 = inside;
            }
        }
        components.push(Component {
            nodes: members,
            strata: touches
                .into_iter()
                .map(|((level, component_id), (count, ball))| StratumTouch {
                    level,
                    component_id,
                    nodes: count,
                    ball,
                })
                .collect(),
        });
    }

    // Normal-cone ownership per contact node.
    let mut owners: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &f in &nodes {
        let p = grid.point(f);
        let own: Vec<usize> = (0..omega.vertices.len())
            .filter(|&q| omega.normal_cone_contains(q, &p[..n]))
            .collect();
        if own.is_empty() {
            return Err(Error::Analysis(
                "a contact node belongs to no normal cone".into(),
            ));
        }
        owners.insert(f, own);
    }

    let cell = h.powi(n as i32);
    let mut pieces: Vec<Piece> = Vec::new();
    for q in 0..omega.vertices.len() {
        let members: Vec<usize> = nodes
            .iter()
            .copied()
            .filter(|f| owners[f].contains(&q))
            .collect();
        if members.is_empty() {
            continue;
        }
        let weighted: f64 = members.iter().map(|f| 1.0 / owners[f].len() as f64).sum();
        let interior_ball = members
            .iter()
            .copied()
            .find(|&f| {
                owners[&f].len() == 1
                    && full_contact_ball(f)
                    && ball_flats(f)
                        .iter()
                        .all(|g| owners[g] == vec![q])
            });
        pieces.push(Piece {
            vertex: q,
            nodes: members,
            volume: cell * weighted,
            interior_ball,
        });
    }

    let mut meetings: Vec<Meeting> = Vec::new();
    for a in 0..pieces.len() {
        for b in (a + 1)..pieces.len() {
            let (qa, qb) = (pieces[a].vertex, pieces[b].vertex);
            let shared: Vec<usize> = pieces[a]
                .nodes
                .iter()
                .copied()
                .filter(|f| owners[f].contains(&qb))
                .collect();
            if shared.is_empty() {
                continue;
            }
            let pair = {
                let mut p = vec![qa, qb];
                p.sort_unstable();
                p
            };
            let stratum_nodes: Vec<usize> = shared
                .iter()
                .copied()
                .filter(|f| strata[f].face == pair)
                .collect();
            let ball_node = stratum_nodes
                .iter()
                .copied()
                .find(|&f| full_contact_ball(f));
            meetings.push(Meeting {
                vertices: (qa, qb),
                nodes: shared,
                stratum_nodes,
                ball_node,
            });
        }
    }

    Ok(ContactSet {
        tol: tol_c,
        mask,
        nodes,
        components,
        pieces,
        meetings,
    })
}

/// Dirac coefficients: per vertex, the volume of contact owned by its
/// normal cone, boundary nodes split evenly among owners.
pub fn dirac_coefficients(set: &ContactSet) -> Vec<(usize, f64)> {
    set.pieces.iter().map(|p| (p.vertex, p.volume)).collect()
}

/// Contact nodes with at least one face neighbor off the contact set.
pub fn contact_rim(set: &ContactSet, grid: &TensorGrid) -> Vec<usize> {
    mask_rim(&set.mask, grid)
}

/// Marked nodes with at least one face neighbor unmarked; nodes on the
/// grid wall count as rim.
pub fn mask_rim(mask: &[bool], grid: &TensorGrid) -> Vec<usize> {
    let n = grid.dim;
    (0..grid.len())
        .filter(|&f| mask[f])
        .filter(|&f| {
            let idx = grid.multi(f);
            (0..n).any(|d| {
                if idx[d] == 0 || idx[d] == grid.m - 1 {
                    return true;
                }
                let mut dir = [0i64; MAX_DIM];
                dir[d] = 1;
                let off = grid.offset(dir);
                !mask[(f as i64 + off) as usize] || !mask[(f as i64 - off) as usize]
            })
        })
        .collect()
}

/// Exact Euclidean distance (in cells) from every node to the nearest
/// marked node, by the separable lower-envelope transform per axis.
fn distance_field(grid: &TensorGrid, marked: &[bool]) -> Vec<f64> {
    const INF: f64 = 1e30;
    let m = grid.m;
    let n = grid.dim;
    let mut sq: Vec<f64> = marked.iter().map(|&b| if b { 0.0 } else { INF }).collect();

    let mut ext = [1usize; MAX_DIM];
    for e in ext.iter_mut().take(n) {
        *e = m;
    }
    let mut f = vec![0.0f64; m];
    let mut dist = vec![0.0f64; m];
    let mut v = vec![0usize; m];
    let mut z = vec![0.0f64; m + 1];
    for axis in 0..n {
        let mut dir = [0i64; MAX_DIM];
        dir[axis] = 1;
        let stride = grid.offset(dir) as usize;
        let lines = grid.len() / m;
        for line in 0..lines {
            // Base index of this pencil: expand the line counter over the
            // non-axis dimensions.
            let mut rem = line;
            let mut base = 0usize;
            for d in 0..n {
                if d == axis {
                    continue;
                }
                let mut ax_dir = [0i64; MAX_DIM];
                ax_dir[d] = 1;
                let s = grid.offset(ax_dir) as usize;
                base += (rem % ext[d]) * s;
                rem /= ext[d];
            }
            for (j, fv) in f.iter_mut().enumerate() {
                *fv = sq[base + j * stride];
            }
            // Lower envelope of the parabolas j -> f[j] + (i - j)^2.
            let mut k = 0usize;
            v[0] = 0;
            z[0] = -INF;
            z[1] = INF;
            for j in 1..m {
                if f[j] >= INF {
                    continue;
                }
                loop {
                    let p = v[k];
                    let s = if f[p] >= INF {
                        -INF
                    } else {
                        ((f[j] + (j * j) as f64) - (f[p] + (p * p) as f64))
                            / (2.0 * (j as f64 - p as f64))
                    };
                    if s <= z[k] && k > 0 {
                        k -= 1;
                    } else {
                        k += 1;
                        v[k] = j;
                        z[k] = s;
                        z[k + 1] = INF;
                        break;
                    }
                }
            }
            let mut k = 0usize;
            for (i, dv) in dist.iter_mut().enumerate() {
                while z[k + 1] < i as f64 {
                    k += 1;
                }
                let j = v[k];
                *dv = if f[j] >= INF {
                    INF
                } else {
                    f[j] + (i as f64 - j as f64) * (i as f64 - j as f64)
                };
            }
            for (i, dv) in dist.iter().enumerate() {
                sq[base + i * stride] = *dv;
            }
        }
    }
    sq.iter().map(|&d| if d >= INF { INF } else { d.sqrt() }).collect()
}

/// Hausdorff distance between the contact set and the ball of the given
/// radius: how far contact sticks out of the ball, and how far interior
/// ball nodes can be from the nearest contact node.
pub fn contact_ball_hausdorff(set: &ContactSet, grid: &TensorGrid, radius: f64) -> f64 {
    let n = grid.dim;
    let h = grid.h();
    let mut out = 0.0f64;
    for &f in &set.nodes {
        let p = grid.point(f);
        let r: f64 = p[..n].iter().map(|c| c * c).sum::<f64>().sqrt();
        out = out.max(r - radius);
    }
    let dist = distance_field(grid, &set.mask);
    let mut cover = 0.0f64;
    for flat in 0..grid.len() {
        let p = grid.point(flat);
        let r: f64 = p[..n].iter().map(|c| c * c).sum::<f64>().sqrt();
        if r <= radius {
            cover = cover.max(dist[flat] * h);
        }
    }
    out.max(cover)
}

/// Contact decomposition for star obstacles: the floor piece around the
/// origin, one piece per cap, and the nodes held by the spherical wall.
#[derive(Debug, Clone)]
pub struct YContactSet {
    pub tol: f64,
    pub nodes: Vec<usize>,
    pub central: Vec<usize>,
    pub central_volume: f64,
    pub external: Vec<Vec<usize>>,
    pub external_volumes: Vec<f64>,
    pub shell: Vec<usize>,
    /// Face-adjacent piece pairs; label 0 is the central piece and label
    /// 1 + i the piece of cap i.
    pub adjacency: Vec<(usize, usize)>,
}

/// Split the contact nodes of a star run by the active obstacle piece.
pub fn y_contact_set(
    u_star: &ScalarField,
    psi: &ScalarField,
    caps: &[Affine],
    tol_c: f64,
) -> Result<YContactSet> {
    let grid = u_star.grid;
    if psi.grid != grid {
        return Err(Error::Analysis(
            "solution and obstacle live on different grids".into(),
        ));
    }
    let n = grid.dim;
    let h = grid.h();
    let cell = h.powi(n as i32);

    let mask: Vec<bool> = u_star
        .data
        .iter()
        .zip(&psi.data)
        .map(|(u, p)| u - p <= tol_c)
        .collect();
    let nodes: Vec<usize> = (0..grid.len()).filter(|&f| mask[f]).collect();

    // Label per contact node: 0 the floor, 1 + i cap i, usize::MAX the
    // spherical wall (obstacle above every affine piece).
    let label = |flat: usize| -> usize {
        let p = grid.point(flat);
        let x = &p[..n];
        let mut best = 0usize;
        let mut val = 0.0f64;
        for (i, c) in caps.iter().enumerate() {
            let v = c.eval(x);
            if v > val {
                val = v;
                best = 1 + i;
            }
        }
        if psi.data[flat] > val + 1e-12 * (1.0 + val.abs()) {
            usize::MAX
        } else {
            best
        }
    };
    let labels: BTreeMap<usize, usize> = nodes.iter().map(|&f| (f, label(f))).collect();

    // The barrier part of the obstacle carries the boundary data, so the
    // solution legitimately sits on it out to the box wall; only contact
    // with the floor or a cap must keep clear of the boundary.
    for (&f, &l) in &labels {
        if l != usize::MAX && wall_distance_cells(&grid, f) <= 2 {
            return Err(Error::Analysis(
                "cap or floor contact reaches within 2h of the computational \
                 boundary; enlarge the domain"
                    .into(),
            ));
        }
    }

    let mut central = Vec::new();
    let mut external = vec![Vec::new(); caps.len()];
    let mut shell = Vec::new();
    for &f in &nodes {
        match labels[&f] {
            0 => central.push(f),
            usize::MAX => shell.push(f),
            l => external[l - 1].push(f),
        }
    }

    let mut adjacency = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for &f in &nodes {
        let la = labels[&f];
        if la == usize::MAX {
            continue;
        }
        for d in 0..n {
            let mut dir = [0i64; MAX_DIM];
            dir[d] = 1;
            let off = grid.offset(dir);
            for g in [(f as i64 + off) as usize, (f as i64 - off) as usize] {
                if let Some(&lb) = labels.get(&g) {
                    if lb != usize::MAX && lb != la {
                        let pair = (la.min(lb), la.max(lb));
                        if seen.insert(pair) {
                            adjacency.push(pair);
                        }
                    }
                }
            }
        }
    }
    adjacency.sort_unstable();

    Ok(YContactSet {
        tol: tol_c,
        central_volume: cell * central.len() as f64,
        external_volumes: external.iter().map(|e| cell * e.len() as f64).collect(),
        nodes,
        central,
        external,
        shell,
        adjacency,
    })
}

/// Contact nodes of a star run with a face neighbor in a different piece:
/// the creases where one-dimensional subgradients live.
pub fn y_interface_nodes(yset: &YContactSet, grid: &TensorGrid) -> Vec<usize> {
    let mut label = vec![-1i64; grid.len()];
    for &f in &yset.nodes {
        label[f] = 0;
    }
    for &f in &yset.central {
        label[f] = 1;
    }
    for (i, ext) in yset.external.iter().enumerate() {
        for &f in ext {
            label[f] = 2 + i as i64;
        }
    }
    let mut nodes = Vec::new();
    for &f in &yset.nodes {
        let idx = grid.multi(f);
        'scan: for d in 0..grid.dim {
            let mut dir = [0i64; MAX_DIM];
            dir[d] = 1;
            let off = grid.offset(dir);
            for s in [-1i64, 1] {
                if (s < 0 && idx[d] == 0) || (s > 0 && idx[d] + 1 == grid.m) {
                    continue;
                }
                let g = (f as i64 + s * off) as usize;
                if label[g] >= 0 && label[g] != label[f] {
                    nodes.push(f);
                    break 'scan;
                }
            }
        }
    }
    nodes
}

/// Line segment in slope space; a degenerate segment is a point.
#[derive(Debug, Clone)]
pub struct Segment {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// The scaled edge skeleton of a polytope; a polytope without edges
/// contributes its vertices as degenerate segments.
pub fn polytope_skeleton(omega: &Polytope, scale: f64) -> Vec<Segment> {
    let scaled = |v: &Vec<f64>| -> Vec<f64> { v.iter().map(|c| c * scale).collect() };
    if omega.edges.is_empty() {
        return omega
            .vertices
            .iter()
            .map(|v| Segment {
                a: scaled(v),
                b: scaled(v),
            })
            .collect();
    }
    omega
        .edges
        .iter()
        .map(|&(i, j)| Segment {
            a: scaled(&omega.vertices[i]),
            b: scaled(&omega.vertices[j]),
        })
        .collect()
}

/// Slope-space segments of a star run: one segment from the origin to the
/// slope of each cap piece.
pub fn star_skeleton(directions: &[Vec<f64>], delta: f64) -> Vec<Segment> {
    directions
        .iter()
        .map(|g| Segment {
            a: vec![0.0; g.len()],
            b: g.iter().map(|c| c * delta).collect(),
        })
        .collect()
}

/// Distance to the union of segments; infinite for an empty skeleton.
pub fn skeleton_distance(skeleton: &[Segment], y: &[f64]) -> f64 {
    skeleton
        .iter()
        .map(|s| geometry::dist_point_segment(y, &s.a, &s.b))
        .fold(f64::INFINITY, f64::min)
}

fn segment_samples(seg: &Segment, count: usize) -> Vec<Vec<f64>> {
    let steps = count.max(2) - 1;
    (0..=steps)
        .map(|k| {
            let t = k as f64 / steps as f64;
            seg.a
                .iter()
                .zip(&seg.b)
                .map(|(a, b)| a + t * (b - a))
                .collect()
        })
        .collect()
}

/// Largest |value| of the transformed solution over skeleton samples,
/// evaluated exactly from the primal field.
pub fn skeleton_value_max(u_star: &ScalarField, skeleton: &[Segment], per_segment: usize) -> f64 {
    let mut out = 0.0f64;
    for seg in skeleton {
        for y in segment_samples(seg, per_segment) {
            out = out.max(legendre::conjugate_value_at(u_star, &y).abs());
        }
    }
    out
}

/// Deviation of the transformed solution from its best affine fit along
/// each segment, evaluated exactly from the primal field.
pub fn affine_residuals(
    u_star: &ScalarField,
    skeleton: &[Segment],
    per_segment: usize,
) -> Vec<f64> {
    skeleton
        .iter()
        .map(|seg| {
            let samples = segment_samples(seg, per_segment);
            let vals: Vec<f64> = samples
                .iter()
                .map(|y| legendre::conjugate_value_at(u_star, y))
                .collect();
            let ts: Vec<Vec<f64>> = (0..vals.len())
                .map(|k| vec![1.0, k as f64 / (vals.len() - 1).max(1) as f64])
                .collect();
            match linalg::least_squares(&ts, &vals) {
                Some(c) => vals
                    .iter()
                    .zip(&ts)
                    .map(|(v, t)| (v - c[0] - c[1] * t[1]).abs())
                    .fold(0.0, f64::max),
                None => 0.0,
            }
        })
        .collect()
}

/// Max of dist * |discrete Laplacian| over dyadic distance shells
/// `[d, 2d)` from the skeleton, for d = 2h, 4h, ... A field with a
/// cone-like kink has a Laplacian growing like 1/dist, so the profile is
/// the natural boundedness proxy.
pub fn shell_profile(u: &ScalarField, skeleton: &[Segment]) -> Vec<(f64, f64)> {
    let grid = u.grid;
    let n = grid.dim;
    let h = grid.h();
    let mut vals: Vec<(f64, f64)> = Vec::new();
    for flat in 0..grid.len() {
        if !grid.is_interior(grid.multi(flat), 1) {
            continue;
        }
        let p = grid.point(flat);
        let d = skeleton_distance(skeleton, &p[..n]);
        if d < 2.0 * h {
            continue;
        }
        let mut lap = 0.0;
        for axis in 0..n {
            let mut dir = [0i64; MAX_DIM];
            dir[axis] = 1;
            lap += second_difference(u, flat, dir);
        }
        vals.push((d, d * lap.abs()));
    }
    let mut out = Vec::new();
    let mut d = 2.0 * h;
    while d <= grid.half_width {
        let hi = 2.0 * d;
        let m = vals
            .iter()
            .filter(|(dist, _)| *dist >= d && *dist < hi)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        if m > f64::NEG_INFINITY {
            out.push((d, m));
        }
        d = hi;
    }
    out
}

/// Largest ratio between successive shell-profile entries; 1 means flat.
pub fn profile_growth(profile: &[(f64, f64)]) -> f64 {
    let mut out = 0.0f64;
    for w in profile.windows(2) {
        if w[0].1 > 1e-300 {
            out = out.max(w[1].1 / w[0].1);
        }
    }
    out.max(if profile.is_empty() { 0.0 } else { 1.0 })
}

/// Block-averaged unit-density check of the transformed solution's measure
/// away from the skeleton.
#[derive(Debug, Clone)]
pub struct DensityCheck {
    pub max_err: f64,
    pub min_density: f64,
    pub max_density: f64,
    pub blocks: usize,
}

/// Tile the dual grid into cubes of `2*block_half + 1` nodes and compare
/// the subgradient-image volume of each tile against its cell volume.
/// Pointwise second differences of a discrete conjugate are dominated by
/// slope quantization, so the measure of whole tiles is compared instead;
/// attribution errors at interior cell walls cancel exactly. Tiles are
/// eligible when every node keeps `clearance` away from the skeleton and
/// the tile stays clear of the outer 15% of the grid, where truncated
/// subgradient cells pile up.
pub fn unit_density_check(
    u: &ScalarField,
    skeleton: &[Segment],
    block_half: usize,
    clearance: f64,
    m_raster: usize,
) -> Result<DensityCheck> {
    let grid = u.grid;
    let n = grid.dim;
    let h = grid.h();
    let masses = ma_op::ma_masses(u, m_raster)?;

    let edge = 2 * block_half + 1;
    let margin = ((0.15 * grid.m as f64).ceil() as usize).max(2);
    let mut check = DensityCheck {
        max_err: 0.0,
        min_density: f64::INFINITY,
        max_density: f64::NEG_INFINITY,
        blocks: 0,
    };
    let cell = (edge as f64 * h).powi(n as i32);

    let mut base = [0usize; MAX_DIM];
    'tiles: loop {
        // Walk tile origins on a stride-`edge` lattice.
        let lo = margin;
        let hi = grid.m - margin;
        let mut ok = true;
        for d in 0..n {
            if base[d] < lo || base[d] + edge > hi {
                ok = false;
            }
        }
        if ok {
            let mut mass = 0.0;
            let mut eligible = true;
            let mut idx = base;
            'nodes: loop {
                let flat = grid.flat(idx);
                let p = grid.point(flat);
                if skeleton_distance(skeleton, &p[..n]) <= clearance {
                    eligible = false;
                    break 'nodes;
                }
                mass += masses[flat];
                for d in 0..n {
                    idx[d] += 1;
                    if idx[d] < base[d] + edge {
                        continue 'nodes;
                    }
                    idx[d] = base[d];
                }
                break 'nodes;
            }
            if eligible {
                let density = mass / cell;
                check.blocks += 1;
                check.max_err = check.max_err.max((density - 1.0).abs());
                check.min_density = check.min_density.min(density);
                check.max_density = check.max_density.max(density);
            }
        }
        for d in 0..n {
            base[d] += edge;
            if base[d] + edge <= grid.m {
                continue 'tiles;
            }
            base[d] = 0;
        }
        break 'tiles;
    }
    if check.blocks == 0 {
        return Err(Error::Analysis(
            "no tile clears the skeleton and the grid margin".into(),
        ));
    }
    Ok(check)
}

/// Measure balance over a slope-space ball: subgradient-image volume
/// against the ball volume plus the expected atom total.
#[derive(Debug, Clone)]
pub struct MassAccounting {
    pub measured: f64,
    pub ball_volume: f64,
    pub dirac_sum: f64,
    pub defect: f64,
    pub relative_defect: f64,
}

/// Compare the measure of `{|y| <= radius}` under the transformed solution
/// with ball volume + atom total. The ball volume is counted discretely
/// (cells of nodes inside), so cell-attribution errors at the ball surface
/// telescope against the measured term.
pub fn mass_accounting(
    u: &ScalarField,
    radius: f64,
    dirac_sum: f64,
    m_raster: usize,
) -> Result<MassAccounting> {
    if !(dirac_sum > 0.0) {
        return Err(Error::Analysis(
            "mass accounting needs a positive atom total".into(),
        ));
    }
    let grid = u.grid;
    let n = grid.dim;
    if radius > 0.8 * grid.half_width {
        return Err(Error::Analysis(format!(
            "accounting ball radius {radius} is too close to the dual half-width {}",
            grid.half_width
        )));
    }
    let region: Vec<usize> = (0..grid.len())
        .filter(|&flat| {
            let p = grid.point(flat);
            p[..n].iter().map(|c| c * c).sum::<f64>().sqrt() <= radius
        })
        .collect();
    let ball_volume = grid.h().powi(n as i32) * region.len() as f64;
    let measured = ma_op::ma_measure(u, &region, m_raster)?;
    let defect = measured - ball_volume - dirac_sum;
    Ok(MassAccounting {
        measured,
        ball_volume,
        dirac_sum,
        defect,
        relative_defect: defect / dirac_sum,
    })
}

/// Far-field fit of a radially dominated convex field.
#[derive(Debug, Clone)]
pub struct AsymptoticFit {
    pub kappa: f64,
    pub slope: f64,
    pub samples: usize,
    /// Set when the tail is below the fit floor, leaving the slope
    /// meaningless.
    pub indeterminate: bool,
}

/// Fit `f - |x|^2/2 = kappa + c r^slope` on the annulus `[r_lo, r_hi]` by
/// minimizing over kappa the residual of the linear fit of log|f - r^2/2
/// - kappa| against log r. The tail keeps one sign, so the search runs
/// once above and once below the data range.
pub fn asymptotic_fit(f: &ScalarField, r_lo: f64, r_hi: f64) -> Result<AsymptoticFit> {
    let grid = f.grid;
    let n = grid.dim;
    let mut lr = Vec::new();
    let mut vals = Vec::new();
    for flat in 0..grid.len() {
        let p = grid.point(flat);
        let r2: f64 = p[..n].iter().map(|c| c * c).sum();
        let r = r2.sqrt();
        if r >= r_lo && r <= r_hi {
            lr.push(r.ln());
            vals.push(f.data[flat] - 0.5 * r2);
        }
    }
    if vals.len() < 32 {
        return Err(Error::Analysis(format!(
            "annulus [{r_lo}, {r_hi}] holds only {} samples",
            vals.len()
        )));
    }
    let vmax = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let vmin = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = vmax - vmin;
    let floor = 1e-12 * (1.0 + vmax.abs().max(vmin.abs()));
    if spread < floor {
        return Ok(AsymptoticFit {
            kappa: 0.5 * (vmax + vmin),
            slope: 0.0,
            samples: vals.len(),
            indeterminate: true,
        });
    }

    // Residual of the best line through (log r, log|v - kappa|).
    let fit = |kappa: f64| -> (f64, f64) {
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        let m = vals.len() as f64;
        let logs: Vec<f64> = vals.iter().map(|v| (v - kappa).abs().ln()).collect();
        for (x, y) in lr.iter().zip(&logs) {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let denom = m * sxx - sx * sx;
        let slope = (m * sxy - sx * sy) / denom;
        let inter = (sy - slope * sx) / m;
        let sse: f64 = lr
            .iter()
            .zip(&logs)
            .map(|(x, y)| {
                let e = y - inter - slope * x;
                e * e
            })
            .sum();
        (sse, slope)
    };
    let golden = |mut a: f64, mut b: f64| -> (f64, f64, f64) {
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut fc = fit(c).0;
        let mut fd = fit(d).0;
        for _ in 0..200 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = fit(c).0;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = fit(d).0;
            }
        }
        let k = 0.5 * (a + b);
        let (sse, slope) = fit(k);
        (sse, k, slope)
    };
    let above = golden(vmax + floor, vmax + 3.0 * spread);
    let below = golden(vmin - 3.0 * spread, vmin - floor);
    let (_, kappa, slope) = if above.0 <= below.0 { above } else { below };
    Ok(AsymptoticFit {
        kappa,
        slope,
        samples: vals.len(),
        indeterminate: false,
    })
}

/// One sublevel cut of the convexity volume bound.
#[derive(Debug, Clone)]
pub struct SublevelCheck {
    pub volume: f64,
    pub depth: f64,
    pub required: f64,
    pub pass: bool,
}

/// Volume-over-depth constant: exact on the paraboloid, relaxed tenfold.
pub fn sublevel_constant(n: usize) -> f64 {
    let omega_n = match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => std::f64::consts::PI * std::f64::consts::PI / 2.0,
    };
    omega_n * 2.0f64.powf(n as f64 / 2.0) / 10.0
}

/// Check `|{f < cut}| >= c_n |min (f - cut)|^{n/2}` for each affine cut.
/// Fails when a sublevel set touches the grid boundary, since its volume
/// is then truncated.
pub fn sublevel_checks(f: &ScalarField, cuts: &[Affine]) -> Result<Vec<SublevelCheck>> {
    let grid = f.grid;
    let n = grid.dim;
    let cell = grid.h().powi(n as i32);
    let coef = sublevel_constant(n);
    cuts.iter()
        .map(|cut| {
            let mut count = 0usize;
            let mut min_g = f64::INFINITY;
            for flat in 0..grid.len() {
                let p = grid.point(flat);
                let g = f.data[flat] - cut.eval(&p[..n]);
                min_g = min_g.min(g);
                if g < 0.0 {
                    if !grid.is_interior(grid.multi(flat), 1) {
                        return Err(Error::Analysis(
                            "a sublevel set touches the grid boundary".into(),
                        ));
                    }
                    count += 1;
                }
            }
            let depth = (-min_g).max(0.0);
            let volume = cell * count as f64;
            let required = coef * depth.powf(n as f64 / 2.0);
            Ok(SublevelCheck {
                volume,
                depth,
                required,
                pass: volume >= required,
            })
        })
        .collect()
}

/// All sublevel cuts pass the volume bound.
pub fn sublevel_volume_check(f: &ScalarField, cuts: &[Affine]) -> Result<bool> {
    Ok(sublevel_checks(f, cuts)?.iter().all(|c| c.pass))
}

/// Estimate, per point, the affine dimension of the subgradient set of
/// a convex field. The forward and backward one-sided slopes along a
/// lattice direction bracket the set's extent there, so the gap between
/// them is its width in that direction. Widths at or below `tau`
/// everywhere read zero. Otherwise each coordinate-plane shadow of the
/// set is boxed by the eight in-plane support values; a shadow whose
/// support polygon keeps an area beyond the sliver a tilted segment can
/// leave reads two, else the point reads one. A single crease always
/// reads one this way, no matter how it is tilted against the axes.
/// One-sided slopes use the second-order end formula, so points need two
/// cells of interior margin.
pub fn subgradient_dim_check(f: &ScalarField, flats: &[usize], tau: f64) -> Result<Vec<usize>> {
    let grid = f.grid;
    let n = grid.dim;
    let h = grid.h();
    // Directions: the axes, then for each plane (i, j) the diagonals
    // e_i + e_j and e_i - e_j.
    let mut dirs: Vec<[i64; MAX_DIM]> = Vec::new();
    for axis in 0..n {
        let mut d = [0i64; MAX_DIM];
        d[axis] = 1;
        dirs.push(d);
    }
    let mut planes: Vec<(usize, usize, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut d = [0i64; MAX_DIM];
            d[i] = 1;
            d[j] = 1;
            let mut a = [0i64; MAX_DIM];
            a[i] = 1;
            a[j] = -1;
            planes.push((i, j, dirs.len(), dirs.len() + 1));
            dirs.push(d);
            dirs.push(a);
        }
    }
    flats
        .iter()
        .map(|&flat| {
            if !grid.is_interior(grid.multi(flat), 2) {
                return Err(Error::Analysis(
                    "sample point too close to the boundary for one-sided slopes".into(),
                ));
            }
            // Support values of the subgradient set: hi along each unit
            // direction, lo = -support along the opposite one.
            let mut hi = Vec::with_capacity(dirs.len());
            let mut lo = Vec::with_capacity(dirs.len());
            for dir in &dirs {
                let off = grid.offset(*dir);
                let step = h * (dir.iter().map(|&c| (c * c) as f64).sum::<f64>()).sqrt();
                let at = |k: i64| f.data[(flat as i64 + k * off) as usize];
                hi.push((-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * step));
                lo.push((3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * step));
            }
            let width = |k: usize| hi[k] - lo[k];
            if (0..dirs.len()).all(|k| width(k) <= tau) {
                return Ok(0);
            }
            let rt = std::f64::consts::FRAC_1_SQRT_2;
            for &(i, j, kd, ka) in &planes {
                // Shadow of the set on the (i, j) plane: axis box cut by
                // the two diagonal support strips.
                let poly = vec![[lo[i], lo[j]], [hi[i], lo[j]], [hi[i], hi[j]], [lo[i], hi[j]]];
                let poly = clip_halfplane(&poly, [rt, rt], hi[kd]);
                let poly = clip_halfplane(&poly, [-rt, -rt], -lo[kd]);
                let poly = clip_halfplane(&poly, [rt, -rt], hi[ka]);
                let poly = clip_halfplane(&poly, [-rt, rt], -lo[ka]);
                let scale = [i, j, kd, ka]
                    .into_iter()
                    .fold(tau, |m, k| m.max(width(k)));
                if polygon_area(&poly) > 3.0 * tau * scale {
                    return Ok(2);
                }
            }
            Ok(1)
        })
        .collect()
}

/// Largest subgradient dimension estimate over a random sample of
/// contact-boundary nodes: the rim of the contact mask plus the
/// interfaces between its pieces, restricted to nodes with two cells of
/// interior margin. Nodes whose full one-sided stencil stays in contact
/// see the piecewise affine obstacle exactly and get a tight slope
/// threshold; rim stencils reach into the detached zone, where the
/// solution grows like dist^(1+1/n) and one-sided slopes carry an
/// O(h^(1/3)) discretization excess, so those get a threshold above that
/// scale.
pub fn boundary_subgradient_max(
    u: &ScalarField,
    mask: &[bool],
    interfaces: &[usize],
    rim: &[usize],
    count: usize,
    seed: u64,
) -> Result<usize> {
    let grid = u.grid;
    let interior = |&f: &usize| grid.is_interior(grid.multi(f), 2);
    let mut pool: Vec<usize> = rim.iter().copied().filter(interior).collect();
    pool.extend(interfaces.iter().copied().filter(interior));
    pool.sort_unstable();
    pool.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample: Vec<usize> = if pool.len() <= count {
        pool
    } else {
        pool.choose_multiple(&mut rng, count).copied().collect()
    };
    let stencil_in_contact = |f: usize| {
        (0..grid.dim).all(|d| {
            let mut dir = [0i64; MAX_DIM];
            dir[d] = 1;
            let off = grid.offset(dir);
            (1..=2).all(|k| {
                mask[(f as i64 + k * off) as usize] && mask[(f as i64 - k * off) as usize]
            })
        })
    };
    let (exact, fattened): (Vec<usize>, Vec<usize>) =
        sample.into_iter().partition(|&f| stencil_in_contact(f));
    let tau_fat = 2.5 * grid.h().cbrt();
    let mut max_dim = 0;
    for (nodes, tau) in [(&exact, 0.1), (&fattened, tau_fat)] {
        let dims = subgradient_dim_check(u, nodes, tau)?;
        max_dim = max_dim.max(dims.into_iter().max().unwrap_or(0));
    }
    Ok(max_dim)
}

/// Affine cuts grazing the field at random anchor nodes: slope from the
/// centered gradient, lifted by a fixed grid-scale depth.
pub fn graze_cuts(u: &ScalarField, anchors: &[usize], count: usize, seed: u64) -> Vec<Affine> {
    let grid = u.grid;
    let n = grid.dim;
    let h = grid.h();
    let depth = (2.0 * h).powi(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cuts = Vec::with_capacity(count);
    if anchors.is_empty() {
        return cuts;
    }
    for _ in 0..count {
        let flat = anchors[rng.gen_range(0..anchors.len())];
        let mut gradient = vec![0.0; n];
        for (d, g) in gradient.iter_mut().enumerate() {
            let mut dir = [0i64; MAX_DIM];
            dir[d] = 1;
            let off = grid.offset(dir);
            *g = (u.data[(flat as i64 + off) as usize] - u.data[(flat as i64 - off) as usize])
                / (2.0 * h);
        }
        let p = grid.point(flat);
        let bias = u.data[flat]
            - gradient
                .iter()
                .zip(&p[..n])
                .map(|(a, b)| a * b)
                .sum::<f64>()
            + depth;
        cuts.push(Affine { gradient, bias });
    }
    cuts
}

/// Cut a convex polygon by the halfplane normal . y <= bound.
fn clip_halfplane(poly: &[[f64; 2]], normal: [f64; 2], bound: f64) -> Vec<[f64; 2]> {
    let inside = |p: &[f64; 2]| normal[0] * p[0] + normal[1] * p[1] <= bound;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for (k, p) in poly.iter().enumerate() {
        let q = &poly[(k + 1) % poly.len()];
        let (ip, iq) = (inside(p), inside(q));
        if ip {
            out.push(*p);
        }
        if ip != iq {
            let fp = normal[0] * p[0] + normal[1] * p[1] - bound;
            let fq = normal[0] * q[0] + normal[1] * q[1] - bound;
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let mut twice = 0.0;
    for (k, p) in poly.iter().enumerate() {
        let q = &poly[(k + 1) % poly.len()];
        twice += p[0] * q[1] - p[1] * q[0];
    }
    0.5 * twice.abs()
}

/// Distance from the nearest point of a planar cone spanned by `a`, `b`.
fn dist_point_cone2(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let aa = linalg::dot(a, a);
    let ab = linalg::dot(a, b);
    let bb = linalg::dot(b, b);
    let ax = linalg::dot(a, x);
    let bx = linalg::dot(b, x);
    let det = aa * bb - ab * ab;
    if det > 1e-30 {
        let s = (bb * ax - ab * bx) / det;
        let t = (aa * bx - ab * ax) / det;
        if s >= 0.0 && t >= 0.0 {
            let d2: f64 = x
                .iter()
                .enumerate()
                .map(|(i, xi)| {
                    let r = xi - s * a[i] - t * b[i];
                    r * r
                })
                .sum();
            return d2.max(0.0).sqrt();
        }
    }
    geometry::dist_point_ray(x, a).min(geometry::dist_point_ray(x, b))
}

/// Distance from `x` to the union of the low strata of the normal fan
/// (levels <= n/2), where contact is forbidden. For a full-dimensional
/// polytope these are the origin, the rays over the dual vertices, and in
/// four dimensions the planar cones over the dual edges. Lower-dimensional
/// polytopes whose fan has no low strata report an infinite distance.
pub fn forbidden_stratum_distance(omega: &Polytope, x: &[f64]) -> Result<f64> {
    let n = omega.ambient;
    if omega.dim < n {
        if 2 * (n - omega.dim) > n {
            return Ok(f64::INFINITY);
        }
        // The coarsest stratum is the normal space of the affine hull; any
        // deeper low stratum would need proper faces of dimension >= n/2.
        if omega.faces().iter().any(|f| f.dim < omega.dim && 2 * f.dim >= n) {
            return Err(Error::Analysis(
                "low strata over proper faces of a lower-dimensional polytope \
                 are not supported"
                    .into(),
            ));
        }
        let dirs: Vec<Vec<f64>> = omega
            .vertices
            .iter()
            .skip(1)
            .map(|v| {
                v.iter()
                    .zip(&omega.vertices[0])
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();
        let basis = linalg::orthonormal_span(&dirs, 1e-12);
        let d2: f64 = basis
            .iter()
            .map(|b| {
                let c = linalg::dot(b, x);
                c * c
            })
            .sum();
        return Ok(d2.sqrt());
    }

    let dual = omega.dual()?;
    let mut best = linalg::norm(x);
    for v in &dual.bounded.vertices {
        best = best.min(geometry::dist_point_ray(x, v));
    }
    if n >= 4 {
        for &(i, j) in &dual.bounded.edges {
            best = best.min(dist_point_cone2(
                x,
                &dual.bounded.vertices[i],
                &dual.bounded.vertices[j],
            ));
        }
    }
    Ok(best)
}
