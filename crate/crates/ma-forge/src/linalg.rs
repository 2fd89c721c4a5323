//! Small dense kernels for dimensions up to 4 (plus tiny least squares).
//! Row-major `Vec<Vec<f64>>` throughout; partial pivoting everywhere.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Determinant by Gaussian elimination; consumes the matrix.
pub(crate) fn det(m: &mut [Vec<f64>]) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            for c in col..n {
                m[row][c] -= f * m[col][c];
            }
        }
    }
    det
}

/// Solve `a x = b` for square `a`; `None` when the pivot falls below `tol`.
pub(crate) fn solve(a: &[Vec<f64>], b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(*rhs);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[piv][col].abs() <= tol {
            return None;
        }
        m.swap(piv, col);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                for c in col..=n {
                    m[row][c] -= f * m[col][c];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Orthonormal basis of the span of `rows` (modified Gram-Schmidt, vectors
/// with residual below `tol` dropped).
pub(crate) fn orthonormal_span(rows: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        let mut v = row.clone();
        for b in &basis {
            let c = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let nv = norm(&v);
        if nv > tol {
            for vi in &mut v {
                *vi /= nv;
            }
            basis.push(v);
        }
    }
    basis
}

pub(crate) fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    orthonormal_span(rows, tol).len()
}

/// One-dimensional nullspace of the row span inside R^dim; `None` when the
/// nullspace is not exactly one-dimensional.
pub(crate) fn nullspace_dir(rows: &[Vec<f64>], dim: usize, tol: f64) -> Option<Vec<f64>> {
    let basis = orthonormal_span(rows, tol);
    if basis.len() + 1 != dim {
        return None;
    }
    for axis in 0..dim {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        for b in &basis {
            let c = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let nv = norm(&v);
        if nv > tol {
            for vi in &mut v {
                *vi /= nv;
            }
            return Some(v);
        }
    }
    None
}

/// Least squares fit of `y ~ X beta` via normal equations (few columns).
pub(crate) fn least_squares(xs: &[Vec<f64>], ys: &[f64]) -> Option<Vec<f64>> {
    let cols = xs.first()?.len();
    let mut ata = vec![vec![0.0; cols]; cols];
    let mut aty = vec![0.0; cols];
    for (x, y) in xs.iter().zip(ys) {
        for i in 0..cols {
            for j in 0..cols {
                ata[i][j] += x[i] * x[j];
            }
            aty[i] += x[i] * y;
        }
    }
    solve(&ata, &aty, 1e-300)
}
