//! Adaptive Simpson quadrature for the barrier profiles.

/// Integrate `f` over `[a, b]` to roughly `tol` (mixed absolute/relative).
///
/// Classic recursive Simpson with Richardson error control. The integrands
/// used here are smooth after substitution, so depth 50 is never reached;
/// the cap only guards against pathological inputs.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let (fd, fe) = (f(d), f(e));
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let err = left + right - whole;
    let scale = tol * (1.0 + (left + right).abs());
    if depth == 0 || err.abs() <= 15.0 * scale {
        return left + right + err / 15.0;
    }
    simpson_step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
        + simpson_step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(&|x| x * x * x, 0.0, 2.0, 1e-14);
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn matches_closed_form_log() {
        let v = adaptive_simpson(&|x| 1.0 / x, 1.0, std::f64::consts::E, 1e-13);
        assert!((v - 1.0).abs() < 1e-11, "got {v}");
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(adaptive_simpson(&|x| x, 3.0, 3.0, 1e-12), 0.0);
    }
}
