use super::ToleranceConfig;
use crate::error::{Error, Result};

/// Brent's method on a sign-changing bracket.
///
/// Inverse quadratic / secant steps are accepted only while they stay inside
/// the bracket and shrink it fast enough; otherwise the step is a bisection.
/// Returns once `|f(x)| <= root_tol` or the bracket is narrower than `root_tol`.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cfg: &ToleranceConfig) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NonFinite("find_root"));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracketing { lo, hi, f_lo: fa, f_hi: fb });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..cfg.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * cfg.root_tol;
        let m = 0.5 * (c - b);
        if fb.abs() <= cfg.root_tol || m.abs() <= tol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::NonFinite("find_root"));
        }
    }
    Err(Error::Convergence {
        routine: "find_root",
        max_iter: cfg.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn analytic_roots() {
        let cfg = ToleranceConfig::default();
        let x = find_root(|x: f64| (-x).exp() - 0.5, 0.0, 10.0, &cfg).unwrap();
        assert_abs_diff_eq!(x, std::f64::consts::LN_2, epsilon = 1e-8);
        assert_abs_diff_eq!(find_root(|x| x, -1.0, 1.0, &cfg).unwrap(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn no_sign_change() {
        let cfg = ToleranceConfig::default();
        assert!(matches!(
            find_root(|x| x * x + 1.0, 0.0, 1.0, &cfg),
            Err(Error::Bracketing { .. })
        ));
    }

    #[test]
    fn iteration_budget() {
        let cfg = ToleranceConfig { max_iter: 2, root_tol: 1e-300, ..Default::default() };
        assert!(matches!(
            find_root(|x: f64| x.powi(3) - 2.0, 0.0, 2.0, &cfg),
            Err(Error::Convergence { .. })
        ));
    }

    #[test]
    fn steep_and_flat_functions() {
        let cfg = ToleranceConfig::default();
        let x = find_root(|x: f64| (x - 0.3).powi(3), -5.0, 7.0, &cfg).unwrap();
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-2);
        let x = find_root(|x: f64| (50.0 * (x - 1.2)).tanh(), 0.0, 3.0, &cfg).unwrap();
        assert_abs_diff_eq!(x, 1.2, epsilon = 1e-8);
    }
}
