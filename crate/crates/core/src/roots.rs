//! Bracketing root finders.
//!
//! [`brent`] is the classic Brent–Dekker zero finder (inverse quadratic
//! interpolation safeguarded by bisection). [`invert_monotone`] wraps it for
//! the common case of inverting a strictly monotone scalar map.

use crate::error::{Error, Result};

/// Stopping rule for the bracketing solvers.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    /// Absolute tolerance on the bracket width.
    pub xtol: f64,
    /// Absolute tolerance on the residual `|f(x)|`.
    pub atol: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            xtol: 4.0 * f64::EPSILON,
            atol: 0.0,
            max_iter: 200,
        }
    }
}

impl Tolerance {
    pub fn xtol(mut self, xtol: f64) -> Self {
        self.xtol = xtol;
        self
    }

    pub fn atol(mut self, atol: f64) -> Self {
        self.atol = atol;
        self
    }
}

/// Find a zero of `f` in `[lo, hi]`. `f(lo)` and `f(hi)` must not share a sign.
pub fn brent<F>(mut f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Domain(format!("non-finite endpoint value on [{lo}, {hi}]")));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..tol.max_iter {
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 || fb.abs() <= tol.atol {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
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
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b);
    }
    Err(Error::NoConvergence {
        solver: "brent",
        iterations: tol.max_iter,
        residual: fb.abs(),
    })
}

/// Solve `f(x) = target` for `x` in `bracket`, where `f` is continuous and
/// strictly monotone there.
pub fn invert_monotone<F>(mut f: F, target: f64, bracket: (f64, f64), tol: Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    brent(|x| f(x) - target, bracket.0, bracket.1, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_inverse() {
        let x = invert_monotone(|x| x, 0.5, (0.0, 1.0), Tolerance::default()).unwrap();
        assert!((x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cube_inverse() {
        let x = invert_monotone(|x| x * x * x, 8.0, (0.0, 3.0), Tolerance::default()).unwrap();
        assert!((x - 2.0).abs() < 1e-14);
    }

    #[test]
    fn decreasing_map() {
        let x = invert_monotone(|x: f64| (-x).exp(), 0.25, (0.0, 5.0), Tolerance::default()).unwrap();
        assert!((x - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn missing_sign_change_is_an_error() {
        let err = invert_monotone(|x| x * x, -1.0, (0.0, 1.0), Tolerance::default()).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn residual_tolerance_stops_early() {
        let tol = Tolerance::default().atol(1e-3);
        let x = brent(|x| x - 0.3, 0.0, 1.0, tol).unwrap();
        assert!((x - 0.3).abs() <= 1e-3);
    }
}
