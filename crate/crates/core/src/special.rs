//! Elliptic integrals of the first kind and the Jacobi amplitude.
//!
//! `F(φ, k)` and `K(k)` are evaluated through Carlson's symmetric integral
//! `R_F` with the duplication theorem. The amplitude `am(t, k)` is the inverse
//! of `F` in `φ`. All functions are extended quasi-periodically to the whole
//! real line:
//!
//! ```text
//! F(φ + nπ, k) = F(φ, k) + 2n K(k)
//! am(t + 2n K(k), k) = am(t, k) + nπ
//! ```
//!
//! The modulus convention is `k` (not the parameter `m = k²`).

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

// π split into a double and its rounding error, for compensated reduction.
const PI_HI: f64 = PI;
const PI_LO: f64 = 1.224_646_799_147_353_2e-16;

/// Elliptic modulus `k` with `0 ≤ k < 1`, stored with its complement
/// `1 - k²` so that moduli close to one keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    k: f64,
    kc2: f64,
}

impl Modulus {
    pub fn new(k: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&k) {
            return Err(Error::Domain(format!(
                "elliptic modulus must satisfy 0 <= k < 1, got {k}"
            )));
        }
        Ok(Modulus {
            k,
            kc2: (1.0 - k) * (1.0 + k),
        })
    }

    /// Build from the complementary parameter `1 - k²`.
    pub fn from_complement_sq(kc2: f64) -> Result<Self> {
        if !(kc2 > 0.0 && kc2 <= 1.0) {
            return Err(Error::Domain(format!(
                "complementary parameter must lie in (0, 1], got {kc2}"
            )));
        }
        Ok(Modulus {
            k: (1.0 - kc2).sqrt(),
            kc2,
        })
    }

    pub fn value(self) -> f64 {
        self.k
    }

    /// `1 - k²`.
    pub fn complement_sq(self) -> f64 {
        self.kc2
    }
}

/// Carlson's symmetric integral
/// `R_F(x, y, z) = ½ ∫_0^∞ dt / √((t+x)(t+y)(t+z))`.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> Result<f64> {
    if !(x.is_finite() && y.is_finite() && z.is_finite()) {
        return Err(Error::Domain("carlson_rf arguments must be finite".into()));
    }
    if x < 0.0 || y < 0.0 || z < 0.0 {
        return Err(Error::Domain(format!("carlson_rf({x}, {y}, {z}): negative argument")));
    }
    let zeros = [x, y, z].iter().filter(|&&v| v == 0.0).count();
    if zeros >= 2 {
        return Err(Error::Domain(format!(
            "carlson_rf({x}, {y}, {z}): at most one argument may be zero"
        )));
    }

    let (mut x, mut y, mut z) = (x, y, z);
    let mut a = (x + y + z) / 3.0;
    // Duplication stops once every deviation is below 1e-3 relative:
    // the fifth-order tail is then ~1e-18.
    for _ in 0..100 {
        let dev = (a - x).abs().max((a - y).abs()).max((a - z).abs());
        if dev <= 1e-3 * a.abs() {
            break;
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * sy + sy * sz + sz * sx;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        a = 0.25 * (a + lambda);
    }
    let dx = (a - x) / a;
    let dy = (a - y) / a;
    let dz = -(dx + dy);
    let e2 = dx * dy - dz * dz;
    let e3 = dx * dy * dz;
    let series = 1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0 - 5.0 * e2 * e2 * e2 / 208.0
        + 3.0 * e3 * e3 / 104.0
        + e2 * e2 * e3 / 16.0;
    Ok(series / a.sqrt())
}

/// Split `φ = φ₀ + nπ` with `φ₀ ∈ [-π/2, π/2)`.
pub fn reduce_amplitude(phi: f64) -> (f64, i64) {
    let n = (phi / PI + 0.5).floor();
    let reduced = n.mul_add(-PI_HI, phi) - n * PI_LO;
    // Rounding may push the remainder just outside the half-open window.
    if reduced >= FRAC_PI_2 {
        (reduced - PI_HI - PI_LO, n as i64 + 1)
    } else if reduced < -FRAC_PI_2 {
        (reduced + PI_HI + PI_LO, n as i64 - 1)
    } else {
        (reduced, n as i64)
    }
}

/// Complete elliptic integral of the first kind `K(k) = F(π/2, k)`.
pub fn ellip_k(k: Modulus) -> f64 {
    // y = 1 - k² > 0 and z = 1 > 0, so R_F cannot fail.
    carlson_rf(0.0, k.complement_sq(), 1.0).expect("valid modulus")
}

/// `K(k)` by the arithmetic–geometric mean, `π / (2 agm(1, √(1-k²)))`.
pub fn ellip_k_agm(k: Modulus) -> f64 {
    let mut a = 1.0_f64;
    let mut b = k.complement_sq().sqrt();
    for _ in 0..64 {
        if (a - b).abs() <= 2.0 * f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    PI / (a + b)
}

/// `F(φ, k)` on the principal window `|φ| ≤ π/2`.
fn ellip_f_principal(phi: f64, k: Modulus) -> f64 {
    let (s, c) = phi.sin_cos();
    let ks = k.k * s;
    let y = (1.0 - ks) * (1.0 + ks);
    s * carlson_rf(c * c, y, 1.0).expect("valid modulus")
}

/// Incomplete elliptic integral of the first kind
/// `F(φ, k) = ∫_0^φ dϑ / √(1 - k² sin²ϑ)` for every real `φ`.
pub fn ellip_f(phi: f64, k: Modulus) -> f64 {
    let (reduced, n) = reduce_amplitude(phi);
    let base = ellip_f_principal(reduced, k);
    if n == 0 {
        base
    } else {
        base + 2.0 * n as f64 * ellip_k(k)
    }
}

/// Jacobi amplitude: the `φ` with `F(φ, k) = t`.
pub fn jacobi_am(t: f64, k: Modulus) -> f64 {
    if k.k == 0.0 {
        return t;
    }
    let kk = ellip_k(k);
    let period = 2.0 * kk;
    let n = (t / period + 0.5).floor();
    let mut t0 = t - n * period;
    if t0 >= kk {
        t0 -= period;
    }
    am_principal(t0, kk, k) + n * PI
}

/// Inverse of `F` on `[-K, K]`, by Newton steps safeguarded by bisection.
fn am_principal(t: f64, kk: f64, k: Modulus) -> f64 {
    if t.abs() >= kk {
        return FRAC_PI_2.copysign(t);
    }
    let (mut lo, mut hi) = (-FRAC_PI_2, FRAC_PI_2);
    let mut phi = t * FRAC_PI_2 / kk;
    for _ in 0..100 {
        let r = ellip_f_principal(phi, k) - t;
        if r == 0.0 {
            return phi;
        }
        if r > 0.0 {
            hi = phi;
        } else {
            lo = phi;
        }
        let s = phi.sin();
        let dfdphi = 1.0 / ((1.0 - k.k * s) * (1.0 + k.k * s)).sqrt();
        let mut next = phi - r / dfdphi;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - phi).abs() <= 2.0 * f64::EPSILON * phi.abs().max(1e-300) {
            return next;
        }
        phi = next;
    }
    phi
}

/// Jacobi `sn(t, k) = sin am(t, k)`.
pub fn jacobi_sn(t: f64, k: Modulus) -> f64 {
    jacobi_am(t, k).sin()
}

/// Jacobi `cn(t, k) = cos am(t, k)`.
pub fn jacobi_cn(t: f64, k: Modulus) -> f64 {
    jacobi_am(t, k).cos()
}
