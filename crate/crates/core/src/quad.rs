//! Adaptive Gauss–Kronrod (7/15) quadrature and the periodic trapezoid rule.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_PANELS: usize = 4000;

/// One Kronrod panel. Returns `(kronrod, |kronrod - gauss|)`.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let sum = f(center - dx) + f(center + dx);
        kronrod += w * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrate `f` over `[a, b]` to `max(abs_tol, rel_tol * |I|)`.
///
/// Global adaptive strategy: the panel with the largest error estimate is
/// bisected until the summed estimate meets the target.
pub fn integrate<F>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (value, err) = gk15(&mut f, a, b);
    let mut panels = vec![Panel {
        lo: a,
        hi: b,
        value,
        err,
    }];
    loop {
        let total = neumaier_sum(panels.iter().map(|p| p.value));
        if !total.is_finite() {
            return Err(Error::Domain(format!("non-finite integrand on [{a}, {b}]")));
        }
        let err_total: f64 = panels.iter().map(|p| p.err).sum();
        let target = abs_tol.max(rel_tol * total.abs());
        if err_total <= target {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::NoConvergence {
                solver: "gauss-kronrod",
                iterations: panels.len(),
                residual: err_total,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        if mid == p.lo || mid == p.hi {
            // Panel cannot be split further in floating point.
            return Ok(total);
        }
        let (v1, e1) = gk15(&mut f, p.lo, mid);
        let (v2, e2) = gk15(&mut f, mid, p.hi);
        panels.push(Panel {
            lo: p.lo,
            hi: mid,
            value: v1,
            err: e1,
        });
        panels.push(Panel {
            lo: mid,
            hi: p.hi,
            value: v2,
            err: e2,
        });
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

pub(crate) fn neumaier_sum<I: Iterator<Item = f64>>(values: I) -> f64 {
    let mut total = 0.0_f64;
    let mut comp = 0.0;
    for v in values {
        let t = total + v;
        if total.abs() >= v.abs() {
            comp += (total - t) + v;
        } else {
            comp += (v - t) + total;
        }
        total = t;
    }
    total + comp
}

/// Trapezoid rule for a `period`-periodic integrand with `n` nodes.
/// Spectrally accurate for smooth periodic functions.
pub fn periodic_trapezoid<F>(mut f: F, period: f64, n: usize) -> f64
where
    F: FnMut(f64) -> f64,
{
    let h = period / n as f64;
    (0..n).map(|j| f(j as f64 * h)).sum::<f64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand() {
        // ∫_0^1 1/√x dx = 2.
        let v = integrate(|x: f64| 1.0 / x.sqrt(), 1e-300, 1.0, 1e-12, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn trapezoid_on_periodic() {
        // ∫_0^{2π} e^{cos t} dt = 2π I_0(1).
        let v = periodic_trapezoid(|t: f64| t.cos().exp(), 2.0 * PI, 32);
        assert!((v - 2.0 * PI * 1.266_065_877_752_008_4).abs() < 1e-13);
    }
}
