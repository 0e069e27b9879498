//! Strictly convex billiard tables.
//!
//! Each table is given by an angle parametrization `P(t)`, `t ∈ [0, 2π)`,
//! traversed counterclockwise. Arc length and the Lazutkin coordinate are
//! obtained from Fourier primitives of `|P′|` and `κ^{2/3}|P′|`, so both
//! directions of the `t ↔ s` map cost one short trigonometric sum.

use std::f64::consts::TAU;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

pub type Vec2 = Vector2<f64>;

/// One term `eps · cos(m ψ + phase)` of a radial profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub m: u32,
    pub eps: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Serializable table description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TableSpec {
    Circle {
        #[serde(rename = "R")]
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// `r(ψ) = R (1 + Σ eps_m cos(m ψ + phase_m))`.
    Radial {
        #[serde(rename = "R")]
        radius: f64,
        harmonics: Vec<Harmonic>,
    },
}

impl TableSpec {
    /// The same shape scaled by `c > 0` about the origin.
    pub fn scaled(&self, c: f64) -> TableSpec {
        match self {
            TableSpec::Circle { radius } => TableSpec::Circle { radius: c * radius },
            TableSpec::Ellipse { a, b } => TableSpec::Ellipse { a: c * a, b: c * b },
            TableSpec::Radial { radius, harmonics } => TableSpec::Radial {
                radius: c * radius,
                harmonics: harmonics.clone(),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            TableSpec::Circle { radius } => positive("R", *radius),
            TableSpec::Ellipse { a, b } => {
                positive("a", *a)?;
                positive("b", *b)?;
                if b > a {
                    return Err(Error::Config(format!("need a >= b, got a = {a}, b = {b}")));
                }
                Ok(())
            }
            TableSpec::Radial { radius, harmonics } => {
                positive("R", *radius)?;
                for h in harmonics {
                    if h.m == 0 || !h.eps.is_finite() || !h.phase.is_finite() {
                        return Err(Error::Config(format!("bad harmonic {h:?}")));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Semi-axes and derived constants of an ellipse `x²/a² + y²/b² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub a: f64,
    pub b: f64,
}

impl EllipseParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        TableSpec::Ellipse { a, b }.validate()?;
        Ok(EllipseParams { a, b })
    }

    /// Ellipse with major semi-axis `a` and eccentricity `e`.
    pub fn from_eccentricity(a: f64, e: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&e) {
            return Err(Error::Config(format!("eccentricity must lie in [0, 1), got {e}")));
        }
        EllipseParams::new(a, a * (1.0 - e * e).sqrt())
    }

    pub fn eccentricity(&self) -> f64 {
        self.focal() / self.a
    }

    /// Semi-focal distance `c = √(a² − b²)`.
    pub fn focal(&self) -> f64 {
        ((self.a - self.b) * (self.a + self.b)).sqrt()
    }

    /// Largest incidence angle whose chords from every boundary point avoid
    /// the focal segment: `sin θ* = b/a`.
    pub fn theta_star(&self) -> f64 {
        self.b.atan2(self.focal())
    }
}

/// Position, unit tangent and curvature at a boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub pos: Vec2,
    pub tangent: Vec2,
    pub curvature: f64,
}

/// `P(t)` with its first two `t`-derivatives.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub pos: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
}

impl Jet {
    pub fn speed(&self) -> f64 {
        self.d1.norm()
    }

    pub fn curvature(&self) -> f64 {
        self.d1.perp(&self.d2) / self.d1.norm().powi(3)
    }
}

/// Primitive of a positive, smooth, 2π-periodic function, stored as a
/// truncated Fourier series, with a monotone lookup grid for inversion.
#[derive(Debug, Clone)]
struct PeriodicPrimitive {
    mean: f64,
    // (a_k, b_k) for k = 1.., so that f ≈ mean + Σ a_k cos kt + b_k sin kt.
    coef: Vec<(f64, f64)>,
    grid_t: Vec<f64>,
    grid_v: Vec<f64>,
}

const MAX_SAMPLES: usize = 1 << 13;
const GRID: usize = 512;

impl PeriodicPrimitive {
    fn new<F: Fn(f64) -> f64>(f: F) -> Result<Self> {
        let mut n = 64;
        loop {
            let samples: Vec<f64> = (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect();
            let (mean, coef) = real_dft(&samples);
            let tail = coef[n / 4..]
                .iter()
                .map(|(a, b)| a.abs().max(b.abs()))
                .fold(0.0, f64::max);
            if tail <= 1e-15 * mean.abs() {
                let mut coef = coef[..n / 4].to_vec();
                while coef
                    .last()
                    .is_some_and(|(a, b)| a.abs().max(b.abs()) < 1e-17 * mean.abs())
                {
                    coef.pop();
                }
                let mut p = PeriodicPrimitive {
                    mean,
                    coef,
                    grid_t: Vec::new(),
                    grid_v: Vec::new(),
                };
                p.grid_t = (0..=GRID).map(|j| TAU * j as f64 / GRID as f64).collect();
                p.grid_v = p.grid_t.iter().map(|&t| p.eval_principal(t)).collect();
                if p.grid_v.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::NotConvex("primitive is not increasing".into()));
                }
                return Ok(p);
            }
            if n >= MAX_SAMPLES {
                return Err(Error::NoConvergence {
                    solver: "fourier primitive",
                    iterations: n,
                    residual: tail / mean.abs(),
                });
            }
            n *= 2;
        }
    }

    fn period_value(&self) -> f64 {
        TAU * self.mean
    }

    fn derivative(&self, t: f64) -> f64 {
        let (s1, c1) = t.sin_cos();
        let (mut s, mut c) = (0.0, 1.0);
        let mut acc = self.mean;
        for &(a, b) in &self.coef {
            (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
            acc += a * c + b * s;
        }
        acc
    }

    // ∫₀ᵗ f for t in any range; exact periodic part plus the mean drift.
    fn eval_principal(&self, t: f64) -> f64 {
        let (s1, c1) = t.sin_cos();
        let (mut s, mut c) = (0.0, 1.0);
        let mut acc = 0.0;
        for (k, &(a, b)) in self.coef.iter().enumerate() {
            (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
            acc += (a * s - b * (c - 1.0)) / (k + 1) as f64;
        }
        self.mean * t + acc
    }

    fn eval(&self, t: f64) -> f64 {
        let n = (t / TAU).floor();
        let r = t - n * TAU;
        self.eval_principal(r) + n * self.period_value()
    }

    fn invert(&self, v: f64) -> f64 {
        let period = self.period_value();
        let n = (v / period).floor();
        let r = v - n * period;
        let j = match self.grid_v.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(j) => return self.grid_t[j] + n * TAU,
            Err(j) => j.clamp(1, GRID),
        };
        let (mut lo, mut hi) = (self.grid_t[j - 1], self.grid_t[j]);
        let (vlo, vhi) = (self.grid_v[j - 1], self.grid_v[j]);
        let mut t = lo + (hi - lo) * (r - vlo) / (vhi - vlo);
        for _ in 0..60 {
            let g = self.eval_principal(t) - r;
            if g > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let mut next = t - g / self.derivative(t);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 4.0 * f64::EPSILON * TAU {
                t = next;
                break;
            }
            t = next;
        }
        t + n * TAU
    }
}

fn real_dft(samples: &[f64]) -> (f64, Vec<(f64, f64)>) {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let trig: Vec<(f64, f64)> = (0..n).map(|j| (TAU * j as f64 / n as f64).sin_cos()).collect();
    let coef = (1..n / 2)
        .map(|k| {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, &f) in samples.iter().enumerate() {
                let (s, c) = trig[(j * k) % n];
                a += f * c;
                b += f * s;
            }
            (2.0 * a / n as f64, 2.0 * b / n as f64)
        })
        .collect();
    (mean, coef)
}

const CONVEXITY_GRID: usize = 10_000;

/// An immutable strictly convex table.
#[derive(Debug, Clone)]
pub struct Table {
    spec: TableSpec,
    arc: PeriodicPrimitive,
    lazutkin_coord: PeriodicPrimitive,
    lazutkin: f64,
}

impl Table {
    pub fn new(spec: TableSpec) -> Result<Table> {
        spec.validate()?;
        if let TableSpec::Radial { radius, harmonics } = &spec {
            check_radial(*radius, harmonics)?;
        }
        let jet = |t: f64| jet_of(&spec, t);
        for j in 0..CONVEXITY_GRID {
            let t = TAU * j as f64 / CONVEXITY_GRID as f64;
            let k = jet(t).curvature();
            if !(k > 0.0) {
                return Err(Error::NotConvex(format!("curvature {k:e} at parameter {t}")));
            }
        }
        let arc = PeriodicPrimitive::new(|t| jet(t).speed())?;
        let density = |t: f64| {
            let j = jet(t);
            j.curvature().cbrt().powi(2) * j.speed()
        };
        let lazutkin_coord = PeriodicPrimitive::new(density)?;
        let lazutkin = quad::integrate(density, 0.0, TAU, 0.0, 1e-12)?;
        Ok(Table {
            spec,
            arc,
            lazutkin_coord,
            lazutkin,
        })
    }

    pub fn circle(radius: f64) -> Result<Table> {
        Table::new(TableSpec::Circle { radius })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Table> {
        Table::new(TableSpec::Ellipse { a, b })
    }

    pub fn spec(&self) -> &TableSpec {
        &self.spec
    }

    pub fn ellipse_params(&self) -> Option<EllipseParams> {
        match self.spec {
            TableSpec::Circle { radius } => Some(EllipseParams { a: radius, b: radius }),
            TableSpec::Ellipse { a, b } => Some(EllipseParams { a, b }),
            TableSpec::Radial { .. } => None,
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Table> {
        Table::new(self.spec.scaled(c))
    }

    /// Perimeter ℓ.
    pub fn perimeter(&self) -> f64 {
        self.arc.period_value()
    }

    /// Lazutkin perimeter `λ = ∫ κ^{2/3} ds`.
    pub fn lazutkin_perimeter(&self) -> f64 {
        self.lazutkin
    }

    pub fn jet(&self, t: f64) -> Jet {
        jet_of(&self.spec, t)
    }

    /// `P(t2) − P(t)` evaluated without cancellation for nearby parameters.
    pub fn chord(&self, t: f64, t2: f64) -> Vec2 {
        let (sm, cm) = (0.5 * (t + t2)).sin_cos();
        let sh = (0.5 * (t2 - t)).sin();
        match self.spec {
            TableSpec::Circle { radius } => 2.0 * radius * sh * Vec2::new(-sm, cm),
            TableSpec::Ellipse { a, b } => 2.0 * sh * Vec2::new(-a * sm, b * cm),
            TableSpec::Radial { radius, ref harmonics } => {
                let (r1, _, _) = radial_profile(radius, harmonics, t);
                let mut dr = 0.0;
                for h in harmonics {
                    let m = h.m as f64;
                    let mid = m * 0.5 * (t + t2) + h.phase;
                    dr -= 2.0 * h.eps * mid.sin() * (m * 0.5 * (t2 - t)).sin();
                }
                let (s2, c2) = t2.sin_cos();
                radius * dr * Vec2::new(c2, s2) + 2.0 * r1 * sh * Vec2::new(-sm, cm)
            }
        }
    }

    /// Arc length from `P(0)` to `P(t)`, on the lift (`s(t + 2π) = s(t) + ℓ`).
    pub fn arc_of_angle(&self, t: f64) -> f64 {
        self.arc.eval(t)
    }

    pub fn angle_of_arc(&self, s: f64) -> f64 {
        self.arc.invert(s)
    }

    /// Lazutkin coordinate `∫₀ᵗ κ^{2/3} |P′| dt`, on the lift.
    pub fn lazutkin_of_angle(&self, t: f64) -> f64 {
        self.lazutkin_coord.eval(t)
    }

    pub fn angle_of_lazutkin(&self, x: f64) -> f64 {
        self.lazutkin_coord.invert(x)
    }

    /// Point, unit tangent and curvature at arc length `s` (any real).
    pub fn point(&self, s: f64) -> BoundaryPoint {
        let j = self.jet(self.angle_of_arc(s));
        BoundaryPoint {
            pos: j.pos,
            tangent: j.d1 / j.speed(),
            curvature: j.curvature(),
        }
    }
}

fn check_radial(radius: f64, harmonics: &[Harmonic]) -> Result<()> {
    for j in 0..CONVEXITY_GRID {
        let psi = TAU * j as f64 / CONVEXITY_GRID as f64;
        let (r, r1, r2) = radial_profile(radius, harmonics, psi);
        if !(r > 0.0) {
            return Err(Error::NotConvex(format!("radius {r} at angle {psi}")));
        }
        let q = r * r + 2.0 * r1 * r1 - r * r2;
        if !(q > 0.0) {
            return Err(Error::NotConvex(format!("r² + 2r′² − r r″ = {q:e} at angle {psi}")));
        }
    }
    Ok(())
}

fn radial_profile(radius: f64, harmonics: &[Harmonic], psi: f64) -> (f64, f64, f64) {
    let (mut r, mut r1, mut r2) = (1.0, 0.0, 0.0);
    for h in harmonics {
        let m = h.m as f64;
        let (s, c) = (m * psi + h.phase).sin_cos();
        r += h.eps * c;
        r1 -= h.eps * m * s;
        r2 -= h.eps * m * m * c;
    }
    (radius * r, radius * r1, radius * r2)
}

fn jet_of(spec: &TableSpec, t: f64) -> Jet {
    let (s, c) = t.sin_cos();
    match *spec {
        TableSpec::Circle { radius } => Jet {
            pos: Vec2::new(radius * c, radius * s),
            d1: Vec2::new(-radius * s, radius * c),
            d2: Vec2::new(-radius * c, -radius * s),
        },
        TableSpec::Ellipse { a, b } => Jet {
            pos: Vec2::new(a * c, b * s),
            d1: Vec2::new(-a * s, b * c),
            d2: Vec2::new(-a * c, -b * s),
        },
        TableSpec::Radial { radius, ref harmonics } => {
            let (r, r1, r2) = radial_profile(radius, harmonics, t);
            let er = Vec2::new(c, s);
            let ep = Vec2::new(-s, c);
            Jet {
                pos: r * er,
                d1: r1 * er + r * ep,
                d2: (r2 - r) * er + 2.0 * r1 * ep,
            }
        }
    }
}

/// Reduce `x` to `[0, period)`.
pub fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}
