//! Integrable structure of elliptic tables.
//!
//! An ellipse `x²/a² + y²/b² = 1` is parametrized by `P(φ) = (a cos φ, b sin φ)`.
//! Every chord is tangent to a confocal conic
//!
//! ```text
//! x²/(a² − λ²) + y²/(b² − λ²) = 1
//! ```
//!
//! which is an ellipse for `λ < b` and a hyperbola for `b < λ < a`. On each
//! elliptic caustic the elliptic time `t = F(φ − π/2, k(λ))`, with
//! `k(λ)² = c²/(a² − λ²)`, turns the billiard map into `t ↦ t + δ(λ)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::billiard::{self, PhasePoint};
use crate::error::{Error, Result};
use crate::roots::{brent, invert_monotone, Tolerance};
use crate::special::{ellip_f, ellip_k, jacobi_am, Modulus};
use crate::table::{wrap, EllipseParams, Table, Vec2};

// Relative distance to λ = b below which a chord counts as passing through the foci.
const FOCAL_TOL: f64 = 1e-14;
// Upper end of the λ-bracket for rotation-number inversion, relative to b.
const LAMBDA_CEIL: f64 = 1.0 - 1e-14;
// Margin kept from the ends of the rational interval in the witness search.
const WITNESS_TOL: f64 = 1e-12;
const MAX_WITNESS_DENOMINATOR: u64 = 1 << 40;
const THETA3_GRID: usize = 128;

/// The confocal conic tangent to a chord.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "lambda", rename_all = "lowercase")]
pub enum Caustic {
    /// Confocal ellipse with parameter `λ ∈ [0, b)`.
    Ellipse(f64),
    /// The chord passes through the foci (`λ = b`).
    Focal,
    /// Confocal hyperbola, `λ ∈ (b, a]`.
    Hyperbola(f64),
}

impl Caustic {
    fn classify(e: &EllipseParams, lambda: f64) -> Caustic {
        if (lambda - e.b).abs() <= FOCAL_TOL * e.b {
            Caustic::Focal
        } else if lambda < e.b {
            Caustic::Ellipse(lambda)
        } else {
            Caustic::Hyperbola(lambda)
        }
    }

    /// `λ` for an elliptic caustic, `None` otherwise.
    pub fn elliptic(self) -> Option<f64> {
        match self {
            Caustic::Ellipse(l) => Some(l),
            _ => None,
        }
    }

    fn require_elliptic(self) -> Result<f64> {
        self.elliptic()
            .ok_or_else(|| Error::Domain(format!("chord has a non-elliptic caustic: {self:?}")))
    }
}

/// Caustic parameter `λ` and elliptic time `t ∈ [0, 4K(k(λ)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CausticCoord {
    pub lambda: f64,
    pub t: f64,
    /// `4K(k(λ))`.
    pub period: f64,
}

impl CausticCoord {
    /// `(λ/b, t/4K) ∈ [0, 1) × [0, 1)`.
    pub fn normalized(&self, e: &EllipseParams) -> (f64, f64) {
        (self.lambda / e.b, self.t / self.period)
    }
}

fn speed(e: &EllipseParams, phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    (e.a * e.a * s * s + e.b * e.b * c * c).sqrt()
}

/// Closed form `λ = sin θ · √(a² sin² φ + b² cos² φ)`.
pub fn caustic_param(e: &EllipseParams, phi: f64, theta: f64) -> Caustic {
    Caustic::classify(e, theta.sin() * speed(e, phi))
}

/// `λ` from tangency of the chord line with the confocal family.
///
/// The line through `P` with unit direction `u` touches the conic with
/// squared semi-axes `A², B²` iff `A² u_y² + B² u_x² = (P × u)²`, which is
/// linear in `λ²`.
pub fn caustic_param_oracle(e: &EllipseParams, phi: f64, theta: f64) -> Caustic {
    let (s, c) = phi.sin_cos();
    let p = Vec2::new(e.a * c, e.b * s);
    let tangent = Vec2::new(-e.a * s, e.b * c).normalize();
    let normal = Vec2::new(-tangent.y, tangent.x);
    let u = theta.cos() * tangent + theta.sin() * normal;
    let cross = p.x * u.y - p.y * u.x;
    let l2 = e.a * e.a * u.y * u.y + e.b * e.b * u.x * u.x - cross * cross;
    Caustic::classify(e, l2.max(0.0).sqrt())
}

fn check_lambda(e: &EllipseParams, lambda: f64) -> Result<()> {
    if (0.0..e.b).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "caustic parameter {lambda} outside [0, {})",
            e.b
        )))
    }
}

/// `k(λ) = c/√(a² − λ²)`, built from `1 − k² = (b² − λ²)/(a² − λ²)`.
fn modulus(e: &EllipseParams, lambda: f64) -> Result<Modulus> {
    let num = (e.b - lambda) * (e.b + lambda);
    let den = (e.a - lambda) * (e.a + lambda);
    Modulus::from_complement_sq(num / den)
}

/// `ω(λ) = F(arcsin(λ/b), k) / 2K(k) ∈ [0, ½)`.
pub fn rotation_number_of_caustic(e: &EllipseParams, lambda: f64) -> Result<f64> {
    check_lambda(e, lambda)?;
    let k = modulus(e, lambda)?;
    Ok(ellip_f((lambda / e.b).asin(), k) / (2.0 * ellip_k(k)))
}

/// Inverse of [`rotation_number_of_caustic`].
pub fn caustic_of_rotation(e: &EllipseParams, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Ok(0.0);
    }
    let hi = e.b * LAMBDA_CEIL;
    let top = rotation_number_of_caustic(e, hi)?;
    if !(omega > 0.0 && omega < top) {
        return Err(Error::Domain(format!(
            "rotation number {omega} outside the elliptic-caustic range (0, {top})"
        )));
    }
    invert_monotone(
        |l| rotation_number_of_caustic(e, l).unwrap_or(f64::NAN),
        omega,
        (0.0, hi),
        Tolerance::default().xtol(1e-16 * e.b),
    )
}

/// Advance of the elliptic time per bounce, `δ(λ) = 2F(arcsin(λ/b), k) = 4K ω`.
pub fn orbit_shift(e: &EllipseParams, lambda: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::Domain(format!("orbit shift needs λ in (0, b), got {lambda}")));
    }
    check_lambda(e, lambda)?;
    Ok(2.0 * ellip_f((lambda / e.b).asin(), modulus(e, lambda)?))
}

/// An elliptic table together with its exact parameters.
#[derive(Debug, Clone)]
pub struct EllipticBilliard {
    params: EllipseParams,
    table: Table,
}

impl EllipticBilliard {
    pub fn new(params: EllipseParams) -> Result<Self> {
        let table = if params.a == params.b {
            Table::circle(params.a)?
        } else {
            Table::ellipse(params.a, params.b)?
        };
        Ok(EllipticBilliard { params, table })
    }

    pub fn from_table(table: &Table) -> Result<Self> {
        let params = table
            .ellipse_params()
            .ok_or_else(|| Error::Config("table is not an ellipse or a circle".into()))?;
        Ok(EllipticBilliard {
            params,
            table: table.clone(),
        })
    }

    pub fn params(&self) -> &EllipseParams {
        &self.params
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn perimeter(&self) -> f64 {
        self.table.perimeter()
    }

    /// Parametric angle `φ` of the boundary point at arc length `s`.
    pub fn angle(&self, s: f64) -> f64 {
        wrap(self.table.angle_of_arc(s.rem_euclid(self.perimeter())), TAU)
    }

    pub fn arc(&self, phi: f64) -> f64 {
        wrap(self.table.arc_of_angle(phi), self.perimeter())
    }

    pub fn caustic(&self, p: PhasePoint) -> Caustic {
        caustic_param(&self.params, self.angle(p.s), p.theta)
    }

    pub fn step(&self, p: PhasePoint) -> Result<PhasePoint> {
        billiard::step(&self.table, p)
    }

    fn coord_of_angle(&self, phi: f64, theta: f64) -> Result<CausticCoord> {
        let lambda = caustic_param(&self.params, phi, theta).require_elliptic()?;
        let k = modulus(&self.params, lambda)?;
        let period = 4.0 * ellip_k(k);
        let t = wrap(ellip_f(phi - FRAC_PI_2, k), period);
        Ok(CausticCoord { lambda, t, period })
    }

    fn angle_of_coord(&self, c: &CausticCoord) -> Result<(f64, f64)> {
        check_lambda(&self.params, c.lambda)?;
        let k = modulus(&self.params, c.lambda)?;
        let phi = wrap(jacobi_am(c.t, k) + FRAC_PI_2, TAU);
        let ratio = c.lambda / speed(&self.params, phi);
        Ok((phi, ratio.min(1.0).asin()))
    }

    /// `(s, θ) ↦ (λ, t)` for chords with `θ ∈ [0, π/2)` and an elliptic
    /// caustic `λ < b`. This contains the strip `θ < θ*` and is invariant
    /// under the billiard map.
    pub fn action_angle(&self, p: PhasePoint) -> Result<CausticCoord> {
        if !(p.theta >= 0.0 && p.theta < FRAC_PI_2) {
            return Err(Error::Domain(format!("incidence angle {} outside [0, π/2)", p.theta)));
        }
        self.coord_of_angle(self.angle(p.s), p.theta)
    }

    /// Inverse of [`EllipticBilliard::action_angle`].
    pub fn from_action_angle(&self, c: CausticCoord) -> Result<PhasePoint> {
        let (phi, theta) = self.angle_of_coord(&c)?;
        Ok(PhasePoint::new(self.arc(phi), theta))
    }
}

/// `h = h₁ ∘ h₂⁻¹`: matches rotation numbers of the caustics of `source`
/// and `target` and keeps the normalized elliptic time.
#[derive(Debug, Clone)]
pub struct ConjugacyMap {
    source: EllipticBilliard,
    target: EllipticBilliard,
    theta_star_source: f64,
    theta_star_image: f64,
}

/// Build the conjugacy from the billiard of `e2` (source) to that of `e1` (target).
pub fn build_conjugacy(e1: &EllipseParams, e2: &EllipseParams) -> Result<ConjugacyMap> {
    let target = EllipticBilliard::new(*e1)?;
    let source = EllipticBilliard::new(*e2)?;
    let mut map = ConjugacyMap {
        theta_star_source: e2.theta_star(),
        theta_star_image: e2.theta_star(),
        source,
        target,
    };
    map.theta_star_image = map.pullback_theta_star()?;
    Ok(map)
}

impl ConjugacyMap {
    pub fn source(&self) -> &EllipticBilliard {
        &self.source
    }

    pub fn target(&self) -> &EllipticBilliard {
        &self.target
    }

    /// `θ* = min(θ₂*, θ₃*)`.
    pub fn theta_star(&self) -> f64 {
        self.theta_star_source.min(self.theta_star_image)
    }

    /// `θ₃*`: below it the image stays under the target's own `θ*`. Capped at `θ₂*`.
    pub fn theta_star_image(&self) -> f64 {
        self.theta_star_image
    }

    pub fn theta_star_source(&self) -> f64 {
        self.theta_star_source
    }

    /// Image of a source phase point. Defined whenever its caustic is elliptic.
    pub fn apply(&self, p: PhasePoint) -> Result<PhasePoint> {
        let (phi, theta) = self.apply_angle(self.source.angle(p.s), p.theta)?;
        Ok(PhasePoint::new(self.target.arc(phi), theta))
    }

    fn apply_angle(&self, phi: f64, theta: f64) -> Result<(f64, f64)> {
        let (e1, e2) = (self.target.params(), self.source.params());
        let c2 = self.source.coord_of_angle(phi, theta)?;
        let omega = rotation_number_of_caustic(e2, c2.lambda)?;
        let lambda = caustic_of_rotation(e1, omega)?;
        let period = 4.0 * ellip_k(modulus(e1, lambda)?);
        let c1 = CausticCoord {
            lambda,
            t: c2.t / c2.period * period,
            period,
        };
        self.target.angle_of_coord(&c1)
    }

    // Largest image angle over the source row at incidence `theta`. Both
    // tables are symmetric in the axes, so φ ∈ [0, π/2] suffices.
    fn image_theta_max(&self, theta: f64) -> Result<f64> {
        let image = |phi: f64| self.apply_angle(phi, theta).map(|x| x.1);
        let n = THETA3_GRID;
        let h = FRAC_PI_2 / n as f64;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..=n {
            let v = image(i as f64 * h)?;
            if v > best.0 {
                best = (v, i as f64 * h);
            }
        }
        // Golden-section refinement on the neighbouring cells.
        let (mut lo, mut hi) = ((best.1 - h).max(0.0), (best.1 + h).min(FRAC_PI_2));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        let (mut f1, mut f2) = (image(x1)?, image(x2)?);
        for _ in 0..60 {
            if f1 > f2 {
                hi = x2;
                (x2, f2) = (x1, f1);
                x1 = hi - g * (hi - lo);
                f1 = image(x1)?;
            } else {
                lo = x1;
                (x1, f1) = (x2, f2);
                x2 = lo + g * (hi - lo);
                f2 = image(x2)?;
            }
        }
        Ok(best.0.max(f1).max(f2))
    }

    // θ₃*: the largest source incidence whose whole row maps below the target's θ*.
    fn pullback_theta_star(&self) -> Result<f64> {
        let limit = self.target.params().theta_star();
        // Rotation numbers this close to ½ leave the invertible range of ω₁.
        let top = self.theta_star_source - 1e-6;
        let excess = |th: f64| self.image_theta_max(th).map_or(1.0, |v| v - limit);
        if excess(top) < 0.0 {
            return Ok(self.theta_star_source);
        }
        brent(excess, 0.0, top, Tolerance::default().xtol(1e-14))
    }

    /// `f₁(h(x)) − h(f₂(x))`, with the arc-length part reduced to `(−ℓ₁/2, ℓ₁/2]`.
    pub fn residual(&self, p: PhasePoint) -> Result<(f64, f64)> {
        let lhs = self.target.step(self.apply(p)?)?;
        let rhs = self.apply(self.source.step(p)?)?;
        let l = self.target.perimeter();
        let mut ds = (lhs.s - rhs.s).rem_euclid(l);
        if ds > 0.5 * l {
            ds -= l;
        }
        Ok((ds, lhs.theta - rhs.theta))
    }

    /// Residuals on an `ns × ntheta` grid of `[0, ℓ₂) × [margin, θ* − margin]`.
    ///
    /// Rows are ordered by `s`, then `θ`.
    pub fn residual_grid(&self, ns: usize, ntheta: usize, margin: f64) -> Result<Vec<ResidualRow>> {
        let (lo, hi) = (margin, self.theta_star() - margin);
        if ns == 0 || ntheta == 0 || !(hi > lo) {
            return Err(Error::Config(format!(
                "empty conjugacy grid: {ns}×{ntheta} on θ ∈ [{lo}, {hi}]"
            )));
        }
        let l = self.source.perimeter();
        (0..ns * ntheta)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / ntheta, idx % ntheta);
                let s = l * i as f64 / ns as f64;
                let theta = if ntheta == 1 {
                    lo
                } else {
                    lo + (hi - lo) * j as f64 / (ntheta - 1) as f64
                };
                let (rs, rt) = self.residual(PhasePoint::new(s, theta))?;
                Ok(ResidualRow {
                    s,
                    theta,
                    residual_s: rs,
                    residual_theta: rt,
                })
            })
            .collect()
    }
}

/// One point of a conjugacy residual grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualRow {
    pub s: f64,
    pub theta: f64,
    pub residual_s: f64,
    pub residual_theta: f64,
}

impl ResidualRow {
    pub fn max_abs(&self) -> f64 {
        self.residual_s.abs().max(self.residual_theta.abs())
    }
}

fn check_rotation(m: u64, n: u64) -> Result<()> {
    if m == 0 || 2 * m >= n || crate::orbits::gcd(m as u32, n as u32) != 1 {
        return Err(Error::Config(format!("rotation {m}/{n} needs coprime 0 < m < n/2")));
    }
    Ok(())
}

fn check_xi(e: &EllipseParams, xi: f64) -> Result<f64> {
    let c2 = (e.a - e.b) * (e.a + e.b);
    if !(xi > -c2 && xi < 0.0) {
        return Err(Error::Domain(format!("ξ = {xi} outside (−c², 0) = ({}, 0)", -c2)));
    }
    Ok(c2)
}

// F(arcsin √(b²/(b² − ξ)), k) and K(k) with k = √(1 + ξ/c²).
fn hyperbolic_terms(e: &EllipseParams, xi: f64) -> Result<(f64, f64)> {
    let c2 = check_xi(e, xi)?;
    let k = Modulus::from_complement_sq(-xi / c2)?;
    let amp = (e.b / (e.b * e.b - xi).sqrt()).min(1.0).asin();
    Ok((ellip_f(amp, k), ellip_k(k)))
}

/// `g(ξ) = F(arcsin √(b²/(b² − ξ)), k) − (2m/n) K(k)`, `k = √(1 + ξ/c²)`.
pub fn hyperbolic_g(e: &EllipseParams, m: u64, n: u64, xi: f64) -> Result<f64> {
    let (f, k) = hyperbolic_terms(e, xi)?;
    Ok(f - 2.0 * m as f64 / n as f64 * k)
}

/// `u(ξ) = F(arcsin √(b²/(b² − ξ)), k) − (2/π) arcsin(b/a) K(k)`.
pub fn hyperbolic_u(e: &EllipseParams, xi: f64) -> Result<f64> {
    let (f, k) = hyperbolic_terms(e, xi)?;
    Ok(f - 2.0 / PI * (e.b / e.a).asin() * k)
}

/// `(1/π) arcsin(b/a)`: rotation numbers at or above it carry hyperbolic caustics.
pub fn hyperbolic_threshold(e: &EllipseParams) -> f64 {
    (e.b / e.a).asin() / PI
}

/// Number of interior ξ-grid points used for the positivity certificate.
pub const U_GRID: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum HyperbolicDecision {
    /// A root of `g` in `(−c², 0)`.
    Exists { xi: f64, g: f64 },
    /// Grid minimum of `u`; `None` for a circle, where `(−c², 0)` is empty.
    NotExists { u_min: Option<f64>, xi_at_min: Option<f64> },
}

impl HyperbolicDecision {
    pub fn exists(&self) -> bool {
        matches!(self, HyperbolicDecision::Exists { .. })
    }
}

/// Decide whether the ellipse has an `m/n`-periodic orbit with a hyperbolic caustic.
pub fn hyperbolic_orbit_exists(e: &EllipseParams, m: u64, n: u64) -> Result<HyperbolicDecision> {
    check_rotation(m, n)?;
    let c2 = (e.a - e.b) * (e.a + e.b);
    if (m as f64) / (n as f64) < hyperbolic_threshold(e) {
        if c2 == 0.0 {
            return Ok(HyperbolicDecision::NotExists {
                u_min: None,
                xi_at_min: None,
            });
        }
        let mut best = (f64::INFINITY, 0.0);
        for i in 1..=U_GRID {
            let xi = -c2 * (1.0 - i as f64 / (U_GRID + 1) as f64);
            let u = hyperbolic_u(e, xi)?;
            if u < best.0 {
                best = (u, xi);
            }
        }
        if !(best.0 > 0.0) {
            return Err(Error::Domain(format!(
                "u(ξ) = {:e} at ξ = {} is not positive below the threshold",
                best.0, best.1
            )));
        }
        return Ok(HyperbolicDecision::NotExists {
            u_min: Some(best.0),
            xi_at_min: Some(best.1),
        });
    }
    let g = |xi: f64| hyperbolic_g(e, m, n, xi).unwrap_or(f64::NAN);
    let tol = Tolerance::default().xtol(4.0 * f64::EPSILON * c2);
    let lo = -c2 * (1.0 - 1e-10);
    let mut hi = -1e-12 * c2;
    let mut attempt = brent(g, lo, hi, tol);
    while let Err(Error::Bracket { .. }) = attempt {
        if hi > -1e-300 * c2.max(1.0) {
            break;
        }
        hi *= 1e-6;
        attempt = brent(g, lo, hi, tol);
    }
    let xi = match attempt {
        Ok(xi) => xi,
        // Rotation number on the threshold: the root sits at the left end.
        Err(Error::Bracket { f_lo, .. }) if f_lo.abs() <= 1e-10 => lo,
        Err(e) => return Err(e),
    };
    Ok(HyperbolicDecision::Exists { xi, g: g(xi) })
}

/// A rotation number separating two ellipses by hyperbolic-caustic orbits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub e1: f64,
    pub e2: f64,
    /// `[(1/π) arcsin(b/a)` of the more eccentric ellipse, same for the other`)`.
    pub interval: (f64, f64),
    pub m: u64,
    pub n: u64,
    /// Decision on the more eccentric ellipse.
    pub eccentric: HyperbolicDecision,
    /// Decision on the rounder ellipse.
    pub round: HyperbolicDecision,
}

impl Witness {
    /// The two decisions disagree as they must.
    pub fn confirmed(&self) -> bool {
        self.eccentric.exists() && !self.round.exists()
    }
}

/// Simplest fraction `m/n` in the closed interval `[lo, hi]`, `0 < lo ≤ hi`,
/// by descending the Stern–Brocot tree one run of equal turns at a time.
pub fn simplest_fraction(lo: f64, hi: f64) -> Option<(u64, u64)> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return None;
    }
    // Left and right ancestors (p/q) of the current node, starting at 0/1 and 1/0.
    let (mut lp, mut lq, mut rp, mut rq) = (0u64, 1u64, 1u64, 0u64);
    loop {
        let (mp, mq) = (lp + rp, lq + rq);
        if mq > MAX_WITNESS_DENOMINATOR {
            return None;
        }
        let mid = mp as f64 / mq as f64;
        if mid < lo {
            // Largest j with (mp + (j−1) rp)/(mq + (j−1) rq) < lo, i.e. run of right turns.
            let j = run_length(lo, lp, lq, rp, rq, true);
            lp += j * rp;
            lq += j * rq;
        } else if mid > hi {
            let j = run_length(hi, rp, rq, lp, lq, false);
            rp += j * lp;
            rq += j * lq;
        } else {
            return Some((mp, mq));
        }
    }
}

// Number of consecutive moves of `(fp/fq)` towards `(sp/sq)` keeping it on
// the far side of `bound`; at least one.
fn run_length(bound: f64, fp: u64, fq: u64, sp: u64, sq: u64, below: bool) -> u64 {
    let j_est = if below {
        // (fp + j sp)/(fq + j sq) < bound  ⇔  j (sp − bound sq) < bound fq − fp.
        let den = sp as f64 - bound * sq as f64;
        (bound * fq as f64 - fp as f64) / den
    } else {
        let den = bound * sq as f64 - sp as f64;
        (fp as f64 - bound * fq as f64) / den
    };
    let mut j = if j_est.is_finite() && j_est > 1.0 {
        j_est.floor().min(MAX_WITNESS_DENOMINATOR as f64) as u64
    } else {
        1
    };
    let ok = |j: u64| {
        let v = (fp + j * sp) as f64 / (fq + j * sq) as f64;
        if below {
            v < bound
        } else {
            v > bound
        }
    };
    while j > 1 && !ok(j) {
        j -= 1;
    }
    j.max(1)
}

/// Smallest-denominator `m/n` in `[θ₁, θ₂)`, where `θ_j = (1/π) arcsin(b_j/a_j)`
/// and ellipse 1 is the more eccentric after ordering. `None` if the
/// eccentricities coincide.
pub fn eccentricity_witness(e1: &EllipseParams, e2: &EllipseParams) -> Result<Option<Witness>> {
    let (ecc, round) = if e1.eccentricity() >= e2.eccentricity() {
        (e1, e2)
    } else {
        (e2, e1)
    };
    let (lo, hi) = (hyperbolic_threshold(ecc), hyperbolic_threshold(round));
    let Some((m, n)) = simplest_fraction(lo + WITNESS_TOL, hi - WITNESS_TOL) else {
        if hi - lo > 1e-9 {
            return Err(Error::Domain(format!(
                "no fraction with denominator below {MAX_WITNESS_DENOMINATOR} in [{lo}, {hi})"
            )));
        }
        return Ok(None);
    };
    Ok(Some(Witness {
        e1: ecc.eccentricity(),
        e2: round.eccentricity(),
        interval: (lo, hi),
        m,
        n,
        eccentric: hyperbolic_orbit_exists(ecc, m, n)?,
        round: hyperbolic_orbit_exists(round, m, n)?,
    }))
}
