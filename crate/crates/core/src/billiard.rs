//! The billiard ball map on the phase cylinder.
//!
//! Internally a boundary point is addressed by its table parameter `t`;
//! [`PhasePoint`] and the lifted [`TrajectoryPoint`] expose arc length.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::table::{Table, Vec2};

/// Incidence angles closer than this to `0` or `π` are boundary fixed points.
pub const GRAZING: f64 = 1e-8;

const BRACKET_GRID: usize = 64;
const NEWTON_CAP: usize = 100;

/// Billiard-map coordinates: arc length `s ∈ [0, ℓ)` and incidence angle `θ ∈ [0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub s: f64,
    pub theta: f64,
}

impl PhasePoint {
    pub fn new(s: f64, theta: f64) -> Self {
        PhasePoint { s, theta }
    }

    /// `(s, θ) ↦ (s, π − θ)`.
    pub fn reversed(self) -> Self {
        PhasePoint::new(self.s, PI - self.theta)
    }
}

/// One lifted bounce. The lift is `x = winding · ℓ + s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub n: usize,
    pub winding: i64,
    pub s: f64,
    pub theta: f64,
    pub pos: Vec2,
}

impl TrajectoryPoint {
    pub fn lift(&self, perimeter: f64) -> f64 {
        self.winding as f64 * perimeter + self.s
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=PI).contains(&theta) {
        Ok(())
    } else {
        Err(Error::Domain(format!("incidence angle {theta} outside [0, π]")))
    }
}

/// One bounce in table-parameter coordinates.
///
/// Returns `(t′, θ′)` with `t′ ∈ (t, t + 2π)` on the lift. Grazing
/// angles return `(t, θ)`.
pub fn step_param(table: &Table, t: f64, theta: f64) -> Result<(f64, f64)> {
    check_theta(theta)?;
    if theta < GRAZING || theta > PI - GRAZING {
        return Ok((t, theta));
    }
    let j0 = table.jet(t);
    let tan = j0.d1 / j0.speed();
    let normal = Vec2::new(-tan.y, tan.x);
    let u = theta.cos() * tan + theta.sin() * normal;
    // g < 0 just after t and g > 0 just before t + 2π; one sign change.
    let g = |tau: f64| u.perp(&(table.jet(t + tau).pos - j0.pos));
    let dg = |tau: f64| u.perp(&table.jet(t + tau).d1);

    let h = TAU / BRACKET_GRID as f64;
    let first_pos = (1..BRACKET_GRID).find(|&j| g(j as f64 * h) > 0.0);
    let (mut lo, mut hi) = match first_pos {
        Some(1) => {
            let mut hi = h;
            let mut lo = 0.5 * h;
            while g(lo) > 0.0 {
                hi = lo;
                lo *= 0.5;
                if lo < 1e-300 {
                    return Err(bracket_failure(t, theta));
                }
            }
            (lo, hi)
        }
        Some(j) => ((j - 1) as f64 * h, j as f64 * h),
        None => {
            let mut lo = TAU - h;
            let mut gap = 0.5 * h;
            while g(TAU - gap) <= 0.0 {
                lo = TAU - gap;
                gap *= 0.5;
                if gap < 1e-15 {
                    return Err(bracket_failure(t, theta));
                }
            }
            (lo, TAU - gap)
        }
    };

    let mut tau = 0.5 * (lo + hi);
    let mut converged = false;
    for _ in 0..NEWTON_CAP {
        let gv = g(tau);
        if gv == 0.0 {
            converged = true;
            break;
        }
        if gv > 0.0 {
            hi = tau;
        } else {
            lo = tau;
        }
        let mut next = tau - gv / dg(tau);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - tau).abs() <= 2.0 * f64::EPSILON * tau.max(1e-300) || hi - lo <= 2.0 * f64::EPSILON * hi;
        tau = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            solver: "chord",
            iterations: NEWTON_CAP,
            residual: g(tau).abs(),
        });
    }

    let t1 = t + tau;
    let j1 = table.jet(t1);
    let tan1 = j1.d1 / j1.speed();
    let theta1 = (-tan1.perp(&u)).atan2(tan1.dot(&u));
    Ok((t1, theta1.clamp(0.0, PI)))
}

fn bracket_failure(t: f64, theta: f64) -> Error {
    Error::Domain(format!("no chord found from parameter {t} at angle {theta}"))
}

/// The billiard map `f(s, θ) = (s′, θ′)` with `s′` reduced to `[0, ℓ)`.
pub fn step(table: &Table, p: PhasePoint) -> Result<PhasePoint> {
    let l = table.perimeter();
    let s = p.s.rem_euclid(l);
    check_theta(p.theta)?;
    if p.theta < GRAZING || p.theta > PI - GRAZING {
        return Ok(PhasePoint::new(s, p.theta));
    }
    let (t1, theta1) = step_param(table, table.angle_of_arc(s), p.theta)?;
    Ok(PhasePoint::new(table.arc_of_angle(t1).rem_euclid(l), theta1))
}

/// Chord length and its partial derivatives in both arc-length arguments.
pub fn generating(table: &Table, s: f64, s2: f64) -> Result<(f64, f64, f64)> {
    let p = table.point(s);
    let q = table.point(s2);
    let r = q.pos - p.pos;
    let d = r.norm();
    if d <= 1e-14 * table.perimeter() {
        return Err(Error::Domain(format!(
            "coincident boundary points at s = {s}, s′ = {s2}"
        )));
    }
    let u = r / d;
    Ok((d, -p.tangent.dot(&u), q.tangent.dot(&u)))
}

/// Iterate `n` bounces from `p`, keeping the winding count.
pub fn trajectory(table: &Table, p: PhasePoint, n: usize) -> Result<Vec<TrajectoryPoint>> {
    let l = table.perimeter();
    let mut t = table.angle_of_arc(p.s.rem_euclid(l));
    let mut theta = p.theta;
    let mut winding = 0_i64;
    let mut out = Vec::with_capacity(n + 1);
    let record = |k: usize, winding: i64, t: f64, theta: f64| TrajectoryPoint {
        n: k,
        winding,
        s: table.arc_of_angle(t),
        theta,
        pos: table.jet(t).pos,
    };
    out.push(record(0, 0, t, theta));
    for k in 1..=n {
        let (t1, theta1) = step_param(table, t, theta)?;
        theta = theta1;
        t = t1;
        if t >= TAU {
            t -= TAU;
            winding += 1;
        }
        out.push(record(k, winding, t, theta));
    }
    Ok(out)
}

/// `x_n / (n ℓ)` on the lift, reduced to `[0, 1)`.
pub fn rotation_estimate(table: &Table, p: PhasePoint, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("rotation estimate needs n >= 1".into()));
    }
    let traj = trajectory(table, p, n)?;
    let l = table.perimeter();
    let x0 = traj[0].lift(l);
    let xn = traj[n].lift(l);
    let rho = (xn - x0) / (n as f64 * l);
    Ok(rho - rho.floor())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Harmonic, TableSpec};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn tables() -> &'static [Table; 3] {
        static T: OnceLock<[Table; 3]> = OnceLock::new();
        T.get_or_init(|| {
            [
                Table::ellipse(2.0, 1.0).unwrap(),
                Table::new(TableSpec::Radial {
                    radius: 1.0,
                    harmonics: vec![Harmonic {
                        m: 3,
                        eps: 0.05,
                        phase: 0.0,
                    }],
                })
                .unwrap(),
                Table::circle(1.0).unwrap(),
            ]
        })
    }

    #[test]
    fn circle_advances_by_twice_theta() {
        let t = &tables()[2];
        for &(s, th) in &[(0.0, 0.3), (1.0, 1.2), (5.0, 2.9), (3.0, 0.001)] {
            let q = step(t, PhasePoint::new(s, th)).unwrap();
            let expect = (s + 2.0 * th).rem_euclid(TAU);
            let ds = (q.s - expect + PI).rem_euclid(TAU) - PI;
            assert!(ds.abs() < 1e-12, "s {s} theta {th}: {q:?}");
            assert!((q.theta - th).abs() < 1e-12);
        }
    }

    #[test]
    fn grazing_is_fixed() {
        let t = &tables()[0];
        assert_eq!(step(t, PhasePoint::new(1.5, 0.0)).unwrap(), PhasePoint::new(1.5, 0.0));
        assert_eq!(step(t, PhasePoint::new(1.5, PI)).unwrap(), PhasePoint::new(1.5, PI));
        assert!(step(t, PhasePoint::new(1.5, -0.1)).is_err());
    }

    // Oracle: a chord through one focus of an ellipse reflects through the other.
    #[test]
    fn focal_reflection() {
        let t = &tables()[0];
        let c = 3f64.sqrt();
        for &s in &[0.4, 1.7, 3.0, 6.1, 8.8] {
            let p = t.point(s);
            let to_focus = Vec2::new(c, 0.0) - p.pos;
            let theta = p.tangent.perp(&to_focus).atan2(p.tangent.dot(&to_focus));
            let q = step(t, PhasePoint::new(s, theta)).unwrap();
            // The incoming chord must end where the line through the focus exits.
            let hit = line_ellipse_exit(p.pos, to_focus / to_focus.norm(), 2.0, 1.0);
            assert!((t.point(q.s).pos - hit).norm() < 1e-10);
            let b = t.point(q.s);
            let n = Vec2::new(-b.tangent.y, b.tangent.x);
            let v = q.theta.cos() * b.tangent + q.theta.sin() * n;
            let miss = v.perp(&(Vec2::new(-c, 0.0) - b.pos));
            assert!(miss.abs() < 1e-9, "s {s}: miss {miss:e}");
        }
    }

    fn line_ellipse_exit(p: Vec2, u: Vec2, a: f64, b: f64) -> Vec2 {
        let qa = u.x * u.x / (a * a) + u.y * u.y / (b * b);
        let qb = 2.0 * (p.x * u.x / (a * a) + p.y * u.y / (b * b));
        let qc = p.x * p.x / (a * a) + p.y * p.y / (b * b) - 1.0;
        let disc = (qb * qb - 4.0 * qa * qc).sqrt();
        let r = [(-qb + disc) / (2.0 * qa), (-qb - disc) / (2.0 * qa)];
        let far = if r[0].abs() > r[1].abs() { r[0] } else { r[1] };
        p + far * u
    }

    #[test]
    fn generating_examples() {
        let c = &tables()[2];
        let (d, ds, _) = generating(c, 0.0, PI).unwrap();
        assert!((d - 2.0).abs() < 1e-14);
        assert!(ds.abs() < 1e-14);
        let e = &tables()[0];
        let (d, _, _) = generating(e, 0.0, e.perimeter() / 2.0).unwrap();
        assert!((d - 4.0).abs() < 1e-12);
        assert!(generating(e, 1.0, 1.0).is_err());
    }

    #[test]
    fn rotation_examples() {
        let c = &tables()[2];
        let rho = rotation_estimate(c, PhasePoint::new(0.3, PI / 5.0), 50).unwrap();
        assert!((rho - 0.2).abs() < 1e-9);
        let rho0 = rotation_estimate(c, PhasePoint::new(0.3, 0.0), 10).unwrap();
        assert_eq!(rho0, 0.0);
    }

    proptest! {
        #[test]
        fn generating_partials_match_differences(s in 0.0f64..10.0, gap in 0.5f64..5.0, which in 0usize..2) {
            let t = &tables()[which];
            let s2 = s + gap;
            let (_, ds, ds2) = generating(t, s, s2).unwrap();
            let h = 1e-5;
            let d = |a: f64, b: f64| (t.point(b).pos - t.point(a).pos).norm();
            let fd1 = (d(s + h, s2) - d(s - h, s2)) / (2.0 * h);
            let fd2 = (d(s, s2 + h) - d(s, s2 - h)) / (2.0 * h);
            prop_assert!((ds - fd1).abs() < 1e-6);
            prop_assert!((ds2 - fd2).abs() < 1e-6);
        }

        #[test]
        fn generating_matches_reflection_law(s in 0.0f64..10.0, theta in 0.05f64..3.09, which in 0usize..2) {
            let t = &tables()[which];
            let q = step(t, PhasePoint::new(s, theta)).unwrap();
            let (_, ds, ds2) = generating(t, s, q.s).unwrap();
            prop_assert!((ds + theta.cos()).abs() < 1e-9);
            prop_assert!((ds2 - q.theta.cos()).abs() < 1e-9);
        }

        #[test]
        fn time_reversal(s in 0.0f64..10.0, theta in 0.01f64..3.13, which in 0usize..2) {
            let t = &tables()[which];
            let l = t.perimeter();
            let p = PhasePoint::new(s.rem_euclid(l), theta);
            let back = step(t, step(t, p).unwrap().reversed()).unwrap().reversed();
            let ds = (back.s - p.s + l / 2.0).rem_euclid(l) - l / 2.0;
            prop_assert!(ds.abs() < 1e-9);
            prop_assert!((back.theta - p.theta).abs() < 1e-9);
        }

        #[test]
        fn area_preserving_and_twist(s in 0.0f64..10.0, theta in 0.2f64..2.9, which in 0usize..2) {
            let t = &tables()[which];
            let l = t.perimeter();
            let y = theta.cos();
            let map = |s: f64, y: f64| {
                let q = step(t, PhasePoint::new(s, y.acos())).unwrap();
                ((q.s - s).rem_euclid(l), q.theta.cos())
            };
            let h = 1e-5;
            let (sp, yp) = map(s + h, y);
            let (sm, ym) = map(s - h, y);
            let (su, yu) = map(s, y + h);
            let (sd, yd) = map(s, y - h);
            // Differences of s′ − s, so add the identity back on the diagonal.
            let j11 = (sp - sm) / (2.0 * h) + 1.0;
            let j21 = (yp - ym) / (2.0 * h);
            let j12 = (su - sd) / (2.0 * h);
            let j22 = (yu - yd) / (2.0 * h);
            prop_assert!((j11 * j22 - j12 * j21 - 1.0).abs() < 1e-6);
            // Twist: s′ increases with θ, i.e. decreases with y = cos θ.
            prop_assert!(j12 < 0.0);
        }
    }
}
