use proptest::prelude::*;

use billiards_core::billiard::{self, PhasePoint};
use billiards_core::elliptic::{
    caustic_param, eccentricity_witness, hyperbolic_orbit_exists, rotation_number_of_caustic, Caustic, EllipticBilliard,
};
use billiards_core::orbits::{beta_at, find_orbit_pair};
use billiards_core::table::{EllipseParams, Harmonic, Table, TableSpec};

fn perturbed() -> Table {
    Table::new(TableSpec::Radial {
        radius: 1.0,
        harmonics: vec![Harmonic {
            m: 3,
            eps: 0.05,
            phase: 0.3,
        }],
    })
    .unwrap()
}

fn polygon_length(t: &Table, arcs: &[f64]) -> f64 {
    let n = arcs.len();
    (0..n)
        .map(|i| billiard::generating(t, arcs[i], arcs[(i + 1) % n]).unwrap().0)
        .sum()
}

#[test]
fn beta_is_symmetric() {
    let t = perturbed();
    for q in [5, 7, 9] {
        let a = beta_at(&t, 1, q).unwrap();
        let b = beta_at(&t, q - 1, q).unwrap();
        assert!((a - b).abs() < 1e-10, "q = {q}: {a} vs {b}");
    }
}

#[test]
fn scaling_multiplies_lengths() {
    let t = perturbed();
    let big = t.scaled(2.5).unwrap();
    for q in [3, 8, 13] {
        let (m1, n1) = find_orbit_pair(&t, 1, q).unwrap();
        let (m2, n2) = find_orbit_pair(&big, 1, q).unwrap();
        assert!((m2.length - 2.5 * m1.length).abs() < 1e-10);
        assert!((n2.length - 2.5 * n1.length).abs() < 1e-10);
        assert!(n1.length <= m1.length);
    }
}

#[test]
fn ellipse_rotation_number_matches_dynamics() {
    let e = EllipseParams::new(2.0, 1.0).unwrap();
    let eb = EllipticBilliard::new(e).unwrap();
    for theta in [0.1, 0.3, 0.45] {
        let p = PhasePoint::new(0.4, theta);
        let lambda = caustic_param(&e, eb.angle(p.s), theta).elliptic().unwrap();
        let omega = rotation_number_of_caustic(&e, lambda).unwrap();
        let rho = billiard::rotation_estimate(eb.table(), p, 20_000).unwrap();
        assert!((rho - omega).abs() < 1e-3, "θ = {theta}: {rho} vs {omega}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn max_orbit_beats_nearby_polygons(q in 3u32..12, seed in prop::collection::vec(-1.0..1.0f64, 12)) {
        let t = perturbed();
        let (max, _) = find_orbit_pair(&t, 1, q).unwrap();
        let h = 0.02 * t.perimeter() / q as f64;
        let moved: Vec<f64> = max.arcs.iter().zip(&seed).map(|(s, d)| s + h * d).collect();
        prop_assert!(polygon_length(&t, &moved) <= max.length + 1e-12);
    }

    #[test]
    fn caustic_is_conserved(a in 1.2..4.0f64, u in 0.0..1.0f64, theta in 0.05..3.0f64) {
        let e = EllipseParams::new(a, 1.0).unwrap();
        let eb = EllipticBilliard::new(e).unwrap();
        let p = PhasePoint::new(u * eb.perimeter(), theta);
        let lam = |p: &PhasePoint| match caustic_param(&e, eb.angle(p.s), p.theta) {
            Caustic::Ellipse(l) | Caustic::Hyperbola(l) => l,
            Caustic::Focal => e.b,
        };
        let l0 = lam(&p);
        let mut q = p;
        for _ in 0..50 {
            q = billiard::step(eb.table(), q).unwrap();
            prop_assert!((lam(&q) - l0).abs() < 1e-10);
        }
    }

    #[test]
    fn witness_separates(e1 in 0.2..0.95f64, gap in 0.02..0.5f64) {
        let e2 = (e1 - gap).max(0.0);
        let p1 = EllipseParams::from_eccentricity(1.0, e1).unwrap();
        let p2 = EllipseParams::from_eccentricity(1.0, e2).unwrap();
        let w = eccentricity_witness(&p2, &p1).unwrap().expect("distinct eccentricities");
        prop_assert!(w.m < w.n && w.n >= 2);
        prop_assert!(hyperbolic_orbit_exists(&p1, w.m, w.n).unwrap().exists());
        prop_assert!(!hyperbolic_orbit_exists(&p2, w.m, w.n).unwrap().exists());
        let rho = w.m as f64 / w.n as f64;
        prop_assert!(rho > w.interval.0 && rho < w.interval.1);
    }
}
