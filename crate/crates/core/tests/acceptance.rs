//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use billiards_core::billiard::{self, PhasePoint};
use billiards_core::elliptic::{
    build_conjugacy, caustic_param, caustic_param_oracle, eccentricity_witness, hyperbolic_orbit_exists, orbit_shift,
    Caustic, EllipticBilliard, HyperbolicDecision,
};
use billiards_core::invariants::{
    fit_mm, fit_normalized_beta, mather_alpha, mm_ratio_check, sample_lq, BetaSamples, LqSample, MmFit, NormalizedBeta,
    DEFAULT_K, DEFAULT_Q_RANGE,
};
use billiards_core::orbits::beta_at;
use billiards_core::special::{ellip_f, ellip_k, ellip_k_agm, jacobi_am, Modulus};
use billiards_core::table::{EllipseParams, Harmonic, Table, TableSpec};
use billiards_core::Result;

struct Sweep {
    table: Table,
    lq: Vec<LqSample>,
    samples: BetaSamples,
    normalized: NormalizedBeta,
    mm: MmFit,
}

fn sweep(table: Table) -> Result<Sweep> {
    let lq = sample_lq(&table, DEFAULT_Q_RANGE)?;
    let samples = BetaSamples::from_lq(&table, &lq)?;
    let normalized = fit_normalized_beta(&samples, DEFAULT_K)?;
    let mm = fit_mm(&table, &lq, DEFAULT_K)?;
    Ok(Sweep {
        table,
        lq,
        samples,
        normalized,
        mm,
    })
}

fn perturbed(scale: f64) -> Table {
    Table::new(TableSpec::Radial {
        radius: scale,
        harmonics: vec![Harmonic {
            m: 3,
            eps: 0.05,
            phase: 0.0,
        }],
    })
    .unwrap()
}

fn ecc(e: f64) -> EllipseParams {
    EllipseParams::from_eccentricity(1.0, e).unwrap()
}

fn lambda_value(e: &EllipseParams, c: Caustic) -> f64 {
    match c {
        Caustic::Ellipse(l) | Caustic::Hyperbola(l) => l,
        Caustic::Focal => e.b,
    }
}

fn rel(x: f64, y: f64) -> f64 {
    (x / y - 1.0).abs()
}

fn wrapped(d: f64, period: f64) -> f64 {
    let r = d.rem_euclid(period);
    r.min(period - r)
}

type Outcome = Result<(bool, String)>;

fn c1_circle_exactness() -> Outcome {
    let worst = [1.0, 3.0]
        .par_iter()
        .map(|&r| {
            let t = Table::circle(r)?;
            (3..=50u32)
                .into_par_iter()
                .map(|q| Ok((beta_at(&t, 1, q)? + 2.0 * r * (PI / q as f64).sin()).abs()))
                .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok((
        worst <= 1e-9,
        format!("max |β(1/q) + 2R sin(π/q)| = {worst:.2e} (tol 1e-9)"),
    ))
}

fn c2_cubic(sw: &[&Sweep; 3]) -> Outcome {
    let c3: Vec<f64> = sw.iter().map(|s| s.normalized.c(3).unwrap()).collect();
    let dev = c3.iter().map(|c| (c - 1.0 / 24.0).abs()).fold(0.0, f64::max);
    let c5 = sw[0].normalized.c(5).unwrap();
    let c5_rel = rel(c5, -PI * PI / 480.0);
    Ok((
        dev <= 1e-4 && c5_rel <= 1e-3,
        format!(
            "c3 (circle, ellipse, perturbed) = {:.8}, {:.8}, {:.8}; max |c3 - 1/24| = {dev:.2e} (tol 1e-4); circle c5 rel err {c5_rel:.2e} (tol 1e-3)",
            c3[0], c3[1], c3[2]
        ),
    ))
}

fn c3_marvizi_melrose(sw: &[&Sweep; 3]) -> Outcome {
    let l0 = sw
        .iter()
        .map(|s| (s.mm.ell(0).unwrap() - s.table.perimeter()).abs())
        .fold(0.0, f64::max);
    let l1 = rel(sw[0].mm.ell(1).unwrap(), -PI.powi(3) / 3.0);
    // Ellipse: L_q = l_q exactly, so q⁶(L_q − l_q) → 0 reduces to the gap
    // sitting at roundoff for every q.
    let gap = sw[1]
        .lq
        .iter()
        .filter(|s| (20..=120).contains(&s.q))
        .map(|s| (s.max_length - s.min_length).abs() / s.max_length)
        .fold(0.0, f64::max);
    Ok((
        l0 <= 1e-6 && l1 <= 1e-5 && gap <= 1e-12,
        format!(
            "max |ℓ0 - perimeter| = {l0:.2e} (tol 1e-6); circle ℓ1 rel err {l1:.2e} (tol 1e-5); ellipse max (L_q - l_q)/L_q over q in [20,120] = {gap:.2e} (tol 1e-12)"
        ),
    ))
}

fn c4_scaling(base: &Sweep, scaled: &Sweep) -> Outcome {
    let coeff = [3, 5, 7]
        .iter()
        .map(|&o| rel(scaled.normalized.c(o).unwrap(), base.normalized.c(o).unwrap()))
        .fold(0.0, f64::max);
    let ratios = mm_ratio_check(&base.mm, &scaled.mm)?;
    let ratio = ratios
        .iter()
        .filter(|r| r.n <= 2)
        .map(|r| r.relative_deviation)
        .fold(0.0, f64::max);
    Ok((
        coeff <= 1e-4 && ratio <= 1e-3,
        format!("max rel diff c3,c5,c7 under 3x scaling = {coeff:.2e} (tol 1e-4); ratio law n in {{1,2}} max rel dev = {ratio:.2e} (tol 1e-3)"),
    ))
}

fn c5_caustic() -> Outcome {
    let mut grid = 0.0_f64;
    for e in [0.0, 0.5, 0.8].map(ecc) {
        for i in 0..100 {
            let phi = TAU * i as f64 / 100.0;
            for j in 1..=100 {
                let theta = PI * j as f64 / 101.0;
                let d = lambda_value(&e, caustic_param(&e, phi, theta))
                    - lambda_value(&e, caustic_param_oracle(&e, phi, theta));
                grid = grid.max(d.abs());
            }
        }
    }
    let mut drift = 0.0_f64;
    for e in [0.0, 0.5, 0.8].map(ecc) {
        let eb = EllipticBilliard::new(e)?;
        for &(s, theta) in &[(0.0, 0.2), (0.7, 0.6), (1.3, 1.2), (2.9, 1.5)] {
            let traj = billiard::trajectory(eb.table(), PhasePoint::new(s, theta), 1000)?;
            let lam = |p: &billiard::TrajectoryPoint| lambda_value(&e, caustic_param(&e, eb.angle(p.s), p.theta));
            let l0 = lam(&traj[0]);
            drift = traj.iter().map(|p| (lam(p) - l0).abs()).fold(drift, f64::max);
        }
    }
    Ok((
        grid <= 1e-10 && drift <= 1e-9,
        format!("max |closed form - tangency oracle| = {grid:.2e} (tol 1e-10); max caustic drift over 1000 bounces = {drift:.2e} (tol 1e-9)"),
    ))
}

fn c6_conjugacy() -> Outcome {
    let grid_max = |e1: EllipseParams, e2: EllipseParams| -> Result<f64> {
        let rows = build_conjugacy(&e1, &e2)?.residual_grid(200, 50, 0.01)?;
        Ok(rows.iter().map(|r| r.max_abs()).fold(0.0, f64::max))
    };
    let e = |a, b| EllipseParams::new(a, b).unwrap();
    let p1 = grid_max(e(2.0, 1.0), e(3.0, 2.0))?;
    let p2 = grid_max(e(2.0, 1.0), e(5.0, 1.5))?;
    let id = grid_max(e(2.0, 1.0), e(2.0, 1.0))?;
    // Circles: h(s, θ) = (s R₁/R₂, θ).
    let (r1, r2) = (1.0, 2.5);
    let h = build_conjugacy(&e(r1, r1), &e(r2, r2))?;
    let mut circ = grid_max(e(r1, r1), e(r2, r2))?;
    let l2 = TAU * r2;
    for i in 0..200 {
        for j in 0..50 {
            let s = l2 * i as f64 / 200.0;
            let theta = 0.01 + (FRAC_PI_2 - 0.02) * j as f64 / 49.0;
            let q = h.apply(PhasePoint::new(s, theta))?;
            let ds = wrapped(q.s - s * r1 / r2, TAU * r1);
            circ = circ.max(ds).max((q.theta - theta).abs());
        }
    }
    Ok((
        p1 <= 1e-6 && p2 <= 1e-6 && id <= 1e-10 && circ <= 1e-10,
        format!(
            "sup residual (2,1)/(3,2) = {p1:.2e}, (2,1)/(5,1.5) = {p2:.2e} (tol 1e-6); identity = {id:.2e}, circle rescaling = {circ:.2e} (tol 1e-10)"
        ),
    ))
}

fn c7_shift() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst = 0.0_f64;
    for (a, b) in [(2.0, 1.0), (3.0, 2.0), (5.0, 1.5), (1.0, 0.6)] {
        let eb = EllipticBilliard::new(EllipseParams::new(a, b)?)?;
        let ts = eb.params().theta_star();
        for _ in 0..500 {
            let p = PhasePoint::new(rng.random_range(0.0..eb.perimeter()), rng.random_range(1e-3..ts - 1e-3));
            let c = eb.action_angle(p)?;
            let c1 = eb.action_angle(billiard::step(eb.table(), p)?)?;
            let dt = wrapped(c1.t - c.t - orbit_shift(eb.params(), c.lambda)?, c.period);
            worst = worst.max(dt).max((c1.lambda - c.lambda).abs());
        }
    }
    Ok((
        worst <= 1e-8,
        format!("max shift residual over 4 x 500 random points = {worst:.2e} (tol 1e-8)"),
    ))
}

fn c8_hyperbolic() -> Outcome {
    let e = ecc(0.8);
    let c2 = e.focal().powi(2);
    let (root_ok, root) = match hyperbolic_orbit_exists(&e, 1, 4)? {
        HyperbolicDecision::Exists { xi, g } => (
            xi > -c2 && xi < 0.0 && g.abs() <= 1e-10,
            format!("ξ = {xi:.10}, |g| = {:.2e}", g.abs()),
        ),
        d => (false, format!("{d:?}")),
    };
    let (min_ok, min) = match hyperbolic_orbit_exists(&e, 1, 5)? {
        HyperbolicDecision::NotExists { u_min: Some(u), .. } => (u > 0.0, format!("min u = {u:.5e}")),
        d => (false, format!("{d:?}")),
    };
    let w = eccentricity_witness(&e, &ecc(0.5))?;
    let w_ok = w.as_ref().is_some_and(|w| (w.m, w.n) == (1, 4) && w.confirmed());
    let same = eccentricity_witness(&e, &e)?.is_none();
    Ok((
        root_ok && min_ok && w_ok && same,
        format!(
            "(1,4) {root}; (1,5) {min}; witness(0.8, 0.5) = {:?}; witness(0.8, 0.8) = {}",
            w.map(|w| (w.m, w.n)),
            if same { "none" } else { "found" }
        ),
    ))
}

fn c9_special() -> Outcome {
    let k0 = (ellip_k(Modulus::new(0.0)?) - FRAC_PI_2).abs();
    let ks = Modulus::new(0.5_f64.sqrt())?;
    let agm = (ellip_k(ks) - ellip_k_agm(ks)).abs();
    let mut quasi = 0.0_f64;
    let mut round = 0.0_f64;
    for k in [0.0, 0.1, 0.5, 0.9, 0.99, 0.999_999] {
        let m = Modulus::new(k)?;
        let kk = ellip_k(m);
        for i in 0..=200 {
            let phi = -10.0 + 20.0 * i as f64 / 200.0;
            let f = ellip_f(phi, m);
            quasi = quasi.max((ellip_f(phi + PI, m) - f - 2.0 * kk).abs());
            round = round.max((jacobi_am(f, m) - phi).abs());
        }
    }
    Ok((
        k0 <= 1e-15 && agm <= 1e-13 && quasi <= 1e-11 && round <= 1e-11,
        format!(
            "|K(0) - π/2| = {k0:.1e} (tol 1e-15); |K(1/√2) - AGM| = {agm:.1e} (tol 1e-13); quasi-periodicity {quasi:.1e}, am roundtrip {round:.1e} (tol 1e-11)"
        ),
    ))
}

fn c10_legendre(circle: &Sweep) -> Outcome {
    let mut worst = 0.0_f64;
    for omega in [0.05, 0.1] {
        let c = circle.normalized.beta_prime(omega)?;
        let a = mather_alpha(&circle.samples, c, Some(&circle.normalized))?;
        worst = worst.max((a.slope - omega).abs());
    }
    Ok((
        worst <= 1e-3,
        format!("max |α′(β′(ω)) - ω| at ω in {{0.05, 0.1}} = {worst:.2e} (tol 1e-3)"),
    ))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let tables = vec![
        Table::circle(1.0).unwrap(),
        Table::new(TableSpec::Ellipse {
            a: 1.0,
            b: 0.75_f64.sqrt(),
        })
        .unwrap(),
        perturbed(1.0),
        perturbed(3.0),
    ];
    let sweeps: Vec<Result<Sweep>> = tables.into_par_iter().map(sweep).collect();
    let sweeps: Vec<Sweep> = match sweeps.into_iter().collect() {
        Ok(s) => s,
        Err(e) => {
            println!("acceptance: sweep failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let three = [&sweeps[0], &sweeps[1], &sweeps[2]];

    let checks: Vec<(&str, Box<dyn Fn() -> Outcome + Sync>)> = vec![
        ("circle exactness", Box::new(c1_circle_exactness)),
        ("universal cubic coefficient", Box::new(|| c2_cubic(&three))),
        ("Marvizi-Melrose coefficients", Box::new(|| c3_marvizi_melrose(&three))),
        ("scaling invariance", Box::new(|| c4_scaling(&sweeps[2], &sweeps[3]))),
        ("caustic parameter", Box::new(c5_caustic)),
        ("elliptic conjugacy", Box::new(c6_conjugacy)),
        ("action-angle shift", Box::new(c7_shift)),
        ("hyperbolic-caustic witness", Box::new(c8_hyperbolic)),
        ("special functions", Box::new(c9_special)),
        ("Legendre duality", Box::new(|| c10_legendre(&sweeps[0]))),
    ];
    let results: Vec<Outcome> = checks.par_iter().map(|(_, f)| f()).collect();

    let mut failed = 0;
    for (i, ((name, _), r)) in checks.iter().zip(results).enumerate() {
        let (ok, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<30} {}  {detail}",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        checks.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
