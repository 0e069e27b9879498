use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Serialize;
use serde_json::{json, Value};

use billiards_core::billiard::{self, PhasePoint, GRAZING};
use billiards_core::elliptic::{build_conjugacy, eccentricity_witness, HyperbolicDecision};
use billiards_core::export;
use billiards_core::invariants::{
    fit_mm, fit_normalized_beta, mm_ratio_check, sample_lq, BetaSamples, InvariantReport, LqSample, MAX_CONDITION,
    MAX_FIT_OMEGA,
};
use billiards_core::orbits::{find_orbit_pair, STATIONARITY_TOL};
use billiards_core::table::{EllipseParams, Table, TableSpec};

use crate::{ClassArg, Command, ConjugacyArgs, Failure, OrbitArgs, PairArgs, PairSweepArgs, SweepArgs};

#[derive(Debug, Serialize)]
struct Tolerances {
    stationarity: f64,
    max_condition: f64,
    max_fit_omega: f64,
    grazing: f64,
}

const TOLERANCES: Tolerances = Tolerances {
    stationarity: STATIONARITY_TOL,
    max_condition: MAX_CONDITION,
    max_fit_omega: MAX_FIT_OMEGA,
    grazing: GRAZING,
};

/// Machine-readable record of one run, written as `summary.json`.
#[derive(Debug, Serialize)]
pub struct Summary {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: Value,
    tolerances: Tolerances,
    outputs: Vec<String>,
    result: Value,
    exit_code: u8,
    error: Option<String>,
}

impl Summary {
    fn new(command: &'static str, config: Value) -> Self {
        Summary {
            tool: "billiards",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            tolerances: TOLERANCES,
            outputs: Vec::new(),
            result: Value::Null,
            exit_code: 0,
            error: None,
        }
    }

    pub fn with_error(mut self, f: &Failure) -> Self {
        self.exit_code = f.code();
        self.error = Some(f.message());
        self
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join("summary.json"))?);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()
    }
}

type Outcome = std::result::Result<Summary, (Failure, Summary)>;

pub fn run(command: &Command) -> Outcome {
    let (name, config) = match command {
        Command::Beta(a) => ("beta", json!(a)),
        Command::Mm(a) => ("mm", json!(a)),
        Command::Compare(a) => ("compare", json!(a)),
        Command::Conjugacy(a) => ("conjugacy", json!(a)),
        Command::Witness(a) => ("witness", json!(a)),
        Command::Orbit(a) => ("orbit", json!(a)),
    };
    let mut summary = Summary::new(name, config);
    let result = match command {
        Command::Beta(a) => beta(a, &mut summary),
        Command::Mm(a) => mm(a, &mut summary),
        Command::Compare(a) => compare(a, &mut summary),
        Command::Conjugacy(a) => conjugacy(a, &mut summary),
        Command::Witness(a) => witness(a, &mut summary),
        Command::Orbit(a) => orbit(a, &mut summary),
    };
    match result {
        Ok(()) => Ok(summary),
        Err(f) => Err((f, summary)),
    }
}

type Step = std::result::Result<(), Failure>;

fn load_table(path: &Path) -> std::result::Result<Table, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading table {}", path.display()))
        .map_err(Failure::Input)?;
    let spec: TableSpec = serde_json::from_str(&text)
        .with_context(|| format!("parsing table {}", path.display()))
        .map_err(Failure::Input)?;
    Table::new(spec)
        .with_context(|| format!("table {}", path.display()))
        .map_err(Failure::Input)
}

fn require_ellipse(table: &Table, command: &str) -> std::result::Result<EllipseParams, Failure> {
    table
        .ellipse_params()
        .ok_or_else(|| Failure::Input(anyhow!("{command} requires elliptic tables")))
}

fn check_sweep(a: &SweepArgs) -> Step {
    if a.qmin < 5 || a.qmin > a.qmax {
        return Err(Failure::Input(anyhow!(
            "q range [{}, {}] must satisfy 5 <= qmin <= qmax",
            a.qmin,
            a.qmax
        )));
    }
    Ok(())
}

fn create(dir: &Path, name: &str, summary: &mut Summary) -> std::result::Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    let path: PathBuf = dir.join(name);
    let f = File::create(&path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(Failure::Input)?;
    summary.outputs.push(name.to_string());
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, summary: &mut Summary) -> Step {
    let mut w = create(dir, name, summary)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Input(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

struct Fitted {
    table: Table,
    lq: Vec<LqSample>,
    samples: BetaSamples,
    report: InvariantReport,
}

fn fit_table(table: Table, a: &SweepArgs, need_normalized: bool) -> std::result::Result<Fitted, Failure> {
    log::info!("sampling q in [{}, {}]", a.qmin, a.qmax);
    let lq = sample_lq(&table, a.qmin..=a.qmax)?;
    let samples = BetaSamples::from_lq(&table, &lq)?;
    let normalized = match fit_normalized_beta(&samples, a.k) {
        Ok(f) => Some(f),
        Err(e) if !need_normalized => {
            log::warn!("normalized fit skipped: {e}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let mm = fit_mm(&table, &lq, a.k)?;
    let report = InvariantReport::new(&table, a.k, normalized, Some(mm));
    Ok(Fitted {
        table,
        lq,
        samples,
        report,
    })
}

fn report_result(r: &InvariantReport) -> Value {
    json!({
        "perimeter": r.perimeter,
        "lazutkin_perimeter": r.lazutkin_perimeter,
        "normalized_coefficients": r.normalized.as_ref().map(|n| &n.fit.coefficients),
        "mm_coefficients": r.marvizi_melrose.as_ref().map(|m| &m.fit.coefficients),
        "mm_invariants": r.mm_invariants,
    })
}

fn beta(a: &SweepArgs, summary: &mut Summary) -> Step {
    check_sweep(a)?;
    let f = fit_table(load_table(&a.table)?, a, true)?;
    let dir = &a.common.out;
    export::write_beta(create(dir, "beta.csv", summary)?, &f.samples)?;
    write_json(dir, "report.json", &f.report, summary)?;
    summary.result = report_result(&f.report);
    Ok(())
}

fn mm(a: &SweepArgs, summary: &mut Summary) -> Step {
    check_sweep(a)?;
    let f = fit_table(load_table(&a.table)?, a, false)?;
    let dir = &a.common.out;
    export::write_lq(create(dir, "lq.csv", summary)?, &f.lq)?;
    write_json(dir, "report.json", &f.report, summary)?;
    let mut result = report_result(&f.report);
    let gap =
        f.lq.iter()
            .map(|s| json!({"q": s.q, "scaled_gap": (s.q as f64).powi(6) * (s.max_length - s.min_length)}))
            .collect::<Vec<_>>();
    result["q6_gap"] = Value::Array(gap);
    result["perimeter_error"] = json!(f
        .report
        .marvizi_melrose
        .as_ref()
        .map(|m| m.fit.coefficients[0] - f.table.perimeter()));
    summary.result = result;
    Ok(())
}

fn compare(a: &PairSweepArgs, summary: &mut Summary) -> Step {
    check_sweep(&a.sweep)?;
    let (t1, t2) = (load_table(&a.sweep.table)?, load_table(&a.table2)?);
    let first = fit_table(t1, &a.sweep, true)?;
    let second = fit_table(t2, &a.sweep, true)?;
    let (n1, n2) = match (&first.report.normalized, &second.report.normalized) {
        (Some(x), Some(y)) => (x, y),
        _ => unreachable!("normalized fits are required above"),
    };
    let coefficients: Vec<Value> = n1
        .fit
        .coefficients
        .iter()
        .zip(&n2.fit.coefficients)
        .enumerate()
        .map(|(j, (x, y))| {
            json!({
                "order": 2 * j + 3,
                "first": x,
                "second": y,
                "abs_diff": (x - y).abs(),
                "rel_diff": ((x - y) / y).abs(),
            })
        })
        .collect();
    let m1 = first.report.marvizi_melrose.as_ref().expect("mm fit present");
    let m2 = second.report.marvizi_melrose.as_ref().expect("mm fit present");
    let ratios = mm_ratio_check(m1, m2)?;
    let dir = &a.sweep.common.out;
    let mut w = create(dir, "ratios.csv", summary)?;
    writeln!(w, "n,measured,predicted,relative_deviation")?;
    for r in &ratios {
        writeln!(
            w,
            "{},{:e},{:e},{:e}",
            r.n, r.measured, r.predicted, r.relative_deviation
        )?;
    }
    w.flush()?;
    let body = json!({
        "first": first.report,
        "second": second.report,
        "coefficients": coefficients,
        "ratios": ratios,
    });
    write_json(dir, "compare.json", &body, summary)?;
    summary.result = json!({ "coefficients": coefficients, "ratios": ratios });
    Ok(())
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), Failure> {
    let bad = || Failure::Input(anyhow!("grid must look like 200x50, got {s:?}"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let ns: usize = a.trim().parse().map_err(|_| bad())?;
    let nt: usize = b.trim().parse().map_err(|_| bad())?;
    if ns == 0 || nt == 0 {
        return Err(bad());
    }
    Ok((ns, nt))
}

fn conjugacy(a: &ConjugacyArgs, summary: &mut Summary) -> Step {
    let (ns, nt) = parse_grid(&a.grid)?;
    let e1 = require_ellipse(&load_table(&a.table)?, "conjugacy")?;
    let e2 = require_ellipse(&load_table(&a.table2)?, "conjugacy")?;
    let h = build_conjugacy(&e1, &e2)?;
    let rows = h.residual_grid(ns, nt, a.margin)?;
    export::write_residuals(create(&a.common.out, "residuals.csv", summary)?, &rows)?;
    let max_s = rows.iter().map(|r| r.residual_s.abs()).fold(0.0, f64::max);
    let max_t = rows.iter().map(|r| r.residual_theta.abs()).fold(0.0, f64::max);
    let worst = max_s.max(max_t);
    summary.result = json!({
        "theta_star": h.theta_star(),
        "theta_star_source": h.theta_star_source(),
        "theta_star_image": h.theta_star_image(),
        "grid": [ns, nt],
        "max_residual_s": max_s,
        "max_residual_theta": max_t,
        "max_residual": worst,
        "within_threshold": worst <= a.threshold,
    });
    if !(worst <= a.threshold) {
        return Err(Failure::Threshold(format!(
            "max conjugacy residual {worst:e} exceeds threshold {:e}",
            a.threshold
        )));
    }
    Ok(())
}

fn decision_json(d: &HyperbolicDecision) -> Value {
    match *d {
        HyperbolicDecision::Exists { xi, g } => json!({"exists": true, "xi_root": xi, "g": g}),
        HyperbolicDecision::NotExists { u_min, xi_at_min } => {
            json!({"exists": false, "u_min": u_min, "xi_at_min": xi_at_min})
        }
    }
}

fn witness(a: &PairArgs, summary: &mut Summary) -> Step {
    let e1 = require_ellipse(&load_table(&a.table)?, "witness")?;
    let e2 = require_ellipse(&load_table(&a.table2)?, "witness")?;
    let body = match eccentricity_witness(&e1, &e2)? {
        Some(w) => {
            let (xi, u) = match (w.eccentric, w.round) {
                (HyperbolicDecision::Exists { xi, .. }, HyperbolicDecision::NotExists { u_min, .. }) => {
                    (Some(xi), u_min)
                }
                _ => (None, None),
            };
            let body = json!({
                "e1": w.e1,
                "e2": w.e2,
                "interval": [w.interval.0, w.interval.1],
                "witness": {"m": w.m, "n": w.n},
                "m": w.m,
                "n": w.n,
                "xi_root": xi,
                "u_min": u,
                "confirmed": w.confirmed(),
                "eccentric": decision_json(&w.eccentric),
                "round": decision_json(&w.round),
            });
            if !w.confirmed() {
                write_json(&a.common.out, "witness.json", &body, summary)?;
                summary.result = body;
                return Err(Failure::Solver(anyhow!(
                    "witness {}/{} not confirmed by the hyperbolic-caustic test",
                    w.m,
                    w.n
                )));
            }
            body
        }
        None => {
            let (x, y) = (e1.eccentricity(), e2.eccentricity());
            let (hi_e, lo_e) = if x >= y { (&e1, &e2) } else { (&e2, &e1) };
            json!({
                "e1": hi_e.eccentricity(),
                "e2": lo_e.eccentricity(),
                "interval": [
                    billiards_core::elliptic::hyperbolic_threshold(hi_e),
                    billiards_core::elliptic::hyperbolic_threshold(lo_e)
                ],
                "witness": "none",
            })
        }
    };
    write_json(&a.common.out, "witness.json", &body, summary)?;
    summary.result = body;
    Ok(())
}

fn orbit(a: &OrbitArgs, summary: &mut Summary) -> Step {
    if a.q.is_none() && a.launch.is_none() {
        return Err(Failure::Input(anyhow!("orbit needs --q, --launch, or both")));
    }
    let table = load_table(&a.table)?;
    let dir = &a.common.out;
    let mut result = serde_json::Map::new();
    if let Some(q) = a.q {
        let (best, worst) = find_orbit_pair(&table, a.p, q)?;
        for (class, o) in [(ClassArg::Max, &best), (ClassArg::Min, &worst)] {
            let wanted = matches!(
                (a.class, class),
                (ClassArg::Both, _) | (ClassArg::Max, ClassArg::Max) | (ClassArg::Min, ClassArg::Min)
            );
            if !wanted {
                continue;
            }
            let name = match class {
                ClassArg::Max => "orbit_max.csv",
                _ => "orbit_min.csv",
            };
            export::write_orbit(create(dir, name, summary)?, &table, o)?;
            let key = if matches!(class, ClassArg::Max) { "max" } else { "min" };
            result.insert(
                key.into(),
                json!({"length": o.length, "residual": o.residual, "beta": -o.length / q as f64}),
            );
        }
    }
    if let Some(l) = &a.launch {
        let p = PhasePoint::new(l[0], l[1]);
        let traj = billiard::trajectory(&table, p, a.steps)?;
        export::write_trajectory(create(dir, "trajectory.csv", summary)?, &traj)?;
        let rho = billiard::rotation_estimate(&table, p, a.steps.max(1))?;
        result.insert("rotation_estimate".into(), json!(rho));
    }
    summary.result = Value::Object(result);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("200x50").unwrap(), (200, 50));
        assert_eq!(parse_grid("3X4").unwrap(), (3, 4));
        assert!(parse_grid("200").is_err());
        assert!(parse_grid("0x5").is_err());
    }
}
