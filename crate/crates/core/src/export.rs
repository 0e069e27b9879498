//! CSV writers for samples, orbits and residual grids.

use std::io::Write;

use crate::billiard::TrajectoryPoint;
use crate::elliptic::ResidualRow;
use crate::invariants::{BetaSamples, LqSample};
use crate::orbits::OrbitConfig;
use crate::table::Table;

fn finish<W: Write>(mut w: csv::Writer<W>) -> std::io::Result<()> {
    w.flush()
}

/// Columns `p, q, omega, beta`.
pub fn write_beta<W: Write>(out: W, samples: &BetaSamples) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "q", "omega", "beta"])?;
    for s in &samples.samples {
        w.serialize((s.p, s.q, s.omega, s.beta))?;
    }
    finish(w)
}

/// Columns `q, L_q, l_q, beta`.
pub fn write_lq<W: Write>(out: W, samples: &[LqSample]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "L_q", "l_q", "beta"])?;
    for s in samples {
        w.serialize((s.q, s.max_length, s.min_length, s.beta))?;
    }
    finish(w)
}

/// Columns `i, s_i, x_i, y_i`.
pub fn write_orbit<W: Write>(out: W, table: &Table, orbit: &OrbitConfig) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "s_i", "x_i", "y_i"])?;
    for (i, (&t, &s)) in orbit.params.iter().zip(&orbit.arcs).enumerate() {
        let p = table.jet(t).pos;
        w.serialize((i, s, p.x, p.y))?;
    }
    finish(w)
}

/// Columns `n, winding, s, theta, x, y`.
pub fn write_trajectory<W: Write>(out: W, points: &[TrajectoryPoint]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "winding", "s", "theta", "x", "y"])?;
    for p in points {
        w.serialize((p.n, p.winding, p.s, p.theta, p.pos.x, p.pos.y))?;
    }
    finish(w)
}

/// Columns `s, theta, residual_s, residual_theta`.
pub fn write_residuals<W: Write>(out: W, rows: &[ResidualRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "theta", "residual_s", "residual_theta"])?;
    for r in rows {
        w.serialize((r.s, r.theta, r.residual_s, r.residual_theta))?;
    }
    finish(w)
}
