//! Birkhoff (p,q)-periodic orbits as critical points of the length functional.
//!
//! Configurations are lifted table parameters `t_0 < … < t_{q−1}` with
//! `t_q = t_0 + 2πp`. The pinned problem fixes `t_0 = σ` and maximizes over
//! the rest; its value `M(σ)` has `M′(σ) = ∂L/∂t_0`. The maximum of `M` is
//! the Birkhoff max orbit, its minimum the minimax orbit.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::neumaier_sum;
use crate::roots::{brent, Tolerance};
use crate::table::{Jet, Table};

/// Vertex stationarity tolerance on the dimensionless gradient `∂L/∂s_i`.
pub const STATIONARITY_TOL: f64 = 1e-10;

const SAMPLES_PER_SPACING: usize = 8;
const PINNED_NEWTON_CAP: usize = 50;
const FULL_NEWTON_CAP: usize = 50;
const MAX_SAMPLES_PER_SPACING: usize = 64;
const KINK: f64 = 1e-6;
// Offsets, in vertex spacings, of the max orbit used to start the minimax search.
const MINIMAX_SHIFTS: [f64; 8] = [0.5, 0.25, 0.75, 0.125, 0.375, 0.625, 0.875, 0.0625];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitClass {
    Max,
    Min,
}

/// A stationary (p,q) configuration.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitConfig {
    pub p: u32,
    pub q: u32,
    pub class: OrbitClass,
    /// Lifted table parameters.
    pub params: Vec<f64>,
    /// Lifted arc lengths, `s_0 ∈ [0, ℓ)`.
    pub arcs: Vec<f64>,
    pub length: f64,
    /// Largest `|∂L/∂s_i|` over the vertices.
    pub residual: f64,
    pub iterations: usize,
}

struct Chain<'a> {
    table: &'a Table,
    p: u32,
    q: usize,
}

// Second-order data of one chord d(t, t′).
struct ChordTerms {
    d: f64,
    d1: f64,
    d2: f64,
    d11: f64,
    d22: f64,
    d12: f64,
}

fn chord_terms(a: &Jet, b: &Jet, r: nalgebra::Vector2<f64>) -> ChordTerms {
    let d = r.norm();
    let u = r / d;
    let (pa, pb) = (a.d1.dot(&u), b.d1.dot(&u));
    ChordTerms {
        d,
        d1: -pa,
        d2: pb,
        d11: -a.d2.dot(&u) + (a.d1.norm_squared() - pa * pa) / d,
        d22: b.d2.dot(&u) + (b.d1.norm_squared() - pb * pb) / d,
        d12: (-a.d1.dot(&b.d1) + pa * pb) / d,
    }
}

struct Derivs {
    length: f64,
    grad: Vec<f64>,
    diag: Vec<f64>,
    // off[i] couples t_i and t_{i+1}; off[q−1] is the cyclic corner.
    off: Vec<f64>,
    speed: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn lift(&self) -> f64 {
        TAU * self.p as f64
    }

    fn next(&self, t: &[f64], i: usize) -> f64 {
        if i + 1 < self.q {
            t[i + 1]
        } else {
            t[0] + self.lift()
        }
    }

    fn ordered(&self, t: &[f64]) -> bool {
        (0..self.q).all(|i| {
            let gap = self.next(t, i) - t[i];
            gap > 0.0 && gap < TAU
        })
    }

    fn length(&self, t: &[f64]) -> f64 {
        neumaier_sum((0..self.q).map(|i| self.table.chord(t[i], self.next(t, i)).norm()))
    }

    fn derivs(&self, t: &[f64]) -> Derivs {
        let q = self.q;
        let jets: Vec<Jet> = t.iter().map(|&x| self.table.jet(x)).collect();
        let mut grad = vec![0.0; q];
        let mut diag = vec![0.0; q];
        let mut off = vec![0.0; q];
        let mut lengths = Vec::with_capacity(q);
        for i in 0..q {
            let j = (i + 1) % q;
            let r = self.table.chord(t[i], self.next(t, i));
            let c = chord_terms(&jets[i], &jets[j], r);
            lengths.push(c.d);
            grad[i] += c.d1;
            grad[j] += c.d2;
            diag[i] += c.d11;
            diag[j] += c.d22;
            off[i] = c.d12;
        }
        Derivs {
            length: neumaier_sum(lengths.into_iter()),
            grad,
            diag,
            off,
            speed: jets.iter().map(|j| j.speed()).collect(),
        }
    }

    fn residual(d: &Derivs, range: std::ops::Range<usize>) -> f64 {
        range.map(|i| (d.grad[i] / d.speed[i]).abs()).fold(0.0, f64::max)
    }

    /// Initial configuration equally spaced in the Lazutkin coordinate.
    fn lazutkin_start(&self, x0: f64) -> Vec<f64> {
        let lam = self.table.lazutkin_perimeter();
        let t0 = self.table.angle_of_lazutkin(x0);
        let mut t: Vec<f64> = (0..self.q)
            .map(|i| {
                let x = x0 + i as f64 * self.p as f64 * lam / self.q as f64;
                self.table.angle_of_lazutkin(x)
            })
            .collect();
        t[0] = t0;
        t
    }

    /// Maximize over `t_1, …, t_{q−1}` with `t_0` fixed. Returns iterations used.
    fn pinned_max(&self, t: &mut [f64]) -> Result<usize> {
        let n = self.q - 1;
        if n == 0 {
            return Ok(0);
        }
        let mut current = self.derivs(t);
        for iter in 0..PINNED_NEWTON_CAP {
            if Self::residual(&current, 1..self.q) <= 0.01 * STATIONARITY_TOL {
                return Ok(iter);
            }
            let a = &current.diag[1..];
            let e = &current.off[1..n];
            let rhs: Vec<f64> = current.grad[1..].iter().map(|g| -g).collect();
            let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let mut mu = 0.0;
            let step = loop {
                if let Some(s) = solve_negative_definite(a, e, &rhs, mu) {
                    break s;
                }
                mu = if mu == 0.0 { 1e-8 * scale } else { 4.0 * mu };
                if mu > 1e8 * scale {
                    return Err(self.not_converged(t, Self::residual(&current, 1..self.q)));
                }
            };
            let mut alpha = 1.0;
            let mut trial = t.to_vec();
            loop {
                for i in 1..self.q {
                    trial[i] = t[i] + alpha * step[i - 1];
                }
                if self.ordered(&trial) {
                    let next = self.derivs(&trial);
                    // Away from the Newton region only strict ascent is accepted,
                    // so the iteration cannot settle on a saddle.
                    let accept = if mu > 0.0 {
                        next.length > current.length
                    } else {
                        next.length >= current.length - 1e-14 * current.length
                            || Self::residual(&next, 1..self.q) < Self::residual(&current, 1..self.q)
                    };
                    if accept {
                        t.copy_from_slice(&trial);
                        current = next;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-10 {
                    let res = Self::residual(&current, 1..self.q);
                    if mu > 0.0 {
                        if let Some(next) = self.escape_saddle(t, &current) {
                            current = next;
                            break;
                        }
                    }
                    if res <= STATIONARITY_TOL {
                        return Ok(iter);
                    }
                    return Err(self.not_converged(t, res));
                }
            }
        }
        let res = Self::residual(&current, 1..self.q);
        if res <= STATIONARITY_TOL {
            Ok(PINNED_NEWTON_CAP)
        } else {
            Err(self.not_converged(t, res))
        }
    }

    // Step along the direction of largest positive curvature of the pinned
    // Hessian, keeping the better side. Returns None without improvement.
    fn escape_saddle(&self, t: &mut [f64], current: &Derivs) -> Option<Derivs> {
        let n = self.q - 1;
        let mut h = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = current.diag[i + 1];
            if i + 1 < n {
                h[(i, i + 1)] = current.off[i + 1];
                h[(i + 1, i)] = current.off[i + 1];
            }
        }
        let eig = h.symmetric_eigen();
        let k = eig.eigenvalues.imax();
        if !(eig.eigenvalues[k] > 0.0) {
            return None;
        }
        let v = eig.eigenvectors.column(k);
        let gap = self.lift() / self.q as f64;
        let mut best: Option<(Vec<f64>, Derivs)> = None;
        for scale in [0.3, 0.1, 0.03, 0.01, 0.003] {
            for sign in [1.0, -1.0] {
                let mut trial = t.to_vec();
                for i in 0..n {
                    trial[i + 1] += sign * scale * gap * v[i];
                }
                if !self.ordered(&trial) {
                    continue;
                }
                let d = self.derivs(&trial);
                let bar = best.as_ref().map_or(current.length, |b| b.1.length);
                if d.length > bar {
                    best = Some((trial, d));
                }
            }
        }
        let (trial, d) = best?;
        t.copy_from_slice(&trial);
        Some(d)
    }

    /// Newton on the full gradient, converging to any nearby critical point.
    fn full_newton(&self, t: &mut [f64]) -> Result<usize> {
        let q = self.q;
        let mut current = self.derivs(t);
        for iter in 0..FULL_NEWTON_CAP {
            let res = Self::residual(&current, 0..q);
            if res <= 0.01 * STATIONARITY_TOL {
                return Ok(iter);
            }
            let mut h = DMatrix::<f64>::zeros(q, q);
            for i in 0..q {
                h[(i, i)] += current.diag[i];
                let j = (i + 1) % q;
                if j == i {
                    h[(i, i)] += 2.0 * current.off[i];
                } else {
                    h[(i, j)] += current.off[i];
                    h[(j, i)] += current.off[i];
                }
            }
            let g = DVector::from_iterator(q, current.grad.iter().map(|x| -x));
            let svd = h.svd(true, true);
            let smax = svd.singular_values.max();
            let step = svd
                .solve(&g, 1e-14 * smax)
                .map_err(|e| Error::Domain(format!("orbit Newton solve: {e}")))?;
            // Along a near-null mode the quadratic model overshoots; the step
            // without that component is tried alongside the full one.
            let truncated = svd
                .solve(&g, 1e-7 * smax)
                .map_err(|e| Error::Domain(format!("orbit Newton solve: {e}")))?;
            let mut alpha = 1.0;
            let mut trial = t.to_vec();
            'search: loop {
                for dir in [&step, &truncated] {
                    for i in 0..q {
                        trial[i] = t[i] + alpha * dir[i];
                    }
                    if self.ordered(&trial) {
                        let next = self.derivs(&trial);
                        if Self::residual(&next, 0..q) < res {
                            t.copy_from_slice(&trial);
                            current = next;
                            break 'search;
                        }
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-6 {
                    if res <= STATIONARITY_TOL {
                        return Ok(iter);
                    }
                    return Err(self.not_converged(t, res));
                }
            }
        }
        let res = Self::residual(&current, 0..q);
        if res <= STATIONARITY_TOL {
            Ok(FULL_NEWTON_CAP)
        } else {
            Err(self.not_converged(t, res))
        }
    }

    // A critical orbit other than the maximizer, no longer than it.
    fn is_minimax(&self, o: &OrbitConfig, best: &OrbitConfig) -> bool {
        if o.length > best.length {
            return false;
        }
        let reduced = |v: &[f64]| {
            let mut r: Vec<f64> = v.iter().map(|x| x.rem_euclid(TAU)).collect();
            r.sort_by(f64::total_cmp);
            r
        };
        let (a, b) = (reduced(&o.params), reduced(&best.params));
        let sep = a
            .iter()
            .zip(&b)
            .map(|(x, y)| {
                let d = (x - y).rem_euclid(TAU);
                d.min(TAU - d)
            })
            .fold(0.0, f64::max);
        sep > 1e-6 * TAU / self.q as f64
    }

    fn not_converged(&self, t: &[f64], residual: f64) -> Error {
        Error::OrbitNotConverged {
            p: self.p,
            q: self.q as u32,
            residual,
            best: t.iter().map(|&x| self.table.arc_of_angle(x)).collect(),
        }
    }

    /// Solve the pinned problem at Lazutkin position `x`.
    fn pinned_at(&self, x: f64) -> Result<(Vec<f64>, Derivs, usize)> {
        let mut t = self.lazutkin_start(x);
        let iters = self.pinned_max(&mut t)?;
        let d = self.derivs(&t);
        Ok((t, d, iters))
    }

    fn finish(&self, mut t: Vec<f64>, class: OrbitClass, iterations: usize) -> Result<OrbitConfig> {
        // Canonical labelling: t_0 is the vertex with the smallest reduced parameter.
        let reduced: Vec<f64> = t.iter().map(|x| x.rem_euclid(TAU)).collect();
        let k = (0..self.q)
            .min_by(|&i, &j| reduced[i].total_cmp(&reduced[j]))
            .expect("q >= 1");
        t.rotate_left(k);
        for x in t.iter_mut().skip(self.q - k) {
            *x += self.lift();
        }
        let shift = (t[0] / TAU).floor() * TAU;
        for x in t.iter_mut() {
            *x -= shift;
        }
        let d = self.derivs(&t);
        let residual = Self::residual(&d, 0..self.q);
        if residual > STATIONARITY_TOL {
            return Err(self.not_converged(&t, residual));
        }
        let arcs: Vec<f64> = t.iter().map(|&x| self.table.arc_of_angle(x)).collect();
        Ok(OrbitConfig {
            p: self.p,
            q: self.q as u32,
            class,
            arcs,
            length: self.length(&t),
            params: t,
            residual,
            iterations,
        })
    }
}

// Solve (H − μI) x = rhs for symmetric tridiagonal H (diag a, off e). Returns
// None unless H − μI is negative definite.
fn solve_negative_definite(a: &[f64], e: &[f64], rhs: &[f64], mu: f64) -> Option<Vec<f64>> {
    let n = a.len();
    let mut dpiv = vec![0.0; n];
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut di = a[i] - mu;
        let mut zi = rhs[i];
        if i > 0 {
            let l = e[i - 1] / dpiv[i - 1];
            di -= l * e[i - 1];
            zi -= l * z[i - 1];
        }
        if !(di < 0.0) {
            return None;
        }
        dpiv[i] = di;
        z[i] = zi;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = z[i];
        if i + 1 < n {
            v -= e[i] * x[i + 1];
        }
        x[i] = v / dpiv[i];
    }
    Some(x)
}

// One evaluation of the pinned value M at Lazutkin position x.
struct Sample {
    x: f64,
    t: Vec<f64>,
    length: f64,
    g0: f64,
}

fn sign_changes(samples: &[Sample]) -> usize {
    let n = samples.len();
    (0..n)
        .filter(|&i| (samples[i].g0 > 0.0) != (samples[(i + 1) % n].g0 > 0.0))
        .count()
}

impl<'a> Chain<'a> {
    // Warm start: `from` advanced by `dx` in the Lazutkin coordinate, to first order.
    fn sample(&self, x: f64, from: Option<&[f64]>, dx: f64, iters: &mut usize) -> Result<Sample> {
        let warm = from.and_then(|from| {
            let mut t = from.to_vec();
            for v in t.iter_mut() {
                let j = self.table.jet(*v);
                *v += dx / (j.curvature().cbrt().powi(2) * j.speed());
            }
            t[0] = self.table.angle_of_lazutkin(x);
            self.pinned_max(&mut t).ok().map(|it| (t, it))
        });
        let (t, it) = match warm {
            Some(w) => w,
            None => {
                let (t, _, it) = self.pinned_at(x)?;
                (t, it)
            }
        };
        *iters += it;
        let d = self.derivs(&t);
        Ok(Sample {
            x,
            length: d.length,
            g0: d.grad[0],
            t,
        })
    }

    fn is_flat(&self, samples: &[Sample]) -> bool {
        let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.length), hi.max(s.length))
        });
        hi - lo <= 1e-13 * hi
    }
}

fn check_pq(p: u32, q: u32) -> Result<()> {
    if q < 2 || p == 0 || p >= q || gcd(p, q) != 1 {
        return Err(Error::Domain(format!("need coprime 0 < p < q, got p = {p}, q = {q}")));
    }
    Ok(())
}

pub fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Both extremal (p,q) orbits from one scan of the pinned value `M`.
pub fn find_orbit_pair(table: &Table, p: u32, q: u32) -> Result<(OrbitConfig, OrbitConfig)> {
    check_pq(p, q)?;
    let chain = Chain {
        table,
        p,
        q: q as usize,
    };
    let lam = table.lazutkin_perimeter();
    let mut total_iters = 0;
    let mut n = SAMPLES_PER_SPACING * q as usize;
    let mut samples = Vec::with_capacity(n);
    let mut prev: Option<Vec<f64>> = None;
    for k in 0..n {
        let x = lam * k as f64 / n as f64;
        let s = chain.sample(x, prev.as_deref(), lam / n as f64, &mut total_iters)?;
        prev = Some(s.t.clone());
        samples.push(s);
    }
    // Resolve M: at least four samples per sign change of M′.
    while !chain.is_flat(&samples) && 4 * sign_changes(&samples) > n && n < MAX_SAMPLES_PER_SPACING * q as usize {
        let half = 0.5 * lam / n as f64;
        let mut finer = Vec::with_capacity(2 * n);
        for s in samples {
            let mid = chain.sample(s.x + half, Some(&s.t), half, &mut total_iters)?;
            finer.push(s);
            finer.push(mid);
        }
        samples = finer;
        n *= 2;
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    let values: Vec<(f64, f64)> = samples.iter().map(|s| (s.length, s.g0)).collect();
    let vmax = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);

    if chain.is_flat(&samples) {
        // Flat M: a continuous family of critical orbits (integrable case).
        let (t, _, _) = chain.pinned_at(0.0)?;
        let best = chain.finish(t.clone(), OrbitClass::Max, total_iters)?;
        let worst = chain.finish(t, OrbitClass::Min, total_iters)?;
        return Ok((best, worst));
    }

    let refine = |k: usize, class: OrbitClass| -> Result<OrbitConfig> {
        let h = lam / n as f64;
        // M′ runs + → − through a max and − → + through a min.
        let dir = match class {
            OrbitClass::Max => 1.0,
            OrbitClass::Min => -1.0,
        };
        // Nearest crossing of the right type, searching outward from k.
        let crossing = (0..n / 2).find_map(|r| {
            [k + n - r, k + r].into_iter().find_map(|i| {
                let (a, b) = (i % n, (i + 1) % n);
                (dir * values[a].1 > 0.0 && dir * values[b].1 < 0.0).then_some(a)
            })
        });
        let (k, bracket) = match crossing {
            Some(a) if values[a].1 != 0.0 => (a, Some((xs[a], xs[a] + h))),
            _ => (k, None),
        };
        let base = &samples[k];
        let solve = |x: f64| {
            let mut it = 0;
            chain.sample(x, Some(&base.t), x - base.x, &mut it)
        };
        let x = match bracket {
            Some((lo, hi)) => {
                let tol = Tolerance::default().xtol(1e-15 * lam);
                match brent(|x| solve(x).map(|s| s.g0).unwrap_or(f64::NAN), lo, hi, tol) {
                    Ok(x) => x,
                    // An endpoint re-evaluated at the noise floor: it is the root.
                    Err(Error::Bracket { f_lo, f_hi, .. }) => {
                        if f_lo.abs() < f_hi.abs() {
                            lo
                        } else {
                            hi
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
            None => base.x,
        };
        let found = solve(x)?;
        let mut t = found.t;
        let d = chain.derivs(&t);
        let mut it = 0;
        let res = Chain::residual(&d, 0..chain.q);
        if res > KINK {
            // The pinned maximizer switches branch here; M has a corner, not a critical point.
            return Err(chain.not_converged(&t, res));
        }
        if res > STATIONARITY_TOL {
            // Nearly flat M leaves ∂L/∂t_0 at the noise level of the bracket.
            it += chain.full_newton(&mut t)?;
        }
        chain.finish(t, class, total_iters + it)
    };

    // Near-ties go to the lowest sample position for determinism.
    let pick = |better: &dyn Fn(f64, f64) -> bool| {
        let mut k = 0;
        for i in 1..n {
            if better(values[i].0, values[k].0) {
                k = i;
            }
        }
        k
    };
    let tie = 1e-15 * vmax;
    let k_max = pick(&|a, b| a > b + tie);
    let k_min = pick(&|a, b| a < b - tie);

    let best = refine(k_max, OrbitClass::Max)?;
    let worst = match refine(k_min, OrbitClass::Min) {
        Ok(o) if chain.is_minimax(&o, &best) => o,
        _ => multistart_min(&chain, lam, &best)?,
    };
    Ok((best, worst))
}

// Newton from the max orbit shifted along the boundary by fractions of a
// vertex spacing; keeps the shortest critical orbit strictly below the max.
fn multistart_min(chain: &Chain, lam: f64, best: &OrbitConfig) -> Result<OrbitConfig> {
    let spacing = lam / chain.q as f64;
    let start: Vec<f64> = best.params.iter().map(|&t| chain.table.lazutkin_of_angle(t)).collect();
    let mut found: Option<OrbitConfig> = None;
    let mut last_err = None;
    for f in MINIMAX_SHIFTS {
        let mut t: Vec<f64> = start
            .iter()
            .map(|&x| chain.table.angle_of_lazutkin(x + f * spacing))
            .collect();
        match chain
            .full_newton(&mut t)
            .and_then(|it| chain.finish(t, OrbitClass::Min, it))
        {
            Ok(o) => {
                if chain.is_minimax(&o, &best) && found.as_ref().is_none_or(|f| o.length < f.length) {
                    found = Some(o);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match (found, last_err) {
        (Some(o), _) => Ok(o),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::OrbitNotConverged {
            p: chain.p,
            q: chain.q as u32,
            residual: f64::NAN,
            best: best.arcs.clone(),
        }),
    }
}

pub fn find_orbit(table: &Table, p: u32, q: u32, class: OrbitClass) -> Result<OrbitConfig> {
    let (best, worst) = find_orbit_pair(table, p, q)?;
    Ok(match class {
        OrbitClass::Max => best,
        OrbitClass::Min => worst,
    })
}

/// Averaged Mather function `β(p/q) = −(1/q) · max length`.
pub fn beta_at(table: &Table, p: u32, q: u32) -> Result<f64> {
    Ok(-find_orbit(table, p, q, OrbitClass::Max)?.length / q as f64)
}

/// `(L_q, l_q)`: lengths of the max and minimax simple (p = 1) q-periodic orbits.
pub fn lq_bounds(table: &Table, q: u32) -> Result<(f64, f64)> {
    let (best, worst) = find_orbit_pair(table, 1, q)?;
    Ok((best.length, worst.length))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::billiard::{step, PhasePoint};
    use crate::table::{Harmonic, TableSpec};
    use std::f64::consts::PI;

    fn perturbed() -> Table {
        Table::new(TableSpec::Radial {
            radius: 1.0,
            harmonics: vec![Harmonic {
                m: 3,
                eps: 0.05,
                phase: 0.0,
            }],
        })
        .unwrap()
    }

    #[test]
    fn circle_triangle() {
        let t = Table::circle(1.0).unwrap();
        let o = find_orbit(&t, 1, 3, OrbitClass::Max).unwrap();
        assert!((o.length - 3.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(o.arcs[0], 0.0);
    }

    #[test]
    fn circle_beta() {
        let t = Table::circle(1.0).unwrap();
        assert!((beta_at(&t, 1, 4).unwrap() + 2f64.sqrt()).abs() < 1e-12);
        let o = find_orbit(&t, 2, 5, OrbitClass::Max).unwrap();
        assert!((o.length - 10.0 * (2.0 * PI / 5.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn ellipse_two_periodic() {
        let t = Table::ellipse(2.0, 1.0).unwrap();
        let (big, small) = lq_bounds(&t, 2).unwrap();
        assert!((big - 8.0).abs() < 1e-12, "{big}");
        assert!((small - 4.0).abs() < 1e-12, "{small}");
        assert!((beta_at(&t, 1, 2).unwrap() + 4.0).abs() < 1e-12);
    }

    #[test]
    fn ellipse_three_periodic_family_is_flat() {
        // Every 3-periodic orbit of an ellipse lies on one caustic, so the
        // max and minimax lengths coincide.
        let t = Table::ellipse(2.0, 1.0).unwrap();
        let (big, small) = lq_bounds(&t, 3).unwrap();
        assert!(big >= small && small > 0.0);
        assert!((big - small).abs() < 1e-12 * big);
        // Oracle: brute-force maximum over a grid of inscribed triangles.
        let m = 120;
        let mut brute = 0.0_f64;
        for i in 0..m {
            for j in 1..m {
                for k in (j + 1)..m {
                    let u = TAU * i as f64 / m as f64;
                    let v = u + TAU * j as f64 / m as f64;
                    let w = u + TAU * k as f64 / m as f64;
                    let len = t.chord(u, v).norm() + t.chord(v, w).norm() + t.chord(w, u + TAU).norm();
                    brute = brute.max(len);
                }
            }
        }
        assert!(big >= brute - 1e-12 && big - brute < 1e-3);
    }

    #[test]
    fn perturbed_orbits_are_stationary_and_reflect() {
        let t = perturbed();
        let (big, small) = find_orbit_pair(&t, 1, 7).unwrap();
        assert!(big.length > small.length);
        for o in [&big, &small] {
            assert!(o.residual <= STATIONARITY_TOL);
            let q = o.q as usize;
            let l = t.perimeter();
            let angle_at = |i: usize| {
                let b = t.point(o.arcs[i]);
                let next = if i + 1 < q { o.params[i + 1] } else { o.params[0] + TAU };
                let r = t.chord(o.params[i], next);
                b.tangent.perp(&r).atan2(b.tangent.dot(&r))
            };
            for i in 0..q {
                let img = step(&t, PhasePoint::new(o.arcs[i], angle_at(i))).unwrap();
                let j = (i + 1) % q;
                let ds = (img.s - o.arcs[j] + l / 2.0).rem_euclid(l) - l / 2.0;
                assert!(ds.abs() < 1e-8);
                assert!((img.theta - angle_at(j)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn reversal_symmetry_and_scaling() {
        let t = perturbed();
        let b1 = beta_at(&t, 1, 5).unwrap();
        let b4 = beta_at(&t, 4, 5).unwrap();
        assert!((b1 - b4).abs() < 1e-12);
        let big = t.scaled(3.0).unwrap();
        assert!((beta_at(&big, 1, 5).unwrap() - 3.0 * b1).abs() < 1e-10);
    }

    #[test]
    fn beta_is_convex_on_samples() {
        let t = perturbed();
        let pts: Vec<(f64, f64)> = [(1, 9), (1, 8), (1, 7), (1, 6), (1, 5), (2, 9), (1, 4), (2, 7), (1, 3)]
            .iter()
            .map(|&(p, q)| (p as f64 / q as f64, beta_at(&t, p, q).unwrap()))
            .collect();
        for w in pts.windows(3) {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            assert!(s2 > s1);
        }
    }

    #[test]
    fn rejects_bad_rotation() {
        let t = Table::circle(1.0).unwrap();
        assert!(find_orbit(&t, 2, 4, OrbitClass::Max).is_err());
        assert!(find_orbit(&t, 3, 3, OrbitClass::Max).is_err());
    }
}
