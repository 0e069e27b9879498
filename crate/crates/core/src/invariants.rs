//! Normalized Mather β-function, Marvizi–Melrose coefficients and their
//! conjugacy laws.
//!
//! Near `ω = 0` the averaged β-function of a table with perimeter `ℓ` and
//! Lazutkin perimeter `λ` expands as
//!
//! ```text
//! λ⁻³ (β(ω) + ℓ ω) = c₃ ω³ + c₅ ω⁵ + …,        L_q = ℓ₀ + ℓ₁ q⁻² + ℓ₂ q⁻⁴ + …
//! ```
//!
//! and since `L_q = −q β(1/q)` the two families are tied by `ℓ₀ = ℓ`,
//! `ℓ_k = −λ³ c_{2k+1}`.

use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbits::find_orbit_pair;
use crate::table::Table;

/// Fits whose column-scaled design matrix exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;
pub const DEFAULT_K: usize = 3;
pub const DEFAULT_Q_RANGE: RangeInclusive<u32> = 10..=120;
/// Largest rotation number admitted into the normalized fit.
pub const MAX_FIT_OMEGA: f64 = 0.1;

/// One value `β(p/q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSample {
    pub p: u32,
    pub q: u32,
    pub omega: f64,
    pub beta: f64,
}

/// Perimeters of the max and minimax `(1, q)` orbits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LqSample {
    pub q: u32,
    #[serde(rename = "L_q")]
    pub max_length: f64,
    #[serde(rename = "l_q")]
    pub min_length: f64,
    pub beta: f64,
}

/// β samples of one table, sorted by `ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSamples {
    pub perimeter: f64,
    pub lazutkin_perimeter: f64,
    pub samples: Vec<BetaSample>,
}

/// Find the `(1, q)` max and minimax orbits for every `q` in `qs`, in parallel.
pub fn sample_lq(table: &Table, qs: RangeInclusive<u32>) -> Result<Vec<LqSample>> {
    if *qs.start() < 2 {
        return Err(Error::Config(format!("q range must start at 2 or above, got {qs:?}")));
    }
    qs.into_par_iter()
        .map(|q| {
            let (best, worst) = find_orbit_pair(table, 1, q)?;
            log::debug!("q = {q}: L = {}, l = {}", best.length, worst.length);
            Ok(LqSample {
                q,
                max_length: best.length,
                min_length: worst.length,
                beta: -best.length / q as f64,
            })
        })
        .collect()
}

impl BetaSamples {
    pub fn new(table: &Table, samples: Vec<BetaSample>) -> Result<Self> {
        let mut samples = samples;
        samples.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        for w in samples.windows(2) {
            if w[0].omega == w[1].omega {
                return Err(Error::Config(format!("repeated rotation number {}", w[0].omega)));
            }
        }
        for s in &samples {
            if !(s.omega > 0.0 && s.omega <= 0.5) || !(s.beta < 0.0) {
                return Err(Error::Config(format!(
                    "sample {}/{} has ω = {}, β = {}; need ω ∈ (0, ½] and β < 0",
                    s.p, s.q, s.omega, s.beta
                )));
            }
        }
        Ok(BetaSamples {
            perimeter: table.perimeter(),
            lazutkin_perimeter: table.lazutkin_perimeter(),
            samples,
        })
    }

    /// `β(1/q)` from orbit samples.
    pub fn from_lq(table: &Table, lq: &[LqSample]) -> Result<Self> {
        let samples = lq
            .iter()
            .map(|s| BetaSample {
                p: 1,
                q: s.q,
                omega: 1.0 / s.q as f64,
                beta: s.beta,
            })
            .collect();
        BetaSamples::new(table, samples)
    }

    /// Sample `β(1/q)` for every `q` in `qs`.
    pub fn compute(table: &Table, qs: RangeInclusive<u32>) -> Result<Self> {
        BetaSamples::from_lq(table, &sample_lq(table, qs)?)
    }

    pub fn omega_range(&self) -> (f64, f64) {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (a.omega, b.omega),
            _ => (f64::NAN, f64::NAN),
        }
    }

    /// Discrete second differences of `β` in `ω`, normalized by the mesh.
    pub fn second_differences(&self) -> Vec<f64> {
        self.samples
            .windows(3)
            .map(|w| {
                let s1 = (w[1].beta - w[0].beta) / (w[1].omega - w[0].omega);
                let s2 = (w[2].beta - w[1].beta) / (w[2].omega - w[1].omega);
                (s2 - s1) / (w[2].omega - w[0].omega)
            })
            .collect()
    }
}

/// Weighted least-squares fit with one guard term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    /// Reported coefficients, lowest order first.
    pub coefficients: Vec<f64>,
    /// Standard errors of `coefficients` from the weighted residual variance.
    pub std_errors: Vec<f64>,
    /// Coefficient of the extra basis function absorbing truncation error.
    pub guard: f64,
    /// Largest unweighted residual.
    pub max_residual: f64,
    /// Root mean square of the weighted residuals.
    pub weighted_rms: f64,
    /// 2-norm condition number of the column-scaled design matrix.
    pub condition: f64,
    pub samples: usize,
}

// Minimize Σ wᵢ (yᵢ − Σⱼ cⱼ φⱼ(xᵢ))². The last basis function is the guard.
fn weighted_fit(x: &[f64], y: &[f64], w: &[f64], basis: &dyn Fn(f64, usize) -> f64, terms: usize) -> Result<Fit> {
    let n = x.len();
    if n < terms + 1 {
        return Err(Error::Config(format!(
            "{n} samples cannot fit {terms} terms with a residual"
        )));
    }
    let mut a = DMatrix::<f64>::zeros(n, terms);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        let sw = w[i].sqrt();
        for j in 0..terms {
            a[(i, j)] = sw * basis(x[i], j);
        }
        rhs[i] = sw * y[i];
    }
    let scale: Vec<f64> = (0..terms).map(|j| a.column(j).norm()).collect();
    if scale.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::IllConditioned {
            condition: f64::INFINITY,
        });
    }
    for j in 0..terms {
        a.column_mut(j).scale_mut(1.0 / scale[j]);
    }
    let svd = a.clone().svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    let condition = smax / smin;
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let z = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Domain(format!("least-squares solve: {e}")))?;
    let coef: Vec<f64> = (0..terms).map(|j| z[j] / scale[j]).collect();
    let wres = &rhs - &a * &z;
    let dof = (n - terms) as f64;
    let sigma2 = wres.norm_squared() / dof;
    // Cov(z) = σ² V Σ⁻² Vᵀ.
    let v_t = svd.v_t.as_ref().expect("V requested");
    let std_errors: Vec<f64> = (0..terms)
        .map(|j| {
            let var: f64 = (0..terms).map(|r| (v_t[(r, j)] / svd.singular_values[r]).powi(2)).sum();
            (sigma2 * var).sqrt() / scale[j]
        })
        .collect();
    let max_residual = (0..n)
        .map(|i| (y[i] - (0..terms).map(|j| coef[j] * basis(x[i], j)).sum::<f64>()).abs())
        .fold(0.0, f64::max);
    Ok(Fit {
        guard: coef[terms - 1],
        coefficients: coef[..terms - 1].to_vec(),
        std_errors: std_errors[..terms - 1].to_vec(),
        max_residual,
        weighted_rms: (wres.norm_squared() / n as f64).sqrt(),
        condition,
        samples: n,
    })
}

/// Fitted normalized β-function `λ⁻³(β + ℓω) ≈ Σ_{k=1}^{K} c_{2k+1} ω^{2k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedBeta {
    pub perimeter: f64,
    pub lazutkin_perimeter: f64,
    /// `[ω_min, ω_max]` of the samples used.
    pub omega_range: (f64, f64),
    /// `c₃, c₅, …, c_{2K+1}`.
    #[serde(flatten)]
    pub fit: Fit,
}

impl NormalizedBeta {
    pub fn c(&self, order: usize) -> Option<f64> {
        if order < 3 || order % 2 == 0 {
            return None;
        }
        self.fit.coefficients.get((order - 3) / 2).copied()
    }

    // Σ_k factor(k) c_{2k+1} ω^{2k+1}, guard term included.
    fn series(&self, omega: f64, factor: impl Fn(usize) -> f64) -> f64 {
        let all = self.fit.coefficients.iter().chain(std::iter::once(&self.fit.guard));
        all.enumerate()
            .map(|(j, c)| factor(j + 1) * c * omega.powi(2 * j as i32 + 3))
            .sum()
    }

    fn check_omega(&self, omega: f64) -> Result<()> {
        if (0.0..=self.omega_range.1).contains(&omega) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "ω = {omega} outside the fitted range [0, {}]",
                self.omega_range.1
            )))
        }
    }

    /// `β(ω)` from the fitted expansion.
    pub fn beta(&self, omega: f64) -> Result<f64> {
        self.check_omega(omega)?;
        let l3 = self.lazutkin_perimeter.powi(3);
        Ok(-self.perimeter * omega + l3 * self.series(omega, |_| 1.0))
    }

    /// `β′(ω)` from the fitted expansion.
    pub fn beta_prime(&self, omega: f64) -> Result<f64> {
        self.check_omega(omega)?;
        let l3 = self.lazutkin_perimeter.powi(3);
        Ok(-self.perimeter + l3 * self.series(omega, |k| (2 * k + 1) as f64) / omega.max(f64::MIN_POSITIVE))
    }

    /// Lazutkin parameter `𝓛(ω) = ωβ′(ω) − β(ω) = λ³ Σ 2k c_{2k+1} ω^{2k+1}`.
    pub fn lazutkin_parameter(&self, omega: f64) -> Result<f64> {
        self.check_omega(omega)?;
        let l3 = self.lazutkin_perimeter.powi(3);
        Ok(l3 * self.series(omega, |k| (2 * k) as f64))
    }

    /// `ℓ_k = −λ³ c_{2k+1}` for `k = 1..=K`.
    pub fn implied_mm(&self) -> Vec<f64> {
        let l3 = self.lazutkin_perimeter.powi(3);
        self.fit.coefficients.iter().map(|c| -l3 * c).collect()
    }
}

/// Fit `c₃ … c_{2K+1}` (plus a guard `c_{2K+3}`) with weights `ω⁻⁴`, using
/// samples with `ω ≤ 0.1`.
pub fn fit_normalized_beta(samples: &BetaSamples, k: usize) -> Result<NormalizedBeta> {
    if k == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    let used: Vec<&BetaSample> = samples.samples.iter().filter(|s| s.omega <= MAX_FIT_OMEGA).collect();
    if used.len() < 2 * k + 2 {
        return Err(Error::Config(format!(
            "normalized fit with K = {k} needs {} samples with ω ≤ {MAX_FIT_OMEGA}, got {}",
            2 * k + 2,
            used.len()
        )));
    }
    let l3 = samples.lazutkin_perimeter.powi(3);
    let x: Vec<f64> = used.iter().map(|s| s.omega).collect();
    let y: Vec<f64> = used
        .iter()
        .map(|s| (s.beta + samples.perimeter * s.omega) / l3)
        .collect();
    let w: Vec<f64> = x.iter().map(|o| o.powi(-4)).collect();
    let fit = weighted_fit(&x, &y, &w, &|o, j| o.powi(2 * j as i32 + 3), k + 1)?;
    Ok(NormalizedBeta {
        perimeter: samples.perimeter,
        lazutkin_perimeter: samples.lazutkin_perimeter,
        omega_range: (x[0], x[x.len() - 1]),
        fit,
    })
}

/// Marvizi–Melrose fit `L_q ≈ ℓ₀ + Σ_{k=1}^{K} ℓ_k q^{−2k}` with weights `q⁴`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmFit {
    pub perimeter: f64,
    pub lazutkin_perimeter: f64,
    pub q_range: (u32, u32),
    /// `ℓ₀, ℓ₁, …, ℓ_K`.
    #[serde(flatten)]
    pub fit: Fit,
}

impl MmFit {
    pub fn ell(&self, k: usize) -> Option<f64> {
        self.fit.coefficients.get(k).copied()
    }

    /// `ℐ₃ = λ`, then `ℐ_{2n+1} = ℓ_n / λ^{2n}` for `n = 2..=K`.
    ///
    /// Entry `i` is `ℐ_{2i+3}`. The `ℓ_n` scale like `λ³` under conjugacy,
    /// so `ℐ_{2n+1}` scales like `λ^{3−2n}`.
    pub fn invariants(&self) -> Vec<f64> {
        let l = self.lazutkin_perimeter;
        let k = self.fit.coefficients.len() - 1;
        std::iter::once(l)
            .chain((2..=k).map(|n| self.fit.coefficients[n] / l.powi(2 * n as i32)))
            .collect()
    }
}

pub fn fit_mm(table: &Table, lq: &[LqSample], k: usize) -> Result<MmFit> {
    if k == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    if lq.len() < 2 * k + 2 {
        return Err(Error::Config(format!(
            "Marvizi–Melrose fit with K = {k} needs {} values of q, got {}",
            2 * k + 2,
            lq.len()
        )));
    }
    if let Some(s) = lq.iter().find(|s| s.q < 5) {
        return Err(Error::Config(format!("Marvizi–Melrose fit needs q ≥ 5, got {}", s.q)));
    }
    let x: Vec<f64> = lq.iter().map(|s| 1.0 / s.q as f64).collect();
    let y: Vec<f64> = lq.iter().map(|s| s.max_length).collect();
    let w: Vec<f64> = lq.iter().map(|s| (s.q as f64).powi(4)).collect();
    let fit = weighted_fit(&x, &y, &w, &|h, j| h.powi(2 * j as i32), k + 2)?;
    let qs = lq.iter().map(|s| s.q);
    Ok(MmFit {
        perimeter: table.perimeter(),
        lazutkin_perimeter: table.lazutkin_perimeter(),
        q_range: (qs.clone().min().unwrap_or(0), qs.max().unwrap_or(0)),
        fit,
    })
}

/// Sample `L_q` over `qs` and fit `ℓ₀ … ℓ_K`.
pub fn mm_invariants(table: &Table, qs: RangeInclusive<u32>, k: usize) -> Result<(MmFit, Vec<LqSample>)> {
    let lq = sample_lq(table, qs)?;
    Ok((fit_mm(table, &lq, k)?, lq))
}

/// Measured and predicted `ℐ¹_{2n+1} / ℐ²_{2n+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub n: usize,
    pub measured: f64,
    /// `(λ₂/λ₁)^{2n−3}`.
    pub predicted: f64,
    pub relative_deviation: f64,
}

/// Ratio table for `n = 1` (`ℐ₃ = λ`) and `n = 2..=K`.
pub fn mm_ratio_check(first: &MmFit, second: &MmFit) -> Result<Vec<RatioRow>> {
    let (i1, i2) = (first.invariants(), second.invariants());
    if i1.len() != i2.len() {
        return Err(Error::Config(format!(
            "reports fitted with different K ({} vs {})",
            first.fit.coefficients.len() - 1,
            second.fit.coefficients.len() - 1
        )));
    }
    let r = second.lazutkin_perimeter / first.lazutkin_perimeter;
    Ok(i1
        .iter()
        .zip(&i2)
        .enumerate()
        .map(|(idx, (a, b))| {
            // Entry 0 is n = 1; entry i ≥ 1 is n = i + 1.
            let n = idx + 1;
            let measured = a / b;
            let predicted = r.powi(2 * n as i32 - 3);
            RatioRow {
                n,
                measured,
                predicted,
                relative_deviation: (measured / predicted - 1.0).abs(),
            }
        })
        .collect())
}

/// `ℓ_k` from the Marvizi–Melrose fit next to `−λ³ c_{2k+1}` from the β fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub k: usize,
    pub from_mm: f64,
    pub from_beta: f64,
}

/// Everything fitted for one table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub perimeter: f64,
    pub lazutkin_perimeter: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub normalized: Option<NormalizedBeta>,
    pub marvizi_melrose: Option<MmFit>,
    /// `ℐ₃, ℐ₅, …` from the Marvizi–Melrose fit.
    pub mm_invariants: Option<Vec<f64>>,
    /// Present when both fits are.
    pub consistency: Vec<Consistency>,
}

impl InvariantReport {
    pub fn new(table: &Table, k: usize, normalized: Option<NormalizedBeta>, mm: Option<MmFit>) -> Self {
        let consistency = match (&normalized, &mm) {
            (Some(nb), Some(m)) => nb
                .implied_mm()
                .iter()
                .enumerate()
                .filter_map(|(i, &b)| {
                    m.ell(i + 1).map(|a| Consistency {
                        k: i + 1,
                        from_mm: a,
                        from_beta: b,
                    })
                })
                .collect(),
            _ => Vec::new(),
        };
        InvariantReport {
            perimeter: table.perimeter(),
            lazutkin_perimeter: table.lazutkin_perimeter(),
            k,
            mm_invariants: mm.as_ref().map(MmFit::invariants),
            normalized,
            marvizi_melrose: mm,
            consistency,
        }
    }
}

/// Discrete Legendre–Fenchel transform over samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaValue {
    /// `α(c) = max_i (ω_i c − β_i)`.
    pub alpha: f64,
    /// `ω` of the maximizer: a subgradient `α′(c)`.
    pub slope: f64,
}

/// `α(c)` for `c` between the one-sided slopes of `β` at the ends of the
/// sampled range, extended by the fitted derivative when `fit` is given.
pub fn mather_alpha(samples: &BetaSamples, c: f64, fit: Option<&NormalizedBeta>) -> Result<AlphaValue> {
    let s = &samples.samples;
    if s.len() < 2 {
        return Err(Error::Config("Legendre transform needs at least two samples".into()));
    }
    let n = s.len();
    let secant = |i: usize| (s[i + 1].beta - s[i].beta) / (s[i + 1].omega - s[i].omega);
    let (mut lo, mut hi) = (secant(0), secant(n - 2));
    if let Some(f) = fit {
        if let Ok(d) = f.beta_prime(s[0].omega) {
            lo = lo.min(d);
        }
        if let Ok(d) = f.beta_prime(s[n - 1].omega) {
            hi = hi.max(d);
        }
    }
    if s[n - 1].omega == 0.5 {
        // β(ω) = β(1 − ω) gives β′(½) = 0.
        hi = hi.max(0.0);
    }
    let slack = 1e-12 * (lo.abs() + hi.abs());
    if !(c >= lo - slack && c <= hi + slack) {
        return Err(Error::Domain(format!(
            "slope {c} outside the sampled range [{lo}, {hi}]"
        )));
    }
    let mut best = AlphaValue {
        alpha: f64::NEG_INFINITY,
        slope: f64::NAN,
    };
    for x in s {
        let v = x.omega * c - x.beta;
        if v > best.alpha {
            best = AlphaValue {
                alpha: v,
                slope: x.omega,
            };
        }
    }
    Ok(best)
}
