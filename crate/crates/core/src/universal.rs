//! Split likelihood ratio e-values for calibration.
//!
//! A random part `D0` of the sample (size `floor(n s)`) is held out; the
//! alternative means are the isotonic fit on the remaining part `D1`,
//! evaluated at the predictions of `D0`. The likelihood ratio on `D0` has
//! expectation exactly one under calibration, so `1 / alpha` is a valid
//! critical value without any simulation.
//!
//! Tempering each factor by `t` in `(0, 1]` with the matching cumulant
//! correction keeps exactness; averaging over a grid of `t` (or over random
//! partitions) keeps it too. Maximising over the grid does not give an
//! e-value, but for a single partition the tempered statistics are
//! comonotone in the responses, which still bounds the type I error.
//!
//! All statistics are carried on the log scale.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::edf::{Family, TestSample};
use crate::error::{Error, Result};
use crate::isotonic::PavBuilder;
use crate::par;
use crate::ranked::{AltSource, RankedSample};
use crate::rng::stream;

/// `{0.1, 0.2, ..., 1.0}`.
pub const DEFAULT_T_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Fraction of the sample held out for evaluation.
    pub s: f64,
    /// Number of random partitions (upper bound when stopping at crossing).
    pub b_max: usize,
    pub t_grid: Vec<f64>,
    pub alpha: f64,
    pub stop_at_crossing: bool,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            s: 0.5,
            b_max: 1,
            t_grid: DEFAULT_T_GRID.to_vec(),
            alpha: 0.05,
            stop_at_crossing: false,
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self, kind: StatisticKind) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::Config(format!("split ratio must lie in (0, 1), got {}", self.s)));
        }
        if self.b_max == 0 {
            return Err(Error::Config("number of sub-samples must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        match kind {
            StatisticKind::Power { t } => check_t(t)?,
            StatisticKind::MeanPower | StatisticKind::MaxPower => {
                if self.t_grid.is_empty() {
                    return Err(Error::Config("t grid is empty".into()));
                }
                for &t in &self.t_grid {
                    check_t(t)?;
                }
                if !self.t_grid.contains(&1.0) {
                    return Err(Error::Config("t grid must contain 1".into()));
                }
            }
            StatisticKind::Split => {}
        }
        Ok(())
    }

    /// `1 / alpha`.
    pub fn threshold(&self) -> f64 {
        1.0 / self.alpha
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("power exponent t = {t} must lie in (0, 1]")))
    }
}

/// Random split of `0..n` into a hold-out part `D0` and a training part `D1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    d0: Vec<usize>,
    in_d0: Vec<bool>,
}

impl Partition {
    /// Partition with the given hold-out indices; both parts must be non-empty.
    pub fn from_holdout(n: usize, d0: Vec<usize>) -> Result<Self> {
        let mut in_d0 = vec![false; n];
        for &i in &d0 {
            if i >= n || in_d0[i] {
                return Err(Error::Config(format!("invalid or repeated hold-out index {i} for n = {n}")));
            }
            in_d0[i] = true;
        }
        if d0.is_empty() || d0.len() == n {
            return Err(Error::DegenerateSplit {
                n,
                s: d0.len() as f64 / n.max(1) as f64,
            });
        }
        Ok(Partition { d0, in_d0 })
    }

    pub fn len(&self) -> usize {
        self.in_d0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_d0.is_empty()
    }

    pub fn holdout(&self) -> &[usize] {
        &self.d0
    }

    pub fn training(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.in_d0[i]).collect()
    }

    pub fn in_holdout(&self, i: usize) -> bool {
        self.in_d0[i]
    }

    pub(crate) fn mask(&self) -> &[bool] {
        &self.in_d0
    }
}

/// Hold-out size `floor(n s)`.
pub fn holdout_size(n: usize, s: f64) -> usize {
    (n as f64 * s).floor() as usize
}

/// Draws `floor(n s)` hold-out indices uniformly without replacement.
pub fn split_once<R: Rng + ?Sized>(n: usize, s: f64, rng: &mut R) -> Result<Partition> {
    let k = holdout_size(n, s);
    if k == 0 || k >= n {
        return Err(Error::DegenerateSplit { n, s });
    }
    let d0 = rand::seq::index::sample(rng, n, k).into_vec();
    let mut in_d0 = vec![false; n];
    for &i in &d0 {
        in_d0[i] = true;
    }
    Ok(Partition { d0, in_d0 })
}

fn check_partition(sample: &TestSample, partition: &Partition) -> Result<()> {
    if partition.len() != sample.len() {
        return Err(Error::LengthMismatch {
            expected: sample.len(),
            found: partition.len(),
        });
    }
    Ok(())
}

/// Log split likelihood ratio on the hold-out part. Can be negative.
pub fn log_split_lrs(sample: &TestSample, partition: &Partition) -> Result<f64> {
    log_split_power_lrs(sample, partition, 1.0)
}

/// Log tempered split likelihood ratio; `t = 1` is [`log_split_lrs`].
pub fn log_split_power_lrs(sample: &TestSample, partition: &Partition, t: f64) -> Result<f64> {
    check_t(t)?;
    let mut out = [0.0];
    holdout_sums(sample, partition, AltSource::Isotonic, &[t], &mut out)?;
    Ok(out[0])
}

fn holdout_sums(sample: &TestSample, partition: &Partition, alt: AltSource<'_>, ts: &[f64], out: &mut [f64]) -> Result<()> {
    check_partition(sample, partition)?;
    let ranked = RankedSample::new(sample);
    let mut pav = PavBuilder::with_capacity(sample.len());
    ranked.holdout_log_power(partition.mask(), alt, ts, &mut pav, out);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    Mean,
    Max,
}

/// Combines the tempered statistics over `t_grid`: log of their average
/// (mean mode) or their maximum (max mode).
pub fn combine(sample: &TestSample, partition: &Partition, t_grid: &[f64], mode: CombineMode) -> Result<f64> {
    if t_grid.is_empty() {
        return Err(Error::Config("t grid is empty".into()));
    }
    for &t in t_grid {
        check_t(t)?;
    }
    let mut sums = vec![0.0; t_grid.len()];
    holdout_sums(sample, partition, AltSource::Isotonic, t_grid, &mut sums)?;
    Ok(reduce(mode, &sums))
}

fn reduce(mode: CombineMode, logs: &[f64]) -> f64 {
    match mode {
        CombineMode::Mean => log_sum_exp(logs) - (logs.len() as f64).ln(),
        CombineMode::Max => logs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// `log(sum exp(x_i))` without overflow.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Statistic computed on each partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatisticKind {
    Split,
    Power { t: f64 },
    MeanPower,
    MaxPower,
}

impl StatisticKind {
    fn exponents(self, grid: &[f64]) -> Vec<f64> {
        match self {
            StatisticKind::Split => vec![1.0],
            StatisticKind::Power { t } => vec![t],
            StatisticKind::MeanPower | StatisticKind::MaxPower => grid.to_vec(),
        }
    }

    fn mode(self) -> CombineMode {
        match self {
            StatisticKind::MaxPower => CombineMode::Max,
            _ => CombineMode::Mean,
        }
    }

    /// Report label, e.g. `subsampled_mean_power` or `split_power(t=0.5)`.
    pub fn label(self, subsampled: bool) -> String {
        let prefix = if subsampled { "subsampled_" } else { "" };
        match self {
            StatisticKind::Split => format!("{prefix}split"),
            StatisticKind::Power { t } => format!("{prefix}split_power(t={t})"),
            StatisticKind::MeanPower => format!("{prefix}mean_power"),
            StatisticKind::MaxPower => format!("{prefix}max_power"),
        }
    }
}

/// Source of the alternative canonical parameters on the hold-out part.
#[derive(Debug, Clone, Copy)]
pub enum Alternative<'a> {
    /// Isotonic fit on the training part.
    Isotonic,
    /// Known canonical parameters for every observation (original indexing).
    Oracle(&'a [f64]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalueReport {
    pub kind: String,
    pub statistic: StatisticKind,
    pub threshold: f64,
    pub reject: bool,
    pub b_used: usize,
    pub b_max: usize,
    /// Log of the running average after each sub-sample.
    pub log_trace: Vec<f64>,
    pub is_evalue: bool,
    pub alpha: f64,
    pub s: f64,
    pub seed: u64,
}

impl EvalueReport {
    /// Final log statistic.
    pub fn log_statistic(&self) -> f64 {
        *self.log_trace.last().expect("at least one sub-sample")
    }

    pub fn to_json(&self, include_trace: bool) -> serde_json::Value {
        let mut v = serde_json::json!({
            "kind": self.kind,
            "threshold": self.threshold,
            "reject": self.reject,
            "b_used": self.b_used,
            "b_max": self.b_max,
            "log_statistic": self.log_statistic(),
            "statistic": self.log_statistic().exp(),
            "is_evalue": self.is_evalue,
            "alpha": self.alpha,
            "split_ratio": self.s,
            "seed": self.seed,
        });
        if include_trace {
            v["log_trace"] = serde_json::json!(self.log_trace);
        }
        v
    }
}

/// Sub-sampled split test with the isotonic alternative.
pub fn subsampled_test(sample: &TestSample, config: &SplitConfig, kind: StatisticKind) -> Result<EvalueReport> {
    subsampled_test_with(sample, config, kind, Alternative::Isotonic)
}

/// Sub-sampled split test. Partition `b` (1-based) is drawn from the stream
/// `(config.seed, b)`, so the report does not depend on evaluation order.
pub fn subsampled_test_with(
    sample: &TestSample,
    config: &SplitConfig,
    kind: StatisticKind,
    alternative: Alternative<'_>,
) -> Result<EvalueReport> {
    config.validate(kind)?;
    let n = sample.len();
    let k = holdout_size(n, config.s);
    if k == 0 || k >= n {
        return Err(Error::DegenerateSplit { n, s: config.s });
    }
    let alt = match alternative {
        Alternative::Isotonic => AltSource::Isotonic,
        Alternative::Oracle(xi) => {
            if xi.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: xi.len(),
                });
            }
            for &x in xi {
                sample.family().check_canonical(x)?;
            }
            AltSource::Fixed(xi)
        }
    };
    let ranked = RankedSample::new(sample);
    let ts = kind.exponents(&config.t_grid);
    let mode = kind.mode();

    let eval = |b: usize| -> f64 {
        let mut rng = stream(config.seed, &[b as u64]);
        let part = split_once(n, config.s, &mut rng).expect("split size checked above");
        let mut pav = PavBuilder::with_capacity(n - k);
        let mut sums = vec![0.0; ts.len()];
        ranked.holdout_log_power(part.mask(), alt, &ts, &mut pav, &mut sums);
        reduce(mode, &sums)
    };

    let log_threshold = -config.alpha.ln();
    let mut trace = Vec::with_capacity(if config.stop_at_crossing { 16 } else { config.b_max });
    let mut lse = f64::NEG_INFINITY;
    let mut push = |x: f64, trace: &mut Vec<f64>| -> bool {
        lse = log_add_exp(lse, x);
        let avg = lse - ((trace.len() + 1) as f64).ln();
        trace.push(avg);
        avg >= log_threshold
    };

    if config.stop_at_crossing {
        // Windows grow geometrically; values are scanned in b order.
        let mut next = 1;
        let mut window = 1;
        'outer: while next <= config.b_max {
            let end = (next + window).min(config.b_max + 1);
            for x in par::map_range(next, end, eval) {
                if push(x, &mut trace) {
                    break 'outer;
                }
            }
            next = end;
            window = (window * 2).min(64);
        }
    } else {
        for x in par::map_range(1, config.b_max + 1, eval) {
            push(x, &mut trace);
        }
    }

    let b_used = trace.len();
    let final_log = *trace.last().expect("b_max >= 1");
    Ok(EvalueReport {
        kind: kind.label(config.b_max > 1),
        statistic: kind,
        threshold: config.threshold(),
        reject: final_log >= log_threshold,
        b_used,
        b_max: config.b_max,
        log_trace: trace,
        is_evalue: !(kind == StatisticKind::MaxPower && config.b_max > 1),
        alpha: config.alpha,
        s: config.s,
        seed: config.seed,
    })
}

fn check_interior(family: Family, values: &[f64]) -> Result<()> {
    values.iter().try_for_each(|&x| family.check_canonical(x))
}

/// Conditional expectation of one tempered factor when the response has
/// canonical parameter `pi`:
/// `exp((v / phi) [kappa(pi + t d) - kappa(pi) - kappa(theta + t d) + kappa(theta)])`, `d = xi - theta`.
pub fn conditional_power_factor(
    family: Family,
    phi: f64,
    v: f64,
    theta_hat: f64,
    xi_hat: f64,
    pi: f64,
    t: f64,
) -> Result<f64> {
    check_interior(family, &[theta_hat, xi_hat, pi])?;
    check_t(t)?;
    let d = xi_hat - theta_hat;
    let shifted = pi + t * d;
    family.check_canonical(shifted)?;
    let k = |x| family.cumulant_unchecked(x);
    Ok(((v / phi) * (k(shifted) - k(pi) - k(theta_hat + t * d) + k(theta_hat))).exp())
}

/// Conditional e-power (expected log) of one tempered factor:
/// `(v / phi) [t kappa'(pi) (xi - theta) - (kappa(t xi + (1 - t) theta) - kappa(theta))]`.
pub fn conditional_e_power(
    family: Family,
    phi: f64,
    v: f64,
    theta_hat: f64,
    xi_hat: f64,
    pi: f64,
    t: f64,
) -> Result<f64> {
    check_interior(family, &[theta_hat, xi_hat, pi])?;
    check_t(t)?;
    let k = |x| family.cumulant_unchecked(x);
    let mean_pi = family.mean_unchecked(pi);
    Ok((v / phi) * (t * mean_pi * (xi_hat - theta_hat) - (k(t * xi_hat + (1.0 - t) * theta_hat) - k(theta_hat))))
}

/// The canonical parameter strictly between `theta_hat` and `xi_hat` whose
/// mean equals the divided difference of the cumulant; the e-power at `t = 1`
/// changes sign there.
pub fn pi_star(family: Family, theta_hat: f64, xi_hat: f64) -> Result<f64> {
    check_interior(family, &[theta_hat, xi_hat])?;
    if theta_hat == xi_hat {
        return Err(Error::domain(family, "xi_hat - theta_hat", 0.0, "nonzero values"));
    }
    let slope = (family.cumulant_unchecked(xi_hat) - family.cumulant_unchecked(theta_hat)) / (xi_hat - theta_hat);
    family.canonical_from_mean(slope)
}

/// Maximiser of the conditional e-power over `t` in `(0, 1]`:
/// `min((pi - theta) / (xi - theta), 1)`.
pub fn t_opt(family: Family, theta_hat: f64, xi_hat: f64, pi: f64) -> Result<f64> {
    check_interior(family, &[theta_hat, xi_hat, pi])?;
    if theta_hat == xi_hat {
        return Err(Error::domain(family, "xi_hat - theta_hat", 0.0, "nonzero values"));
    }
    let ratio = (pi - theta_hat) / (xi_hat - theta_hat);
    if ratio <= 0.0 {
        return Err(Error::domain(family, "pi relative to theta_hat", pi, "the xi_hat side of theta_hat"));
    }
    Ok(ratio.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerDiagnostics {
    pub theta_hat: f64,
    pub xi_hat: f64,
    pub pi: f64,
    pub v: f64,
    pub phi: f64,
    pub pi_star: f64,
    pub t_opt: f64,
}

impl PowerDiagnostics {
    pub fn new(family: Family, phi: f64, v: f64, theta_hat: f64, xi_hat: f64, pi: f64) -> Result<Self> {
        Ok(PowerDiagnostics {
            theta_hat,
            xi_hat,
            pi,
            v,
            phi,
            pi_star: pi_star(family, theta_hat, xi_hat)?,
            t_opt: t_opt(family, theta_hat, xi_hat, pi)?,
        })
    }
}
