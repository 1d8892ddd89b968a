//! Monte Carlo studies on synthetic claim-frequency portfolios.
//!
//! True means are `mu_min + R (mu_max - mu_min)` with `R ~ Beta(a, b)`; the
//! predictions shrink them toward a pivot, `mu_bar + slope (mu* - mu_bar)`,
//! so `slope = 1` is calibrated. Every trial draws its own portfolio and
//! responses from the stream `(seed, cell, trial)`; all tests of a cell see
//! the same data in a given trial.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::classical::{self, MIN_BOOTSTRAP};
use crate::edf::{Family, TestSample};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{derive_seed, stream};
use crate::universal::{self, Alternative, SplitConfig, StatisticKind, DEFAULT_T_GRID};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub n: usize,
    pub slope: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub beta_a: f64,
    pub beta_b: f64,
    pub mu_bar: f64,
    pub family: Family,
    pub phi: f64,
    pub v: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n: 10_000,
            slope: 1.0,
            mu_min: 0.02,
            mu_max: 0.25,
            beta_a: 1.5,
            beta_b: 5.0,
            mu_bar: 0.075,
            family: Family::Poisson,
            phi: 1.0,
            v: 1.0,
        }
    }
}

impl ScenarioConfig {
    pub fn new(n: usize, slope: f64) -> Self {
        ScenarioConfig {
            n,
            slope,
            ..ScenarioConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_min < self.mu_bar && self.mu_bar < self.mu_max) {
            return Err(Error::Config(format!(
                "need mu_min < mu_bar < mu_max, got {} {} {}",
                self.mu_min, self.mu_bar, self.mu_max
            )));
        }
        if !(self.beta_a > 0.0 && self.beta_b > 0.0) {
            return Err(Error::Config("beta shape parameters must be positive".into()));
        }
        if self.n < 2 {
            return Err(Error::Config(format!("sample size must be at least 2, got {}", self.n)));
        }
        if !self.slope.is_finite() {
            return Err(Error::Config("slope must be finite".into()));
        }
        if !(self.phi > 0.0 && self.phi.is_finite() && self.v > 0.0 && self.v.is_finite()) {
            return Err(Error::Config("dispersion and weight must be positive".into()));
        }
        self.family.check_mean(self.mu_min)?;
        self.family.check_mean(self.mu_max)?;
        Ok(())
    }
}

/// Draws `config.n` true means.
pub fn generate_true_means<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Vec<f64>> {
    config.validate()?;
    let ga = Gamma::new(config.beta_a, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let gb = Gamma::new(config.beta_b, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let width = config.mu_max - config.mu_min;
    Ok((0..config.n)
        .map(|_| {
            let x: f64 = ga.sample(rng);
            let y: f64 = gb.sample(rng);
            config.mu_min + x / (x + y) * width
        })
        .collect())
}

/// `mu_bar + slope (mu* - mu_bar)` for every true mean; `slope = 1` returns
/// the true means unchanged.
pub fn apply_miscalibration(family: Family, true_means: &[f64], slope: f64, mu_bar: f64) -> Result<Vec<f64>> {
    if slope == 1.0 {
        for &m in true_means {
            family.check_mean(m)?;
        }
        return Ok(true_means.to_vec());
    }
    true_means
        .iter()
        .map(|&m| {
            let out = mu_bar + slope * (m - mu_bar);
            family.check_mean(out)?;
            Ok(out)
        })
        .collect()
}

/// One test run inside a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum TestSpec {
    /// Classical bootstrap likelihood ratio test.
    Lrt {
        #[serde(default = "default_alpha")]
        alpha: f64,
        n_boot: usize,
    },
    /// Split likelihood ratio e-value, possibly sub-sampled.
    Universal {
        statistic: StatisticKind,
        #[serde(default = "default_s")]
        s: f64,
        #[serde(default = "default_b")]
        b: usize,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_grid")]
        t_grid: Vec<f64>,
        #[serde(default)]
        stop_at_crossing: bool,
        /// Use the true canonical parameters as the alternative.
        #[serde(default)]
        oracle: bool,
    },
}

fn default_alpha() -> f64 {
    0.05
}
fn default_s() -> f64 {
    0.5
}
fn default_b() -> usize {
    1
}
fn default_grid() -> Vec<f64> {
    DEFAULT_T_GRID.to_vec()
}

impl TestSpec {
    pub fn lrt(alpha: f64, n_boot: usize) -> Self {
        TestSpec::Lrt { alpha, n_boot }
    }

    pub fn universal(statistic: StatisticKind, s: f64, b: usize) -> Self {
        TestSpec::Universal {
            statistic,
            s,
            b,
            alpha: default_alpha(),
            t_grid: default_grid(),
            stop_at_crossing: false,
            oracle: false,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestSpec::Lrt { .. } => "lrt".into(),
            TestSpec::Universal { statistic, b, oracle, .. } => {
                let base = statistic.label(*b > 1);
                if *oracle {
                    format!("{base}_oracle")
                } else {
                    base
                }
            }
        }
    }

    /// Split ratio, when the test splits.
    pub fn split_ratio(&self) -> Option<f64> {
        match self {
            TestSpec::Universal { s, .. } => Some(*s),
            TestSpec::Lrt { .. } => None,
        }
    }

    /// Number of sub-samples (universal) or bootstrap draws (classical).
    pub fn replications(&self) -> usize {
        match self {
            TestSpec::Universal { b, .. } => *b,
            TestSpec::Lrt { n_boot, .. } => *n_boot,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TestSpec::Lrt { alpha, n_boot } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
                }
                if *n_boot < MIN_BOOTSTRAP {
                    return Err(Error::Config(format!("n_boot must be at least {MIN_BOOTSTRAP}, got {n_boot}")));
                }
                Ok(())
            }
            TestSpec::Universal { statistic, .. } => self.split_config(0).expect("universal").validate(*statistic),
        }
    }

    fn split_config(&self, seed: u64) -> Option<SplitConfig> {
        match self {
            TestSpec::Universal {
                s,
                b,
                alpha,
                t_grid,
                stop_at_crossing,
                ..
            } => Some(SplitConfig {
                s: *s,
                b_max: *b,
                t_grid: t_grid.clone(),
                alpha: *alpha,
                stop_at_crossing: *stop_at_crossing,
                seed,
            }),
            TestSpec::Lrt { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub reject: bool,
    pub log_statistic: f64,
    /// Sub-samples used (universal tests only).
    pub b_used: Option<usize>,
    /// Bootstrap p-value (classical test only).
    pub p_value: Option<f64>,
}

/// Simulated data of one trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub true_means: Vec<f64>,
    pub sample: TestSample,
}

/// Draws the portfolio, predictions and responses of one trial.
pub fn generate_trial(config: &ScenarioConfig, seed: u64) -> Result<TrialData> {
    let mut rng = stream(seed, &[0]);
    let true_means = generate_true_means(config, &mut rng)?;
    let mu_hat = apply_miscalibration(config.family, &true_means, config.slope, config.mu_bar)?;
    let y = true_means
        .iter()
        .map(|&m| config.family.sample(m, config.v, config.phi, &mut rng))
        .collect::<Result<Vec<f64>>>()?;
    let sample = TestSample::from_columns(config.family, config.phi, y, mu_hat, Some(vec![config.v; config.n]))?;
    Ok(TrialData { true_means, sample })
}

/// Runs every test on the data of one trial. Test `j` draws its own
/// randomness from `(seed, 1, j)`.
pub fn run_trial(config: &ScenarioConfig, tests: &[TestSpec], seed: u64) -> Result<Vec<TestOutcome>> {
    let data = generate_trial(config, seed)?;
    run_tests(&data, tests, seed)
}

fn run_tests(data: &TrialData, tests: &[TestSpec], seed: u64) -> Result<Vec<TestOutcome>> {
    let family = data.sample.family();
    let mut oracle_xi: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(tests.len());
    for (j, spec) in tests.iter().enumerate() {
        let test_seed = derive_seed(seed, &[1, j as u64]);
        let outcome = match spec {
            TestSpec::Lrt { alpha, n_boot } => {
                let r = classical::lrt_test(&data.sample, *alpha, *n_boot, test_seed)?;
                TestOutcome {
                    reject: r.reject,
                    log_statistic: r.observed,
                    b_used: None,
                    p_value: Some(r.p_value),
                }
            }
            TestSpec::Universal { statistic, oracle, .. } => {
                let cfg = spec.split_config(test_seed).expect("universal");
                let alt = if *oracle {
                    if oracle_xi.is_none() {
                        oracle_xi = Some(
                            data.true_means
                                .iter()
                                .map(|&m| family.canonical_from_mean(m))
                                .collect::<Result<_>>()?,
                        );
                    }
                    Alternative::Oracle(oracle_xi.as_deref().expect("just set"))
                } else {
                    Alternative::Isotonic
                };
                let r = universal::subsampled_test_with(&data.sample, &cfg, *statistic, alt)?;
                TestOutcome {
                    reject: r.reject,
                    log_statistic: r.log_statistic(),
                    b_used: Some(r.b_used),
                    p_value: None,
                }
            }
        };
        out.push(outcome);
    }
    Ok(out)
}

/// Seed of trial `trial` in cell `cell`.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    derive_seed(master, &[cell as u64, trial as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    pub slope: f64,
    pub test: String,
    pub s: Option<f64>,
    #[serde(rename = "B")]
    pub b: usize,
    pub power: f64,
    pub se: f64,
    pub e_power: f64,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub seed: u64,
    pub rows: Vec<StudyRow>,
    /// Per-row trial outcomes, in the order of `rows`.
    #[serde(skip)]
    pub outcomes: Vec<Vec<TestOutcome>>,
}

impl StudyResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,slope,test,s,B,power,se,e_power,n_trials\n");
        for r in &self.rows {
            let s = r.s.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.n, r.slope, r.test, s, r.b, r.power, r.se, r.e_power, r.n_trials
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("study result serializes")
    }

    /// Row of the given cell and test label.
    pub fn find(&self, n: usize, slope: f64, test: &str) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.n == n && r.slope == slope && r.test == test)
    }
}

/// Rejection frequency and mean final log statistic of each test in each
/// cell. Cell `c`, trial `k` uses [`trial_seed`]`(seed, c, k)`.
pub fn power_study(cells: &[ScenarioConfig], tests: &[TestSpec], n_trials: usize, seed: u64) -> Result<StudyResult> {
    if n_trials == 0 {
        return Err(Error::Config("n_trials must be at least 1".into()));
    }
    for c in cells {
        c.validate()?;
    }
    for t in tests {
        t.validate()?;
    }
    let mut rows = Vec::with_capacity(cells.len() * tests.len());
    let mut outcomes = Vec::with_capacity(rows.capacity());
    for (ci, cell) in cells.iter().enumerate() {
        let trials = par::map_indexed(n_trials, |k| run_trial(cell, tests, trial_seed(seed, ci, k)))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        for (j, spec) in tests.iter().enumerate() {
            let col: Vec<TestOutcome> = trials.iter().map(|t| t[j].clone()).collect();
            let rejections = col.iter().filter(|o| o.reject).count();
            let power = rejections as f64 / n_trials as f64;
            rows.push(StudyRow {
                n: cell.n,
                slope: cell.slope,
                test: spec.label(),
                s: spec.split_ratio(),
                b: spec.replications(),
                power,
                se: (power * (1.0 - power) / n_trials as f64).sqrt(),
                e_power: col.iter().map(|o| o.log_statistic).sum::<f64>() / n_trials as f64,
                n_trials,
            });
            outcomes.push(col);
        }
    }
    Ok(StudyResult { seed, rows, outcomes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingHistogram {
    /// `(b, count)` over trials that crossed, ascending in `b`.
    pub counts: Vec<(usize, usize)>,
    pub n_trials: usize,
    pub b_max: usize,
    pub power: f64,
}

impl CrossingHistogram {
    pub fn n_crossed(&self) -> usize {
        self.counts.iter().map(|&(_, c)| c).sum()
    }

    /// Fraction of crossing trials that crossed at or before `b`.
    pub fn fraction_by(&self, b: usize) -> f64 {
        let crossed = self.n_crossed();
        if crossed == 0 {
            return 0.0;
        }
        self.counts.iter().filter(|&&(k, _)| k <= b).map(|&(_, c)| c).sum::<usize>() as f64 / crossed as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("b,count\n");
        for (b, c) in &self.counts {
            out.push_str(&format!("{b},{c}\n"));
        }
        out
    }
}

/// Distribution of the first sub-sample at which the running average
/// reaches the threshold.
pub fn crossing_histogram(config: &ScenarioConfig, spec: &TestSpec, n_trials: usize, seed: u64) -> Result<CrossingHistogram> {
    let TestSpec::Universal { stop_at_crossing, b, .. } = spec else {
        return Err(Error::Config("crossing histogram needs a universal test".into()));
    };
    if !stop_at_crossing {
        return Err(Error::Config("crossing histogram needs stop_at_crossing".into()));
    }
    let study = power_study(std::slice::from_ref(config), std::slice::from_ref(spec), n_trials, seed)?;
    let mut counts = std::collections::BTreeMap::new();
    for o in study.outcomes[0].iter().filter(|o| o.reject) {
        *counts.entry(o.b_used.expect("universal outcome")).or_insert(0usize) += 1;
    }
    Ok(CrossingHistogram {
        counts: counts.into_iter().collect(),
        n_trials,
        b_max: *b,
        power: study.rows[0].power,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationPoint {
    pub slope: f64,
    pub log_lrt: f64,
    pub log_split: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationStudy {
    pub points: Vec<RelationPoint>,
    /// Least-squares slope of `log_split` on `log_lrt` over all points.
    pub fitted_slope: f64,
    pub intercept: f64,
    /// `(scenario slope, fitted slope)` per scenario with enough points.
    pub per_scenario: Vec<(f64, f64)>,
    /// Asymptotic reference slope.
    pub theoretical_slope: f64,
}

impl RelationStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("slope,log_lrt,log_split\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.slope, p.log_lrt, p.log_split));
        }
        out
    }
}

/// Least-squares `(slope, intercept)` of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("regression needs at least 2 points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData("regressor has no spread".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// In-sample and sub-sampled split log statistics on identical data, pooled
/// over the given scenarios (`n_trials` each), with their least-squares
/// relation.
pub fn lrs_relation_study(
    scenarios: &[ScenarioConfig],
    split: &SplitConfig,
    n_trials: usize,
    seed: u64,
) -> Result<RelationStudy> {
    split.validate(StatisticKind::Split)?;
    for c in scenarios {
        c.validate()?;
    }
    let mut points = Vec::with_capacity(scenarios.len() * n_trials);
    for (ci, cell) in scenarios.iter().enumerate() {
        let pts = par::map_indexed(n_trials, |k| -> Result<RelationPoint> {
            let ts = trial_seed(seed, ci, k);
            let data = generate_trial(cell, ts)?;
            let cfg = SplitConfig {
                seed: derive_seed(ts, &[1, 0]),
                stop_at_crossing: false,
                ..split.clone()
            };
            let r = universal::subsampled_test(&data.sample, &cfg, StatisticKind::Split)?;
            Ok(RelationPoint {
                slope: cell.slope,
                log_lrt: classical::log_lrs(&data.sample)?,
                log_split: r.log_statistic(),
            })
        });
        for p in pts {
            points.push(p?);
        }
    }
    let x: Vec<f64> = points.iter().map(|p| p.log_lrt).collect();
    let y: Vec<f64> = points.iter().map(|p| p.log_split).collect();
    let (fitted_slope, intercept) = ols(&x, &y)?;
    let mut per_scenario = Vec::new();
    for cell in scenarios {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            points.iter().filter(|p| p.slope == cell.slope).map(|p| (p.log_lrt, p.log_split)).unzip();
        if per_scenario.iter().any(|&(s, _)| s == cell.slope) {
            continue;
        }
        if let Ok((b, _)) = ols(&xs, &ys) {
            per_scenario.push((cell.slope, b));
        }
    }
    Ok(RelationStudy {
        points,
        fitted_slope,
        intercept,
        per_scenario,
        theoretical_slope: 0.6,
    })
}
