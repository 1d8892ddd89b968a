//! Simulation study configuration files and their outputs.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use edf_calibration::simulate::{self, ScenarioConfig, StudyResult, TestSpec};
use edf_calibration::universal::{SplitConfig, StatisticKind, DEFAULT_T_GRID};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 500 trials, 200 sub-samples or bootstrap draws.
    #[default]
    Desk,
    /// 1000 trials, 1000 sub-samples or bootstrap draws.
    Full,
}

impl Profile {
    pub fn n_trials(self) -> usize {
        match self {
            Profile::Desk => 500,
            Profile::Full => 1000,
        }
    }

    /// Default number of sub-samples and of bootstrap draws.
    pub fn replications(self) -> usize {
        match self {
            Profile::Desk => 200,
            Profile::Full => 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TestName {
    /// Classical bootstrap likelihood ratio test.
    Lrt,
    /// Split LRT on a single partition.
    Split,
    /// Split LRT averaged over several partitions.
    Subsplit,
    /// Split mean power LRT.
    MeanPower,
    /// Split maximal power LRT (not an e-value when sub-sampled).
    MaxPower,
}

/// Options of one test; unset values fall back to defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestOptions {
    pub alpha: Option<f64>,
    #[serde(alias = "split_ratio")]
    pub s: Option<f64>,
    pub b: Option<usize>,
    pub t_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub stop_at_crossing: bool,
    pub n_boot: Option<usize>,
    #[serde(default)]
    pub oracle: bool,
}

/// Builds a test specification, rejecting options that do not apply to the
/// chosen test. `replications` is the default number of sub-samples (for
/// `subsplit`) and bootstrap draws (for `lrt`).
pub fn build_spec(name: TestName, opts: &TestOptions, replications: usize) -> Result<TestSpec, CliError> {
    let alpha = opts.alpha.unwrap_or(0.05);
    let reject = |what: &str| Err(CliError::Usage(format!("{what} does not apply to test `{}`", name_str(name))));
    if name == TestName::Lrt {
        if opts.s.is_some() {
            return reject("split ratio");
        }
        if opts.b.is_some() {
            return reject("number of sub-samples");
        }
        if opts.t_grid.is_some() {
            return reject("t grid");
        }
        if opts.stop_at_crossing {
            return reject("stop at crossing");
        }
        if opts.oracle {
            return reject("oracle alternative");
        }
        return Ok(TestSpec::Lrt {
            alpha,
            n_boot: opts.n_boot.unwrap_or(replications),
        });
    }
    if opts.n_boot.is_some() {
        return reject("number of bootstrap draws");
    }
    let (statistic, b) = match name {
        TestName::Split => {
            if opts.b.is_some_and(|b| b != 1) {
                return reject("more than one sub-sample");
            }
            (StatisticKind::Split, 1)
        }
        TestName::Subsplit => (StatisticKind::Split, opts.b.unwrap_or(replications)),
        TestName::MeanPower => (StatisticKind::MeanPower, opts.b.unwrap_or(1)),
        TestName::MaxPower => (StatisticKind::MaxPower, opts.b.unwrap_or(1)),
        TestName::Lrt => unreachable!(),
    };
    if opts.t_grid.is_some() && statistic == StatisticKind::Split {
        return reject("t grid");
    }
    Ok(TestSpec::Universal {
        statistic,
        s: opts.s.unwrap_or(0.5),
        b,
        alpha,
        t_grid: opts.t_grid.clone().unwrap_or_else(|| DEFAULT_T_GRID.to_vec()),
        stop_at_crossing: opts.stop_at_crossing,
        oracle: opts.oracle,
    })
}

pub fn name_str(name: TestName) -> &'static str {
    match name {
        TestName::Lrt => "lrt",
        TestName::Split => "split",
        TestName::Subsplit => "subsplit",
        TestName::MeanPower => "mean-power",
        TestName::MaxPower => "max-power",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestEntry {
    pub test: TestName,
    #[serde(flatten)]
    pub options: TestOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n: Vec<usize>,
    pub slope: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingEntry {
    pub n: usize,
    pub slope: f64,
    pub b_max: Option<usize>,
    pub n_trials: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationEntry {
    pub n: usize,
    pub slopes: Vec<f64>,
    pub b: Option<usize>,
    /// Trials per slope.
    pub n_trials: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub profile: Profile,
    pub n_trials: Option<usize>,
    /// Portfolio parameters; `n` and `slope` are taken from the grid.
    #[serde(default)]
    pub scenario: ScenarioConfig,
    pub grid: Grid,
    pub tests: Vec<TestEntry>,
    pub crossing: Option<CrossingEntry>,
    pub relation: Option<RelationEntry>,
}

impl StudyConfig {
    pub fn from_json(text: &str, name: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Malformed {
            path: name.to_string(),
            line: e.line() as u64,
            message: e.to_string(),
        })
    }

    fn cells(&self) -> Vec<ScenarioConfig> {
        self.grid
            .n
            .iter()
            .flat_map(|&n| {
                self.grid.slope.iter().map(move |&slope| ScenarioConfig {
                    n,
                    slope,
                    ..self.scenario
                })
            })
            .collect()
    }
}

/// Paths written by [`run_study`].
#[derive(Debug, Default)]
pub struct StudyOutputs {
    pub files: Vec<String>,
    pub summary: String,
}

/// Runs every part of the study and writes its files into `dir`.
pub fn run_study(config: &StudyConfig, dir: &Path, seed: u64) -> Result<StudyOutputs, CliError> {
    if config.grid.n.is_empty() || config.grid.slope.is_empty() || config.tests.is_empty() {
        return Err(CliError::Usage("grid and tests must be non-empty".into()));
    }
    let profile = config.profile;
    let n_trials = config.n_trials.unwrap_or(profile.n_trials());
    let specs = config
        .tests
        .iter()
        .map(|t| build_spec(t.test, &t.options, profile.replications()))
        .collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = StudyOutputs::default();
    let mut write = |name: &str, body: &str| -> Result<(), CliError> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        out.files.push(name.to_string());
        Ok(())
    };

    let study = simulate::power_study(&config.cells(), &specs, n_trials, seed)?;
    write("power.csv", &study.to_csv())?;
    write("power.json", &study.to_json())?;
    let (power_table, e_power_table) = wide_tables(config, &specs, &study);
    write("power_table.csv", &power_table)?;
    write("e_power_table.csv", &e_power_table)?;
    let mut summary = summary_table(config, &specs, &study, n_trials);

    if let Some(c) = &config.crossing {
        let spec = TestSpec::Universal {
            statistic: StatisticKind::Split,
            s: 0.5,
            b: c.b_max.unwrap_or(1000),
            alpha: 0.05,
            t_grid: DEFAULT_T_GRID.to_vec(),
            stop_at_crossing: true,
            oracle: false,
        };
        let cell = ScenarioConfig {
            n: c.n,
            slope: c.slope,
            ..config.scenario
        };
        let h = simulate::crossing_histogram(&cell, &spec, c.n_trials.unwrap_or(n_trials), seed)?;
        write("crossing.csv", &h.to_csv())?;
        write("crossing.json", &serde_json::to_string_pretty(&h).expect("serializable"))?;
        let _ = writeln!(
            summary,
            "\ncrossing (n={}, slope={}): power {:.3}, crossed by b=2: {:.3}",
            c.n,
            c.slope,
            h.power,
            h.fraction_by(2)
        );
    }

    if let Some(r) = &config.relation {
        let scenarios: Vec<ScenarioConfig> = r
            .slopes
            .iter()
            .map(|&slope| ScenarioConfig {
                n: r.n,
                slope,
                ..config.scenario
            })
            .collect();
        let split = SplitConfig {
            b_max: r.b.unwrap_or(profile.replications()),
            ..SplitConfig::default()
        };
        let per_slope = r.n_trials.unwrap_or(n_trials.div_ceil(r.slopes.len().max(1)));
        let rel = simulate::lrs_relation_study(&scenarios, &split, per_slope, seed)?;
        write("relation.csv", &rel.to_csv())?;
        write("relation.json", &serde_json::to_string_pretty(&rel).expect("serializable"))?;
        let _ = writeln!(
            summary,
            "\nrelation (n={}): fitted slope {:.3} (reference {})",
            r.n, rel.fitted_slope, rel.theoretical_slope
        );
    }
    out.summary = summary;
    Ok(out)
}

fn test_title(spec: &TestSpec) -> String {
    match spec {
        TestSpec::Lrt { n_boot, .. } => format!("lrt n_boot={n_boot}"),
        TestSpec::Universal { b, s, .. } if *s != 0.5 => format!("{} s={s} B={b}", spec.label()),
        TestSpec::Universal { b, .. } => format!("{} B={b}", spec.label()),
    }
}

/// Rows `(n, test)`, one column per slope.
fn wide_tables(config: &StudyConfig, specs: &[TestSpec], study: &StudyResult) -> (String, String) {
    let mut header = String::from("n,test");
    for s in &config.grid.slope {
        let _ = write!(header, ",slope_{s}");
    }
    header.push('\n');
    let (mut power, mut e_power) = (header.clone(), header);
    let (ns, nt) = (config.grid.slope.len(), specs.len());
    for (ni, n) in config.grid.n.iter().enumerate() {
        for (ti, spec) in specs.iter().enumerate() {
            let title = test_title(spec);
            let _ = write!(power, "{n},{title}");
            let _ = write!(e_power, "{n},{title}");
            for si in 0..ns {
                let row = &study.rows[(ni * ns + si) * nt + ti];
                let _ = write!(power, ",{}", row.power);
                let _ = write!(e_power, ",{}", row.e_power);
            }
            power.push('\n');
            e_power.push('\n');
        }
    }
    (power, e_power)
}

fn summary_table(config: &StudyConfig, specs: &[TestSpec], study: &StudyResult, n_trials: usize) -> String {
    let titles: Vec<String> = specs.iter().map(test_title).collect();
    let width = titles.iter().map(String::len).max().unwrap_or(4).max(4);
    let mut out = format!("power at 1/alpha threshold, {n_trials} trials per cell\n");
    let _ = write!(out, "{:>8}  {:<width$}", "n", "test");
    for s in &config.grid.slope {
        let _ = write!(out, "  {:>11}", format!("slope={s}"));
    }
    out.push('\n');
    let (ns, nt) = (config.grid.slope.len(), specs.len());
    for (ni, n) in config.grid.n.iter().enumerate() {
        for (ti, title) in titles.iter().enumerate() {
            let _ = write!(out, "{n:>8}  {title:<width$}");
            for si in 0..ns {
                let _ = write!(out, "  {:>11.3}", study.rows[(ni * ns + si) * nt + ti].power);
            }
            out.push('\n');
        }
    }
    out
}
