//! `edfcal`: calibration tests, reliability diagrams and simulation studies.
//!
//! Exit codes: 0 success, 2 rejection with `--exit-on-reject`, 64 malformed
//! input or usage, 65 data outside the family's domain, 74 I/O failure.

mod error;
mod input;
mod study;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use edf_calibration::classical::{lrt_test, reliability_diagram};
use edf_calibration::simulate::TestSpec;
use edf_calibration::universal::{subsampled_test, SplitConfig};
use edf_calibration::{Family, TestSample};
use serde_json::json;

use crate::error::{CliError, EXIT_REJECT, EXIT_USAGE};
use crate::study::{build_spec, name_str, Profile, StudyConfig, TestName, TestOptions};

const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Parser)]
#[command(name = "edfcal", version, about = "Calibration tests for mean predictions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test a sample `y,mu_hat[,weight]` for calibration; prints a JSON report.
    Test(TestArgs),
    /// Reliability diagram with point-wise consistency bands, as CSV.
    Diagram(DiagramArgs),
    /// Run a simulation study described by a JSON file.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Input CSV with header `y,mu_hat[,weight]`; `-` reads stdin.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "poisson", value_parser = parse_family)]
    family: Family,
    /// Dispersion parameter.
    #[arg(long, default_value_t = 1.0)]
    phi: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long = "test", value_enum, default_value = "subsplit")]
    test: TestName,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Fraction of the sample held out for evaluation.
    #[arg(long)]
    split_ratio: Option<f64>,
    /// Number of random partitions (default 200 for `subsplit`, 1 otherwise).
    #[arg(long)]
    b: Option<usize>,
    /// Comma-separated exponents for the power tests (default 0.1,0.2,...,1).
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    /// Stop sub-sampling once the running average reaches 1/alpha.
    #[arg(long)]
    stop_at_crossing: bool,
    /// Bootstrap draws for `lrt` (default 1000).
    #[arg(long)]
    n_boot: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Exit with code 2 when the null hypothesis is rejected.
    #[arg(long)]
    exit_on_reject: bool,
    /// Include the running log statistic of every sub-sample.
    #[arg(long)]
    trace: bool,
}

#[derive(Debug, Args)]
struct DiagramArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Coverage of the point-wise bands.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 1000)]
    n_boot: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Study description (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the result files.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Overrides the profile of the config file.
    #[arg(long, value_enum, conflicts_with = "full")]
    profile: Option<Profile>,
    /// Shorthand for `--profile full`.
    #[arg(long)]
    full: bool,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse::<Family>().map_err(|_| {
        let names: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
        format!("unknown family `{s}` (expected one of {})", names.join(", "))
    })
}

fn load_sample(data: &DataArgs) -> Result<TestSample, CliError> {
    let cols = input::read_columns(&data.input)?;
    Ok(TestSample::from_columns(data.family, data.phi, cols.y, cols.mu_hat, cols.weight)?)
}

fn emit(output: Option<&Path>, body: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// Returns whether the null hypothesis was rejected.
fn cmd_test(args: &TestArgs) -> Result<bool, CliError> {
    let opts = TestOptions {
        alpha: Some(args.alpha),
        s: args.split_ratio,
        b: args.b,
        t_grid: args.t_grid.clone(),
        stop_at_crossing: args.stop_at_crossing,
        n_boot: args.n_boot,
        oracle: false,
    };
    let default_reps = if args.test == TestName::Lrt { 1000 } else { 200 };
    let spec = build_spec(args.test, &opts, default_reps)?;
    let sample = load_sample(&args.data)?;
    let common = json!({
        "test": name_str(args.test),
        "family": sample.family().name(),
        "n": sample.len(),
        "phi": sample.phi(),
    });
    let (mut report, reject) = match spec {
        TestSpec::Lrt { alpha, n_boot } => {
            let r = lrt_test(&sample, alpha, n_boot, args.seed)?;
            let v = json!({
                "kind": "lrt",
                "log_statistic": r.observed,
                "threshold": r.critical_value,
                "p_value": r.p_value,
                "reject": r.reject,
                "alpha": r.alpha,
                "n_boot": r.n_boot,
                "seed": r.seed,
            });
            (v, r.reject)
        }
        TestSpec::Universal {
            statistic,
            s,
            b,
            alpha,
            t_grid,
            stop_at_crossing,
            ..
        } => {
            let cfg = SplitConfig {
                s,
                b_max: b,
                t_grid,
                alpha,
                stop_at_crossing,
                seed: args.seed,
            };
            let r = subsampled_test(&sample, &cfg, statistic)?;
            (r.to_json(args.trace), r.reject)
        }
    };
    for (k, v) in common.as_object().expect("object") {
        report[k] = v.clone();
    }
    let mut body = serde_json::to_string_pretty(&report).expect("report serializes");
    body.push('\n');
    emit(args.data.output.as_deref(), &body)?;
    Ok(reject)
}

fn cmd_diagram(args: &DiagramArgs) -> Result<(), CliError> {
    let sample = load_sample(&args.data)?;
    let diagram = reliability_diagram(&sample, args.level, args.n_boot, args.seed)?;
    emit(args.data.output.as_deref(), &diagram.to_csv())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let mut config = StudyConfig::from_json(&text, &args.config.display().to_string())?;
    if args.full {
        config.profile = Profile::Full;
    } else if let Some(p) = args.profile {
        config.profile = p;
    }
    let out = study::run_study(&config, &args.output, args.seed)?;
    print!("{}", out.summary);
    println!("\nwrote {} files to {}", out.files.len(), args.output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Test(args) => cmd_test(args).map(|reject| reject && args.exit_on_reject),
        Command::Diagram(args) => cmd_diagram(args).map(|_| false),
        Command::Simulate(args) => cmd_simulate(args).map(|_| false),
    };
    match result {
        Ok(true) => ExitCode::from(EXIT_REJECT),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("edfcal: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
