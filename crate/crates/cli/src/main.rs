use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::SystemTime;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kmono_core::shape_test::calibration_draws;
use kmono_core::{run_test, SelectionOverrides, StudyConfig, TestConfig, TestMethod};
use kmono_cli::output::{write_pmf_table, write_study_csv, StudyManifest};
use kmono_cli::report::{InputSummary, Timing};
use kmono_cli::{ingest, Failure, Format, Report};

#[derive(Parser)]
#[command(name = "kmono", version, about = "Tests for monotonicity and convexity of a p.m.f. from count data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one test and write a JSON report
    Test(TestArgs),
    /// Run a Monte Carlo rejection-rate study
    Study(StudyArgs),
    /// Export the calibration draws of a test as CSV
    Draws(DrawsArgs),
    /// Print the empirical p.m.f. and its k-th differences
    Pmf(PmfArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Count data file
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Raw)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestKind {
    Min,
    Proj,
}

#[derive(Clone, Copy, ValueEnum)]
enum MinMethod {
    M1,
    M2,
    M3,
}

#[derive(Args)]
struct TestSpec {
    #[command(flatten)]
    input: InputArgs,
    /// 1 for monotone, 2 for convex
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum, default_value_t = TestKind::Min)]
    test: TestKind,
    /// Knot selection for the min test
    #[arg(long, value_enum, default_value_t = MinMethod::M3)]
    method: MinMethod,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Calibration draws B
    #[arg(long, default_value_t = kmono_core::limit::DEFAULT_DRAWS)]
    draws: usize,
    #[arg(long, env = "KMONO_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "a-n")]
    a_n: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
}

impl TestSpec {
    fn config(&self) -> TestConfig {
        let method = match (self.test, self.method) {
            (TestKind::Proj, _) => TestMethod::Proj,
            (TestKind::Min, MinMethod::M1) => TestMethod::M1,
            (TestKind::Min, MinMethod::M2) => TestMethod::M2,
            (TestKind::Min, MinMethod::M3) => TestMethod::M3,
        };
        TestConfig {
            k: self.k,
            method,
            alpha: self.alpha,
            draws: self.draws,
            seed: self.seed,
            overrides: SelectionOverrides { gamma: self.gamma, a_n: self.a_n, c: self.c },
        }
    }
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    spec: TestSpec,
    /// Report path; stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    /// Study configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Table path; the manifest goes next to it with extension .manifest.json
    #[arg(long)]
    out: PathBuf,
    /// 200 replications and 500 draws per scenario
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct DrawsArgs {
    #[command(flatten)]
    spec: TestSpec,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PmfArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(io::BufWriter::new(
            fs::File::create(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_test(args: &TestArgs) -> Result<(), Failure> {
    let start = SystemTime::now();
    let input = &args.spec.input;
    let sample = ingest(&input.input, input.format)?;
    let cfg = args.spec.config();
    let result = run_test(&sample, &cfg)?;
    let summary = InputSummary::new(&input.input.display().to_string(), input.format, &sample);
    let report = Report::new(summary, cfg, result, Timing::since(start));
    let mut out = sink(args.out.as_deref())?;
    out.write_all(report.render().as_bytes())?;
    out.flush()?;
    Ok(())
}

fn manifest_path(table: &Path) -> PathBuf {
    table.with_extension("manifest.json")
}

fn cmd_study(args: &StudyArgs) -> Result<(), Failure> {
    let start = SystemTime::now();
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.config.display())))?;
    let mut cfg: StudyConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.config.display())))?;
    if args.quick {
        let quick = StudyConfig::quick(Vec::new());
        cfg.replications = quick.replications;
        cfg.draws = quick.draws;
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    let rows = kmono_core::harness::run_study(&cfg)?;
    write_study_csv(sink(Some(&args.out))?, &rows)?;
    let manifest = StudyManifest::new(cfg, rows, Timing::since(start));
    let path = manifest_path(&args.out);
    fs::write(&path, manifest.render()).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn cmd_draws(args: &DrawsArgs) -> Result<(), Failure> {
    let sample = ingest(&args.spec.input.input, args.spec.input.format)?;
    let cfg = args.spec.config();
    let cal = calibration_draws(&sample, &cfg)?;
    let mut out = sink(args.out.as_deref())?;
    match cal.draws {
        Some(draws) => draws.write_csv(&mut out)?,
        None => {
            eprintln!("note: every point is a knot, so the calibration law is a point mass at 0");
            writeln!(out, "draw")?;
            for _ in 0..cfg.draws {
                writeln!(out, "0")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_pmf(args: &PmfArgs) -> Result<(), Failure> {
    let sample = ingest(&args.input.input, args.input.format)?;
    let mut out = sink(args.out.as_deref())?;
    write_pmf_table(&mut out, &sample, args.k)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Study(a) => cmd_study(a),
        Command::Draws(a) => cmd_draws(a),
        Command::Pmf(a) => cmd_pmf(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
