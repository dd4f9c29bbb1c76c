//! `covmax`: covariance tests, synthetic data, Monte Carlo studies,
//! dependence diagnostics, and tapered estimates from the command line.
//!
//! Exit codes: 0 on success, 1 on any error, 2 when `test --fail-on-reject`
//! rejects the null. Every stochastic command takes an explicit seed, and
//! `--threads` (or the `COVMAX_THREADS` environment variable) never changes
//! results, only wall time.

mod io;
mod reports;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use covmax::core_stats::{
    run_test, NormalizationMode, NullCovariance, PairIndexSet, TestResult,
};
use covmax::diagnostics::{condition_report, DEFAULT_PRODUCT_PAIR_CAP};
use covmax::error::Error as CovError;
use covmax::mc_harness::{run_study, StudyConfig};
use covmax::processes::GeneratorSpec;
use covmax::structure_tests::{
    choose_bandwidth, pooled_autocov, sample_cov_matrix, tapered_estimate, TAPER_CAVEAT,
};

use reports::{TaperErrors, TaperReport, TestReport};

#[derive(Parser)]
#[command(
    name = "covmax",
    version,
    about = "Simultaneous inference for high-dimensional covariance matrices"
)]
struct Cli {
    /// Worker threads for Monte Carlo commands (falls back to the
    /// COVMAX_THREADS environment variable, then to all cores). Results
    /// never depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a CSV data matrix against a null hypothesis on its covariance.
    Test(TestArgs),
    /// Generate a synthetic data matrix from a generator spec.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo study from a config file.
    Mc(McArgs),
    /// Summarize how hard a dataset is for the simultaneous test.
    Diagnose(DiagnoseArgs),
    /// Compute the flat-top tapered covariance estimate.
    Taper(TaperArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NullKind {
    /// All off-diagonal covariances are zero.
    Independence,
    /// The covariance matrix is the identity.
    Identity,
    /// The covariance matrix is Toeplitz (fitted from the data).
    Stationarity,
    /// Covariances vanish outside a band (requires --band).
    Banded,
    /// Bandedness phrased as taper adequacy (requires --band or --eta).
    Taper,
    /// An explicit covariance matrix (requires --sigma0).
    Custom,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormKind {
    /// Dimension-based recentering (full pair sets).
    Theorem,
    /// Cardinality-based recentering (arbitrary pair sets).
    Cardinality,
}

impl From<NormKind> for NormalizationMode {
    fn from(k: NormKind) -> Self {
        match k {
            NormKind::Theorem => NormalizationMode::TheoremConstants,
            NormKind::Cardinality => NormalizationMode::CardinalityConstants,
        }
    }
}

#[derive(Args)]
struct TestArgs {
    /// CSV data matrix: rows are observations, columns are variables.
    #[arg(long)]
    input: PathBuf,
    /// Null hypothesis to test.
    #[arg(long, value_enum)]
    null: NullKind,
    /// Bandwidth for the banded and taper nulls.
    #[arg(long)]
    band: Option<usize>,
    /// Smoothness exponent: derive the bandwidth as n^(1/(2*eta+1))
    /// (taper null only).
    #[arg(long)]
    eta: Option<f64>,
    /// CSV file with the null covariance matrix (custom null only).
    #[arg(long)]
    sigma0: Option<PathBuf>,
    /// Recentering family; defaults to the natural one for the null.
    #[arg(long, value_enum)]
    normalization: Option<NormKind>,
    /// Test level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with code 2 when the null is rejected at --alpha.
    #[arg(long)]
    fail_on_reject: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON generator spec.
    #[arg(long)]
    spec: PathBuf,
    /// Observations (rows).
    #[arg(long)]
    n: usize,
    /// Variables (columns).
    #[arg(long)]
    m: usize,
    /// Master seed.
    #[arg(long)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct McArgs {
    /// JSON study config.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON path for the study summary.
    #[arg(long)]
    out: PathBuf,
    /// Also write per-replication (replication, y, p_value) rows here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// CSV data matrix.
    #[arg(long)]
    input: PathBuf,
    /// Output JSON path for the dependence report.
    #[arg(long)]
    out: PathBuf,
    /// Refuse index sets with more than this many pairs.
    #[arg(long, default_value_t = DEFAULT_PRODUCT_PAIR_CAP)]
    cap: usize,
}

#[derive(Args)]
struct TaperArgs {
    /// CSV data matrix.
    #[arg(long)]
    input: PathBuf,
    /// Bandwidth (positive even integer).
    #[arg(long)]
    band: Option<usize>,
    /// Smoothness exponent: derive the bandwidth as n^(1/(2*eta+1)).
    #[arg(long)]
    eta: Option<f64>,
    /// Output CSV path for the tapered covariance estimate.
    #[arg(long)]
    out: PathBuf,
    /// True covariance CSV; when given, norm errors of the tapered and raw
    /// estimates are reported.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Write a JSON taper report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Keep exit code 2 reserved for test rejections: clap's own
            // usage errors become exit code 1.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Simulate(args) => cmd_simulate(args).map(|()| ExitCode::SUCCESS),
        Command::Mc(args) => cmd_mc(args).map(|()| ExitCode::SUCCESS),
        Command::Diagnose(args) => cmd_diagnose(args).map(|()| ExitCode::SUCCESS),
        Command::Taper(args) => cmd_taper(args).map(|()| ExitCode::SUCCESS),
    }
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var("COVMAX_THREADS") {
            Ok(raw) => Some(
                raw.trim()
                    .parse::<usize>()
                    .map_err(|_| anyhow!("COVMAX_THREADS must be a positive integer, got {raw:?}"))?,
            ),
            Err(std::env::VarError::NotPresent) => None,
            Err(e) => return Err(anyhow!("COVMAX_THREADS is not readable: {e}")),
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("initializing the thread pool")?;
    }
    Ok(())
}

/// Maps library errors to user-facing messages with 1-based columns.
fn friendly(e: CovError) -> anyhow::Error {
    match e {
        CovError::DegenerateVariance { i, j, tau_hat, floor } => anyhow!(
            "degenerate variance estimate for column pair ({}, {}): tau_hat = {tau_hat:.3e} \
             is below the floor {floor:.3e}; the self-normalized statistic is undefined \
             on this sample",
            i + 1,
            j + 1
        ),
        CovError::Kappa4Boundary { kappa4, i, j, tau } => anyhow!(
            "fourth-cumulant boundary: kappa4 = {kappa4} gives tau({}, {}) = {tau:.3e} <= 0",
            i + 1,
            j + 1
        ),
        other => anyhow!(other),
    }
}

// ---------------------------------------------------------------------------
// test
// ---------------------------------------------------------------------------

fn cmd_test(args: TestArgs) -> Result<ExitCode> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        bail!("--alpha must lie strictly between 0 and 1, got {}", args.alpha);
    }
    if args.band.is_some() && !matches!(args.null, NullKind::Banded | NullKind::Taper) {
        bail!("--band only applies to the banded and taper nulls");
    }
    if args.eta.is_some() && args.null != NullKind::Taper {
        bail!("--eta only applies to the taper null");
    }
    if args.sigma0.is_some() && args.null != NullKind::Custom {
        bail!("--sigma0 only applies to the custom null");
    }

    let x = io::read_matrix(&args.input)?;
    let (n, m) = (x.n(), x.m());

    let label;
    let null;
    let idx;
    let default_mode;
    let mut band = None;
    let mut fitted = None;
    let mut caveat = None;
    match args.null {
        NullKind::Independence => {
            label = "independence";
            null = NullCovariance::Zero;
            idx = PairIndexSet::strict_pairs(m).map_err(friendly)?;
            default_mode = NormalizationMode::TheoremConstants;
        }
        NullKind::Identity => {
            label = "identity";
            null = NullCovariance::Identity;
            idx = PairIndexSet::pairs_with_diagonal(m).map_err(friendly)?;
            default_mode = NormalizationMode::TheoremConstants;
        }
        NullKind::Stationarity => {
            label = "stationarity";
            let fit = pooled_autocov(&x, m - 1).map_err(friendly)?;
            null = NullCovariance::Toeplitz(fit.gamma.clone());
            fitted = Some(fit.gamma);
            idx = PairIndexSet::pairs_with_diagonal(m).map_err(friendly)?;
            default_mode = NormalizationMode::TheoremConstants;
        }
        NullKind::Banded | NullKind::Taper => {
            let b = match (args.band, args.eta) {
                (Some(b), None) => b,
                (None, Some(eta)) if args.null == NullKind::Taper => {
                    if !(eta.is_finite() && eta > 0.0) {
                        bail!("--eta must be a positive real, got {eta}");
                    }
                    choose_bandwidth(n, eta)
                }
                (Some(_), Some(_)) => bail!("give either --band or --eta, not both"),
                _ => match args.null {
                    NullKind::Banded => bail!("--null banded requires --band"),
                    _ => bail!("--null taper requires --band or --eta"),
                },
            };
            label = if args.null == NullKind::Banded { "banded" } else { "taper" };
            null = NullCovariance::Zero;
            idx = PairIndexSet::band_exterior(m, b).map_err(friendly)?;
            default_mode = NormalizationMode::CardinalityConstants;
            band = Some(b);
            if args.null == NullKind::Taper {
                caveat = Some(TAPER_CAVEAT.to_string());
            }
        }
        NullKind::Custom => {
            label = "custom";
            let sigma0 = args.sigma0.as_ref().ok_or_else(|| anyhow!("--null custom requires --sigma0"))?;
            let matrix = io::read_square_matrix(sigma0)?;
            null = NullCovariance::Explicit(matrix);
            idx = PairIndexSet::pairs_with_diagonal(m).map_err(friendly)?;
            default_mode = NormalizationMode::TheoremConstants;
        }
    }

    let mode = args.normalization.map(NormalizationMode::from).unwrap_or(default_mode);
    let result = run_test(&x, &null, &idx, mode).map_err(friendly)?;

    let mut report = TestReport::new(label, n, m, &result, args.alpha);
    report.band = band;
    report.fitted_autocovariances = fitted;
    report.caveat = caveat;

    print_test_result(label, &result, args.alpha);
    if let Some(out) = &args.out {
        io::write_json_17(out, &report)?;
        println!("report written to {}", out.display());
    }

    if report.reject && args.fail_on_reject {
        Ok(ExitCode::from(2))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn print_test_result(label: &str, result: &TestResult, alpha: f64) {
    println!("null hypothesis : {label}");
    println!("pairs examined  : {}", result.cardinality);
    println!("statistic       : {}", result.statistic);
    println!("normalized y    : {}", result.normalized);
    println!("p-value         : {}", result.p_value);
    println!(
        "argmax pair     : ({}, {})",
        result.argmax_pair.0 + 1,
        result.argmax_pair.1 + 1
    );
    println!(
        "decision        : {} at alpha = {alpha}",
        if result.reject_at(alpha) { "reject" } else { "retain" }
    );
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let spec: GeneratorSpec = io::read_json_spec(&args.spec)?;
    let x = spec.generate(args.n, args.m, args.seed).map_err(friendly)?;
    io::write_matrix_csv(&args.out, &x)?;
    println!("wrote {} x {} matrix to {}", x.n(), x.m(), args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// mc
// ---------------------------------------------------------------------------

fn cmd_mc(args: McArgs) -> Result<()> {
    let mut cfg: StudyConfig = io::read_json_spec(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let summary = run_study(&cfg).map_err(friendly)?;

    println!(
        "study: n = {}, m = {}, replications = {} ({} failed)",
        summary.n, summary.m, summary.replications, summary.failed_replications
    );
    for (level, rate) in &summary.rejection_rates {
        println!("rejection rate at {level}: {rate}");
    }
    println!("KS distance to the limit law: {}", summary.ks_to_gumbel);
    println!("runtime: {:.2} s", summary.runtime_seconds);

    io::write_json_17(&args.out, &summary)?;
    println!("summary written to {}", args.out.display());

    if let Some(csv_path) = &args.csv {
        let mut text = String::from("replication,y,p_value\n");
        for (i, (y, p)) in summary.y_values.iter().zip(&summary.p_values).enumerate() {
            use std::fmt::Write as _;
            match (y, p) {
                (Some(y), Some(p)) => {
                    let _ = writeln!(text, "{},{y},{p}", i + 1);
                }
                _ => {
                    let _ = writeln!(text, "{},,", i + 1);
                }
            }
        }
        std::fs::write(csv_path, text)
            .with_context(|| format!("writing {}", csv_path.display()))?;
        println!("replication values written to {}", csv_path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

fn cmd_diagnose(args: DiagnoseArgs) -> Result<()> {
    let x = io::read_matrix(&args.input)?;
    let report = condition_report(&x, args.cap).map_err(friendly)?;
    println!("n = {}, m = {}, product pairs = {}", report.n, report.m, report.s);
    println!("tau_min         : {}", report.tau_min);
    println!("corr_max        : {}", report.corr_max);
    println!("pooled kappa4   : {}", report.kappa4_pooled);
    io::write_json_17(&args.out, &report)?;
    println!("report written to {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// taper
// ---------------------------------------------------------------------------

fn cmd_taper(args: TaperArgs) -> Result<()> {
    let x = io::read_matrix(&args.input)?;
    let band = match (args.band, args.eta) {
        (Some(b), None) => b,
        (None, Some(eta)) => {
            if !(eta.is_finite() && eta > 0.0) {
                bail!("--eta must be a positive real, got {eta}");
            }
            choose_bandwidth(x.n(), eta)
        }
        (Some(_), Some(_)) => bail!("give either --band or --eta, not both"),
        (None, None) => bail!("taper requires --band or --eta"),
    };
    let tapered = tapered_estimate(&x, band).map_err(friendly)?;
    io::write_square_csv(&args.out, &tapered)?;
    println!(
        "wrote {r} x {r} tapered estimate (B = {band}) to {}",
        args.out.display(),
        r = tapered.nrows()
    );

    let errors = match &args.truth {
        Some(truth_path) => {
            let truth = io::read_square_matrix(truth_path)?;
            if truth.nrows() != x.m() {
                bail!(
                    "{}: truth is {} x {}, data has {} columns",
                    truth_path.display(),
                    truth.nrows(),
                    truth.ncols(),
                    x.m()
                );
            }
            let raw = sample_cov_matrix(&x);
            let errors = TaperErrors {
                operator_tapered: covmax::structure_tests::operator_norm(&(&tapered - &truth)),
                operator_raw: covmax::structure_tests::operator_norm(&(&raw - &truth)),
                frobenius_tapered: (&tapered - &truth).norm(),
                frobenius_raw: (&raw - &truth).norm(),
            };
            println!(
                "operator error  : {} tapered vs {} raw",
                errors.operator_tapered, errors.operator_raw
            );
            println!(
                "frobenius error : {} tapered vs {} raw",
                errors.frobenius_tapered, errors.frobenius_raw
            );
            Some(errors)
        }
        None => None,
    };

    if let Some(report_path) = &args.report {
        let report = TaperReport { n: x.n(), m: x.m(), band, eta: args.eta, errors };
        io::write_json_17(report_path, &report)?;
        println!("report written to {}", report_path.display());
    }
    Ok(())
}
