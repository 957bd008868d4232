use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blockpick_core::experiment::{emit_report, load_config, run_experiment, ReportFormat};
use blockpick_core::hhj::{block_grid, subsample_mse_curve, HhjConfig, SubsamplePlan};
use blockpick_core::mbb::mbb_variance;
use blockpick_core::nppi::{nppi_select, NppiConfig};
use blockpick_core::pw::{pw_select, PwConfig};
use blockpick_core::seed::{derive_seed, tag};
use blockpick_core::{hhj_select, CurveKind, Error, MseCurve, SmoothStatistic, TimeSeries};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "blockpick",
    version,
    about = "Block-length selection for the moving block bootstrap"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select a block length for one series and print it with diagnostics as JSON.
    Select(SelectArgs),
    /// Build (or refresh) the Monte Carlo oracle cache for every n in a config.
    Oracle(OracleArgs),
    /// Run a convergence-rate experiment and write report files.
    Experiment(ExperimentArgs),
    /// Write a subsample MSE curve as CSV (`b,mse`).
    MseCurve(MseCurveArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectMethod {
    Hhj,
    Nppi,
    Pw,
}

#[derive(Args)]
struct Common {
    /// Headerless CSV, one observation per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "mean")]
    statistic: SmoothStatistic,
    /// Monte Carlo resamples per bootstrap estimate (nonlinear statistics).
    #[arg(long, default_value_t = 200)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct HhjArgs {
    /// Subsample length (default ceil(n^(1/2))).
    #[arg(long)]
    m: Option<usize>,
    /// Pilot block length (default ceil(n^(1/3))).
    #[arg(long)]
    pilot: Option<usize>,
    #[arg(long = "K")]
    k: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
}

impl HhjArgs {
    fn config(&self, n: usize, budget: usize) -> HhjConfig {
        let mut c = HhjConfig::defaults_for(n);
        c.m = self.m.unwrap_or(c.m);
        c.pilot_block = self.pilot.unwrap_or(c.pilot_block);
        c.k = self.k.unwrap_or(c.k);
        c.stride = self.stride.unwrap_or(c.stride);
        c.boot_budget = budget;
        c
    }
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long, value_enum)]
    method: SelectMethod,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    hhj: HhjArgs,
    #[arg(long)]
    ell1: Option<usize>,
    #[arg(long)]
    ell2: Option<usize>,
    #[arg(long = "m-jab")]
    m_jab: Option<usize>,
    /// Flat-top bandwidth.
    #[arg(long = "M", conflicts_with = "tau")]
    bandwidth: Option<usize>,
    /// Bandwidth exponent: M = ceil(n^tau).
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `oracle.cache_dir` from the config.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Report formats to write; all three by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<FormatArg>,
    /// Overrides `parallelism` from the config.
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Gnuplot,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Gnuplot => ReportFormat::Gnuplot,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveArg {
    /// Centred at the pilot full-sample estimate.
    Empirical,
    /// Centred at a known long-run variance (`--sigma-inf-sq`).
    Oracle,
}

#[derive(Args)]
struct MseCurveArgs {
    #[arg(long, value_enum, default_value = "empirical")]
    kind: CurveArg,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    hhj: HhjArgs,
    #[arg(long)]
    sigma_inf_sq: Option<f64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Select(args) => select(args),
        Command::Oracle(args) => oracle(args),
        Command::Experiment(args) => experiment(args),
        Command::MseCurve(args) => mse_curve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DegeneracyAbort { .. } => 3,
        e if e.is_config_error() => 2,
        _ => 1,
    }
}

fn load_series(common: &Common) -> Result<TimeSeries, Error> {
    let series = TimeSeries::from_csv_path(&common.input)?;
    if series.dim() != common.statistic.dim() {
        return Err(Error::DimensionMismatch {
            expected: common.statistic.dim(),
            found: series.dim(),
        });
    }
    Ok(series)
}

fn write_stdout(text: &str) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn select(args: SelectArgs) -> Result<(), Error> {
    let series = load_series(&args.common)?;
    let n = series.len();
    let Common {
        statistic,
        budget,
        seed,
        ..
    } = args.common;
    let selection = match args.method {
        SelectMethod::Hhj => hhj_select(&series, statistic, &args.hhj.config(n, budget), seed)?,
        SelectMethod::Nppi => {
            let mut c = NppiConfig::defaults_for(n);
            c.ell1 = args.ell1.unwrap_or(c.ell1);
            c.ell2 = args.ell2.unwrap_or(c.ell2);
            c.m_jab = args.m_jab.unwrap_or(c.m_jab);
            c.boot_budget = budget;
            nppi_select(&series, statistic, &c, seed)?
        }
        SelectMethod::Pw => {
            let c = match (args.bandwidth, args.tau) {
                (Some(bandwidth), _) => PwConfig { bandwidth },
                (None, Some(tau)) => PwConfig::from_tau(n, tau)?,
                (None, None) => PwConfig::defaults_for(n),
            };
            pw_select(&series, statistic, &c)?
        }
    };
    write_stdout(&(serde_json::to_string_pretty(&selection)? + "\n"))
}

fn oracle(args: OracleArgs) -> Result<(), Error> {
    let mut config = load_config(&args.config)?;
    if let Some(dir) = args.cache_dir {
        config.oracle.cache_dir = Some(dir);
    }
    if config.oracle.cache_dir.is_none() {
        return Err(Error::config(
            "oracle.cache_dir",
            "a cache directory is required (config or --cache-dir)",
        ));
    }
    let mut summary = Vec::new();
    for &n in &config.n_grid {
        let result = config.oracle(n)?;
        summary.push(serde_json::json!({ "n": n, "ell_opt": result.ell_opt, "ell0": result.ell0 }));
    }
    write_stdout(&(serde_json::to_string_pretty(&summary)? + "\n"))
}

fn experiment(args: ExperimentArgs) -> Result<(), Error> {
    let mut config = load_config(&args.config)?;
    if let Some(p) = args.parallelism {
        config.parallelism = p;
    }
    let formats: Vec<ReportFormat> = if args.format.is_empty() {
        vec![ReportFormat::Csv, ReportFormat::Json, ReportFormat::Gnuplot]
    } else {
        args.format.into_iter().map(Into::into).collect()
    };
    let report = run_experiment(&config)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    for format in formats {
        let path = args.out_dir.join(format!("report.{}", format.extension()));
        emit_report(&report, format, &path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn mse_curve(args: MseCurveArgs) -> Result<(), Error> {
    let series = load_series(&args.common)?;
    let n = series.len();
    let Common {
        statistic,
        budget,
        seed,
        ..
    } = args.common;
    let config = args.hhj.config(n, budget);
    let (center, kind) = match args.kind {
        CurveArg::Empirical => {
            config.validate(n)?;
            let pilot = mbb_variance(
                &series,
                config.pilot_block,
                statistic,
                budget,
                derive_seed(seed, &[tag::PILOT]),
            )?;
            (pilot.value, CurveKind::Empirical)
        }
        CurveArg::Oracle => {
            let s = args.sigma_inf_sq.ok_or_else(|| {
                Error::InvalidParameter("--kind oracle needs --sigma-inf-sq".into())
            })?;
            (s, CurveKind::Oracle)
        }
    };
    let plan = SubsamplePlan {
        m: config.m,
        grid: block_grid(config.m, config.k)?,
        stride: config.stride,
        budget,
        seed,
    };
    let curve = subsample_mse_curve(&series, statistic, &plan, center, kind)?;
    let text = curve_csv(&curve);
    match args.output {
        Some(path) => std::fs::write(&path, text).map_err(|e| Error::io(&path, e)),
        None => write_stdout(&text),
    }
}

fn curve_csv(curve: &MseCurve) -> String {
    let mut out = String::from("b,mse\n");
    for (b, mse) in &curve.entries {
        out.push_str(&format!("{b},{mse}\n"));
    }
    out
}
