//! `oceansar` — simulate ocean SAR scenes with ship wakes, corrupt them
//! with multiplicative speckle, despeckle them with proximal solvers, and
//! score the results.
//!
//! Exit codes: 0 on success, 1 for configuration or input validation
//! failures, 2 for numerical or runtime failures.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use oceansar::commands::{self, DespeckleRequest};
use oceansar::config::{ExperimentConfig, Overrides, ReportFormat, Scale};
use oceansar::{CliResult, EXIT_VALIDATION};
use oceansar_core::prox::{ProxParams, RegulariserKind, RegulariserSpec, Strength};
use oceansar_core::wavelet::WaveletKind;

#[derive(Parser)]
#[command(
    name = "oceansar",
    version,
    about = "Ocean SAR wake simulation and despeckling benchmark",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render speckle-free SAR scenes (one per configured seed)
    Simulate(ExperimentArgs),
    /// Corrupt a clean raster with L-look speckle, one file per L
    Speckle(SpeckleArgs),
    /// Despeckle a noisy raster with one regulariser
    Despeckle(DespeckleArgs),
    /// Score estimate rasters against a clean reference
    Evaluate(EvaluateArgs),
    /// Full benchmark: simulate → speckle → despeckle → evaluate
    Pipeline(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (JSON); all fields default when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run a single seed instead of the configured list
    #[arg(long)]
    seed: Option<u64>,
    /// Look counts, comma separated (overrides the config)
    #[arg(long, value_delimiter = ',')]
    looks: Option<Vec<u32>>,
    /// Grid preset; also discards an explicit config grid
    #[arg(long, value_parser = parse_scale)]
    scale: Option<Scale>,
}

#[derive(Args)]
struct SpeckleArgs {
    /// Clean input raster
    #[arg(long)]
    input: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Look counts, comma separated
    #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
    looks: Vec<u32>,
    /// Speckle seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct DespeckleArgs {
    /// Noisy input raster
    #[arg(long)]
    input: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Regulariser: cauchy, l1 or tv
    #[arg(long, value_parser = parse_reg)]
    reg: RegulariserKind,
    /// Fixed Cauchy scale γ (default: data-driven per subband)
    #[arg(long)]
    gamma: Option<f64>,
    /// Forward–backward step ω
    #[arg(long)]
    omega: Option<f64>,
    /// Fixed L1/TV weight λ (default: data-driven)
    #[arg(long)]
    lambda: Option<f64>,
    /// Decomposition depth
    #[arg(long, default_value_t = 3)]
    levels: usize,
    /// Wavelet: haar, db2 or db4
    #[arg(long, default_value = "db4", value_parser = parse_wavelet)]
    wavelet: WaveletKind,
    /// Look count of the input, for the log-domain bias correction
    /// (default: read from the input's sidecar)
    #[arg(long)]
    looks: Option<u32>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Speckle-free reference raster
    #[arg(long)]
    reference: PathBuf,
    /// Estimate rasters to score
    #[arg(required = true)]
    estimates: Vec<PathBuf>,
    /// Directory for report.txt / report.csv (printed to stdout either way)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_scale(s: &str) -> CliResult<Scale> {
    s.parse()
}

fn parse_reg(s: &str) -> Result<RegulariserKind, String> {
    s.parse().map_err(|e: oceansar_core::Error| e.to_string())
}

fn parse_wavelet(s: &str) -> Result<WaveletKind, String> {
    s.parse().map_err(|e: oceansar_core::Error| e.to_string())
}

fn load_experiment(args: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: args.seed,
        looks: args.looks.clone(),
        out: args.out.clone(),
        scale: args.scale,
    });
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = load_experiment(&args)?;
            let out = commands::cmd_simulate(&cfg)?;
            println!(
                "simulated {} scene(s) into {} ({} files)",
                out.images.len(),
                out.resolved.config.output.dir.display(),
                out.wrote.len()
            );
        }
        Command::Speckle(args) => {
            let out = commands::cmd_speckle(&args.input, &args.looks, args.seed, &args.out, true)?;
            for path in &out.wrote {
                println!("{}", path.display());
            }
        }
        Command::Despeckle(args) => {
            let mut spec = RegulariserSpec::new(args.reg);
            let mut params = ProxParams::default();
            if let Some(omega) = args.omega {
                params.omega = omega;
            }
            spec.params = params;
            let fixed = match args.reg {
                RegulariserKind::Cauchy => args.gamma,
                RegulariserKind::L1 | RegulariserKind::Tv => args.lambda,
            };
            if let Some(value) = fixed {
                spec.strength = Strength::Fixed { value };
            }
            let request = DespeckleRequest {
                spec,
                wavelet: args.wavelet,
                levels: args.levels,
                looks: args.looks,
            };
            let out = commands::cmd_despeckle(&args.input, &request, &args.out, true)?;
            print!("{}", out.report);
            for path in &out.wrote {
                println!("{}", path.display());
            }
        }
        Command::Evaluate(args) => {
            let report = commands::cmd_evaluate(
                &args.reference,
                &args.estimates,
                args.out.as_deref(),
                ReportFormat::Both,
            )?;
            print!("{}", report.aligned_table());
        }
        Command::Pipeline(args) => {
            let cfg = load_experiment(&args)?;
            let out = commands::cmd_pipeline(&cfg)?;
            print!("{}", out.report.aligned_table());
            println!(
                "\nwrote {} files to {}",
                out.wrote.len(),
                out.resolved.config.output.dir.display()
            );
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version arrive here too; only genuine usage errors
            // map to the validation exit code
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
