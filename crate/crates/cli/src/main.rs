mod analyze;
mod error;
mod fluence;
mod manifest;
mod simulate;
mod yields;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::{io_error, CliError, CliResult};

/// Recoil implantation toolkit: ion transport, FIB dose, spectra and yields.
#[derive(Debug, Parser)]
#[command(name = "recoilimp", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Seed overriding the one in the config
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Directory that relative config paths are resolved against
    #[arg(long, global = true, env = "RECOILIMP_CONFIG_ROOT", hide_env_values = true)]
    pub config_root: Option<PathBuf>,
}

impl Global {
    pub fn config_path(&self, path: &Path) -> PathBuf {
        match &self.config_root {
            Some(root) if path.is_relative() => root.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn read_config(&self, path: &Path) -> CliResult<(PathBuf, String)> {
        let path = self.config_path(path);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Ok((path, text))
    }

    pub fn pool(&self) -> CliResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| CliError::internal(format!("thread pool: {e}")))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run ion transport and write depth profiles
    Simulate(SimulateArgs),
    /// Compute areal fluence for FIB recipes
    Fluence(FluenceArgs),
    /// Fit spectra, ODMR traces or hyperspectral cubes
    Analyze(AnalyzeArgs),
    /// Combine a profile, a fluence and an unmix report into yields
    Yield(YieldArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config (JSON)
    pub config: PathBuf,
    /// Sweep the ion energy (keV) or the top film thickness (nm) over a
    /// comma-separated list
    #[arg(long, num_args = 2, value_names = ["KIND", "VALUES"])]
    pub sweep: Option<Vec<String>>,
    /// Number of histories, overriding the config
    #[arg(long)]
    pub ions: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FluenceArgs {
    /// Recipe table (CSV: name,current_nA,dwell_us,passes,overlap,diameter_nm,diameter_sigma_nm)
    pub recipes: PathBuf,
    /// Beam diameter table (JSON) used for rows without a diameter; the
    /// shipped table is used when omitted
    #[arg(long)]
    pub diameters: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Lorentzian lines on a polynomial background
    Peak,
    /// Non-negative model unmixing
    Unmix,
    /// Eight-dip NV ODMR fit
    Odmr,
    /// Per-pixel intensity map of a hyperspectral cube
    Bin,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Spectrum CSVs, or cubes (container file or directory) for bin mode
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Fit window lo,hi in axis units (peak, bin)
    #[arg(long, value_parser = parse_pair)]
    pub window: Option<(f64, f64)>,
    /// Lorentzians in the window (peak, bin)
    #[arg(long, default_value_t = 1)]
    pub peaks: usize,
    /// Background polynomial degree (peak, bin)
    #[arg(long, default_value_t = 2)]
    pub background_degree: usize,
    /// Directory holding nv.csv, siv.csv and irradiation.csv (unmix)
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Model spectrum for one component, NAME=PATH; overrides --models (unmix)
    #[arg(long = "model", value_name = "NAME=PATH")]
    pub model: Vec<String>,
    /// Unmixing band lo,hi in nm (unmix)
    #[arg(long, value_parser = parse_pair, default_value = "625,792")]
    pub band: (f64, f64),
    /// Number of dips (odmr)
    #[arg(long, default_value_t = 8)]
    pub dips: usize,
    /// Template spectrum replacing the Lorentzian (bin)
    #[arg(long)]
    pub template: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct YieldArgs {
    /// Depth profile JSON written by `simulate`
    #[arg(long)]
    pub profile: PathBuf,
    /// Fluence table written by `fluence`
    #[arg(long)]
    pub fluence: PathBuf,
    /// Recipe name in the fluence table
    #[arg(long)]
    pub recipe: String,
    /// Unmix report written by `analyze --mode unmix`
    #[arg(long)]
    pub unmix: PathBuf,
    /// Yield config (JSON)
    #[arg(long)]
    pub config: PathBuf,
    /// Label for the report; defaults to the recipe name
    #[arg(long)]
    pub label: Option<String>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected lo,hi, got `{s}`"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("`{a}` is not a number"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("`{b}` is not a number"))?;
    if !(hi > lo) {
        return Err(format!("need lo < hi, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

pub fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_error(path, e))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => simulate::run(&cli.global, &a),
        Command::Fluence(a) => fluence::run(&cli.global, &a),
        Command::Analyze(a) => analyze::run(&cli.global, &a),
        Command::Yield(a) => yields::run(&cli.global, &a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
