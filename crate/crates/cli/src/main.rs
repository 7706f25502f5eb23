mod commands;
mod config;

use anyhow::{anyhow, Result};
use clap::{CommandFactory, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use config::{parse_float_list, Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "sphereframes",
    version,
    about = "Wavelet frames on the n-sphere: spectra, scale and rotation grids, frame-bound certification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// INI configuration file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Master seed for the random test fields.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Profile preset, e.g. abel-poisson, gauss-weierstrass-zonal, poisson-2.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    /// Sphere dimension.
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Band limit L.
    #[arg(long, global = true, value_name = "L")]
    band_limit: Option<usize>,

    /// Rotation caps δ_n,…,δ_1 (comma-separated), or one value for all levels. Accepts `pi/4` style.
    #[arg(long, global = true, value_delimiter = ',', value_name = "DELTA")]
    delta: Option<Vec<String>>,

    /// Scale ratio X.
    #[arg(long, global = true)]
    ratio: Option<f64>,

    /// Number of scale steps J.
    #[arg(long, global = true, value_name = "J")]
    scales: Option<usize>,

    /// Number of random trials.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Verdict tolerance τ.
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Times the rotation caps may be halved while certification fails.
    #[arg(long, global = true, value_name = "K")]
    max_refinements: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// β(l) table and frame bounds of the continuous family.
    Spectrum,
    /// Discrete scale grid and its deviation ε̂.
    ScaleGrid,
    /// Rotation grid of SO(n+1).
    RotGrid,
    /// Fully discrete transform of a random band-limited field.
    Transform {
        /// Evaluate every coefficient by direct quadrature.
        #[arg(long)]
        naive: bool,
    },
    /// Random-trial frame-bound certification (exit 2 on fail).
    Certify,
}

impl Cli {
    fn overrides(&self) -> Result<Overrides> {
        let deltas = match &self.delta {
            Some(v) => Some(parse_float_list(&v.join(" "))?),
            None => None,
        };
        Ok(Overrides {
            out: self.out.clone(),
            seed: self.seed,
            preset: self.preset.clone(),
            n: self.n,
            band_limit: self.band_limit,
            deltas,
            ratio: self.ratio,
            scales: self.scales,
            trials: self.trials,
            tolerance: self.tolerance,
            max_refinements: self.max_refinements,
        })
    }
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    let Some(t) = threads else { return Ok(()) };
    if t == 0 {
        return Err(anyhow!("--threads must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(t)
        .build_global()
        .map_err(|e| anyhow!("cannot configure the thread pool: {e}"))?;
    #[cfg(not(feature = "parallel"))]
    log::warn!("built without the parallel feature; --threads {t} is ignored");
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    init_threads(cli.threads)?;
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&cli.overrides()?)?;
    cfg.validate()?;
    match cli.command {
        Command::Spectrum => commands::spectrum(&cfg).map(|_| true),
        Command::ScaleGrid => commands::scale_grid(&cfg).map(|_| true),
        Command::RotGrid => commands::rot_grid(&cfg).map(|_| true),
        Command::Transform { naive } => commands::transform(&cfg, naive).map(|_| true),
        Command::Certify => commands::certify(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPHEREFRAMES_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            if cli.config.as_ref().is_some_and(|p| !p.exists()) {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            ExitCode::from(1)
        }
    }
}
