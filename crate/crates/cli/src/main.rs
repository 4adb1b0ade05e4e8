use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use polaremit_cli::config::{self, ConfigError, Mode, TruncationOrder};
use polaremit_cli::{parse_config, run, RunConfig, RunError};

/// Fluorescence spectra of a driven polar emitter in a squeezed vacuum.
#[derive(Parser)]
#[command(name = "polaremit", version)]
struct Cli {
    /// spectrum, sweep, validate or steady
    mode: Mode,
    /// TOML run configuration
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Bundled configuration (fig1, fig2, fig3, fig4r02, fig4r05, fig4r08, fig4r10, desk_validate, mollow_validate)
    #[arg(long)]
    preset: Option<String>,
    /// Output directory, overriding the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Harmonic truncation: `auto` or a fixed order
    #[arg(long)]
    truncation: Option<TruncationOrder>,
    /// Worker threads
    #[arg(long)]
    threads: Option<usize>,
    /// Use the window ω_f ± 2Ω_R instead of the configured one
    #[arg(long)]
    full_window: bool,
}

fn load(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.display().to_string(), message: e.to_string() })?;
            parse_config(&text)?
        }
        (None, Some(name)) => config::preset(name)?,
        (None, None) => unreachable!("clap requires one of --config or --preset"),
    };
    cfg.mode = cli.mode;
    if cfg.mode == Mode::Sweep && cfg.sweep.is_none() {
        return Err(ConfigError::InvalidValue("sweep mode needs a [sweep] table".into()));
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(order) = cli.truncation {
        cfg.truncation.order = order;
    }
    if cli.full_window {
        cfg.use_full_window()?;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    let cfg = load(cli)?;
    let model = polaremit::validate(cfg.model)?;
    if model.rwa_warning() {
        eprintln!("warning: omega_f is below {} x gamma; the rotating-wave treatment may be inaccurate", polaremit::model::RWA_RATIO);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(ConfigError::InvalidValue("--threads must be at least 1".into()).into());
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| RunError::Io { path: PathBuf::new(), message: format!("thread pool: {e}") })?;
    let artifacts = pool.install(|| run(&cfg))?;
    for f in artifacts.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
