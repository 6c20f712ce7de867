use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kinproj::experiments::{cmd_converge, cmd_run, cmd_spectrum, cmd_stability, cmd_suolson};
use kinproj::{parse_config, CliError, ConfigError, RunConfig};

#[derive(Parser)]
#[command(
    name = "kinproj",
    version,
    about = "Projective integration of kinetic equations in the diffusion limit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured modes and write snapshots and run logs
    Run(Common),
    /// Eigenvalues of the inner amplification symbol for every mode
    Spectrum(Common),
    /// Projective stability for K = 1..k_max and the advised K
    Stability(Common),
    /// Errors against the fine-step reference over an eps or nu sweep
    Converge(Common),
    /// Su-Olson runs with errors and the limited-flux margin
    Suolson(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides output_dir from the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; overrides workers from the config
    #[arg(long)]
    workers: Option<usize>,
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&common.config)?;
    let mut cfg = parse_config(&text).map_err(|e| ConfigError {
        message: format!("{}: {}", common.config.display(), e.message),
        ..e
    })?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(w) = common.workers {
        cfg.workers = Some(w);
    }
    if let Ok(v) = std::env::var("KINPROJ_COST_CEILING") {
        cfg.cost_ceiling = v
            .trim()
            .parse()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| ConfigError {
                line: None,
                message: format!("KINPROJ_COST_CEILING must be a positive integer, got '{v}'"),
            })?;
    }
    Ok(cfg)
}

type Driver = fn(&RunConfig, &Path) -> Result<Vec<String>, CliError>;

fn execute(cli: Cli) -> Result<Vec<String>, CliError> {
    let (common, cmd): (&Common, Driver) = match &cli.command {
        Command::Run(c) => (c, cmd_run),
        Command::Spectrum(c) => (c, cmd_spectrum),
        Command::Stability(c) => (c, cmd_stability),
        Command::Converge(c) => (c, cmd_converge),
        Command::Suolson(c) => (c, cmd_suolson),
    };
    let cfg = load(common)?;
    if let Some(w) = cfg.workers {
        if w == 0 {
            return Err(ConfigError {
                line: None,
                message: "workers must be at least 1".into(),
            }
            .into());
        }
        // Fails only if the pool was already built, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global();
    }
    cmd(&cfg, &cfg.output_dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
