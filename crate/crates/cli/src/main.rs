use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use tubearc_cli::commands::{cmd_convergence, cmd_density, cmd_sites, cmd_solve, DensityRequest};
use tubearc_cli::config::RunConfig;
use tubearc_cli::error::CliError;
use tubearc_cli::output::{json_bytes, write_atomic};
use tubearc_cli::presets::{preset, PRESETS};

#[derive(Parser)]
#[command(name = "tubearc", version, about = "Bound states of an electron on a bent nanotube")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON run configuration, or a manifest.json from an earlier run.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: straight, table1..table5, fig2..fig6.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Accepted for interface compatibility; nothing here draws random numbers.
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, coefficients and tables.
    Solve,
    /// Probability density of one state.
    Density {
        #[arg(long)]
        state: Option<usize>,
        /// Angle of the longitudinal cut, radians.
        #[arg(long, conflicts_with = "surface")]
        theta: Option<f64>,
        /// Sample the whole surface instead of one cut.
        #[arg(long)]
        surface: bool,
    },
    /// Positions of the delta sites.
    Sites,
    /// Basis and quadrature refinement study.
    Convergence,
}

fn load(global: &Global) -> Result<RunConfig, CliError> {
    match (&global.config, &global.preset) {
        (Some(path), _) => RunConfig::load(path),
        (None, Some(name)) => preset(name).ok_or_else(|| {
            CliError::Config(format!("unknown preset {name:?}; expected one of {}", PRESETS.join(", ")))
        }),
        (None, None) => Err(CliError::Config("pass --config PATH or --preset NAME".into())),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let config = load(&cli.global)?;
    let out = &cli.global.out;
    let written = match &cli.command {
        Command::Solve => cmd_solve(&config, out)?.written,
        Command::Density { state, theta, surface } => {
            cmd_density(&config, DensityRequest { state: *state, theta: *theta, surface: *surface }, out)?
        }
        Command::Sites => cmd_sites(&config, out)?,
        Command::Convergence => cmd_convergence(&config, out)?.1,
    };
    for f in &written.files {
        println!("{}", written.path(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = json_bytes(&e.record());
            eprint!("{}", String::from_utf8_lossy(&record));
            let _ = write_atomic(&cli.global.out.join("error.json"), &record);
            ExitCode::from(e.exit_code())
        }
    }
}
