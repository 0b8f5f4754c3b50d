use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ptkho::cli::commands::{cmd_analyze, cmd_evolve, cmd_sweep, read_file};
use ptkho::cli::{parse_config, preset, CliError, ExperimentConfig, FitSpec, PRESET_NAMES};

/// Split-operator simulation of the PT-symmetric kicked harmonic oscillator.
#[derive(Parser)]
#[command(name = "ptkho", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its time series.
    Evolve(RunArgs),
    /// Run one configuration per lambda and summarize G, alpha and late e_pot.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated lambda values.
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
    },
    /// Fit a stored time series or snapshot file.
    Analyze {
        file: PathBuf,
        /// `<kind>:<column>[:key=value...]`; repeatable.
        #[arg(long = "fit", required = true)]
        fits: Vec<String>,
        /// Directory for report.json and overlay tables; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect the built-in parameter sets.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Show { name: String },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in parameter set (see `preset list`).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Strang substeps per harmonic period.
    #[arg(long)]
    substeps: Option<usize>,
    /// Momentum grid size D.
    #[arg(long)]
    grid: Option<usize>,
    /// Number of kicks T.
    #[arg(long)]
    kicks: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut config = match (&self.config, &self.preset) {
            (Some(path), _) => parse_config(&read_file(path)?)?,
            (None, Some(name)) => {
                preset(name)
                    .ok_or_else(|| CliError::Validation(format!("unknown preset '{name}'")))?
                    .config
            }
            (None, None) => return Err(CliError::Validation("one of --config or --preset is required".into())),
        };
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(n) = self.substeps {
            config.physics.substeps = n;
        }
        if let Some(d) = self.grid {
            config.grid_size = d;
        }
        if let Some(t) = self.kicks {
            config.total_kicks = t;
            config.snapshot_times.retain(|&s| s <= t);
        }
        config.validate()?;
        Ok(config)
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Evolve(args) => {
            let config = args.resolve()?;
            for path in cmd_evolve(&config)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Sweep { run, lambda } => {
            let outcome = cmd_sweep(&run.resolve()?, &lambda)?;
            for (lambda, e) in outcome.rows.iter().filter_map(|r| r.as_ref().err()) {
                eprintln!("lambda={lambda}: {e}");
            }
            println!("wrote {}", outcome.summary_path.display());
            match outcome.rows.into_iter().find_map(Result::err) {
                Some((_, e)) => Err(e),
                None => Ok(()),
            }
        }
        Command::Analyze { file, fits, out } => {
            let specs = fits
                .iter()
                .map(|s| s.parse::<FitSpec>().map_err(|e| CliError::Validation(format!("--fit {s}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let outcome = cmd_analyze(&file, &specs, out.as_deref())?;
            match &out {
                Some(dir) => println!("wrote {}", dir.display()),
                None => print!("{}", outcome.report),
            }
            if outcome.failed > 0 {
                return Err(CliError::Fit(format!("{} of {} fits failed", outcome.failed, specs.len())));
            }
            Ok(())
        }
        Command::Preset { action: PresetAction::List } => {
            for name in PRESET_NAMES {
                let p = preset(name).expect("listed presets exist");
                println!("{name:<16} {}", p.description);
            }
            Ok(())
        }
        Command::Preset { action: PresetAction::Show { name } } => {
            let p = preset(&name).ok_or_else(|| CliError::Validation(format!("unknown preset '{name}'")))?;
            print!("# {}\n{}", p.description, p.config.render());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
