use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phygital::{list_experiments, load_config, run_to_dir, Error};

#[derive(Parser)]
#[command(name = "phygital", version, about = "Run phygital laboratory experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the config's `output`, then `out/<run id prefix>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    ListExperiments,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let id = phygital::output::run_id(&phygital::config_hash(&cfg), cfg.seed);
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out").join(&id[..12]));
            let (res, manifest) = run_to_dir(&cfg, &dir)?;
            for w in &res.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}: {} table(s) in {} ({:.3} s), run id {}",
                res.experiment,
                manifest.tables.len(),
                dir.display(),
                res.wall_time.as_secs_f64(),
                res.run_id
            );
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            for w in &cfg.warnings {
                eprintln!("warning: {w}");
            }
            let points = cfg.sweep.as_ref().map_or(String::new(), |s| format!(", sweep over `{}` with {} point(s)", s.param, s.points.len()));
            println!("ok: experiment `{}`{points}", cfg.experiment.name());
        }
        Command::ListExperiments => {
            for (name, summary) in list_experiments() {
                println!("{name:<18} {summary}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors are config errors; help and version are not errors
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
