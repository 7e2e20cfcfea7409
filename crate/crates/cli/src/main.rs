use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tiltpump_cli::config::ConfigFile;
use tiltpump_cli::{describe, execute, find, registry, CliError, Options};

#[derive(Parser)]
#[command(name = "tiltpump", version, about = "Two-boson topological pumping experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run {
        experiment: String,
        /// JSON config file (same as --config).
        config_path: Option<PathBuf>,
        #[arg(long, conflicts_with = "config_path")]
        config: Option<PathBuf>,
        /// Output directory; defaults to the config's `out` or `out/<experiment>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, env = "TILTPUMP_THREADS", default_value_t = 0)]
        threads: usize,
        /// Treat warnings as failures.
        #[arg(long)]
        strict: bool,
    },
    /// List the registered experiments.
    List,
    /// Show the defaults and checks of one experiment.
    Describe { experiment: String },
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::List => {
            for e in registry() {
                println!("{:<16} {:<8} {}", e.id, e.runtime, e.summary);
            }
            Ok(true)
        }
        Command::Describe { experiment } => {
            print!("{}", describe(find(&experiment)?));
            Ok(true)
        }
        Command::Run { experiment, config_path, config, out, threads, strict } => {
            let e = find(&experiment)?;
            let cfg = match config_path.or(config) {
                Some(p) => ConfigFile::load(&p)?,
                None => ConfigFile::default(),
            };
            let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out").join(e.id));
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|err| CliError::Config(err.to_string()))?;
            let threads = rayon::current_num_threads();
            let m = execute(e, &cfg, &Options { out: &out, strict, threads })?;
            for c in &m.checks {
                println!(
                    "{} {:<60} {:>14.6e}  {:?}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.expect
                );
            }
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            for err in &m.errors {
                eprintln!("error: {err}");
            }
            if let Some(f) = &m.fatal {
                eprintln!("fatal: {f}");
            }
            println!(
                "{}: {} in {:.1} s, artifacts in {}",
                e.id,
                if m.passed { "passed" } else { "failed" },
                m.wall_seconds,
                out.display()
            );
            Ok(m.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
