use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wmgrid_cli::commands::{self, CalibrateArgs, SimulateArgs, OUT_ENV};
use wmgrid_cli::{CliError, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "wmgrid", version, about = "Watermark-based attack detection for droop-controlled microgrids")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write signals, windows and a manifest.
    Simulate {
        /// Scenario file, or the name of a bundled scenario.
        #[arg(long)]
        scenario: String,
        /// Output directory (default: <out root>/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Root for default output directories.
        #[arg(long, env = OUT_ENV)]
        out_root: Option<PathBuf>,
        /// Base seed; replaces every seed in the scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Calibrated thresholds file overriding the scenario's thresholds.
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Also write voltage.svg and chi1.svg.
        #[arg(long)]
        plots: bool,
        /// Overwrite an existing run directory.
        #[arg(long)]
        force: bool,
    },
    /// Calibrate detector thresholds from attack-free runs.
    Calibrate {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = OUT_ENV)]
        out_root: Option<PathBuf>,
        /// Number of attack-free runs (at least 20).
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Base seed; run r uses seed + r.
        #[arg(long, default_value_t = 1000)]
        seed: u64,
        #[arg(long)]
        force: bool,
    },
    /// Summarize a run directory written by `simulate`.
    Report {
        /// Run directory.
        dir: PathBuf,
    },
    /// Parse and prepare a scenario without running it.
    Validate {
        #[arg(long)]
        scenario: String,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Simulate {
            scenario,
            out,
            out_root,
            seed,
            thresholds,
            plots,
            force,
        } => {
            let res = commands::simulate(&SimulateArgs {
                scenario,
                out,
                out_root,
                seed,
                thresholds,
                plots,
                force,
            })?;
            Ok(format!("{}\nwrote {}", res.summary, res.dir.display()))
        }
        Command::Calibrate {
            scenario,
            out,
            out_root,
            runs,
            seed,
            force,
        } => {
            let (path, file) = commands::calibrate_cmd(&CalibrateArgs {
                scenario,
                out,
                out_root,
                runs,
                seed,
                force,
            })?;
            let mut s = format!("{} runs, {} windows\n", file.runs, file.windows);
            for d in &file.dgus {
                s.push_str(&format!("DGU {}: chi1 {:.4} chi2 {:.4}\n", d.index, d.chi1, d.chi2));
            }
            s.push_str(&format!("wrote {}", path.display()));
            Ok(s)
        }
        Command::Report { dir } => commands::report(&dir),
        Command::Validate { scenario } => commands::validate(&scenario),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
