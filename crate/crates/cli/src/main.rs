use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ltssl_cli::summary::{rank_rows, read_summary, summarize, write_ranks};
use ltssl_cli::{export_reliability, parse_spec, run_experiment, CliError, RunOptions};
use ltssl_core::eval::{write_bins_csv, DEFAULT_BINS};

#[derive(Parser)]
#[command(
    name = "ltssl",
    version,
    about = "Long-tailed semi-supervised learning lab"
)]
struct Cli {
    /// Root for experiment output directories.
    #[arg(long, global = true, env = "LTSSL_OUTPUT_ROOT", default_value = ".")]
    output_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every setting × variant × seed of an experiment spec.
    Run {
        spec: PathBuf,
        /// Concurrent runs (0 = one per core).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Comma-separated seeds replacing the spec's list.
        #[arg(long, value_delimiter = ',')]
        seed_override: Option<Vec<u64>>,
        /// Record KL of the prior estimate to the hidden unlabeled prior.
        #[arg(long)]
        diagnostics: bool,
    },
    /// Rebuild summary.csv from the run files of an experiment directory.
    Summarize { dir: PathBuf },
    /// Print reliability bins for `<experiment dir>/<run name>`.
    ExportReliability {
        run_id: String,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print Friedman ranks computed from a summary file.
    Rank { summary: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            spec,
            jobs,
            seed_override,
            diagnostics,
        } => {
            let spec = parse_spec(&spec)?;
            let opts = RunOptions {
                output_root: cli.output_root,
                jobs,
                seed_override,
                diagnostics,
            };
            let outcome = run_experiment(&spec, &opts)?;
            println!(
                "{} runs written to {}",
                outcome.run_files.len(),
                outcome.dir.display()
            );
            println!("summary: {}", outcome.summary.display());
        }
        Command::Summarize { dir } => {
            println!("{}", summarize(&dir)?.display());
        }
        Command::ExportReliability { run_id, bins, out } => {
            let bins = export_reliability(&cli.output_root, &run_id, bins)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path)
                        .map_err(|source| CliError::Io { path, source })?;
                    write_bins_csv(&bins, file)?;
                }
                None => write_bins_csv(&bins, std::io::stdout().lock())?,
            }
        }
        Command::Rank { summary } => {
            let rows = read_summary(&summary)?;
            write_ranks(&rank_rows(&rows)?, std::io::stdout().lock())?;
        }
    }
    Ok(())
}
