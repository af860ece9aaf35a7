use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shufflesgd_harness::acceptance::{acceptance_suite, SuiteOptions};
use shufflesgd_harness::bounds::bounds_command;
use shufflesgd_harness::{compare_strategies, run_experiment, ExperimentConfig, HarnessError, OutputFiles};

#[derive(Parser)]
#[command(name = "shufflesgd", version, about = "Shuffling-type SGD experiments and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full strategy x schedule x seed grid.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory; overrides the config.
        #[arg(long, env = "SHUFFLESGD_OUT")]
        out: Option<PathBuf>,
    },
    /// One group per strategy from a shared start; IG runs once.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, env = "SHUFFLESGD_OUT")]
        out: Option<PathBuf>,
    },
    /// Run the acceptance criteria and print a table.
    Accept {
        /// Directory holding optional datasets (w8a, w8a.t).
        #[arg(long, env = "SHUFFLESGD_DATA")]
        data_dir: Option<PathBuf>,
        /// Criterion numbers to run; all by default.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u32>>,
    },
    /// Print a bound curve as CSV.
    Bounds {
        #[arg(long)]
        theorem: String,
        #[arg(long)]
        constants: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
    },
}

fn report(files: OutputFiles) {
    for p in [files.runs, files.aggregate, files.manifest] {
        println!("{}", p.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<i32, HarnessError> = match cli.command {
        Command::Run { config, workers, out } => {
            ExperimentConfig::load(&config).and_then(|c| run_experiment(&c, out.as_deref(), workers)).map(|f| {
                report(f);
                0
            })
        }
        Command::Compare { config, workers, out } => {
            ExperimentConfig::load(&config).and_then(|c| compare_strategies(&c, out.as_deref(), workers)).map(|f| {
                report(f);
                0
            })
        }
        Command::Accept { data_dir, only } => {
            let r = acceptance_suite(&SuiteOptions { data_dir, only, tolerance_override: None });
            println!("{r}");
            Ok(r.exit_code())
        }
        Command::Bounds { theorem, constants, horizon } => bounds_command(&theorem, &constants, horizon).map(|csv| {
            print!("{csv}");
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
