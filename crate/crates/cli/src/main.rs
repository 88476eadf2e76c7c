use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use singlq_cli::{
    cmd_oracle, cmd_reduce, parse_deltas, render_csv, render_json, run_experiment, tolerance,
    CliResult, ExperimentArgs,
};

#[derive(Parser)]
#[command(
    name = "singlq",
    version,
    about = "Feedback reduction of singular LQ problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a problem file and print the report as JSON.
    Reduce {
        path: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Compare the feedback reduction with the plain recursive algorithm.
    Oracle {
        path: PathBuf,
        /// Reduce this file instead and compare it with the oracle of PATH.
        #[arg(long)]
        against: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Perturbation sweep over one of the benchmark families.
    Experiment {
        #[arg(long)]
        family: u8,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
        /// Comma-separated perturbation sizes.
        #[arg(long)]
        deltas: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
    },
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Reduce { path, tol } => Ok(cmd_reduce(&path, tolerance(tol)?)?.render()),
        Command::Oracle { path, against, tol } => {
            let rep = cmd_oracle(&path, against.as_deref(), tolerance(tol)?)?;
            let angle = match rep.angle.as_f64() {
                Some(a) => format!("{a:e}"),
                None => singlq_cli::NOT_COMPUTABLE.to_string(),
            };
            Ok(format!(
                "index_k reduce={} oracle={}\nangle={angle}\n{}",
                rep.index_k_reduce,
                rep.index_k_oracle,
                serde_json::to_string_pretty(&rep).expect("finite entries")
            ))
        }
        Command::Experiment {
            family,
            n,
            r,
            l,
            deltas,
            seed,
            tol,
            format,
        } => {
            let args = ExperimentArgs {
                family,
                n,
                r,
                l,
                deltas: parse_deltas(&deltas)?,
                seed,
                tol: tolerance(tol)?,
            };
            let records = run_experiment(&args)?;
            Ok(match format {
                OutFormat::Csv => render_csv(&args, &records),
                OutFormat::Json => render_json(&args, &records),
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
