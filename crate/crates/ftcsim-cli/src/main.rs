use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ftcsim_cli::{
    run_check_gains, run_compare, run_counterexample, run_simulate, run_sweep, SweepParam,
};
use ftcsim_core::gains::QConvention;

#[derive(Parser)]
#[command(
    name = "ftcsim",
    about = "Finite-time consensus of multi-agent networks under switching directed graphs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum QConventionArg {
    /// Tight eigenvalue constant of the chain inequality.
    Tight,
    /// The reported q_3 = 0.6910 convention (four agents only).
    Paper,
}

impl From<QConventionArg> for QConvention {
    fn from(value: QConventionArg) -> Self {
        match value {
            QConventionArg::Tight => QConvention::Tight,
            QConventionArg::Paper => QConvention::Reported,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trace.csv, report.txt, certificate.txt.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "tight")]
        q_convention: QConventionArg,
        /// Overrides the config seed for sampled audits.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the gain certificate; exit 0 when satisfied, 2 when not.
    CheckGains {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "tight")]
        q_convention: QConventionArg,
    },
    /// Run the primary and comparison systems, audit dominance, and emit the
    /// gap-energy curve with its analytic bound; exit 2 on violations.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// One simulation per value of a parameter, run concurrently.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// beta | k | alpha_star | dt
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit the joint-connectivity counterexample scenario and its run.
    Counterexample {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.8)]
        alpha_star: f64,
        #[arg(long, default_value_t = 4)]
        cycles: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, ftcsim_cli::CliError> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            q_convention,
            seed,
        } => {
            let output = run_simulate(&config, &out, seed)?;
            println!("{}", output.report_text);
            println!("{}", output.certificate);
            match output.certificate.verdict(q_convention.into()) {
                Ok(Some(v)) => println!(
                    "gain condition satisfied ({:?}): {v}",
                    q_convention_name(q_convention)
                ),
                Ok(None) => println!("gain condition: not applicable"),
                Err(e) => println!("gain condition: {e}"),
            }
            println!("trace written to {}", output.trace_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckGains {
            config,
            q_convention,
        } => {
            let certificate = run_check_gains(&config)?;
            print!("{certificate}");
            match certificate.verdict(q_convention.into())? {
                Some(true) => Ok(ExitCode::SUCCESS),
                Some(false) => Ok(ExitCode::from(2)),
                None => {
                    println!("not applicable");
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
        Command::Compare { config, out } => {
            let output = run_compare(&config, &out)?;
            println!("{}", output.report_text);
            if output.dominance.holds() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let param: SweepParam = param.parse()?;
            let rows = run_sweep(&config, param, &values, &out)?;
            println!("value,settling_time,snap_time,final_G");
            for row in rows {
                println!(
                    "{},{},{},{:.6e}",
                    row.value,
                    row.settling_time
                        .map(|t| format!("{t:.6}"))
                        .unwrap_or_else(|| "none".into()),
                    row.snap_time
                        .map(|t| format!("{t:.6}"))
                        .unwrap_or_else(|| "none".into()),
                    row.final_g
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Counterexample {
            out,
            epsilon,
            alpha_star,
            cycles,
        } => {
            let output = run_counterexample(&out, epsilon, alpha_star, cycles)?;
            println!("{}", output.report_text);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn q_convention_name(q: QConventionArg) -> &'static str {
    match q {
        QConventionArg::Tight => "tight",
        QConventionArg::Paper => "paper",
    }
}
