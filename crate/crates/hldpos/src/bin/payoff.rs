//! Payoff-analysis CLI: tabulates the honesty margin over a (P1, P2, rho)
//! grid as CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hldpos::payoff::{margin_grid, PayoffError};

#[derive(Parser)]
#[command(name = "payoff", about = "Witness-game payoff analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a CSV table of honesty margins over a (P1, P2, rho) grid.
    Grid {
        /// Comma-separated honest-round profits.
        #[arg(long, default_value = "1,10,100")]
        p1: String,
        /// Comma-separated malicious gains.
        #[arg(long, default_value = "1,10")]
        p2: String,
        /// Comma-separated penalty multipliers.
        #[arg(long, default_value = "1,2,4,8")]
        rho: String,
        /// Witness queue length.
        #[arg(long, default_value_t = 20)]
        kappa: usize,
        /// Offset of the prior offender (0 = none).
        #[arg(long, default_value_t = 0)]
        lambda1: usize,
        /// Offset of the first honest successor.
        #[arg(long, default_value_t = 1)]
        lambda2: usize,
        /// Uniform probability that successors behave normally.
        #[arg(long, default_value_t = 0.0)]
        honesty: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("bad {what} value '{s}': {e}")))
        .collect()
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Grid {
            p1,
            p2,
            rho,
            kappa,
            lambda1,
            lambda2,
            honesty,
            out,
        } => {
            let p1: Vec<f64> = parse_list(&p1, "p1")?;
            let p2: Vec<f64> = parse_list(&p2, "p2")?;
            let rho: Vec<u32> = parse_list(&rho, "rho")?;
            let grid = margin_grid(&p1, &p2, &rho, kappa, lambda1, lambda2, honesty)
                .map_err(|e: PayoffError| e.to_string())?;
            let mut csv = String::from("p1,p2,rho,margin\n");
            for point in grid {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    point.p1, point.p2, point.rho, point.margin
                ));
            }
            match out {
                Some(path) => std::fs::write(&path, csv)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("{}", serde_json::json!({ "error": message }));
            ExitCode::FAILURE
        }
    }
}
