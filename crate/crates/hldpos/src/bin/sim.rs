//! Scenario runner CLI: single runs, the cooldown sweep, and the
//! algorithm/node-count/duration matrix. Emits CSV and JSON under the
//! output directory; exits nonzero with a machine-readable error line on
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hldpos::sim::{
    csv_string, export_csv, export_json, run_scenario, sweep_matrix, sweep_psi, Algorithm,
    MetricsRecord, SimConfig, SimError,
};

#[derive(Parser)]
#[command(name = "sim", about = "Deterministic consensus scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOverrides {
    /// Scenario config file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Consensus algorithm: pow | dpos | hldpos.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    minutes: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed re-entry cooldown in rounds.
    #[arg(long)]
    psi: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario and export CSV + JSON.
    Run(CommonOverrides),
    /// Run one scenario per cooldown value (common seed).
    SweepPsi {
        #[command(flatten)]
        common: CommonOverrides,
        /// Comma-separated cooldown values.
        #[arg(long, default_value = "0,1,2,3,4,5")]
        psi_values: String,
    },
    /// Cross-product sweep over algorithms, node counts, and durations.
    SweepMatrix {
        #[command(flatten)]
        common: CommonOverrides,
        #[arg(long, default_value = "pow,dpos,hldpos")]
        algos: String,
        #[arg(long, default_value = "500,1000,2000,3000,4000,5000")]
        node_counts: String,
        #[arg(long, default_value = "10,20,30,40,50,60")]
        minutes_list: String,
    },
}

fn load_config(common: &CommonOverrides) -> Result<SimConfig, SimError> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            SimConfig::from_toml_str(&text)?
        }
        None => SimConfig::default(),
    };
    if let Some(algo) = &common.algo {
        config.algo = algo.parse().map_err(SimError::Config)?;
    }
    if let Some(nodes) = common.nodes {
        config.nodes = nodes;
    }
    if let Some(minutes) = common.minutes {
        config.minutes = minutes;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(psi) = common.psi {
        config.psi = Some(psi);
    }
    config.validate()?;
    Ok(config)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, SimError>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| SimError::Config(format!("bad {what} value '{s}': {e}")))
        })
        .collect()
}

fn ensure_out_dir(dir: &Path) -> Result<(), SimError> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::Io {
        path: dir.display().to_string(),
        source: e,
    })
}

fn write_outputs(records: &[MetricsRecord], dir: &Path, stem: &str) -> Result<(), SimError> {
    ensure_out_dir(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    export_csv(records, &csv_path)?;
    for record in records {
        export_json(record, &dir.join(format!("{}.json", record.scenario_id)))?;
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Run(common) => {
            let config = load_config(&common)?;
            let record = run_scenario(&config)?;
            print!("{}", csv_string(std::slice::from_ref(&record)));
            write_outputs(std::slice::from_ref(&record), &common.out, &record.scenario_id.clone())
        }
        Command::SweepPsi { common, psi_values } => {
            let config = load_config(&common)?;
            let values: Vec<u64> = parse_list(&psi_values, "psi")?;
            let records = sweep_psi(&config, &values)?;
            print!("{}", csv_string(&records));
            write_outputs(&records, &common.out, "sweep_psi")
        }
        Command::SweepMatrix {
            common,
            algos,
            node_counts,
            minutes_list,
        } => {
            let config = load_config(&common)?;
            let algos: Vec<Algorithm> = algos
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(SimError::Config))
                .collect::<Result<_, _>>()?;
            let nodes: Vec<usize> = parse_list(&node_counts, "node count")?;
            let minutes: Vec<f64> = parse_list(&minutes_list, "minutes")?;
            let records = sweep_matrix(&config, &algos, &nodes, &minutes, config.seed)?;
            print!("{}", csv_string(&records));
            write_outputs(&records, &common.out, "sweep_matrix")
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": err.to_string() })
            );
            ExitCode::FAILURE
        }
    }
}
