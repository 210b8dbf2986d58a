use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vlplan::bench::{add_vehicles, bench};
use vlplan::output::{summarize, write_trace};
use vlplan::scenario::{load, parse_override, LoadedScenario, ScenarioError};
use vlplan::WallClock;
use vlplan_core::simloop::{collision_check, run};

#[derive(Parser)]
#[command(
    name = "vlplan",
    version,
    about = "Intersection trajectory planner in closed loop"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    scenario: PathBuf,
    /// Seed for the stochastic traffic, replacing the scenario's own.
    #[arg(long)]
    seed: Option<u64>,
    /// Parameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write the trace CSV plus a summary JSON next to it.
    Run {
        #[command(flatten)]
        common: Common,
        /// Trace CSV path; defaults to `<scenario name>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time planning cycles with additional random traffic.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Vehicles to add.
        #[arg(long, default_value_t = 10)]
        vehicles: usize,
        #[arg(long, default_value_t = 10)]
        repetitions: usize,
        /// Report JSON path; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a scenario file.
    Check {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Input(String),
    Planner(String),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn prepare(common: &Common) -> Result<LoadedScenario, Failure> {
    let overrides = common
        .set
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(load(&common.scenario, &overrides, common.seed)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes)
        .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { common, out } => {
            let loaded = prepare(&common)?;
            let csv_path = out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", loaded.name)));
            let summary_path = csv_path.with_extension("summary.json");
            let trace = run(&loaded.scenario, &loaded.config, &WallClock::new())
                .map_err(|e| Failure::Planner(e.to_string()))?;
            let collisions =
                collision_check(&trace, &loaded.scenario.ctx, loaded.scenario.ego.route);
            let mut csv = Vec::new();
            write_trace(&mut csv, &trace, &loaded.vehicle_ids())
                .map_err(|e| Failure::Planner(e.to_string()))?;
            let summary = summarize(&loaded.name, loaded.config.seed, &trace, collisions.len());
            let json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
            write_file(&csv_path, &csv)?;
            write_file(&summary_path, &json)?;
            println!(
                "{}: {} rows, min speed {:.2} m/s, final option {}, {} collisions",
                loaded.name,
                trace.len(),
                summary.min_speed,
                summary.final_option,
                summary.collisions
            );
        }
        Command::Bench {
            common,
            vehicles,
            repetitions,
            out,
        } => {
            let mut loaded = prepare(&common)?;
            let seed = loaded.config.seed;
            add_vehicles(&mut loaded, vehicles, seed);
            let report =
                bench(&loaded, repetitions.max(1)).map_err(|e| Failure::Planner(e.to_string()))?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            match out {
                Some(path) => write_file(&path, json.as_bytes())?,
                None => println!("{json}"),
            }
        }
        Command::Check { common } => {
            let loaded = prepare(&common)?;
            println!(
                "{}: {} routes, {} vehicles, {} s",
                loaded.name,
                loaded.route_names.len(),
                loaded.scenario.agents.len(),
                loaded.config.duration
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Planner(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
