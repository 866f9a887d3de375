use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pouw_core::chain::{read_chain, replay_chain, Address, ChainExport};
use pouw_core::netsim::{emit_metrics, run_scenario_with, RunOptions, ScenarioConfig};

/// Proof-of-useful-work blockchain simulator.
#[derive(Parser)]
#[command(name = "pouw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write metrics.csv, summary.json and chain.jsonl.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the seed in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Pipeline worker threads. Output does not depend on this.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Replay a chain export from genesis and report the first violation.
    VerifyChain {
        #[arg(long)]
        chain: PathBuf,
    },
    /// Print an address's balance after replaying a chain export.
    ReplayBalances {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        address: Address,
    },
    /// Parse and validate a scenario file without running it.
    ScenarioCheck {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<(), String> {
    match command {
        Command::Run { scenario, seed, out, threads } => {
            let mut cfg = ScenarioConfig::load(&scenario).map_err(|e| e.to_string())?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let outcome = run_scenario_with(&cfg, RunOptions { threads: threads.max(1) })
                .map_err(|e| e.to_string())?;
            emit_metrics(&out, &outcome.metrics, &outcome.summary, &outcome.chain, &outcome.keys)
                .map_err(|e| format!("{}: {e}", out.display()))?;
            let s = &outcome.summary;
            println!(
                "{}: {} blocks, supply {}, fabrication accepted in {}/{} rounds, tip {}",
                s.name, s.blocks, s.total_supply, s.fabrication_accepted_rounds, s.rounds, s.tip_hash
            );
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::VerifyChain { chain } => {
            let export = load_chain(&chain)?;
            let state = replay_chain(&export.blocks, export.rules, &export.keys)
                .map_err(|e| format!("height {}: {}: {}", e.height, e.cause.rule(), e.cause))?;
            println!(
                "OK: {} blocks, supply {}, tip {}",
                state.height(),
                state.total_supply,
                state.tip_hash()
            );
            Ok(())
        }
        Command::ReplayBalances { chain, address } => {
            let export = load_chain(&chain)?;
            let state = replay_chain(&export.blocks, export.rules, &export.keys)
                .map_err(|e| format!("height {}: {}: {}", e.height, e.cause.rule(), e.cause))?;
            println!("{}", state.balance(&address));
            Ok(())
        }
        Command::ScenarioCheck { scenario } => {
            let cfg = ScenarioConfig::load(&scenario).map_err(|e| e.to_string())?;
            println!(
                "OK: {} ({} rounds, {} miners, strategy {})",
                cfg.name,
                cfg.rounds,
                cfg.roster().len(),
                cfg.strategy
            );
            Ok(())
        }
    }
}

fn load_chain(path: &Path) -> Result<ChainExport, String> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    read_chain(BufReader::new(file)).map_err(|e| format!("{}: {e}", path.display()))
}
