mod exec;
mod render;
mod scenario;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ledgerlab::analysis::{render_tables_text, tables_report, trace_lineage_with_ids, verify_lineage, AnalysisError};
use ledgerlab::snapshot::{to_sorted_json, LogFile, Snapshot};
use ledgerlab::utxo::UtxoId;
use ledgerlab::CryptoMode;

use crate::scenario::Scenario;

#[derive(Parser)]
#[command(name = "ledgerlab", version, about = "Account, token and UTXO record systems side by side")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CryptoArg {
    Toy,
    Real,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its reports.
    Run {
        scenario: PathBuf,
        #[arg(long, env = "LEDGERLAB_SEED")]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum)]
        crypto: Option<CryptoArg>,
    },
    /// Render a state snapshot.
    Inspect {
        snapshot: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Follow an output back to its coinbase, verifying each step.
    Trace { log: PathBuf, utxo_id: String },
    /// Emit the property comparison tables.
    Tables {
        #[arg(long, env = "LEDGERLAB_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

/// Exit status plus diagnostic.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl ToString) -> Self {
        Failure { code: 2, message: message.to_string() }
    }

    fn execution(message: impl ToString) -> Self {
        Failure { code: 3, message: message.to_string() }
    }

    fn io(message: impl ToString) -> Self {
        Failure { code: 1, message: message.to_string() }
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { scenario, seed, out, crypto } => {
            let parsed = Scenario::parse(&read(&scenario)?).map_err(Failure::invalid)?;
            let seed = seed.or(parsed.seed).unwrap_or(0);
            let crypto = match crypto {
                Some(CryptoArg::Toy) => CryptoMode::Toy,
                Some(CryptoArg::Real) => CryptoMode::Real,
                None => parsed.crypto,
            };
            let files = exec::run_scenario(&parsed, seed, crypto).map_err(Failure::execution)?;
            fs::create_dir_all(&out).map_err(|e| Failure::io(format!("cannot create {}: {e}", out.display())))?;
            for (name, contents) in files {
                let path = out.join(name);
                fs::write(&path, contents).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))?;
                println!("{}", path.display());
            }
        }
        Command::Inspect { snapshot, format } => {
            let snap = Snapshot::from_json(&read(&snapshot)?).map_err(Failure::invalid)?;
            match format {
                Format::Table => print!("{}", render::snapshot_table(&snap)),
                Format::Json => print!("{}", snap.to_json()),
            }
        }
        Command::Trace { log, utxo_id } => {
            let log = LogFile::from_json(&read(&log)?).map_err(Failure::invalid)?;
            let target: UtxoId = utxo_id.parse().map_err(|e| Failure::invalid(format!("bad utxo id: {e}")))?;
            let ids = log.recorded_ids();
            let txs = log.transactions();
            let chain = trace_lineage_with_ids(&ids, &txs, target).map_err(|e| match e {
                AnalysisError::UnknownUtxo(_) => Failure::invalid(e),
                _ => Failure::execution(e),
            })?;
            let checks = verify_lineage(&ids, &txs, &chain, &log.issuer);
            print!("{}", render::trace_text(&chain, &checks));
            if let Some(bad) = checks.iter().find(|c| !c.verified) {
                return Err(Failure::execution(format!(
                    "verification failed at step {}: {}",
                    bad.step,
                    bad.failure.as_deref().unwrap_or("unknown")
                )));
            }
        }
        Command::Tables { seed, format } => {
            let report = tables_report(seed);
            match format {
                Format::Table => print!("{}", render_tables_text(&report)),
                Format::Json => print!("{}", to_sorted_json(&report)),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ledgerlab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
