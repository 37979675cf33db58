//! Reports built on top of the kernels: lineage tracing, state size, the
//! pseudonym growth experiment, fraud scenarios, traceability witnesses and
//! the comparison tables.

mod fraud;
mod growth;
mod lineage;
mod metrics;
mod tables;
mod traceability;

pub use fraud::{run_fraud_scenario, FraudKernel, FraudOutcome, FraudReport, FraudScenario, REPLAY_SUBMISSIONS};
pub use growth::{pseudonym_growth_experiment, pseudonym_growth_with, AddressPolicy, GrowthKernel};
pub use lineage::{
    lineage_dag, trace_lineage, trace_lineage_with_ids, verify_lineage, LineageChain, LineageDag, LineageEdge,
    LineageStep, StepCheck,
};
pub use metrics::{measure_state, Measure, StateMetrics};
pub use tables::{render_tables_text, tables_report, TablesReport};
pub use traceability::{
    account_two_histories, traceability_report, utxo_traceability, TraceEvidence, TraceabilityReport,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::Digest;
use crate::utxo::UtxoId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Account,
    Token,
    Utxo,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("output {0} does not appear in the log")]
    UnknownUtxo(UtxoId),
    #[error("malformed log at transaction {txid}: {reason}")]
    MalformedLog { txid: Digest, reason: &'static str },
    #[error("scenario {scenario:?} is not defined for kernel {kernel:?}")]
    Unsupported { scenario: FraudScenario, kernel: FraudKernel },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
