//! JSON export and import of kernel state.
//!
//! Every document carries a `schema_version`. Keys are emitted in sorted
//! order so snapshots diff cleanly and compare byte-for-byte.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::account::AccountState;
use crate::crypto::{Digest, PublicKey};
use crate::token::TokenRegistry;
use crate::utxo::{Chainstate, Policy, TxOut, UtxoError, UtxoId, UtxoTx};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}, expected {SCHEMA_VERSION}")]
    SchemaVersion(u32),
    #[error("log entry {0} does not apply: {1}")]
    Log(usize, UtxoError),
    #[error("log entry {0} does not hash to its recorded id")]
    TxidMismatch(usize),
}

/// Pretty JSON with lexicographically sorted object keys and a trailing newline.
pub fn to_sorted_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("kernel types serialize infallibly");
    let mut out = serde_json::to_string_pretty(&value).expect("value serializes");
    out.push('\n');
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "lowercase")]
pub enum SnapshotBody {
    Account(AccountState),
    Token(TokenRegistry),
    Utxo {
        issuer: PublicKey,
        active: BTreeMap<UtxoId, TxOut>,
        log_length: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: SnapshotBody,
}

impl Snapshot {
    fn new(body: SnapshotBody) -> Self {
        Snapshot { schema_version: SCHEMA_VERSION, body }
    }

    pub fn account(state: &AccountState) -> Self {
        Self::new(SnapshotBody::Account(state.clone()))
    }

    pub fn token(registry: &TokenRegistry) -> Self {
        Self::new(SnapshotBody::Token(registry.clone()))
    }

    pub fn utxo(state: &Chainstate) -> Self {
        Self::new(SnapshotBody::Utxo {
            issuer: state.issuer().clone(),
            active: state.active().clone(),
            log_length: state.log().len(),
        })
    }

    pub fn to_json(&self) -> String {
        to_sorted_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, SnapshotError> {
        let snapshot: Snapshot = serde_json::from_str(text)?;
        if snapshot.schema_version != SCHEMA_VERSION {
            return Err(SnapshotError::SchemaVersion(snapshot.schema_version));
        }
        Ok(snapshot)
    }
}

/// A log entry together with the id it had when the chainstate accepted it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedTx {
    pub txid: Digest,
    pub tx: UtxoTx,
}

/// The append-only UTXO log, from which a chainstate can be rebuilt.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogFile {
    pub schema_version: u32,
    pub issuer: PublicKey,
    pub policy: Policy,
    pub txs: Vec<LoggedTx>,
}

impl LogFile {
    pub fn from_chainstate(state: &Chainstate) -> Self {
        LogFile {
            schema_version: SCHEMA_VERSION,
            issuer: state.issuer().clone(),
            policy: state.policy(),
            txs: state.log().iter().map(|tx| LoggedTx { txid: tx.txid(), tx: tx.clone() }).collect(),
        }
    }

    pub fn recorded_ids(&self) -> Vec<Digest> {
        self.txs.iter().map(|e| e.txid).collect()
    }

    pub fn transactions(&self) -> Vec<UtxoTx> {
        self.txs.iter().map(|e| e.tx.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        to_sorted_json(self)
    }

    /// Parses without replaying, so a tampered log can still be inspected.
    pub fn from_json(text: &str) -> Result<Self, SnapshotError> {
        let log: LogFile = serde_json::from_str(text)?;
        if log.schema_version != SCHEMA_VERSION {
            return Err(SnapshotError::SchemaVersion(log.schema_version));
        }
        Ok(log)
    }

    pub fn replay(&self) -> Result<Chainstate, SnapshotError> {
        if let Some(i) = self.txs.iter().position(|e| e.tx.txid() != e.txid) {
            return Err(SnapshotError::TxidMismatch(i));
        }
        Chainstate::from_log(self.issuer.clone(), self.policy, &self.transactions())
            .map_err(|(i, e)| SnapshotError::Log(i, e))
    }
}
