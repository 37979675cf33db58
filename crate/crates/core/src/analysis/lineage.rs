use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::crypto::{hash, verify, Digest, PublicKey};
use crate::script::{execute, ExecutionContext};
use crate::utxo::{TxKind, UtxoId, UtxoTx};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageStep {
    pub txid: Digest,
    pub log_index: usize,
    pub kind: TxKind,
    /// First input of the step's transaction; `None` for the coinbase.
    pub consumed: Option<UtxoId>,
    pub produced: UtxoId,
}

/// A path from an output back to the coinbase it descends from, following
/// the first input of each transaction. Step 0 produced the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageChain {
    pub target: UtxoId,
    pub steps: Vec<LineageStep>,
    pub terminal: Digest,
}

impl LineageChain {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub fn trace_lineage(log: &[UtxoTx], target: UtxoId) -> Result<LineageChain, AnalysisError> {
    let txids: Vec<Digest> = log.iter().map(UtxoTx::txid).collect();
    trace_lineage_with_ids(&txids, log, target)
}

/// Traces using the given transaction ids rather than recomputing them.
/// Tampered entries then still link up and can be flagged by
/// [`verify_lineage`].
pub fn trace_lineage_with_ids(txids: &[Digest], log: &[UtxoTx], target: UtxoId) -> Result<LineageChain, AnalysisError> {
    assert_eq!(txids.len(), log.len(), "one id per log entry");
    let position: BTreeMap<Digest, usize> = txids.iter().enumerate().map(|(i, id)| (*id, i)).collect();

    let mut steps = Vec::new();
    let mut current = target;
    let mut upper = log.len();
    loop {
        let pos = match position.get(&current.txid) {
            Some(&p) => p,
            None if steps.is_empty() => return Err(AnalysisError::UnknownUtxo(target)),
            None => {
                return Err(AnalysisError::MalformedLog { txid: current.txid, reason: "input references a missing transaction" })
            }
        };
        let tx = &log[pos];
        if current.index as usize >= tx.outputs.len() {
            if steps.is_empty() {
                return Err(AnalysisError::UnknownUtxo(target));
            }
            return Err(AnalysisError::MalformedLog { txid: current.txid, reason: "input references a missing output" });
        }
        if pos >= upper {
            return Err(AnalysisError::MalformedLog { txid: current.txid, reason: "input references a later transaction" });
        }
        upper = pos;
        let consumed = tx.inputs.first().map(|i| i.outpoint);
        steps.push(LineageStep { txid: txids[pos], log_index: pos, kind: tx.kind, consumed, produced: current });
        match (tx.kind, consumed) {
            (TxKind::Coinbase, _) => return Ok(LineageChain { target, steps, terminal: txids[pos] }),
            (TxKind::Normal, Some(next)) => current = next,
            (TxKind::Normal, None) => {
                return Err(AnalysisError::MalformedLog { txid: txids[pos], reason: "transfer without inputs" })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageEdge {
    pub consumed: UtxoId,
    pub by: Digest,
}

/// Full ancestry of an output: every transaction it inherits value from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageDag {
    pub target: UtxoId,
    pub transactions: BTreeSet<Digest>,
    pub coinbases: BTreeSet<Digest>,
    pub edges: Vec<LineageEdge>,
}

pub fn lineage_dag(log: &[UtxoTx], target: UtxoId) -> Result<LineageDag, AnalysisError> {
    let by_id: BTreeMap<Digest, &UtxoTx> = log.iter().map(|tx| (tx.txid(), tx)).collect();
    match by_id.get(&target.txid) {
        Some(tx) if (target.index as usize) < tx.outputs.len() => {}
        _ => return Err(AnalysisError::UnknownUtxo(target)),
    }
    let mut transactions = BTreeSet::new();
    let mut coinbases = BTreeSet::new();
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([target.txid]);
    while let Some(txid) = queue.pop_front() {
        if !transactions.insert(txid) {
            continue;
        }
        let tx = by_id
            .get(&txid)
            .ok_or(AnalysisError::MalformedLog { txid, reason: "input references a missing transaction" })?;
        if tx.is_coinbase() {
            coinbases.insert(txid);
        }
        for input in &tx.inputs {
            edges.push(LineageEdge { consumed: input.outpoint, by: txid });
            queue.push_back(input.outpoint.txid);
        }
    }
    Ok(LineageDag { target, transactions, coinbases, edges })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCheck {
    pub step: usize,
    pub txid: Digest,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Re-verifies every transaction on the chain: the recorded id must match the
/// entry's hash, a coinbase must carry a valid issuer signature, and every
/// input of a transfer must unlock the output it spends.
pub fn verify_lineage(txids: &[Digest], log: &[UtxoTx], chain: &LineageChain, issuer: &PublicKey) -> Vec<StepCheck> {
    let position: BTreeMap<Digest, usize> = txids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    chain
        .steps
        .iter()
        .enumerate()
        .map(|(step, s)| {
            let tx = &log[s.log_index];
            let failure = check_tx(tx, txids[s.log_index], &position, log, issuer).err();
            StepCheck { step, txid: s.txid, verified: failure.is_none(), failure }
        })
        .collect()
}

fn check_tx(
    tx: &UtxoTx,
    recorded: Digest,
    position: &BTreeMap<Digest, usize>,
    log: &[UtxoTx],
    issuer: &PublicKey,
) -> Result<(), String> {
    if hash(&tx.to_bytes()) != recorded {
        return Err("entry does not hash to its recorded id".into());
    }
    let payload = tx.signing_payload();
    if tx.is_coinbase() {
        return match &tx.issuer_signature {
            Some(sig) if verify(issuer, &payload, sig) => Ok(()),
            Some(_) => Err("issuer signature does not verify".into()),
            None => Err("coinbase lacks issuer signature".into()),
        };
    }
    let ctx = ExecutionContext::new(&payload);
    for (i, input) in tx.inputs.iter().enumerate() {
        let prev = position
            .get(&input.outpoint.txid)
            .and_then(|&p| log[p].outputs.get(input.outpoint.index as usize))
            .ok_or_else(|| format!("input {i} spends an output missing from the log"))?;
        execute(&input.unlocking, &prev.locking, &ctx).map_err(|fault| format!("input {i}: {fault}"))?;
    }
    Ok(())
}
