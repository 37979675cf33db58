use serde::{Deserialize, Serialize};

use super::{trace_lineage, AnalysisError, KernelKind, LineageChain};
use crate::account::{AccountState, AccountTx, ReplayMode};
use crate::amount::Amount;
use crate::crypto::keygen;
use crate::snapshot::Snapshot;
use crate::token::{TokenId, TokenRegistry, TokenTransfer};
use crate::utxo::{build_split, p2pkh_output, Chainstate};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "evidence", rename_all = "kebab-case")]
pub enum TraceEvidence {
    /// A chain from an active output back to its coinbase.
    Chain { chain: LineageChain },
    /// Two different payment histories that end in byte-identical snapshots.
    TwoHistories {
        single_payment_txs: usize,
        split_payment_txs: usize,
        single_payment_snapshot: String,
        split_payment_snapshot: String,
        byte_identical: bool,
    },
    /// The registry keeps current owners only and does not claim to be the
    /// authority on how objects got there.
    NonAuthoritative { registry_authoritative: bool, objects: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceabilityReport {
    pub kernel: KernelKind,
    pub traceable: bool,
    #[serde(flatten)]
    pub evidence: TraceEvidence,
}

/// Traces the deepest active output of `state`.
pub fn utxo_traceability(state: &Chainstate) -> Result<TraceabilityReport, AnalysisError> {
    let mut best: Option<LineageChain> = None;
    for id in state.active().keys() {
        let chain = trace_lineage(state.log(), *id)?;
        if best.as_ref().is_none_or(|b| chain.len() > b.len()) {
            best = Some(chain);
        }
    }
    let chain = best.ok_or(AnalysisError::InvalidParameter("ledger has no active outputs"))?;
    Ok(TraceabilityReport { kernel: KernelKind::Utxo, traceable: true, evidence: TraceEvidence::Chain { chain } })
}

/// Builds the same start state twice: once paying `amount` in one
/// transaction, once in `parts` smaller ones. Both run without nonces.
pub fn account_two_histories(
    payer_funds: Amount,
    payee_funds: Amount,
    amount: Amount,
    parts: u64,
    seed: u64,
) -> Result<(AccountState, AccountState), AnalysisError> {
    if parts == 0 || amount.value() < parts || amount > payer_funds {
        return Err(AnalysisError::InvalidParameter("amount must cover every part and fit the payer balance"));
    }
    let a = keygen(format!("trace/{seed}/A").as_bytes());
    let b = keygen(format!("trace/{seed}/B").as_bytes());
    let start = AccountState::new()
        .mint(a.address(), payer_funds)
        .and_then(|s| s.mint(b.address(), payee_funds))
        .map_err(|_| AnalysisError::InvalidParameter("start balances overflow"))?;

    let once = start
        .apply(&AccountTx::signed(&a, b.address(), amount, None), ReplayMode::Naive)
        .expect("payer is funded");
    let mut split = start;
    let base = amount.value() / parts;
    for i in 0..parts {
        let part = if i + 1 == parts { amount.value() - base * (parts - 1) } else { base };
        split
            .apply_mut(&AccountTx::signed(&a, b.address(), Amount::new(part), None), ReplayMode::Naive)
            .expect("payer is funded");
    }
    Ok((once, split))
}

pub fn traceability_report(kernel: KernelKind, seed: u64) -> TraceabilityReport {
    match kernel {
        KernelKind::Utxo => {
            let issuer = keygen(format!("trace/{seed}/issuer").as_bytes());
            let [a, b, c] = ["A", "B", "C"].map(|n| keygen(format!("trace/{seed}/{n}").as_bytes()));
            let s = Chainstate::new(issuer.public.clone())
                .issue(vec![p2pkh_output(Amount::new(50), &a.address())], &issuer)
                .expect("issuer signs");
            let t1 = build_split(&s, s.log()[0].output_id(0), &a, b.address(), Amount::new(20)).expect("funded");
            let s = s.apply(&t1).expect("valid");
            let t2 = build_split(&s, t1.output_id(0), &b, c.address(), Amount::new(5)).expect("funded");
            let s = s.apply(&t2).expect("valid");
            utxo_traceability(&s).expect("populated ledger")
        }
        KernelKind::Account => {
            let (once, split) = account_two_histories(Amount::new(10), Amount::new(5), Amount::new(3), 3, seed)
                .expect("parameters are consistent");
            let single_payment_snapshot = Snapshot::account(&once).to_json();
            let split_payment_snapshot = Snapshot::account(&split).to_json();
            let byte_identical = single_payment_snapshot == split_payment_snapshot;
            TraceabilityReport {
                kernel,
                traceable: !byte_identical,
                evidence: TraceEvidence::TwoHistories {
                    single_payment_txs: 1,
                    split_payment_txs: 3,
                    single_payment_snapshot,
                    split_payment_snapshot,
                    byte_identical,
                },
            }
        }
        KernelKind::Token => {
            let a = keygen(format!("trace/{seed}/A").as_bytes());
            let b = keygen(format!("trace/{seed}/B").as_bytes());
            let token = TokenId::new("object-1");
            let registry = TokenRegistry::new()
                .issue(token.clone(), Amount::new(1), a.address())
                .and_then(|r| r.transfer(&TokenTransfer { payer: a.address(), payee: b.address(), token }))
                .expect("owner transfers");
            TraceabilityReport {
                kernel,
                traceable: registry.is_authoritative(),
                evidence: TraceEvidence::NonAuthoritative {
                    registry_authoritative: registry.is_authoritative(),
                    objects: registry.len(),
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts() {
        assert!(traceability_report(KernelKind::Utxo, 0).traceable);
        assert!(!traceability_report(KernelKind::Account, 0).traceable);
        assert!(!traceability_report(KernelKind::Token, 0).traceable);
    }

    #[test]
    fn utxo_evidence_reaches_the_coinbase() {
        let r = traceability_report(KernelKind::Utxo, 3);
        let TraceEvidence::Chain { chain } = r.evidence else { panic!("expected a chain") };
        assert_eq!(chain.len(), 3);
        assert_eq!(chain.steps.last().unwrap().txid, chain.terminal);
    }

    #[test]
    fn two_histories_reach_the_same_balances() {
        let (once, split) = account_two_histories(Amount::new(10), Amount::new(5), Amount::new(3), 3, 0).unwrap();
        assert_eq!(once, split);
        let mut balances: Vec<u64> = once.balances().values().map(|a| a.value()).collect();
        balances.sort();
        assert_eq!(balances, [7, 8]);
        assert!(account_two_histories(Amount::new(10), Amount::new(5), Amount::new(2), 3, 0).is_err());
    }
}
