use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tx::{TxKind, TxOut, UtxoId, UtxoTx};
use crate::amount::Amount;
use crate::codec::Writer;
use crate::crypto::{hash, verify, Digest, KeyPair, PublicKey, UserId};
use crate::script::{execute, ExecutionContext, ScriptFault, Template};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    /// Accept hash-locked outputs. They are non-standard in practice.
    pub allow_p2h: bool,
}

impl Default for Policy {
    fn default() -> Self {
        Policy { allow_p2h: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "kebab-case")]
pub enum Violation {
    NoInputs,
    NoOutputs,
    CoinbaseWithInputs,
    ZeroValueOutput { index: usize },
    HashLockDisabled { index: usize },
    DuplicateInput { index: usize, outpoint: UtxoId },
    /// The outpoint is not in the active set. `previously_spent` tells a
    /// consumed output apart from one that never existed.
    SpentInput { index: usize, outpoint: UtxoId, previously_spent: bool },
    ScriptFailed { index: usize, fault: ScriptFault },
    Conservation { inputs: Amount, outputs: Amount },
    AmountOverflow,
    MissingIssuerSignature,
    BadIssuerSignature,
    UnexpectedIssuerSignature,
    DuplicateTxid,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoInputs => f.write_str("no inputs"),
            Violation::NoOutputs => f.write_str("no outputs"),
            Violation::CoinbaseWithInputs => f.write_str("coinbase has inputs"),
            Violation::ZeroValueOutput { index } => write!(f, "output {index} has zero value"),
            Violation::HashLockDisabled { index } => write!(f, "output {index} is hash-locked and policy forbids it"),
            Violation::DuplicateInput { index, outpoint } => write!(f, "input {index} repeats {outpoint}"),
            Violation::SpentInput { index, outpoint, previously_spent: true } => {
                write!(f, "input {index} spends already-consumed {outpoint}")
            }
            Violation::SpentInput { index, outpoint, .. } => write!(f, "input {index} references unknown {outpoint}"),
            Violation::ScriptFailed { index, fault } => write!(f, "input {index} script: {fault}"),
            Violation::Conservation { inputs, outputs } => write!(f, "inputs {inputs} != outputs {outputs}"),
            Violation::AmountOverflow => f.write_str("amount overflow"),
            Violation::MissingIssuerSignature => f.write_str("coinbase lacks issuer signature"),
            Violation::BadIssuerSignature => f.write_str("issuer signature does not verify"),
            Violation::UnexpectedIssuerSignature => f.write_str("normal transaction carries an issuer signature"),
            Violation::DuplicateTxid => f.write_str("transaction id already in the log"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputCheck {
    pub outpoint: UtxoId,
    pub active: bool,
    pub script_ok: bool,
}

/// Outcome of validating one transaction against a chainstate. Failures are
/// entries here, never panics or errors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub txid: Digest,
    pub kind: TxKind,
    pub inputs: Vec<InputCheck>,
    pub input_total: Amount,
    pub output_total: Amount,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn spends_consumed_output(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, Violation::SpentInput { previously_spent: true, .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UtxoError {
    #[error("issuance is not signed by the configured issuer")]
    IssuerAuth,
    #[error("transaction {} rejected: {}", .0.txid, join(&.0.violations))]
    Rejected(Box<ValidationReport>),
}

impl UtxoError {
    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            UtxoError::Rejected(r) => Some(r),
            UtxoError::IssuerAuth => None,
        }
    }
}

fn join(violations: &[Violation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// The active-output database plus the append-only log of accepted
/// transactions it was derived from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chainstate {
    issuer: PublicKey,
    policy: Policy,
    active: BTreeMap<UtxoId, TxOut>,
    log: Vec<UtxoTx>,
    txids: BTreeSet<Digest>,
}

impl Chainstate {
    pub fn new(issuer: PublicKey) -> Self {
        Self::with_policy(issuer, Policy::default())
    }

    pub fn with_policy(issuer: PublicKey, policy: Policy) -> Self {
        Chainstate { issuer, policy, active: BTreeMap::new(), log: Vec::new(), txids: BTreeSet::new() }
    }

    /// Rebuilds a chainstate by applying `log` from genesis. Fails with the
    /// position of the first transaction that does not apply.
    pub fn from_log(issuer: PublicKey, policy: Policy, log: &[UtxoTx]) -> Result<Self, (usize, UtxoError)> {
        let mut state = Chainstate::with_policy(issuer, policy);
        for (i, tx) in log.iter().enumerate() {
            state.apply_mut(tx).map_err(|e| (i, e))?;
        }
        Ok(state)
    }

    pub fn issuer(&self) -> &PublicKey {
        &self.issuer
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn active(&self) -> &BTreeMap<UtxoId, TxOut> {
        &self.active
    }

    pub fn get(&self, id: &UtxoId) -> Option<&TxOut> {
        self.active.get(id)
    }

    pub fn log(&self) -> &[UtxoTx] {
        &self.log
    }

    pub fn contains_tx(&self, txid: &Digest) -> bool {
        self.txids.contains(txid)
    }

    pub fn total_active_value(&self) -> u128 {
        self.active.values().map(|o| o.value.value() as u128).sum()
    }

    /// Digest of the active set: for each output in id order, txid, index,
    /// value and locking script bytes.
    pub fn active_digest(&self) -> Digest {
        let mut w = Writer::new();
        w.len_prefix(self.active.len());
        for (id, out) in &self.active {
            w.fixed(id.txid.as_bytes()).u32(id.index).u64(out.value.value());
            out.locking.encode(&mut w);
        }
        hash(&w.finish())
    }

    /// Active P2PKH outputs locked to `owner`, in id order.
    pub fn utxos_of(&self, owner: &UserId) -> Vec<(UtxoId, TxOut)> {
        self.active
            .iter()
            .filter(|(_, out)| out.owner().as_ref() == Some(owner))
            .map(|(id, out)| (*id, out.clone()))
            .collect()
    }

    pub fn validate(&self, tx: &UtxoTx) -> ValidationReport {
        let txid = tx.txid();
        let mut violations = Vec::new();
        let payload = tx.signing_payload();

        if self.txids.contains(&txid) {
            violations.push(Violation::DuplicateTxid);
        }
        if tx.outputs.is_empty() {
            violations.push(Violation::NoOutputs);
        }
        for (index, out) in tx.outputs.iter().enumerate() {
            if out.value.is_zero() {
                violations.push(Violation::ZeroValueOutput { index });
            }
            if !self.policy.allow_p2h && matches!(out.locking.template(), Template::PayToHash(_)) {
                violations.push(Violation::HashLockDisabled { index });
            }
        }
        let output_total = Amount::try_sum(tx.outputs.iter().map(|o| o.value)).unwrap_or_else(|_| {
            violations.push(Violation::AmountOverflow);
            Amount::ZERO
        });

        let mut inputs = Vec::with_capacity(tx.inputs.len());
        let mut input_total = Amount::ZERO;
        match tx.kind {
            TxKind::Coinbase => {
                if !tx.inputs.is_empty() {
                    violations.push(Violation::CoinbaseWithInputs);
                }
                match &tx.issuer_signature {
                    None => violations.push(Violation::MissingIssuerSignature),
                    Some(sig) if !verify(&self.issuer, &payload, sig) => {
                        violations.push(Violation::BadIssuerSignature)
                    }
                    Some(_) => {}
                }
            }
            TxKind::Normal => {
                if tx.inputs.is_empty() {
                    violations.push(Violation::NoInputs);
                }
                if tx.issuer_signature.is_some() {
                    violations.push(Violation::UnexpectedIssuerSignature);
                }
                let ctx = ExecutionContext::new(&payload);
                let mut seen = BTreeSet::new();
                for (index, input) in tx.inputs.iter().enumerate() {
                    let outpoint = input.outpoint;
                    if !seen.insert(outpoint) {
                        violations.push(Violation::DuplicateInput { index, outpoint });
                    }
                    let (active, script_ok) = match self.active.get(&outpoint) {
                        Some(prev) => {
                            match input_total.checked_add(prev.value) {
                                Ok(t) => input_total = t,
                                Err(_) => violations.push(Violation::AmountOverflow),
                            }
                            let result = execute(&input.unlocking, &prev.locking, &ctx);
                            let ok = result.is_ok();
                            if let Err(fault) = result {
                                violations.push(Violation::ScriptFailed { index, fault });
                            }
                            (true, ok)
                        }
                        None => {
                            let previously_spent = self.was_consumed(&outpoint);
                            violations.push(Violation::SpentInput { index, outpoint, previously_spent });
                            (false, false)
                        }
                    };
                    inputs.push(InputCheck { outpoint, active, script_ok });
                }
                // only meaningful once every input resolved to a value
                if inputs.iter().all(|c| c.active) && input_total != output_total {
                    violations.push(Violation::Conservation { inputs: input_total, outputs: output_total });
                }
            }
        }

        ValidationReport { txid, kind: tx.kind, inputs, input_total, output_total, violations }
    }

    fn was_consumed(&self, outpoint: &UtxoId) -> bool {
        self.log.iter().flat_map(|tx| &tx.inputs).any(|input| input.outpoint == *outpoint)
    }

    pub fn apply(&self, tx: &UtxoTx) -> Result<Self, UtxoError> {
        let mut next = self.clone();
        next.apply_mut(tx)?;
        Ok(next)
    }

    /// Validates then applies in place. A rejected transaction leaves the
    /// state untouched.
    pub fn apply_mut(&mut self, tx: &UtxoTx) -> Result<(), UtxoError> {
        let report = self.validate(tx);
        if !report.is_valid() {
            return Err(UtxoError::Rejected(Box::new(report)));
        }
        for input in &tx.inputs {
            self.active.remove(&input.outpoint);
        }
        for (index, out) in tx.outputs.iter().enumerate() {
            self.active.insert(UtxoId::new(report.txid, index as u32), out.clone());
        }
        self.txids.insert(report.txid);
        self.log.push(tx.clone());
        Ok(())
    }

    /// Mints `outputs` with a coinbase signed by `issuer`. The nonce is the
    /// current log length so repeated issuances get distinct ids.
    pub fn issue(&self, outputs: Vec<TxOut>, issuer: &KeyPair) -> Result<Self, UtxoError> {
        let mut next = self.clone();
        next.issue_mut(outputs, issuer)?;
        Ok(next)
    }

    pub fn issue_mut(&mut self, outputs: Vec<TxOut>, issuer: &KeyPair) -> Result<UtxoTx, UtxoError> {
        let tx = UtxoTx::coinbase(outputs, self.log.len() as u64, issuer);
        match self.apply_mut(&tx) {
            Err(UtxoError::Rejected(report))
                if report.violations.contains(&Violation::BadIssuerSignature) =>
            {
                Err(UtxoError::IssuerAuth)
            }
            other => other.map(|()| tx),
        }
    }
}

pub fn utxo_validate(state: &Chainstate, tx: &UtxoTx) -> ValidationReport {
    state.validate(tx)
}

pub fn utxo_apply(state: &Chainstate, tx: &UtxoTx) -> Result<Chainstate, UtxoError> {
    state.apply(tx)
}

pub fn coinbase_issue(state: &Chainstate, outputs: Vec<TxOut>, issuer: &KeyPair) -> Result<Chainstate, UtxoError> {
    state.issue(outputs, issuer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::keygen;
    use crate::script::Script;
    use crate::utxo::{build_merge, build_split, p2h_output, p2pkh_output};

    struct Fixture {
        issuer: KeyPair,
        a: KeyPair,
        b: KeyPair,
    }

    fn fixture() -> Fixture {
        Fixture { issuer: keygen(b"issuer"), a: keygen(b"A"), b: keygen(b"B") }
    }

    fn funded(f: &Fixture, values: &[u64]) -> Chainstate {
        let outputs = values.iter().map(|&v| p2pkh_output(Amount::new(v), &f.a.address())).collect();
        Chainstate::new(f.issuer.public.clone()).issue(outputs, &f.issuer).unwrap()
    }

    #[test]
    fn genesis_issue_creates_one_output() {
        let f = fixture();
        let state = funded(&f, &[50]);
        let coinbase = &state.log()[0];
        assert_eq!(state.active().len(), 1);
        assert_eq!(state.get(&coinbase.output_id(0)).unwrap().value, Amount::new(50));
        assert_eq!(state.get(&coinbase.output_id(0)).unwrap().owner(), Some(f.a.address()));
    }

    #[test]
    fn issuances_are_additive_and_distinct() {
        let f = fixture();
        let out = || vec![p2pkh_output(Amount::new(50), &f.a.address())];
        let state = Chainstate::new(f.issuer.public.clone());
        let state = coinbase_issue(&state, out(), &f.issuer).unwrap();
        let state = coinbase_issue(&state, out(), &f.issuer).unwrap();
        assert_eq!(state.total_active_value(), 100);
        assert_eq!(state.active().len(), 2);
    }

    #[test]
    fn non_issuer_cannot_mint() {
        let f = fixture();
        let state = Chainstate::new(f.issuer.public.clone());
        let err = state.issue(vec![p2pkh_output(Amount::new(50), &f.a.address())], &f.a).unwrap_err();
        assert_eq!(err, UtxoError::IssuerAuth);
    }

    #[test]
    fn split_matches_the_splitting_equation() {
        let f = fixture();
        let state = funded(&f, &[10]);
        let o_k = state.log()[0].output_id(0);
        let tx = build_split(&state, o_k, &f.a, f.b.address(), Amount::new(4)).unwrap();
        assert!(utxo_validate(&state, &tx).is_valid());
        let next = utxo_apply(&state, &tx).unwrap();
        let expected: BTreeMap<_, _> = [
            (tx.output_id(0), p2pkh_output(Amount::new(4), &f.b.address())),
            (tx.output_id(1), p2pkh_output(Amount::new(6), &f.a.address())),
        ]
        .into();
        assert_eq!(next.active(), &expected);
        assert_eq!(next.log().len(), 2);
    }

    #[test]
    fn merge_matches_the_merging_equation() {
        let f = fixture();
        let state = funded(&f, &[3, 7]);
        let cb = &state.log()[0];
        let tx = build_merge(&state, &[cb.output_id(0), cb.output_id(1)], &f.a, f.b.address()).unwrap();
        let next = state.apply(&tx).unwrap();
        let expected: BTreeMap<_, _> = [(tx.output_id(0), p2pkh_output(Amount::new(10), &f.b.address()))].into();
        assert_eq!(next.active(), &expected);
    }

    #[test]
    fn replay_and_double_spend_are_rejected() {
        let f = fixture();
        let state = funded(&f, &[10]);
        let o_k = state.log()[0].output_id(0);
        let tx = build_split(&state, o_k, &f.a, f.b.address(), Amount::new(4)).unwrap();
        let once = state.apply(&tx).unwrap();

        let mut replayed = once.clone();
        let err = replayed.apply_mut(&tx).unwrap_err();
        assert_eq!(replayed, once);
        let report = err.report().unwrap();
        assert!(report.spends_consumed_output());
        assert!(report.violations.contains(&Violation::DuplicateTxid));

        let conflicting = build_split(&state, o_k, &f.a, keygen(b"C").address(), Amount::new(5)).unwrap();
        assert!(state.validate(&conflicting).is_valid());
        let report = once.validate(&conflicting);
        assert_eq!(
            report.violations,
            vec![Violation::SpentInput { index: 0, outpoint: o_k, previously_spent: true }]
        );
    }

    #[test]
    fn conservation_is_enforced() {
        let f = fixture();
        let state = funded(&f, &[10]);
        let o_k = state.log()[0].output_id(0);
        let mut tx = UtxoTx::transfer(&[o_k], vec![p2pkh_output(Amount::new(11), &f.b.address())]);
        tx.sign_inputs(&[&f.a]);
        let report = state.validate(&tx);
        assert_eq!(
            report.violations,
            vec![Violation::Conservation { inputs: Amount::new(10), outputs: Amount::new(11) }]
        );
        assert!(state.apply(&tx).is_err());
    }

    #[test]
    fn wrong_signer_fails_the_script() {
        let f = fixture();
        let state = funded(&f, &[10]);
        let o_k = state.log()[0].output_id(0);
        let mut tx = UtxoTx::transfer(&[o_k], vec![p2pkh_output(Amount::new(10), &f.b.address())]);
        tx.sign_inputs(&[&f.b]);
        let report = state.validate(&tx);
        assert!(matches!(report.violations[..], [Violation::ScriptFailed { index: 0, .. }]));
        assert_eq!(report.inputs, vec![InputCheck { outpoint: o_k, active: true, script_ok: false }]);
    }

    #[test]
    fn structural_violations_are_reported() {
        let f = fixture();
        let state = funded(&f, &[10]);
        let o_k = state.log()[0].output_id(0);

        let empty = UtxoTx::transfer(&[], vec![]);
        let v = state.validate(&empty).violations;
        assert!(v.contains(&Violation::NoInputs) && v.contains(&Violation::NoOutputs));

        let mut zero = UtxoTx::transfer(
            &[o_k],
            vec![p2pkh_output(Amount::new(10), &f.b.address()), p2pkh_output(Amount::ZERO, &f.a.address())],
        );
        zero.sign_inputs(&[&f.a]);
        assert_eq!(state.validate(&zero).violations, vec![Violation::ZeroValueOutput { index: 1 }]);

        let mut dup = UtxoTx::transfer(&[o_k, o_k], vec![p2pkh_output(Amount::new(20), &f.b.address())]);
        dup.sign_inputs(&[&f.a, &f.a]);
        assert!(state.validate(&dup).violations.contains(&Violation::DuplicateInput { index: 1, outpoint: o_k }));

        let unknown = UtxoId::new(hash(b"nowhere"), 0);
        let mut ghost = UtxoTx::transfer(&[unknown], vec![p2pkh_output(Amount::new(1), &f.b.address())]);
        ghost.sign_inputs(&[&f.a]);
        assert!(state
            .validate(&ghost)
            .violations
            .contains(&Violation::SpentInput { index: 0, outpoint: unknown, previously_spent: false }));
    }

    #[test]
    fn hash_locked_outputs_follow_policy() {
        let f = fixture();
        let secret = b"preimage";
        let locked = vec![p2h_output(Amount::new(10), &hash(secret))];
        let strict = Chainstate::with_policy(f.issuer.public.clone(), Policy { allow_p2h: false });
        assert!(strict.issue(locked.clone(), &f.issuer).is_err());

        let state = Chainstate::new(f.issuer.public.clone()).issue(locked, &f.issuer).unwrap();
        let o = state.log()[0].output_id(0);
        // anyone with the preimage can spend; no key involved
        let mut tx = UtxoTx::transfer(&[o], vec![p2pkh_output(Amount::new(10), &f.b.address())]);
        tx.unlock_with_preimage(0, secret);
        assert!(state.validate(&tx).is_valid());
        tx.unlock_with_preimage(0, b"wrong");
        assert!(!state.validate(&tx).is_valid());
    }

    #[test]
    fn rebuild_from_log_matches() {
        let f = fixture();
        let state = funded(&f, &[10]);
        let o_k = state.log()[0].output_id(0);
        let tx = build_split(&state, o_k, &f.a, f.b.address(), Amount::new(4)).unwrap();
        let state = state.apply(&tx).unwrap();
        let rebuilt = Chainstate::from_log(f.issuer.public.clone(), Policy::default(), state.log()).unwrap();
        assert_eq!(rebuilt, state);

        let mut bad_log = state.log().to_vec();
        bad_log.push(tx);
        assert_eq!(
            Chainstate::from_log(f.issuer.public.clone(), Policy::default(), &bad_log).unwrap_err().0,
            2
        );
    }

    #[test]
    fn constant_true_locking_is_spendable_by_anyone() {
        let f = fixture();
        let anyone = TxOut { value: Amount::new(5), locking: "PUSH:01".parse::<Script>().unwrap() };
        let state = Chainstate::new(f.issuer.public.clone()).issue(vec![anyone], &f.issuer).unwrap();
        let tx = UtxoTx::transfer(&[state.log()[0].output_id(0)], vec![p2pkh_output(Amount::new(5), &f.b.address())]);
        assert!(state.validate(&tx).is_valid());
    }
}
