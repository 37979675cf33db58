//! Runs a validated scenario against fresh kernel instances.

use std::collections::BTreeMap;

use ledgerlab::account::{AccountState, AccountTx, ReplayMode};
use ledgerlab::analysis::{
    measure_state, pseudonym_growth_with, render_tables_text, run_fraud_scenario, tables_report, traceability_report,
    utxo_traceability, AddressPolicy, FraudKernel, FraudOutcome, FraudScenario, GrowthKernel, KernelKind,
    StateMetrics,
};
use ledgerlab::crypto::{Digest, KeyPair, UserId};
use ledgerlab::ecash::{issuer_setup, pay, withdraw, Coin, Issuer, Redemption};
use ledgerlab::replica::{run_round, OrderingRule, RoundReport, ScheduleSeed};
use ledgerlab::snapshot::{to_sorted_json, LogFile, Snapshot};
use ledgerlab::token::{TokenId, TokenRegistry, TokenTransfer};
use ledgerlab::utxo::{build_merge, build_payment, build_split, p2pkh_output, Chainstate, UtxoTx};
use ledgerlab::{Amount, CryptoMode};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

use crate::scenario::{Action, KernelChoice, ReportKind, RoundRule, Scenario, SCHEMA_VERSION};

/// Payments in the growth report.
const GROWTH_PAYMENTS: usize = 20;

#[derive(Debug, Error)]
#[error("action {index} ({action}) failed: {reason}")]
pub struct ExecError {
    pub index: usize,
    pub action: &'static str,
    pub reason: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ActionRecord {
    pub index: usize,
    pub action: &'static str,
    pub submitted: usize,
    pub accepted: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub txids: Vec<Digest>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rejections: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub redemptions: Vec<Redemption>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<FraudOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_state_matches_single: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round: Option<RoundReport>,
}

#[derive(Serialize)]
struct RunReport<'a> {
    schema_version: u32,
    name: &'a str,
    kernel: KernelChoice,
    crypto: CryptoMode,
    seed: u64,
    /// Only toy-mode output is covered by the golden files.
    byte_reproducible: bool,
    participants: BTreeMap<&'a str, UserId>,
    actions: Vec<ActionRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<StateMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spent_serials: Option<usize>,
}

#[derive(Clone)]
enum Produced {
    Utxo(UtxoTx),
    Account(AccountTx),
}

#[allow(clippy::large_enum_variant)]
enum Ledger {
    Utxo { state: Chainstate, issuer: KeyPair },
    Account { state: AccountState, mode: ReplayMode },
    Token { registry: TokenRegistry },
    Ecash { issuer: Issuer, purses: BTreeMap<String, Vec<Coin>>, last_paid: Option<Coin>, rng: ChaCha20Rng },
}

struct Run<'a> {
    scenario: &'a Scenario,
    seed: u64,
    keys: BTreeMap<&'a str, KeyPair>,
    ledger: Ledger,
    produced: Vec<Option<Produced>>,
}

/// Files produced by a run, keyed by file name.
pub type Outputs = BTreeMap<String, String>;

pub fn run_scenario(scenario: &Scenario, seed: u64, crypto: CryptoMode) -> Result<Outputs, ExecError> {
    let keys = scenario
        .participants
        .iter()
        .map(|p| (p.as_str(), crypto.keygen(format!("scenario/{seed}/participant/{p}").as_bytes())))
        .collect();
    let ledger = match scenario.kernel {
        KernelChoice::Utxo => {
            let issuer = crypto.keygen(format!("scenario/{seed}/issuer/{}", scenario.issuer).as_bytes());
            Ledger::Utxo { state: Chainstate::new(issuer.public.clone()), issuer }
        }
        KernelChoice::Account => Ledger::Account { state: AccountState::new(), mode: ReplayMode::Naive },
        KernelChoice::AccountNonce => Ledger::Account { state: AccountState::new(), mode: ReplayMode::NonceProtected },
        KernelChoice::Token => Ledger::Token { registry: TokenRegistry::new() },
        KernelChoice::Ecash => {
            let keys = issuer_setup(&scenario.denominations, format!("scenario/{seed}/mint").as_bytes(), crypto)
                .expect("denominations validated");
            Ledger::Ecash {
                issuer: Issuer::new(keys),
                purses: BTreeMap::new(),
                last_paid: None,
                rng: ChaCha20Rng::seed_from_u64(seed),
            }
        }
    };
    let mut run = Run { scenario, seed, keys, ledger, produced: Vec::new() };
    let mut records = Vec::new();
    for (index, action) in scenario.actions.iter().enumerate() {
        let fail = |reason: String| ExecError { index, action: action.name(), reason };
        let (record, produced) = run.step(index, action).map_err(fail)?;
        records.push(ActionRecord { index, action: action.name(), ..record });
        run.produced.push(produced);
    }
    Ok(run.outputs(crypto, records))
}

fn err(e: impl ToString) -> String {
    e.to_string()
}

impl Run<'_> {
    fn key(&self, name: &str) -> &KeyPair {
        &self.keys[name]
    }

    fn addr(&self, name: &str) -> UserId {
        self.key(name).address()
    }

    fn step(&mut self, index: usize, action: &Action) -> Result<(ActionRecord, Option<Produced>), String> {
        let mut rec = ActionRecord { submitted: 1, accepted: 1, ..Default::default() };
        let mut produced = None;
        match action {
            Action::Issue { to, amount, token } => {
                let to = self.addr(to);
                match &mut self.ledger {
                    Ledger::Utxo { state, issuer } => {
                        let tx = state.issue_mut(vec![p2pkh_output(*amount, &to)], issuer).map_err(err)?;
                        rec.txids.push(tx.txid());
                    }
                    Ledger::Account { state, .. } => state.mint_mut(to, *amount).map_err(err)?,
                    Ledger::Token { registry } => {
                        let id = TokenId::new(token.clone().expect("validated"));
                        registry.issue_mut(id, *amount, to).map_err(err)?;
                    }
                    Ledger::Ecash { .. } => unreachable!("validated"),
                }
            }
            Action::Pay { from, to, amount, token, denomination } => {
                let (payer, payee) = (self.key(from).clone(), self.addr(to));
                match &mut self.ledger {
                    Ledger::Utxo { state, .. } => {
                        let tx = build_payment(state, &payer, payee, amount.expect("validated")).map_err(err)?;
                        state.apply_mut(&tx).map_err(err)?;
                        rec.txids.push(tx.txid());
                        produced = Some(Produced::Utxo(tx));
                    }
                    Ledger::Account { state, mode } => {
                        let nonce = (*mode == ReplayMode::NonceProtected).then(|| state.nonce(&payer.address()));
                        let tx = AccountTx::signed(&payer, payee, amount.expect("validated"), nonce);
                        state.apply_mut(&tx, *mode).map_err(err)?;
                        rec.txids.push(tx.txid());
                        produced = Some(Produced::Account(tx));
                    }
                    Ledger::Token { registry } => {
                        let token = TokenId::new(token.clone().expect("validated"));
                        registry.transfer_mut(&TokenTransfer { payer: payer.address(), payee, token }).map_err(err)?;
                    }
                    Ledger::Ecash { issuer, purses, last_paid, .. } => {
                        let coin = take_coin(purses, from, denomination.expect("validated"))?;
                        let outcome = pay(issuer, coin.clone());
                        record_redemption(&mut rec, outcome);
                        *last_paid = Some(coin);
                    }
                }
            }
            Action::Split { from, to, amount } => {
                let (payer, payee) = (self.key(from).clone(), self.addr(to));
                let Ledger::Utxo { state, .. } = &mut self.ledger else { unreachable!("validated") };
                let tx = split_from(state, &payer, payee, *amount)?;
                state.apply_mut(&tx).map_err(err)?;
                rec.txids.push(tx.txid());
                produced = Some(Produced::Utxo(tx));
            }
            Action::Merge { from, to } => {
                let (payer, payee) = (self.key(from).clone(), self.addr(to));
                let Ledger::Utxo { state, .. } = &mut self.ledger else { unreachable!("validated") };
                let ids: Vec<_> = state.utxos_of(&payer.address()).into_iter().map(|(id, _)| id).collect();
                if ids.is_empty() {
                    return Err(format!("{from} owns no outputs"));
                }
                let tx = build_merge(state, &ids, &payer, payee).map_err(err)?;
                state.apply_mut(&tx).map_err(err)?;
                rec.txids.push(tx.txid());
                produced = Some(Produced::Utxo(tx));
            }
            Action::Withdraw { by, denomination } => {
                let Ledger::Ecash { issuer, purses, rng, .. } = &mut self.ledger else { unreachable!("validated") };
                let coin = withdraw(issuer, *denomination, rng).map_err(err)?;
                purses.entry(by.clone()).or_default().push(coin);
            }
            Action::Redeem { by, denomination } => {
                let Ledger::Ecash { issuer, purses, last_paid, .. } = &mut self.ledger else {
                    unreachable!("validated")
                };
                let coin = take_coin(purses, by, *denomination)?;
                record_redemption(&mut rec, issuer.redeem(&coin));
                *last_paid = Some(coin);
            }
            Action::Replay { index: target, times } => {
                let original = self.produced[*target].clone().expect("validated replayable");
                rec.submitted = *times;
                rec.accepted = 0;
                match (&mut self.ledger, original) {
                    (Ledger::Utxo { state, .. }, Produced::Utxo(tx)) => {
                        let before = state.clone();
                        for _ in 0..*times {
                            rec.txids.push(tx.txid());
                            match state.apply_mut(&tx) {
                                Ok(()) => rec.accepted += 1,
                                Err(e) => rec.rejections.push(e.to_string()),
                            }
                        }
                        rec.final_state_matches_single = Some(*state == before);
                    }
                    (Ledger::Account { state, mode }, Produced::Account(tx)) => {
                        let before = state.clone();
                        for _ in 0..*times {
                            rec.txids.push(tx.txid());
                            match state.apply_mut(&tx, *mode) {
                                Ok(()) => rec.accepted += 1,
                                Err(e) => rec.rejections.push(e.to_string()),
                            }
                        }
                        rec.final_state_matches_single = Some(*state == before);
                    }
                    _ => unreachable!("replay targets match the kernel"),
                }
                let outcome = if rec.accepted > 0 { FraudOutcome::Succeeded } else { FraudOutcome::Prevented };
                rec.outcome = Some(outcome);
            }
            Action::DoubleSpend { from, to, amount } => {
                rec.submitted = 2;
                rec.accepted = 0;
                match &mut self.ledger {
                    Ledger::Utxo { state, .. } => {
                        let payer = self.keys[from.as_deref().expect("validated")].clone();
                        let amount = amount.expect("validated");
                        let first = split_from(state, &payer, self.keys[to[0].as_str()].address(), amount)?;
                        let coin = first.inputs[0].outpoint;
                        let second = build_split(state, coin, &payer, self.keys[to[1].as_str()].address(), amount)
                            .map_err(err)?;
                        for tx in [first, second] {
                            rec.txids.push(tx.txid());
                            match state.apply_mut(&tx) {
                                Ok(()) => rec.accepted += 1,
                                Err(e) => rec.rejections.push(e.to_string()),
                            }
                        }
                        rec.outcome = Some(if rec.accepted > 1 { FraudOutcome::Succeeded } else { FraudOutcome::Prevented });
                    }
                    Ledger::Account { state, mode } => {
                        let payer = &self.keys[from.as_deref().expect("validated")];
                        for payee in to {
                            let nonce = (*mode == ReplayMode::NonceProtected).then(|| state.nonce(&payer.address()));
                            let tx = AccountTx::signed(payer, self.keys[payee.as_str()].address(), amount.expect("validated"), nonce);
                            rec.txids.push(tx.txid());
                            match state.apply_mut(&tx, *mode) {
                                Ok(()) => rec.accepted += 1,
                                Err(e) => rec.rejections.push(e.to_string()),
                            }
                        }
                        rec.outcome = Some(if rec.accepted > 1 {
                            FraudOutcome::Succeeded
                        } else {
                            FraudOutcome::PreventedByBalance
                        });
                    }
                    Ledger::Ecash { issuer, last_paid, .. } => {
                        let coin = last_paid.clone().ok_or("no coin has been deposited yet")?;
                        rec.submitted = 1;
                        record_redemption(&mut rec, issuer.redeem(&coin));
                        rec.outcome = Some(if rec.accepted > 0 { FraudOutcome::Succeeded } else { FraudOutcome::Prevented });
                    }
                    Ledger::Token { .. } => unreachable!("validated"),
                }
            }
            Action::BroadcastRound { from, to, amount, replicas, rule } => {
                let payer = self.key(from).clone();
                let payees: Vec<UserId> = to.iter().map(|t| self.addr(t)).collect();
                let Ledger::Utxo { state, .. } = &self.ledger else { unreachable!("validated") };
                let first = split_from(state, &payer, payees[0], *amount)?;
                let second =
                    build_split(state, first.inputs[0].outpoint, &payer, payees[1], *amount).map_err(err)?;
                let txs = [first, second];
                let rule = match rule {
                    RoundRule::Arrival => OrderingRule::Arrival,
                    RoundRule::CanonicalTxid => OrderingRule::CanonicalTxid,
                };
                let schedule = ScheduleSeed(self.seed.wrapping_add(index as u64));
                let (report, _) = run_round(state, &txs, *replicas, schedule, rule);
                rec.submitted = txs.len();
                rec.accepted = report.replicas.iter().map(|r| r.accepted.len()).max().unwrap_or(0);
                rec.txids = txs.iter().map(UtxoTx::txid).collect();
                rec.round = Some(report);
            }
        }
        Ok((rec, produced))
    }

    fn outputs(&self, crypto: CryptoMode, actions: Vec<ActionRecord>) -> Outputs {
        let s = self.scenario;
        let mut out = Outputs::new();
        let (metrics, spent_serials) = match &self.ledger {
            Ledger::Utxo { state, .. } => (Some(measure_state(state)), None),
            Ledger::Account { state, .. } => (Some(measure_state(state)), None),
            Ledger::Token { registry } => (Some(measure_state(registry)), None),
            Ledger::Ecash { issuer, .. } => (None, Some(issuer.spent().len())),
        };
        let report = RunReport {
            schema_version: SCHEMA_VERSION,
            name: &s.name,
            kernel: s.kernel,
            crypto,
            seed: self.seed,
            byte_reproducible: crypto == CryptoMode::Toy,
            participants: self.keys.iter().map(|(n, k)| (*n, k.address())).collect(),
            actions,
            metrics,
            spent_serials,
        };
        out.insert("report.json".into(), to_sorted_json(&report));
        for kind in &s.reports {
            match kind {
                ReportKind::State => {
                    let text = match &self.ledger {
                        Ledger::Utxo { state, .. } => Snapshot::utxo(state).to_json(),
                        Ledger::Account { state, .. } => Snapshot::account(state).to_json(),
                        Ledger::Token { registry } => Snapshot::token(registry).to_json(),
                        Ledger::Ecash { issuer, .. } => to_sorted_json(&serde_json::json!({
                            "schema_version": SCHEMA_VERSION,
                            "kernel": "ecash",
                            "denomination_keys": issuer.keys().public_keys(),
                            "spent_serials": issuer.spent().serials().iter().map(hex::encode).collect::<Vec<_>>(),
                        })),
                    };
                    out.insert("state.json".into(), text);
                }
                ReportKind::Log => {
                    let Ledger::Utxo { state, .. } = &self.ledger else { unreachable!("validated") };
                    out.insert("log.json".into(), LogFile::from_chainstate(state).to_json());
                }
                ReportKind::Tables => {
                    let tables = tables_report(self.seed);
                    out.insert("tables.json".into(), to_sorted_json(&tables));
                    out.insert("tables.txt".into(), render_tables_text(&tables));
                }
                ReportKind::Fraud => {
                    let mut reports = Vec::new();
                    for scenario in [FraudScenario::DoubleSpend, FraudScenario::Replay] {
                        for kernel in [FraudKernel::Utxo, FraudKernel::AccountNaive, FraudKernel::AccountNonce] {
                            reports.push(run_fraud_scenario(scenario, kernel, self.seed).expect("supported kernel"));
                        }
                    }
                    out.insert("fraud.json".into(), to_sorted_json(&reports));
                }
                ReportKind::Traceability => {
                    let report = match &self.ledger {
                        Ledger::Utxo { state, .. } => utxo_traceability(state)
                            .unwrap_or_else(|_| traceability_report(KernelKind::Utxo, self.seed)),
                        Ledger::Account { .. } => traceability_report(KernelKind::Account, self.seed),
                        Ledger::Token { .. } => traceability_report(KernelKind::Token, self.seed),
                        Ledger::Ecash { .. } => unreachable!("validated"),
                    };
                    out.insert("traceability.json".into(), to_sorted_json(&report));
                }
                ReportKind::Growth => {
                    let participants = s.participants.len().max(2);
                    let mut series = BTreeMap::new();
                    for (kernel, kname) in [(GrowthKernel::Account, "account"), (GrowthKernel::Utxo, "utxo")] {
                        for (policy, pname) in [
                            (AddressPolicy::ReuseAddress, "reuse-address"),
                            (AddressPolicy::FreshAddressPerPayment, "fresh-address-per-payment"),
                        ] {
                            let run = pseudonym_growth_with(GROWTH_PAYMENTS, participants, policy, kernel, self.seed)
                                .expect("valid parameters");
                            let counts: Vec<usize> = run.iter().map(|m| m.entry_count).collect();
                            series.insert(format!("{kname}/{pname}"), counts);
                        }
                    }
                    out.insert("growth.json".into(), to_sorted_json(&series));
                }
            }
        }
        out
    }
}

fn take_coin(purses: &mut BTreeMap<String, Vec<Coin>>, who: &str, denomination: Amount) -> Result<Coin, String> {
    let purse = purses.entry(who.to_owned()).or_default();
    let pos = purse
        .iter()
        .position(|c| c.denomination == denomination)
        .ok_or_else(|| format!("{who} holds no coin of denomination {denomination}"))?;
    Ok(purse.remove(pos))
}

fn record_redemption(rec: &mut ActionRecord, outcome: Redemption) {
    rec.accepted = usize::from(outcome.is_accept());
    if let Redemption::Reject(reason) = outcome {
        rec.rejections.push(format!("{reason:?}"));
    }
    rec.redemptions.push(outcome);
}

/// Splits the payer's first output that is large enough.
fn split_from(state: &Chainstate, payer: &KeyPair, payee: UserId, amount: Amount) -> Result<UtxoTx, String> {
    let (coin, _) = state
        .utxos_of(&payer.address())
        .into_iter()
        .find(|(_, o)| o.value > amount)
        .ok_or_else(|| format!("no single output larger than {amount}"))?;
    build_split(state, coin, payer, payee, amount).map_err(err)
}
