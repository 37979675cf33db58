use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{
    pseudonym_growth_with, run_fraud_scenario, traceability_report, AddressPolicy, FraudKernel, FraudOutcome,
    FraudReport, FraudScenario, GrowthKernel, KernelKind, StateMetrics, TraceabilityReport,
};
use crate::account::AccountState;
use crate::amount::Amount;
use crate::crypto::{keygen, CryptoMode};
use crate::ecash::{issuer_setup, pay, withdraw, Issuer, Redemption};
use crate::snapshot::SCHEMA_VERSION;
use crate::utxo::{p2pkh_output, Chainstate};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateRow {
    pub utxo: StateMetrics,
    pub account: StateMetrics,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuanceRow {
    pub utxo: FraudOutcome,
    pub utxo_detail: String,
    pub account: FraudOutcome,
    pub account_supply_created: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubleSpendRow {
    pub utxo: FraudReport,
    pub account: FraudReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayRow {
    pub utxo: FraudReport,
    pub account_naive: FraudReport,
    pub account_nonce: FraudReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceabilityRow {
    pub utxo: TraceabilityReport,
    pub account: TraceabilityReport,
    pub token: TraceabilityReport,
}

/// Extra state entries caused by switching from address reuse to a fresh
/// address per payment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub payments: usize,
    pub participants: usize,
    pub account_reuse: usize,
    pub account_fresh: usize,
    pub utxo_reuse: usize,
    pub utxo_fresh: usize,
}

impl GrowthRow {
    pub fn account_extra(&self) -> usize {
        self.account_fresh - self.account_reuse
    }

    pub fn utxo_extra(&self) -> usize {
        self.utxo_fresh.saturating_sub(self.utxo_reuse)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EcashRow {
    pub first_deposit: Redemption,
    pub second_deposit: Redemption,
    pub double_deposit: FraudOutcome,
    /// No blinded value or blinded signature seen at withdrawal equals the
    /// serial or signature later presented for deposit.
    pub transcript_unlinkable: bool,
    /// The coin is a bearer token, but redemption consults the issuer's
    /// spent list, which is a ledger.
    pub classification: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TablesReport {
    pub schema_version: u32,
    pub seed: u64,
    pub state: StateRow,
    pub issuance_by_intermediary: IssuanceRow,
    pub double_spend: DoubleSpendRow,
    pub replay: ReplayRow,
    pub traceability: TraceabilityRow,
    pub anonymity_growth: GrowthRow,
    pub ecash: EcashRow,
}

const PAYMENTS: usize = 20;
const PARTICIPANTS: usize = 3;

/// Runs every scenario behind the comparison tables. Deterministic in `seed`.
pub fn tables_report(seed: u64) -> TablesReport {
    let growth = |policy, kernel| {
        pseudonym_growth_with(PAYMENTS, PARTICIPANTS, policy, kernel, seed).expect("valid parameters")
    };
    let utxo_reuse = growth(AddressPolicy::ReuseAddress, GrowthKernel::Utxo);
    let account_reuse = growth(AddressPolicy::ReuseAddress, GrowthKernel::Account);
    let utxo_fresh = growth(AddressPolicy::FreshAddressPerPayment, GrowthKernel::Utxo);
    let account_fresh = growth(AddressPolicy::FreshAddressPerPayment, GrowthKernel::Account);
    let last = |s: &[StateMetrics]| *s.last().expect("non-empty series");

    let fraud = |s, k| run_fraud_scenario(s, k, seed).expect("supported kernel");

    TablesReport {
        schema_version: SCHEMA_VERSION,
        seed,
        state: StateRow { utxo: last(&utxo_reuse), account: last(&account_reuse) },
        issuance_by_intermediary: issuance(seed),
        double_spend: DoubleSpendRow {
            utxo: fraud(FraudScenario::DoubleSpend, FraudKernel::Utxo),
            account: fraud(FraudScenario::DoubleSpend, FraudKernel::AccountNaive),
        },
        replay: ReplayRow {
            utxo: fraud(FraudScenario::Replay, FraudKernel::Utxo),
            account_naive: fraud(FraudScenario::Replay, FraudKernel::AccountNaive),
            account_nonce: fraud(FraudScenario::Replay, FraudKernel::AccountNonce),
        },
        traceability: TraceabilityRow {
            utxo: traceability_report(KernelKind::Utxo, seed),
            account: traceability_report(KernelKind::Account, seed),
            token: traceability_report(KernelKind::Token, seed),
        },
        anonymity_growth: GrowthRow {
            payments: PAYMENTS,
            participants: PARTICIPANTS,
            account_reuse: last(&account_reuse).entry_count,
            account_fresh: last(&account_fresh).entry_count,
            utxo_reuse: last(&utxo_reuse).entry_count,
            utxo_fresh: last(&utxo_fresh).entry_count,
        },
        ecash: ecash(seed),
    }
}

/// An operator without the issuer key tries to create value.
fn issuance(seed: u64) -> IssuanceRow {
    let issuer = keygen(format!("tables/{seed}/issuer").as_bytes());
    let operator = keygen(format!("tables/{seed}/operator").as_bytes());
    let target = keygen(format!("tables/{seed}/beneficiary").as_bytes()).address();
    let minted = Amount::new(1_000);

    let utxo = Chainstate::new(issuer.public.clone()).issue(vec![p2pkh_output(minted, &target)], &operator);
    let (utxo, utxo_detail) = match utxo {
        Err(e) => (FraudOutcome::Prevented, e.to_string()),
        Ok(_) => (FraudOutcome::Succeeded, "operator issuance accepted".into()),
    };
    let account = AccountState::new().mint(target, minted);
    let (account, account_supply_created) = match account {
        Ok(s) => (FraudOutcome::Succeeded, s.total_supply()),
        Err(_) => (FraudOutcome::Prevented, 0),
    };
    IssuanceRow { utxo, utxo_detail, account, account_supply_created }
}

fn ecash(seed: u64) -> EcashRow {
    let denomination = Amount::new(10);
    let keys = issuer_setup(&[denomination], format!("tables/{seed}/mint").as_bytes(), CryptoMode::Toy)
        .expect("one positive denomination");
    let issuer = Issuer::new(keys);
    let mut wallet = ChaCha20Rng::seed_from_u64(seed);
    let coin = withdraw(&issuer, denomination, &mut wallet).expect("known denomination");
    let first_deposit = pay(&issuer, coin.clone());
    let second_deposit = pay(&issuer, coin.clone());
    let double_deposit =
        if second_deposit.is_accept() { FraudOutcome::Succeeded } else { FraudOutcome::Prevented };
    let transcript_unlinkable = issuer.transcript().iter().all(|t| {
        t.blinded.as_bytes() != coin.serial.as_slice() && t.blinded_signature.as_bytes() != coin.signature.as_bytes()
    });
    EcashRow {
        first_deposit,
        second_deposit,
        double_deposit,
        transcript_unlinkable,
        classification: vec!["token (bearer coin)".into(), "ledger (issuer spent list)".into()],
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn table(out: &mut String, title: &str, header: &[&str], rows: &[Vec<String>]) {
    let cols = header.len();
    let mut width = header.iter().map(|h| h.len()).collect::<Vec<_>>();
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let rule: String = width.iter().map(|w| format!("+{}", "-".repeat(w + 2))).collect::<String>() + "+\n";
    let line = |cells: &[String]| {
        (0..cols).map(|i| format!("| {:<w$} ", cells[i], w = width[i])).collect::<String>() + "|\n"
    };
    let _ = writeln!(out, "{title}");
    out.push_str(&rule);
    out.push_str(&line(&header.iter().map(|h| h.to_string()).collect::<Vec<_>>()));
    out.push_str(&rule);
    for row in rows {
        out.push_str(&line(row));
    }
    out.push_str(&rule);
}

/// Plain-text rendering: a UTXO vs account comparison and a three-way
/// design table including e-cash.
pub fn render_tables_text(r: &TablesReport) -> String {
    let mut out = String::new();
    let utxo_chain = match &r.traceability.utxo.evidence {
        super::TraceEvidence::Chain { chain } => chain.len(),
        _ => 0,
    };
    let replay = &r.replay;
    let debited = |f: &FraudReport| f.payer_funds_before.value() - f.payer_funds_after.value();
    let g = &r.anonymity_growth;
    let anonymity = |extra: usize| if extra > 0 { "high" } else { "low" };

    let rows = vec![
        vec![
            "state representation".into(),
            format!("active outputs with owners ({})", r.state.utxo.entry_count),
            format!("accounts with balances ({})", r.state.account.entry_count),
        ],
        vec![
            "size of database".into(),
            format!(
                "{} active outputs, {} log entries",
                r.state.utxo.entry_count,
                r.state.utxo.log_length.unwrap_or_default()
            ),
            format!("{} accounts", r.state.account.entry_count),
        ],
        vec![
            "issuance by intermediary".into(),
            format!("{} (issuer signature required)", r.issuance_by_intermediary.utxo.as_str()),
            format!(
                "{} ({} units created)",
                r.issuance_by_intermediary.account.as_str(),
                r.issuance_by_intermediary.account_supply_created
            ),
        ],
        vec![
            "double spending by owner".into(),
            r.double_spend.utxo.outcome.as_str().into(),
            r.double_spend.account.outcome.as_str().into(),
        ],
        vec![
            "replay by intermediary".into(),
            format!("{} (state as after one submission)", replay.utxo.outcome.as_str()),
            format!(
                "{} ({} of {} accepted, debited {}); with nonces: {}",
                replay.account_naive.outcome.as_str(),
                replay.account_naive.accepted,
                replay.account_naive.submissions,
                debited(&replay.account_naive),
                replay.account_nonce.outcome.as_str()
            ),
        ],
        vec![
            "transaction traceability".into(),
            format!("{} ({utxo_chain} steps to coinbase)", yes_no(r.traceability.utxo.traceable)),
            format!("{} (1-payment and 3-payment histories identical)", yes_no(r.traceability.account.traceable)),
        ],
    ];
    table(&mut out, "UTXO-based vs account-based", &["property", "UTXO-based", "account-based"], &rows);
    out.push('\n');

    let rows = vec![
        vec![
            "transaction traceability".into(),
            yes_no(r.traceability.account.traceable).into(),
            yes_no(r.traceability.utxo.traceable).into(),
            yes_no(r.traceability.token.traceable).into(),
        ],
        vec![
            format!("anonymity cost ({} payments, fresh addresses)", g.payments),
            format!("{} (+{} entries vs reuse)", anonymity(g.account_extra()), g.account_extra()),
            format!("{} (+{} entries vs reuse)", anonymity(g.utxo_extra()), g.utxo_extra()),
            format!("low (blind issuance, unlinkable: {})", yes_no(r.ecash.transcript_unlinkable)),
        ],
        vec![
            "double spending".into(),
            r.double_spend.account.outcome.as_str().into(),
            r.double_spend.utxo.outcome.as_str().into(),
            format!("{} (second deposit rejected)", r.ecash.double_deposit.as_str()),
        ],
        vec![
            "intermediary required".into(),
            "yes (operator applies transfers)".into(),
            "yes (validator checks spent set)".into(),
            "yes (issuer checks spent list)".into(),
        ],
    ];
    table(&mut out, "Design issues", &["issue", "account-based", "UTXO-based", "token-based (e-cash)"], &rows);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_is_deterministic_and_matches_expectations() {
        let r = tables_report(1);
        assert_eq!(r, tables_report(1));
        assert_eq!(r.issuance_by_intermediary.utxo, FraudOutcome::Prevented);
        assert_eq!(r.issuance_by_intermediary.account, FraudOutcome::Succeeded);
        assert_eq!(r.double_spend.utxo.outcome, FraudOutcome::Prevented);
        assert_eq!(r.double_spend.account.outcome, FraudOutcome::PreventedByBalance);
        assert_eq!(r.replay.account_naive.outcome, FraudOutcome::Succeeded);
        assert_eq!(r.anonymity_growth.account_extra(), PAYMENTS);
        assert_eq!(r.anonymity_growth.utxo_extra(), 0);
        assert_eq!(r.ecash.double_deposit, FraudOutcome::Prevented);
        assert!(r.ecash.first_deposit.is_accept());
        let text = render_tables_text(&r);
        assert!(text.contains("n/a-prevented-by-balance"));
        assert!(text.contains("token-based (e-cash)"));
    }
}
