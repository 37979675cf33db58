//! Plain-text rendering for `inspect` and `trace`.

use std::collections::BTreeSet;

use ledgerlab::analysis::{LineageChain, StepCheck};
use ledgerlab::script::Template;
use ledgerlab::snapshot::{Snapshot, SnapshotBody};
use ledgerlab::utxo::{TxKind, TxOut};

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_owned() + "\n"
    };
    let mut out = line(header.to_vec());
    out += &line(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for row in rows {
        out += &line(row.iter().map(String::as_str).collect());
    }
    out
}

fn lock(out: &TxOut) -> String {
    match out.locking.template() {
        Template::PayToPublicKeyHash(d) => format!("owner:{d}"),
        Template::PayToHash(d) => format!("hash:{d}"),
        Template::NonStandard => out.locking.to_string(),
    }
}

/// Rows sorted by identifier.
pub fn snapshot_table(snapshot: &Snapshot) -> String {
    match &snapshot.body {
        SnapshotBody::Account(state) => {
            let users: BTreeSet<_> = state.balances().keys().chain(state.nonces().keys()).collect();
            let rows: Vec<Vec<String>> = users
                .into_iter()
                .map(|u| vec![u.to_string(), state.balance(u).to_string(), state.nonce(u).to_string()])
                .collect();
            table(&["account", "balance", "nonce"], &rows)
        }
        SnapshotBody::Token(registry) => {
            let rows: Vec<Vec<String>> = registry
                .objects()
                .iter()
                .map(|(id, e)| vec![id.to_string(), e.value.to_string(), e.owner.to_string()])
                .collect();
            table(&["token", "value", "owner"], &rows)
        }
        SnapshotBody::Utxo { active, .. } => {
            let rows: Vec<Vec<String>> =
                active.iter().map(|(id, o)| vec![id.to_string(), o.value.to_string(), lock(o)]).collect();
            table(&["utxo", "value", "lock"], &rows)
        }
    }
}

pub fn trace_text(chain: &LineageChain, checks: &[StepCheck]) -> String {
    let mut out = format!("target {}\n", chain.target);
    for (step, check) in chain.steps.iter().zip(checks) {
        let kind = match step.kind {
            TxKind::Coinbase => "coinbase",
            TxKind::Normal => "transfer",
        };
        let consumed = step.consumed.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
        let status = match &check.failure {
            None => "verified".to_owned(),
            Some(why) => format!("FAILED ({why})"),
        };
        out += &format!(
            "step {}  log {}  {kind}  txid {}  produces {}  consumes {consumed}  {status}\n",
            check.step, step.log_index, step.txid, step.produced
        );
    }
    out += &format!("terminal coinbase {}\n", chain.terminal);
    out
}
