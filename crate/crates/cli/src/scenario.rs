//! Scenario files: a kernel, some named participants and an ordered list of
//! actions to run against a fresh ledger.

use std::collections::BTreeSet;

use ledgerlab::{Amount, CryptoMode};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    Utxo,
    Account,
    AccountNonce,
    Token,
    Ecash,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    State,
    Log,
    Tables,
    Fraud,
    Traceability,
    Growth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundRule {
    #[default]
    Arrival,
    CanonicalTxid,
}

fn default_times() -> usize {
    3
}

fn default_replicas() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Action {
    /// Creates value for `to`. On the token kernel `token` names the object.
    Issue {
        to: String,
        amount: Amount,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        token: Option<String>,
    },
    Pay {
        from: String,
        to: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amount: Option<Amount>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        token: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        denomination: Option<Amount>,
    },
    Split { from: String, to: String, amount: Amount },
    Merge { from: String, to: String },
    Withdraw { by: String, denomination: Amount },
    Redeem { by: String, denomination: Amount },
    /// Resubmits the transaction produced by action `index`.
    Replay {
        index: usize,
        #[serde(default = "default_times")]
        times: usize,
    },
    /// Two transactions spending the same value to two payees. On the e-cash
    /// kernel the last paid coin is deposited again.
    DoubleSpend {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<String>,
        #[serde(default)]
        to: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amount: Option<Amount>,
    },
    /// Broadcasts two conflicting splits to a group of replicas.
    BroadcastRound {
        from: String,
        to: Vec<String>,
        amount: Amount,
        #[serde(default = "default_replicas")]
        replicas: usize,
        #[serde(default)]
        rule: RoundRule,
    },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Issue { .. } => "issue",
            Action::Pay { .. } => "pay",
            Action::Split { .. } => "split",
            Action::Merge { .. } => "merge",
            Action::Withdraw { .. } => "withdraw",
            Action::Redeem { .. } => "redeem",
            Action::Replay { .. } => "replay",
            Action::DoubleSpend { .. } => "double-spend",
            Action::BroadcastRound { .. } => "broadcast-round",
        }
    }

    fn names(&self) -> Vec<&str> {
        match self {
            Action::Issue { to, .. } => vec![to],
            Action::Pay { from, to, .. } | Action::Split { from, to, .. } | Action::Merge { from, to } => {
                vec![from, to]
            }
            Action::Withdraw { by, .. } | Action::Redeem { by, .. } => vec![by],
            Action::Replay { .. } => vec![],
            Action::DoubleSpend { from, to, .. } => from.iter().chain(to).map(String::as_str).collect(),
            Action::BroadcastRound { from, to, .. } => std::iter::once(from).chain(to).map(String::as_str).collect(),
        }
    }

    /// Whether the action leaves a single transaction that can be replayed.
    fn replayable(&self) -> bool {
        matches!(self, Action::Pay { .. } | Action::Split { .. } | Action::Merge { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub kernel: KernelChoice,
    #[serde(default)]
    pub crypto: CryptoMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_issuer")]
    pub issuer: String,
    pub participants: Vec<String>,
    #[serde(default)]
    pub denominations: Vec<Amount>,
    #[serde(default)]
    pub actions: Vec<Action>,
    #[serde(default)]
    pub reports: Vec<ReportKind>,
}

fn default_issuer() -> String {
    "issuer".into()
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}, expected {SCHEMA_VERSION}")]
    SchemaVersion(u32),
    #[error("{0}")]
    Invalid(String),
    #[error("action {index} ({action}): {reason}")]
    InvalidAction { index: usize, action: &'static str, reason: String },
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::SchemaVersion(self.schema_version));
        }
        let mut names = BTreeSet::new();
        for p in &self.participants {
            if p.is_empty() || !names.insert(p.as_str()) {
                return Err(ScenarioError::Invalid(format!("participant name {p:?} is empty or repeated")));
            }
        }
        if self.kernel == KernelChoice::Ecash {
            if self.denominations.is_empty() {
                return Err(ScenarioError::Invalid("the ecash kernel needs at least one denomination".into()));
            }
            let distinct: BTreeSet<_> = self.denominations.iter().collect();
            if distinct.len() != self.denominations.len() || self.denominations.iter().any(|d| d.is_zero()) {
                return Err(ScenarioError::Invalid("denominations must be positive and distinct".into()));
            }
        }
        for report in &self.reports {
            let ok = match report {
                ReportKind::Log => self.kernel == KernelChoice::Utxo,
                ReportKind::Traceability => self.kernel != KernelChoice::Ecash,
                _ => true,
            };
            if !ok {
                return Err(ScenarioError::Invalid(format!("report {report:?} is not available on the {:?} kernel", self.kernel)));
            }
        }
        for (index, action) in self.actions.iter().enumerate() {
            let fail = |reason: String| ScenarioError::InvalidAction { index, action: action.name(), reason };
            for n in action.names() {
                if !names.contains(n) {
                    return Err(fail(format!("unknown participant {n:?}")));
                }
            }
            self.check_action(index, action).map_err(fail)?;
        }
        Ok(())
    }

    fn check_action(&self, index: usize, action: &Action) -> Result<(), String> {
        use KernelChoice::*;
        let kernel = self.kernel;
        let supported = match action {
            Action::Issue { .. } | Action::Pay { .. } | Action::DoubleSpend { .. } => true,
            Action::Split { .. } | Action::Merge { .. } | Action::BroadcastRound { .. } => kernel == Utxo,
            Action::Withdraw { .. } | Action::Redeem { .. } => kernel == Ecash,
            Action::Replay { .. } => matches!(kernel, Utxo | Account | AccountNonce),
        };
        if !supported {
            return Err(format!("not available on the {kernel:?} kernel"));
        }
        let positive = |a: &Amount| if a.is_zero() { Err("amount must be positive".to_string()) } else { Ok(()) };
        let denomination = |d: &Amount| {
            if self.denominations.contains(d) {
                Ok(())
            } else {
                Err(format!("denomination {d} is not configured"))
            }
        };
        match action {
            Action::Issue { amount, token, .. } => {
                positive(amount)?;
                match (kernel, token) {
                    (Token, None) => return Err("token issuance needs a token id".into()),
                    (Ecash, _) => return Err("e-cash value is created by withdraw".into()),
                    _ => {}
                }
            }
            Action::Pay { amount, token, denomination: d, .. } => match kernel {
                Token if token.is_none() => return Err("token payment needs a token id".into()),
                Ecash => denomination(d.as_ref().ok_or("e-cash payment needs a denomination")?)?,
                Utxo | Account | AccountNonce => positive(amount.as_ref().ok_or("payment needs an amount")?)?,
                _ => {}
            },
            Action::Split { amount, .. } => positive(amount)?,
            Action::Withdraw { denomination: d, .. } | Action::Redeem { denomination: d, .. } => denomination(d)?,
            Action::Replay { index: target, times } => {
                if *target >= index {
                    return Err(format!("replay must refer to an earlier action, got {target}"));
                }
                if !self.actions[*target].replayable() {
                    return Err(format!("action {target} does not produce a replayable transaction"));
                }
                if *times == 0 {
                    return Err("times must be positive".into());
                }
            }
            Action::DoubleSpend { from, to, amount } => {
                if kernel == Token {
                    return Err("double spending is not defined for the token registry".into());
                }
                if kernel != Ecash {
                    if from.is_none() || to.len() != 2 {
                        return Err("double spend needs a payer and exactly two payees".into());
                    }
                    positive(amount.as_ref().ok_or("double spend needs an amount")?)?;
                }
            }
            Action::BroadcastRound { to, amount, replicas, .. } => {
                positive(amount)?;
                if to.len() != 2 {
                    return Err("a broadcast round needs exactly two conflicting payees".into());
                }
                if *replicas < 2 {
                    return Err("a broadcast round needs at least two replicas".into());
                }
            }
            Action::Merge { .. } => {}
        }
        Ok(())
    }
}
