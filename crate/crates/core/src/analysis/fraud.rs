use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::account::{AccountState, AccountTx, ReplayMode};
use crate::amount::Amount;
use crate::crypto::{keygen, Digest};
use crate::utxo::{build_split, p2pkh_output, Chainstate};

/// How many times the replay scenario submits the same transaction.
pub const REPLAY_SUBMISSIONS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FraudScenario {
    /// The owner signs two transactions spending the same value to different payees.
    DoubleSpend,
    /// The intermediary resubmits one signed transaction several times.
    Replay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FraudKernel {
    Utxo,
    AccountNaive,
    AccountNonce,
    Token,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FraudOutcome {
    #[serde(rename = "prevented")]
    Prevented,
    #[serde(rename = "succeeded")]
    Succeeded,
    /// The second spend failed, but only because the balance ran out.
    #[serde(rename = "n/a-prevented-by-balance")]
    PreventedByBalance,
}

impl FraudOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            FraudOutcome::Prevented => "prevented",
            FraudOutcome::Succeeded => "succeeded",
            FraudOutcome::PreventedByBalance => "n/a-prevented-by-balance",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FraudReport {
    pub scenario: FraudScenario,
    pub kernel: FraudKernel,
    pub seed: u64,
    pub outcome: FraudOutcome,
    pub amount: Amount,
    pub payer_funds_before: Amount,
    pub payer_funds_after: Amount,
    pub submissions: usize,
    pub accepted: usize,
    /// Ids of the submitted transactions, in submission order.
    pub evidence: Vec<Digest>,
    pub rejections: Vec<String>,
    /// Whether the final state equals the state after accepting only the
    /// first submission.
    pub final_state_matches_single: bool,
}

pub fn run_fraud_scenario(scenario: FraudScenario, kernel: FraudKernel, seed: u64) -> Result<FraudReport, AnalysisError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let funds = Amount::new(rng.random_range(10..=100));
    let amount = match scenario {
        FraudScenario::Replay => Amount::new(rng.random_range(1..=funds.value() / REPLAY_SUBMISSIONS as u64)),
        FraudScenario::DoubleSpend if kernel == FraudKernel::Utxo => Amount::new(rng.random_range(1..funds.value())),
        FraudScenario::DoubleSpend => funds,
    };
    let ctx = Ctx { scenario, kernel, seed, funds, amount };
    match kernel {
        FraudKernel::Utxo => Ok(ctx.utxo()),
        FraudKernel::AccountNaive => Ok(ctx.account(ReplayMode::Naive)),
        FraudKernel::AccountNonce => Ok(ctx.account(ReplayMode::NonceProtected)),
        FraudKernel::Token => Err(AnalysisError::Unsupported { scenario, kernel }),
    }
}

struct Ctx {
    scenario: FraudScenario,
    kernel: FraudKernel,
    seed: u64,
    funds: Amount,
    amount: Amount,
}

impl Ctx {
    fn key(&self, role: &str) -> crate::crypto::KeyPair {
        keygen(format!("fraud/{}/{role}", self.seed).as_bytes())
    }

    fn report(&self, after: Amount, evidence: Vec<Digest>, accepted: usize, rejections: Vec<String>, single: bool) -> FraudReport {
        let outcome = match self.scenario {
            FraudScenario::Replay if accepted > 1 => FraudOutcome::Succeeded,
            FraudScenario::DoubleSpend if accepted > 1 => FraudOutcome::Succeeded,
            FraudScenario::DoubleSpend if self.kernel != FraudKernel::Utxo => FraudOutcome::PreventedByBalance,
            _ => FraudOutcome::Prevented,
        };
        FraudReport {
            scenario: self.scenario,
            kernel: self.kernel,
            seed: self.seed,
            outcome,
            amount: self.amount,
            payer_funds_before: self.funds,
            payer_funds_after: after,
            submissions: evidence.len(),
            accepted,
            evidence,
            rejections,
            final_state_matches_single: single,
        }
    }

    fn utxo(&self) -> FraudReport {
        let issuer = self.key("issuer");
        let payer = self.key("payer");
        let genesis = Chainstate::new(issuer.public.clone())
            .issue(vec![p2pkh_output(self.funds, &payer.address())], &issuer)
            .expect("issuer signs");
        let coin = genesis.log()[0].output_id(0);
        let txs = match self.scenario {
            FraudScenario::DoubleSpend => ["payee-1", "payee-2"]
                .iter()
                .map(|p| build_split(&genesis, coin, &payer, self.key(p).address(), self.amount).expect("funded"))
                .collect(),
            FraudScenario::Replay => {
                let tx = build_split(&genesis, coin, &payer, self.key("payee-1").address(), self.amount).expect("funded");
                vec![tx; REPLAY_SUBMISSIONS]
            }
        };
        let single = genesis.apply(&txs[0]).expect("first submission is valid");
        let mut state = genesis;
        let mut accepted = 0;
        let mut rejections = Vec::new();
        for tx in &txs {
            match state.apply_mut(tx) {
                Ok(()) => accepted += 1,
                Err(e) => rejections.push(e.to_string()),
            }
        }
        let after: u64 = state.utxos_of(&payer.address()).iter().map(|(_, o)| o.value.value()).sum();
        self.report(Amount::new(after), txs.iter().map(|t| t.txid()).collect(), accepted, rejections, state == single)
    }

    fn account(&self, mode: ReplayMode) -> FraudReport {
        let payer = self.key("payer");
        let nonce = (mode == ReplayMode::NonceProtected).then_some(0);
        let genesis = AccountState::new().mint(payer.address(), self.funds).expect("mint");
        let txs = match self.scenario {
            FraudScenario::DoubleSpend => ["payee-1", "payee-2"]
                .iter()
                .map(|p| AccountTx::signed(&payer, self.key(p).address(), self.amount, nonce))
                .collect(),
            FraudScenario::Replay => {
                vec![AccountTx::signed(&payer, self.key("payee-1").address(), self.amount, nonce); REPLAY_SUBMISSIONS]
            }
        };
        let single = genesis.apply(&txs[0], mode).expect("first submission is valid");
        let mut state = genesis;
        let mut accepted = 0;
        let mut rejections = Vec::new();
        for tx in &txs {
            match state.apply_mut(tx, mode) {
                Ok(()) => accepted += 1,
                Err(e) => rejections.push(e.to_string()),
            }
        }
        let after = state.balance(&payer.address());
        self.report(after, txs.iter().map(AccountTx::txid).collect(), accepted, rejections, state == single)
    }
}
