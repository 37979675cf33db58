use serde::{Deserialize, Serialize};

use super::{measure_state, AnalysisError, StateMetrics};
use crate::account::{AccountState, AccountTx, ReplayMode};
use crate::amount::Amount;
use crate::crypto::{keygen, KeyPair};
use crate::utxo::{build_split_to, p2pkh_output, Chainstate, UtxoId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AddressPolicy {
    ReuseAddress,
    FreshAddressPerPayment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthKernel {
    Account,
    Utxo,
}

/// Two participants paying each other in turn. See [`pseudonym_growth_with`].
pub fn pseudonym_growth_experiment(
    n_payments: usize,
    policy: AddressPolicy,
    kernel: GrowthKernel,
) -> Result<Vec<StateMetrics>, AnalysisError> {
    pseudonym_growth_with(n_payments, 2, policy, kernel, 0)
}

/// Runs `n_payments` unit payments round-robin among `participants` and
/// returns the state size before the first payment and after each one.
///
/// Under the fresh-address policy every payment goes to a newly generated
/// address of the payee, and on the UTXO kernel the change also goes to a
/// fresh address of the payer.
pub fn pseudonym_growth_with(
    n_payments: usize,
    participants: usize,
    policy: AddressPolicy,
    kernel: GrowthKernel,
    seed: u64,
) -> Result<Vec<StateMetrics>, AnalysisError> {
    if n_payments == 0 {
        return Err(AnalysisError::InvalidParameter("at least one payment is required"));
    }
    if participants < 2 {
        return Err(AnalysisError::InvalidParameter("at least two participants are required"));
    }
    let primary: Vec<KeyPair> =
        (0..participants).map(|i| keygen(format!("growth/{seed}/participant/{i}").as_bytes())).collect();
    let fresh = |who: usize, k: usize, role: &str| keygen(format!("growth/{seed}/{who}/{role}/{k}").as_bytes());
    let funding = Amount::new(n_payments as u64 + 1);

    let mut series = Vec::with_capacity(n_payments + 1);
    match kernel {
        GrowthKernel::Account => {
            let mut state = AccountState::new();
            for kp in &primary {
                state.mint_mut(kp.address(), funding).expect("funding fits");
            }
            series.push(measure_state(&state));
            for k in 0..n_payments {
                let (payer, payee) = (k % participants, (k + 1) % participants);
                let to = match policy {
                    AddressPolicy::ReuseAddress => primary[payee].address(),
                    AddressPolicy::FreshAddressPerPayment => fresh(payee, k, "receive").address(),
                };
                let tx = AccountTx::signed(&primary[payer], to, Amount::new(1), None);
                state.apply_mut(&tx, ReplayMode::Naive).expect("funded payer");
                series.push(measure_state(&state));
            }
        }
        GrowthKernel::Utxo => {
            let issuer = keygen(format!("growth/{seed}/issuer").as_bytes());
            let mut state = Chainstate::new(issuer.public.clone());
            let outputs = primary.iter().map(|kp| p2pkh_output(funding, &kp.address())).collect();
            let coinbase = state.issue_mut(outputs, &issuer).expect("issuer signs its own coinbase");
            // each participant spends only from its running change output
            let mut wallets: Vec<(UtxoId, KeyPair)> =
                primary.iter().enumerate().map(|(i, kp)| (coinbase.output_id(i as u32), kp.clone())).collect();
            series.push(measure_state(&state));
            for k in 0..n_payments {
                let (payer, payee) = (k % participants, (k + 1) % participants);
                let (to, change) = match policy {
                    AddressPolicy::ReuseAddress => (primary[payee].address(), wallets[payer].1.clone()),
                    AddressPolicy::FreshAddressPerPayment => {
                        (fresh(payee, k, "receive").address(), fresh(payer, k, "change"))
                    }
                };
                let (outpoint, key) = &wallets[payer];
                let tx = build_split_to(&state, *outpoint, key, to, Amount::new(1), change.address())
                    .expect("change output covers a unit payment");
                state.apply_mut(&tx).expect("wallet builds valid transfers");
                wallets[payer] = (tx.output_id(1), change);
                series.push(measure_state(&state));
            }
        }
    }
    Ok(series)
}
