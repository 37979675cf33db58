//! Transaction builders for the common payment shapes.

use thiserror::Error;

use super::chainstate::Chainstate;
use super::tx::{TxOut, UtxoId, UtxoTx};
use crate::amount::Amount;
use crate::crypto::{Digest, KeyPair, UserId};
use crate::script::{compile_p2h, compile_p2pkh};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalletError {
    #[error("outpoint {0} is not active")]
    UnknownOutpoint(UtxoId),
    #[error("outpoint {0} is not locked to the signing key")]
    NotOwner(UtxoId),
    #[error("insufficient funds: have {available}, need {required}")]
    InsufficientFunds { available: u128, required: Amount },
    #[error("payment amount must be positive")]
    ZeroAmount,
    #[error("split amount {amount} must be below the input value {input}")]
    NotASplit { amount: Amount, input: Amount },
}

pub fn p2pkh_output(value: Amount, owner: &UserId) -> TxOut {
    TxOut { value, locking: compile_p2pkh(owner.digest().as_bytes()).expect("digest has fixed length") }
}

pub fn p2h_output(value: Amount, target: &Digest) -> TxOut {
    TxOut { value, locking: compile_p2h(target.as_bytes()).expect("digest has fixed length") }
}

fn owned_value(state: &Chainstate, outpoint: UtxoId, payer: &KeyPair) -> Result<Amount, WalletError> {
    let out = state.get(&outpoint).ok_or(WalletError::UnknownOutpoint(outpoint))?;
    if out.owner() != Some(payer.address()) {
        return Err(WalletError::NotOwner(outpoint));
    }
    Ok(out.value)
}

/// Pays part of one output: payee at index 0, change back to the payer at
/// index 1.
pub fn build_split(
    state: &Chainstate,
    outpoint: UtxoId,
    payer: &KeyPair,
    payee: UserId,
    amount: Amount,
) -> Result<UtxoTx, WalletError> {
    build_split_to(state, outpoint, payer, payee, amount, payer.address())
}

pub fn build_split_to(
    state: &Chainstate,
    outpoint: UtxoId,
    payer: &KeyPair,
    payee: UserId,
    amount: Amount,
    change_to: UserId,
) -> Result<UtxoTx, WalletError> {
    if amount.is_zero() {
        return Err(WalletError::ZeroAmount);
    }
    let input = owned_value(state, outpoint, payer)?;
    if amount >= input {
        return Err(WalletError::NotASplit { amount, input });
    }
    let change = input.checked_sub(amount).expect("checked above");
    let mut tx = UtxoTx::transfer(&[outpoint], vec![p2pkh_output(amount, &payee), p2pkh_output(change, &change_to)]);
    tx.sign_inputs(&[payer]);
    Ok(tx)
}

/// Consumes every listed output into a single output for `payee`.
pub fn build_merge(state: &Chainstate, outpoints: &[UtxoId], payer: &KeyPair, payee: UserId) -> Result<UtxoTx, WalletError> {
    let mut total = Amount::ZERO;
    for &o in outpoints {
        total = total
            .checked_add(owned_value(state, o, payer)?)
            .map_err(|_| WalletError::InsufficientFunds { available: u128::MAX, required: total })?;
    }
    let mut tx = UtxoTx::transfer(outpoints, vec![p2pkh_output(total, &payee)]);
    let keys = vec![payer; outpoints.len()];
    tx.sign_inputs(&keys);
    Ok(tx)
}

/// Greedy coin selection over the payer's outputs in id order. Change, if
/// any, goes back to the payer at index 1.
pub fn build_payment(state: &Chainstate, payer: &KeyPair, payee: UserId, amount: Amount) -> Result<UtxoTx, WalletError> {
    if amount.is_zero() {
        return Err(WalletError::ZeroAmount);
    }
    let mut selected = Vec::new();
    let mut total = 0u128;
    for (id, out) in state.utxos_of(&payer.address()) {
        if total >= amount.value() as u128 {
            break;
        }
        selected.push(id);
        total += out.value.value() as u128;
    }
    if total < amount.value() as u128 {
        return Err(WalletError::InsufficientFunds { available: total, required: amount });
    }
    let change = Amount::new((total - amount.value() as u128) as u64);
    let mut outputs = vec![p2pkh_output(amount, &payee)];
    if !change.is_zero() {
        outputs.push(p2pkh_output(change, &payer.address()));
    }
    let mut tx = UtxoTx::transfer(&selected, outputs);
    let keys = vec![payer; selected.len()];
    tx.sign_inputs(&keys);
    Ok(tx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::keygen;

    #[test]
    fn payment_selects_coins_and_returns_change() {
        let issuer = keygen(b"issuer");
        let a = keygen(b"A");
        let b = keygen(b"B");
        let outs = [3, 4, 5].iter().map(|&v| p2pkh_output(Amount::new(v), &a.address())).collect();
        let state = Chainstate::new(issuer.public.clone()).issue(outs, &issuer).unwrap();

        let tx = build_payment(&state, &a, b.address(), Amount::new(6)).unwrap();
        let next = state.apply(&tx).unwrap();
        let b_total: u64 = next.utxos_of(&b.address()).iter().map(|(_, o)| o.value.value()).sum();
        assert_eq!(b_total, 6);
        assert_eq!(next.total_active_value(), 12);

        let exact = build_payment(&state, &a, b.address(), Amount::new(12)).unwrap();
        assert_eq!(exact.outputs.len(), 1);
        assert_eq!(
            build_payment(&state, &a, b.address(), Amount::new(13)),
            Err(WalletError::InsufficientFunds { available: 12, required: Amount::new(13) })
        );
        assert_eq!(build_payment(&state, &a, b.address(), Amount::ZERO), Err(WalletError::ZeroAmount));
    }

    #[test]
    fn split_requires_ownership_and_a_partial_amount() {
        let issuer = keygen(b"issuer");
        let a = keygen(b"A");
        let b = keygen(b"B");
        let state = Chainstate::new(issuer.public.clone())
            .issue(vec![p2pkh_output(Amount::new(10), &a.address())], &issuer)
            .unwrap();
        let o = state.log()[0].output_id(0);
        assert_eq!(build_split(&state, o, &b, a.address(), Amount::new(1)), Err(WalletError::NotOwner(o)));
        assert_eq!(
            build_split(&state, o, &a, b.address(), Amount::new(10)),
            Err(WalletError::NotASplit { amount: Amount::new(10), input: Amount::new(10) })
        );
    }
}
