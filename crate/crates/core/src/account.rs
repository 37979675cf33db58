//! The account-based record system: a balance per holder, updated by debiting
//! the payer and crediting the payee.
//!
//! Replay protection is a mode rather than fixed behaviour. In
//! [`ReplayMode::Naive`] a transaction carries no state, so re-submitting it
//! debits the payer again. [`ReplayMode::NonceProtected`] requires each
//! transaction to carry the payer's next nonce.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::{Amount, AmountError};
use crate::codec::{DecodeError, Reader, Writer};
use crate::crypto::{hash, verify, Digest, KeyPair, PublicKey, Signature, UserId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplayMode {
    #[default]
    Naive,
    NonceProtected,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AccountError {
    #[error("transaction is not signed")]
    Unsigned,
    #[error("payer key does not hash to the payer address")]
    PayerKeyMismatch,
    #[error("payer signature does not verify")]
    BadSignature,
    #[error("insufficient funds: balance {available}, amount {required}")]
    InsufficientFunds { available: Amount, required: Amount },
    #[error("stale nonce: expected {expected}, got {}", got.map_or("none".to_owned(), |n| n.to_string()))]
    StaleNonce { expected: u64, got: Option<u64> },
    #[error(transparent)]
    Amount(#[from] AmountError),
}

impl AccountError {
    pub fn is_auth(&self) -> bool {
        matches!(self, AccountError::Unsigned | AccountError::PayerKeyMismatch | AccountError::BadSignature)
    }

    pub fn is_replay(&self) -> bool {
        matches!(self, AccountError::StaleNonce { .. })
    }
}

/// A signed instruction to move `amount` from `payer` to `payee`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountTx {
    pub payer: UserId,
    pub payee: UserId,
    pub amount: Amount,
    pub nonce: Option<u64>,
    pub payer_key: PublicKey,
    pub signature: Option<Signature>,
}

const ACCOUNT_TX_TAG: u8 = 0x41;

impl AccountTx {
    /// Builds and signs a transfer from the owner of `payer`.
    pub fn signed(payer: &KeyPair, payee: UserId, amount: Amount, nonce: Option<u64>) -> Self {
        let mut tx = AccountTx {
            payer: payer.address(),
            payee,
            amount,
            nonce,
            payer_key: payer.public.clone(),
            signature: None,
        };
        tx.signature = Some(payer.sign(&tx.signing_bytes()));
        tx
    }

    fn encode(&self, w: &mut Writer, with_signature: bool) {
        w.u8(ACCOUNT_TX_TAG)
            .fixed(self.payer.digest().as_bytes())
            .fixed(self.payee.digest().as_bytes())
            .u64(self.amount.value());
        match self.nonce {
            Some(n) => w.u8(1).u64(n),
            None => w.u8(0),
        };
        w.bytes(&self.payer_key.to_bytes());
        match (&self.signature, with_signature) {
            (Some(sig), true) => w.u8(1).bytes(sig.as_bytes()),
            _ => w.u8(0),
        };
    }

    /// The canonical encoding with the signature field absent.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w, false);
        w.finish()
    }

    /// Layout: tag `0x41`, payer (32), payee (32), amount (u64), nonce flag
    /// (u8) [+ u64], length-prefixed payer key, signature flag (u8) [+
    /// length-prefixed signature].
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w, true);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        match r.u8()? {
            ACCOUNT_TX_TAG => {}
            tag => return Err(DecodeError::InvalidTag { what: "account tx", tag }),
        }
        let payer = UserId::from_digest(Digest::from_bytes(r.array()?));
        let payee = UserId::from_digest(Digest::from_bytes(r.array()?));
        let amount = Amount::new(r.u64()?);
        let nonce = match r.u8()? {
            0 => None,
            1 => Some(r.u64()?),
            tag => return Err(DecodeError::InvalidTag { what: "nonce flag", tag }),
        };
        let payer_key = PublicKey::from_bytes(r.bytes()?).map_err(|_| DecodeError::Invalid("payer key"))?;
        let signature = match r.u8()? {
            0 => None,
            1 => Some(Signature::from_bytes(r.bytes()?.to_vec())),
            tag => return Err(DecodeError::InvalidTag { what: "signature flag", tag }),
        };
        r.finish()?;
        Ok(AccountTx { payer, payee, amount, nonce, payer_key, signature })
    }

    pub fn txid(&self) -> Digest {
        hash(&self.to_bytes())
    }

    pub fn check_signature(&self) -> Result<(), AccountError> {
        let sig = self.signature.as_ref().ok_or(AccountError::Unsigned)?;
        if self.payer_key.address() != self.payer {
            return Err(AccountError::PayerKeyMismatch);
        }
        if !verify(&self.payer_key, &self.signing_bytes(), sig) {
            return Err(AccountError::BadSignature);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountState {
    balances: BTreeMap<UserId, Amount>,
    nonces: BTreeMap<UserId, u64>,
}

impl AccountState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn balance(&self, user: &UserId) -> Amount {
        self.balances.get(user).copied().unwrap_or_default()
    }

    pub fn nonce(&self, user: &UserId) -> u64 {
        self.nonces.get(user).copied().unwrap_or_default()
    }

    pub fn balances(&self) -> &BTreeMap<UserId, Amount> {
        &self.balances
    }

    pub fn nonces(&self) -> &BTreeMap<UserId, u64> {
        &self.nonces
    }

    pub fn account_count(&self) -> usize {
        self.balances.len()
    }

    pub fn total_supply(&self) -> u128 {
        self.balances.values().map(|a| a.value() as u128).sum()
    }

    /// Credits new units to `user`. The operator of an account ledger can do
    /// this unilaterally; it is the only way total supply changes.
    pub fn mint(&self, user: UserId, amount: Amount) -> Result<Self, AccountError> {
        let mut next = self.clone();
        next.mint_mut(user, amount)?;
        Ok(next)
    }

    pub fn mint_mut(&mut self, user: UserId, amount: Amount) -> Result<(), AccountError> {
        let credited = self.balance(&user).checked_add(amount)?;
        self.balances.insert(user, credited);
        Ok(())
    }

    pub fn apply(&self, tx: &AccountTx, mode: ReplayMode) -> Result<Self, AccountError> {
        let mut next = self.clone();
        next.apply_mut(tx, mode)?;
        Ok(next)
    }

    /// In-place [`apply`](Self::apply). On error the state is untouched.
    pub fn apply_mut(&mut self, tx: &AccountTx, mode: ReplayMode) -> Result<(), AccountError> {
        tx.check_signature()?;
        let expected = self.nonce(&tx.payer);
        if mode == ReplayMode::NonceProtected && tx.nonce != Some(expected) {
            return Err(AccountError::StaleNonce { expected, got: tx.nonce });
        }
        let available = self.balance(&tx.payer);
        let debited = available
            .checked_sub(tx.amount)
            .map_err(|_| AccountError::InsufficientFunds { available, required: tx.amount })?;
        if !tx.amount.is_zero() {
            self.balances.insert(tx.payer, debited);
            // read after the debit so a self-payment nets to zero
            let credited = self.balance(&tx.payee).checked_add(tx.amount);
            match credited {
                Ok(c) => {
                    self.balances.insert(tx.payee, c);
                }
                Err(e) => {
                    self.balances.insert(tx.payer, available);
                    return Err(e.into());
                }
            }
        }
        if mode == ReplayMode::NonceProtected {
            self.nonces.insert(tx.payer, expected + 1);
        }
        Ok(())
    }
}

/// Functional form of [`AccountState::apply`].
pub fn account_apply(state: &AccountState, tx: &AccountTx, mode: ReplayMode) -> Result<AccountState, AccountError> {
    state.apply(tx, mode)
}
