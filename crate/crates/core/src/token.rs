//! The pure token record system: every payment object keeps its value for
//! life and only its owner changes.
//!
//! For physical tokens this record does not exist anywhere; possession is the
//! record. The registry here is an observer's materialisation of it, kept so
//! the ownership semantics can be checked, and it always reports itself as
//! non-authoritative.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::Amount;
use crate::crypto::UserId;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(String);

impl TokenId {
    pub fn new(id: impl Into<String>) -> Self {
        TokenId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TokenId({})", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEntry {
    pub value: Amount,
    pub owner: UserId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTransfer {
    pub payer: UserId,
    pub payee: UserId,
    pub token: TokenId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("unknown token {0}")]
    NotFound(TokenId),
    #[error("{payer} does not own token {token}")]
    NotOwner { token: TokenId, payer: UserId },
    #[error("token {0} already issued")]
    Duplicate(TokenId),
    #[error("token value must be positive")]
    ZeroValue,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRegistry {
    objects: BTreeMap<TokenId, TokenEntry>,
    authoritative: bool,
}

impl TokenRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Always false: the registry observes ownership, it does not define it.
    pub fn is_authoritative(&self) -> bool {
        self.authoritative
    }

    pub fn get(&self, token: &TokenId) -> Option<&TokenEntry> {
        self.objects.get(token)
    }

    pub fn objects(&self) -> &BTreeMap<TokenId, TokenEntry> {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn issue(&self, token: TokenId, value: Amount, owner: UserId) -> Result<Self, TokenError> {
        let mut next = self.clone();
        next.issue_mut(token, value, owner)?;
        Ok(next)
    }

    pub fn issue_mut(&mut self, token: TokenId, value: Amount, owner: UserId) -> Result<(), TokenError> {
        if value.is_zero() {
            return Err(TokenError::ZeroValue);
        }
        if self.objects.contains_key(&token) {
            return Err(TokenError::Duplicate(token));
        }
        self.objects.insert(token, TokenEntry { value, owner });
        Ok(())
    }

    pub fn transfer(&self, tx: &TokenTransfer) -> Result<Self, TokenError> {
        let mut next = self.clone();
        next.transfer_mut(tx)?;
        Ok(next)
    }

    pub fn transfer_mut(&mut self, tx: &TokenTransfer) -> Result<(), TokenError> {
        let entry = self
            .objects
            .get_mut(&tx.token)
            .ok_or_else(|| TokenError::NotFound(tx.token.clone()))?;
        if entry.owner != tx.payer {
            return Err(TokenError::NotOwner { token: tx.token.clone(), payer: tx.payer });
        }
        entry.owner = tx.payee;
        Ok(())
    }
}

pub fn token_transfer(state: &TokenRegistry, tx: &TokenTransfer) -> Result<TokenRegistry, TokenError> {
    state.transfer(tx)
}
