use serde::{Deserialize, Serialize};

use super::KernelKind;
use crate::account::AccountState;
use crate::token::TokenRegistry;
use crate::utxo::Chainstate;

/// Size of a record system. For UTXO state both the active-set size and the
/// log length are reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateMetrics {
    pub kernel: KernelKind,
    pub entry_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_length: Option<usize>,
}

pub trait Measure {
    fn measure(&self) -> StateMetrics;
}

impl Measure for AccountState {
    fn measure(&self) -> StateMetrics {
        StateMetrics { kernel: KernelKind::Account, entry_count: self.account_count(), log_length: None }
    }
}

impl Measure for TokenRegistry {
    fn measure(&self) -> StateMetrics {
        StateMetrics { kernel: KernelKind::Token, entry_count: self.len(), log_length: None }
    }
}

impl Measure for Chainstate {
    fn measure(&self) -> StateMetrics {
        StateMetrics { kernel: KernelKind::Utxo, entry_count: self.active().len(), log_length: Some(self.log().len()) }
    }
}

pub fn measure_state<M: Measure + ?Sized>(ledger: &M) -> StateMetrics {
    ledger.measure()
}
