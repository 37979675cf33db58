//! The UTXO record system: a set of active outputs, each locked by a script,
//! consumed whole and replaced by new outputs.

mod chainstate;
mod tx;
mod wallet;

pub use chainstate::{
    coinbase_issue, utxo_apply, utxo_validate, Chainstate, InputCheck, Policy, UtxoError, ValidationReport, Violation,
};
pub use tx::{TxIn, TxKind, TxOut, UtxoId, UtxoTx};
pub use wallet::{build_merge, build_payment, build_split, build_split_to, p2h_output, p2pkh_output, WalletError};
