//! Record-system kernels for comparing account-based, token-based and
//! UTXO-based ledgers.
//!
//! The crate is organised bottom-up:
//!
//! * [`crypto`] – hashing, addresses, signatures and blind signatures.
//! * [`script`] – the locking/unlocking script interpreter.
//! * [`account`], [`token`], [`utxo`] – the three state machines.
//! * [`ecash`] – blind-issued bearer coins redeemed against a spent list.
//! * [`replica`] – replicas applying a broadcast transaction stream.
//! * [`analysis`] – lineage tracing, state metrics, fraud scenarios and the
//!   comparison tables.
//! * [`snapshot`] – JSON import/export of kernel state.

pub mod account;
pub mod amount;
pub mod analysis;
pub mod codec;
pub mod crypto;
pub mod ecash;
pub mod replica;
pub mod script;
pub mod snapshot;
pub mod token;
pub mod utxo;
pub mod workload;

pub use amount::{Amount, AmountError};
pub use crypto::{hash, keygen, CryptoMode, Digest, KeyPair, PublicKey, Signature, UserId};
