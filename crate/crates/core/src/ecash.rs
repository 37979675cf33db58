//! Blind-issued bearer coins.
//!
//! Each denomination has its own issuer key. A wallet picks a random serial,
//! blinds it, and has the issuer sign the blinded value; unblinding yields an
//! ordinary issuer signature on the serial. A coin is spent by handing it to a
//! payee, who must redeem it at the issuer straight away. The issuer accepts a
//! coin once: the serial goes on the spent list and any later deposit of the
//! same serial is rejected.
//!
//! The issuer sees blinded values at withdrawal and serials at redemption, and
//! has no way to connect the two.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::Amount;
use crate::crypto::{
    blind, blind_sign, hex_bytes, unblind, verify, BlindedMessage, BlindedSignature, BlindingFactor, CryptoError,
    CryptoMode, KeyPair, PublicKey, Signature,
};

pub const SERIAL_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EcashError {
    #[error("denomination {0} listed twice")]
    DuplicateDenomination(Amount),
    #[error("denominations must be positive")]
    ZeroDenomination,
    #[error("no key for denomination {0}")]
    UnknownDenomination(Amount),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// One key pair per denomination.
#[derive(Clone, Debug)]
pub struct IssuerKeys {
    per_denomination: BTreeMap<Amount, KeyPair>,
}

pub fn issuer_setup(denominations: &[Amount], seed: &[u8], mode: CryptoMode) -> Result<IssuerKeys, EcashError> {
    let mut per_denomination = BTreeMap::new();
    for &d in denominations {
        if d.is_zero() {
            return Err(EcashError::ZeroDenomination);
        }
        let mut key_seed = seed.to_vec();
        key_seed.extend_from_slice(b"/denomination/");
        key_seed.extend_from_slice(&d.value().to_be_bytes());
        if per_denomination.insert(d, mode.keygen(&key_seed)).is_some() {
            return Err(EcashError::DuplicateDenomination(d));
        }
    }
    Ok(IssuerKeys { per_denomination })
}

impl IssuerKeys {
    pub fn denominations(&self) -> impl Iterator<Item = Amount> + '_ {
        self.per_denomination.keys().copied()
    }

    pub fn public_key(&self, denomination: Amount) -> Option<&PublicKey> {
        self.per_denomination.get(&denomination).map(|k| &k.public)
    }

    /// The published verification keys.
    pub fn public_keys(&self) -> BTreeMap<Amount, PublicKey> {
        self.per_denomination.iter().map(|(d, k)| (*d, k.public.clone())).collect()
    }

    fn key(&self, denomination: Amount) -> Result<&KeyPair, EcashError> {
        self.per_denomination
            .get(&denomination)
            .ok_or(EcashError::UnknownDenomination(denomination))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Coin {
    #[serde(with = "hex_bytes")]
    pub serial: Vec<u8>,
    pub denomination: Amount,
    pub signature: Signature,
}

impl Coin {
    pub fn verifies_under(&self, key: &PublicKey) -> bool {
        verify(key, &self.serial, &self.signature)
    }
}

/// Serials of redeemed coins. Append-only; check-and-insert is atomic.
#[derive(Debug, Default)]
pub struct SpentList {
    used: Mutex<BTreeSet<Vec<u8>>>,
}

impl SpentList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false if the serial was already present.
    pub fn insert_if_absent(&self, serial: &[u8]) -> bool {
        self.used.lock().unwrap().insert(serial.to_vec())
    }

    pub fn contains(&self, serial: &[u8]) -> bool {
        self.used.lock().unwrap().contains(serial)
    }

    pub fn len(&self) -> usize {
        self.used.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn serials(&self) -> Vec<Vec<u8>> {
        self.used.lock().unwrap().iter().cloned().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    BadSignature,
    AlreadySpent,
    UnknownDenomination,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "reason", rename_all = "kebab-case")]
pub enum Redemption {
    Accept,
    Reject(RejectReason),
}

impl Redemption {
    pub fn is_accept(self) -> bool {
        self == Redemption::Accept
    }
}

/// Accepts a coin iff its signature verifies under the denomination key and
/// its serial has not been redeemed before.
pub fn redeem(spent: &SpentList, coin: &Coin, keys: &IssuerKeys) -> Redemption {
    let Some(key) = keys.public_key(coin.denomination) else {
        return Redemption::Reject(RejectReason::UnknownDenomination);
    };
    if !coin.verifies_under(key) {
        return Redemption::Reject(RejectReason::BadSignature);
    }
    if spent.insert_if_absent(&coin.serial) {
        Redemption::Accept
    } else {
        Redemption::Reject(RejectReason::AlreadySpent)
    }
}

/// What the issuer saw while signing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub denomination: Amount,
    pub blinded: BlindedMessage,
    pub blinded_signature: BlindedSignature,
}

/// The issuer's side: keys, the spent list, and a record of every blind
/// signing request.
#[derive(Debug)]
pub struct Issuer {
    keys: IssuerKeys,
    spent: SpentList,
    transcript: Mutex<Vec<TranscriptEntry>>,
}

impl Issuer {
    pub fn new(keys: IssuerKeys) -> Self {
        Issuer { keys, spent: SpentList::new(), transcript: Mutex::new(Vec::new()) }
    }

    pub fn keys(&self) -> &IssuerKeys {
        &self.keys
    }

    pub fn spent(&self) -> &SpentList {
        &self.spent
    }

    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.transcript.lock().unwrap().clone()
    }

    pub fn sign_blinded(&self, denomination: Amount, blinded: &BlindedMessage) -> Result<BlindedSignature, EcashError> {
        let key = self.keys.key(denomination)?;
        let blinded_signature = blind_sign(&key.private, blinded)?;
        self.transcript.lock().unwrap().push(TranscriptEntry {
            denomination,
            blinded: blinded.clone(),
            blinded_signature: blinded_signature.clone(),
        });
        Ok(blinded_signature)
    }

    pub fn redeem(&self, coin: &Coin) -> Redemption {
        redeem(&self.spent, coin, &self.keys)
    }
}

/// Runs the wallet side of a withdrawal against `issuer`.
pub fn withdraw(issuer: &Issuer, denomination: Amount, wallet_rng: &mut impl RngCore) -> Result<Coin, EcashError> {
    let key = issuer
        .keys
        .public_key(denomination)
        .ok_or(EcashError::UnknownDenomination(denomination))?
        .clone();
    let mut serial = vec![0u8; SERIAL_LEN];
    wallet_rng.fill_bytes(&mut serial);
    let factor = BlindingFactor::random(&key, wallet_rng);
    let blinded = blind(&serial, &factor, &key)?;
    let blinded_signature = issuer.sign_blinded(denomination, &blinded)?;
    let signature = unblind(&blinded_signature, &factor, &key)?;
    Ok(Coin { serial, denomination, signature })
}

/// Hands a coin to a payee, who redeems it immediately. The payee keeps no
/// coin state; the payment is good iff the issuer accepts the deposit.
pub fn pay(issuer: &Issuer, coin: Coin) -> Redemption {
    issuer.redeem(&coin)
}
