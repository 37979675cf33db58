//! Hashing, identities and the signature primitives shared by every kernel.
//!
//! Signatures are RSA full-domain-hash signatures. The same construction backs
//! blind issuance: an unblinded blind signature is an ordinary signature that
//! [`verify`] accepts. [`CryptoMode`] only selects the modulus size used at key
//! generation, so verification never depends on which mode produced a key.

mod blind;
mod digest;
mod rsa;

pub use blind::{blind, blind_sign, unblind, BlindedMessage, BlindedSignature, BlindingFactor};
pub use digest::{hash, Digest, ParseDigestError, UserId, DIGEST_LEN};
pub use rsa::{keygen, sign, verify, CryptoMode, KeyPair, PrivateKey, PublicKey, Signature};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("blinding factor is outside the multiplicative group of the key")]
    BlindingFactorOutOfDomain,
    #[error("value is not smaller than the key modulus")]
    OutOfDomain,
    #[error("malformed public key: {0}")]
    MalformedKey(&'static str),
}

#[doc(hidden)]
pub mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}
