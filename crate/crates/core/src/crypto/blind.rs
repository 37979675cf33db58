//! Multiplicative blinding over the RSA trapdoor permutation.
//!
//! `blind(m, r) = H(m) * r^e`, the signer returns `blind(m, r)^d`, and
//! multiplying by `r^-1` leaves `H(m)^d`, the ordinary signature on `m`.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{CryptoError, PrivateKey, PublicKey, Signature};

/// A secret unit of `Z_n` chosen fresh for every message.
#[derive(Clone, PartialEq, Eq)]
pub struct BlindingFactor(BigUint);

impl BlindingFactor {
    pub fn random(key: &PublicKey, rng: &mut impl RngCore) -> Self {
        let mut buf = vec![0u8; key.modulus_len() + 8];
        loop {
            rng.fill_bytes(&mut buf);
            let r = BigUint::from_bytes_be(&buf) % &key.n;
            if in_domain(&r, key) {
                return BlindingFactor(r);
            }
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        BlindingFactor(BigUint::from_bytes_be(bytes))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.to_bytes_be()
    }
}

impl fmt::Debug for BlindingFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BlindingFactor(..)")
    }
}

fn in_domain(r: &BigUint, key: &PublicKey) -> bool {
    *r > BigUint::one() && *r < key.n && r.gcd(&key.n).is_one()
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlindedMessage(#[serde(with = "super::hex_bytes")] Vec<u8>);

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlindedSignature(#[serde(with = "super::hex_bytes")] Vec<u8>);

impl BlindedMessage {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl BlindedSignature {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for BlindedMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlindedMessage({})", hex::encode(&self.0))
    }
}

impl fmt::Debug for BlindedSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BlindedSignature({})", hex::encode(&self.0))
    }
}

pub fn blind(
    message: &[u8],
    factor: &BlindingFactor,
    key: &PublicKey,
) -> Result<BlindedMessage, CryptoError> {
    if !in_domain(&factor.0, key) {
        return Err(CryptoError::BlindingFactorOutOfDomain);
    }
    let masked = key.full_domain_hash(message) * factor.0.modpow(&key.e, &key.n) % &key.n;
    Ok(BlindedMessage(key.encode(&masked)))
}

/// Signs a blinded value. The signer learns nothing about the underlying message.
pub fn blind_sign(key: &PrivateKey, blinded: &BlindedMessage) -> Result<BlindedSignature, CryptoError> {
    let public = PublicKey { n: key.n.clone(), e: BigUint::one() };
    let m = public.decode(&blinded.0)?;
    Ok(BlindedSignature(public.encode(&m.modpow(&key.d, &key.n))))
}

pub fn unblind(
    blinded: &BlindedSignature,
    factor: &BlindingFactor,
    key: &PublicKey,
) -> Result<Signature, CryptoError> {
    if !in_domain(&factor.0, key) {
        return Err(CryptoError::BlindingFactorOutOfDomain);
    }
    let s = key.decode(&blinded.0)?;
    let inverse = factor
        .0
        .modinv(&key.n)
        .ok_or(CryptoError::BlindingFactorOutOfDomain)?;
    Ok(Signature::from_bytes(key.encode(&(s * inverse % &key.n))))
}
