use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{hash, CryptoError, UserId};
use crate::codec::{Reader, Writer};

const PUBLIC_EXPONENT: u32 = 65_537;
const MILLER_RABIN_ROUNDS: usize = 24;

/// Selects the modulus size used by [`keygen`].
///
/// `Toy` keys are tiny and fast and exist for reproducible tests; `Real` keys
/// use a 2048-bit modulus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CryptoMode {
    #[default]
    Toy,
    Real,
}

impl CryptoMode {
    pub fn modulus_bits(self) -> u64 {
        match self {
            CryptoMode::Toy => 128,
            CryptoMode::Real => 2048,
        }
    }

    fn tag(self) -> u8 {
        match self {
            CryptoMode::Toy => 0,
            CryptoMode::Real => 1,
        }
    }

    /// Deterministic key generation: identical seeds give identical key pairs.
    pub fn keygen(self, seed: &[u8]) -> KeyPair {
        let mut material = b"ledgerlab/keygen/v1".to_vec();
        material.push(self.tag());
        material.extend_from_slice(seed);
        let mut rng = ChaCha20Rng::from_seed(*hash(&material).as_bytes());

        let bits = self.modulus_bits();
        let e = BigUint::from(PUBLIC_EXPONENT);
        loop {
            let p = random_prime(bits / 2, &mut rng);
            let q = random_prime(bits / 2, &mut rng);
            if p == q {
                continue;
            }
            let n = &p * &q;
            debug_assert_eq!(n.bits(), bits);
            let phi = (&p - 1u32) * (&q - 1u32);
            let Some(d) = e.modinv(&phi) else { continue };
            return KeyPair {
                public: PublicKey { n: n.clone(), e: e.clone() },
                private: PrivateKey { n, d },
            };
        }
    }
}

/// Toy-mode key generation.
pub fn keygen(seed: &[u8]) -> KeyPair {
    CryptoMode::Toy.keygen(seed)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PublicKey {
    pub(super) n: BigUint,
    pub(super) e: BigUint,
}

impl PublicKey {
    /// `u32`-length-prefixed modulus followed by the length-prefixed exponent,
    /// both minimal big-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(&self.n.to_bytes_be()).bytes(&self.e.to_bytes_be());
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(bytes);
        let n = r.bytes().map_err(|_| CryptoError::MalformedKey("truncated modulus"))?;
        let e = r.bytes().map_err(|_| CryptoError::MalformedKey("truncated exponent"))?;
        r.finish().map_err(|_| CryptoError::MalformedKey("trailing bytes"))?;
        if n.first() == Some(&0) || e.first() == Some(&0) {
            return Err(CryptoError::MalformedKey("non-minimal integer encoding"));
        }
        let n = BigUint::from_bytes_be(n);
        let e = BigUint::from_bytes_be(e);
        if n.bits() < 64 || n.is_even() {
            return Err(CryptoError::MalformedKey("modulus"));
        }
        if e < BigUint::from(3u32) || e.is_even() {
            return Err(CryptoError::MalformedKey("exponent"));
        }
        Ok(PublicKey { n, e })
    }

    pub fn address(&self) -> UserId {
        UserId::from_public_key(self)
    }

    /// Length in bytes of signatures and blinded values under this key.
    pub fn modulus_len(&self) -> usize {
        byte_len(&self.n)
    }

    pub fn modulus_bits(&self) -> u64 {
        self.n.bits()
    }

    pub(super) fn encode(&self, value: &BigUint) -> Vec<u8> {
        encode_fixed(&self.n, value)
    }

    /// Parses a fixed-width element of `Z_n`.
    pub(super) fn decode(&self, bytes: &[u8]) -> Result<BigUint, CryptoError> {
        if bytes.len() != self.modulus_len() {
            return Err(CryptoError::OutOfDomain);
        }
        let v = BigUint::from_bytes_be(bytes);
        if v >= self.n {
            return Err(CryptoError::OutOfDomain);
        }
        Ok(v)
    }

    pub(super) fn full_domain_hash(&self, message: &[u8]) -> BigUint {
        full_domain_hash(&self.n, message)
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({} bits, {:?})", self.n.bits(), self.address())
    }
}

impl Serialize for PublicKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.to_bytes()))
    }
}

impl<'de> Deserialize<'de> for PublicKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(s).map_err(serde::de::Error::custom)?;
        PublicKey::from_bytes(&bytes).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct PrivateKey {
    pub(super) n: BigUint,
    pub(super) d: BigUint,
}

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PrivateKey(..)")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyPair {
    pub public: PublicKey,
    pub private: PrivateKey,
}

impl KeyPair {
    pub fn address(&self) -> UserId {
        self.public.address()
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        sign(&self.private, message)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature(#[serde(with = "super::hex_bytes")] Vec<u8>);

impl Signature {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Signature(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", hex::encode(&self.0))
    }
}

/// Deterministic: the same key and message always give the same signature.
pub fn sign(key: &PrivateKey, message: &[u8]) -> Signature {
    let m = full_domain_hash(&key.n, message);
    Signature(encode_fixed(&key.n, &m.modpow(&key.d, &key.n)))
}

pub fn verify(key: &PublicKey, message: &[u8], signature: &Signature) -> bool {
    let Ok(s) = key.decode(signature.as_bytes()) else {
        return false;
    };
    s.modpow(&key.e, &key.n) == key.full_domain_hash(message)
}

fn byte_len(n: &BigUint) -> usize {
    (n.bits() as usize).div_ceil(8)
}

fn encode_fixed(n: &BigUint, value: &BigUint) -> Vec<u8> {
    let raw = value.to_bytes_be();
    let mut out = vec![0u8; byte_len(n) - raw.len()];
    out.extend_from_slice(&raw);
    out
}

/// Expands `message` to the byte length of `n` with counter-mode SHA-256, then
/// reduces into `Z_n`.
fn full_domain_hash(n: &BigUint, message: &[u8]) -> BigUint {
    let len = byte_len(n);
    let mut out = Vec::with_capacity(len + 32);
    let mut counter = 0u32;
    while out.len() < len {
        let mut block = b"ledgerlab/fdh/v1".to_vec();
        block.extend_from_slice(&counter.to_be_bytes());
        block.extend_from_slice(message);
        out.extend_from_slice(hash(&block).as_bytes());
        counter += 1;
    }
    out.truncate(len);
    BigUint::from_bytes_be(&out) % n
}

const SMALL_PRIMES: [u32; 46] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211,
];

fn random_prime(bits: u64, rng: &mut ChaCha20Rng) -> BigUint {
    let len = (bits / 8) as usize;
    let mut buf = vec![0u8; len];
    loop {
        rng.fill_bytes(&mut buf);
        // top two bits set so the product of two primes has exactly 2*bits bits
        buf[0] |= 0xc0;
        buf[len - 1] |= 1;
        let candidate = BigUint::from_bytes_be(&buf);
        if is_probable_prime(&candidate, rng) {
            return candidate;
        }
    }
}

pub(super) fn is_probable_prime(n: &BigUint, rng: &mut impl Rng) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for p in SMALL_PRIMES.iter().copied().chain([2]) {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_one = n - 1u32;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    let len = (n.bits() as usize).div_ceil(8) + 8;
    let mut buf = vec![0u8; len];
    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        rng.fill_bytes(&mut buf);
        // base in [2, n-2]
        let a = BigUint::from_bytes_be(&buf) % (n - 3u32) + 2u32;
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
