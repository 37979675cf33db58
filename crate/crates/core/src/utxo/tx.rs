use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::amount::Amount;
use crate::codec::{DecodeError, Reader, Writer};
use crate::crypto::{hash, Digest, KeyPair, ParseDigestError, Signature, UserId};
use crate::script::{p2h_unlocking, p2pkh_unlocking, Script, Template};

/// Names one output: the creating transaction's id and the output position.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UtxoId {
    pub txid: Digest,
    pub index: u32,
}

impl UtxoId {
    pub fn new(txid: Digest, index: u32) -> Self {
        UtxoId { txid, index }
    }
}

impl fmt::Display for UtxoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.txid, self.index)
    }
}

impl fmt::Debug for UtxoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UtxoId({}:{})", &self.txid.to_hex()[..12], self.index)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseUtxoIdError {
    #[error("expected <txid>:<index>")]
    Format,
    #[error(transparent)]
    Txid(#[from] ParseDigestError),
    #[error("invalid output index")]
    Index,
}

impl FromStr for UtxoId {
    type Err = ParseUtxoIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (txid, index) = s.split_once(':').ok_or(ParseUtxoIdError::Format)?;
        Ok(UtxoId {
            txid: txid.parse()?,
            index: index.parse().map_err(|_| ParseUtxoIdError::Index)?,
        })
    }
}

impl Serialize for UtxoId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for UtxoId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxIn {
    pub outpoint: UtxoId,
    pub unlocking: Script,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxOut {
    pub value: Amount,
    pub locking: Script,
}

impl TxOut {
    /// The address a P2PKH output is locked to. Hash-locked and other outputs
    /// carry no identity.
    pub fn owner(&self) -> Option<UserId> {
        match self.locking.template() {
            Template::PayToPublicKeyHash(d) => Some(UserId::from_digest(d)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxKind {
    Normal,
    Coinbase,
}

/// A transaction consuming active outputs and creating new ones.
///
/// `nonce` distinguishes otherwise identical issuances; ordinary transfers
/// leave it at zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtxoTx {
    pub kind: TxKind,
    #[serde(default)]
    pub nonce: u64,
    pub inputs: Vec<TxIn>,
    pub outputs: Vec<TxOut>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issuer_signature: Option<Signature>,
}

const UTXO_TX_TAG: u8 = 0x55;

impl UtxoTx {
    /// An unsigned transfer with empty unlocking scripts.
    pub fn transfer(outpoints: &[UtxoId], outputs: Vec<TxOut>) -> Self {
        UtxoTx {
            kind: TxKind::Normal,
            nonce: 0,
            inputs: outpoints.iter().map(|&outpoint| TxIn { outpoint, unlocking: Script::empty() }).collect(),
            outputs,
            issuer_signature: None,
        }
    }

    pub fn coinbase(outputs: Vec<TxOut>, nonce: u64, issuer: &KeyPair) -> Self {
        let mut tx = UtxoTx { kind: TxKind::Coinbase, nonce, inputs: Vec::new(), outputs, issuer_signature: None };
        tx.issuer_signature = Some(issuer.sign(&tx.signing_payload()));
        tx
    }

    pub fn is_coinbase(&self) -> bool {
        self.kind == TxKind::Coinbase
    }

    /// Fills every input with a P2PKH unlocking script; `keys[i]` signs input `i`.
    pub fn sign_inputs(&mut self, keys: &[&KeyPair]) {
        assert_eq!(keys.len(), self.inputs.len(), "one key per input");
        let payload = self.signing_payload();
        for (input, key) in self.inputs.iter_mut().zip(keys) {
            input.unlocking = p2pkh_unlocking(&key.sign(&payload), &key.public);
        }
    }

    pub fn unlock_with_preimage(&mut self, input: usize, secret: &[u8]) {
        self.inputs[input].unlocking = p2h_unlocking(secret);
    }

    fn encode(&self, w: &mut Writer, stripped: bool) {
        w.u8(UTXO_TX_TAG)
            .u8(match self.kind {
                TxKind::Normal => 0,
                TxKind::Coinbase => 1,
            })
            .u64(self.nonce)
            .len_prefix(self.inputs.len());
        for input in &self.inputs {
            w.fixed(input.outpoint.txid.as_bytes()).u32(input.outpoint.index);
            if stripped {
                Script::empty().encode(w);
            } else {
                input.unlocking.encode(w);
            }
        }
        w.len_prefix(self.outputs.len());
        for output in &self.outputs {
            w.u64(output.value.value());
            output.locking.encode(w);
        }
        match (&self.issuer_signature, stripped) {
            (Some(sig), false) => w.u8(1).bytes(sig.as_bytes()),
            _ => w.u8(0),
        };
    }

    /// Layout: tag `0x55`, kind (u8: 0 normal, 1 coinbase), nonce (u64),
    /// input count (u32) then per input txid (32) + index (u32) + unlocking
    /// script, output count (u32) then per output value (u64) + locking
    /// script, issuer-signature flag (u8) [+ length-prefixed signature].
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w, false);
        w.finish()
    }

    /// What signatures commit to: the canonical bytes with every unlocking
    /// script emptied and the issuer signature removed.
    pub fn signing_payload(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w, true);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        match r.u8()? {
            UTXO_TX_TAG => {}
            tag => return Err(DecodeError::InvalidTag { what: "utxo tx", tag }),
        }
        let kind = match r.u8()? {
            0 => TxKind::Normal,
            1 => TxKind::Coinbase,
            tag => return Err(DecodeError::InvalidTag { what: "tx kind", tag }),
        };
        let nonce = r.u64()?;
        let n_inputs = r.u32()? as usize;
        let mut inputs = Vec::with_capacity(n_inputs.min(r.remaining()));
        for _ in 0..n_inputs {
            let txid = Digest::from_bytes(r.array()?);
            let index = r.u32()?;
            let unlocking = Script::decode(&mut r)?;
            inputs.push(TxIn { outpoint: UtxoId { txid, index }, unlocking });
        }
        let n_outputs = r.u32()? as usize;
        let mut outputs = Vec::with_capacity(n_outputs.min(r.remaining()));
        for _ in 0..n_outputs {
            let value = Amount::new(r.u64()?);
            let locking = Script::decode(&mut r)?;
            outputs.push(TxOut { value, locking });
        }
        let issuer_signature = match r.u8()? {
            0 => None,
            1 => Some(Signature::from_bytes(r.bytes()?.to_vec())),
            tag => return Err(DecodeError::InvalidTag { what: "signature flag", tag }),
        };
        r.finish()?;
        Ok(UtxoTx { kind, nonce, inputs, outputs, issuer_signature })
    }

    pub fn txid(&self) -> Digest {
        hash(&self.to_bytes())
    }

    pub fn output_id(&self, index: u32) -> UtxoId {
        UtxoId { txid: self.txid(), index }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::keygen;
    use crate::utxo::p2pkh_output;

    fn sample() -> UtxoTx {
        let a = keygen(b"A");
        let b = keygen(b"B");
        let funding = UtxoTx::coinbase(vec![p2pkh_output(Amount::new(10), &a.address())], 0, &keygen(b"issuer"));
        let mut tx = UtxoTx::transfer(
            &[funding.output_id(0)],
            vec![p2pkh_output(Amount::new(4), &b.address()), p2pkh_output(Amount::new(6), &a.address())],
        );
        tx.sign_inputs(&[&a]);
        tx
    }

    #[test]
    fn bytes_roundtrip_and_determinism() {
        let tx = sample();
        assert_eq!(UtxoTx::from_bytes(&tx.to_bytes()).unwrap(), tx);
        assert_eq!(tx.to_bytes(), sample().to_bytes());
        let mut trailing = tx.to_bytes();
        trailing.push(0);
        assert_eq!(UtxoTx::from_bytes(&trailing), Err(DecodeError::TrailingBytes(1)));
    }

    #[test]
    fn output_order_changes_txid() {
        let tx = sample();
        let mut swapped = tx.clone();
        swapped.outputs.reverse();
        assert_ne!(tx.to_bytes(), swapped.to_bytes());
        assert_ne!(tx.txid(), swapped.txid());
    }

    #[test]
    fn signing_payload_ignores_unlocking_scripts() {
        let tx = sample();
        let mut bare = tx.clone();
        bare.inputs[0].unlocking = Script::empty();
        assert_eq!(tx.signing_payload(), bare.signing_payload());
        assert_ne!(tx.to_bytes(), bare.to_bytes());
    }

    #[test]
    fn utxo_id_text_form() {
        let id = sample().output_id(1);
        let text = id.to_string();
        assert!(text.ends_with(":1"));
        assert_eq!(text.parse::<UtxoId>().unwrap(), id);
        assert_eq!("nocolon".parse::<UtxoId>(), Err(ParseUtxoIdError::Format));
        assert!(format!("{}:x", id.txid).parse::<UtxoId>().is_err());
    }

    #[test]
    fn owner_comes_from_the_locking_template() {
        let tx = sample();
        assert_eq!(tx.outputs[0].owner(), Some(keygen(b"B").address()));
        let hashlock = crate::utxo::p2h_output(Amount::new(1), &hash(b"s"));
        assert_eq!(hashlock.owner(), None);
    }
}
