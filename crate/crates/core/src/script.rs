//! A straight-line stack machine for locking and unlocking scripts.
//!
//! The unlocking script runs first, then the locking script runs on the same
//! stack. A spend is authorised when both finish without a fault and the top
//! of the stack is truthy. An empty element is false; any non-empty element is
//! true.
//!
//! Scripts have a textual notation used in fixtures and logs:
//!
//! ```text
//! DUP HASH PUSH:ab12... EQUALVERIFY CHECKSIG
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::codec::{DecodeError, Reader, Writer};
use crate::crypto::{hash, verify, Digest, PublicKey, Signature, DIGEST_LEN};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Op {
    Push(Vec<u8>),
    Dup,
    Hash,
    Equal,
    EqualVerify,
    CheckSig,
}

impl Op {
    const PUSH: u8 = 0x01;
    const DUP: u8 = 0x10;
    const HASH: u8 = 0x11;
    const EQUAL: u8 = 0x12;
    const EQUALVERIFY: u8 = 0x13;
    const CHECKSIG: u8 = 0x14;

    fn name(&self) -> &'static str {
        match self {
            Op::Push(_) => "PUSH",
            Op::Dup => "DUP",
            Op::Hash => "HASH",
            Op::Equal => "EQUAL",
            Op::EqualVerify => "EQUALVERIFY",
            Op::CheckSig => "CHECKSIG",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Script(Vec<Op>);

/// The recognised output templates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Template {
    PayToPublicKeyHash(Digest),
    PayToHash(Digest),
    NonStandard,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("commitment must be {DIGEST_LEN} bytes, got {0}")]
    DigestLength(usize),
    #[error("unknown instruction `{0}`")]
    UnknownInstruction(String),
    #[error("invalid push data `{0}`")]
    InvalidPushData(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

impl Script {
    pub fn new(ops: Vec<Op>) -> Self {
        Script(ops)
    }

    pub fn empty() -> Self {
        Script(Vec::new())
    }

    pub fn ops(&self) -> &[Op] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_push_only(&self) -> bool {
        self.0.iter().all(|op| matches!(op, Op::Push(_)))
    }

    pub fn template(&self) -> Template {
        match self.0.as_slice() {
            [Op::Dup, Op::Hash, Op::Push(h), Op::EqualVerify, Op::CheckSig] if h.len() == DIGEST_LEN => {
                Template::PayToPublicKeyHash(Digest::from_slice(h).unwrap())
            }
            [Op::Hash, Op::Push(h), Op::Equal] if h.len() == DIGEST_LEN => {
                Template::PayToHash(Digest::from_slice(h).unwrap())
            }
            _ => Template::NonStandard,
        }
    }

    /// Binary form: `u32` op count, then one tag byte per op; pushes carry
    /// length-prefixed data.
    pub fn encode(&self, w: &mut Writer) {
        w.len_prefix(self.0.len());
        for op in &self.0 {
            match op {
                Op::Push(data) => {
                    w.u8(Op::PUSH).bytes(data);
                }
                Op::Dup => {
                    w.u8(Op::DUP);
                }
                Op::Hash => {
                    w.u8(Op::HASH);
                }
                Op::Equal => {
                    w.u8(Op::EQUAL);
                }
                Op::EqualVerify => {
                    w.u8(Op::EQUALVERIFY);
                }
                Op::CheckSig => {
                    w.u8(Op::CHECKSIG);
                }
            }
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let count = r.u32()? as usize;
        // each op takes at least one byte
        if count > r.remaining() {
            return Err(DecodeError::UnexpectedEof(count));
        }
        let mut ops = Vec::with_capacity(count);
        for _ in 0..count {
            let op = match r.u8()? {
                Op::PUSH => Op::Push(r.bytes()?.to_vec()),
                Op::DUP => Op::Dup,
                Op::HASH => Op::Hash,
                Op::EQUAL => Op::Equal,
                Op::EQUALVERIFY => Op::EqualVerify,
                Op::CHECKSIG => Op::CheckSig,
                tag => return Err(DecodeError::InvalidTag { what: "script op", tag }),
            };
            ops.push(op);
        }
        Ok(Script(ops))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let script = Script::decode(&mut r)?;
        r.finish()?;
        Ok(script)
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, op) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match op {
                Op::Push(data) => write!(f, "PUSH:{}", hex::encode(data))?,
                other => f.write_str(other.name())?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Script[{self}]")
    }
}

impl FromStr for Script {
    type Err = ScriptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split_whitespace()
            .map(|token| match token {
                "DUP" => Ok(Op::Dup),
                "HASH" => Ok(Op::Hash),
                "EQUAL" => Ok(Op::Equal),
                "EQUALVERIFY" => Ok(Op::EqualVerify),
                "CHECKSIG" => Ok(Op::CheckSig),
                _ => match token.strip_prefix("PUSH:") {
                    Some(data) => hex::decode(data)
                        .map(Op::Push)
                        .map_err(|_| ScriptError::InvalidPushData(data.to_string())),
                    None => Err(ScriptError::UnknownInstruction(token.to_string())),
                },
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Script)
    }
}

impl Serialize for Script {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Script {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn compile_p2pkh(pubkey_hash: &[u8]) -> Result<Script, ScriptError> {
    if pubkey_hash.len() != DIGEST_LEN {
        return Err(ScriptError::DigestLength(pubkey_hash.len()));
    }
    Ok(Script(vec![
        Op::Dup,
        Op::Hash,
        Op::Push(pubkey_hash.to_vec()),
        Op::EqualVerify,
        Op::CheckSig,
    ]))
}

pub fn compile_p2h(target: &[u8]) -> Result<Script, ScriptError> {
    if target.len() != DIGEST_LEN {
        return Err(ScriptError::DigestLength(target.len()));
    }
    Ok(Script(vec![Op::Hash, Op::Push(target.to_vec()), Op::Equal]))
}

/// `[PUSH(sig), PUSH(pk)]`
pub fn p2pkh_unlocking(signature: &Signature, key: &PublicKey) -> Script {
    Script(vec![Op::Push(signature.as_bytes().to_vec()), Op::Push(key.to_bytes())])
}

pub fn p2h_unlocking(secret: &[u8]) -> Script {
    Script(vec![Op::Push(secret.to_vec())])
}

#[derive(Clone, Debug)]
pub struct ExecutionContext<'a> {
    /// The bytes CHECKSIG verifies against.
    pub signing_payload: &'a [u8],
    pub require_push_only: bool,
}

impl<'a> ExecutionContext<'a> {
    /// Validation-mode context: unlocking scripts must be push-only.
    pub fn new(signing_payload: &'a [u8]) -> Self {
        ExecutionContext { signing_payload, require_push_only: true }
    }

    pub fn permissive(signing_payload: &'a [u8]) -> Self {
        ExecutionContext { signing_payload, require_push_only: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Unlocking,
    Locking,
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "fault", rename_all = "kebab-case")]
pub enum ScriptFault {
    #[error("unlocking script contains non-push instruction at {index}")]
    NonPushUnlocking { index: usize },
    #[error("stack underflow at {phase:?} op {index} ({op})")]
    StackUnderflow { phase: Phase, index: usize, op: String },
    #[error("EQUALVERIFY failed at {phase:?} op {index}")]
    EqualVerifyFailed { phase: Phase, index: usize },
    #[error("CHECKSIG operand is not a public key at {phase:?} op {index}")]
    MalformedPublicKey { phase: Phase, index: usize },
    #[error("script finished with a false or empty stack")]
    FalseResult,
}

const TRUE: &[u8] = &[1];

fn truthy(element: &[u8]) -> bool {
    !element.is_empty()
}

/// Runs `unlocking` then `locking` on one stack. `Ok(())` means TRUE.
pub fn execute(unlocking: &Script, locking: &Script, ctx: &ExecutionContext<'_>) -> Result<(), ScriptFault> {
    if ctx.require_push_only {
        if let Some(index) = unlocking.0.iter().position(|op| !matches!(op, Op::Push(_))) {
            return Err(ScriptFault::NonPushUnlocking { index });
        }
    }
    let mut stack: Vec<Vec<u8>> = Vec::new();
    run(&mut stack, unlocking, Phase::Unlocking, ctx)?;
    run(&mut stack, locking, Phase::Locking, ctx)?;
    match stack.last() {
        Some(top) if truthy(top) => Ok(()),
        _ => Err(ScriptFault::FalseResult),
    }
}

fn run(stack: &mut Vec<Vec<u8>>, script: &Script, phase: Phase, ctx: &ExecutionContext<'_>) -> Result<(), ScriptFault> {
    for (index, op) in script.0.iter().enumerate() {
        let underflow = || ScriptFault::StackUnderflow { phase, index, op: op.name().to_string() };
        match op {
            Op::Push(data) => stack.push(data.clone()),
            Op::Dup => {
                let top = stack.last().ok_or_else(underflow)?.clone();
                stack.push(top);
            }
            Op::Hash => {
                let top = stack.pop().ok_or_else(underflow)?;
                stack.push(hash(&top).as_bytes().to_vec());
            }
            Op::Equal | Op::EqualVerify => {
                if stack.len() < 2 {
                    return Err(underflow());
                }
                let a = stack.pop().unwrap();
                let b = stack.pop().unwrap();
                if matches!(op, Op::EqualVerify) {
                    if a != b {
                        return Err(ScriptFault::EqualVerifyFailed { phase, index });
                    }
                } else {
                    stack.push(if a == b { TRUE.to_vec() } else { Vec::new() });
                }
            }
            Op::CheckSig => {
                if stack.len() < 2 {
                    return Err(underflow());
                }
                let key = stack.pop().unwrap();
                let sig = stack.pop().unwrap();
                let key = PublicKey::from_bytes(&key)
                    .map_err(|_| ScriptFault::MalformedPublicKey { phase, index })?;
                let ok = verify(&key, ctx.signing_payload, &Signature::from_bytes(sig));
                stack.push(if ok { TRUE.to_vec() } else { Vec::new() });
            }
        }
    }
    Ok(())
}
