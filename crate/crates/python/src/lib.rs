//! Python bindings: keys, the three record kernels, e-cash and the reports.
//!
//! Structured values cross the boundary as JSON strings, identical to what
//! the CLI writes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ledgerlab::account::{AccountState, AccountTx, ReplayMode};
use ledgerlab::analysis::{
    pseudonym_growth_with, render_tables_text, run_fraud_scenario as fraud, tables_report as tables, trace_lineage,
    AddressPolicy, FraudKernel, FraudScenario, GrowthKernel,
};
use ledgerlab::crypto::{verify as rsa_verify, PublicKey, Signature, UserId};
use ledgerlab::ecash::{self, issuer_setup, Coin as CoreCoin, Issuer, Redemption};
use ledgerlab::snapshot::{to_sorted_json, LogFile, Snapshot};
use ledgerlab::token::{TokenId, TokenRegistry as CoreRegistry, TokenTransfer};
use ledgerlab::utxo::{self, Chainstate as CoreChainstate, UtxoId, UtxoTx};
use ledgerlab::{Amount, CryptoMode};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn user(address: &str) -> PyResult<UserId> {
    address.parse().map_err(|e| value_err(format!("bad address {address:?}: {e:?}")))
}

fn crypto_mode(name: &str) -> PyResult<CryptoMode> {
    match name {
        "toy" => Ok(CryptoMode::Toy),
        "real" => Ok(CryptoMode::Real),
        other => Err(value_err(format!("crypto mode must be 'toy' or 'real', got {other:?}"))),
    }
}

fn parse_as<T: serde::de::DeserializeOwned>(what: &str, name: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(name.to_owned()))
        .map_err(|_| value_err(format!("unknown {what} {name:?}")))
}

/// Deterministic RSA key pair derived from a seed.
#[pyclass(name = "KeyPair", skip_from_py_object, frozen)]
#[derive(Clone)]
struct PyKeyPair(ledgerlab::KeyPair);

#[pymethods]
impl PyKeyPair {
    #[new]
    #[pyo3(signature = (seed, crypto = "toy"))]
    fn new(seed: &[u8], crypto: &str) -> PyResult<Self> {
        Ok(PyKeyPair(crypto_mode(crypto)?.keygen(seed)))
    }

    #[getter]
    fn address(&self) -> String {
        self.0.address().to_string()
    }

    #[getter]
    fn public_key(&self) -> String {
        hex::encode(self.0.public.to_bytes())
    }

    fn sign(&self, message: &[u8]) -> Vec<u8> {
        self.0.sign(message).into_bytes()
    }

    fn __repr__(&self) -> String {
        format!("KeyPair(address={})", self.0.address())
    }
}

#[pyfunction]
fn hash(data: &[u8]) -> String {
    ledgerlab::hash(data).to_hex()
}

#[pyfunction]
fn verify(public_key: &str, message: &[u8], signature: Vec<u8>) -> PyResult<bool> {
    let key = PublicKey::from_bytes(&hex::decode(public_key).map_err(value_err)?).map_err(value_err)?;
    Ok(rsa_verify(&key, message, &Signature::from_bytes(signature)))
}

/// A signed account transfer; keep it around to replay it.
#[pyclass(name = "AccountTransaction", skip_from_py_object, frozen)]
#[derive(Clone)]
struct PyAccountTx(AccountTx);

#[pymethods]
impl PyAccountTx {
    #[getter]
    fn txid(&self) -> String {
        self.0.txid().to_string()
    }

    fn to_json(&self) -> String {
        to_sorted_json(&self.0)
    }
}

#[pyclass(name = "AccountLedger")]
struct PyAccountLedger {
    state: AccountState,
    mode: ReplayMode,
}

#[pymethods]
impl PyAccountLedger {
    #[new]
    #[pyo3(signature = (nonce_protected = false))]
    fn new(nonce_protected: bool) -> Self {
        let mode = if nonce_protected { ReplayMode::NonceProtected } else { ReplayMode::Naive };
        PyAccountLedger { state: AccountState::new(), mode }
    }

    fn mint(&mut self, address: &str, amount: u64) -> PyResult<()> {
        self.state.mint_mut(user(address)?, Amount::new(amount)).map_err(value_err)
    }

    /// Signs a transfer using the payer's current nonce when nonces are on.
    fn transfer(&self, payer: &PyKeyPair, payee: &str, amount: u64) -> PyResult<PyAccountTx> {
        let nonce = (self.mode == ReplayMode::NonceProtected).then(|| self.state.nonce(&payer.0.address()));
        Ok(PyAccountTx(AccountTx::signed(&payer.0, user(payee)?, Amount::new(amount), nonce)))
    }

    fn apply(&mut self, tx: &PyAccountTx) -> PyResult<()> {
        self.state.apply_mut(&tx.0, self.mode).map_err(value_err)
    }

    fn balance(&self, address: &str) -> PyResult<u64> {
        Ok(self.state.balance(&user(address)?).value())
    }

    fn total_supply(&self) -> u128 {
        self.state.total_supply()
    }

    fn __len__(&self) -> usize {
        self.state.account_count()
    }

    fn snapshot_json(&self) -> String {
        Snapshot::account(&self.state).to_json()
    }
}

#[pyclass(name = "TokenRegistry")]
struct PyTokenRegistry(CoreRegistry);

#[pymethods]
impl PyTokenRegistry {
    #[new]
    fn new() -> Self {
        PyTokenRegistry(CoreRegistry::new())
    }

    fn issue(&mut self, token: &str, value: u64, owner: &str) -> PyResult<()> {
        self.0.issue_mut(TokenId::new(token), Amount::new(value), user(owner)?).map_err(value_err)
    }

    fn transfer(&mut self, token: &str, payer: &str, payee: &str) -> PyResult<()> {
        let tx = TokenTransfer { payer: user(payer)?, payee: user(payee)?, token: TokenId::new(token) };
        self.0.transfer_mut(&tx).map_err(value_err)
    }

    fn owner(&self, token: &str) -> Option<String> {
        self.0.get(&TokenId::new(token)).map(|e| e.owner.to_string())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn snapshot_json(&self) -> String {
        Snapshot::token(&self.0).to_json()
    }
}

#[pyclass(name = "UtxoTransaction", skip_from_py_object, frozen)]
#[derive(Clone)]
struct PyUtxoTx(UtxoTx);

#[pymethods]
impl PyUtxoTx {
    #[getter]
    fn txid(&self) -> String {
        self.0.txid().to_string()
    }

    /// Id of output `index`, as `txid:index`.
    fn output_id(&self, index: u32) -> String {
        self.0.output_id(index).to_string()
    }

    fn output_values(&self) -> Vec<u64> {
        self.0.outputs.iter().map(|o| o.value.value()).collect()
    }

    fn to_json(&self) -> String {
        to_sorted_json(&self.0)
    }
}

fn outpoint(id: &str) -> PyResult<UtxoId> {
    id.parse().map_err(|e| value_err(format!("bad utxo id {id:?}: {e}")))
}

#[pyclass(name = "Chainstate")]
struct PyChainstate(CoreChainstate);

#[pymethods]
impl PyChainstate {
    #[new]
    fn new(issuer_public_key: &str) -> PyResult<Self> {
        let key = PublicKey::from_bytes(&hex::decode(issuer_public_key).map_err(value_err)?).map_err(value_err)?;
        Ok(PyChainstate(CoreChainstate::new(key)))
    }

    /// Appends a coinbase signed by `issuer`; fails unless it is the configured issuer.
    fn issue(&mut self, issuer: &PyKeyPair, outputs: Vec<(String, u64)>) -> PyResult<PyUtxoTx> {
        let outs = outputs
            .iter()
            .map(|(a, v)| Ok(utxo::p2pkh_output(Amount::new(*v), &user(a)?)))
            .collect::<PyResult<Vec<_>>>()?;
        self.0.issue_mut(outs, &issuer.0).map(PyUtxoTx).map_err(value_err)
    }

    fn split(&self, outpoint_id: &str, payer: &PyKeyPair, payee: &str, amount: u64) -> PyResult<PyUtxoTx> {
        utxo::build_split(&self.0, outpoint(outpoint_id)?, &payer.0, user(payee)?, Amount::new(amount))
            .map(PyUtxoTx)
            .map_err(value_err)
    }

    fn merge(&self, outpoints: Vec<String>, payer: &PyKeyPair, payee: &str) -> PyResult<PyUtxoTx> {
        let ids = outpoints.iter().map(|o| outpoint(o)).collect::<PyResult<Vec<_>>>()?;
        utxo::build_merge(&self.0, &ids, &payer.0, user(payee)?).map(PyUtxoTx).map_err(value_err)
    }

    fn payment(&self, payer: &PyKeyPair, payee: &str, amount: u64) -> PyResult<PyUtxoTx> {
        utxo::build_payment(&self.0, &payer.0, user(payee)?, Amount::new(amount)).map(PyUtxoTx).map_err(value_err)
    }

    /// Violations `tx` would raise, as strings; empty when valid.
    fn validate(&self, tx: &PyUtxoTx) -> Vec<String> {
        self.0.validate(&tx.0).violations.iter().map(ToString::to_string).collect()
    }

    fn apply(&mut self, tx: &PyUtxoTx) -> PyResult<()> {
        self.0.apply_mut(&tx.0).map_err(value_err)
    }

    /// Active outputs as `{id: (value, owner or None)}`.
    fn active(&self) -> Vec<(String, u64, Option<String>)> {
        self.0
            .active()
            .iter()
            .map(|(id, o)| (id.to_string(), o.value.value(), o.owner().map(|u| u.to_string())))
            .collect()
    }

    fn total_active_value(&self) -> u128 {
        self.0.total_active_value()
    }

    fn log_length(&self) -> usize {
        self.0.log().len()
    }

    fn trace(&self, utxo_id: &str) -> PyResult<String> {
        trace_lineage(self.0.log(), outpoint(utxo_id)?).map(|c| to_sorted_json(&c)).map_err(value_err)
    }

    fn snapshot_json(&self) -> String {
        Snapshot::utxo(&self.0).to_json()
    }

    fn log_json(&self) -> String {
        LogFile::from_chainstate(&self.0).to_json()
    }
}

#[pyclass(name = "Coin", skip_from_py_object, frozen)]
#[derive(Clone)]
struct PyCoin(CoreCoin);

#[pymethods]
impl PyCoin {
    #[getter]
    fn serial(&self) -> String {
        hex::encode(&self.0.serial)
    }

    #[getter]
    fn denomination(&self) -> u64 {
        self.0.denomination.value()
    }
}

/// A coin issuer with one key per denomination and a spent list.
#[pyclass(name = "Mint")]
struct PyMint {
    issuer: Issuer,
    wallet: ChaCha20Rng,
}

#[pymethods]
impl PyMint {
    #[new]
    #[pyo3(signature = (denominations, seed, wallet_seed = 0, crypto = "toy"))]
    fn new(denominations: Vec<u64>, seed: &[u8], wallet_seed: u64, crypto: &str) -> PyResult<Self> {
        let denoms: Vec<Amount> = denominations.into_iter().map(Amount::new).collect();
        let keys = issuer_setup(&denoms, seed, crypto_mode(crypto)?).map_err(value_err)?;
        Ok(PyMint { issuer: Issuer::new(keys), wallet: ChaCha20Rng::seed_from_u64(wallet_seed) })
    }

    fn withdraw(&mut self, denomination: u64) -> PyResult<PyCoin> {
        ecash::withdraw(&self.issuer, Amount::new(denomination), &mut self.wallet).map(PyCoin).map_err(value_err)
    }

    /// `"accept"` or the kebab-case rejection reason.
    fn redeem(&self, coin: &PyCoin) -> String {
        match self.issuer.redeem(&coin.0) {
            Redemption::Accept => "accept".into(),
            Redemption::Reject(reason) => serde_json::to_value(reason)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
        }
    }

    fn spent_count(&self) -> usize {
        self.issuer.spent().len()
    }

    fn transcript_len(&self) -> usize {
        self.issuer.transcript().len()
    }
}

#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn tables_report(seed: u64) -> String {
    to_sorted_json(&tables(seed))
}

#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn render_tables(seed: u64) -> String {
    render_tables_text(&tables(seed))
}

/// `scenario` is `double-spend` or `replay`; `kernel` one of `utxo`,
/// `account-naive`, `account-nonce`, `token`.
#[pyfunction]
#[pyo3(signature = (scenario, kernel, seed = 0))]
fn run_fraud_scenario(scenario: &str, kernel: &str, seed: u64) -> PyResult<String> {
    let s: FraudScenario = parse_as("scenario", scenario)?;
    let k: FraudKernel = parse_as("kernel", kernel)?;
    fraud(s, k, seed).map(|r| to_sorted_json(&r)).map_err(value_err)
}

/// Entry counts before the first payment and after each one.
#[pyfunction]
#[pyo3(signature = (payments, participants = 2, policy = "fresh-address-per-payment", kernel = "account", seed = 0))]
fn pseudonym_growth(payments: usize, participants: usize, policy: &str, kernel: &str, seed: u64) -> PyResult<Vec<usize>> {
    let p: AddressPolicy = parse_as("policy", policy)?;
    let k: GrowthKernel = parse_as("kernel", kernel)?;
    let series = pseudonym_growth_with(payments, participants, p, k, seed).map_err(value_err)?;
    Ok(series.iter().map(|m| m.entry_count).collect())
}

#[pymodule]
pub fn ledgerlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKeyPair>()?;
    m.add_class::<PyAccountTx>()?;
    m.add_class::<PyAccountLedger>()?;
    m.add_class::<PyTokenRegistry>()?;
    m.add_class::<PyUtxoTx>()?;
    m.add_class::<PyChainstate>()?;
    m.add_class::<PyCoin>()?;
    m.add_class::<PyMint>()?;
    m.add_function(wrap_pyfunction!(hash, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(tables_report, m)?)?;
    m.add_function(wrap_pyfunction!(render_tables, m)?)?;
    m.add_function(wrap_pyfunction!(run_fraud_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(pseudonym_growth, m)?)?;
    Ok(())
}
