//! Random valid workloads for the kernels, driven by a caller-supplied rng.
//! Used by the property suites, the replica experiments and the CLI's
//! generated scenarios.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::account::{AccountState, AccountTx, ReplayMode};
use crate::amount::Amount;
use crate::crypto::{hash, keygen, Digest, KeyPair, UserId};
use crate::script::{p2h_unlocking, p2pkh_unlocking, Template};
use crate::token::{TokenId, TokenRegistry, TokenTransfer};
use crate::utxo::{p2h_output, p2pkh_output, Chainstate, TxOut, UtxoId, UtxoTx};

/// Deterministic participant keys, shared by every workload.
pub fn participants(n: usize) -> Vec<KeyPair> {
    (0..n).map(|i| keygen(format!("workload/participant/{i}").as_bytes())).collect()
}

pub fn workload_issuer() -> KeyPair {
    keygen(b"workload/issuer")
}

/// Spending material for outputs created by a workload.
#[derive(Clone, Debug, Default)]
pub struct Wallet {
    keys: BTreeMap<UserId, KeyPair>,
    secrets: BTreeMap<Digest, Vec<u8>>,
}

impl Wallet {
    pub fn new(keys: &[KeyPair]) -> Self {
        Wallet { keys: keys.iter().map(|k| (k.address(), k.clone())).collect(), secrets: BTreeMap::new() }
    }

    pub fn can_spend(&self, out: &TxOut) -> bool {
        match out.locking.template() {
            Template::PayToPublicKeyHash(d) => self.keys.contains_key(&UserId::from_digest(d)),
            Template::PayToHash(d) => self.secrets.contains_key(&d),
            Template::NonStandard => false,
        }
    }

    /// Fresh hash lock; the wallet remembers the preimage.
    pub fn new_hash_lock(&mut self, rng: &mut impl Rng) -> Digest {
        let mut secret = vec![0u8; 16];
        rng.fill_bytes(&mut secret);
        let d = hash(&secret);
        self.secrets.insert(d, secret);
        d
    }

    /// Fills the unlocking script of every input of `tx`.
    pub fn authorize(&self, tx: &mut UtxoTx, state: &Chainstate) {
        let payload = tx.signing_payload();
        for input in &mut tx.inputs {
            let prev = state.get(&input.outpoint).expect("wallet spends active outputs");
            input.unlocking = match prev.locking.template() {
                Template::PayToPublicKeyHash(d) => {
                    let key = &self.keys[&UserId::from_digest(d)];
                    p2pkh_unlocking(&key.sign(&payload), &key.public)
                }
                Template::PayToHash(d) => p2h_unlocking(&self.secrets[&d]),
                Template::NonStandard => panic!("wallet never creates non-standard outputs"),
            };
        }
    }
}

/// A valid UTXO history and the wallet able to extend it.
pub struct UtxoWorkload {
    pub issuer: KeyPair,
    pub keys: Vec<KeyPair>,
    pub wallet: Wallet,
    pub state: Chainstate,
}

impl UtxoWorkload {
    pub fn new(participants_n: usize) -> Self {
        let keys = participants(participants_n);
        let issuer = workload_issuer();
        UtxoWorkload { wallet: Wallet::new(&keys), state: Chainstate::new(issuer.public.clone()), issuer, keys }
    }

    pub fn log(&self) -> &[UtxoTx] {
        self.state.log()
    }

    fn recipient(&mut self, rng: &mut impl Rng, value: Amount) -> TxOut {
        if rng.random_ratio(1, 6) {
            let lock = self.wallet.new_hash_lock(rng);
            p2h_output(value, &lock)
        } else {
            p2pkh_output(value, &self.keys.choose(rng).expect("participants").address())
        }
    }

    /// Builds one random valid transaction without applying it.
    pub fn next_tx(&mut self, rng: &mut impl Rng) -> UtxoTx {
        let spendable: Vec<(UtxoId, Amount)> = self
            .state
            .active()
            .iter()
            .filter(|(_, o)| self.wallet.can_spend(o))
            .map(|(id, o)| (*id, o.value))
            .collect();
        if spendable.is_empty() || rng.random_ratio(1, 8) {
            let n = rng.random_range(1..=3);
            let outputs = (0..n).map(|_| {
                let v = Amount::new(rng.random_range(1..=1_000));
                self.recipient(rng, v)
            });
            let outputs: Vec<TxOut> = outputs.collect();
            return UtxoTx::coinbase(outputs, self.state.log().len() as u64, &self.issuer);
        }
        let k = rng.random_range(1..=spendable.len().min(3));
        let chosen: Vec<(UtxoId, Amount)> = spendable.choose_multiple(rng, k).copied().collect();
        let total: u64 = chosen.iter().map(|(_, v)| v.value()).sum();
        let max_outputs = total.min(3) as usize;
        let n = rng.random_range(1..=max_outputs);
        let values = random_partition(rng, total, n);
        let outputs = values.into_iter().map(|v| self.recipient(rng, Amount::new(v))).collect();
        let ids: Vec<UtxoId> = chosen.iter().map(|(id, _)| *id).collect();
        let mut tx = UtxoTx::transfer(&ids, outputs);
        self.wallet.authorize(&mut tx, &self.state);
        tx
    }

    /// Appends `count` random valid transactions.
    pub fn extend(&mut self, rng: &mut impl Rng, count: usize) {
        for _ in 0..count {
            let tx = self.next_tx(rng);
            self.state.apply_mut(&tx).expect("workload transactions are valid");
        }
    }
}

/// `total` split into `n` positive parts.
pub fn random_partition(rng: &mut impl Rng, total: u64, n: usize) -> Vec<u64> {
    assert!(n >= 1 && total >= n as u64);
    let mut cuts: Vec<u64> = Vec::with_capacity(n + 1);
    cuts.push(0);
    while cuts.len() < n {
        let c = rng.random_range(1..total);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.push(total);
    cuts.sort_unstable();
    cuts.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Funded account state plus a stream of valid transfers.
pub fn account_workload(
    rng: &mut impl Rng,
    keys: &[KeyPair],
    tx_count: usize,
    mode: ReplayMode,
) -> (AccountState, Vec<AccountTx>) {
    let mut state = AccountState::new();
    for k in keys {
        state.mint_mut(k.address(), Amount::new(rng.random_range(0..=1_000))).expect("small balances");
    }
    let genesis = state.clone();
    let mut txs = Vec::with_capacity(tx_count);
    while txs.len() < tx_count {
        let payer = keys.choose(rng).expect("participants");
        let payee = keys.choose(rng).expect("participants");
        let balance = state.balance(&payer.address()).value();
        let amount = Amount::new(rng.random_range(0..=balance));
        let nonce = (mode == ReplayMode::NonceProtected).then(|| state.nonce(&payer.address()));
        let tx = AccountTx::signed(payer, payee.address(), amount, nonce);
        state.apply_mut(&tx, mode).expect("amount within balance");
        txs.push(tx);
    }
    (genesis, txs)
}

/// A registry of `objects` tokens plus a stream of owner-initiated transfers.
pub fn token_workload(
    rng: &mut impl Rng,
    keys: &[KeyPair],
    objects: usize,
    tx_count: usize,
) -> (TokenRegistry, Vec<TokenTransfer>) {
    let mut registry = TokenRegistry::new();
    for i in 0..objects {
        let owner = keys.choose(rng).expect("participants").address();
        registry
            .issue_mut(TokenId::new(format!("object-{i}")), Amount::new(rng.random_range(1..=1_000)), owner)
            .expect("fresh ids");
    }
    let genesis = registry.clone();
    let mut txs = Vec::with_capacity(tx_count);
    for _ in 0..tx_count {
        let token = TokenId::new(format!("object-{}", rng.random_range(0..objects)));
        let payer = registry.get(&token).expect("issued").owner;
        let payee = keys.choose(rng).expect("participants").address();
        let tx = TokenTransfer { payer, payee, token };
        registry.transfer_mut(&tx).expect("current owner transfers");
        txs.push(tx);
    }
    (genesis, txs)
}
