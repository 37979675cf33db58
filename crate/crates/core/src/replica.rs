//! Replicas of the intermediary applying one broadcast transaction stream.
//!
//! There is no consensus protocol here. Each replica receives every
//! transaction once, in a seed-determined order, and then settles its mempool
//! under an [`OrderingRule`]. With a rule shared by all replicas
//! (`CanonicalTxid`) the replicas converge even when the stream holds
//! conflicting spends. With `Arrival` order, replicas that saw two conflicting
//! spends in different orders accept different ones and diverge.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::crypto::Digest;
use crate::utxo::{Chainstate, UtxoTx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingRule {
    Arrival,
    CanonicalTxid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScheduleSeed(pub u64);

#[derive(Clone, Debug)]
pub struct Replica {
    pub id: usize,
    chainstate: Chainstate,
    mempool: Vec<UtxoTx>,
}

impl Replica {
    pub fn new(id: usize, genesis: Chainstate) -> Self {
        Replica { id, chainstate: genesis, mempool: Vec::new() }
    }

    /// `n` replicas sharing one genesis state.
    pub fn group(n: usize, genesis: &Chainstate) -> Vec<Replica> {
        (0..n).map(|id| Replica::new(id, genesis.clone())).collect()
    }

    pub fn chainstate(&self) -> &Chainstate {
        &self.chainstate
    }

    pub fn mempool(&self) -> &[UtxoTx] {
        &self.mempool
    }

    pub fn receive(&mut self, tx: UtxoTx) {
        self.mempool.push(tx);
    }
}

/// Delivers every transaction to every replica exactly once. Returns, per
/// replica, the delivery order as indices into `txs`.
pub fn broadcast(txs: &[UtxoTx], replicas: &mut [Replica], seed: ScheduleSeed) -> Vec<Vec<usize>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed.0);
    let schedule: Vec<Vec<usize>> = replicas
        .iter()
        .map(|_| {
            let mut order: Vec<usize> = (0..txs.len()).collect();
            order.shuffle(&mut rng);
            order
        })
        .collect();
    deliver(txs, replicas, &schedule);
    schedule
}

/// Delivers according to an explicit schedule.
pub fn deliver(txs: &[UtxoTx], replicas: &mut [Replica], schedule: &[Vec<usize>]) {
    assert_eq!(schedule.len(), replicas.len(), "one delivery order per replica");
    for (replica, order) in replicas.iter_mut().zip(schedule) {
        for &i in order {
            replica.receive(txs[i].clone());
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicaOutcome {
    pub replica: usize,
    pub state_digest: Digest,
    pub accepted: Vec<Digest>,
    pub rejected: Vec<Digest>,
    /// Set if two accepted transactions consumed the same outpoint.
    pub conflicting_accepts: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundReport {
    pub rule: OrderingRule,
    pub replicas: Vec<ReplicaOutcome>,
    pub divergent: bool,
    pub divergent_pairs: Vec<(usize, usize)>,
}

impl RoundReport {
    pub fn safe(&self) -> bool {
        self.replicas.iter().all(|r| !r.conflicting_accepts)
    }
}

/// Each replica orders its mempool by `rule` and applies it, skipping
/// transactions that are invalid at the point they are reached.
pub fn settle_round(replicas: &mut [Replica], rule: OrderingRule) -> RoundReport {
    let outcomes: Vec<ReplicaOutcome> = replicas.iter_mut().map(|r| settle(r, rule)).collect();
    let mut divergent_pairs = Vec::new();
    for i in 0..outcomes.len() {
        for j in i + 1..outcomes.len() {
            if outcomes[i].state_digest != outcomes[j].state_digest {
                divergent_pairs.push((outcomes[i].replica, outcomes[j].replica));
            }
        }
    }
    RoundReport { rule, divergent: !divergent_pairs.is_empty(), divergent_pairs, replicas: outcomes }
}

fn settle(replica: &mut Replica, rule: OrderingRule) -> ReplicaOutcome {
    let mut pending: Vec<(Digest, UtxoTx)> = replica.mempool.drain(..).map(|tx| (tx.txid(), tx)).collect();
    if rule == OrderingRule::CanonicalTxid {
        pending.sort_by_key(|p| p.0);
    }
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    let mut consumed = BTreeSet::new();
    let mut conflicting_accepts = false;
    for (txid, tx) in pending {
        if replica.chainstate.apply_mut(&tx).is_ok() {
            for input in &tx.inputs {
                conflicting_accepts |= !consumed.insert(input.outpoint);
            }
            accepted.push(txid);
        } else {
            rejected.push(txid);
        }
    }
    ReplicaOutcome {
        replica: replica.id,
        state_digest: replica.chainstate.active_digest(),
        accepted,
        rejected,
        conflicting_accepts,
    }
}

/// Runs one broadcast-and-settle round from a shared genesis.
pub fn run_round(
    genesis: &Chainstate,
    txs: &[UtxoTx],
    replica_count: usize,
    seed: ScheduleSeed,
    rule: OrderingRule,
) -> (RoundReport, Vec<Replica>) {
    let mut replicas = Replica::group(replica_count, genesis);
    broadcast(txs, &mut replicas, seed);
    let report = settle_round(&mut replicas, rule);
    (report, replicas)
}

/// Whether the entry at `log_position` has at least `depth` entries at or
/// after it in a log of `log_length`. Positions not yet logged are never
/// confirmed.
pub fn confirmation_depth_check(log_position: usize, log_length: usize, depth: usize) -> bool {
    log_position < log_length && log_length - log_position >= depth
}
