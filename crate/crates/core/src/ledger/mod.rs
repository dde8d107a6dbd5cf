//! Replicated append-only ledger: transaction pool, block formation,
//! quorum consensus with finality, chain verification and commit hooks.

mod block;
mod consensus;
mod tx;

pub use block::{read_dump, verify_chain, write_dump, Block, ChainFault, ChainFaultKind, ZERO_HASH};
pub use consensus::{run_ballot, Ballot, Behavior, ValidatorError, ValidatorSet};
pub use tx::{
    app_sig_message, contr_sig_message, flow_sig_message, Transaction, TxId, TxKind, TxPayload,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use thiserror::Error;

use crate::crypto::{Digest, GroupParams};

pub const DEFAULT_BLOCK_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubmitError {
    #[error("signature check failed for {0:?}")]
    BadSignature(TxId),
    #[error("transaction {0:?} is already on chain or pending")]
    DuplicateTx(TxId),
    #[error("transaction {tx:?} references unknown {missing:?}")]
    DanglingReference { tx: TxId, missing: TxId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("commit hook `{hook}` panicked at height {height}: {message}")]
    HookPanic { hook: String, height: u64, message: String },
    #[error("commit hooks must be registered before the first commit")]
    HooksSealed,
    #[error("honest validators committed conflicting blocks at height {0}")]
    SafetyViolation(u64),
    #[error(transparent)]
    Validators(#[from] ValidatorError),
}

/// Deterministic handler run on every commit. Returned payloads enter the
/// pool and become eligible from the next round.
pub trait CommitHook {
    fn name(&self) -> &str;
    fn on_commit(&mut self, chain: &[Arc<Block>], block: &Block) -> Vec<TxPayload>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoundOutcome {
    Committed { block: Arc<Block>, leader: usize, hook_rejections: Vec<SubmitError> },
    NoQuorum { height: u64, leader: usize },
}

impl RoundOutcome {
    pub fn block(&self) -> Option<&Arc<Block>> {
        match self {
            RoundOutcome::Committed { block, .. } => Some(block),
            RoundOutcome::NoQuorum { .. } => None,
        }
    }
}

pub struct Ledger {
    group: GroupParams,
    validators: ValidatorSet,
    replicas: Vec<Vec<Arc<Block>>>,
    pool: BTreeMap<TxId, Transaction>,
    on_chain: HashMap<TxId, (u64, TxKind)>,
    hooks: Vec<Box<dyn CommitHook>>,
    block_cap: usize,
    view: u64,
}

impl std::fmt::Debug for Ledger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ledger")
            .field("height", &self.height())
            .field("pending", &self.pool.len())
            .field("validators", &self.validators)
            .finish_non_exhaustive()
    }
}

impl Ledger {
    /// Starts every replica at the shared genesis block.
    pub fn new(group: GroupParams, validators: ValidatorSet) -> Self {
        let genesis = Arc::new(Block::genesis());
        let replicas = vec![vec![genesis]; validators.n()];
        Self {
            group,
            validators,
            replicas,
            pool: BTreeMap::new(),
            on_chain: HashMap::new(),
            hooks: Vec::new(),
            block_cap: DEFAULT_BLOCK_CAP,
            view: 0,
        }
    }

    pub fn with_block_cap(mut self, cap: usize) -> Self {
        self.block_cap = cap.max(1);
        self
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    pub fn validators(&self) -> &ValidatorSet {
        &self.validators
    }

    pub fn set_behavior(&mut self, index: usize, behavior: Behavior) -> Result<(), LedgerError> {
        Ok(self.validators.set_behavior(index, behavior)?)
    }

    pub fn register_commit_hook(&mut self, hook: Box<dyn CommitHook>) -> Result<(), LedgerError> {
        if self.height() > 0 {
            return Err(LedgerError::HooksSealed);
        }
        self.hooks.push(hook);
        Ok(())
    }

    /// The committed chain as seen by the lowest-indexed honest validator.
    pub fn chain(&self) -> &[Arc<Block>] {
        let i = self.validators.honest_indices().next().expect("at least one honest validator");
        &self.replicas[i]
    }

    pub fn replica(&self, index: usize) -> &[Arc<Block>] {
        &self.replicas[index]
    }

    pub fn tip(&self) -> &Arc<Block> {
        self.chain().last().expect("chain holds genesis")
    }

    pub fn height(&self) -> u64 {
        self.tip().height
    }

    pub fn get_last_n_blocks(&self, n: usize) -> &[Arc<Block>] {
        let chain = self.chain();
        &chain[chain.len().saturating_sub(n)..]
    }

    pub fn pending(&self) -> impl Iterator<Item = &Transaction> {
        self.pool.values()
    }

    pub fn is_pending(&self, id: &TxId) -> bool {
        self.pool.contains_key(id)
    }

    /// Height at which a transaction was committed.
    pub fn committed_at(&self, id: &TxId) -> Option<u64> {
        self.on_chain.get(id).map(|(h, _)| *h)
    }

    fn known_kind(&self, id: &TxId) -> Option<TxKind> {
        self.on_chain.get(id).map(|(_, k)| *k).or_else(|| self.pool.get(id).map(Transaction::kind))
    }

    pub fn submit_tx(&mut self, tx: Transaction) -> Result<TxId, SubmitError> {
        let id = tx.id;
        if self.on_chain.contains_key(&id) || self.pool.contains_key(&id) {
            return Err(SubmitError::DuplicateTx(id));
        }
        if !tx.id_matches_payload() || !tx.payload.verify_signature(&self.group) {
            return Err(SubmitError::BadSignature(id));
        }
        for (r, kind) in tx.payload.references() {
            if self.known_kind(&r) != Some(kind) {
                return Err(SubmitError::DanglingReference { tx: id, missing: r });
            }
        }
        self.pool.insert(id, tx);
        Ok(id)
    }

    pub fn submit(&mut self, payload: TxPayload) -> Result<TxId, SubmitError> {
        self.submit_tx(Transaction::new(payload))
    }

    /// Picks up to `block_cap` pooled transactions whose references resolve
    /// on chain or inside the selection, in id order.
    fn select_txs(&self) -> Vec<Transaction> {
        let mut chosen: BTreeMap<TxId, &Transaction> = BTreeMap::new();
        for tx in self.pool.values().filter(|t| !t.payload.is_relationship()) {
            if chosen.len() == self.block_cap {
                break;
            }
            chosen.insert(tx.id, tx);
        }
        for tx in self.pool.values().filter(|t| t.payload.is_relationship()) {
            if chosen.len() == self.block_cap {
                break;
            }
            let resolved = tx.payload.references().iter().all(|(r, _)| {
                self.on_chain.contains_key(r) || chosen.contains_key(r)
            });
            if resolved {
                chosen.insert(tx.id, tx);
            }
        }
        chosen.into_values().cloned().collect()
    }

    fn block_is_valid(&self, chain: &[Arc<Block>], b: &Block) -> bool {
        let parent = chain.last().expect("chain holds genesis");
        if b.height != parent.height + 1
            || b.prev_hash != parent.block_hash
            || b.timestamp < parent.timestamp
            || b.tx_list.len() > self.block_cap
            || b.recompute_hash() != b.block_hash
        {
            return false;
        }
        let mut in_block = BTreeSet::new();
        for tx in &b.tx_list {
            if self.on_chain.contains_key(&tx.id) || !in_block.insert(tx.id) {
                return false;
            }
        }
        b.tx_list.iter().all(|tx| {
            let admitted = self.pool.get(&tx.id) == Some(tx);
            let sound = admitted || (tx.id_matches_payload() && tx.payload.verify_signature(&self.group));
            sound
                && tx.payload.references().iter().all(|(r, kind)| {
                    self.on_chain.get(r).map(|(_, k)| *k) == Some(*kind)
                        || b.tx_list.iter().any(|t| t.id == *r && t.kind() == *kind)
                })
        })
    }

    /// Runs one proposal/vote round at simulation tick `tick`.
    pub fn consensus_round(&mut self, tick: u64) -> Result<RoundOutcome, LedgerError> {
        let height = self.height() + 1;
        let leader = self.validators.leader(height, self.view);
        let tip = self.tip().clone();
        let candidate = Block::new(height, tick.max(tip.timestamp), tip.block_hash, self.select_txs());

        let mut verdicts: HashMap<Digest, bool> = HashMap::new();
        let ballot = {
            let this = &*self;
            run_ballot(&this.validators, leader, &candidate, |i, b| {
                *verdicts.entry(b.block_hash).or_insert_with(|| this.block_is_valid(&this.replicas[i], b))
            })
        };
        if ballot.committed_hashes(&self.validators).len() > 1 {
            return Err(LedgerError::SafetyViolation(height));
        }
        let Some(block) = ballot.committed_block(&self.validators).cloned() else {
            self.view += 1;
            return Ok(RoundOutcome::NoQuorum { height, leader });
        };
        self.view = 0;

        // Replicas that missed the block adopt it from the commit certificate.
        let block = Arc::new(block);
        for replica in &mut self.replicas {
            if replica.last().map(|b| b.height) == Some(height - 1) {
                replica.push(block.clone());
            }
        }
        for tx in &block.tx_list {
            self.pool.remove(&tx.id);
            self.on_chain.insert(tx.id, (height, tx.kind()));
        }

        let hook_rejections = self.fire_hooks(&block)?;
        Ok(RoundOutcome::Committed { block, leader, hook_rejections })
    }

    fn fire_hooks(&mut self, block: &Arc<Block>) -> Result<Vec<SubmitError>, LedgerError> {
        let mut hooks = std::mem::take(&mut self.hooks);
        let mut emitted = Vec::new();
        let mut panicked = None;
        for hook in hooks.iter_mut() {
            let chain = self.chain();
            match catch_unwind(AssertUnwindSafe(|| hook.on_commit(chain, block))) {
                Ok(out) => emitted.extend(out),
                Err(payload) => {
                    let message = payload
                        .downcast_ref::<&str>()
                        .map(|s| s.to_string())
                        .or_else(|| payload.downcast_ref::<String>().cloned())
                        .unwrap_or_else(|| "non-string panic payload".into());
                    panicked = Some(LedgerError::HookPanic { hook: hook.name().into(), height: block.height, message });
                    break;
                }
            }
        }
        self.hooks = hooks;
        if let Some(e) = panicked {
            return Err(e);
        }
        Ok(emitted.into_iter().filter_map(|p| self.submit(p).err()).collect())
    }
}

/// Emits a `TFlow` aggregate once both halves of a flow are on chain.
#[derive(Debug, Default)]
pub struct FlowAggregator {
    afore: HashMap<String, TxId>,
    after: HashMap<String, TxId>,
    emitted: BTreeSet<String>,
}

impl CommitHook for FlowAggregator {
    fn name(&self) -> &str {
        "flow-aggregator"
    }

    fn on_commit(&mut self, _chain: &[Arc<Block>], block: &Block) -> Vec<TxPayload> {
        let mut touched = BTreeSet::new();
        for tx in &block.tx_list {
            match &tx.payload {
                TxPayload::FlowAfore { id_flow, .. } => {
                    self.afore.entry(id_flow.clone()).or_insert(tx.id);
                    touched.insert(id_flow.clone());
                }
                TxPayload::FlowAfter { id_flow, .. } => {
                    self.after.entry(id_flow.clone()).or_insert(tx.id);
                    touched.insert(id_flow.clone());
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        for id_flow in touched {
            if let (Some(a), Some(b)) = (self.afore.get(&id_flow), self.after.get(&id_flow)) {
                if self.emitted.insert(id_flow) {
                    out.push(TxPayload::Flow { id_t_flow_afore: *a, id_t_flow_after: *b });
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests;
