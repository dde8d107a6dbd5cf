//! In-process quorum consensus over replicated chains.
//!
//! Every validator keeps its own chain. A round has one proposal phase and
//! one all-to-all vote phase; a validator commits a block once it holds the
//! block and has received a quorum of votes for its hash. Validators that
//! saw the quorum form elsewhere catch up from the commit certificate at the
//! end of the round.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::crypto::{hash_parts, Digest, Domain};

use super::block::Block;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Behavior {
    Honest,
    /// Never proposes and never votes.
    Silent,
    /// Sends conflicting proposals as leader and conflicting votes as voter.
    Equivocating,
}

impl Behavior {
    pub fn is_byzantine(self) -> bool {
        self != Behavior::Honest
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Behavior::Honest => "honest",
            Behavior::Silent => "silent",
            Behavior::Equivocating => "equivocating",
        })
    }
}

impl FromStr for Behavior {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "honest" => Ok(Behavior::Honest),
            "silent" => Ok(Behavior::Silent),
            "equivocating" => Ok(Behavior::Equivocating),
            other => Err(format!("unknown validator behavior `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidatorError {
    #[error("at least 4 validators are required, got {0}")]
    TooFew(usize),
    #[error("{byzantine} byzantine validators exceed the tolerance f = {f}")]
    TooManyByzantine { byzantine: usize, f: usize },
    #[error("validator index {index} out of range for n = {n}")]
    UnknownValidator { index: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatorSet {
    behaviors: Vec<Behavior>,
}

impl ValidatorSet {
    pub fn honest(n: usize) -> Result<Self, ValidatorError> {
        if n < 4 {
            return Err(ValidatorError::TooFew(n));
        }
        Ok(Self { behaviors: vec![Behavior::Honest; n] })
    }

    pub fn with_behaviors(behaviors: Vec<Behavior>) -> Result<Self, ValidatorError> {
        let mut set = Self::honest(behaviors.len())?;
        for (i, b) in behaviors.into_iter().enumerate() {
            set.set_behavior(i, b)?;
        }
        Ok(set)
    }

    /// Changes one validator's behavior, refusing to exceed f Byzantine members.
    pub fn set_behavior(&mut self, index: usize, behavior: Behavior) -> Result<(), ValidatorError> {
        let n = self.n();
        if index >= n {
            return Err(ValidatorError::UnknownValidator { index, n });
        }
        let byzantine = self
            .behaviors
            .iter()
            .enumerate()
            .filter(|(i, b)| if *i == index { behavior.is_byzantine() } else { b.is_byzantine() })
            .count();
        if byzantine > self.f() {
            return Err(ValidatorError::TooManyByzantine { byzantine, f: self.f() });
        }
        self.behaviors[index] = behavior;
        Ok(())
    }

    /// Builds a set without the f bound, for exercising liveness loss.
    pub fn beyond_tolerance(behaviors: Vec<Behavior>) -> Result<Self, ValidatorError> {
        if behaviors.len() < 4 {
            return Err(ValidatorError::TooFew(behaviors.len()));
        }
        if behaviors.iter().all(|b| b.is_byzantine()) {
            let f = (behaviors.len() - 1) / 3;
            return Err(ValidatorError::TooManyByzantine { byzantine: behaviors.len(), f });
        }
        Ok(Self { behaviors })
    }

    pub fn n(&self) -> usize {
        self.behaviors.len()
    }

    pub fn f(&self) -> usize {
        (self.n() - 1) / 3
    }

    /// Smallest vote count such that two quorums share an honest member:
    /// ⌈(n+f+1)/2⌉, which is 2f+1 when n = 3f+1.
    pub fn quorum(&self) -> usize {
        (self.n() + self.f() + 2) / 2
    }

    pub fn behavior(&self, index: usize) -> Behavior {
        self.behaviors[index]
    }

    pub fn behaviors(&self) -> &[Behavior] {
        &self.behaviors
    }

    pub fn honest_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(|i| !self.behaviors[*i].is_byzantine())
    }

    pub fn leader(&self, height: u64, view: u64) -> usize {
        ((height + view) % self.n() as u64) as usize
    }
}

/// What each validator received and decided in one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ballot {
    pub proposals: Vec<Option<Block>>,
    /// `votes[from][to]`
    pub votes: Vec<Vec<Option<Digest>>>,
    /// Hash committed directly by each validator during the vote phase.
    pub direct_commits: Vec<Option<Digest>>,
}

impl Ballot {
    /// Distinct hashes committed by honest validators. More than one would
    /// be a safety violation.
    pub fn committed_hashes(&self, set: &ValidatorSet) -> BTreeSet<Digest> {
        set.honest_indices().filter_map(|i| self.direct_commits[i]).collect()
    }

    pub fn committed_block(&self, set: &ValidatorSet) -> Option<&Block> {
        let h = *self.committed_hashes(set).iter().next()?;
        self.proposals.iter().flatten().find(|b| b.block_hash == h)
    }
}

fn decoy_hash(h: &Digest, to: usize) -> Digest {
    hash_parts(Domain::Raw, &[&b"equivocation"[..], h, &(to as u64).to_be_bytes()])
}

/// Runs the proposal and vote phases. `candidate` is the block an honest
/// leader would propose; `is_valid` is each honest validator's acceptance
/// check for a proposal.
pub fn run_ballot(
    set: &ValidatorSet,
    leader: usize,
    candidate: &Block,
    mut is_valid: impl FnMut(usize, &Block) -> bool,
) -> Ballot {
    let n = set.n();
    let mut proposals: Vec<Option<Block>> = vec![None; n];
    match set.behavior(leader) {
        Behavior::Honest => proposals.iter_mut().for_each(|p| *p = Some(candidate.clone())),
        Behavior::Silent => {}
        Behavior::Equivocating => {
            let twin = Block::new(candidate.height, candidate.timestamp + 1, candidate.prev_hash, candidate.tx_list.clone());
            let peers: Vec<usize> = (0..n).filter(|i| *i != leader).collect();
            let half = peers.len() / 2;
            for (k, i) in peers.into_iter().enumerate() {
                proposals[i] = Some(if k < half { candidate.clone() } else { twin.clone() });
            }
            proposals[leader] = Some(candidate.clone());
        }
    }

    let distinct: Vec<Digest> = proposals
        .iter()
        .flatten()
        .map(|b| b.block_hash)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut votes = vec![vec![None; n]; n];
    for from in 0..n {
        match set.behavior(from) {
            Behavior::Honest => {
                if let Some(p) = &proposals[from] {
                    if is_valid(from, p) {
                        votes[from].iter_mut().for_each(|v| *v = Some(p.block_hash));
                    }
                }
            }
            Behavior::Silent => {}
            Behavior::Equivocating => {
                for (to, v) in votes[from].iter_mut().enumerate() {
                    *v = match distinct.len() {
                        0 => None,
                        1 if to % 2 == 1 => Some(decoy_hash(&distinct[0], to)),
                        len => Some(distinct[to % len]),
                    };
                }
            }
        }
    }

    let mut direct_commits = vec![None; n];
    for to in 0..n {
        let mut tally: BTreeMap<Digest, usize> = BTreeMap::new();
        for row in &votes {
            if let Some(h) = row[to] {
                *tally.entry(h).or_default() += 1;
            }
        }
        if let Some(p) = &proposals[to] {
            if tally.get(&p.block_hash).copied().unwrap_or(0) >= set.quorum() {
                direct_commits[to] = Some(p.block_hash);
            }
        }
    }

    Ballot { proposals, votes, direct_commits }
}
