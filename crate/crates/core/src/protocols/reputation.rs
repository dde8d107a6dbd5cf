use std::collections::BTreeMap;

use thiserror::Error;

pub const INITIAL_REPUTATION: i64 = 100;
pub const REPUTATION_PENALTY: i64 = 10;
pub const DEFAULT_BAN_THRESHOLD: i64 = 0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReputationError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
}

/// Per-entity scores. Scores only go down; entities at or below the ban
/// threshold are denied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReputationBook {
    score_by_entity: BTreeMap<String, i64>,
    ban_threshold: i64,
    initial: i64,
    penalty: i64,
}

impl Default for ReputationBook {
    fn default() -> Self {
        Self::new(INITIAL_REPUTATION, REPUTATION_PENALTY, DEFAULT_BAN_THRESHOLD)
    }
}

impl ReputationBook {
    pub fn new(initial: i64, penalty: i64, ban_threshold: i64) -> Self {
        Self { score_by_entity: BTreeMap::new(), ban_threshold, initial, penalty }
    }

    /// Adds an entity at the initial score; re-registering keeps the old score.
    pub fn register(&mut self, id: &str) {
        self.score_by_entity.entry(id.to_string()).or_insert(self.initial);
    }

    pub fn score(&self, id: &str) -> Option<i64> {
        self.score_by_entity.get(id).copied()
    }

    pub fn is_banned(&self, id: &str) -> bool {
        self.score(id).is_some_and(|s| s <= self.ban_threshold)
    }

    pub fn reduce_reputation(&mut self, id: &str) -> Result<i64, ReputationError> {
        let s = self
            .score_by_entity
            .get_mut(id)
            .ok_or_else(|| ReputationError::UnknownEntity(id.to_string()))?;
        *s = (*s - self.penalty).max(0);
        Ok(*s)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, i64)> {
        self.score_by_entity.iter().map(|(k, v)| (k.as_str(), *v))
    }
}
