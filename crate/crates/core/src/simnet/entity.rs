use std::collections::BTreeMap;

use thiserror::Error;

use crate::abe::AbeKey;
use crate::crypto::{canonical_encode, ds_keygen, solve_puzzle, CryptoError, GroupParams, KeyPair, PuzzleSolution};
use crate::homqv::SessionContext;
use crate::ledger::{SubmitError, TxId};
use crate::protocols::{ConnectionRequest, FlowRequest, NONCE_LEN};

use super::scenario::EntityKind;

/// Static description of a network entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub kind: EntityKind,
    /// Package name for apps, address-style id for controllers and switches.
    pub id: String,
    pub keys: KeyPair,
    /// Slice (controller, switch) or category (app).
    pub slice_or_category: String,
    /// Controllers an app registers with.
    pub controllers: Vec<String>,
    pub puzzle: Option<PuzzleSolution>,
}

/// Keys for an entity, derived from the scenario seed.
pub fn entity_keys(group: &GroupParams, seed: u64, kind: EntityKind, id: &str) -> KeyPair {
    ds_keygen(group, &canonical_encode(&(seed, kind.to_string(), id)))
}

impl EntityRecord {
    pub fn controller(group: &GroupParams, seed: u64, id: &str, slice: &str) -> Self {
        Self {
            kind: EntityKind::Controller,
            id: id.into(),
            keys: entity_keys(group, seed, EntityKind::Controller, id),
            slice_or_category: slice.into(),
            controllers: Vec::new(),
            puzzle: None,
        }
    }

    /// A switch record with its spoofing puzzle solved at `difficulty`.
    pub fn switch(group: &GroupParams, seed: u64, id: &str, slice: &str, difficulty: u8) -> Result<Self, CryptoError> {
        Ok(Self {
            kind: EntityKind::Switch,
            id: id.into(),
            keys: entity_keys(group, seed, EntityKind::Switch, id),
            slice_or_category: slice.into(),
            controllers: Vec::new(),
            puzzle: Some(solve_puzzle(id.as_bytes(), difficulty)?),
        })
    }

    pub fn app(group: &GroupParams, seed: u64, id: &str, category: &str, controllers: &[String]) -> Self {
        Self {
            kind: EntityKind::App,
            id: id.into(),
            keys: entity_keys(group, seed, EntityKind::App, id),
            slice_or_category: category.into(),
            controllers: controllers.to_vec(),
            puzzle: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpawnError {
    #[error("entity id `{0}` already exists")]
    DuplicateId(String),
    #[error("switch `{0}` has no valid puzzle solution")]
    BadPuzzle(String),
    #[error("unknown controller `{0}`")]
    UnknownController(String),
    #[error("unknown application category `{0}`")]
    UnknownCategory(String),
    #[error("ledger rejected registration: {0}")]
    Rejected(#[from] SubmitError),
}

#[derive(Debug, Clone)]
pub(crate) struct ControllerState {
    pub keys: KeyPair,
    pub contr_tx: TxId,
    pub crashed: bool,
    /// Established switch sessions: switch id → (registered key, session key).
    pub sessions: BTreeMap<String, (crate::crypto::GroupElement, [u8; 32])>,
    pub event_counter: u64,
    pub reactive_counter: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct SwitchState {
    pub keys: KeyPair,
    /// Key the switch registered with before its latest rotation.
    pub registered_keys: KeyPair,
    pub slice: String,
    pub puzzle: PuzzleSolution,
    pub controller: Option<String>,
    pub session: Option<SessionContext>,
    pub nonce: Option<[u8; NONCE_LEN]>,
    pub last_request: Option<ConnectionRequest>,
    pub accepted_tx: Option<TxId>,
    pub flow_table: BTreeMap<[u8; 32], (String, Vec<u8>)>,
    pub rekeys: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct AppState {
    pub keys: KeyPair,
    pub controllers: Vec<String>,
    pub sent_flows: Vec<FlowRequest>,
    pub abe_key: Option<AbeKey>,
}

#[derive(Debug, Clone)]
pub(crate) enum Entity {
    Controller(ControllerState),
    Switch(SwitchState),
    App(AppState),
}

impl Entity {
    pub fn kind(&self) -> EntityKind {
        match self {
            Entity::Controller(_) => EntityKind::Controller,
            Entity::Switch(_) => EntityKind::Switch,
            Entity::App(_) => EntityKind::App,
        }
    }
}
