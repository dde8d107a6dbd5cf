//! Deterministic discrete-time network simulation: controllers, switches
//! and applications exchanging messages over a simulated bus, with a
//! validator set committing one block per tick and scripted adversaries.

mod adversary;
mod entity;
mod report;
mod scenario;
mod world;

pub use adversary::{AdversaryConfig, AdversaryKind, AttackOutcome, AttackRecord};
pub use entity::{entity_keys, EntityRecord, SpawnError};
pub use report::{detection, ChainStats, ScenarioReport};
pub use scenario::{parse_scenario, Command, EntityKind, ParseError, Scenario, Statement};
pub use world::{parse_validator_target, MessagePayload, SimMessage, World};

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::crypto::GroupParams;
use crate::ledger::{Block, LedgerError};
use crate::protocols::{DEFAULT_FAILURE_WINDOW, INITIAL_REPUTATION};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    /// Controller-failure window in blocks.
    pub window: u64,
    /// Minimum puzzle difficulty for switches.
    pub difficulty: u8,
    pub validators: usize,
    /// The last `byzantine` validators equivocate from the start.
    pub byzantine: usize,
    pub initial_reputation: i64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            window: DEFAULT_FAILURE_WINDOW,
            difficulty: 16,
            validators: 4,
            byzantine: 0,
            initial_reputation: INITIAL_REPUTATION,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("line {line}: {message}")]
    Scenario { line: usize, message: String },
    #[error("unknown target: {0}")]
    UnknownTarget(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("bad configuration: {0}")]
    Config(String),
}

pub struct ScenarioOutcome {
    pub report: ScenarioReport,
    pub chain: Vec<Arc<Block>>,
}

fn at_line(line: usize) -> impl Fn(SimError) -> SimError {
    move |e| match e {
        SimError::Scenario { .. } | SimError::Ledger(_) => e,
        other => SimError::Scenario { line, message: other.to_string() },
    }
}

/// Checks names used by commands against the script's spawns, and attack
/// ticks against the total run length.
fn prevalidate(scenario: &Scenario) -> Result<(), SimError> {
    let mut kinds: BTreeMap<&str, EntityKind> = BTreeMap::new();
    for s in &scenario.statements {
        match &s.command {
            Command::SpawnController { id, .. } => {
                kinds.insert(id, EntityKind::Controller);
            }
            Command::SpawnSwitch { id, .. } => {
                kinds.insert(id, EntityKind::Switch);
            }
            Command::SpawnApp { id, .. } => {
                kinds.insert(id, EntityKind::App);
            }
            _ => {}
        }
    }
    let total = scenario.total_ticks();
    let want = |line: usize, id: &str, kind: EntityKind| match kinds.get(id) {
        Some(k) if *k == kind => Ok(()),
        _ => Err(SimError::Scenario { line, message: format!("unknown target: no {kind} named `{id}`") }),
    };
    for s in &scenario.statements {
        let l = s.line;
        match &s.command {
            Command::Attack { kind, target, tick } => {
                if *tick == 0 || *tick > total {
                    return Err(SimError::Scenario {
                        line: l,
                        message: format!("attack tick {tick} outside the run (1..={total})"),
                    });
                }
                match kind {
                    AdversaryKind::ForgedFlow | AdversaryKind::ReplayFlow | AdversaryKind::TamperFlowContent => {
                        want(l, target, EntityKind::App)?
                    }
                    AdversaryKind::ReplayConnection => want(l, target, EntityKind::Switch)?,
                    AdversaryKind::CrashController => want(l, target, EntityKind::Controller)?,
                    AdversaryKind::SpoofSwitch => {}
                    AdversaryKind::ByzantineValidator => {
                        parse_validator_target(target).map_err(at_line(l))?;
                    }
                }
            }
            Command::SpawnSwitch { contr: Some(c), .. } => want(l, c, EntityKind::Controller)?,
            Command::SpawnApp { contrs, .. } => {
                for c in contrs {
                    want(l, c, EntityKind::Controller)?;
                }
            }
            Command::Flow { app, contr, .. } => {
                want(l, app, EntityKind::App)?;
                want(l, contr, EntityKind::Controller)?;
            }
            Command::Connect { switch, contr } => {
                want(l, switch, EntityKind::Switch)?;
                want(l, contr, EntityKind::Controller)?;
            }
            Command::Rekey { switch } | Command::Packet { switch, .. } => want(l, switch, EntityKind::Switch)?,
            Command::Access { app, .. } => want(l, app, EntityKind::App)?,
            _ => {}
        }
    }
    Ok(())
}

fn execute(world: &mut World, s: &Statement) -> Result<(), SimError> {
    let group = world.group().clone();
    let seed = world.config().seed;
    let spawn_err = |e: SpawnError| SimError::Scenario { line: s.line, message: e.to_string() };
    match &s.command {
        Command::SpawnController { id, slice } => {
            world.spawn_entity(EntityRecord::controller(&group, seed, id, slice)).map_err(spawn_err)?;
        }
        Command::SpawnSwitch { id, slice, contr } => {
            let rec = EntityRecord::switch(&group, seed, id, slice, world.config().difficulty)
                .map_err(|e| SimError::Config(e.to_string()))?;
            world.spawn_entity(rec).map_err(spawn_err)?;
            if let Some(c) = contr {
                world.connect(id, c)?;
            }
        }
        Command::SpawnApp { id, category, contrs } => {
            world.spawn_entity(EntityRecord::app(&group, seed, id, category, contrs)).map_err(spawn_err)?;
        }
        Command::Flow { app, contr, switch, content, id } => {
            world.submit_flow(app, contr, switch, content, id.clone())?;
        }
        Command::Connect { switch, contr } => world.connect(switch, contr)?,
        Command::Rekey { switch } => world.rekey(switch)?,
        Command::Packet { switch, data } => world.packet(switch, data)?,
        Command::Resource { id, slice, content } => world.add_resource(id, slice, content)?,
        Command::Access { app, resource } => world.request_resource(app, resource)?,
        Command::Attack { kind, target, tick } => {
            world.inject_adversary(AdversaryConfig { kind: *kind, target: target.clone(), schedule: vec![*tick] })?
        }
        Command::Run { ticks } => world.run(*ticks)?,
    }
    Ok(())
}

pub fn run_scenario(script: &str, config: &SimConfig) -> Result<ScenarioOutcome, SimError> {
    run_scenario_in(script, config, GroupParams::sim().clone())
}

/// [`run_scenario`] over an explicit group.
pub fn run_scenario_in(script: &str, config: &SimConfig, group: GroupParams) -> Result<ScenarioOutcome, SimError> {
    let scenario = parse_scenario(script)?;
    prevalidate(&scenario)?;
    let mut world = World::with_group(config.clone(), group)?;
    let universe: Vec<&str> = scenario
        .statements
        .iter()
        .filter_map(|s| match &s.command {
            Command::SpawnController { id, .. } | Command::SpawnApp { id, .. } => Some(id.as_str()),
            _ => None,
        })
        .collect();
    world.enable_access_control(&universe)?;
    for s in &scenario.statements {
        execute(&mut world, s).map_err(at_line(s.line))?;
    }
    Ok(ScenarioOutcome { report: world.report(), chain: world.ledger().chain().to_vec() })
}
