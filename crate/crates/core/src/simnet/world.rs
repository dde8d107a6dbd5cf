use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::abe::{abe_decrypt, abe_setup, APP_CATEGORIES};
use crate::crypto::{
    canonical_encode, ds_keygen, ds_sign, hash, verify_puzzle, Domain, GroupElement, GroupParams, HybridCiphertext,
    KeyPair, PuzzleSolution,
};
use crate::homqv::homqv_initiate;
use crate::ledger::{
    app_sig_message, contr_sig_message, flow_sig_message, verify_chain, Behavior, Block, FlowAggregator, Ledger,
    RoundOutcome, TxId, TxPayload, ValidatorSet,
};
use crate::protocols::{
    arbitration_loss_notify, audit_authen_request, auth_flow, build_commitment, conflict_digest,
    controller_failed_notify, AccessControl, Arbiter, ConnectionContext, ConnectionRequest, EventPayload,
    FailureMonitor, FlowRequest, Notification, NotificationKind, ReputationBook, Resource, NONCE_LEN,
    REPUTATION_PENALTY,
};
use crate::txgraph::AuditIndex;

use super::adversary::{AdversaryConfig, AdversaryKind, AttackOutcome, AttackRecord};
use super::entity::{AppState, ControllerState, Entity, EntityRecord, SpawnError, SwitchState};
use super::report::ScenarioReport;
use super::scenario::EntityKind;
use super::{SimConfig, SimError};

const AUTHORITY: &str = "authority";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessagePayload {
    FlowSubmission(FlowRequest),
    FlowMod { id_flow: String, content: Vec<u8>, reactive: bool },
    ConnectionRequest(ConnectionRequest),
    SessionAck,
    PacketIn(Vec<u8>),
    EventReport(EventPayload),
    Notification(Notification),
    ResourceRequest(String),
}

impl MessagePayload {
    fn name(&self) -> &'static str {
        match self {
            MessagePayload::FlowSubmission(_) => "flow-submission",
            MessagePayload::FlowMod { .. } => "flow-mod",
            MessagePayload::ConnectionRequest(_) => "connection-request",
            MessagePayload::SessionAck => "session-ack",
            MessagePayload::PacketIn(_) => "packet-in",
            MessagePayload::EventReport(_) => "event-report",
            MessagePayload::Notification(_) => "notification",
            MessagePayload::ResourceRequest(_) => "resource-request",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimMessage {
    pub tick: u64,
    pub from: String,
    pub to: String,
    pub payload: MessagePayload,
    /// Attack label for injected messages.
    pub label: Option<usize>,
}

/// The simulated network: entities, message bus, ledger and protocol state.
pub struct World {
    config: SimConfig,
    group: GroupParams,
    ledger: Ledger,
    index: AuditIndex,
    book: ReputationBook,
    arbiter: Arbiter,
    monitor: FailureMonitor,
    access: Option<AccessControl>,
    resources: BTreeSet<String>,
    entities: BTreeMap<String, Entity>,
    /// Keyed by (delivery tick, from, to, sequence): FIFO per sender/receiver
    /// pair, ties broken by id order.
    queue: BTreeMap<(u64, String, String, u64), SimMessage>,
    seq: u64,
    tick: u64,
    rng: ChaCha20Rng,
    scheduled: BTreeMap<u64, Vec<AdversaryConfig>>,
    attacks: Vec<AttackRecord>,
    crash_labels: BTreeMap<String, Vec<usize>>,
    malicious_txs: BTreeMap<TxId, usize>,
    flow_counter: u64,
    events: Vec<String>,
    stats: ScenarioReport,
    last_tip: (u64, [u8; 32]),
}

impl World {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        Self::with_group(config, GroupParams::sim().clone())
    }

    pub fn with_group(config: SimConfig, group: GroupParams) -> Result<Self, SimError> {
        if config.window == 0 {
            return Err(SimError::Config("window must be at least 1".into()));
        }
        let mut behaviors = vec![Behavior::Honest; config.validators];
        for b in behaviors.iter_mut().rev().take(config.byzantine) {
            *b = Behavior::Equivocating;
        }
        let validators = ValidatorSet::with_behaviors(behaviors).map_err(|e| SimError::Config(e.to_string()))?;
        let mut ledger = Ledger::new(group.clone(), validators);
        ledger.register_commit_hook(Box::new(FlowAggregator::default())).map_err(SimError::Ledger)?;
        let mut index = AuditIndex::new();
        index.index_block(&ledger.chain()[0]).expect("genesis indexes");
        let last_tip = (0, ledger.tip().block_hash);
        Ok(Self {
            book: ReputationBook::new(config.initial_reputation, REPUTATION_PENALTY, 0),
            monitor: FailureMonitor::new(config.window),
            rng: ChaCha20Rng::seed_from_u64(config.seed),
            config,
            group,
            ledger,
            index,
            arbiter: Arbiter::default(),
            access: None,
            resources: BTreeSet::new(),
            entities: BTreeMap::new(),
            queue: BTreeMap::new(),
            seq: 0,
            tick: 0,
            scheduled: BTreeMap::new(),
            attacks: Vec::new(),
            crash_labels: BTreeMap::new(),
            malicious_txs: BTreeMap::new(),
            flow_counter: 0,
            events: Vec::new(),
            stats: ScenarioReport { view_consistent: true, ..Default::default() },
            last_tip,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn index(&self) -> &AuditIndex {
        &self.index
    }

    pub fn reputation(&self) -> &ReputationBook {
        &self.book
    }

    pub fn attacks(&self) -> &[AttackRecord] {
        &self.attacks
    }

    pub fn events(&self) -> &[String] {
        &self.events
    }

    pub fn entity_kind(&self, id: &str) -> Option<EntityKind> {
        self.entities.get(id).map(Entity::kind)
    }

    pub fn is_crashed(&self, id: &str) -> bool {
        matches!(self.entities.get(id), Some(Entity::Controller(c)) if c.crashed)
    }

    fn log(&mut self, line: String) {
        self.events.push(format!("tick={} {line}", self.tick));
    }

    fn send(&mut self, from: &str, to: &str, payload: MessagePayload, label: Option<usize>) {
        self.seq += 1;
        let msg = SimMessage { tick: self.tick, from: from.into(), to: to.into(), payload, label };
        self.queue.insert((self.tick + 1, from.into(), to.into(), self.seq), msg);
    }

    /// Sets up the network-wide attribute authority over `universe`.
    pub fn enable_access_control(&mut self, universe: &[&str]) -> Result<(), SimError> {
        let mut attrs: Vec<&str> = universe.to_vec();
        attrs.extend(APP_CATEGORIES);
        let seed = canonical_encode(&(self.config.seed, "abe-authority"));
        let params = abe_setup(&self.group, &attrs, &seed).map_err(|e| SimError::Config(e.to_string()))?;
        self.access = Some(AccessControl::new(params));
        Ok(())
    }

    pub fn add_resource(&mut self, id: &str, slice: &str, content: &[u8]) -> Result<(), SimError> {
        let ac = self.access.as_mut().ok_or_else(|| SimError::Config("access control not enabled".into()))?;
        ac.add_resource(id, Resource { slice: slice.into(), content: content.to_vec() });
        self.resources.insert(id.into());
        Ok(())
    }

    pub fn spawn_entity(&mut self, record: EntityRecord) -> Result<Vec<TxId>, SpawnError> {
        if self.entities.contains_key(&record.id) || record.id == AUTHORITY {
            return Err(SpawnError::DuplicateId(record.id));
        }
        let g = self.group.clone();
        let (entity, txs) = match record.kind {
            EntityKind::Controller => {
                let sig = ds_sign(&g, &record.keys, &contr_sig_message(&record.id, &record.slice_or_category));
                let id = self.ledger.submit(TxPayload::Contr {
                    id_contr: record.id.clone(),
                    pk_contr: record.keys.public().clone(),
                    slice: record.slice_or_category.clone(),
                    sig,
                })?;
                let state = ControllerState {
                    keys: record.keys,
                    contr_tx: id,
                    crashed: false,
                    sessions: BTreeMap::new(),
                    event_counter: 0,
                    reactive_counter: 0,
                };
                (Entity::Controller(state), vec![id])
            }
            EntityKind::Switch => {
                let puzzle = match record.puzzle {
                    Some(p)
                        if p.subject_id == record.id.as_bytes()
                            && p.difficulty >= self.config.difficulty
                            && verify_puzzle(&p) =>
                    {
                        p
                    }
                    _ => return Err(SpawnError::BadPuzzle(record.id)),
                };
                self.book.register(&record.id);
                let state = SwitchState {
                    keys: record.keys.clone(),
                    registered_keys: record.keys,
                    slice: record.slice_or_category,
                    puzzle,
                    controller: None,
                    session: None,
                    nonce: None,
                    last_request: None,
                    accepted_tx: None,
                    flow_table: BTreeMap::new(),
                    rekeys: 0,
                };
                (Entity::Switch(state), Vec::new())
            }
            EntityKind::App => {
                if !APP_CATEGORIES.contains(&record.slice_or_category.as_str()) {
                    return Err(SpawnError::UnknownCategory(record.slice_or_category));
                }
                let mut contr_txs = Vec::new();
                for c in &record.controllers {
                    match self.entities.get(c) {
                        Some(Entity::Controller(s)) => contr_txs.push(s.contr_tx),
                        _ => return Err(SpawnError::UnknownController(c.clone())),
                    }
                }
                let first = record.controllers.first().ok_or_else(|| SpawnError::UnknownController(String::new()))?;
                let sig = ds_sign(&g, &record.keys, &app_sig_message(&record.id, &record.slice_or_category, first));
                let app_tx = self.ledger.submit(TxPayload::App {
                    id_app: record.id.clone(),
                    pk_app: record.keys.public().clone(),
                    category: record.slice_or_category.clone(),
                    id_contr: first.clone(),
                    sig,
                })?;
                let mut txs = vec![app_tx];
                for c in contr_txs {
                    txs.push(self.ledger.submit(TxPayload::AppContr { id_t_app: app_tx, id_t_contr: c })?);
                }
                self.book.register(&record.id);
                let state =
                    AppState { keys: record.keys, controllers: record.controllers, sent_flows: Vec::new(), abe_key: None };
                (Entity::App(state), txs)
            }
        };
        self.log(format!("spawn {} {} txs={}", entity.kind(), record.id, txs.len()));
        self.entities.insert(record.id, entity);
        Ok(txs)
    }

    fn app(&self, id: &str) -> Option<&AppState> {
        match self.entities.get(id) {
            Some(Entity::App(a)) => Some(a),
            _ => None,
        }
    }

    fn switch(&self, id: &str) -> Option<&SwitchState> {
        match self.entities.get(id) {
            Some(Entity::Switch(s)) => Some(s),
            _ => None,
        }
    }

    fn switch_mut(&mut self, id: &str) -> Option<&mut SwitchState> {
        match self.entities.get_mut(id) {
            Some(Entity::Switch(s)) => Some(s),
            _ => None,
        }
    }

    fn controller(&self, id: &str) -> Option<&ControllerState> {
        match self.entities.get(id) {
            Some(Entity::Controller(c)) => Some(c),
            _ => None,
        }
    }

    fn controller_mut(&mut self, id: &str) -> Option<&mut ControllerState> {
        match self.entities.get_mut(id) {
            Some(Entity::Controller(c)) => Some(c),
            _ => None,
        }
    }

    fn require(&self, id: &str, kind: EntityKind) -> Result<(), SimError> {
        match self.entity_kind(id) {
            Some(k) if k == kind => Ok(()),
            _ => Err(SimError::UnknownTarget(format!("no {kind} named `{id}`"))),
        }
    }

    fn sign_flow(&mut self, app: &str, contr: &str, switch: &str, content: &[u8], id: Option<String>) -> FlowRequest {
        let id_flow = id.unwrap_or_else(|| {
            self.flow_counter += 1;
            format!("flow-{}", self.flow_counter)
        });
        let keys = &self.app(app).expect("app checked").keys;
        FlowRequest {
            sig: ds_sign(&self.group, keys, &flow_sig_message(&id_flow, contr, content)),
            id_flow,
            content: content.to_vec(),
            pk_app: keys.public().clone(),
            id_contr: contr.into(),
            id_switch: switch.into(),
        }
    }

    /// An application signs a flow and sends it to a controller.
    pub fn submit_flow(&mut self, app: &str, contr: &str, switch: &str, content: &[u8], id: Option<String>) -> Result<String, SimError> {
        self.require(app, EntityKind::App)?;
        self.require(contr, EntityKind::Controller)?;
        let flow = self.sign_flow(app, contr, switch, content, id);
        let id_flow = flow.id_flow.clone();
        if let Some(Entity::App(a)) = self.entities.get_mut(app) {
            a.sent_flows.push(flow.clone());
        }
        self.send(app, contr, MessagePayload::FlowSubmission(flow), None);
        Ok(id_flow)
    }

    fn build_request(
        &mut self,
        id_switch: &str,
        contr: &str,
        session_keys: &KeyPair,
        com_signer: &KeyPair,
        nonce: &[u8; NONCE_LEN],
        prior: Option<TxId>,
        puzzle: PuzzleSolution,
        slice: &str,
    ) -> Result<(ConnectionRequest, crate::homqv::SessionContext), SimError> {
        let pk_contr = self.controller(contr).expect("controller checked").keys.public().clone();
        let com = build_commitment(&self.group, &pk_contr, com_signer, nonce, &mut self.rng)
            .map_err(|e| SimError::Config(e.to_string()))?;
        let mut seed = [0u8; 32];
        self.rng.fill_bytes(&mut seed);
        let (y, ctx) = homqv_initiate(&self.group, session_keys, &pk_contr, id_switch.as_bytes(), contr.as_bytes(), &seed)
            .map_err(|e| SimError::Config(e.to_string()))?;
        let req = ConnectionRequest {
            id_switch: id_switch.into(),
            pk_switch: session_keys.public().clone(),
            com,
            prior_request_id: prior,
            ephemeral_y: y,
            slice: slice.into(),
            id_contr: contr.into(),
            puzzle,
        };
        Ok((req, ctx))
    }

    /// A switch sends a two-parameter connection request.
    pub fn connect(&mut self, switch: &str, contr: &str) -> Result<(), SimError> {
        self.require(switch, EntityKind::Switch)?;
        self.require(contr, EntityKind::Controller)?;
        let s = self.switch(switch).expect("checked").clone();
        let nonce = s.nonce.unwrap_or_else(|| self.rng.gen());
        let (req, ctx) = self.build_request(switch, contr, &s.keys, &s.keys, &nonce, None, s.puzzle.clone(), &s.slice)?;
        let st = self.switch_mut(switch).expect("checked");
        st.nonce = Some(nonce);
        st.controller = Some(contr.into());
        st.session = Some(ctx);
        st.last_request = Some(req.clone());
        self.send(switch, contr, MessagePayload::ConnectionRequest(req), None);
        Ok(())
    }

    /// A connected switch rotates its key pair and proves continuity with a
    /// fresh commitment to its original nonce.
    pub fn rekey(&mut self, switch: &str) -> Result<(), SimError> {
        self.require(switch, EntityKind::Switch)?;
        let s = self.switch(switch).expect("checked").clone();
        let (Some(contr), Some(prior), Some(nonce)) = (s.controller.clone(), s.accepted_tx, s.nonce) else {
            self.log(format!("rekey {switch} skipped reason=not-connected"));
            return Ok(());
        };
        let new_keys = ds_keygen(&self.group, &canonical_encode(&(self.config.seed, "rekey", switch, s.rekeys)));
        let (req, ctx) =
            self.build_request(switch, &contr, &new_keys, &s.registered_keys, &nonce, Some(prior), s.puzzle.clone(), &s.slice)?;
        let st = self.switch_mut(switch).expect("checked");
        st.keys = new_keys;
        st.rekeys += 1;
        st.session = Some(ctx);
        st.last_request = Some(req.clone());
        self.send(switch, &contr, MessagePayload::ConnectionRequest(req), None);
        Ok(())
    }

    /// Delivers a data-plane packet to a switch.
    pub fn packet(&mut self, switch: &str, data: &[u8]) -> Result<(), SimError> {
        self.require(switch, EntityKind::Switch)?;
        let s = self.switch(switch).expect("checked");
        let hit = s.flow_table.get(&conflict_digest(data)).map(|(f, _)| f.clone());
        match (hit, s.controller.clone()) {
            (Some(f), _) => self.log(format!("packet switch={switch} matched={f}")),
            (None, Some(c)) => {
                self.log(format!("packet switch={switch} unmatched to={c}"));
                self.send(switch, &c, MessagePayload::PacketIn(data.to_vec()), None);
            }
            (None, None) => self.log(format!("packet switch={switch} dropped reason=no-controller")),
        }
        Ok(())
    }

    pub fn request_resource(&mut self, app: &str, resource: &str) -> Result<(), SimError> {
        self.require(app, EntityKind::App)?;
        self.send(app, AUTHORITY, MessagePayload::ResourceRequest(resource.into()), None);
        Ok(())
    }

    /// Validates and schedules a labeled adversary.
    pub fn inject_adversary(&mut self, config: AdversaryConfig) -> Result<(), SimError> {
        for t in &config.schedule {
            if *t <= self.tick {
                return Err(SimError::Config(format!("attack tick {t} is not in the future")));
            }
            self.scheduled.entry(*t).or_default().push(config.clone());
        }
        Ok(())
    }

    fn new_attack(&mut self, kind: AdversaryKind, target: &str) -> usize {
        let label = self.attacks.len();
        self.attacks.push(AttackRecord {
            label,
            kind,
            target: target.into(),
            tick: self.tick,
            outcome: AttackOutcome::Pending,
            reason: String::new(),
        });
        label
    }

    fn settle(&mut self, label: usize, outcome: AttackOutcome, reason: impl Into<String>) {
        let a = &mut self.attacks[label];
        if a.outcome == AttackOutcome::Pending {
            a.outcome = outcome;
            a.reason = reason.into();
        }
    }

    fn attacker_keys(&mut self) -> KeyPair {
        let n: u64 = self.rng.gen();
        ds_keygen(&self.group, &canonical_encode(&(self.config.seed, "attacker", n)))
    }

    fn flow_route(&self, app: &str) -> Option<(String, String)> {
        let contr = self.app(app)?.controllers.first()?.clone();
        let switch = self
            .entities
            .iter()
            .find_map(|(id, e)| match e {
                Entity::Switch(s) if s.controller.as_deref() == Some(&contr) => Some(id.clone()),
                _ => None,
            })
            .unwrap_or_else(|| "10.0.0.0".into());
        Some((contr, switch))
    }

    fn run_attack(&mut self, cfg: &AdversaryConfig) -> Result<(), SimError> {
        let target = cfg.target.as_str();
        match cfg.kind {
            AdversaryKind::ForgedFlow | AdversaryKind::TamperFlowContent => {
                self.require(target, EntityKind::App)?;
                let label = self.new_attack(cfg.kind, target);
                let Some((contr, switch)) = self.flow_route(target) else {
                    self.settle(label, AttackOutcome::Skipped, "no-route");
                    return Ok(());
                };
                let content: [u8; 8] = self.rng.gen();
                let id_flow = format!("{}-{label}", cfg.kind.name());
                let mut flow = self.sign_flow(target, &contr, &switch, &content, Some(id_flow));
                if cfg.kind == AdversaryKind::ForgedFlow {
                    let k = self.attacker_keys();
                    flow.sig = ds_sign(&self.group, &k, &flow_sig_message(&flow.id_flow, &contr, &flow.content));
                } else {
                    let bit = self.rng.gen_range(0..64);
                    flow.content[bit / 8] ^= 1 << (bit % 8);
                }
                self.malicious_txs.insert(flow.to_afore().tx_id(), label);
                self.send(target, &contr, MessagePayload::FlowSubmission(flow), Some(label));
            }
            AdversaryKind::ReplayFlow => {
                self.require(target, EntityKind::App)?;
                let label = self.new_attack(cfg.kind, target);
                let sent = self.app(target).expect("checked").sent_flows.clone();
                if sent.is_empty() {
                    self.settle(label, AttackOutcome::Skipped, "nothing-to-replay");
                    return Ok(());
                }
                let flow = sent[self.rng.gen_range(0..sent.len())].clone();
                let contr = flow.id_contr.clone();
                self.send(target, &contr, MessagePayload::FlowSubmission(flow), Some(label));
            }
            AdversaryKind::ReplayConnection => {
                self.require(target, EntityKind::Switch)?;
                let label = self.new_attack(cfg.kind, target);
                let s = self.switch(target).expect("checked");
                let Some(req) = s.last_request.clone() else {
                    self.settle(label, AttackOutcome::Skipped, "nothing-to-replay");
                    return Ok(());
                };
                let contr = req.id_contr.clone();
                self.send(target, &contr, MessagePayload::ConnectionRequest(req), Some(label));
            }
            AdversaryKind::SpoofSwitch => {
                let label = self.new_attack(cfg.kind, target);
                let contr = self
                    .switch(target)
                    .and_then(|s| s.controller.clone())
                    .or_else(|| {
                        self.entities.iter().find(|(_, e)| e.kind() == EntityKind::Controller).map(|(id, _)| id.clone())
                    });
                let Some(contr) = contr else {
                    self.settle(label, AttackOutcome::Skipped, "no-controller");
                    return Ok(());
                };
                let keys = self.attacker_keys();
                let difficulty = self.config.difficulty;
                let mut puzzle = PuzzleSolution { subject_id: target.as_bytes().to_vec(), nonce: self.rng.gen(), difficulty };
                while verify_puzzle(&puzzle) && difficulty > 0 {
                    puzzle.nonce = puzzle.nonce.wrapping_add(1);
                }
                let nonce: [u8; NONCE_LEN] = self.rng.gen();
                let (req, _) = self.build_request(target, &contr, &keys, &keys, &nonce, None, puzzle, "spoofed")?;
                self.malicious_txs.insert(spoof_switch_tx(&req).tx_id(), label);
                self.send(target, &contr, MessagePayload::ConnectionRequest(req), Some(label));
            }
            AdversaryKind::CrashController => {
                self.require(target, EntityKind::Controller)?;
                let label = self.new_attack(cfg.kind, target);
                self.controller_mut(target).expect("checked").crashed = true;
                self.crash_labels.entry(target.into()).or_default().push(label);
                self.log(format!("crash controller={target} label={label}"));
            }
            AdversaryKind::ByzantineValidator => {
                let (idx, behavior) = parse_validator_target(target)?;
                if idx >= self.ledger.validators().n() {
                    return Err(SimError::UnknownTarget(format!("no validator {idx}")));
                }
                let label = self.new_attack(cfg.kind, target);
                match self.ledger.set_behavior(idx, behavior) {
                    Ok(()) => self.settle(label, AttackOutcome::Applied, behavior.to_string()),
                    Err(e) => self.settle(label, AttackOutcome::Skipped, e.to_string().replace(' ', "-")),
                }
            }
        }
        Ok(())
    }

    fn pending_flow_ids(&self) -> BTreeSet<String> {
        self.ledger
            .pending()
            .filter_map(|t| match &t.payload {
                TxPayload::FlowAfore { id_flow, .. } => Some(id_flow.clone()),
                _ => None,
            })
            .collect()
    }

    fn pending_commitments(&self) -> HashSet<(GroupElement, HybridCiphertext)> {
        self.ledger
            .pending()
            .filter_map(|t| match &t.payload {
                TxPayload::Switch { pk_switch, com, .. } => Some((pk_switch.clone(), com.clone())),
                _ => None,
            })
            .collect()
    }

    fn submit_logged(&mut self, p: TxPayload) -> Option<TxId> {
        let kind = p.kind();
        match self.ledger.submit(p) {
            Ok(id) => Some(id),
            Err(e) => {
                self.log(format!("submit {} rejected reason={e}", kind.name()));
                None
            }
        }
    }

    fn handle(&mut self, msg: SimMessage) {
        if self.is_crashed(&msg.to) {
            self.log(format!("drop {} from={} to={} reason=crashed", msg.payload.name(), msg.from, msg.to));
            if let Some(l) = msg.label {
                self.settle(l, AttackOutcome::Skipped, "receiver-crashed");
            }
            return;
        }
        match msg.payload {
            MessagePayload::FlowSubmission(flow) => self.on_flow(&msg.to, flow, msg.label),
            MessagePayload::ConnectionRequest(req) => self.on_connection(&msg.to, req, msg.label),
            MessagePayload::FlowMod { id_flow, content, reactive } => {
                self.on_flow_mod(&msg.to, &msg.from, id_flow, content, reactive)
            }
            MessagePayload::SessionAck => {
                self.log(format!("session switch={} contr={}", msg.to, msg.from));
            }
            MessagePayload::PacketIn(data) => self.on_packet_in(&msg.to, &msg.from, data),
            MessagePayload::EventReport(ev) => self.on_event_report(&msg.to, &msg.from, ev),
            MessagePayload::Notification(n) => {
                self.log(format!("notified {} kind={} subject={} issued_at={}", n.recipient, n.kind, n.subject, n.issued_at));
            }
            MessagePayload::ResourceRequest(resource) => self.on_resource_request(&msg.from, &resource),
        }
    }

    fn on_flow(&mut self, contr: &str, flow: FlowRequest, label: Option<usize>) {
        if self.controller(contr).is_none() {
            return;
        }
        let pending = self.pending_flow_ids();
        let verdict = auth_flow(&self.group, &flow, &self.index, &pending, &mut self.book);
        match verdict {
            Ok(afore) => {
                self.stats.flows_accepted += 1;
                self.log(format!("flow {} contr={contr} verdict=accepted", flow.id_flow));
                self.submit_logged(afore);
                if let Some(l) = label {
                    self.settle(l, AttackOutcome::Undetected, "accepted");
                }
                let fm = MessagePayload::FlowMod { id_flow: flow.id_flow.clone(), content: flow.content.clone(), reactive: false };
                self.send(contr, &flow.id_switch, fm, None);
            }
            Err(e) => {
                self.stats.flows_rejected += 1;
                let reason = format!("{e:?}");
                self.log(format!("flow {} contr={contr} verdict=rejected reason={reason}", flow.id_flow));
                match label {
                    Some(l) => self.settle(l, AttackOutcome::Detected, reason),
                    None => self.stats.honest_flow_rejections += 1,
                }
            }
        }
    }

    fn on_connection(&mut self, contr: &str, req: ConnectionRequest, label: Option<usize>) {
        let Some(c) = self.controller(contr).cloned() else { return };
        let pending = self.pending_commitments();
        let ctx = ConnectionContext {
            group: &self.group,
            controller: &c.keys,
            id_contr: contr,
            contr_tx: c.contr_tx,
            index: &self.index,
            pending_commitments: &pending,
            min_difficulty: self.config.difficulty,
        };
        match audit_authen_request(&ctx, &req, &mut self.book) {
            Ok(est) => {
                self.stats.sessions += 1;
                let path = if req.prior_request_id.is_some() { "key-update" } else { "fresh" };
                self.log(format!("connection switch={} contr={contr} verdict=established path={path}", req.id_switch));
                let switch_tx = est.txs[0].tx_id();
                for tx in est.txs {
                    self.submit_logged(tx);
                }
                self.controller_mut(contr)
                    .expect("exists")
                    .sessions
                    .insert(req.id_switch.clone(), (req.pk_switch.clone(), est.session.session_key));
                match label {
                    Some(l) => self.settle(l, AttackOutcome::Undetected, "established"),
                    None => {
                        if let Some(s) = self.switch_mut(&req.id_switch) {
                            s.accepted_tx = Some(switch_tx);
                            s.registered_keys = s.keys.clone();
                        }
                        self.send(contr, &req.id_switch, MessagePayload::SessionAck, None);
                    }
                }
            }
            Err(e) => {
                let reason = format!("{e:?}").split('(').next().unwrap_or_default().to_string();
                self.log(format!("connection switch={} contr={contr} verdict=rejected reason={reason}", req.id_switch));
                if let Some(l) = label {
                    self.settle(l, AttackOutcome::Detected, reason);
                }
            }
        }
    }

    fn on_flow_mod(&mut self, switch: &str, contr: &str, id_flow: String, content: Vec<u8>, reactive: bool) {
        let Some(s) = self.switch_mut(switch) else { return };
        let key = conflict_digest(&content);
        let installed = match s.flow_table.get(&key) {
            None => {
                s.flow_table.insert(key, (id_flow.clone(), content.clone()));
                true
            }
            Some((_, existing)) => *existing == content,
        };
        let table = hash(Domain::Raw, &canonical_encode(&s.flow_table.values().map(|(f, _)| f.clone()).collect::<Vec<_>>().join(",")));
        let status = if installed { "installed" } else { "conflict" };
        let kind = if reactive { "reactive-installed" } else { "flow-installed" };
        let state = format!("{status} table={}", hex::encode(&table[..4]));
        self.log(format!("install switch={switch} flow={id_flow} state={status}"));
        self.send(switch, contr, MessagePayload::EventReport(EventPayload::new(kind, &id_flow, state.as_bytes())), None);
    }

    fn on_packet_in(&mut self, contr: &str, switch: &str, data: Vec<u8>) {
        let Some(c) = self.controller_mut(contr) else { return };
        c.reactive_counter += 1;
        let id_flow = format!("reactive-{switch}-{}", c.reactive_counter);
        let ev = EventPayload::new("packet-in", &hex::encode(&data), &[]);
        self.record_event(contr, switch, ev);
        let prefix = data[..data.len().min(crate::protocols::CONFLICT_PREFIX_LEN)].to_vec();
        self.send(contr, switch, MessagePayload::FlowMod { id_flow, content: prefix, reactive: true }, None);
    }

    fn record_event(&mut self, contr: &str, switch: &str, ev: EventPayload) -> bool {
        let tick = self.tick;
        let Some(c) = self.controller_mut(contr) else { return false };
        let Some((pk, _)) = c.sessions.get(switch).cloned() else { return false };
        c.event_counter += 1;
        let id_event = format!("{}:{switch}:{tick}:{}", ev.kind, c.event_counter);
        self.submit_logged(TxPayload::Event {
            id_event,
            pk_switch: pk,
            id_contr: contr.into(),
            id_switch: switch.into(),
            event_payload: ev.to_bytes(),
        })
        .is_some()
    }

    fn on_event_report(&mut self, contr: &str, switch: &str, ev: EventPayload) {
        if ev.kind == "flow-installed" {
            let after = TxPayload::FlowAfter {
                id_flow: ev.subject.clone(),
                id_contr: contr.into(),
                id_switch: switch.into(),
                state: ev.data.clone(),
            };
            if self.controller(contr).is_some_and(|c| c.sessions.contains_key(switch)) {
                self.submit_logged(after);
            }
        }
        self.record_event(contr, switch, ev);
    }

    fn on_resource_request(&mut self, app: &str, resource: &str) {
        let Some(ac) = self.access.as_mut() else {
            self.log(format!("access app={app} resource={resource} verdict=error reason=disabled"));
            return;
        };
        match ac.access_control_serve(app, resource, &self.index, &mut self.rng) {
            Ok(grant) => {
                let public = ac.params().public.clone();
                let Some(Entity::App(a)) = self.entities.get_mut(app) else { return };
                if let Some(k) = grant.key {
                    a.abe_key = Some(k);
                }
                let verdict = match a.abe_key.as_ref().map(|k| abe_decrypt(&grant.ciphertext, k, &public)) {
                    Some(Ok(_)) => "granted".to_string(),
                    Some(Err(e)) => format!("denied reason={e:?}"),
                    None => "denied reason=NoKey".to_string(),
                };
                self.log(format!("access app={app} resource={resource} verdict={verdict}"));
            }
            Err(e) => self.log(format!("access app={app} resource={resource} verdict=error reason={e:?}")),
        }
    }

    fn heartbeats(&mut self) {
        let links: Vec<(String, String)> = self
            .entities
            .iter()
            .filter_map(|(id, e)| match e {
                Entity::Switch(s) => s.controller.clone().map(|c| (id.clone(), c)),
                _ => None,
            })
            .filter(|(s, c)| self.controller(c).is_some_and(|st| st.sessions.contains_key(s)))
            .collect();
        for (s, c) in links {
            let ev = EventPayload::new("heartbeat", &s, &self.tick.to_be_bytes());
            self.send(&s, &c, MessagePayload::EventReport(ev), None);
        }
    }

    fn after_commit(&mut self, block: &Arc<Block>) {
        self.index.index_block(block).expect("blocks arrive in order");
        for tx in &block.tx_list {
            if let Some(label) = self.malicious_txs.get(&tx.id).copied() {
                let a = &mut self.attacks[label];
                a.outcome = AttackOutcome::Undetected;
                a.reason = format!("committed-{}", tx.kind().name());
            }
            if let TxPayload::FlowAfter { state, .. } = &tx.payload {
                if state.starts_with(b"installed") {
                    self.stats.installs += 1;
                }
            }
        }
        let mut notes = arbitration_loss_notify(block, &self.index, &mut self.arbiter);
        notes.extend(controller_failed_notify(block.height, &self.index, &mut self.monitor));
        for (c, labels) in self.crash_labels.clone() {
            if let Some(at) = self.monitor.notified_at(&c) {
                for l in labels {
                    self.settle(l, AttackOutcome::Detected, format!("notified-at-height-{at}"));
                }
            }
        }
        for n in notes {
            self.stats.notifications += 1;
            self.log(format!("notify {} kind={} subject={} height={}", n.recipient, n.kind, n.subject, n.issued_at));
            let from = match n.kind {
                NotificationKind::ArbitrationLoss => "arbiter",
                NotificationKind::ControllerFailed => "monitor",
            };
            let to = n.recipient.clone();
            self.send(from, &to, MessagePayload::Notification(n), None);
        }
    }

    fn check_views(&mut self) {
        let chain = self.ledger.chain();
        let tip = chain.last().expect("genesis").clone();
        let consistent = self.ledger.validators().honest_indices().all(|i| {
            let r = self.ledger.replica(i);
            r.len() == chain.len() && r.last().map(|b| b.block_hash) == Some(tip.block_hash)
        }) && chain.get(self.last_tip.0 as usize).map(|b| b.block_hash) == Some(self.last_tip.1);
        if !consistent {
            self.stats.view_consistent = false;
            self.log("view-inconsistency".into());
        }
        self.last_tip = (tip.height, tip.block_hash);
    }

    /// Advances one tick: adversaries, deliveries, heartbeats, one consensus
    /// round, commit processing.
    pub fn step(&mut self) -> Result<(), SimError> {
        self.tick += 1;
        if let Some(due) = self.scheduled.remove(&self.tick) {
            for cfg in due {
                self.run_attack(&cfg)?;
            }
        }
        let due: Vec<_> = {
            let tick = self.tick;
            let keys: Vec<_> = self.queue.range((tick, String::new(), String::new(), 0)..).map(|(k, _)| k.clone()).take_while(|k| k.0 == tick).collect();
            keys.into_iter().filter_map(|k| self.queue.remove(&k)).collect()
        };
        for msg in due {
            self.handle(msg);
        }
        self.heartbeats();
        match self.ledger.consensus_round(self.tick).map_err(SimError::Ledger)? {
            RoundOutcome::Committed { block, leader, hook_rejections } => {
                self.log(format!("commit height={} txs={} leader={leader} hash={}", block.height, block.tx_list.len(), hex::encode(&block.block_hash[..8])));
                for r in hook_rejections {
                    self.log(format!("hook-output rejected reason={r}"));
                }
                self.after_commit(&block);
            }
            RoundOutcome::NoQuorum { height, leader } => {
                self.stats.chain.no_quorum_rounds += 1;
                self.log(format!("no-quorum height={height} leader={leader}"));
            }
        }
        self.check_views();
        Ok(())
    }

    pub fn run(&mut self, ticks: u64) -> Result<(), SimError> {
        for _ in 0..ticks {
            self.step()?;
        }
        Ok(())
    }

    /// Finalizes attack outcomes and assembles the report.
    pub fn report(&self) -> ScenarioReport {
        let mut r = self.stats.clone();
        r.events = self.events.clone();
        r.attacks = self.attacks.clone();
        r.reputation = self.book.entries().map(|(id, s)| (id.to_string(), s)).collect();
        let tip = self.ledger.height();
        for a in r.attacks.iter_mut().filter(|a| a.kind == AdversaryKind::CrashController) {
            if a.outcome != AttackOutcome::Pending {
                continue;
            }
            let last = self.index.last_activity(&a.target).unwrap_or(0).max(self.index.registered_at(&a.target).unwrap_or(0));
            if tip >= last + self.config.window {
                a.outcome = AttackOutcome::Undetected;
                a.reason = "window-elapsed-without-notification".into();
            }
        }
        r.header = vec![
            ("seed".into(), self.config.seed.to_string()),
            ("validators".into(), self.config.validators.to_string()),
            ("byzantine".into(), self.config.byzantine.to_string()),
            ("window".into(), self.config.window.to_string()),
            ("difficulty".into(), self.config.difficulty.to_string()),
            ("group".into(), self.group.name().to_string()),
        ];
        let chain = self.ledger.chain();
        r.ticks = self.tick;
        r.chain.height = tip;
        r.chain.blocks = chain.len() as u64;
        r.chain.transactions = chain.iter().map(|b| b.tx_list.len() as u64).sum();
        r.chain.tip_hash = hex::encode(self.ledger.tip().block_hash);
        match verify_chain(&self.group, chain) {
            Ok(()) => r.chain_verified = true,
            Err(f) => {
                r.chain_verified = false;
                r.chain_fault = Some(f.to_string());
            }
        }
        r
    }
}

fn spoof_switch_tx(req: &ConnectionRequest) -> TxPayload {
    TxPayload::Switch {
        id_switch: req.id_switch.clone(),
        pk_switch: req.pk_switch.clone(),
        slice: req.slice.clone(),
        id_contr: req.id_contr.clone(),
        com: req.com.clone(),
    }
}

/// `<index>[:silent|equivocating]`, equivocating by default.
pub fn parse_validator_target(target: &str) -> Result<(usize, Behavior), SimError> {
    let (idx, behavior) = target.split_once(':').unwrap_or((target, "equivocating"));
    let idx = idx.parse().map_err(|_| SimError::UnknownTarget(format!("bad validator index `{idx}`")))?;
    let behavior = behavior.parse().map_err(SimError::UnknownTarget)?;
    Ok((idx, behavior))
}
