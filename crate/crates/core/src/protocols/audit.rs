use std::fmt;

use thiserror::Error;

use crate::crypto::{canonical_decode, canonical_encode, Decode, DecodeError, Decoder, Encode, Encoder};
use crate::ledger::{TxId, TxKind, TxPayload};
use crate::txgraph::AuditIndex;

use super::flow::app_id_for_pk;

/// Structured `TEvent` payload: an event kind, the id it concerns and
/// free-form bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventPayload {
    pub kind: String,
    pub subject: String,
    pub data: Vec<u8>,
}

impl EventPayload {
    pub fn new(kind: &str, subject: &str, data: &[u8]) -> Self {
        Self { kind: kind.into(), subject: subject.into(), data: data.to_vec() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        canonical_encode(self)
    }

    pub fn parse(bytes: &[u8]) -> Option<Self> {
        canonical_decode(bytes).ok()
    }
}

impl Encode for EventPayload {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.str(&self.kind).str(&self.subject).bytes(&self.data);
    }
}

impl Decode for EventPayload {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self { kind: dec.string()?, subject: dec.string()?, data: dec.bytes()?.to_vec() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuditQuery {
    Flow(String),
    Event(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuditError {
    #[error("`{0}` not found on chain")]
    NotFound(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrailEntry {
    pub height: u64,
    pub tx: TxId,
    pub kind: TxKind,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditTrail {
    pub entries: Vec<TrailEntry>,
}

impl fmt::Display for AuditTrail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{:>6}  {:<15} {}  {}", e.height, e.kind.name(), e.tx.short(), e.summary)?;
        }
        Ok(())
    }
}

fn entry(index: &AuditIndex, id: TxId) -> Option<TrailEntry> {
    let (height, tx) = index.tx(&id)?;
    let summary = match &tx.payload {
        TxPayload::Contr { id_contr, slice, .. } => format!("controller {id_contr} slice={slice}"),
        TxPayload::App { id_app, category, id_contr, .. } => {
            format!("app {id_app} category=\"{category}\" contr={id_contr}")
        }
        TxPayload::Switch { id_switch, id_contr, .. } => format!("switch {id_switch} contr={id_contr}"),
        TxPayload::FlowAfore { id_flow, id_contr, content, .. } => {
            format!("flow {id_flow} contr={id_contr} content={}", hex::encode(content))
        }
        TxPayload::FlowAfter { id_flow, id_switch, state, .. } => {
            format!("flow {id_flow} switch={id_switch} state={}", String::from_utf8_lossy(state))
        }
        TxPayload::Event { id_event, id_switch, event_payload, .. } => match EventPayload::parse(event_payload) {
            Some(p) => format!("event {id_event} switch={id_switch} {}:{}", p.kind, p.subject),
            None => format!("event {id_event} switch={id_switch}"),
        },
        other => other.kind().name().to_string(),
    };
    Some(TrailEntry { height, tx: id, kind: tx.kind(), summary })
}

fn flow_trail(index: &AuditIndex, id_flow: &str) -> Result<AuditTrail, AuditError> {
    let not_found = || AuditError::NotFound(id_flow.to_string());
    let afore_id = index.flow_afore(id_flow).ok_or_else(not_found)?;
    let (_, afore) = index.tx(&afore_id).ok_or_else(not_found)?;
    let TxPayload::FlowAfore { pk_app, id_contr, .. } = &afore.payload else { return Err(not_found()) };
    let mut ids = Vec::new();
    if let Some(app) = app_id_for_pk(index, pk_app) {
        ids.extend(index.apps_with_id(&app).min_by_key(|id| index.tx(id).map(|(h, _)| h)));
    }
    ids.push(afore_id);
    if let Some(after_id) = index.flow_after(id_flow) {
        ids.push(after_id);
        if let Some((after_h, TxPayload::FlowAfter { id_switch, .. })) =
            index.tx(&after_id).map(|(h, t)| (h, &t.payload))
        {
            for ev in index.events_on_link(id_contr, id_switch) {
                let Some((h, t)) = index.tx(ev) else { continue };
                let TxPayload::Event { event_payload, .. } = &t.payload else { continue };
                let related = EventPayload::parse(event_payload).is_some_and(|p| p.subject == id_flow);
                if h >= after_h && related {
                    ids.push(*ev);
                }
            }
        }
    }
    Ok(AuditTrail { entries: ids.into_iter().filter_map(|id| entry(index, id)).collect() })
}

fn event_trail(index: &AuditIndex, id_event: &str) -> Result<AuditTrail, AuditError> {
    let not_found = || AuditError::NotFound(id_event.to_string());
    let ev_id = index.event_by_id(id_event).ok_or_else(not_found)?;
    let (ev_h, ev) = index.tx(&ev_id).ok_or_else(not_found)?;
    let TxPayload::Event { id_contr, id_switch, .. } = &ev.payload else { return Err(not_found()) };
    let mut ids = Vec::new();
    ids.extend(index.contrs_with_id(id_contr).min_by_key(|id| index.tx(id).map(|(h, _)| h)));
    ids.extend(
        index
            .switch_history(id_switch)
            .into_iter()
            .filter(|r| r.height <= ev_h && r.id_contr == *id_contr)
            .next_back()
            .map(|r| r.tx),
    );
    ids.push(ev_id);
    Ok(AuditTrail { entries: ids.into_iter().filter_map(|id| entry(index, id)).collect() })
}

/// Provenance trail for a flow (TApp → TFlowAfore → TFlowAfter → related
/// TEvents) or an event (TContr → TSwitch → TEvent).
pub fn audit_network(query: &AuditQuery, index: &AuditIndex) -> Result<AuditTrail, AuditError> {
    match query {
        AuditQuery::Flow(id) => flow_trail(index, id),
        AuditQuery::Event(id) => event_trail(index, id),
    }
}
