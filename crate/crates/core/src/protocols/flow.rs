use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::crypto::{ds_verify, hash, Digest, Domain, GroupElement, GroupParams, Signature};
use crate::ledger::{flow_sig_message, Block, TxPayload};
use crate::txgraph::AuditIndex;

use super::{Notification, NotificationKind, ReputationBook};

/// Bytes of flow content that form the match fields for conflict detection.
pub const CONFLICT_PREFIX_LEN: usize = 4;

/// A flow rule as submitted by an application to a controller.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlowRequest {
    pub id_flow: String,
    pub content: Vec<u8>,
    pub pk_app: GroupElement,
    pub id_contr: String,
    pub id_switch: String,
    pub sig: Signature,
}

impl FlowRequest {
    pub fn to_afore(&self) -> TxPayload {
        TxPayload::FlowAfore {
            id_flow: self.id_flow.clone(),
            id_contr: self.id_contr.clone(),
            pk_app: self.pk_app.clone(),
            content: self.content.clone(),
            sig_flow: self.sig.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowReject {
    #[error("flow id already used")]
    ReplayedFlow,
    #[error("application `{0}` is banned")]
    Banned(String),
    #[error("no registration path from the application to the controller and switch")]
    UnregisteredApp,
    #[error("flow signature does not verify")]
    BadFlowSignature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Freshness {
    Fresh,
    Replayed,
}

/// Application id registered for a public key, taking the earliest record.
pub fn app_id_for_pk(index: &AuditIndex, pk: &GroupElement) -> Option<String> {
    index.apps_with_pk(pk).filter_map(|id| index.tx(&id)).min_by_key(|(h, t)| (*h, t.id)).and_then(|(_, t)| {
        match &t.payload {
            TxPayload::App { id_app, .. } => Some(id_app.clone()),
            _ => None,
        }
    })
}

/// A flow id is replayed if it is on chain or already admitted to the pool.
/// Replays cost the submitting application one reputation step.
pub fn flow_replay_detect(
    flow: &FlowRequest,
    index: &AuditIndex,
    pending_flow_ids: &BTreeSet<String>,
    book: &mut ReputationBook,
) -> Freshness {
    if !index.flow_seen(&flow.id_flow) && !pending_flow_ids.contains(&flow.id_flow) {
        return Freshness::Fresh;
    }
    if let Some(app) = app_id_for_pk(index, &flow.pk_app) {
        let _ = book.reduce_reputation(&app);
    }
    Freshness::Replayed
}

/// Replay check, then ban check, then the registration path, then the
/// signature. Success yields the `TFlowAfore` to submit.
pub fn auth_flow(
    group: &GroupParams,
    flow: &FlowRequest,
    index: &AuditIndex,
    pending_flow_ids: &BTreeSet<String>,
    book: &mut ReputationBook,
) -> Result<TxPayload, FlowReject> {
    if flow_replay_detect(flow, index, pending_flow_ids, book) == Freshness::Replayed {
        return Err(FlowReject::ReplayedFlow);
    }
    if let Some(app) = app_id_for_pk(index, &flow.pk_app) {
        if book.is_banned(&app) {
            return Err(FlowReject::Banned(app));
        }
    }
    if !index.flow_auth_path(&flow.pk_app, &flow.id_contr, &flow.id_switch) {
        return Err(FlowReject::UnregisteredApp);
    }
    let msg = flow_sig_message(&flow.id_flow, &flow.id_contr, &flow.content);
    if !ds_verify(group, &flow.pk_app, &msg, &flow.sig) {
        return Err(FlowReject::BadFlowSignature);
    }
    Ok(flow.to_afore())
}

pub fn conflict_digest(content: &[u8]) -> Digest {
    hash(Domain::Raw, &content[..content.len().min(CONFLICT_PREFIX_LEN)])
}

/// First-committed-wins arbitration state, keyed by switch and match fields.
#[derive(Debug, Clone, Default)]
pub struct Arbiter {
    winners: BTreeMap<(String, Digest), (String, Vec<u8>)>,
}

impl Arbiter {
    pub fn winner(&self, id_switch: &str, content: &[u8]) -> Option<&str> {
        self.winners.get(&(id_switch.to_string(), conflict_digest(content))).map(|(f, _)| f.as_str())
    }
}

/// Inspects each `TFlowAfter` of a newly committed block and notifies the
/// applications whose flows lost to an earlier conflicting flow.
pub fn arbitration_loss_notify(block: &Block, index: &AuditIndex, arbiter: &mut Arbiter) -> Vec<Notification> {
    let mut out: Vec<Notification> = Vec::new();
    for tx in &block.tx_list {
        let TxPayload::FlowAfter { id_flow, id_switch, .. } = &tx.payload else { continue };
        let Some((_, afore)) = index.flow_afore(id_flow).and_then(|id| index.tx(&id)) else { continue };
        let TxPayload::FlowAfore { content, pk_app, .. } = &afore.payload else { continue };
        let key = (id_switch.clone(), conflict_digest(content));
        match arbiter.winners.get(&key) {
            None => {
                arbiter.winners.insert(key, (id_flow.clone(), content.clone()));
            }
            Some((winner, winning_content)) if winner != id_flow && winning_content != content => {
                if let Some(app) = app_id_for_pk(index, pk_app) {
                    let n = Notification {
                        recipient: app,
                        kind: NotificationKind::ArbitrationLoss,
                        subject: id_flow.clone(),
                        issued_at: block.height,
                    };
                    if !out.contains(&n) {
                        out.push(n);
                    }
                }
            }
            Some(_) => {}
        }
    }
    out
}
