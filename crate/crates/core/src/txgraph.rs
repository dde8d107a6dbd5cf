//! Incrementally maintained indices over the committed chain and the three
//! audit traversals: flow authentication path, flow replay lookup and
//! inactive-controller detection.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use thiserror::Error;

use crate::crypto::{GroupElement, HybridCiphertext};
use crate::ledger::{Block, Transaction, TxId, TxPayload};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("expected block at height {expected}, got {found}")]
    OutOfOrder { expected: u64, found: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchRecord {
    pub tx: TxId,
    pub id_switch: String,
    pub pk_switch: GroupElement,
    pub slice: String,
    pub id_contr: String,
    pub com: HybridCiphertext,
    pub height: u64,
}

#[derive(Debug, Clone, Default)]
pub struct AuditIndex {
    next_height: u64,
    txs: HashMap<TxId, (u64, Transaction)>,
    by_pk_app: HashMap<GroupElement, BTreeSet<TxId>>,
    by_id_app: BTreeMap<String, BTreeSet<TxId>>,
    by_id_contr: BTreeMap<String, BTreeSet<TxId>>,
    switch_txs: BTreeMap<String, Vec<TxId>>,
    app_contr_edges: BTreeMap<TxId, BTreeSet<TxId>>,
    contr_switch_edges: BTreeMap<TxId, BTreeSet<TxId>>,
    flows_seen: HashMap<String, TxId>,
    flow_after_by_flow: HashMap<String, TxId>,
    activity_by_contr: HashMap<String, u64>,
    contr_registered_at: BTreeMap<String, u64>,
    events_by_link: BTreeMap<(String, String), Vec<TxId>>,
    events_by_id: HashMap<String, TxId>,
    switch_commitments: HashSet<(GroupElement, HybridCiphertext)>,
}

impl AuditIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an index from genesis over a full chain.
    pub fn from_chain<B: std::borrow::Borrow<Block>>(chain: &[B]) -> Result<Self, IndexError> {
        let mut idx = Self::new();
        for b in chain {
            idx.index_block(b.borrow())?;
        }
        Ok(idx)
    }

    /// Height of the last indexed block.
    pub fn tip_height(&self) -> Option<u64> {
        self.next_height.checked_sub(1)
    }

    pub fn index_block(&mut self, block: &Block) -> Result<(), IndexError> {
        if block.height != self.next_height {
            return Err(IndexError::OutOfOrder { expected: self.next_height, found: block.height });
        }
        let h = block.height;
        for tx in &block.tx_list {
            self.txs.insert(tx.id, (h, tx.clone()));
            match &tx.payload {
                TxPayload::Contr { id_contr, .. } => {
                    self.by_id_contr.entry(id_contr.clone()).or_default().insert(tx.id);
                    self.contr_registered_at.entry(id_contr.clone()).or_insert(h);
                }
                TxPayload::App { id_app, pk_app, .. } => {
                    self.by_pk_app.entry(pk_app.clone()).or_default().insert(tx.id);
                    self.by_id_app.entry(id_app.clone()).or_default().insert(tx.id);
                }
                TxPayload::AppContr { id_t_app, id_t_contr } => {
                    self.app_contr_edges.entry(*id_t_app).or_default().insert(*id_t_contr);
                }
                TxPayload::Switch { id_switch, pk_switch, com, .. } => {
                    self.switch_txs.entry(id_switch.clone()).or_default().push(tx.id);
                    self.switch_commitments.insert((pk_switch.clone(), com.clone()));
                }
                TxPayload::ContrSwitch { id_t_contr, id_t_switch } => {
                    self.contr_switch_edges.entry(*id_t_contr).or_default().insert(*id_t_switch);
                }
                TxPayload::FlowAfore { id_flow, .. } => {
                    self.flows_seen.entry(id_flow.clone()).or_insert(tx.id);
                }
                TxPayload::FlowAfter { id_flow, id_contr, .. } => {
                    self.flow_after_by_flow.entry(id_flow.clone()).or_insert(tx.id);
                    self.activity_by_contr.insert(id_contr.clone(), h);
                }
                TxPayload::Flow { .. } => {}
                TxPayload::Event { id_event, id_contr, id_switch, .. } => {
                    self.activity_by_contr.insert(id_contr.clone(), h);
                    self.events_by_id.entry(id_event.clone()).or_insert(tx.id);
                    self.events_by_link.entry((id_contr.clone(), id_switch.clone())).or_default().push(tx.id);
                }
            }
        }
        self.next_height += 1;
        Ok(())
    }

    pub fn tx(&self, id: &TxId) -> Option<(u64, &Transaction)> {
        self.txs.get(id).map(|(h, t)| (*h, t))
    }

    pub fn contains_tx(&self, id: &TxId) -> bool {
        self.txs.contains_key(id)
    }

    pub fn apps_with_pk(&self, pk: &GroupElement) -> impl Iterator<Item = TxId> + '_ {
        self.by_pk_app.get(pk).into_iter().flatten().copied()
    }

    pub fn apps_with_id(&self, id_app: &str) -> impl Iterator<Item = TxId> + '_ {
        self.by_id_app.get(id_app).into_iter().flatten().copied()
    }

    pub fn contrs_with_id(&self, id_contr: &str) -> impl Iterator<Item = TxId> + '_ {
        self.by_id_contr.get(id_contr).into_iter().flatten().copied()
    }

    /// Controller records linked to a `TApp`.
    pub fn contrs_of_app(&self, app_tx: &TxId) -> impl Iterator<Item = TxId> + '_ {
        self.app_contr_edges.get(app_tx).into_iter().flatten().copied()
    }

    /// `TSwitch` records linked to a `TContr`.
    pub fn switches_of_contr(&self, contr_tx: &TxId) -> impl Iterator<Item = TxId> + '_ {
        self.contr_switch_edges.get(contr_tx).into_iter().flatten().copied()
    }

    pub fn registered_controllers(&self) -> impl Iterator<Item = &str> {
        self.contr_registered_at.keys().map(String::as_str)
    }

    pub fn switch_record(&self, id: &TxId) -> Option<SwitchRecord> {
        let (height, tx) = self.tx(id)?;
        match &tx.payload {
            TxPayload::Switch { id_switch, pk_switch, slice, id_contr, com } => Some(SwitchRecord {
                tx: *id,
                id_switch: id_switch.clone(),
                pk_switch: pk_switch.clone(),
                slice: slice.clone(),
                id_contr: id_contr.clone(),
                com: com.clone(),
                height,
            }),
            _ => None,
        }
    }

    /// Every committed `TSwitch` for a switch id, oldest first.
    pub fn switch_history(&self, id_switch: &str) -> Vec<SwitchRecord> {
        self.switch_txs
            .get(id_switch)
            .into_iter()
            .flatten()
            .filter_map(|id| self.switch_record(id))
            .collect()
    }

    pub fn switch_commitment_seen(&self, pk_switch: &GroupElement, com: &HybridCiphertext) -> bool {
        self.switch_commitments.contains(&(pk_switch.clone(), com.clone()))
    }

    /// Switch ids reachable from controller `id_contr` over `TContrSwitch` edges.
    pub fn switch_ids_of_controller(&self, id_contr: &str) -> BTreeSet<String> {
        self.contrs_with_id(id_contr)
            .flat_map(|c| self.switches_of_contr(&c).collect::<Vec<_>>())
            .filter_map(|s| self.switch_record(&s).map(|r| r.id_switch))
            .collect()
    }

    /// Green path: TApp(pk_app) → TAppContr → TContr(id_contr) →
    /// TContrSwitch → TSwitch(id_switch).
    pub fn flow_auth_path(&self, pk_app: &GroupElement, id_contr: &str, id_switch: &str) -> bool {
        let contrs: BTreeSet<TxId> = self.contrs_with_id(id_contr).collect();
        self.apps_with_pk(pk_app).any(|app| {
            self.contrs_of_app(&app).filter(|c| contrs.contains(c)).any(|c| {
                self.switches_of_contr(&c)
                    .any(|s| self.switch_record(&s).is_some_and(|r| r.id_switch == id_switch))
            })
        })
    }

    pub fn flow_seen(&self, id_flow: &str) -> bool {
        self.flows_seen.contains_key(id_flow)
    }

    /// First committed `TFlowAfore` for a flow id.
    pub fn flow_afore(&self, id_flow: &str) -> Option<TxId> {
        self.flows_seen.get(id_flow).copied()
    }

    pub fn flow_after(&self, id_flow: &str) -> Option<TxId> {
        self.flow_after_by_flow.get(id_flow).copied()
    }

    pub fn events_on_link(&self, id_contr: &str, id_switch: &str) -> &[TxId] {
        self.events_by_link
            .get(&(id_contr.to_string(), id_switch.to_string()))
            .map_or(&[], Vec::as_slice)
    }

    pub fn event_by_id(&self, id_event: &str) -> Option<TxId> {
        self.events_by_id.get(id_event).copied()
    }

    /// Height of the controller's latest `TEvent` or `TFlowAfter`.
    pub fn last_activity(&self, id_contr: &str) -> Option<u64> {
        self.activity_by_contr.get(id_contr).copied()
    }

    pub fn registered_at(&self, id_contr: &str) -> Option<u64> {
        self.contr_registered_at.get(id_contr).copied()
    }

    /// Registered controllers with no `TEvent` or `TFlowAfter` in the last
    /// `window` blocks, counting the tip. Controllers registered inside the
    /// window are exempt.
    pub fn inactive_controllers(&self, window: u64) -> Vec<String> {
        let Some(cutoff) = self.tip_height().and_then(|t| t.checked_sub(window)) else {
            return Vec::new();
        };
        self.contr_registered_at
            .iter()
            .filter(|(id, reg)| self.last_activity(id).unwrap_or(0).max(**reg) <= cutoff)
            .map(|(id, _)| id.clone())
            .collect()
    }
}
