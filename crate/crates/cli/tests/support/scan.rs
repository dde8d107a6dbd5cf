use std::collections::BTreeSet;

use chainsdn_core::crypto::{GroupElement, HybridCiphertext};
use chainsdn_core::ledger::{Block, Transaction, TxId, TxPayload};

pub fn txs(chain: &[Block]) -> impl Iterator<Item = (u64, &Transaction)> {
    chain.iter().flat_map(|b| b.tx_list.iter().map(move |t| (b.height, t)))
}

pub fn tx(chain: &[Block], id: &TxId) -> Option<(u64, Transaction)> {
    txs(chain).find(|(_, t)| t.id == *id).map(|(h, t)| (h, t.clone()))
}

pub fn apps_with_pk(chain: &[Block], pk: &GroupElement) -> BTreeSet<TxId> {
    txs(chain).filter(|(_, t)| matches!(&t.payload, TxPayload::App { pk_app, .. } if pk_app == pk)).map(|(_, t)| t.id).collect()
}

pub fn apps_with_id(chain: &[Block], id: &str) -> BTreeSet<TxId> {
    txs(chain).filter(|(_, t)| matches!(&t.payload, TxPayload::App { id_app, .. } if id_app == id)).map(|(_, t)| t.id).collect()
}

pub fn contrs_with_id(chain: &[Block], id: &str) -> BTreeSet<TxId> {
    txs(chain).filter(|(_, t)| matches!(&t.payload, TxPayload::Contr { id_contr, .. } if id_contr == id)).map(|(_, t)| t.id).collect()
}

pub fn contrs_of_app(chain: &[Block], app: &TxId) -> BTreeSet<TxId> {
    txs(chain)
        .filter_map(|(_, t)| match &t.payload {
            TxPayload::AppContr { id_t_app, id_t_contr } if id_t_app == app => Some(*id_t_contr),
            _ => None,
        })
        .collect()
}

pub fn switches_of_contr(chain: &[Block], contr: &TxId) -> BTreeSet<TxId> {
    txs(chain)
        .filter_map(|(_, t)| match &t.payload {
            TxPayload::ContrSwitch { id_t_contr, id_t_switch } if id_t_contr == contr => Some(*id_t_switch),
            _ => None,
        })
        .collect()
}

pub fn registered_controllers(chain: &[Block]) -> BTreeSet<String> {
    txs(chain)
        .filter_map(|(_, t)| match &t.payload {
            TxPayload::Contr { id_contr, .. } => Some(id_contr.clone()),
            _ => None,
        })
        .collect()
}

pub fn registered_at(chain: &[Block], id: &str) -> Option<u64> {
    txs(chain).find(|(_, t)| matches!(&t.payload, TxPayload::Contr { id_contr, .. } if id_contr == id)).map(|(h, _)| h)
}

/// (tx id, height) of every `TSwitch` for the switch, in chain order.
pub fn switch_history(chain: &[Block], id: &str) -> Vec<(TxId, u64)> {
    txs(chain)
        .filter(|(_, t)| matches!(&t.payload, TxPayload::Switch { id_switch, .. } if id_switch == id))
        .map(|(h, t)| (t.id, h))
        .collect()
}

pub fn switch_commitment_seen(chain: &[Block], pk: &GroupElement, com: &HybridCiphertext) -> bool {
    txs(chain).any(|(_, t)| matches!(&t.payload, TxPayload::Switch { pk_switch, com: c, .. } if pk_switch == pk && c == com))
}

fn switch_id_of(chain: &[Block], id: &TxId) -> Option<String> {
    match tx(chain, id)?.1.payload {
        TxPayload::Switch { id_switch, .. } => Some(id_switch),
        _ => None,
    }
}

pub fn switch_ids_of_controller(chain: &[Block], id_contr: &str) -> BTreeSet<String> {
    contrs_with_id(chain, id_contr)
        .iter()
        .flat_map(|c| switches_of_contr(chain, c))
        .filter_map(|s| switch_id_of(chain, &s))
        .collect()
}

pub fn flow_auth_path(chain: &[Block], pk: &GroupElement, id_contr: &str, id_switch: &str) -> bool {
    let contrs = contrs_with_id(chain, id_contr);
    apps_with_pk(chain, pk).iter().any(|a| {
        contrs_of_app(chain, a)
            .iter()
            .filter(|c| contrs.contains(c))
            .any(|c| switches_of_contr(chain, c).iter().any(|s| switch_id_of(chain, s).as_deref() == Some(id_switch)))
    })
}

pub fn flow_afore(chain: &[Block], id: &str) -> Option<TxId> {
    txs(chain).find(|(_, t)| matches!(&t.payload, TxPayload::FlowAfore { id_flow, .. } if id_flow == id)).map(|(_, t)| t.id)
}

pub fn flow_after(chain: &[Block], id: &str) -> Option<TxId> {
    txs(chain).find(|(_, t)| matches!(&t.payload, TxPayload::FlowAfter { id_flow, .. } if id_flow == id)).map(|(_, t)| t.id)
}

pub fn events_on_link(chain: &[Block], c: &str, s: &str) -> Vec<TxId> {
    txs(chain)
        .filter(|(_, t)| matches!(&t.payload, TxPayload::Event { id_contr, id_switch, .. } if id_contr == c && id_switch == s))
        .map(|(_, t)| t.id)
        .collect()
}

pub fn event_by_id(chain: &[Block], id: &str) -> Option<TxId> {
    txs(chain).find(|(_, t)| matches!(&t.payload, TxPayload::Event { id_event, .. } if id_event == id)).map(|(_, t)| t.id)
}

fn is_activity_of(t: &Transaction, c: &str) -> bool {
    matches!(&t.payload,
        TxPayload::Event { id_contr, .. } | TxPayload::FlowAfter { id_contr, .. } if id_contr == c)
}

pub fn last_activity(chain: &[Block], c: &str) -> Option<u64> {
    txs(chain).filter(|(_, t)| is_activity_of(t, c)).map(|(h, _)| h).max()
}

/// Controllers with neither first registration nor any activity among the
/// last `window` blocks; nothing is listed until the chain holds more than
/// `window` blocks past genesis.
pub fn inactive_controllers(chain: &[Block], window: u64) -> BTreeSet<String> {
    let tip = chain.last().map_or(0, |b| b.height);
    if tip < window {
        return BTreeSet::new();
    }
    let recent = &chain[(tip - window + 1) as usize..];
    registered_controllers(chain)
        .into_iter()
        .filter(|c| registered_at(chain, c).unwrap() <= tip - window)
        .filter(|c| !recent.iter().flat_map(|b| &b.tx_list).any(|t| is_activity_of(t, c)))
        .collect()
}
