use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use chainsdn_core::crypto::{GroupElement, GroupParams, HybridCiphertext, Scalar, Signature};
use chainsdn_core::ledger::{Block, Transaction, TxId, TxKind, TxPayload};

pub const APPS: [&str; 4] = ["app0", "app1", "app2", "app3"];
pub const CONTRS: [&str; 4] = ["contr0", "contr1", "contr2", "contr3"];
pub const SWITCHES: [&str; 4] = ["10.0.0.1", "10.0.0.2", "10.0.1.1", "10.0.1.2"];
pub const FLOWS: [&str; 6] = ["f0", "f1", "f2", "f3", "f4", "f5"];
pub const EVENTS: [&str; 6] = ["e0", "e1", "e2", "e3", "e4", "e5"];

pub fn pk(n: u64) -> GroupElement {
    GroupParams::test().pow_g(&Scalar::from_u64(n))
}

pub fn com(n: u8) -> HybridCiphertext {
    HybridCiphertext { key_encapsulation: pk(u64::from(n) + 1), payload: vec![n; 28] }
}

fn sig() -> Signature {
    Signature { commitment: Scalar::from_u64(1), response: Scalar::from_u64(2) }
}

/// Random well-typed chain of `len` blocks including genesis, drawing ids
/// from small pools so lookups collide. Signatures are placeholders.
pub fn random_chain<R: Rng>(rng: &mut R, len: usize) -> Vec<Block> {
    let mut chain = vec![Block::genesis()];
    let mut by_kind: Vec<(TxId, TxKind)> = Vec::new();
    let mut seen = HashSet::new();
    while chain.len() < len {
        let tip = chain.last().unwrap();
        let n = rng.gen_range(0..5);
        let mut list = Vec::new();
        for _ in 0..n {
            let p = random_payload(rng, &by_kind);
            let Some(p) = p else { continue };
            let tx = Transaction::new(p);
            if seen.insert(tx.id) {
                list.push(tx);
            }
        }
        for t in &list {
            by_kind.push((t.id, t.kind()));
        }
        let h = tip.height + 1;
        chain.push(Block::new(h, h, tip.block_hash, list));
    }
    chain
}

fn pick<R: Rng>(rng: &mut R, by_kind: &[(TxId, TxKind)], kind: TxKind) -> Option<TxId> {
    let c: Vec<TxId> = by_kind.iter().filter(|(_, k)| *k == kind).map(|(id, _)| *id).collect();
    c.choose(rng).copied()
}

fn random_payload<R: Rng>(rng: &mut R, by_kind: &[(TxId, TxKind)]) -> Option<TxPayload> {
    let s = |rng: &mut R, pool: &[&str]| pool.choose(rng).unwrap().to_string();
    Some(match rng.gen_range(0..9) {
        0 => TxPayload::Contr { id_contr: s(rng, &CONTRS), pk_contr: pk(rng.gen_range(1..11)), slice: "slice".into(), sig: sig() },
        1 => TxPayload::App {
            id_app: s(rng, &APPS),
            pk_app: pk(rng.gen_range(1..6)),
            category: "security and dependability".into(),
            id_contr: s(rng, &CONTRS),
            sig: sig(),
        },
        2 => TxPayload::AppContr { id_t_app: pick(rng, by_kind, TxKind::App)?, id_t_contr: pick(rng, by_kind, TxKind::Contr)? },
        3 => TxPayload::Switch {
            id_switch: s(rng, &SWITCHES),
            pk_switch: pk(rng.gen_range(1..6)),
            slice: "slice".into(),
            id_contr: s(rng, &CONTRS),
            com: com(rng.gen_range(0..4)),
        },
        4 => TxPayload::ContrSwitch {
            id_t_contr: pick(rng, by_kind, TxKind::Contr)?,
            id_t_switch: pick(rng, by_kind, TxKind::Switch)?,
        },
        5 => TxPayload::FlowAfore {
            id_flow: s(rng, &FLOWS),
            id_contr: s(rng, &CONTRS),
            pk_app: pk(rng.gen_range(1..6)),
            content: vec![rng.gen()],
            sig_flow: sig(),
        },
        6 => TxPayload::FlowAfter {
            id_flow: s(rng, &FLOWS),
            id_contr: s(rng, &CONTRS),
            id_switch: s(rng, &SWITCHES),
            state: vec![rng.gen()],
        },
        7 => TxPayload::Flow {
            id_t_flow_afore: pick(rng, by_kind, TxKind::FlowAfore)?,
            id_t_flow_after: pick(rng, by_kind, TxKind::FlowAfter)?,
        },
        _ => TxPayload::Event {
            id_event: s(rng, &EVENTS),
            pk_switch: pk(rng.gen_range(1..6)),
            id_contr: s(rng, &CONTRS),
            id_switch: s(rng, &SWITCHES),
            event_payload: vec![rng.gen()],
        },
    })
}
