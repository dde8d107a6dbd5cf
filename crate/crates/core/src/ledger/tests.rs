use super::*;
use crate::crypto::{canonical_decode, canonical_encode, ds_keygen, ds_sign, GroupElement, KeyPair};
use proptest::prelude::*;

fn group() -> GroupParams {
    GroupParams::sim().clone()
}

fn contr(g: &GroupParams, id: &str, slice: &str) -> (KeyPair, TxPayload) {
    let k = ds_keygen(g, id.as_bytes());
    let sig = ds_sign(g, &k, &contr_sig_message(id, slice));
    let p = TxPayload::Contr { id_contr: id.into(), pk_contr: k.public().clone(), slice: slice.into(), sig };
    (k, p)
}

fn app(g: &GroupParams, id: &str, id_contr: &str) -> TxPayload {
    let k = ds_keygen(g, id.as_bytes());
    let sig = ds_sign(g, &k, &app_sig_message(id, "traffic engineering", id_contr));
    TxPayload::App {
        id_app: id.into(),
        pk_app: k.public().clone(),
        category: "traffic engineering".into(),
        id_contr: id_contr.into(),
        sig,
    }
}

fn event(n: u32, id_contr: &str) -> TxPayload {
    TxPayload::Event {
        id_event: format!("ev-{n}"),
        pk_switch: GroupParams::sim().generator(),
        id_contr: id_contr.into(),
        id_switch: "10.0.1.1".into(),
        event_payload: n.to_be_bytes().to_vec(),
    }
}

fn honest_ledger() -> Ledger {
    Ledger::new(group(), ValidatorSet::honest(4).unwrap())
}

fn commit(l: &mut Ledger, tick: u64) -> Arc<Block> {
    l.consensus_round(tick).unwrap().block().cloned().expect("round committed")
}

#[test]
fn valid_registration_is_admitted_once() {
    let mut l = honest_ledger();
    let (_, p) = contr(l.group(), "contr1", "slice1");
    let id = l.submit(p.clone()).unwrap();
    assert_eq!(l.submit(p.clone()), Err(SubmitError::DuplicateTx(id)));
    commit(&mut l, 1);
    assert_eq!(l.submit(p), Err(SubmitError::DuplicateTx(id)));
    assert_eq!(l.committed_at(&id), Some(1));
}

#[test]
fn wrong_signature_rejected() {
    let mut l = honest_ledger();
    let (_, p) = contr(l.group(), "contr1", "slice1");
    let TxPayload::Contr { id_contr, pk_contr, sig, .. } = p else { unreachable!() };
    let forged = TxPayload::Contr { id_contr, pk_contr, slice: "slice2".into(), sig };
    assert!(matches!(l.submit(forged), Err(SubmitError::BadSignature(_))));
}

#[test]
fn mismatched_content_address_rejected() {
    let mut l = honest_ledger();
    let mut tx = Transaction::new(event(1, "c"));
    tx.id = TxId([7; 32]);
    assert!(matches!(l.submit_tx(tx), Err(SubmitError::BadSignature(_))));
}

#[test]
fn dangling_reference_matches_scan_oracle() {
    let mut l = honest_ledger();
    let (_, c) = contr(l.group(), "contr1", "slice1");
    let c_id = l.submit(c).unwrap();
    let a_id = l.submit(app(l.group(), "app1", "contr1")).unwrap();
    commit(&mut l, 1);
    let ghost = TxId([9; 32]);
    let candidates = [
        (a_id, c_id),
        (ghost, c_id),
        (a_id, ghost),
        (c_id, a_id), // kinds swapped
    ];
    for (app_ref, contr_ref) in candidates {
        let p = TxPayload::AppContr { id_t_app: app_ref, id_t_contr: contr_ref };
        let oracle_ok = l.chain().iter().flat_map(|b| &b.tx_list).any(|t| t.id == app_ref && t.kind() == TxKind::App)
            && l.chain().iter().flat_map(|b| &b.tx_list).any(|t| t.id == contr_ref && t.kind() == TxKind::Contr);
        let got = l.submit(p);
        assert_eq!(got.is_ok(), oracle_ok, "{app_ref:?} {contr_ref:?}");
        if !oracle_ok {
            assert!(matches!(got, Err(SubmitError::DanglingReference { .. })));
        }
    }
}

#[test]
fn relationship_may_reference_pending_and_lands_with_it() {
    let mut l = honest_ledger();
    let (_, c) = contr(l.group(), "contr1", "slice1");
    let c_id = l.submit(c).unwrap();
    let a_id = l.submit(app(l.group(), "app1", "contr1")).unwrap();
    let r_id = l.submit(TxPayload::AppContr { id_t_app: a_id, id_t_contr: c_id }).unwrap();
    let b = commit(&mut l, 1);
    assert_eq!(b.tx_list.len(), 3);
    assert!(b.tx_list.windows(2).all(|w| w[0].id < w[1].id));
    assert_eq!(l.committed_at(&r_id), Some(1));
    verify_chain(l.group(), l.chain()).unwrap();
}

#[test]
fn all_honest_commit_every_round() {
    let mut l = honest_ledger();
    for t in 1..=10 {
        l.submit(event(t as u32, "c")).unwrap();
        let b = commit(&mut l, t);
        assert_eq!(b.height, t);
        assert_eq!(b.timestamp, t);
    }
    assert_eq!(l.chain().len(), 11);
    assert_eq!(verify_chain(l.group(), l.chain()), Ok(()));
}

#[test]
fn two_silent_validators_lose_liveness_not_safety() {
    let set = ValidatorSet::beyond_tolerance(vec![Behavior::Honest, Behavior::Silent, Behavior::Silent, Behavior::Honest])
        .unwrap();
    let mut l = Ledger::new(group(), set);
    l.submit(event(1, "c")).unwrap();
    for t in 1..=8 {
        assert!(matches!(l.consensus_round(t).unwrap(), RoundOutcome::NoQuorum { height: 1, .. }));
    }
    assert_eq!(l.height(), 0);
    assert_eq!(l.pending().count(), 1);
}

#[test]
fn silent_leader_skips_round_and_rotates() {
    let set = ValidatorSet::with_behaviors(vec![Behavior::Honest, Behavior::Silent, Behavior::Honest, Behavior::Honest]).unwrap();
    let mut l = Ledger::new(group(), set);
    // Height 1 is led by validator 1.
    assert_eq!(l.consensus_round(1).unwrap(), RoundOutcome::NoQuorum { height: 1, leader: 1 });
    assert!(matches!(l.consensus_round(2).unwrap(), RoundOutcome::Committed { leader: 2, .. }));
}

fn assert_prefix(shorter: &[Arc<Block>], longer: &[Arc<Block>]) {
    assert!(shorter.len() <= longer.len());
    for (a, b) in shorter.iter().zip(longer) {
        assert_eq!(a.block_hash, b.block_hash);
    }
}

#[test]
fn equivocating_validator_keeps_honest_chains_identical() {
    for bad in 0..4 {
        let mut behaviors = vec![Behavior::Honest; 4];
        behaviors[bad] = Behavior::Equivocating;
        let set = ValidatorSet::with_behaviors(behaviors).unwrap();
        let honest: Vec<usize> = set.honest_indices().collect();
        let mut l = Ledger::new(group(), set);
        let mut previous: Vec<Vec<Arc<Block>>> = honest.iter().map(|i| l.replica(*i).to_vec()).collect();
        for t in 1..=100u64 {
            if t % 3 == 0 {
                l.submit(event(t as u32, "c")).unwrap();
            }
            l.consensus_round(t).unwrap();
            let now: Vec<Vec<Arc<Block>>> = honest.iter().map(|i| l.replica(*i).to_vec()).collect();
            for (old, new) in previous.iter().zip(&now) {
                assert_prefix(old, new);
            }
            for w in now.windows(2) {
                assert_eq!(w[0].len(), w[1].len());
                assert_prefix(&w[0], &w[1]);
            }
            previous = now;
        }
        assert!(l.height() >= 75, "height {}", l.height());
        verify_chain(l.group(), l.chain()).unwrap();
    }
}

struct EventCounter(std::rc::Rc<std::cell::RefCell<Vec<usize>>>);

impl CommitHook for EventCounter {
    fn name(&self) -> &str {
        "event-counter"
    }

    fn on_commit(&mut self, _chain: &[Arc<Block>], block: &Block) -> Vec<TxPayload> {
        self.0.borrow_mut().push(block.tx_list.iter().filter(|t| t.kind() == TxKind::Event).count());
        Vec::new()
    }
}

#[test]
fn counting_hook_matches_recount() {
    let counts = std::rc::Rc::new(std::cell::RefCell::new(Vec::new()));
    let mut l = honest_ledger();
    l.register_commit_hook(Box::new(EventCounter(counts.clone()))).unwrap();
    let mut n = 0;
    for t in 1..=5u64 {
        for _ in 0..t {
            n += 1;
            l.submit(event(n, "c")).unwrap();
        }
        commit(&mut l, t);
    }
    let recount: usize = l.chain().iter().flat_map(|b| &b.tx_list).filter(|t| t.kind() == TxKind::Event).count();
    assert_eq!(counts.borrow().iter().sum::<usize>(), recount);
    assert_eq!(*counts.borrow(), vec![1, 2, 3, 4, 5]);
}

struct Emitter;

impl CommitHook for Emitter {
    fn name(&self) -> &str {
        "emitter"
    }

    fn on_commit(&mut self, _chain: &[Arc<Block>], block: &Block) -> Vec<TxPayload> {
        if block.height == 1 {
            vec![event(99, "hook")]
        } else {
            Vec::new()
        }
    }
}

#[test]
fn hook_output_lands_in_next_block() {
    let mut l = honest_ledger();
    l.register_commit_hook(Box::new(Emitter)).unwrap();
    let emitted = Transaction::new(event(99, "hook")).id;
    let b1 = commit(&mut l, 1);
    assert!(b1.tx_list.is_empty());
    assert!(l.is_pending(&emitted));
    let b2 = commit(&mut l, 2);
    assert_eq!(b2.tx_list.iter().map(|t| t.id).collect::<Vec<_>>(), vec![emitted]);
}

#[test]
fn zero_hooks_commit_normally() {
    let mut l = honest_ledger();
    l.submit(event(1, "c")).unwrap();
    assert_eq!(commit(&mut l, 1).tx_list.len(), 1);
}

struct Panicker;

impl CommitHook for Panicker {
    fn name(&self) -> &str {
        "panicker"
    }

    fn on_commit(&mut self, _chain: &[Arc<Block>], block: &Block) -> Vec<TxPayload> {
        if block.height == 2 {
            panic!("boom at two");
        }
        Vec::new()
    }
}

#[test]
fn panicking_hook_reports_diagnostics() {
    let mut l = honest_ledger();
    l.register_commit_hook(Box::new(Panicker)).unwrap();
    commit(&mut l, 1);
    let prev = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let err = l.consensus_round(2).unwrap_err();
    std::panic::set_hook(prev);
    assert_eq!(
        err,
        LedgerError::HookPanic { hook: "panicker".into(), height: 2, message: "boom at two".into() }
    );
    assert!(matches!(l.register_commit_hook(Box::new(Emitter)), Err(LedgerError::HooksSealed)));
}

#[test]
fn flow_aggregator_pairs_halves() {
    let g = group();
    let mut l = honest_ledger();
    l.register_commit_hook(Box::new(FlowAggregator::default())).unwrap();
    let k = ds_keygen(&g, b"app1");
    let content = b"match=1".to_vec();
    let afore = TxPayload::FlowAfore {
        id_flow: "f1".into(),
        id_contr: "contr1".into(),
        pk_app: k.public().clone(),
        sig_flow: ds_sign(&g, &k, &flow_sig_message("f1", "contr1", &content)),
        content,
    };
    let a_id = l.submit(afore).unwrap();
    commit(&mut l, 1);
    let after = TxPayload::FlowAfter { id_flow: "f1".into(), id_contr: "contr1".into(), id_switch: "s".into(), state: vec![1] };
    let b_id = l.submit(after).unwrap();
    commit(&mut l, 2);
    let b3 = commit(&mut l, 3);
    assert_eq!(b3.tx_list.len(), 1);
    assert_eq!(b3.tx_list[0].payload, TxPayload::Flow { id_t_flow_afore: a_id, id_t_flow_after: b_id });
    assert!(commit(&mut l, 4).tx_list.is_empty());
}

#[test]
fn last_n_blocks_truncates() {
    let mut l = honest_ledger();
    commit(&mut l, 1);
    assert_eq!(l.get_last_n_blocks(6).len(), 2);
    for t in 2..=5 {
        commit(&mut l, t);
    }
    let six = l.get_last_n_blocks(6);
    assert_eq!(six.len(), 6);
    assert_eq!(six.last().unwrap().height, 5);
    assert_eq!(l.get_last_n_blocks(1)[0].height, 5);
}

#[test]
fn block_cap_leaves_overflow_pooled() {
    let mut l = Ledger::new(group(), ValidatorSet::honest(4).unwrap()).with_block_cap(3);
    for i in 0..5 {
        l.submit(event(i, "c")).unwrap();
    }
    assert_eq!(commit(&mut l, 1).tx_list.len(), 3);
    assert_eq!(l.pending().count(), 2);
    assert_eq!(commit(&mut l, 2).tx_list.len(), 2);
}

fn ten_block_chain() -> Ledger {
    let mut l = honest_ledger();
    let mut n = 0;
    for t in 1..=9u64 {
        let (_, c) = contr(l.group(), &format!("contr{t}"), "slice1");
        l.submit(c).unwrap();
        for _ in 0..2 {
            n += 1;
            l.submit(event(n, "c")).unwrap();
        }
        commit(&mut l, t);
    }
    l
}

#[test]
fn empty_chain_verifies() {
    assert_eq!(verify_chain::<Block>(GroupParams::sim(), &[]), Ok(()));
    assert_eq!(read_dump(&[]).unwrap(), Vec::<Block>::new());
}

#[test]
fn dump_round_trips_bit_exactly() {
    let l = ten_block_chain();
    let bytes = write_dump(l.chain());
    let back = read_dump(&bytes).unwrap();
    assert_eq!(back.len(), 10);
    assert_eq!(write_dump(&back), bytes);
    assert_eq!(verify_chain(l.group(), &back), Ok(()));
}

#[test]
fn tampering_block_three_fails_at_three() {
    let l = ten_block_chain();
    let blocks: Vec<Block> = l.chain().iter().map(|b| (**b).clone()).collect();
    let encoded = canonical_encode(&blocks[3]);
    // Byte range of tx_list inside the encoded block: after height, timestamp, prev_hash.
    let start = 8 + 8 + 32;
    let end = encoded.len() - 32;
    for pos in start..end {
        let mut bytes = encoded.clone();
        bytes[pos] ^= 0x01;
        let Ok(tampered) = canonical_decode::<Block>(&bytes) else { continue };
        let mut chain = blocks.clone();
        chain[3] = tampered;
        let fault = verify_chain(l.group(), &chain).unwrap_err();
        assert_eq!(fault.height, 3, "byte {pos}: {fault}");
    }
}

#[test]
fn verify_reports_link_and_height_faults() {
    let l = ten_block_chain();
    let mut blocks: Vec<Block> = l.chain().iter().map(|b| (**b).clone()).collect();
    let mut relinked = blocks.clone();
    relinked[5].prev_hash[0] ^= 1;
    assert_eq!(verify_chain(l.group(), &relinked).unwrap_err().kind, ChainFaultKind::BrokenLink);
    blocks.remove(4);
    assert_eq!(
        verify_chain(l.group(), &blocks).unwrap_err(),
        ChainFault { height: 5, kind: ChainFaultKind::HeightGap { expected: 4, found: 5 } }
    );
}

#[test]
fn forged_signature_detected_even_with_recomputed_hashes() {
    let l = ten_block_chain();
    let mut blocks: Vec<Block> = l.chain().iter().map(|b| (**b).clone()).collect();
    let victim = blocks[2].tx_list.iter().position(|t| t.kind() == TxKind::Contr).unwrap();
    if let TxPayload::Contr { slice, .. } = &mut blocks[2].tx_list[victim].payload {
        *slice = "slice9".into();
    }
    let tx = Transaction::new(blocks[2].tx_list[victim].payload.clone());
    blocks[2].tx_list[victim] = tx.clone();
    let mut prev = blocks[1].block_hash;
    for b in blocks.iter_mut().skip(2) {
        *b = Block::new(b.height, b.timestamp, prev, b.tx_list.clone());
        prev = b.block_hash;
    }
    assert_eq!(
        verify_chain(l.group(), &blocks).unwrap_err(),
        ChainFault { height: 2, kind: ChainFaultKind::BadSignature(tx.id) }
    );
}

#[test]
fn same_inputs_same_hashes() {
    let a = ten_block_chain();
    let b = ten_block_chain();
    let ha: Vec<_> = a.chain().iter().map(|b| b.block_hash).collect();
    let hb: Vec<_> = b.chain().iter().map(|b| b.block_hash).collect();
    assert_eq!(ha, hb);
}

#[test]
fn genesis_shape() {
    let g = Block::genesis();
    assert_eq!((g.height, g.timestamp, g.prev_hash), (0, 0, ZERO_HASH));
    assert!(g.tx_list.is_empty());
}

proptest! {
    #[test]
    fn payload_content_address_recomputes(id in "[a-z0-9]{0,12}", state in proptest::collection::vec(any::<u8>(), 0..40)) {
        let p = TxPayload::FlowAfter { id_flow: id.clone(), id_contr: id.clone(), id_switch: id, state };
        let tx = Transaction::new(p);
        let back: Transaction = canonical_decode(&canonical_encode(&tx)).unwrap();
        prop_assert!(back.id_matches_payload());
        prop_assert_eq!(back, tx);
    }

    #[test]
    fn block_encoding_round_trips(h in 0u64..1000, ts in 0u64..1000, n in 0u32..5) {
        let txs: Vec<Transaction> = (0..n).map(|i| Transaction::new(TxPayload::Event {
            id_event: i.to_string(),
            pk_switch: GroupElement::from_u64(2),
            id_contr: "c".into(),
            id_switch: "s".into(),
            event_payload: vec![i as u8],
        })).collect();
        let b = Block::new(h, ts, [h as u8; 32], txs);
        let back: Block = canonical_decode(&canonical_encode(&b)).unwrap();
        prop_assert_eq!(back.recompute_hash(), b.block_hash);
        prop_assert_eq!(back, b);
    }
}
