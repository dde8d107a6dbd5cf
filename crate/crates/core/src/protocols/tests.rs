use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::abe::{abe_decrypt, abe_setup, tree_satisfies, AbeError, APP_CATEGORIES};
use crate::crypto::{ds_keygen, ds_sign, solve_puzzle, GroupParams, KeyPair};
use crate::homqv::homqv_initiate;
use crate::ledger::{app_sig_message, contr_sig_message, flow_sig_message, Block, Transaction, TxId, TxPayload};
use crate::txgraph::AuditIndex;

fn g() -> &'static GroupParams {
    GroupParams::sim()
}

struct Fixture {
    chain: Vec<Block>,
    index: AuditIndex,
}

impl Fixture {
    fn new() -> Self {
        let chain = vec![Block::genesis()];
        let index = AuditIndex::from_chain(&chain).unwrap();
        Self { chain, index }
    }

    fn height(&self) -> u64 {
        self.chain.last().unwrap().height
    }

    fn push(&mut self, payloads: Vec<TxPayload>) -> Vec<TxId> {
        let tip = self.chain.last().unwrap();
        let txs: Vec<Transaction> = payloads.into_iter().map(Transaction::new).collect();
        let ids = txs.iter().map(|t| t.id).collect();
        let b = Block::new(tip.height + 1, tip.height + 1, tip.block_hash, txs);
        self.index.index_block(&b).unwrap();
        self.chain.push(b);
        ids
    }

    fn contr(&mut self, id: &str, slice: &str) -> (KeyPair, TxId) {
        let k = ds_keygen(g(), id.as_bytes());
        let sig = ds_sign(g(), &k, &contr_sig_message(id, slice));
        let ids = self.push(vec![TxPayload::Contr { id_contr: id.into(), pk_contr: k.public().clone(), slice: slice.into(), sig }]);
        (k, ids[0])
    }

    fn app(&mut self, id: &str, category: &str, contrs: &[TxId]) -> KeyPair {
        let k = ds_keygen(g(), id.as_bytes());
        let sig = ds_sign(g(), &k, &app_sig_message(id, category, "contr1"));
        let ids = self.push(vec![TxPayload::App {
            id_app: id.into(),
            pk_app: k.public().clone(),
            category: category.into(),
            id_contr: "contr1".into(),
            sig,
        }]);
        let rels = contrs.iter().map(|c| TxPayload::AppContr { id_t_app: ids[0], id_t_contr: *c }).collect();
        self.push(rels);
        k
    }

    fn switch(&mut self, id: &str, contr_id: &str, contr_tx: TxId) -> TxId {
        let com = crate::crypto::HybridCiphertext { key_encapsulation: g().generator(), payload: id.as_bytes().to_vec() };
        let s = TxPayload::Switch {
            id_switch: id.into(),
            pk_switch: ds_keygen(g(), id.as_bytes()).public().clone(),
            slice: "slice1".into(),
            id_contr: contr_id.into(),
            com,
        };
        let sid = s.tx_id();
        self.push(vec![s, TxPayload::ContrSwitch { id_t_contr: contr_tx, id_t_switch: sid }]);
        sid
    }
}

fn flow(app: &KeyPair, id_flow: &str, content: &[u8]) -> FlowRequest {
    FlowRequest {
        id_flow: id_flow.into(),
        content: content.to_vec(),
        pk_app: app.public().clone(),
        id_contr: "contr1".into(),
        id_switch: "10.0.1.1".into(),
        sig: ds_sign(g(), app, &flow_sig_message(id_flow, "contr1", content)),
    }
}

fn registered() -> (Fixture, KeyPair, ReputationBook) {
    let mut f = Fixture::new();
    let (_, c) = f.contr("contr1", "slice1");
    let app = f.app("app1", "traffic engineering", &[c]);
    f.switch("10.0.1.1", "contr1", c);
    let mut book = ReputationBook::default();
    book.register("app1");
    (f, app, book)
}

#[test]
fn happy_flow_accepted() {
    let (f, app, mut book) = registered();
    let fl = flow(&app, "f1", b"\x0a\x00\x00\x01 fwd 2");
    assert_eq!(auth_flow(g(), &fl, &f.index, &BTreeSet::new(), &mut book), Ok(fl.to_afore()));
}

#[test]
fn tampered_content_never_accepted() {
    let (f, app, mut book) = registered();
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    for i in 0..200 {
        let mut fl = flow(&app, &format!("f{i}"), &rng.gen::<[u8; 12]>());
        let bit = rng.gen_range(0..96);
        fl.content[bit / 8] ^= 1 << (bit % 8);
        assert_eq!(auth_flow(g(), &fl, &f.index, &BTreeSet::new(), &mut book), Err(FlowReject::BadFlowSignature));
    }
    assert_eq!(book.score("app1"), Some(100));
}

#[test]
fn app_without_edge_is_unregistered() {
    let mut f = Fixture::new();
    let (_, c) = f.contr("contr1", "slice1");
    let app = f.app("app1", "traffic engineering", &[]);
    f.switch("10.0.1.1", "contr1", c);
    let mut book = ReputationBook::default();
    let fl = flow(&app, "f1", b"x");
    assert_eq!(auth_flow(g(), &fl, &f.index, &BTreeSet::new(), &mut book), Err(FlowReject::UnregisteredApp));
}

#[test]
fn replay_drops_score_once() {
    let (mut f, app, mut book) = registered();
    let fl = flow(&app, "f1", b"rule");
    let afore = auth_flow(g(), &fl, &f.index, &BTreeSet::new(), &mut book).unwrap();
    f.push(vec![afore]);
    assert_eq!(auth_flow(g(), &fl, &f.index, &BTreeSet::new(), &mut book), Err(FlowReject::ReplayedFlow));
    assert_eq!(book.score("app1"), Some(90));
    let fresh = flow(&app, "f2", b"rule");
    assert_eq!(flow_replay_detect(&fresh, &f.index, &BTreeSet::new(), &mut book), Freshness::Fresh);
    assert_eq!(book.score("app1"), Some(90));
}

#[test]
fn pending_flow_counts_as_seen() {
    let (f, app, mut book) = registered();
    let fl = flow(&app, "f1", b"rule");
    let pending: BTreeSet<String> = ["f1".to_string()].into();
    assert_eq!(flow_replay_detect(&fl, &f.index, &pending, &mut book), Freshness::Replayed);
}

#[test]
fn labeled_replays_detected_at_forced_rate() {
    let (mut f, app, _) = registered();
    let mut book = ReputationBook::new(100_000, 1, 0);
    book.register("app1");
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let sig = flow(&app, "x", b"x").sig;
    let mut used: Vec<String> = Vec::new();
    let (mut forced, mut detected) = (0, 0);
    for i in 0..1000 {
        let replay = !used.is_empty() && rng.gen_bool(0.1);
        let id = if replay { used[rng.gen_range(0..used.len())].clone() } else { format!("flow-{i}") };
        let fl = FlowRequest { id_flow: id.clone(), content: vec![], pk_app: app.public().clone(), id_contr: "contr1".into(), id_switch: "s".into(), sig: sig.clone() };
        forced += usize::from(replay);
        match flow_replay_detect(&fl, &f.index, &BTreeSet::new(), &mut book) {
            Freshness::Replayed => detected += 1,
            Freshness::Fresh => {
                assert!(!replay);
                f.push(vec![fl.to_afore()]);
                used.push(id);
            }
        }
    }
    assert_eq!(detected, forced);
    assert_eq!(book.score("app1"), Some(100_000 - forced as i64));
}

#[test]
fn banned_app_rejected_before_signature() {
    let (f, app, mut book) = registered();
    for _ in 0..10 {
        book.reduce_reputation("app1").unwrap();
    }
    let mut fl = flow(&app, "f9", b"rule");
    fl.content.push(0);
    assert_eq!(auth_flow(g(), &fl, &f.index, &BTreeSet::new(), &mut book), Err(FlowReject::Banned("app1".into())));
}

fn after(id_flow: &str, id_switch: &str) -> TxPayload {
    TxPayload::FlowAfter { id_flow: id_flow.into(), id_contr: "contr1".into(), id_switch: id_switch.into(), state: b"installed".to_vec() }
}

#[test]
fn second_conflicting_flow_loses() {
    let mut f = Fixture::new();
    let (_, c) = f.contr("contr1", "slice1");
    let a1 = f.app("app1", "traffic engineering", &[c]);
    let a2 = f.app("app2", "traffic engineering", &[c]);
    f.push(vec![flow(&a1, "f1", b"MTCHfwd1").to_afore(), flow(&a2, "f2", b"MTCHfwd2").to_afore()]);
    let mut arb = Arbiter::default();
    f.push(vec![after("f1", "10.0.1.1")]);
    assert!(arbitration_loss_notify(f.chain.last().unwrap(), &f.index, &mut arb).is_empty());
    f.push(vec![after("f2", "10.0.1.1")]);
    let n = arbitration_loss_notify(f.chain.last().unwrap(), &f.index, &mut arb);
    assert_eq!(
        n,
        vec![Notification { recipient: "app2".into(), kind: NotificationKind::ArbitrationLoss, subject: "f2".into(), issued_at: f.height() }]
    );
    assert_eq!(arb.winner("10.0.1.1", b"MTCH"), Some("f1"));
}

#[test]
fn no_conflict_no_notifications() {
    let (mut f, app, _) = registered();
    f.push(vec![flow(&app, "f1", b"AAAA1").to_afore(), flow(&app, "f2", b"BBBB1").to_afore(), flow(&app, "f3", b"AAAA1").to_afore()]);
    f.push(vec![after("f1", "s"), after("f2", "s"), after("f3", "s")]);
    let mut arb = Arbiter::default();
    assert!(arbitration_loss_notify(f.chain.last().unwrap(), &f.index, &mut arb).is_empty());
}

#[test]
fn conflict_clusters_match_pairwise_oracle() {
    let mut f = Fixture::new();
    let (_, c) = f.contr("contr1", "slice1");
    let apps: Vec<KeyPair> = (0..4).map(|i| f.app(&format!("app{i}"), "traffic engineering", &[c])).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    // (id_flow, app index, switch, content) in commit order of their TFlowAfter.
    let mut installs: Vec<(String, usize, String, Vec<u8>)> = Vec::new();
    let mut n = 0;
    for cluster in 0..20 {
        let prefix = [b'K', cluster as u8, rng.gen_range(0..2), 0];
        let switch = format!("10.0.{}.1", rng.gen_range(0..3));
        for _ in 0..rng.gen_range(1..5) {
            let mut content = prefix.to_vec();
            content.push(rng.gen_range(0..3));
            let a = rng.gen_range(0..apps.len());
            installs.push((format!("fl{n}"), a, switch.clone(), content));
            n += 1;
        }
    }
    let afores = installs.iter().map(|(id, a, _, c)| flow(&apps[*a], id, c).to_afore()).collect();
    f.push(afores);
    let mut arb = Arbiter::default();
    let mut got = Vec::new();
    for chunk in installs.chunks(3) {
        f.push(chunk.iter().map(|(id, _, s, _)| after(id, s)).collect());
        got.extend(arbitration_loss_notify(f.chain.last().unwrap(), &f.index, &mut arb));
    }
    let ordered: Vec<_> = installs.iter().collect();
    let mut expected = BTreeSet::new();
    for (i, (id, a, s, content)) in ordered.iter().enumerate() {
        let first = ordered[..i].iter().find(|(_, _, s2, c2)| s2 == s && c2[..4] == content[..4]);
        if let Some((_, _, _, wc)) = first {
            if wc != content {
                expected.insert((format!("app{a}"), id.clone()));
            }
        }
    }
    let got: BTreeSet<_> = got.into_iter().map(|n| (n.recipient, n.subject)).collect();
    assert_eq!(got, expected);
    assert!(!expected.is_empty());
}

fn heartbeat(id_contr: &str, n: u64) -> TxPayload {
    TxPayload::Event {
        id_event: format!("hb-{id_contr}-{n}"),
        pk_switch: g().generator(),
        id_contr: id_contr.into(),
        id_switch: "10.0.1.1".into(),
        event_payload: EventPayload::new("heartbeat", id_contr, &[]).to_bytes(),
    }
}

#[test]
fn active_controller_never_reported() {
    let (mut f, _, _) = registered();
    let mut m = FailureMonitor::default();
    for t in 0..20 {
        f.push(vec![heartbeat("contr1", t)]);
        assert!(controller_failed_notify(f.height(), &f.index, &mut m).is_empty());
    }
}

#[test]
fn crashed_controller_reported_after_window_and_reissued() {
    let mut f = Fixture::new();
    let (_, c) = f.contr("contr1", "slice1");
    f.switch("10.0.1.1", "contr1", c);
    f.switch("10.0.1.2", "contr1", c);
    f.push(vec![heartbeat("contr1", 0)]);
    let h = f.height();
    let mut m = FailureMonitor::default();
    let mut first = None;
    let mut issued = Vec::new();
    for _ in 0..14 {
        f.push(vec![]);
        let n = controller_failed_notify(f.height(), &f.index, &mut m);
        if !n.is_empty() {
            first.get_or_insert(f.height());
            issued.push(f.height());
            let recipients: Vec<_> = n.iter().map(|x| x.recipient.as_str()).collect();
            assert_eq!(recipients, vec!["10.0.1.1", "10.0.1.2"]);
        }
    }
    assert_eq!(first, Some(h + 6));
    assert_eq!(issued, vec![h + 6, h + 12]);
    f.push(vec![heartbeat("contr1", 1)]);
    assert!(controller_failed_notify(f.height(), &f.index, &mut m).is_empty());
    assert_eq!(m.notified_at("contr1"), None);
}

#[test]
fn controller_without_switches_has_no_recipients() {
    let mut f = Fixture::new();
    f.contr("lonely", "slice9");
    let mut m = FailureMonitor::default();
    for _ in 0..10 {
        f.push(vec![]);
        assert!(controller_failed_notify(f.height(), &f.index, &mut m).is_empty());
    }
    assert!(m.notified_at("lonely").is_some());
}

fn access_fixture() -> (Fixture, AccessControl) {
    let mut f = Fixture::new();
    let (_, c1) = f.contr("contr1", "slice1,slice2");
    let (_, c2) = f.contr("contr2", "slice3");
    f.app("app1", "traffic engineering", &[c1]);
    f.app("mon", "measurement and monitoring", &[c1, c2]);
    let mut universe = vec!["contr1", "contr2", "app1", "mon"];
    universe.extend(APP_CATEGORIES);
    let params = abe_setup(GroupParams::test(), &universe, b"authority").unwrap();
    let mut ac = AccessControl::new(params);
    for s in ["slice1", "slice2", "slice3"] {
        ac.add_resource(&format!("topology-{s}"), Resource { slice: s.into(), content: format!("diagram of {s}").into_bytes() });
    }
    (f, ac)
}

#[test]
fn slice_topology_access() {
    let (f, mut ac) = access_fixture();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let first = ac.access_control_serve("app1", "topology-slice1", &f.index, &mut rng).unwrap();
    let key = first.key.expect("first contact mints a key");
    let public = ac.params().public.clone();
    assert_eq!(abe_decrypt(&first.ciphertext, &key, &public).unwrap(), b"diagram of slice1");
    let second = ac.access_control_serve("app1", "topology-slice2", &f.index, &mut rng).unwrap();
    assert!(second.key.is_none());
    assert_eq!(abe_decrypt(&second.ciphertext, &key, &public).unwrap(), b"diagram of slice2");
    let third = ac.access_control_serve("app1", "topology-slice3", &f.index, &mut rng).unwrap();
    assert_eq!(abe_decrypt(&third.ciphertext, &key, &public), Err(AbeError::PolicyUnsatisfied));
}

#[test]
fn monitoring_app_reads_either_controller() {
    let (f, mut ac) = access_fixture();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut key = None;
    for s in ["slice1", "slice2", "slice3"] {
        let grant = ac.access_control_serve("mon", &format!("topology-{s}"), &f.index, &mut rng).unwrap();
        if grant.key.is_some() {
            key = grant.key;
        }
        let k = key.as_ref().unwrap();
        let ok = tree_satisfies(&k.policy, &grant.ciphertext.label_attributes);
        assert!(ok);
        assert_eq!(abe_decrypt(&grant.ciphertext, k, &ac.params().public).is_ok(), ok);
    }
    assert_eq!(
        key.unwrap().policy,
        app_policy("mon", "measurement and monitoring", &["contr1".to_string(), "contr2".to_string()].into())
    );
}

#[test]
fn unknown_app_and_resource() {
    let (f, mut ac) = access_fixture();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    assert_eq!(ac.access_control_serve("ghost", "topology-slice1", &f.index, &mut rng), Err(AccessError::UnknownApp("ghost".into())));
    assert_eq!(ac.access_control_serve("app1", "nope", &f.index, &mut rng), Err(AccessError::UnknownResource("nope".into())));
}

const DIFFICULTY: u8 = 8;

struct SwitchSide {
    id: String,
    keys: KeyPair,
    nonce: [u8; NONCE_LEN],
}

fn request(sw: &SwitchSide, signer: &KeyPair, contr: &KeyPair, prior: Option<TxId>, seed: u64) -> (ConnectionRequest, crate::homqv::SessionContext) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let com = build_commitment(g(), contr.public(), signer, &sw.nonce, &mut rng).unwrap();
    let (y, ctx) = homqv_initiate(g(), &sw.keys, contr.public(), sw.id.as_bytes(), b"contr1", &seed.to_be_bytes()).unwrap();
    let req = ConnectionRequest {
        id_switch: sw.id.clone(),
        pk_switch: sw.keys.public().clone(),
        com,
        prior_request_id: prior,
        ephemeral_y: y,
        slice: "slice1".into(),
        id_contr: "contr1".into(),
        puzzle: solve_puzzle(sw.id.as_bytes(), DIFFICULTY).unwrap(),
    };
    (req, ctx)
}

struct ConnFixture {
    f: Fixture,
    contr: KeyPair,
    contr_tx: TxId,
    book: ReputationBook,
}

impl ConnFixture {
    fn new() -> Self {
        let mut f = Fixture::new();
        let (contr, contr_tx) = f.contr("contr1", "slice1");
        Self { f, contr, contr_tx, book: ReputationBook::default() }
    }

    fn audit(&mut self, req: &ConnectionRequest, pending: &HashSet<(crate::crypto::GroupElement, crate::crypto::HybridCiphertext)>) -> Result<SessionEstablished, ConnectionReject> {
        let ctx = ConnectionContext {
            group: g(),
            controller: &self.contr,
            id_contr: "contr1",
            contr_tx: self.contr_tx,
            index: &self.f.index,
            pending_commitments: pending,
            min_difficulty: DIFFICULTY,
        };
        audit_authen_request(&ctx, req, &mut self.book)
    }
}

fn switch_side(id: &str) -> SwitchSide {
    SwitchSide { id: id.into(), keys: ds_keygen(g(), id.as_bytes()), nonce: *b"0123456789abcdef" }
}

#[test]
fn fresh_request_then_replay() {
    let mut cf = ConnFixture::new();
    let sw = switch_side("10.0.1.1");
    cf.book.register(&sw.id);
    let (req, init) = request(&sw, &sw.keys, &cf.contr, None, 1);
    let est = cf.audit(&req, &HashSet::new()).unwrap();
    assert_eq!(est.session.session_key, init.session_key);
    assert_eq!(est.txs.len(), 2);
    let pending: HashSet<_> = [(req.pk_switch.clone(), req.com.clone())].into();
    assert_eq!(cf.audit(&req, &pending), Err(ConnectionReject::ReplayedRequest));
    cf.f.push(est.txs);
    assert_eq!(cf.audit(&req, &HashSet::new()), Err(ConnectionReject::ReplayedRequest));
    assert_eq!(cf.book.score(&sw.id), Some(80));
}

#[test]
fn key_update_paths() {
    let mut cf = ConnFixture::new();
    let sw = switch_side("10.0.1.1");
    let (req, _) = request(&sw, &sw.keys, &cf.contr, None, 1);
    let est = cf.audit(&req, &HashSet::new()).unwrap();
    let prior = est.txs[0].tx_id();
    cf.f.push(est.txs);

    let updated = SwitchSide { id: sw.id.clone(), keys: ds_keygen(g(), b"rotated"), nonce: sw.nonce };
    // Honest: fresh commitment to the original nonce, signed with the old key.
    let (honest, init) = request(&updated, &sw.keys, &cf.contr, Some(prior), 2);
    let est2 = cf.audit(&honest, &HashSet::new()).unwrap();
    assert_eq!(est2.session.session_key, init.session_key);

    // A 2-parameter request cannot rebind the id to new keys.
    let (rebind, _) = request(&updated, &sw.keys, &cf.contr, None, 3);
    assert_eq!(cf.audit(&rebind, &HashSet::new()), Err(ConnectionReject::IdentityBound(sw.id.clone())));

    // Attacker with new keys and the wrong nonce.
    let attacker = SwitchSide { id: sw.id.clone(), keys: ds_keygen(g(), b"attacker"), nonce: *b"ffffffffffffffff" };
    let (wrong_nonce, _) = request(&attacker, &attacker.keys, &cf.contr, Some(prior), 4);
    assert_eq!(cf.audit(&wrong_nonce, &HashSet::new()), Err(ConnectionReject::ChallengeFailed));

    // Attacker replaying the stored Com bytes as Com_new.
    let (mut verbatim, _) = request(&attacker, &attacker.keys, &cf.contr, Some(prior), 5);
    verbatim.com = req.com.clone();
    assert_eq!(cf.audit(&verbatim, &HashSet::new()), Err(ConnectionReject::ChallengeFailed));
    assert!(!switch_challenge(g(), &verbatim, &cf.contr, &cf.f.index));
}

#[test]
fn unsolved_puzzle_rejected() {
    let mut cf = ConnFixture::new();
    let sw = switch_side("10.0.1.1");
    let (mut req, _) = request(&sw, &sw.keys, &cf.contr, None, 1);
    req.puzzle.nonce += 1;
    if crate::crypto::verify_puzzle(&req.puzzle) {
        req.puzzle.nonce += 1;
    }
    let (mut other, _) = request(&sw, &sw.keys, &cf.contr, None, 2);
    other.puzzle = solve_puzzle(b"10.0.9.9", DIFFICULTY).unwrap();
    let (mut easy, _) = request(&sw, &sw.keys, &cf.contr, None, 3);
    easy.puzzle = solve_puzzle(sw.id.as_bytes(), 0).unwrap();
    for r in [req, other, easy] {
        if crate::crypto::verify_puzzle(&r.puzzle) && r.puzzle.subject_id == r.id_switch.as_bytes() && r.puzzle.difficulty >= DIFFICULTY {
            continue;
        }
        assert_eq!(cf.audit(&r, &HashSet::new()), Err(ConnectionReject::BadPuzzle));
    }
}

#[test]
fn forged_commitment_rejected() {
    let mut cf = ConnFixture::new();
    let sw = switch_side("10.0.1.1");
    let impostor = ds_keygen(g(), b"impostor");
    let (req, _) = request(&sw, &impostor, &cf.contr, None, 1);
    assert_eq!(cf.audit(&req, &HashSet::new()), Err(ConnectionReject::BadCommitment));
}

#[test]
fn labeled_connection_replays() {
    let mut cf = ConnFixture::new();
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let mut sent: Vec<ConnectionRequest> = Vec::new();
    let (mut fresh_ok, mut replay_rejected, mut replays) = (0, 0, 0);
    for i in 0..60u64 {
        let replay = !sent.is_empty() && rng.gen_bool(0.05);
        let req = if replay {
            replays += 1;
            sent[rng.gen_range(0..sent.len())].clone()
        } else {
            let sw = switch_side(&format!("10.0.2.{i}"));
            request(&sw, &sw.keys, &cf.contr, None, i).0
        };
        match cf.audit(&req, &HashSet::new()) {
            Ok(est) => {
                assert!(!replay);
                fresh_ok += 1;
                cf.f.push(est.txs);
                sent.push(req);
            }
            Err(ConnectionReject::ReplayedRequest) => {
                assert!(replay);
                replay_rejected += 1;
            }
            Err(e) => panic!("unexpected {e}"),
        }
    }
    assert_eq!(replay_rejected, replays);
    assert_eq!(fresh_ok, 60 - replays);
}

#[test]
fn flow_trail_and_not_found() {
    let (mut f, app, mut book) = registered();
    let fl = flow(&app, "f1", b"rule");
    f.push(vec![auth_flow(g(), &fl, &f.index, &BTreeSet::new(), &mut book).unwrap()]);
    f.push(vec![after("f1", "10.0.1.1")]);
    f.push(vec![TxPayload::Event {
        id_event: "ev1".into(),
        pk_switch: g().generator(),
        id_contr: "contr1".into(),
        id_switch: "10.0.1.1".into(),
        event_payload: EventPayload::new("flow-installed", "f1", b"").to_bytes(),
    }]);
    f.push(vec![heartbeat("contr1", 1)]);
    let trail = audit_network(&AuditQuery::Flow("f1".into()), &f.index).unwrap();
    let kinds: Vec<_> = trail.entries.iter().map(|e| e.kind.name()).collect();
    assert_eq!(kinds, vec!["T_app", "T_flow-afore", "T_flow-after", "T_event"]);
    assert!(trail.entries.windows(2).all(|w| w[0].height <= w[1].height));
    assert_eq!(trail.to_string().lines().count(), 4);
    assert_eq!(audit_network(&AuditQuery::Flow("f9".into()), &f.index), Err(AuditError::NotFound("f9".into())));

    let ev = audit_network(&AuditQuery::Event("ev1".into()), &f.index).unwrap();
    let kinds: Vec<_> = ev.entries.iter().map(|e| e.kind.name()).collect();
    assert_eq!(kinds, vec!["T_contr", "T_switch", "T_event"]);
}
