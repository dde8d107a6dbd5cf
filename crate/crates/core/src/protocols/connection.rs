use std::collections::HashSet;

use rand::RngCore;
use thiserror::Error;

use crate::crypto::{
    ae_decrypt, ae_encrypt, canonical_decode, canonical_encode, ds_sign, ds_verify, verify_puzzle,
    CryptoError, GroupElement, GroupParams, HybridCiphertext, KeyPair, PuzzleSolution, Signature,
};
use crate::homqv::{homqv_respond, SessionContext};
use crate::ledger::{TxId, TxPayload};
use crate::txgraph::AuditIndex;

use super::ReputationBook;

pub const NONCE_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConnectionRequest {
    pub id_switch: String,
    pub pk_switch: GroupElement,
    /// Encrypts `nonce ‖ signature over nonce` to the controller.
    pub com: HybridCiphertext,
    /// Present on the key-update path.
    pub prior_request_id: Option<TxId>,
    pub ephemeral_y: GroupElement,
    pub slice: String,
    pub id_contr: String,
    pub puzzle: PuzzleSolution,
}

impl ConnectionRequest {
    pub fn param_count(&self) -> usize {
        if self.prior_request_id.is_some() {
            3
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConnectionReject {
    #[error("puzzle missing, too easy or wrong")]
    BadPuzzle,
    #[error("connection request replayed")]
    ReplayedRequest,
    #[error("key-update challenge failed")]
    ChallengeFailed,
    #[error("commitment does not open to a signed nonce")]
    BadCommitment,
    #[error("switch id `{0}` is bound to a different key")]
    IdentityBound(String),
    #[error("key agreement failed: {0}")]
    KeyAgreement(CryptoError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionEstablished {
    pub session: SessionContext,
    /// `TSwitch` followed by `TContrSwitch`.
    pub txs: Vec<TxPayload>,
}

/// Builds the commitment `AE.Enc(pk_contr, nonce ‖ Sign(sk_switch, nonce))`.
pub fn build_commitment<R: RngCore + ?Sized>(
    group: &GroupParams,
    pk_contr: &GroupElement,
    signer: &KeyPair,
    nonce: &[u8; NONCE_LEN],
    rng: &mut R,
) -> Result<HybridCiphertext, CryptoError> {
    let sig = ds_sign(group, signer, nonce);
    ae_encrypt(group, pk_contr, &canonical_encode(&(nonce.to_vec(), canonical_encode(&sig))), rng)
}

/// Decrypts a commitment into its nonce and signature.
pub fn open_commitment(group: &GroupParams, controller: &KeyPair, com: &HybridCiphertext) -> Option<(Vec<u8>, Signature)> {
    let plain = ae_decrypt(group, controller.secret(), com).ok()?;
    let (nonce, sig_bytes): (Vec<u8>, Vec<u8>) = canonical_decode(&plain).ok()?;
    let sig = canonical_decode(&sig_bytes).ok()?;
    (nonce.len() == NONCE_LEN).then_some((nonce, sig))
}

/// Key-update check: the new commitment must be fresh bytes, carry the same
/// nonce as the referenced registration, and both signatures must verify
/// under the previously registered switch key.
pub fn switch_challenge(group: &GroupParams, req: &ConnectionRequest, controller: &KeyPair, index: &AuditIndex) -> bool {
    let Some(prior) = req.prior_request_id.and_then(|id| index.switch_record(&id)) else {
        return false;
    };
    if prior.id_switch != req.id_switch || prior.com == req.com {
        return false;
    }
    let (Some((old_nonce, old_sig)), Some((new_nonce, new_sig))) =
        (open_commitment(group, controller, &prior.com), open_commitment(group, controller, &req.com))
    else {
        return false;
    };
    old_nonce == new_nonce
        && ds_verify(group, &prior.pk_switch, &old_nonce, &old_sig)
        && ds_verify(group, &prior.pk_switch, &new_nonce, &new_sig)
}

/// Controller-side state consulted while auditing connection requests.
pub struct ConnectionContext<'a> {
    pub group: &'a GroupParams,
    pub controller: &'a KeyPair,
    pub id_contr: &'a str,
    /// The controller's own `TContr`, possibly still pending.
    pub contr_tx: TxId,
    pub index: &'a AuditIndex,
    /// `(pk_switch, com)` pairs of `TSwitch` records admitted but not yet committed.
    pub pending_commitments: &'a HashSet<(GroupElement, HybridCiphertext)>,
    pub min_difficulty: u8,
}

pub fn audit_authen_request(
    ctx: &ConnectionContext<'_>,
    req: &ConnectionRequest,
    book: &mut ReputationBook,
) -> Result<SessionEstablished, ConnectionReject> {
    if req.puzzle.subject_id != req.id_switch.as_bytes()
        || req.puzzle.difficulty < ctx.min_difficulty
        || !verify_puzzle(&req.puzzle)
    {
        return Err(ConnectionReject::BadPuzzle);
    }
    let pair = (req.pk_switch.clone(), req.com.clone());
    if ctx.index.switch_commitment_seen(&req.pk_switch, &req.com) || ctx.pending_commitments.contains(&pair) {
        let _ = book.reduce_reputation(&req.id_switch);
        return Err(ConnectionReject::ReplayedRequest);
    }
    match req.prior_request_id {
        None => {
            let history = ctx.index.switch_history(&req.id_switch);
            if history.last().is_some_and(|r| r.pk_switch != req.pk_switch) {
                return Err(ConnectionReject::IdentityBound(req.id_switch.clone()));
            }
            let (nonce, sig) =
                open_commitment(ctx.group, ctx.controller, &req.com).ok_or(ConnectionReject::BadCommitment)?;
            if !ds_verify(ctx.group, &req.pk_switch, &nonce, &sig) {
                return Err(ConnectionReject::BadCommitment);
            }
        }
        Some(_) => {
            if !switch_challenge(ctx.group, req, ctx.controller, ctx.index) {
                return Err(ConnectionReject::ChallengeFailed);
            }
        }
    }
    let session = homqv_respond(
        ctx.group,
        ctx.controller,
        &req.pk_switch,
        &req.ephemeral_y,
        req.id_switch.as_bytes(),
        ctx.id_contr.as_bytes(),
    )
    .map_err(ConnectionReject::KeyAgreement)?;
    let t_switch = TxPayload::Switch {
        id_switch: req.id_switch.clone(),
        pk_switch: req.pk_switch.clone(),
        slice: req.slice.clone(),
        id_contr: ctx.id_contr.to_string(),
        com: req.com.clone(),
    };
    let link = TxPayload::ContrSwitch { id_t_contr: ctx.contr_tx, id_t_switch: t_switch.tx_id() };
    Ok(SessionEstablished { session, txs: vec![t_switch, link] })
}
