//! One-pass HMQV (HOMQV) key agreement.
//!
//! The sender (a switch) contributes one ephemeral value `Y = g^y`; the
//! receiver (a controller) answers nothing. Both sides derive
//!
//! ```text
//! e   = H'(Y, receiver_id)
//! σ   = A^(y + e·b)        (sender,   A = receiver public key)
//! σ'  = (Y · B^e)^a        (receiver, B = sender public key)
//! key = H("KDF" ‖ σ ‖ sender_id ‖ receiver_id ‖ Y)
//! ```
//!
//! The identities enter the key derivation in (sender, receiver) order on
//! both sides. Replay protection and key rotation are not handled here;
//! see [`crate::protocols`].

use crate::crypto::{
    canonical_encode, hash_parts, CryptoError, Decode, DecodeError, Decoder, Domain, Encode,
    Encoder, GroupElement, GroupParams, KeyPair, Scalar,
};

/// The session id triple, which is also the one-pass transcript.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SessionId {
    pub sender_id: Vec<u8>,
    pub receiver_id: Vec<u8>,
    pub ephemeral: GroupElement,
}

impl Encode for SessionId {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.bytes(&self.sender_id).bytes(&self.receiver_id).value(&self.ephemeral);
    }
}

impl Decode for SessionId {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            sender_id: dec.bytes()?.to_vec(),
            receiver_id: dec.bytes()?.to_vec(),
            ephemeral: GroupElement::decode_from(dec)?,
        })
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct SessionContext {
    pub ephemeral_y: GroupElement,
    pub session_key: [u8; 32],
    pub session_id: SessionId,
    pub challenge_e: Scalar,
}

impl std::fmt::Debug for SessionContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionContext")
            .field("session_id", &self.session_id)
            .field("challenge_e", &self.challenge_e)
            .field("session_key", &"<redacted>")
            .finish()
    }
}

/// e = H'(Y, receiver_id) reduced mod q.
pub fn challenge_exponent(params: &GroupParams, ephemeral: &GroupElement, receiver_id: &[u8]) -> Scalar {
    let d = hash_parts(Domain::Exponent, &[&canonical_encode(ephemeral), &canonical_encode(receiver_id)]);
    params.scalar_from_digest(&d)
}

pub fn derive_session_key(sigma: &GroupElement, id: &SessionId) -> [u8; 32] {
    hash_parts(Domain::Kdf, &[&canonical_encode(sigma), &canonical_encode(id)])
}

/// Derives the sender's ephemeral exponent from a seed.
pub fn ephemeral_from_seed(params: &GroupParams, rng_seed: &[u8]) -> Scalar {
    let d = hash_parts(Domain::KeyGen, &[&canonical_encode(&(&b"homqv-ephemeral"[..], rng_seed))]);
    params.nonzero_scalar_from_digest(&d)
}

pub fn homqv_initiate(
    params: &GroupParams,
    sender_keys: &KeyPair,
    receiver_pk: &GroupElement,
    sender_id: &[u8],
    receiver_id: &[u8],
    rng_seed: &[u8],
) -> Result<(GroupElement, SessionContext), CryptoError> {
    let y = ephemeral_from_seed(params, rng_seed);
    homqv_initiate_with_ephemeral(params, sender_keys, receiver_pk, sender_id, receiver_id, &y)
}

/// Sender side with an explicit ephemeral exponent `y`.
pub fn homqv_initiate_with_ephemeral(
    params: &GroupParams,
    sender_keys: &KeyPair,
    receiver_pk: &GroupElement,
    sender_id: &[u8],
    receiver_id: &[u8],
    y: &Scalar,
) -> Result<(GroupElement, SessionContext), CryptoError> {
    if !params.is_valid_public(receiver_pk) {
        return Err(CryptoError::NonMember);
    }
    let ephemeral = params.pow_g(y);
    if !params.is_valid_public(&ephemeral) {
        return Err(CryptoError::NonMember);
    }
    let e = challenge_exponent(params, &ephemeral, receiver_id);
    let exponent = params.scalar_add(y, &params.scalar_mul(&e, sender_keys.secret()));
    let sigma = params.pow(receiver_pk, &exponent);
    let session_id = SessionId {
        sender_id: sender_id.to_vec(),
        receiver_id: receiver_id.to_vec(),
        ephemeral: ephemeral.clone(),
    };
    let session_key = derive_session_key(&sigma, &session_id);
    Ok((
        ephemeral.clone(),
        SessionContext { ephemeral_y: ephemeral, session_key, session_id, challenge_e: e },
    ))
}

pub fn homqv_respond(
    params: &GroupParams,
    receiver_keys: &KeyPair,
    sender_pk: &GroupElement,
    ephemeral_y: &GroupElement,
    sender_id: &[u8],
    receiver_id: &[u8],
) -> Result<SessionContext, CryptoError> {
    if !params.is_valid_public(sender_pk) || !params.is_valid_public(ephemeral_y) {
        return Err(CryptoError::NonMember);
    }
    let e = challenge_exponent(params, ephemeral_y, receiver_id);
    let base = params.mul(ephemeral_y, &params.pow(sender_pk, &e));
    let sigma = params.pow(&base, receiver_keys.secret());
    let session_id = SessionId {
        sender_id: sender_id.to_vec(),
        receiver_id: receiver_id.to_vec(),
        ephemeral: ephemeral_y.clone(),
    };
    let session_key = derive_session_key(&sigma, &session_id);
    Ok(SessionContext { ephemeral_y: ephemeral_y.clone(), session_key, session_id, challenge_e: e })
}
