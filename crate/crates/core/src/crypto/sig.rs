//! Schnorr signatures over [`GroupParams`].
//!
//! Signing derives its nonce from the secret and the message, so a fixed
//! key signs a fixed message to the same bytes. [`ds_sign_randomized`]
//! mixes caller randomness into that derivation.

use rand::RngCore;

use super::encode::{canonical_encode, Decode, DecodeError, Decoder, Encode, Encoder};
use super::group::{GroupElement, GroupParams, Scalar};
use super::hash::{hash_parts, Domain};

#[derive(Clone, PartialEq, Eq)]
pub struct KeyPair {
    secret: Scalar,
    public: GroupElement,
}

impl std::fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyPair")
            .field("secret", &"<redacted>")
            .field("public", &self.public)
            .finish()
    }
}

impl KeyPair {
    /// Builds a key pair from an explicit secret in [1, q−1].
    pub fn from_secret(params: &GroupParams, secret: Scalar) -> Self {
        let secret = params.scalar(secret.as_biguint().clone());
        assert!(!secret.is_zero(), "secret exponent must be nonzero");
        let public = params.pow_g(&secret);
        Self { secret, public }
    }

    pub fn secret(&self) -> &Scalar {
        &self.secret
    }

    pub fn public(&self) -> &GroupElement {
        &self.public
    }
}

/// Schnorr signature in (challenge, response) form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    /// Challenge scalar e = H(R, pk, m), derived from the commitment R = g^k.
    pub commitment: Scalar,
    pub response: Scalar,
}

impl Encode for Signature {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.value(&self.commitment).value(&self.response);
    }
}

impl Decode for Signature {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self { commitment: Scalar::decode_from(dec)?, response: Scalar::decode_from(dec)? })
    }
}

/// Deterministic key generation from a seed.
pub fn ds_keygen(params: &GroupParams, rng_seed: &[u8]) -> KeyPair {
    let d = hash_parts(Domain::KeyGen, &[&canonical_encode(rng_seed)]);
    KeyPair::from_secret(params, params.nonzero_scalar_from_digest(&d))
}

fn challenge(params: &GroupParams, r: &GroupElement, pk: &GroupElement, msg: &[u8]) -> Scalar {
    let d = hash_parts(
        Domain::SigChallenge,
        &[&canonical_encode(r), &canonical_encode(pk), &canonical_encode(msg)],
    );
    params.scalar_from_digest(&d)
}

fn sign_with_nonce(params: &GroupParams, keys: &KeyPair, k: Scalar, msg: &[u8]) -> Signature {
    let r = params.pow_g(&k);
    let e = challenge(params, &r, &keys.public, msg);
    let s = params.scalar_add(&k, &params.scalar_mul(&e, &keys.secret));
    Signature { commitment: e, response: s }
}

pub fn ds_sign(params: &GroupParams, keys: &KeyPair, message: &[u8]) -> Signature {
    let d = hash_parts(
        Domain::SigNonce,
        &[&canonical_encode(&keys.secret), &canonical_encode(message)],
    );
    sign_with_nonce(params, keys, params.nonzero_scalar_from_digest(&d), message)
}

pub fn ds_sign_randomized<R: RngCore + ?Sized>(
    params: &GroupParams,
    keys: &KeyPair,
    message: &[u8],
    rng: &mut R,
) -> Signature {
    let mut extra = [0u8; 32];
    rng.fill_bytes(&mut extra);
    let d = hash_parts(
        Domain::SigNonce,
        &[&canonical_encode(&keys.secret), &canonical_encode(message), &extra],
    );
    sign_with_nonce(params, keys, params.nonzero_scalar_from_digest(&d), message)
}

/// Never errors: malformed keys or signatures simply fail to verify.
pub fn ds_verify(params: &GroupParams, pk: &GroupElement, message: &[u8], sig: &Signature) -> bool {
    let q = params.order();
    if sig.commitment.as_biguint() >= q || sig.response.as_biguint() >= q {
        return false;
    }
    if !params.is_valid_public(pk) {
        return false;
    }
    // R' = g^s · pk^(−e)
    let r = params.mul(&params.pow_g(&sig.response), &params.pow(pk, &params.scalar_neg(&sig.commitment)));
    challenge(params, &r, pk, message) == sig.commitment
}
