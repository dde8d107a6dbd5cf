//! Hybrid public-key encryption: Diffie-Hellman key encapsulation in the
//! group followed by ChaCha20-Poly1305 over the payload. The encapsulated
//! element is bound as associated data, so tampering with either half of
//! the ciphertext is rejected.

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use rand::RngCore;

use super::encode::{canonical_encode, Decode, DecodeError, Decoder, Encode, Encoder};
use super::group::{GroupElement, GroupParams, Scalar};
use super::hash::{hash_parts, Domain};
use super::CryptoError;

/// Ledger payload bound.
pub const MAX_PLAINTEXT_LEN: usize = 64 * 1024;

const NONCE_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HybridCiphertext {
    pub key_encapsulation: GroupElement,
    /// AEAD nonce followed by ciphertext and tag.
    pub payload: Vec<u8>,
}

impl Encode for HybridCiphertext {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.value(&self.key_encapsulation).bytes(&self.payload);
    }
}

impl Decode for HybridCiphertext {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self { key_encapsulation: GroupElement::decode_from(dec)?, payload: dec.bytes()?.to_vec() })
    }
}

fn derive_key(encap: &GroupElement, shared: &GroupElement) -> [u8; 32] {
    hash_parts(Domain::AeKey, &[&canonical_encode(encap), &canonical_encode(shared)])
}

pub(crate) fn seal(key: &[u8; 32], aad: &[u8], plaintext: &[u8], rng: &mut (impl RngCore + ?Sized)) -> Vec<u8> {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let cipher = ChaCha20Poly1305::new(Key::from_slice(key));
    let ct = cipher
        .encrypt(Nonce::from_slice(&nonce), Payload { msg: plaintext, aad })
        .expect("chacha20poly1305 encryption is infallible for bounded input");
    let mut out = Vec::with_capacity(NONCE_LEN + ct.len());
    out.extend_from_slice(&nonce);
    out.extend_from_slice(&ct);
    out
}

pub(crate) fn open(key: &[u8; 32], aad: &[u8], sealed: &[u8]) -> Option<Vec<u8>> {
    if sealed.len() < NONCE_LEN {
        return None;
    }
    let (nonce, ct) = sealed.split_at(NONCE_LEN);
    let cipher = ChaCha20Poly1305::new(Key::from_slice(key));
    cipher.decrypt(Nonce::from_slice(nonce), Payload { msg: ct, aad }).ok()
}

pub fn ae_encrypt<R: RngCore + ?Sized>(
    params: &GroupParams,
    pk: &GroupElement,
    plaintext: &[u8],
    rng: &mut R,
) -> Result<HybridCiphertext, CryptoError> {
    if plaintext.len() > MAX_PLAINTEXT_LEN {
        return Err(CryptoError::PayloadTooLarge { len: plaintext.len(), max: MAX_PLAINTEXT_LEN });
    }
    if !params.is_valid_public(pk) {
        return Err(CryptoError::NonMember);
    }
    let r = params.random_nonzero_scalar(rng);
    let encap = params.pow_g(&r);
    let shared = params.pow(pk, &r);
    let key = derive_key(&encap, &shared);
    let payload = seal(&key, &canonical_encode(&encap), plaintext, rng);
    Ok(HybridCiphertext { key_encapsulation: encap, payload })
}

pub fn ae_decrypt(
    params: &GroupParams,
    sk: &Scalar,
    ct: &HybridCiphertext,
) -> Result<Vec<u8>, CryptoError> {
    if !params.is_valid_public(&ct.key_encapsulation) {
        return Err(CryptoError::DecryptReject);
    }
    let shared = params.pow(&ct.key_encapsulation, sk);
    let key = derive_key(&ct.key_encapsulation, &shared);
    open(&key, &canonical_encode(&ct.key_encapsulation), &ct.payload).ok_or(CryptoError::DecryptReject)
}
