use num_bigint::BigUint;

use chainsdn_core::crypto::{canonical_encode, hash_parts, Domain, GroupElement, GroupParams, Signature};

/// Schnorr verification with plain modular arithmetic: R = g^s · pk^(q−e),
/// accept iff H(R, pk, m) mod q = e.
pub fn verify(group: &GroupParams, pk: &GroupElement, msg: &[u8], sig: &Signature) -> bool {
    let (p, q) = (group.modulus(), group.order());
    let (e, s, y) = (sig.commitment.as_biguint(), sig.response.as_biguint(), pk.as_biguint());
    if e >= q || s >= q || *y <= BigUint::from(1u32) || y >= p || y.modpow(q, p) != BigUint::from(1u32) {
        return false;
    }
    let g = group.generator();
    let r = g.as_biguint().modpow(s, p) * y.modpow(&(q - e), p) % p;
    let r = GroupElement::from_biguint(r);
    let d = hash_parts(Domain::SigChallenge, &[&canonical_encode(&r), &canonical_encode(pk), &canonical_encode(msg)]);
    BigUint::from_bytes_be(&d) % q == *e
}
