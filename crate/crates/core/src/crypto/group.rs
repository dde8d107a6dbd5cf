//! Prime-order subgroups of Z_p^*.
//!
//! Two parameter tiers ship with the crate:
//! - [`GroupParams::test`]: p = 23, q = 11, g = 2. Small enough that every
//!   value can be checked by hand or by exhaustive enumeration.
//! - [`GroupParams::sim`]: a 2048-bit p with a 256-bit prime-order subgroup,
//!   generated from a fixed seed string (see `sim_group_regenerates` in the
//!   tests for the procedure).

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use once_cell::sync::Lazy;
use rand::RngCore;

use super::encode::{Decode, DecodeError, Decoder, Encode, Encoder};
use super::hash::Digest;
use super::CryptoError;

const SIM_P: &str = "c910f8974d9aec2cca6404641b10ade469017496fb8e60461bb2830d911c34053b710062dcf0a30b4f30979173c5e6c662cc6f4faa79c4ecad70591516bd24294582ac7a831d812edd0ac0ce8f4b3b419790cefe737ca7d47ea0ef2ded514a85cb45493561349128e89368146589ccad58ec54eec117d54a142ed980374e8df9830d977d67bbc25302681d82e66c4a804fad5ede9edc62a7caee7c740f9e970b836dc031f4e8d2ebad94a2e550459e269522a98ab2073ccac442e04edb3d61c2dd078aa970344c2f225b3f8dda2c39f9d6e9168d951dd9f5a2cc66a3daf4fa2c5deb9bc85f4f9aeb2a73561f2ab1004a1dc9cc816adb6fc1ab3da4b2e6d6013d";
const SIM_Q: &str = "dcbca2235fc186c4d6c145746173fa4e56f6f42b2abda39a90312a3b4771eed5";
const SIM_G: &str = "8725b5f29d6596856eb85f27833da77145b3db4699c9e23c23a17b0d9286fc191ba64f7562b1c789f46506a8d15c2aff03032fc23fa9da45cca53712e48e89082f1d63957355c222cdd89e859ef1d9083ce5470605787666141c3ee0ac7c47b91855d197e071152806906001713c448115e7176ace9471a346e3cfa0bf4d26ea88f0023d2709f5b51c36b38a8d9dc4091f7e5addce007bd60a7cab0af287fd21be4d1f05828e122be88ab96760d274ddb59d748d8ada243be2f947cc041f0dd2f2b07e444212489af5dc197bc53ca021c6df657e41043733200c08c92b3128bdc529567e3f4dd7856fa12ee1553020b1fd404245911709685ed553f504fb633e";

static TEST_GROUP: Lazy<GroupParams> = Lazy::new(|| {
    GroupParams::new("test", 23u32.into(), 11u32.into(), 2u32.into()).expect("test group")
});

static SIM_GROUP: Lazy<GroupParams> = Lazy::new(|| {
    let parse = |s: &str| BigUint::parse_bytes(s.as_bytes(), 16).expect("hex constant");
    GroupParams::new("sim", parse(SIM_P), parse(SIM_Q), parse(SIM_G)).expect("sim group")
});

/// An element of Z_p^*. Membership in the order-q subgroup is checked where
/// the element enters a computation, not at construction.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(BigUint);

/// An exponent, always kept reduced mod q by the producing operation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scalar(BigUint);

impl GroupElement {
    pub fn from_biguint(v: BigUint) -> Self {
        Self(v)
    }

    pub fn from_u64(v: u64) -> Self {
        Self(v.into())
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        minimal_be(&self.0)
    }
}

impl Scalar {
    pub fn from_u64(v: u64) -> Self {
        Self(v.into())
    }

    pub fn from_biguint(v: BigUint) -> Self {
        Self(v)
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        minimal_be(&self.0)
    }
}

impl std::fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let hex = self.0.to_str_radix(16);
        if hex.len() > 16 {
            write!(f, "GroupElement({}..)", &hex[..16])
        } else {
            write!(f, "GroupElement({hex})")
        }
    }
}

impl std::fmt::Debug for Scalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let hex = self.0.to_str_radix(16);
        if hex.len() > 16 {
            write!(f, "Scalar({}..)", &hex[..16])
        } else {
            write!(f, "Scalar({hex})")
        }
    }
}

fn minimal_be(v: &BigUint) -> Vec<u8> {
    if v.is_zero() {
        Vec::new()
    } else {
        v.to_bytes_be()
    }
}

fn decode_minimal(dec: &mut Decoder<'_>) -> Result<BigUint, DecodeError> {
    let b = dec.bytes()?;
    if b.first() == Some(&0) {
        return Err(DecodeError::NonCanonical("leading zero in integer"));
    }
    Ok(BigUint::from_bytes_be(b))
}

impl Encode for GroupElement {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.bytes(&self.to_bytes());
    }
}

impl Decode for GroupElement {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        decode_minimal(dec).map(Self)
    }
}

impl Encode for Scalar {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.bytes(&self.to_bytes());
    }
}

impl Decode for Scalar {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        decode_minimal(dec).map(Self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupParams {
    name: &'static str,
    modulus_p: BigUint,
    order_q: BigUint,
    generator_g: BigUint,
}

impl GroupParams {
    /// Validates the structural invariants: q | p − 1, g ∉ {0, 1},
    /// g < p and g^q = 1. Primality of p and q is the caller's contract.
    pub fn new(
        name: &'static str,
        modulus_p: BigUint,
        order_q: BigUint,
        generator_g: BigUint,
    ) -> Result<Self, CryptoError> {
        let one = BigUint::one();
        if modulus_p <= BigUint::from(3u32) || order_q <= one {
            return Err(CryptoError::InvalidParams("modulus or order too small"));
        }
        if !((&modulus_p - 1u32) % &order_q).is_zero() {
            return Err(CryptoError::InvalidParams("order does not divide p - 1"));
        }
        if generator_g <= one || generator_g >= modulus_p {
            return Err(CryptoError::InvalidParams("generator out of range"));
        }
        if !generator_g.modpow(&order_q, &modulus_p).is_one() {
            return Err(CryptoError::InvalidParams("generator does not have order q"));
        }
        Ok(Self { name, modulus_p, order_q, generator_g })
    }

    pub fn test() -> &'static GroupParams {
        &TEST_GROUP
    }

    pub fn sim() -> &'static GroupParams {
        &SIM_GROUP
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus_p
    }

    pub fn order(&self) -> &BigUint {
        &self.order_q
    }

    pub fn generator(&self) -> GroupElement {
        GroupElement(self.generator_g.clone())
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(BigUint::one())
    }

    /// Rough symmetric-security estimate: half the bit length of q.
    pub fn security_bits(&self) -> u64 {
        self.order_q.bits() / 2
    }

    /// True iff `e` lies in the order-q subgroup (identity included).
    pub fn contains(&self, e: &GroupElement) -> bool {
        !e.0.is_zero()
            && e.0 < self.modulus_p
            && e.0.modpow(&self.order_q, &self.modulus_p).is_one()
    }

    /// Membership check for public values (long-term keys, ephemerals):
    /// subgroup member and not the identity.
    pub fn is_valid_public(&self, e: &GroupElement) -> bool {
        !e.0.is_one() && self.contains(e)
    }

    /// base^exp with no membership check; `base` must already be validated.
    pub fn pow(&self, base: &GroupElement, exp: &Scalar) -> GroupElement {
        GroupElement(base.0.modpow(&exp.0, &self.modulus_p))
    }

    pub fn pow_g(&self, exp: &Scalar) -> GroupElement {
        GroupElement(self.generator_g.modpow(&exp.0, &self.modulus_p))
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement((&a.0 * &b.0) % &self.modulus_p)
    }

    /// Inverse of a subgroup member: a^(q−1).
    pub fn invert(&self, a: &GroupElement) -> GroupElement {
        GroupElement(a.0.modpow(&(&self.order_q - 1u32), &self.modulus_p))
    }

    pub fn scalar(&self, v: BigUint) -> Scalar {
        Scalar(v % &self.order_q)
    }

    pub fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % &self.order_q)
    }

    pub fn scalar_sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &self.order_q - (&b.0 % &self.order_q)) % &self.order_q)
    }

    pub fn scalar_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 * &b.0) % &self.order_q)
    }

    pub fn scalar_neg(&self, a: &Scalar) -> Scalar {
        self.scalar_sub(&Scalar(BigUint::zero()), a)
    }

    /// Multiplicative inverse mod q (q prime). `None` for zero.
    pub fn scalar_inv(&self, a: &Scalar) -> Option<Scalar> {
        let a = &a.0 % &self.order_q;
        if a.is_zero() {
            return None;
        }
        Some(Scalar(a.modpow(&(&self.order_q - 2u32), &self.order_q)))
    }

    pub fn scalar_from_digest(&self, d: &Digest) -> Scalar {
        Scalar(BigUint::from_bytes_be(d) % &self.order_q)
    }

    /// Maps a digest into [1, q−1].
    pub fn nonzero_scalar_from_digest(&self, d: &Digest) -> Scalar {
        let v = BigUint::from_bytes_be(d) % (&self.order_q - 1u32);
        Scalar(v + 1u32)
    }

    pub fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        let mut r = RngAdapter(rng);
        Scalar(r.gen_biguint_below(&self.order_q))
    }

    pub fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        let mut r = RngAdapter(rng);
        let v = r.gen_biguint_below(&(&self.order_q - 1u32));
        Scalar(v + 1u32)
    }
}

// `RandBigInt` is implemented for sized `Rng`s only.
struct RngAdapter<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

/// base^exp in the group, rejecting bases outside the order-q subgroup.
pub fn group_exp(
    params: &GroupParams,
    base: &GroupElement,
    exponent: &Scalar,
) -> Result<GroupElement, CryptoError> {
    if !params.contains(base) {
        return Err(CryptoError::NonMember);
    }
    Ok(params.pow(base, &params.scalar(exponent.0.clone())))
}
