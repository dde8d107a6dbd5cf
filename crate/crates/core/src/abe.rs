//! Key-policy attribute-based encryption over a prime-order group.
//!
//! Setup draws one master scalar `t_i` per attribute plus a root secret `y`,
//! publishing `T_i = g^t_i` and `Y = g^y`. A ciphertext under attribute set
//! `S` carries `C_i = T_i^k` for each `i ∈ S` and seals the payload under a
//! key hashed from `Y^k`. Key generation splits `y` down the access tree
//! (additively at AND gates, copied at OR gates) with fresh randomness per
//! key and blinds each leaf share as `d = share · t_i^-1`, so that
//! `C_i^d = g^(k·share)`. Recombining the gates in the exponent yields
//! `Y^k` exactly when the label satisfies the policy.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand::RngCore;
use thiserror::Error;

use crate::crypto::{
    ae, canonical_encode, hash, hash_parts, Decode, DecodeError, Decoder, Domain, Encode, Encoder,
    GroupElement, GroupParams, Scalar,
};

pub const MAX_UNIVERSE: usize = 64;
pub const MAX_ATTRIBUTE_LEN: usize = 128;
pub const MAX_TREE_DEPTH: usize = 8;

/// The five application functionality categories used as attributes.
pub const APP_CATEGORIES: [&str; 5] = [
    "traffic engineering",
    "mobility and wireless",
    "measurement and monitoring",
    "security and dependability",
    "data center networking",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbeError {
    #[error("attribute universe is empty")]
    EmptyUniverse,
    #[error("attribute universe of {0} exceeds the limit of {MAX_UNIVERSE}")]
    UniverseTooLarge(usize),
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("invalid attribute set: {0}")]
    InvalidAttributeSet(String),
    #[error("malformed access tree: {0}")]
    MalformedTree(&'static str),
    #[error("attributes do not satisfy the key policy")]
    PolicyUnsatisfied,
    #[error("payload authentication failed")]
    PayloadTamper,
    #[error("malformed ciphertext")]
    MalformedCiphertext,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttributeSet(BTreeSet<String>);

impl AttributeSet {
    /// Rejects empty sets, duplicates and attributes longer than 128 bytes.
    pub fn new<I, S>(attrs: I) -> Result<Self, AbeError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for a in attrs {
            let a = a.into();
            if a.len() > MAX_ATTRIBUTE_LEN {
                return Err(AbeError::InvalidAttributeSet(format!("attribute of {} bytes", a.len())));
            }
            if !set.insert(a.clone()) {
                return Err(AbeError::InvalidAttributeSet(format!("duplicate attribute {a:?}")));
            }
        }
        if set.is_empty() {
            return Err(AbeError::InvalidAttributeSet("empty".into()));
        }
        Ok(Self(set))
    }

    pub fn contains(&self, a: &str) -> bool {
        self.0.contains(a)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Encode for AttributeSet {
    fn encode_to(&self, enc: &mut Encoder) {
        let v: Vec<&String> = self.0.iter().collect();
        enc.seq(&v);
    }
}

impl Decode for AttributeSet {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let v: Vec<String> = dec.seq()?;
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DecodeError::NonCanonical("attribute set not strictly sorted"));
        }
        AttributeSet::new(v).map_err(|_| DecodeError::NonCanonical("invalid attribute set"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    /// n-of-n
    And,
    /// 1-of-n
    Or,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AccessTree {
    Leaf(String),
    Gate { kind: GateKind, children: Vec<AccessTree> },
}

impl AccessTree {
    pub fn leaf(a: impl Into<String>) -> Self {
        AccessTree::Leaf(a.into())
    }

    pub fn and(children: Vec<AccessTree>) -> Self {
        AccessTree::Gate { kind: GateKind::And, children }
    }

    pub fn or(children: Vec<AccessTree>) -> Self {
        AccessTree::Gate { kind: GateKind::Or, children }
    }

    /// Leaves have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            AccessTree::Leaf(_) => 0,
            AccessTree::Gate { children, .. } => {
                1 + children.iter().map(AccessTree::depth).max().unwrap_or(0)
            }
        }
    }

    /// Leaf attributes in depth-first order.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            AccessTree::Leaf(a) => out.push(a),
            AccessTree::Gate { children, .. } => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    fn check_shape(&self) -> Result<(), AbeError> {
        if self.depth() > MAX_TREE_DEPTH {
            return Err(AbeError::MalformedTree("deeper than 8 levels"));
        }
        self.check_gates()
    }

    fn check_gates(&self) -> Result<(), AbeError> {
        match self {
            AccessTree::Leaf(_) => Ok(()),
            AccessTree::Gate { children, .. } => {
                if children.len() < 2 {
                    return Err(AbeError::MalformedTree("gate with fewer than 2 children"));
                }
                children.iter().try_for_each(AccessTree::check_gates)
            }
        }
    }
}

impl std::fmt::Display for AccessTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AccessTree::Leaf(a) => write!(f, "{a:?}"),
            AccessTree::Gate { kind, children } => {
                let name = match kind {
                    GateKind::And => "AND",
                    GateKind::Or => "OR",
                };
                write!(f, "{name}(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl Encode for AccessTree {
    fn encode_to(&self, enc: &mut Encoder) {
        match self {
            AccessTree::Leaf(a) => {
                enc.u8(0).str(a);
            }
            AccessTree::Gate { kind, children } => {
                enc.u8(match kind {
                    GateKind::And => 1,
                    GateKind::Or => 2,
                });
                enc.seq(children);
            }
        }
    }
}

impl Decode for AccessTree {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        match dec.u8()? {
            0 => Ok(AccessTree::Leaf(dec.string()?)),
            1 => Ok(AccessTree::and(dec.seq()?)),
            2 => Ok(AccessTree::or(dec.seq()?)),
            tag => Err(DecodeError::UnknownTag { what: "access tree", tag }),
        }
    }
}

/// Boolean evaluation of a policy against an attribute set.
pub fn tree_satisfies(policy: &AccessTree, attrs: &AttributeSet) -> bool {
    match policy {
        AccessTree::Leaf(a) => attrs.contains(a),
        AccessTree::Gate { kind: GateKind::And, children } => {
            children.iter().all(|c| tree_satisfies(c, attrs))
        }
        AccessTree::Gate { kind: GateKind::Or, children } => {
            children.iter().any(|c| tree_satisfies(c, attrs))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbePublicParams {
    pub group: GroupParams,
    pub attribute_publics: BTreeMap<String, GroupElement>,
    pub root_public: GroupElement,
}

#[derive(Clone, PartialEq, Eq)]
pub struct AbeMasterKey {
    pub attribute_secrets: BTreeMap<String, Scalar>,
    pub root_secret: Scalar,
}

impl std::fmt::Debug for AbeMasterKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AbeMasterKey")
            .field("attributes", &self.attribute_secrets.len())
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbeParams {
    pub public: AbePublicParams,
    pub master: AbeMasterKey,
    pub security_parameter: u64,
}

impl AbeParams {
    pub fn universe(&self) -> impl Iterator<Item = &str> {
        self.public.attribute_publics.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbeCiphertext {
    pub label_attributes: AttributeSet,
    /// `T_i^k` for each label attribute, in the set's sorted order.
    pub per_attribute_components: Vec<GroupElement>,
    pub payload: Vec<u8>,
}

impl Encode for AbeCiphertext {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.value(&self.label_attributes).seq(&self.per_attribute_components).bytes(&self.payload);
    }
}

impl Decode for AbeCiphertext {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            label_attributes: AttributeSet::decode_from(dec)?,
            per_attribute_components: dec.seq()?,
            payload: dec.bytes()?.to_vec(),
        })
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct AbeKey {
    pub policy: AccessTree,
    /// Blinded share per leaf, in depth-first leaf order.
    pub per_leaf_shares: Vec<Scalar>,
}

impl std::fmt::Debug for AbeKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "AbeKey({})", self.policy)
    }
}

impl Encode for AbeKey {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.value(&self.policy).seq(&self.per_leaf_shares);
    }
}

impl Decode for AbeKey {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self { policy: AccessTree::decode_from(dec)?, per_leaf_shares: dec.seq()? })
    }
}

fn seeded_rng(label: &[u8], seed: &[u8]) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(hash_parts(Domain::KeyGen, &[&canonical_encode(&(label, seed))]))
}

pub fn abe_setup(group: &GroupParams, universe: &[&str], rng_seed: &[u8]) -> Result<AbeParams, AbeError> {
    if universe.is_empty() {
        return Err(AbeError::EmptyUniverse);
    }
    let distinct: BTreeSet<&str> = universe.iter().copied().collect();
    if distinct.len() > MAX_UNIVERSE {
        return Err(AbeError::UniverseTooLarge(distinct.len()));
    }
    if let Some(a) = distinct.iter().find(|a| a.len() > MAX_ATTRIBUTE_LEN) {
        return Err(AbeError::InvalidAttributeSet(format!("attribute {a:?} too long")));
    }
    let mut rng = seeded_rng(b"abe-setup", rng_seed);
    let root_secret = group.random_nonzero_scalar(&mut rng);
    let mut attribute_secrets = BTreeMap::new();
    let mut attribute_publics = BTreeMap::new();
    for a in distinct {
        let t = group.random_nonzero_scalar(&mut rng);
        attribute_publics.insert(a.to_string(), group.pow_g(&t));
        attribute_secrets.insert(a.to_string(), t);
    }
    Ok(AbeParams {
        public: AbePublicParams { group: group.clone(), root_public: group.pow_g(&root_secret), attribute_publics },
        master: AbeMasterKey { attribute_secrets, root_secret },
        security_parameter: group.security_bits(),
    })
}

fn payload_key(blinding: &GroupElement) -> [u8; 32] {
    hash(Domain::AbeKey, &canonical_encode(blinding))
}

pub fn abe_encrypt<R: RngCore + ?Sized>(
    message: &[u8],
    attrs: &AttributeSet,
    public: &AbePublicParams,
    rng: &mut R,
) -> Result<AbeCiphertext, AbeError> {
    let g = &public.group;
    let publics = attrs
        .iter()
        .map(|a| public.attribute_publics.get(a).ok_or_else(|| AbeError::UnknownAttribute(a.into())))
        .collect::<Result<Vec<_>, _>>()?;
    let k = g.random_nonzero_scalar(rng);
    let per_attribute_components = publics.into_iter().map(|t| g.pow(t, &k)).collect();
    let blinding = g.pow(&public.root_public, &k);
    let payload = ae::seal(&payload_key(&blinding), &canonical_encode(attrs), message, rng);
    Ok(AbeCiphertext { label_attributes: attrs.clone(), per_attribute_components, payload })
}

pub fn abe_keygen(policy: &AccessTree, params: &AbeParams, rng_seed: &[u8]) -> Result<AbeKey, AbeError> {
    policy.check_shape()?;
    for leaf in policy.leaves() {
        if !params.master.attribute_secrets.contains_key(leaf) {
            return Err(AbeError::UnknownAttribute(leaf.into()));
        }
    }
    let g = &params.public.group;
    let mut rng = seeded_rng(b"abe-keygen", rng_seed);
    let mut shares = Vec::new();
    split_secret(g, policy, params.master.root_secret.clone(), &mut rng, &mut shares);
    let per_leaf_shares = policy
        .leaves()
        .into_iter()
        .zip(shares)
        .map(|(attr, share)| {
            let t_inv = g.scalar_inv(&params.master.attribute_secrets[attr]).expect("nonzero master scalar");
            g.scalar_mul(&share, &t_inv)
        })
        .collect();
    Ok(AbeKey { policy: policy.clone(), per_leaf_shares })
}

/// Top-down sharing of `value`; pushes one unblinded share per leaf.
fn split_secret(g: &GroupParams, node: &AccessTree, value: Scalar, rng: &mut ChaCha20Rng, out: &mut Vec<Scalar>) {
    match node {
        AccessTree::Leaf(_) => out.push(value),
        AccessTree::Gate { kind: GateKind::Or, children } => {
            for c in children {
                split_secret(g, c, value.clone(), rng, out);
            }
        }
        AccessTree::Gate { kind: GateKind::And, children } => {
            let mut rest = value;
            let last = children.len() - 1;
            for (i, c) in children.iter().enumerate() {
                let part = if i == last {
                    rest.clone()
                } else {
                    let r = g.random_scalar(rng);
                    rest = g.scalar_sub(&rest, &r);
                    r
                };
                split_secret(g, c, part, rng, out);
            }
        }
    }
}

pub fn abe_decrypt(ct: &AbeCiphertext, key: &AbeKey, public: &AbePublicParams) -> Result<Vec<u8>, AbeError> {
    if ct.per_attribute_components.len() != ct.label_attributes.len()
        || key.per_leaf_shares.len() != key.policy.leaves().len()
    {
        return Err(AbeError::MalformedCiphertext);
    }
    let g = &public.group;
    let components: BTreeMap<&str, &GroupElement> =
        ct.label_attributes.iter().zip(ct.per_attribute_components.iter()).collect();
    let mut cursor = 0usize;
    let blinding = recombine(g, &key.policy, &key.per_leaf_shares, &mut cursor, &components)
        .ok_or(AbeError::PolicyUnsatisfied)?;
    ae::open(&payload_key(&blinding), &canonical_encode(&ct.label_attributes), &ct.payload)
        .ok_or(AbeError::PayloadTamper)
}

/// Evaluates a node in the exponent: returns `g^(k·share_node)` if the
/// available components satisfy the subtree. Advances `cursor` past every
/// leaf of the subtree either way.
fn recombine(
    g: &GroupParams,
    node: &AccessTree,
    shares: &[Scalar],
    cursor: &mut usize,
    components: &BTreeMap<&str, &GroupElement>,
) -> Option<GroupElement> {
    match node {
        AccessTree::Leaf(a) => {
            let share = &shares[*cursor];
            *cursor += 1;
            components.get(a.as_str()).map(|c| g.pow(c, share))
        }
        AccessTree::Gate { kind, children } => {
            let mut acc: Option<GroupElement> = None;
            let mut ok = true;
            for c in children {
                let v = recombine(g, c, shares, cursor, components);
                match kind {
                    GateKind::Or => {
                        if acc.is_none() {
                            acc = v;
                        }
                    }
                    GateKind::And => match (v, ok) {
                        (Some(v), true) => acc = Some(acc.map_or(v.clone(), |a| g.mul(&a, &v))),
                        _ => ok = false,
                    },
                }
            }
            if ok {
                acc
            } else {
                None
            }
        }
    }
}
