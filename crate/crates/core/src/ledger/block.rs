use std::collections::HashMap;
use std::fmt;

use crate::crypto::{hash, Decode, DecodeError, Decoder, Digest, Domain, Encode, Encoder, GroupParams};

use super::tx::{Transaction, TxId, TxKind};

pub const ZERO_HASH: Digest = [0u8; 32];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub height: u64,
    /// Simulation tick at which the block was proposed.
    pub timestamp: u64,
    pub prev_hash: Digest,
    pub tx_list: Vec<Transaction>,
    pub block_hash: Digest,
}

struct HashedFields<'a> {
    height: u64,
    timestamp: u64,
    prev_hash: &'a Digest,
    tx_list: &'a [Transaction],
}

impl Encode for HashedFields<'_> {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.u64(self.height).u64(self.timestamp).fixed(self.prev_hash).seq(self.tx_list);
    }
}

impl Block {
    pub fn new(height: u64, timestamp: u64, prev_hash: Digest, tx_list: Vec<Transaction>) -> Self {
        let block_hash = Self::compute_hash(height, timestamp, &prev_hash, &tx_list);
        Self { height, timestamp, prev_hash, tx_list, block_hash }
    }

    pub fn genesis() -> Self {
        Self::new(0, 0, ZERO_HASH, Vec::new())
    }

    pub fn compute_hash(height: u64, timestamp: u64, prev_hash: &Digest, tx_list: &[Transaction]) -> Digest {
        let fields = HashedFields { height, timestamp, prev_hash, tx_list };
        hash(Domain::Block, &crate::crypto::canonical_encode(&fields))
    }

    pub fn recompute_hash(&self) -> Digest {
        Self::compute_hash(self.height, self.timestamp, &self.prev_hash, &self.tx_list)
    }
}

impl Encode for Block {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.u64(self.height).u64(self.timestamp).fixed(&self.prev_hash).seq(&self.tx_list).fixed(&self.block_hash);
    }
}

impl Decode for Block {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            height: dec.u64()?,
            timestamp: dec.u64()?,
            prev_hash: dec.fixed()?,
            tx_list: dec.seq()?,
            block_hash: dec.fixed()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainFaultKind {
    HeightGap { expected: u64, found: u64 },
    BrokenLink,
    HashMismatch,
    TxIdMismatch(TxId),
    BadSignature(TxId),
    DuplicateTx(TxId),
    DanglingReference { tx: TxId, missing: TxId },
    TimestampRegression,
}

impl fmt::Display for ChainFaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainFaultKind::HeightGap { expected, found } => write!(f, "expected height {expected}, found {found}"),
            ChainFaultKind::BrokenLink => write!(f, "prev_hash does not match parent block hash"),
            ChainFaultKind::HashMismatch => write!(f, "block hash does not recompute"),
            ChainFaultKind::TxIdMismatch(id) => write!(f, "transaction id {} does not recompute", id.short()),
            ChainFaultKind::BadSignature(id) => write!(f, "signature of transaction {} fails", id.short()),
            ChainFaultKind::DuplicateTx(id) => write!(f, "transaction {} appears twice", id.short()),
            ChainFaultKind::DanglingReference { tx, missing } => {
                write!(f, "transaction {} references unknown {}", tx.short(), missing.short())
            }
            ChainFaultKind::TimestampRegression => write!(f, "timestamp earlier than parent"),
        }
    }
}

/// First failure found by [`verify_chain`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainFault {
    pub height: u64,
    pub kind: ChainFaultKind,
}

impl fmt::Display for ChainFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "height {}: {}", self.height, self.kind)
    }
}

/// Checks a chain from genesis: consecutive heights, hash links, block
/// hashes, content addresses, embedded signatures and relationship
/// references. An empty chain verifies vacuously.
pub fn verify_chain<B: std::borrow::Borrow<Block>>(group: &GroupParams, chain: &[B]) -> Result<(), ChainFault> {
    let mut seen: HashMap<TxId, TxKind> = HashMap::new();
    let mut prev: Option<&Block> = None;
    for (i, b) in chain.iter().enumerate() {
        let b = b.borrow();
        let fault = |kind| Err(ChainFault { height: b.height, kind });
        if b.height != i as u64 {
            return fault(ChainFaultKind::HeightGap { expected: i as u64, found: b.height });
        }
        let expected_prev = prev.map_or(ZERO_HASH, |p| p.block_hash);
        if b.prev_hash != expected_prev {
            return fault(ChainFaultKind::BrokenLink);
        }
        if prev.is_some_and(|p| b.timestamp < p.timestamp) {
            return fault(ChainFaultKind::TimestampRegression);
        }
        if b.recompute_hash() != b.block_hash {
            return fault(ChainFaultKind::HashMismatch);
        }
        for tx in &b.tx_list {
            if !tx.id_matches_payload() {
                return fault(ChainFaultKind::TxIdMismatch(tx.id));
            }
            if seen.insert(tx.id, tx.kind()).is_some() {
                return fault(ChainFaultKind::DuplicateTx(tx.id));
            }
        }
        for tx in &b.tx_list {
            for (r, kind) in tx.payload.references() {
                if seen.get(&r) != Some(&kind) {
                    return fault(ChainFaultKind::DanglingReference { tx: tx.id, missing: r });
                }
            }
            if !tx.payload.verify_signature(group) {
                return fault(ChainFaultKind::BadSignature(tx.id));
            }
        }
        prev = Some(b);
    }
    Ok(())
}

/// Serializes blocks as `u32 length ‖ canonical_encode(block)`, concatenated.
pub fn write_dump<B: std::borrow::Borrow<Block>>(chain: &[B]) -> Vec<u8> {
    let mut out = Vec::new();
    for b in chain {
        let bytes = crate::crypto::canonical_encode(b.borrow());
        out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
        out.extend_from_slice(&bytes);
    }
    out
}

pub fn read_dump(bytes: &[u8]) -> Result<Vec<Block>, DecodeError> {
    let mut dec = Decoder::new(bytes);
    let mut out = Vec::new();
    while dec.remaining() > 0 {
        let frame = dec.bytes()?;
        out.push(crate::crypto::canonical_decode(frame)?);
    }
    Ok(out)
}
