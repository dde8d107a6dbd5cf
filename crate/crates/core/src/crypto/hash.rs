use sha2::{Digest as _, Sha256};

/// 32-byte SHA-256 output.
pub type Digest = [u8; 32];

/// Domain-separation prefixes. Every hash in the crate goes through one of
/// these so that outputs of different roles never collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Block,
    Puzzle,
    Kdf,
    Exponent,
    Transaction,
    SigChallenge,
    SigNonce,
    KeyGen,
    AeKey,
    AbeKey,
    Raw,
}

impl Domain {
    pub fn prefix(self) -> &'static [u8] {
        match self {
            Domain::Block => b"BLK",
            Domain::Puzzle => b"PUZ",
            Domain::Kdf => b"KDF",
            Domain::Exponent => b"EXP",
            Domain::Transaction => b"TX",
            Domain::SigChallenge => b"SIG",
            Domain::SigNonce => b"NCE",
            Domain::KeyGen => b"KEY",
            Domain::AeKey => b"AEK",
            Domain::AbeKey => b"ABE",
            Domain::Raw => b"",
        }
    }
}

pub fn hash(domain: Domain, data: &[u8]) -> Digest {
    hash_parts(domain, &[data])
}

/// SHA-256 over `prefix ‖ part_0 ‖ part_1 ‖ ...`. Parts are concatenated
/// raw; callers pass canonical encodings when boundaries matter.
pub fn hash_parts(domain: Domain, parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    h.update(domain.prefix());
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}
