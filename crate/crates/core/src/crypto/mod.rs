//! Cryptographic substrate shared by every other module.
//!
//! Everything here is a pure function over explicit inputs. Randomized
//! operations take the caller's RNG so simulations stay replayable.

pub(crate) mod ae;
mod encode;
mod group;
mod hash;
mod puzzle;
mod sig;

pub use ae::{ae_decrypt, ae_encrypt, HybridCiphertext, MAX_PLAINTEXT_LEN};
pub use encode::{canonical_decode, canonical_encode, Decode, DecodeError, Decoder, Encode, Encoder};
pub use group::{group_exp, GroupElement, GroupParams, Scalar};
pub use hash::{hash, hash_parts, Digest, Domain};
pub use puzzle::{
    leading_zero_bits, solve_puzzle, verify_puzzle, PuzzleSolution, DEFAULT_PUZZLE_DIFFICULTY,
    MAX_PUZZLE_DIFFICULTY,
};
pub use sig::{ds_keygen, ds_sign, ds_sign_randomized, ds_verify, KeyPair, Signature};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("group element is not a member of the prime-order subgroup")]
    NonMember,
    #[error("ciphertext rejected")]
    DecryptReject,
    #[error("puzzle difficulty {requested} exceeds the maximum of {max}")]
    DifficultyTooHigh { requested: u8, max: u8 },
    #[error("plaintext of {len} bytes exceeds the {max}-byte bound")]
    PayloadTooLarge { len: usize, max: usize },
    #[error("invalid group parameters: {0}")]
    InvalidParams(&'static str),
}
