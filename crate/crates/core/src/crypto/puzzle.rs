//! Proof-of-work puzzle binding a switch identity to computational effort.

use super::encode::{canonical_encode, Decode, DecodeError, Decoder, Encode, Encoder};
use super::hash::{hash_parts, Digest, Domain};
use super::CryptoError;

pub const DEFAULT_PUZZLE_DIFFICULTY: u8 = 16;
pub const MAX_PUZZLE_DIFFICULTY: u8 = 24;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PuzzleSolution {
    pub subject_id: Vec<u8>,
    pub nonce: u64,
    /// Required number of leading zero bits.
    pub difficulty: u8,
}

impl Encode for PuzzleSolution {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.bytes(&self.subject_id).u64(self.nonce).u8(self.difficulty);
    }
}

impl Decode for PuzzleSolution {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self { subject_id: dec.bytes()?.to_vec(), nonce: dec.u64()?, difficulty: dec.u8()? })
    }
}

pub fn leading_zero_bits(d: &Digest) -> u32 {
    let mut n = 0;
    for b in d {
        if *b == 0 {
            n += 8;
        } else {
            n += b.leading_zeros();
            break;
        }
    }
    n
}

fn puzzle_digest(subject_id: &[u8], nonce: u64) -> Digest {
    hash_parts(Domain::Puzzle, &[&canonical_encode(subject_id), &nonce.to_be_bytes()])
}

pub fn solve_puzzle(subject_id: &[u8], difficulty: u8) -> Result<PuzzleSolution, CryptoError> {
    if difficulty > MAX_PUZZLE_DIFFICULTY {
        return Err(CryptoError::DifficultyTooHigh { requested: difficulty, max: MAX_PUZZLE_DIFFICULTY });
    }
    let nonce = (0u64..)
        .find(|n| leading_zero_bits(&puzzle_digest(subject_id, *n)) >= u32::from(difficulty))
        .expect("nonce space exhausted");
    Ok(PuzzleSolution { subject_id: subject_id.to_vec(), nonce, difficulty })
}

pub fn verify_puzzle(sol: &PuzzleSolution) -> bool {
    leading_zero_bits(&puzzle_digest(&sol.subject_id, sol.nonce)) >= u32::from(sol.difficulty)
}
