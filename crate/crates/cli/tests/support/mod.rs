//! Generators and brute-force oracles for the acceptance suite. Oracles
//! scan the chain from genesis and never consult the audit index.

#![allow(dead_code)]

pub mod abe_trees;
pub mod chains;
pub mod scan;
pub mod schnorr;
