pub mod abe;
pub mod crypto;
pub mod homqv;
pub mod ledger;
pub mod protocols;
pub mod simnet;
pub mod txgraph;

pub use crypto::{GroupElement, GroupParams, KeyPair, Scalar, Signature};
pub use ledger::{Block, Transaction, TxId, TxPayload};
pub use txgraph::AuditIndex;
