//! Security protocols run by controllers: flow authentication and replay
//! detection, arbitration-loss and controller-failure notification,
//! attribute-based access control, connection auditing with key update,
//! and network auditing. Handlers are functions of the audit index, the
//! request and explicit state values.

mod access;
mod audit;
mod connection;
mod flow;
mod notify;
mod reputation;

pub use access::{
    app_facts, app_policy, declared_slices, slice_controllers, AccessControl, AccessError, AccessGrant, Resource,
};
pub use audit::{audit_network, AuditError, AuditQuery, AuditTrail, EventPayload, TrailEntry};
pub use connection::{
    audit_authen_request, build_commitment, open_commitment, switch_challenge, ConnectionContext,
    ConnectionReject, ConnectionRequest, SessionEstablished, NONCE_LEN,
};
pub use flow::{
    app_id_for_pk, arbitration_loss_notify, auth_flow, conflict_digest, flow_replay_detect, Arbiter, FlowReject,
    FlowRequest, Freshness, CONFLICT_PREFIX_LEN,
};
pub use notify::{controller_failed_notify, FailureMonitor, DEFAULT_FAILURE_WINDOW};
pub use reputation::{
    ReputationBook, ReputationError, DEFAULT_BAN_THRESHOLD, INITIAL_REPUTATION, REPUTATION_PENALTY,
};

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NotificationKind {
    ArbitrationLoss,
    ControllerFailed,
}

impl fmt::Display for NotificationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NotificationKind::ArbitrationLoss => "arbitration-loss",
            NotificationKind::ControllerFailed => "controller-failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Notification {
    pub recipient: String,
    pub kind: NotificationKind,
    /// Flow id or controller id.
    pub subject: String,
    pub issued_at: u64,
}

#[cfg(test)]
mod tests;
