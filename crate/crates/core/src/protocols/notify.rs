use std::collections::BTreeMap;

use crate::txgraph::AuditIndex;

use super::{Notification, NotificationKind};

pub const DEFAULT_FAILURE_WINDOW: u64 = 6;

/// Tracks which failed controllers have already been reported.
#[derive(Debug, Clone)]
pub struct FailureMonitor {
    window: u64,
    notified_at: BTreeMap<String, u64>,
}

impl Default for FailureMonitor {
    fn default() -> Self {
        Self::new(DEFAULT_FAILURE_WINDOW)
    }
}

impl FailureMonitor {
    pub fn new(window: u64) -> Self {
        assert!(window >= 1, "window must be at least one block");
        Self { window, notified_at: BTreeMap::new() }
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn notified_at(&self, id_contr: &str) -> Option<u64> {
        self.notified_at.get(id_contr).copied()
    }
}

/// Notifies every switch linked to a controller that has been inactive for
/// the whole window. A still-inactive controller is reported again only
/// once a further full window of blocks has passed.
pub fn controller_failed_notify(tip_height: u64, index: &AuditIndex, monitor: &mut FailureMonitor) -> Vec<Notification> {
    let inactive = index.inactive_controllers(monitor.window);
    monitor.notified_at.retain(|c, _| inactive.contains(c));
    let mut out = Vec::new();
    for c in inactive {
        let due = match monitor.notified_at.get(&c) {
            None => true,
            Some(at) => tip_height >= at + monitor.window,
        };
        if !due {
            continue;
        }
        monitor.notified_at.insert(c.clone(), tip_height);
        for switch in index.switch_ids_of_controller(&c) {
            out.push(Notification {
                recipient: switch,
                kind: NotificationKind::ControllerFailed,
                subject: c.clone(),
                issued_at: tip_height,
            });
        }
    }
    out
}
