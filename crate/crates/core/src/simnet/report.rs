use std::fmt::Write as _;

use super::adversary::{AdversaryKind, AttackOutcome, AttackRecord};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChainStats {
    pub height: u64,
    pub blocks: u64,
    pub transactions: u64,
    pub no_quorum_rounds: u64,
    pub tip_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScenarioReport {
    pub header: Vec<(String, String)>,
    pub events: Vec<String>,
    pub attacks: Vec<AttackRecord>,
    pub chain: ChainStats,
    pub ticks: u64,
    pub flows_accepted: u64,
    pub flows_rejected: u64,
    pub honest_flow_rejections: u64,
    pub installs: u64,
    pub sessions: u64,
    pub notifications: u64,
    /// Final score of every entity in the reputation book.
    pub reputation: Vec<(String, i64)>,
    pub view_consistent: bool,
    pub chain_verified: bool,
    pub chain_fault: Option<String>,
}

/// (detected, judged) over the given kinds; skipped and pending actions are
/// not judged.
pub fn detection(attacks: &[AttackRecord], kinds: &[AdversaryKind]) -> (usize, usize) {
    let judged: Vec<_> = attacks
        .iter()
        .filter(|a| kinds.contains(&a.kind))
        .filter(|a| matches!(a.outcome, AttackOutcome::Detected | AttackOutcome::Undetected))
        .collect();
    (judged.iter().filter(|a| a.outcome == AttackOutcome::Detected).count(), judged.len())
}

impl ScenarioReport {
    pub fn undetected(&self) -> impl Iterator<Item = &AttackRecord> {
        self.attacks.iter().filter(|a| a.outcome == AttackOutcome::Undetected)
    }

    pub fn invariant_violation(&self) -> bool {
        !self.view_consistent || !self.chain_verified
    }

    pub fn summary_lines(&self) -> Vec<(String, String)> {
        let rate = |kinds: &[AdversaryKind]| {
            let (d, n) = detection(&self.attacks, kinds);
            format!("{d}/{n}")
        };
        let mut out = vec![
            ("ticks".to_string(), self.ticks.to_string()),
            ("height".into(), self.chain.height.to_string()),
            ("blocks".into(), self.chain.blocks.to_string()),
            ("transactions".into(), self.chain.transactions.to_string()),
            ("no_quorum_rounds".into(), self.chain.no_quorum_rounds.to_string()),
            ("tip_hash".into(), self.chain.tip_hash.clone()),
            ("flows_accepted".into(), self.flows_accepted.to_string()),
            ("flows_rejected".into(), self.flows_rejected.to_string()),
            ("honest_flow_rejections".into(), self.honest_flow_rejections.to_string()),
            ("installs".into(), self.installs.to_string()),
            ("sessions".into(), self.sessions.to_string()),
            ("notifications".into(), self.notifications.to_string()),
        ];
        for k in AdversaryKind::ALL {
            if k != AdversaryKind::ByzantineValidator {
                out.push((format!("attack.{}", k.name()), rate(&[k])));
            }
        }
        out.push(("replay_detected".into(), rate(&[AdversaryKind::ReplayFlow, AdversaryKind::ReplayConnection])));
        out.push(("forgery_detected".into(), rate(&[AdversaryKind::ForgedFlow, AdversaryKind::TamperFlowContent])));
        out.push(("spoof_detected".into(), rate(&[AdversaryKind::SpoofSwitch])));
        out.push(("crash_detected".into(), rate(&[AdversaryKind::CrashController])));
        out.push(("undetected_attacks".into(), self.undetected().count().to_string()));
        out.push(("view_consistent".into(), self.view_consistent.to_string()));
        out.push(("chain_verified".into(), self.chain_verified.to_string()));
        out
    }

    pub fn render(&self) -> String {
        let mut s = String::from("# chainsdn scenario report\n\n[config]\n");
        for (k, v) in &self.header {
            let _ = writeln!(s, "{k}={v}");
        }
        s.push_str("\n[events]\n");
        for e in &self.events {
            let _ = writeln!(s, "{e}");
        }
        s.push_str("\n[attacks]\n");
        for a in &self.attacks {
            let _ = writeln!(
                s,
                "label={} kind={} target={} tick={} outcome={} reason={}",
                a.label, a.kind, a.target, a.tick, a.outcome, a.reason
            );
        }
        s.push_str("\n[reputation]\n");
        for (id, score) in &self.reputation {
            let _ = writeln!(s, "{id}={score}");
        }
        s.push_str("\n[summary]\n");
        for (k, v) in self.summary_lines() {
            let _ = writeln!(s, "{k}={v}");
        }
        if let Some(f) = &self.chain_fault {
            let _ = writeln!(s, "chain_fault={f}");
        }
        s
    }
}
