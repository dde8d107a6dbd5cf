use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AdversaryKind {
    ForgedFlow,
    ReplayFlow,
    ReplayConnection,
    SpoofSwitch,
    TamperFlowContent,
    CrashController,
    ByzantineValidator,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 7] = [
        AdversaryKind::ForgedFlow,
        AdversaryKind::ReplayFlow,
        AdversaryKind::ReplayConnection,
        AdversaryKind::SpoofSwitch,
        AdversaryKind::TamperFlowContent,
        AdversaryKind::CrashController,
        AdversaryKind::ByzantineValidator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdversaryKind::ForgedFlow => "forged-flow",
            AdversaryKind::ReplayFlow => "replay-flow",
            AdversaryKind::ReplayConnection => "replay-connection",
            AdversaryKind::SpoofSwitch => "spoof-switch",
            AdversaryKind::TamperFlowContent => "tamper-flow",
            AdversaryKind::CrashController => "crash-controller",
            AdversaryKind::ByzantineValidator => "byzantine-validator",
        }
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdversaryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown attack kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryConfig {
    pub kind: AdversaryKind,
    pub target: String,
    pub schedule: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackOutcome {
    /// Injected, verdict not yet known.
    Pending,
    Detected,
    Undetected,
    /// Nothing to act on at the scheduled tick (e.g. no flow to replay yet).
    Skipped,
    /// Validator behavior changed; judged by chain consistency.
    Applied,
}

impl fmt::Display for AttackOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackOutcome::Pending => "pending",
            AttackOutcome::Detected => "detected",
            AttackOutcome::Undetected => "undetected",
            AttackOutcome::Skipped => "skipped",
            AttackOutcome::Applied => "applied",
        })
    }
}

/// One labeled malicious action and what the defenses made of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackRecord {
    pub label: usize,
    pub kind: AdversaryKind,
    pub target: String,
    pub tick: u64,
    pub outcome: AttackOutcome,
    pub reason: String,
}
