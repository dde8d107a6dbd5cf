//! `chainsdn` operator commands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use chainsdn_core::crypto::GroupParams;
use chainsdn_core::ledger::{read_dump, verify_chain, write_dump, Block};
use chainsdn_core::protocols::{audit_network, AuditQuery};
use chainsdn_core::simnet::{run_scenario, ScenarioReport, SimConfig, SimError};
use chainsdn_core::txgraph::AuditIndex;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_UNDETECTED: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DATAERR: u8 = 65;
pub const EXIT_SOFTWARE: u8 = 70;
pub const EXIT_IOERR: u8 = 74;

pub const REPORT_FILE: &str = "report.txt";
pub const DUMP_FILE: &str = "chain.dump";

#[derive(Debug, Parser)]
#[command(name = "chainsdn", version, about = "Run SDN security scenarios and inspect their ledgers")]
pub struct Cli {
    /// Simulation seed
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Controller-failure window in blocks
    #[arg(long, global = true, default_value_t = 6)]
    pub window: u64,
    /// Minimum switch puzzle difficulty in bits
    #[arg(long, global = true, default_value_t = 16)]
    pub difficulty: u8,
    /// Number of validators
    #[arg(long, global = true, default_value_t = 4)]
    pub validators: usize,
    /// Number of equivocating validators
    #[arg(long, global = true, default_value_t = 0)]
    pub byzantine: usize,
    /// Directory for report.txt and chain.dump
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario script, writing a report and a chain dump
    Run { scenario: PathBuf },
    /// Print a per-block summary of a chain dump
    Inspect { dump: PathBuf },
    /// Print the audit trail of a flow (or, with --event, an event)
    Audit {
        dump: PathBuf,
        id: String,
        #[arg(long)]
        event: bool,
    },
    /// Check a chain dump from genesis
    Verify { dump: PathBuf },
}

impl Cli {
    pub fn sim_config(&self) -> Result<SimConfig, String> {
        if self.window == 0 {
            return Err("--window must be at least 1".into());
        }
        if self.validators == 0 {
            return Err("--validators must be at least 1".into());
        }
        let f = (self.validators - 1) / 3;
        if self.byzantine > f {
            return Err(format!("--byzantine {} exceeds f = {f} for {} validators", self.byzantine, self.validators));
        }
        Ok(SimConfig {
            seed: self.seed,
            window: self.window,
            difficulty: self.difficulty,
            validators: self.validators,
            byzantine: self.byzantine,
            ..SimConfig::default()
        })
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    match &cli.command {
        Command::Run { scenario } => cmd_run(cli, scenario, out, err),
        Command::Inspect { dump } => cmd_inspect(dump, out, err),
        Command::Audit { dump, id, event } => {
            let q = if *event { AuditQuery::Event(id.clone()) } else { AuditQuery::Flow(id.clone()) };
            cmd_audit(dump, &q, out, err)
        }
        Command::Verify { dump } => cmd_verify(dump, out, err),
    }
}

pub fn cmd_run(cli: &Cli, scenario: &Path, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let config = match cli.sim_config() {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let script = match fs::read_to_string(scenario) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", scenario.display());
            return EXIT_IOERR;
        }
    };
    let outcome = match run_scenario(&script, &config) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", scenario.display());
            return match e {
                SimError::Parse(_) | SimError::Config(_) => EXIT_USAGE,
                _ => EXIT_DATAERR,
            };
        }
    };
    let report = outcome.report.render();
    let written = fs::create_dir_all(&cli.out_dir)
        .and_then(|()| fs::write(cli.out_dir.join(REPORT_FILE), &report))
        .and_then(|()| fs::write(cli.out_dir.join(DUMP_FILE), write_dump(&outcome.chain)));
    if let Err(e) = written {
        let _ = writeln!(err, "error: cannot write to {}: {e}", cli.out_dir.display());
        return EXIT_IOERR;
    }
    for (k, v) in outcome.report.summary_lines() {
        let _ = writeln!(out, "{k}={v}");
    }
    let r = &outcome.report;
    if r.invariant_violation() {
        let _ = writeln!(err, "invariant violation: view_consistent={} chain_verified={}", r.view_consistent, r.chain_verified);
    }
    for a in r.undetected() {
        let _ = writeln!(err, "undetected: label={} kind={} target={} tick={}", a.label, a.kind, a.target, a.tick);
    }
    exit_code(r)
}

/// 70 on an invariant violation, else 2 if any labeled attack went
/// undetected, else 0.
pub fn exit_code(report: &ScenarioReport) -> u8 {
    if report.invariant_violation() {
        EXIT_SOFTWARE
    } else if report.undetected().next().is_some() {
        EXIT_UNDETECTED
    } else {
        EXIT_OK
    }
}

fn load(dump: &Path, err: &mut dyn Write) -> Result<Vec<Block>, u8> {
    let bytes = fs::read(dump).map_err(|e| {
        let _ = writeln!(err, "error: cannot read {}: {e}", dump.display());
        EXIT_IOERR
    })?;
    read_dump(&bytes).map_err(|e| {
        let _ = writeln!(err, "error: {} is not a chain dump: {e}", dump.display());
        EXIT_DATAERR
    })
}

pub fn cmd_verify(dump: &Path, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let chain = match load(dump, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match verify_chain(GroupParams::sim(), &chain) {
        Ok(()) => {
            let _ = writeln!(out, "ok: {} blocks", chain.len());
            EXIT_OK
        }
        Err(f) => {
            let _ = writeln!(out, "fault at height {}: {}", f.height, f.kind);
            EXIT_FAIL
        }
    }
}

pub fn cmd_inspect(dump: &Path, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let chain = match load(dump, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    for b in &chain {
        let _ = writeln!(out, "{:>6}  t={:<6} txs={:<4} {}", b.height, b.timestamp, b.tx_list.len(), hex::encode(&b.block_hash[..8]));
        for tx in &b.tx_list {
            let _ = writeln!(out, "        {:<15} {}", tx.kind().name(), tx.id.short());
        }
    }
    EXIT_OK
}

pub fn cmd_audit(dump: &Path, query: &AuditQuery, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let chain = match load(dump, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Err(f) = verify_chain(GroupParams::sim(), &chain) {
        let _ = writeln!(err, "error: dump does not verify: {f}");
        return EXIT_FAIL;
    }
    let index = match AuditIndex::from_chain(&chain) {
        Ok(i) => i,
        Err(e) => {
            let _ = writeln!(err, "error: {e:?}");
            return EXIT_DATAERR;
        }
    };
    match audit_network(query, &index) {
        Ok(trail) => {
            let _ = write!(out, "{trail}");
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            EXIT_FAIL
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chainsdn_core::simnet::{AdversaryKind, AttackOutcome, AttackRecord};

    fn report() -> ScenarioReport {
        ScenarioReport { view_consistent: true, chain_verified: true, ..Default::default() }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&report()), EXIT_OK);
        let mut r = report();
        r.attacks.push(AttackRecord {
            label: 0,
            kind: AdversaryKind::ReplayFlow,
            target: "a".into(),
            tick: 1,
            outcome: AttackOutcome::Undetected,
            reason: "accepted".into(),
        });
        assert_eq!(exit_code(&r), EXIT_UNDETECTED);
        r.chain_verified = false;
        assert_eq!(exit_code(&r), EXIT_SOFTWARE);
    }
}
