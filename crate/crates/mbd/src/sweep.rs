//! Seeded simulation sweeps with wall-clock timing of rule application.

use std::io::Write;
use std::time::Instant;

use mbd_core::diagnosis::Clock;
use mbd_core::simulator::{
    generate, inject, pick_faults, run_session_timed, Family, GeneratorConfig, Outcome, SessionError,
};
use mbd_core::{DiagnosisConfig, TimedComponent};
use serde::Serialize;

use crate::report::{rule_name, strategy_name};

/// Microseconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct InstantClock(Instant);

impl InstantClock {
    pub fn new() -> Self {
        InstantClock(Instant::now())
    }
}

impl Default for InstantClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for InstantClock {
    fn now_micros(&self) -> u64 {
        self.0.elapsed().as_micros() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub family: Family,
    pub n: usize,
    pub faults: usize,
    pub runs: usize,
    pub first_seed: u64,
    pub diagnosis: DiagnosisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub rule: &'static str,
    pub strategy: &'static str,
    pub probes: usize,
    pub correct: bool,
    pub rule_micros: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub runs: usize,
    pub correct: usize,
    pub mean_probes: f64,
    pub mean_rule_micros: f64,
}

pub fn family_k(family: Family) -> usize {
    match family {
        Family::Chain => 1,
        Family::Tree { k } | Family::Dag { k } => k,
    }
}

/// One run: generate, inject `faults` stuck-at faults, observe the sources
/// and sinks, then probe until the session ends.
pub fn run_one(config: &SweepConfig, seed: u64) -> Result<SweepRow, SessionError> {
    let g = generate(GeneratorConfig { family: config.family, n: config.n, seed });
    let faults = pick_faults(&g, config.faults, seed);
    let faulty = inject(&g.model, &faults, false).expect("generated faults are valid");
    let sinks: Vec<_> = g.model.sinks().map(|c| TimedComponent::new(c, 0)).collect();
    let initial = faulty.observe(&g.inputs, sinks)?;
    let clock = InstantClock::new();
    let (transcript, rule_micros) = run_session_timed(&faulty, &config.diagnosis, &initial, Some(&clock))?;
    Ok(SweepRow {
        seed,
        n: config.n,
        k: family_k(config.family),
        rule: rule_name(config.diagnosis.rule),
        strategy: strategy_name(config.diagnosis.strategy),
        probes: transcript.probe_count,
        correct: transcript.outcome == Outcome::Diagnosed(faulty.faulty_components()),
        rule_micros,
    })
}

pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, SessionError> {
    (0..config.runs as u64).map(|i| run_one(config, config.first_seed + i)).collect()
}

pub fn summarize(rows: &[SweepRow]) -> SweepSummary {
    let runs = rows.len();
    let mean = |f: &dyn Fn(&SweepRow) -> f64| {
        if runs == 0 {
            0.0
        } else {
            rows.iter().map(f).sum::<f64>() / runs as f64
        }
    };
    SweepSummary {
        runs,
        correct: rows.iter().filter(|r| r.correct).count(),
        mean_probes: mean(&|r| r.probes as f64),
        mean_rule_micros: mean(&|r| r.rule_micros as f64),
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["seed", "n", "k", "rule", "strategy", "probes", "correct", "rule_micros"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use mbd_core::{Rule, Strategy};

    fn chain(runs: usize) -> SweepConfig {
        SweepConfig {
            family: Family::Chain,
            n: 10,
            faults: 1,
            runs,
            first_seed: 0,
            diagnosis: DiagnosisConfig { rule: Rule::R1, strategy: Strategy::Halving, ..DiagnosisConfig::default() },
        }
    }

    #[test]
    fn chain_runs_are_all_correct() {
        let rows = sweep(&chain(100)).unwrap();
        assert_eq!(rows.len(), 100);
        assert!(rows.iter().all(|r| r.correct && r.probes <= 10));
        assert_eq!(summarize(&rows).correct, 100);
    }

    #[test]
    fn zero_runs_give_header_only() {
        let rows = sweep(&chain(0)).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "seed,n,k,rule,strategy,probes,correct,rule_micros\n");
        assert_eq!(summarize(&rows).mean_probes, 0.0);
    }

    #[test]
    fn csv_columns() {
        let rows = sweep(&chain(2)).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("seed,n,k,rule,strategy,probes,correct,rule_micros"));
        assert!(lines.next().unwrap().starts_with("0,10,1,R1,halving,"));
    }
}
