//! One full pass of predict, classify, focus and advise.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::focusing::{self, EvidenceSet, FocusError, FocusSet, Member};
pub use crate::focusing::CancelMode;
use crate::model::{CompIx, Observation, SystemModel};
use crate::probing::{self, Priors, ProbeAdvice, ProbeError};
pub use crate::probing::Strategy;
use crate::propagation::{forward_predict_with, PredictOptions, PredictionState, PropagationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagnosisConfig {
    pub rule: Rule,
    pub mode: CancelMode,
    pub strategy: Strategy,
}

impl Default for DiagnosisConfig {
    fn default() -> Self {
        DiagnosisConfig { rule: Rule::R2, mode: CancelMode::NonIntermittent, strategy: Strategy::EntropySplit }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    /// No conflict so far.
    Healthy,
    /// Focuses remain to be split; advice is given.
    Open,
    /// Every focus is a single component.
    Diagnosed(BTreeSet<CompIx>),
    /// No measurement splits any remaining focus.
    Exhausted,
    /// A focused conflict set has every member confirmed or cancelled.
    Inconsistent,
}

impl Status {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Status::Healthy | Status::Open)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub state: PredictionState,
    pub evidence: Vec<EvidenceSet>,
    pub focuses: FocusSet,
    pub advice: Option<ProbeAdvice>,
    pub status: Status,
}

/// Applies the configured rule to classified evidence.
pub fn apply_rule(evidence: &[EvidenceSet], config: &DiagnosisConfig) -> Result<FocusSet, FocusError> {
    match config.rule {
        Rule::R1 => focusing::focus_rule1(evidence),
        Rule::R2 => Ok(focusing::focus_rule2(evidence)),
        Rule::R3 => focusing::focus_rule3(evidence, config.mode),
        Rule::R4 => Ok(focusing::focus_rule4(evidence, config.mode)),
    }
}

/// The single component of every focus, if each focus is one component.
pub fn singleton_components(focuses: &FocusSet) -> Option<BTreeSet<CompIx>> {
    focuses
        .focuses
        .iter()
        .map(|f| match f.members.iter().collect::<Vec<_>>().as_slice() {
            [Member::Component(tc)] => Some(tc.comp),
            _ => None,
        })
        .collect()
}

/// Predicts from `observations` (missing source values leave the affected
/// outputs unpredicted) and diagnoses the resulting evidence.
pub fn assess(
    model: &SystemModel,
    observations: &[Observation],
    config: &DiagnosisConfig,
) -> Result<Assessment, PropagationError> {
    let options = PredictOptions { allow_missing_sources: true, ..PredictOptions::default() };
    let state = forward_predict_with(model, observations, options)?;
    Ok(assess_state(model, state, config))
}

pub fn assess_state(model: &SystemModel, state: PredictionState, config: &DiagnosisConfig) -> Assessment {
    assess_state_timed(model, state, config, None).0
}

/// Monotonic time source in microseconds.
pub trait Clock {
    fn now_micros(&self) -> u64;
}

/// As [`assess_state`], also returning the time spent applying the rule
/// when a clock is given.
pub fn assess_state_timed(
    model: &SystemModel,
    state: PredictionState,
    config: &DiagnosisConfig,
    clock: Option<&dyn Clock>,
) -> (Assessment, u64) {
    let evidence = focusing::classify(model, &state);
    let mut out = Assessment { state, evidence, focuses: FocusSet::default(), advice: None, status: Status::Healthy };
    if !out.evidence.iter().any(EvidenceSet::is_conflict) {
        return (out, 0);
    }
    let start = clock.map(|c| c.now_micros());
    let focused = apply_rule(&out.evidence, config);
    let micros = match (clock, start) {
        (Some(c), Some(s)) => c.now_micros().saturating_sub(s),
        _ => 0,
    };
    out.focuses = match focused {
        Ok(f) => f,
        Err(FocusError::InconsistentEvidence { .. }) => {
            out.status = Status::Inconsistent;
            return (out, micros);
        }
    };
    if let Some(comps) = singleton_components(&out.focuses) {
        out.status = Status::Diagnosed(comps);
        return (out, micros);
    }
    let priors = Priors::from_model(model);
    match probing::advise(model, &out.focuses, &out.state, &priors, config.strategy) {
        Ok(a) => {
            out.advice = Some(a);
            out.status = Status::Open;
        }
        Err(ProbeError::FocusExhausted | ProbeError::DegenerateFocus | ProbeError::MaskedCandidates) => {
            out.status = Status::Exhausted;
        }
    }
    (out, micros)
}
