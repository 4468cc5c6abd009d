//! Automatic diagnosis sessions answered by a faulty model.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use super::fault::FaultyModel;
use crate::diagnosis::{assess_state_timed, Clock, DiagnosisConfig, Status};
use crate::focusing::{EvidenceSet, FocusSet};
use crate::model::{CompIx, Observation};
use crate::probing::ProbeAdvice;
use crate::propagation::{forward_predict, PropagationError};

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    /// Number of predictions made.
    pub predictions: usize,
    pub evidence: Vec<EvidenceSet>,
    pub focuses: FocusSet,
    pub advice: Option<ProbeAdvice>,
    pub measurement: Option<Observation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Diagnosed(BTreeSet<CompIx>),
    Exhausted,
    InconsistentEvidence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionTranscript {
    pub steps: Vec<Step>,
    pub outcome: Outcome,
    pub probe_count: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("the faulty system has no value for `{component}` at time {time}")]
    UnknownTruth { component: String, time: u32 },
}

pub fn run_session(
    faulty: &FaultyModel<'_>,
    config: &DiagnosisConfig,
    initial: &[Observation],
) -> Result<SessionTranscript, SessionError> {
    run_session_timed(faulty, config, initial, None).map(|(t, _)| t)
}

/// Predict, classify, focus and advise until the focuses are single
/// components, no probe splits them, or the evidence is inconsistent. Each
/// advised probe is answered from the faulty model. Also returns the total
/// time spent applying the focusing rule when a clock is given.
pub fn run_session_timed(
    faulty: &FaultyModel<'_>,
    config: &DiagnosisConfig,
    initial: &[Observation],
    clock: Option<&dyn Clock>,
) -> Result<(SessionTranscript, u64), SessionError> {
    let model = faulty.model();
    let truth = faulty.truth(initial)?;
    let mut observations = initial.to_vec();
    let mut steps = Vec::new();
    let mut micros = 0;
    loop {
        let state = forward_predict(model, &observations)?;
        let predictions = state.all().count();
        let (a, spent) = assess_state_timed(model, state, config, clock);
        micros += spent;
        let mut step = Step { predictions, evidence: a.evidence, focuses: a.focuses, advice: a.advice, measurement: None };
        let outcome = match a.status {
            Status::Healthy => Some(Outcome::Diagnosed(BTreeSet::new())),
            Status::Diagnosed(c) => Some(Outcome::Diagnosed(c)),
            Status::Exhausted => Some(Outcome::Exhausted),
            Status::Inconsistent => Some(Outcome::InconsistentEvidence),
            Status::Open => None,
        };
        if let Some(outcome) = outcome {
            steps.push(step);
            let probe_count = steps.iter().filter(|s| s.measurement.is_some()).count();
            return Ok((SessionTranscript { steps, outcome, probe_count }, micros));
        }
        let probe = step.advice.as_ref().expect("open status carries advice").probe;
        let measured = truth.observation(model, probe).ok_or_else(|| SessionError::UnknownTruth {
            component: String::from(model.id(probe.comp).as_str()),
            time: probe.time,
        })?;
        observations.push(measured.clone());
        step.measurement = Some(measured);
        steps.push(step);
    }
}
