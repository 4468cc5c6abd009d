//! JSON views of predictions, evidence, focuses, advice and transcripts.
//!
//! Components are labelled by id, with `@t` appended in temporal models.
//! Loop assumptions read `output(id)=v`. Sets are emitted as sorted arrays
//! so output is byte-stable.

use std::collections::BTreeSet;

use mbd_core::simulator::{Outcome, SessionTranscript, Step};
use mbd_core::validate::ValidationReport;
use mbd_core::{
    Assessment, Assumption, CancelMode, CompIx, EvidenceKind, EvidenceSet, Focus, FocusSet, Member, Prediction,
    PredictionState, ProbeAdvice, Rule, Status, Strategy, SystemModel, TimedComponent,
};
use serde::{Deserialize, Serialize};

use crate::document::{ObservationDoc, ValueDoc};

pub fn tc_label(model: &SystemModel, tc: TimedComponent) -> String {
    if model.is_temporal() {
        format!("{}@{}", model.id(tc.comp), tc.time)
    } else {
        model.id(tc.comp).to_string()
    }
}

pub fn assumption_label(model: &SystemModel, a: &Assumption) -> String {
    format!("output({})={}", tc_label(model, TimedComponent::new(a.wire, a.time)), a.value)
}

pub fn member_label(model: &SystemModel, m: &Member) -> String {
    match m {
        Member::Component(tc) => tc_label(model, *tc),
        Member::Assumption(a) => assumption_label(model, a),
    }
}

fn sorted<I: IntoIterator<Item = String>>(labels: I) -> Vec<String> {
    let mut v: Vec<String> = labels.into_iter().collect();
    v.sort();
    v.dedup();
    v
}

fn tc_labels<'a>(model: &SystemModel, set: impl IntoIterator<Item = &'a TimedComponent>) -> Vec<String> {
    sorted(set.into_iter().map(|tc| tc_label(model, *tc)))
}

fn member_labels<'a>(model: &SystemModel, set: impl IntoIterator<Item = &'a Member>) -> Vec<String> {
    sorted(set.into_iter().map(|m| member_label(model, m)))
}

pub fn rule_name(rule: Rule) -> &'static str {
    match rule {
        Rule::R1 => "R1",
        Rule::R2 => "R2",
        Rule::R3 => "R3",
        Rule::R4 => "R4",
    }
}

pub fn mode_name(mode: CancelMode) -> &'static str {
    match mode {
        CancelMode::NonIntermittent => "nonint",
        CancelMode::Intermittent => "int",
    }
}

pub fn strategy_name(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::EntropySplit => "entropy",
        Strategy::Bounds => "bounds",
        Strategy::Halving => "halving",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub component: String,
    pub time: u32,
    pub value: ValueDoc,
    pub dep: Vec<String>,
    pub focused: Vec<String>,
    pub mask_free: Vec<String>,
    pub assumptions: Vec<String>,
}

impl PredictionRow {
    pub fn new(model: &SystemModel, p: &Prediction) -> Self {
        PredictionRow {
            component: model.id(p.owner.comp).to_string(),
            time: p.owner.time,
            value: (&p.value).into(),
            dep: tc_labels(model, &p.deps.dep),
            focused: tc_labels(model, &p.deps.focused),
            mask_free: tc_labels(model, &p.deps.mask_free),
            assumptions: sorted(p.deps.assumptions.iter().map(|a| assumption_label(model, a))),
        }
    }
}

/// Every prediction in (component index, time, assumption) order.
pub fn prediction_rows(model: &SystemModel, state: &PredictionState) -> Vec<PredictionRow> {
    let mut rows: Vec<(CompIx, &Prediction)> = state.all().map(|p| (p.owner.comp, p)).collect();
    rows.sort_by(|a, b| (a.0, a.1.owner.time).cmp(&(b.0, b.1.owner.time)));
    rows.into_iter().map(|(_, p)| PredictionRow::new(model, p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRow {
    pub kind: String,
    pub origin: String,
    pub members: Vec<String>,
    pub focused: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub loop_check: bool,
    pub predicted: ValueDoc,
    pub observed: ValueDoc,
}

impl EvidenceRow {
    pub fn new(model: &SystemModel, e: &EvidenceSet) -> Self {
        EvidenceRow {
            kind: match e.kind {
                EvidenceKind::Conflict => "conflict",
                EvidenceKind::Confirmation => "confirmation",
            }
            .to_string(),
            origin: tc_label(model, e.origin),
            members: member_labels(model, &e.members),
            focused: member_labels(model, &e.focused_members),
            loop_check: e.loop_check,
            predicted: (&e.predicted).into(),
            observed: (&e.observed).into(),
        }
    }
}

pub fn evidence_rows(model: &SystemModel, evidence: &[EvidenceSet]) -> Vec<EvidenceRow> {
    evidence.iter().map(|e| EvidenceRow::new(model, e)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusRow {
    pub members: Vec<String>,
    pub score: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub under_assumed_broken: Option<String>,
}

impl FocusRow {
    pub fn new(model: &SystemModel, f: &Focus) -> Self {
        FocusRow {
            members: member_labels(model, &f.members),
            score: f.score,
            under_assumed_broken: f.under_assumed_broken.as_ref().map(|m| member_label(model, m)),
        }
    }
}

pub fn focus_rows(model: &SystemModel, focuses: &FocusSet) -> Vec<FocusRow> {
    focuses.focuses.iter().map(|f| FocusRow::new(model, f)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub probe: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<u32>,
    pub strategy: String,
    pub criterion_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
}

impl ProbeReport {
    pub fn new(model: &SystemModel, a: &ProbeAdvice) -> Self {
        ProbeReport {
            probe: model.id(a.probe.comp).to_string(),
            time: model.is_temporal().then_some(a.probe.time),
            strategy: strategy_name(a.strategy).to_string(),
            criterion_value: a.criterion_value,
            bounds: a.bounds.map(|(lo, hi)| [lo, hi]),
        }
    }
}

pub fn status_name(status: &Status) -> &'static str {
    match status {
        Status::Healthy => "healthy",
        Status::Open => "open",
        Status::Diagnosed(_) => "diagnosed",
        Status::Exhausted => "exhausted",
        Status::Inconsistent => "inconsistent",
    }
}

fn comp_labels(model: &SystemModel, comps: &BTreeSet<CompIx>) -> Vec<String> {
    sorted(comps.iter().map(|c| model.id(*c).to_string()))
}

/// Output of `diagnose`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusReport {
    pub focuses: Vec<FocusRow>,
    pub rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advice: Option<ProbeReport>,
}

impl FocusReport {
    pub fn new(model: &SystemModel, a: &Assessment, rule: Rule, mode: CancelMode) -> Self {
        FocusReport {
            focuses: focus_rows(model, &a.focuses),
            rule: rule_name(rule).to_string(),
            mode: matches!(rule, Rule::R3 | Rule::R4).then(|| mode_name(mode).to_string()),
            status: status_name(&a.status).to_string(),
            diagnosis: match &a.status {
                Status::Diagnosed(c) => Some(comp_labels(model, c)),
                _ => None,
            },
            advice: a.advice.as_ref().map(|p| ProbeReport::new(model, p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationDoc {
    pub valid: bool,
    pub violations: Vec<String>,
    pub loops: Vec<Vec<String>>,
}

impl From<&ValidationReport> for ValidationDoc {
    fn from(r: &ValidationReport) -> Self {
        ValidationDoc {
            valid: r.is_valid(),
            violations: r.violations.iter().map(ToString::to_string).collect(),
            loops: r.loops.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDoc {
    pub predictions: usize,
    pub evidence: Vec<EvidenceRow>,
    pub focuses: Vec<FocusRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advice: Option<ProbeReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<ObservationDoc>,
}

impl StepDoc {
    pub fn new(model: &SystemModel, s: &Step) -> Self {
        StepDoc {
            predictions: s.predictions,
            evidence: evidence_rows(model, &s.evidence),
            focuses: focus_rows(model, &s.focuses),
            advice: s.advice.as_ref().map(|a| ProbeReport::new(model, a)),
            measurement: s.measurement.as_ref().map(ObservationDoc::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptDoc {
    pub steps: Vec<StepDoc>,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<Vec<String>>,
    pub probe_count: usize,
}

impl TranscriptDoc {
    pub fn new(model: &SystemModel, t: &SessionTranscript) -> Self {
        let (outcome, diagnosis) = match &t.outcome {
            Outcome::Diagnosed(c) => ("diagnosed", Some(comp_labels(model, c))),
            Outcome::Exhausted => ("exhausted", None),
            Outcome::InconsistentEvidence => ("inconsistent", None),
        };
        TranscriptDoc {
            steps: t.steps.iter().map(|s| StepDoc::new(model, s)).collect(),
            outcome: outcome.to_string(),
            diagnosis,
            probe_count: t.probe_count,
        }
    }
}
