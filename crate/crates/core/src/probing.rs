//! Choosing the next measurement.
//!
//! A candidate probe is an unmeasured observable output with a single
//! prediction. Measuring it either confirms its focused dependency set or
//! contradicts it, so a good probe cuts the focus roughly in half, by
//! probability mass (entropy split, or its bounds when masking is present)
//! or by size (halving).

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use thiserror::Error;

use crate::focusing::{Focus, FocusSet, Member};
use crate::model::SystemModel;
use crate::propagation::{PredictionState, TimedComponent};

const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    EntropySplit,
    Bounds,
    Halving,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeAdvice {
    pub probe: TimedComponent,
    /// `Pr(F')/Pr(F)` for the entropy split, the bounds midpoint, or
    /// `|F'|/|F|` for halving.
    pub criterion_value: f64,
    pub bounds: Option<(f64, f64)>,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbeError {
    #[error("no measurement splits the focus")]
    FocusExhausted,
    #[error("focus has zero probability of containing a broken component")]
    DegenerateFocus,
    /// Every splitting candidate has a mask-free set smaller than its
    /// focused set; use [`Strategy::Bounds`].
    #[error("every splitting candidate is masked; use the bounds strategy")]
    MaskedCandidates,
}

/// Prior fault probability per component.
#[derive(Debug, Clone, PartialEq)]
pub struct Priors(Vec<f64>);

impl Priors {
    pub fn from_model(model: &SystemModel) -> Self {
        Priors(model.components().iter().map(|c| c.prior).collect())
    }

    pub fn uniform(model: &SystemModel, p: f64) -> Self {
        Priors(alloc::vec![p; model.len()])
    }

    pub fn get(&self, tc: &TimedComponent) -> f64 {
        self.0[tc.comp.ix()]
    }
}

/// Probability that at least one member of `xs` is broken, accumulated as
/// `Pr <- Pr + p - Pr * p`; zero for the empty set.
pub fn prob_any_broken<'a>(xs: impl IntoIterator<Item = &'a TimedComponent>, priors: &Priors) -> f64 {
    xs.into_iter().fold(0.0, |pr, tc| {
        let p = priors.get(tc);
        pr + p - pr * p
    })
}

struct Candidate<'s> {
    tc: TimedComponent,
    focused: &'s BTreeSet<TimedComponent>,
    mask_free: &'s BTreeSet<TimedComponent>,
}

/// Unmeasured observable non-source outputs with a unique prediction whose
/// focused set meets `focus` without covering it.
fn candidates<'s>(
    model: &SystemModel,
    state: &'s PredictionState,
    focus: &BTreeSet<TimedComponent>,
) -> Vec<Candidate<'s>> {
    state
        .predictions
        .iter()
        .filter(|(tc, _)| {
            model.is_observable(tc.comp) && !model.component(tc.comp).is_source() && !state.is_measured(**tc)
        })
        .filter_map(|(&tc, preds)| match preds.as_slice() {
            [p] if p.deps.assumptions.is_empty() => Some(Candidate { tc, focused: &p.deps.focused, mask_free: &p.deps.mask_free }),
            _ => None,
        })
        .filter(|c| {
            let hit = focus.iter().filter(|m| c.focused.contains(m)).count();
            hit > 0 && hit < focus.len()
        })
        .collect()
}

fn remaining<'f>(focus: &'f BTreeSet<TimedComponent>, removed: &'f BTreeSet<TimedComponent>) -> impl Iterator<Item = &'f TimedComponent> {
    focus.iter().filter(move |m| !removed.contains(m))
}

/// Lowest distance wins; ties go to the earlier candidate, which the
/// iteration order makes the smaller component id, then the earlier time.
fn best<T>(scored: impl IntoIterator<Item = (f64, T)>) -> Option<T> {
    let mut out: Option<(f64, T)> = None;
    for (d, x) in scored {
        match &out {
            Some((b, _)) if d >= *b - TIE => {}
            _ => out = Some((d, x)),
        }
    }
    out.map(|(_, x)| x)
}

fn focus_components(focus: &Focus) -> BTreeSet<TimedComponent> {
    focus.members.iter().filter_map(Member::component).collect()
}

/// Candidate whose `Pr(F - Dep^f(c)) / Pr(F)` is closest to one half.
/// Only candidates whose mask-free set equals their focused set qualify.
pub fn select_probe_entropy(
    model: &SystemModel,
    focus: &BTreeSet<TimedComponent>,
    state: &PredictionState,
    priors: &Priors,
) -> Result<ProbeAdvice, ProbeError> {
    let all = candidates(model, state, focus);
    if all.is_empty() {
        return Err(ProbeError::FocusExhausted);
    }
    let pr_f = prob_any_broken(focus, priors);
    if pr_f <= 0.0 {
        return Err(ProbeError::DegenerateFocus);
    }
    let usable: Vec<&Candidate> = all.iter().filter(|c| c.focused == c.mask_free).collect();
    if usable.is_empty() {
        return Err(ProbeError::MaskedCandidates);
    }
    best(usable.into_iter().map(|c| {
        let ratio = prob_any_broken(remaining(focus, c.focused), priors) / pr_f;
        ((ratio - 0.5).abs(), ProbeAdvice { probe: c.tc, criterion_value: ratio, bounds: None, strategy: Strategy::EntropySplit })
    }))
    .ok_or(ProbeError::FocusExhausted)
}

/// `[Pr(F - Dep^f(c)), Pr(F - Dep^mf(c))] / Pr(F)` for the output `c`.
pub fn probe_bounds(
    c: TimedComponent,
    focus: &BTreeSet<TimedComponent>,
    state: &PredictionState,
    priors: &Priors,
) -> Result<(f64, f64), ProbeError> {
    let pr_f = prob_any_broken(focus, priors);
    if pr_f <= 0.0 {
        return Err(ProbeError::DegenerateFocus);
    }
    let Some(p) = state.unique(c) else {
        return Ok((1.0, 1.0));
    };
    let lower = prob_any_broken(remaining(focus, &p.deps.focused), priors) / pr_f;
    let upper = prob_any_broken(remaining(focus, &p.deps.mask_free), priors) / pr_f;
    Ok((lower, upper))
}

/// Candidate whose bounds interval has its midpoint closest to one half.
pub fn select_probe_bounds(
    model: &SystemModel,
    focus: &BTreeSet<TimedComponent>,
    state: &PredictionState,
    priors: &Priors,
) -> Result<ProbeAdvice, ProbeError> {
    let all = candidates(model, state, focus);
    if all.is_empty() {
        return Err(ProbeError::FocusExhausted);
    }
    let mut scored = Vec::with_capacity(all.len());
    for c in &all {
        let (lo, hi) = probe_bounds(c.tc, focus, state, priors)?;
        let mid = (lo + hi) / 2.0;
        scored.push(((mid - 0.5).abs(), ProbeAdvice { probe: c.tc, criterion_value: mid, bounds: Some((lo, hi)), strategy: Strategy::Bounds }));
    }
    best(scored).ok_or(ProbeError::FocusExhausted)
}

/// Candidate leaving closest to half of the focus unexplained.
pub fn select_probe_halving(
    model: &SystemModel,
    focus: &BTreeSet<TimedComponent>,
    state: &PredictionState,
) -> Result<ProbeAdvice, ProbeError> {
    let n = focus.len();
    if n < 2 {
        return Err(ProbeError::FocusExhausted);
    }
    best(candidates(model, state, focus).into_iter().map(|c| {
        let left = remaining(focus, c.focused).count();
        let distance = (2 * left).abs_diff(n) as f64;
        (distance, ProbeAdvice { probe: c.tc, criterion_value: left as f64 / n as f64, bounds: None, strategy: Strategy::Halving })
    }))
    .ok_or(ProbeError::FocusExhausted)
}

fn select(
    model: &SystemModel,
    focus: &BTreeSet<TimedComponent>,
    state: &PredictionState,
    priors: &Priors,
    strategy: Strategy,
) -> Result<ProbeAdvice, ProbeError> {
    match strategy {
        Strategy::EntropySplit => match select_probe_entropy(model, focus, state, priors) {
            Err(ProbeError::MaskedCandidates) => select_probe_bounds(model, focus, state, priors),
            r => r,
        },
        Strategy::Bounds => select_probe_bounds(model, focus, state, priors),
        Strategy::Halving => select_probe_halving(model, focus, state),
    }
}

/// Probability weight of a focus; an assumed wire value counts as one of
/// its domain's equally likely values.
fn focus_weight(model: &SystemModel, focus: &Focus, priors: &Priors) -> f64 {
    focus.members.iter().fold(0.0, |pr, m| {
        let p = match m {
            Member::Component(tc) => priors.get(tc),
            Member::Assumption(a) => assumption_weight(model, a.wire),
        };
        pr + p - pr * p
    })
}

fn assumption_weight(model: &SystemModel, wire: crate::model::CompIx) -> f64 {
    let n = model.component(wire).domain.finite_values().map_or(0, |v| v.len());
    if n == 0 {
        0.0
    } else {
        1.0 / n as f64
    }
}

/// Advice for the most probable focus that can still be split. A focus
/// resting on a loop assumption is resolved first by measuring the assumed
/// wire, when it is observable and not yet measured.
pub fn advise(
    model: &SystemModel,
    focuses: &FocusSet,
    state: &PredictionState,
    priors: &Priors,
    strategy: Strategy,
) -> Result<ProbeAdvice, ProbeError> {
    let mut order: Vec<(f64, &Focus)> = focuses.focuses.iter().map(|f| (focus_weight(model, f, priors), f)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut degenerate = false;
    for (_, focus) in order {
        for m in &focus.members {
            if let Member::Assumption(a) = m {
                let tc = TimedComponent::new(a.wire, a.time);
                if model.is_observable(a.wire) && !state.is_measured(tc) {
                    return Ok(ProbeAdvice {
                        probe: tc,
                        criterion_value: assumption_weight(model, a.wire),
                        bounds: None,
                        strategy,
                    });
                }
            }
        }
        let comps = focus_components(focus);
        match select(model, &comps, state, priors, strategy) {
            Ok(advice) => return Ok(advice),
            Err(ProbeError::DegenerateFocus) => degenerate = true,
            Err(_) => {}
        }
    }
    Err(if degenerate { ProbeError::DegenerateFocus } else { ProbeError::FocusExhausted })
}
