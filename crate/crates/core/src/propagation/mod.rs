//! Forward prediction with dependency tracking.
//!
//! Every predicted output carries three nested sets of timed components:
//! `dep` (one sufficient set of correctly working components), `focused`
//! (components every sufficient set shares) and `mask_free` (the focused
//! members whose faults would visibly change the output). Measured outputs
//! feed their measured value downstream and never appear in other
//! predictions' sets.

mod engine;
mod enumerate;
mod eval;
mod loops;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::expr::EvalError;
use crate::model::{CompIx, ComponentId, FunctionSpec, Observation, SystemModel};
use crate::value::Value;

pub use enumerate::{enumerate_dep_sets, DepEnumeration};
pub use eval::{evaluate_component, Evaluation};
pub(crate) use loops::choose_cuts;

/// A component output at a time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimedComponent {
    pub comp: CompIx,
    pub time: u32,
}

impl TimedComponent {
    pub fn new(comp: CompIx, time: u32) -> Self {
        TimedComponent { comp, time }
    }
}

/// A hypothesised value for a component output.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Assumption {
    pub wire: CompIx,
    pub time: u32,
    pub value: Value,
}

pub type TcSet = BTreeSet<TimedComponent>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DepSets {
    pub dep: TcSet,
    pub focused: TcSet,
    pub mask_free: TcSet,
    pub assumptions: BTreeSet<Assumption>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Origin {
    /// Computed from the component's inputs.
    Derived,
    /// Introduced by a loop assumption; its sets hold only the assumption.
    Assumed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub owner: TimedComponent,
    pub value: Value,
    pub deps: DepSets,
    pub origin: Origin,
}

/// Predictions for every reachable component and time step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionState {
    pub predictions: BTreeMap<TimedComponent, Vec<Prediction>>,
    pub measured: BTreeMap<TimedComponent, Value>,
    /// Predictions recomputed for assumed loop wires after going round the
    /// loop; compared against the assumption they were derived under.
    pub loop_checks: BTreeMap<TimedComponent, Vec<Prediction>>,
    pub horizon: u32,
}

impl PredictionState {
    pub fn get(&self, tc: TimedComponent) -> &[Prediction] {
        self.predictions.get(&tc).map_or(&[], Vec::as_slice)
    }

    /// The prediction for `tc` when there is exactly one.
    pub fn unique(&self, tc: TimedComponent) -> Option<&Prediction> {
        match self.get(tc) {
            [p] => Some(p),
            _ => None,
        }
    }

    pub fn is_measured(&self, tc: TimedComponent) -> bool {
        self.measured.contains_key(&tc)
    }

    pub fn all(&self) -> impl Iterator<Item = &Prediction> {
        self.predictions.values().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagationError {
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("output of `{0}` is not observable")]
    NotObservable(String),
    #[error("time {time} for `{component}` is outside the horizon")]
    TimeOutOfRange { component: String, time: u32 },
    #[error("value `{value}` is outside the domain of `{component}`")]
    ValueOutOfDomain { component: String, value: String },
    #[error("`{component}` observed twice at time {time}")]
    DuplicateObservation { component: String, time: u32 },
    #[error("source `{component}` has no value at time {time}")]
    MissingSource { component: String, time: u32 },
    #[error("no branch of `{component}` applies at time {time}")]
    Undetermined { component: String, time: u32 },
    #[error("evaluating `{component}` at time {time}: {source}")]
    Eval { component: String, time: u32, source: EvalError },
    #[error("loop {members:?} has no finite-domain wire to assume")]
    NonFiniteAssumption { members: Vec<String> },
    #[error("loop {members:?} found no fixed point within {iterations} sweeps")]
    NoFixedPoint { members: Vec<String>, iterations: usize },
    #[error("components {0:?} do not form a loop of the model")]
    NotALoop(Vec<String>),
    #[error("`{component}` has several predictions at time {time}")]
    Ambiguous { component: String, time: u32 },
    #[error("previous state is missing for `{0}`")]
    MissingPreviousState(String),
}

/// Alternate function for a component at a time step, used by fault
/// injection.
pub type Override<'a> = &'a dyn Fn(CompIx, u32) -> Option<&'a FunctionSpec>;

#[derive(Clone, Copy, Default)]
pub struct PredictOptions<'a> {
    pub overrides: Option<Override<'a>>,
    /// Skip components whose source values are missing instead of failing.
    pub allow_missing_sources: bool,
}

impl fmt::Debug for PredictOptions<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PredictOptions")
            .field("overrides", &self.overrides.is_some())
            .field("allow_missing_sources", &self.allow_missing_sources)
            .finish()
    }
}

/// Observations resolved against a model: measured values per time step.
pub fn resolve_observations(
    model: &SystemModel,
    observations: &[Observation],
) -> Result<BTreeMap<TimedComponent, Value>, PropagationError> {
    let mut out = BTreeMap::new();
    for o in observations {
        let name = || String::from(o.component.as_str());
        let c = model.ix(o.component.as_str()).ok_or_else(|| PropagationError::UnknownComponent(name()))?;
        if !model.is_observable(c) {
            return Err(PropagationError::NotObservable(name()));
        }
        if o.time >= model.time_horizon {
            return Err(PropagationError::TimeOutOfRange { component: name(), time: o.time });
        }
        let value = model.component(c).domain.coerce(&o.value).ok_or_else(|| {
            PropagationError::ValueOutOfDomain { component: name(), value: alloc::format!("{}", o.value) }
        })?;
        if out.insert(TimedComponent::new(c, o.time), value).is_some() {
            return Err(PropagationError::DuplicateObservation { component: name(), time: o.time });
        }
    }
    Ok(out)
}

/// Predicts every component output over the model's horizon.
pub fn forward_predict(model: &SystemModel, observations: &[Observation]) -> Result<PredictionState, PropagationError> {
    forward_predict_with(model, observations, PredictOptions::default())
}

pub fn forward_predict_with<'a>(
    model: &'a SystemModel,
    observations: &[Observation],
    options: PredictOptions<'a>,
) -> Result<PredictionState, PropagationError> {
    let measured = resolve_observations(model, observations)?;
    engine::Engine::new(model, measured, options, None).run()
}

/// Forward prediction restricted to the given sample times. Dependency
/// sets still reach back to earlier steps.
pub fn temporal_predict(
    model: &SystemModel,
    observations: &[Observation],
    sample_times: &[u32],
) -> Result<PredictionState, PropagationError> {
    let mut state = forward_predict(model, observations)?;
    let keep: BTreeSet<u32> = sample_times.iter().copied().collect();
    state.predictions.retain(|tc, _| keep.contains(&tc.time));
    state.loop_checks.retain(|tc, _| keep.contains(&tc.time));
    Ok(state)
}

/// Predictions for a loop, using assumptions on the wires chosen by
/// [`choose_cuts`]. Returns the predictions of the loop members (assumed
/// wires carry one `Assumed` prediction per domain value) and the loop
/// checks for the assumed wires.
pub fn loop_predict_assumption(
    model: &SystemModel,
    observations: &[Observation],
    scc: &[ComponentId],
) -> Result<(Vec<Prediction>, Vec<Prediction>), PropagationError> {
    let members = lookup_all(model, scc)?;
    let state = forward_predict(model, observations)?;
    let mut preds = Vec::new();
    let mut checks = Vec::new();
    for &c in &members {
        let tc = TimedComponent::new(c, 0);
        preds.extend(state.get(tc).iter().cloned());
        if let Some(list) = state.loop_checks.get(&tc) {
            checks.extend(list.iter().cloned());
        }
    }
    Ok((preds, checks))
}

/// Predictions for a loop at time 0 by fixed-point iteration, starting from
/// `previous_state` for the loop wires.
pub fn loop_predict_stateful(
    model: &SystemModel,
    observations: &[Observation],
    scc: &[ComponentId],
    previous_state: &BTreeMap<ComponentId, Value>,
    max_iters: Option<usize>,
) -> Result<Vec<Prediction>, PropagationError> {
    let members = lookup_all(model, scc)?;
    let mut previous = BTreeMap::new();
    for &c in &members {
        let v = previous_state
            .get(model.id(c))
            .ok_or_else(|| PropagationError::MissingPreviousState(String::from(model.id(c).as_str())))?;
        previous.insert(c, v.clone());
    }
    let measured = resolve_observations(model, observations)?;
    let forced = engine::ForcedLoop { members: members.clone(), previous, max_iters };
    let state = engine::Engine::new(model, measured, PredictOptions::default(), Some(forced)).run()?;
    Ok(members
        .iter()
        .flat_map(|&c| state.get(TimedComponent::new(c, 0)).iter().cloned())
        .collect())
}

fn lookup_all(model: &SystemModel, ids: &[ComponentId]) -> Result<Vec<CompIx>, PropagationError> {
    let mut out: Vec<CompIx> = ids
        .iter()
        .map(|id| model.ix(id.as_str()).ok_or_else(|| PropagationError::UnknownComponent(String::from(id.as_str()))))
        .collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

pub(crate) fn names(model: &SystemModel, comps: impl IntoIterator<Item = CompIx>) -> Vec<String> {
    comps.into_iter().map(|c| String::from(model.id(c).as_str())).collect()
}
