//! Fault injection and the ground truth of a faulty system.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{CompIx, ComponentId, FunctionSpec, Observation, SystemModel};
use crate::propagation::{forward_predict_with, PredictOptions, PredictionState, PropagationError, TimedComponent};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum FaultBehavior {
    StuckAt(Value),
    FunctionOverride(FunctionSpec),
    /// Stuck at `value` only at the listed time steps.
    IntermittentStuckAt { value: Value, active_times: BTreeSet<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultSpec {
    pub component: ComponentId,
    pub behavior: FaultBehavior,
}

impl FaultSpec {
    pub fn stuck_at(component: impl Into<ComponentId>, value: Value) -> Self {
        FaultSpec { component: component.into(), behavior: FaultBehavior::StuckAt(value) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FaultError {
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("`{0}` is faulted twice")]
    DuplicateFault(String),
    #[error("`{0}` is a source; source faults are not enabled")]
    SourceFault(String),
    #[error("source `{0}` can only be stuck, not given another function")]
    SourceOverride(String),
    #[error("fault value for `{0}` is outside its domain")]
    ValueOutOfDomain(String),
    #[error("fault time {time} for `{component}` is outside the horizon")]
    TimeOutOfRange { component: String, time: u32 },
}

#[derive(Debug, Clone, PartialEq)]
struct Injected {
    function: FunctionSpec,
    value: Option<Value>,
    active: Option<BTreeSet<u32>>,
}

impl Injected {
    fn active_at(&self, t: u32) -> bool {
        self.active.as_ref().is_none_or(|s| s.contains(&t))
    }
}

/// A model with some components' behaviour replaced. The original model is
/// shared, not copied.
#[derive(Debug, Clone)]
pub struct FaultyModel<'m> {
    model: &'m SystemModel,
    faults: BTreeMap<CompIx, Injected>,
}

pub fn inject<'m>(
    model: &'m SystemModel,
    faults: &[FaultSpec],
    allow_sources: bool,
) -> Result<FaultyModel<'m>, FaultError> {
    let mut out = BTreeMap::new();
    for f in faults {
        let name = || String::from(f.component.as_str());
        let c = model.ix(f.component.as_str()).ok_or_else(|| FaultError::UnknownComponent(name()))?;
        let comp = model.component(c);
        if comp.is_source() && !allow_sources {
            return Err(FaultError::SourceFault(name()));
        }
        let coerce = |v: &Value| comp.domain.coerce(v).ok_or_else(|| FaultError::ValueOutOfDomain(name()));
        let injected = match &f.behavior {
            FaultBehavior::StuckAt(v) => {
                let v = coerce(v)?;
                Injected { function: FunctionSpec::constant(v.clone()), value: Some(v), active: None }
            }
            FaultBehavior::FunctionOverride(spec) => {
                if comp.is_source() {
                    return Err(FaultError::SourceOverride(name()));
                }
                Injected { function: spec.clone(), value: None, active: None }
            }
            FaultBehavior::IntermittentStuckAt { value, active_times } => {
                if let Some(&t) = active_times.iter().find(|&&t| t >= model.time_horizon) {
                    return Err(FaultError::TimeOutOfRange { component: name(), time: t });
                }
                let v = coerce(value)?;
                Injected { function: FunctionSpec::constant(v.clone()), value: Some(v), active: Some(active_times.clone()) }
            }
        };
        if out.insert(c, injected).is_some() {
            return Err(FaultError::DuplicateFault(name()));
        }
    }
    Ok(FaultyModel { model, faults: out })
}

/// Values of every determinable output of the faulty system.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Truth(pub BTreeMap<TimedComponent, Value>);

impl Truth {
    pub fn get(&self, tc: TimedComponent) -> Option<&Value> {
        self.0.get(&tc)
    }

    pub fn observation(&self, model: &SystemModel, tc: TimedComponent) -> Option<Observation> {
        self.get(tc).map(|v| Observation::new(model.id(tc.comp).as_str(), tc.time, v.clone()))
    }
}

impl<'m> FaultyModel<'m> {
    pub fn model(&self) -> &'m SystemModel {
        self.model
    }

    pub fn faulty_components(&self) -> BTreeSet<CompIx> {
        self.faults.keys().copied().collect()
    }

    /// Runs the faulty system on the source values among `inputs`. Inside a
    /// loop with several self-consistent states, the first consistent
    /// assumption (in wire, then value order) is taken.
    pub fn truth(&self, inputs: &[Observation]) -> Result<Truth, PropagationError> {
        let mut sources = Vec::new();
        for o in inputs {
            let Some(c) = self.model.ix(o.component.as_str()) else {
                return Err(PropagationError::UnknownComponent(String::from(o.component.as_str())));
            };
            if !self.model.component(c).is_source() {
                continue;
            }
            let mut o = o.clone();
            if let Some(v) = self.faults.get(&c).filter(|f| f.active_at(o.time)).and_then(|f| f.value.clone()) {
                o.value = v;
            }
            sources.push(o);
        }
        let lookup = |c: CompIx, t: u32| self.faults.get(&c).filter(|f| f.active_at(t)).map(|f| &f.function);
        let options = PredictOptions { overrides: Some(&lookup), allow_missing_sources: false };
        let state = forward_predict_with(self.model, &sources, options)?;
        Ok(resolve(&state))
    }

    /// `inputs` plus the true value of every component output in `targets`.
    pub fn observe(
        &self,
        inputs: &[Observation],
        targets: impl IntoIterator<Item = TimedComponent>,
    ) -> Result<Vec<Observation>, PropagationError> {
        let truth = self.truth(inputs)?;
        let mut out: Vec<Observation> = inputs.to_vec();
        out.extend(targets.into_iter().filter_map(|tc| truth.observation(self.model, tc)));
        Ok(out)
    }
}

fn resolve(state: &PredictionState) -> Truth {
    let mut chosen: BTreeMap<(CompIx, u32), Value> = BTreeMap::new();
    let compatible = |chosen: &BTreeMap<(CompIx, u32), Value>, set: &[(CompIx, u32, Value)]| {
        set.iter().all(|(w, t, v)| chosen.get(&(*w, *t)).is_none_or(|x| x == v))
    };
    let mut checks: Vec<_> = state.loop_checks.iter().collect();
    checks.sort_by_key(|(tc, _)| (tc.time, tc.comp));
    for (tc, list) in checks {
        for p in list {
            let own = p.deps.assumptions.iter().find(|a| a.wire == tc.comp && a.time == tc.time);
            if own.is_some_and(|a| a.value != p.value) {
                continue;
            }
            let mut set: Vec<(CompIx, u32, Value)> =
                p.deps.assumptions.iter().map(|a| (a.wire, a.time, a.value.clone())).collect();
            if own.is_none() {
                set.push((tc.comp, tc.time, p.value.clone()));
            }
            if compatible(&chosen, &set) {
                for (w, t, v) in set {
                    chosen.insert((w, t), v);
                }
                break;
            }
        }
    }
    let mut out = BTreeMap::new();
    for (&tc, preds) in &state.predictions {
        let pick = preds.iter().find(|p| {
            p.deps.assumptions.iter().all(|a| chosen.get(&(a.wire, a.time)).is_some_and(|v| *v == a.value))
        });
        if let Some(p) = pick {
            out.insert(tc, p.value.clone());
        }
    }
    for (&tc, v) in &state.measured {
        out.insert(tc, v.clone());
    }
    Truth(out)
}
