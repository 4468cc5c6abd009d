//! The per-time-step forward propagation loop.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    loops, names, Assumption, DepSets, Origin, PredictOptions, Prediction, PredictionState, PropagationError,
    TcSet, TimedComponent,
};
use crate::graph;
use crate::model::{CompIx, Component, FunctionSpec, SystemModel};
use crate::propagation::eval::evaluate_component;
use crate::value::Value;

static EMPTY_TC: TcSet = BTreeSet::new();
static EMPTY_ASSUMPTIONS: BTreeSet<Assumption> = BTreeSet::new();

/// A loop to solve by fixed-point iteration at time 0 from a given state.
pub(super) struct ForcedLoop {
    pub members: Vec<CompIx>,
    pub previous: BTreeMap<CompIx, Value>,
    pub max_iters: Option<usize>,
}

#[derive(Clone, Copy)]
enum Input<'p> {
    Measured(&'p Value),
    Pred(&'p Prediction),
}

impl<'p> Input<'p> {
    fn value(self) -> &'p Value {
        match self {
            Input::Measured(v) => v,
            Input::Pred(p) => &p.value,
        }
    }

    fn dep(self) -> &'p TcSet {
        match self {
            Input::Measured(_) => &EMPTY_TC,
            Input::Pred(p) => &p.deps.dep,
        }
    }

    fn focused(self) -> &'p TcSet {
        match self {
            Input::Measured(_) => &EMPTY_TC,
            Input::Pred(p) => &p.deps.focused,
        }
    }

    fn mask_free(self) -> &'p TcSet {
        match self {
            Input::Measured(_) => &EMPTY_TC,
            Input::Pred(p) => &p.deps.mask_free,
        }
    }

    fn assumptions(self) -> &'p BTreeSet<Assumption> {
        match self {
            Input::Measured(_) => &EMPTY_ASSUMPTIONS,
            Input::Pred(p) => &p.deps.assumptions,
        }
    }
}

pub(super) struct Engine<'a> {
    model: &'a SystemModel,
    options: PredictOptions<'a>,
    measured_map: BTreeMap<TimedComponent, Value>,
    /// `measured[t][c]`
    measured: Vec<Vec<Option<Value>>>,
    /// `preds[t][c]`
    preds: Vec<Vec<Vec<Prediction>>>,
    checks: BTreeMap<TimedComponent, Vec<Prediction>>,
    forced: Option<ForcedLoop>,
    forced_used: bool,
}

impl<'a> Engine<'a> {
    pub fn new(
        model: &'a SystemModel,
        measured_map: BTreeMap<TimedComponent, Value>,
        options: PredictOptions<'a>,
        forced: Option<ForcedLoop>,
    ) -> Self {
        let h = model.time_horizon as usize;
        let n = model.len();
        let mut measured = vec![vec![None; n]; h];
        for (tc, v) in &measured_map {
            measured[tc.time as usize][tc.comp.ix()] = Some(v.clone());
        }
        Engine {
            model,
            options,
            measured_map,
            measured,
            preds: vec![vec![Vec::new(); n]; h],
            checks: BTreeMap::new(),
            forced,
            forced_used: false,
        }
    }

    pub fn run(mut self) -> Result<PredictionState, PropagationError> {
        for t in 0..self.model.time_horizon {
            self.step(t)?;
        }
        if let Some(forced) = &self.forced {
            if !self.forced_used {
                return Err(PropagationError::NotALoop(names(self.model, forced.members.iter().copied())));
            }
        }
        let mut predictions = BTreeMap::new();
        for (t, row) in self.preds.into_iter().enumerate() {
            for (c, list) in row.into_iter().enumerate() {
                if !list.is_empty() {
                    predictions.insert(TimedComponent::new(CompIx(c as u32), t as u32), list);
                }
            }
        }
        Ok(PredictionState {
            predictions,
            measured: self.measured_map,
            loop_checks: self.checks,
            horizon: self.model.time_horizon,
        })
    }

    fn step(&mut self, t: u32) -> Result<(), PropagationError> {
        let model = self.model;
        for s in model.sources() {
            let list = self.source_prediction(s, t)?;
            self.preds[t as usize][s.ix()] = list;
        }
        let adj = self.step_graph(t);
        for comp in graph::scc(&adj) {
            let first = CompIx(comp[0] as u32);
            if comp.len() == 1 && model.component(first).is_source() {
                continue;
            }
            if !graph::is_loop(&adj, &comp) {
                let list = self.compute(first, t, None)?;
                self.preds[t as usize][first.ix()] = list;
                continue;
            }
            self.solve_loop(&comp, &adj, t)?;
        }
        Ok(())
    }

    /// Same-step dependency edges feeder -> consumer. Edges out of measured
    /// outputs and into delayed inputs are left out.
    fn step_graph(&self, t: u32) -> Vec<Vec<usize>> {
        let model = self.model;
        let mut adj = vec![Vec::new(); model.len()];
        for c in model.ixs() {
            let comp = model.component(c);
            if comp.is_source() || comp.delay() > 0 {
                continue;
            }
            for f in model.feeders(c).iter().flatten() {
                if model.component(*f).is_source() || self.measured[t as usize][f.ix()].is_some() {
                    continue;
                }
                adj[f.ix()].push(c.ix());
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    fn source_prediction(&self, s: CompIx, t: u32) -> Result<Vec<Prediction>, PropagationError> {
        match &self.measured[t as usize][s.ix()] {
            Some(v) => Ok(vec![own_prediction(TimedComponent::new(s, t), v.clone())]),
            None if self.options.allow_missing_sources => Ok(Vec::new()),
            None => Err(PropagationError::MissingSource { component: self.name(s), time: t }),
        }
    }

    fn name(&self, c: CompIx) -> String {
        String::from(self.model.id(c).as_str())
    }

    fn function(&self, c: CompIx, t: u32) -> &'a FunctionSpec {
        if let Some(f) = self.options.overrides.and_then(|o| o(c, t)) {
            return f;
        }
        self.model.component(c).function_spec().expect("non-source component has a function")
    }

    /// All predictions for `c` at `t`, one per compatible combination of
    /// input predictions. `local` supplies in-loop inputs during fixed-point
    /// sweeps.
    fn compute(
        &self,
        c: CompIx,
        t: u32,
        local: Option<&BTreeMap<CompIx, Prediction>>,
    ) -> Result<Vec<Prediction>, PropagationError> {
        let model = self.model;
        let comp = model.component(c);
        let owner = TimedComponent::new(c, t);
        let delay = comp.delay();
        if t < delay {
            let initial = comp.stateful.as_ref().and_then(|s| s.initial.clone());
            return Ok(initial.map(|v| own_prediction(owner, v)).into_iter().collect());
        }
        let spec = self.function(c, t);
        let ti = (t - delay) as usize;
        let options: Vec<Vec<Input<'_>>> = model
            .feeders(c)
            .iter()
            .map(|feeder| match feeder {
                None => Vec::new(),
                Some(f) => {
                    if let Some(v) = &self.measured[ti][f.ix()] {
                        vec![Input::Measured(v)]
                    } else if let Some(p) = local.filter(|_| delay == 0).and_then(|l| l.get(f)) {
                        vec![Input::Pred(p)]
                    } else {
                        self.preds[ti][f.ix()].iter().map(Input::Pred).collect()
                    }
                }
            })
            .collect();

        let mut out: Vec<Prediction> = Vec::new();
        let mut idx = vec![0usize; options.len()];
        loop {
            let chosen: Vec<Option<Input<'_>>> = options.iter().zip(&idx).map(|(o, &i)| o.get(i).copied()).collect();
            if compatible(&chosen) {
                if let Some(p) = self.derive(comp, spec, owner, &chosen)? {
                    if !out.contains(&p) {
                        out.push(p);
                    }
                }
            }
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return Ok(out);
                }
                idx[k] += 1;
                if idx[k] < options[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    fn derive(
        &self,
        comp: &Component,
        spec: &FunctionSpec,
        owner: TimedComponent,
        chosen: &[Option<Input<'_>>],
    ) -> Result<Option<Prediction>, PropagationError> {
        let values: Vec<Option<Value>> = chosen.iter().map(|i| i.map(|x| x.value().clone())).collect();
        let eval = evaluate_component(comp, spec, &values).map_err(|source| PropagationError::Eval {
            component: String::from(comp.id.as_str()),
            time: owner.time,
            source,
        })?;
        let Some(e) = eval else {
            if values.iter().all(Option::is_some) {
                return Err(PropagationError::Undetermined {
                    component: String::from(comp.id.as_str()),
                    time: owner.time,
                });
            }
            return Ok(None);
        };
        let mut dep = TcSet::new();
        dep.insert(owner);
        let mut assumptions = BTreeSet::new();
        for r in &spec.branches[e.fired].reads {
            let p = comp.port_index(r).expect("branch reads a declared port");
            let input = chosen[p].expect("fired branch inputs are known");
            dep.extend(input.dep().iter().copied());
            assumptions.extend(input.assumptions().iter().cloned());
        }
        let focused = intersect_covers(owner, &e.gamma, None, |p| chosen[p].expect("cover input").focused());
        let mask_free =
            intersect_covers(owner, &e.gamma, Some(&e.non_masking), |p| chosen[p].expect("cover input").mask_free());
        Ok(Some(Prediction {
            owner,
            value: e.value,
            deps: DepSets { dep, focused, mask_free, assumptions },
            origin: Origin::Derived,
        }))
    }

    fn solve_loop(&mut self, comp: &[usize], adj: &[Vec<usize>], t: u32) -> Result<(), PropagationError> {
        let members: Vec<CompIx> = comp.iter().map(|&c| CompIx(c as u32)).collect();
        if let Some(forced) = &self.forced {
            if t == 0 && forced.members == members {
                let previous = forced.previous.clone();
                let max_iters = forced.max_iters;
                self.forced_used = true;
                return self.fixed_point(&members, previous, max_iters, t);
            }
        }
        if t > 0 {
            if let Some(previous) = self.previous_state(&members, t) {
                if self.external_inputs_unique(&members, t) {
                    return self.fixed_point(&members, previous, None, t);
                }
            }
        }
        self.assume(comp, adj, t)
    }

    /// Loop wire values at `t - 1`, when each is measured or uniquely
    /// predicted without assumptions.
    fn previous_state(&self, members: &[CompIx], t: u32) -> Option<BTreeMap<CompIx, Value>> {
        let prev = (t - 1) as usize;
        let mut out = BTreeMap::new();
        for &m in members {
            let v = match &self.measured[prev][m.ix()] {
                Some(v) => v.clone(),
                None => match self.preds[prev][m.ix()].as_slice() {
                    [p] if p.deps.assumptions.is_empty() => p.value.clone(),
                    _ => return None,
                },
            };
            out.insert(m, v);
        }
        Some(out)
    }

    fn external_inputs_unique(&self, members: &[CompIx], t: u32) -> bool {
        members.iter().all(|&m| {
            self.model.feeders(m).iter().flatten().all(|f| {
                members.contains(f)
                    || self.measured[t as usize][f.ix()].is_some()
                    || self.preds[t as usize][f.ix()].len() <= 1
            })
        })
    }

    /// Synchronous sweeps from `previous` until values and sets repeat.
    fn fixed_point(
        &mut self,
        members: &[CompIx],
        previous: BTreeMap<CompIx, Value>,
        max_iters: Option<usize>,
        t: u32,
    ) -> Result<(), PropagationError> {
        let mut current: BTreeMap<CompIx, Prediction> = previous
            .into_iter()
            .map(|(c, value)| {
                let p = Prediction {
                    owner: TimedComponent::new(c, t),
                    value,
                    deps: DepSets::default(),
                    origin: Origin::Derived,
                };
                (c, p)
            })
            .collect();
        let limit = max_iters.unwrap_or(2 * members.len() + 2);
        for _ in 0..limit {
            let mut next = BTreeMap::new();
            for &m in members {
                let mut list = self.compute(m, t, Some(&current))?;
                if list.len() != 1 {
                    return Err(PropagationError::Undetermined { component: self.name(m), time: t });
                }
                next.insert(m, list.pop().expect("one prediction"));
            }
            if next == current {
                for (m, p) in current {
                    self.preds[t as usize][m.ix()] = vec![p];
                }
                return Ok(());
            }
            current = next;
        }
        Err(PropagationError::NoFixedPoint {
            members: names(self.model, members.iter().copied()),
            iterations: limit,
        })
    }

    /// Assumes every value of each cut wire and propagates round the loop.
    fn assume(&mut self, comp: &[usize], adj: &[Vec<usize>], t: u32) -> Result<(), PropagationError> {
        let model = self.model;
        let cuts = loops::choose_cuts(model, comp, adj).map_err(|stuck| PropagationError::NonFiniteAssumption {
            members: names(model, stuck.into_iter().map(|c| CompIx(c as u32))),
        })?;
        for &w in &cuts {
            let wire = CompIx(w as u32);
            let owner = TimedComponent::new(wire, t);
            let values = model.component(wire).domain.finite_values().expect("cut wires have finite domains");
            self.preds[t as usize][w] = values
                .into_iter()
                .map(|value| {
                    let mut deps = DepSets::default();
                    deps.assumptions.insert(Assumption { wire, time: t, value: value.clone() });
                    Prediction { owner, value, deps, origin: Origin::Assumed }
                })
                .collect();
        }
        let local: Vec<Vec<usize>> = comp
            .iter()
            .map(|&u| {
                if cuts.contains(&u) {
                    return Vec::new();
                }
                adj[u].iter().filter_map(|v| comp.binary_search(v).ok()).collect()
            })
            .collect();
        for group in graph::scc(&local) {
            debug_assert_eq!(group.len(), 1);
            for l in group {
                let c = CompIx(comp[l] as u32);
                let list = self.compute(c, t, None)?;
                if cuts.contains(&comp[l]) {
                    self.checks.insert(TimedComponent::new(c, t), list);
                } else {
                    self.preds[t as usize][c.ix()] = list;
                }
            }
        }
        Ok(())
    }
}

fn own_prediction(owner: TimedComponent, value: Value) -> Prediction {
    let mut own = TcSet::new();
    own.insert(owner);
    Prediction {
        owner,
        value,
        deps: DepSets { dep: own.clone(), focused: own.clone(), mask_free: own, assumptions: BTreeSet::new() },
        origin: Origin::Derived,
    }
}

/// Inputs drawn from different families of the same assumed wire cannot be
/// combined.
fn compatible(chosen: &[Option<Input<'_>>]) -> bool {
    let mut seen: BTreeMap<(CompIx, u32), &Value> = BTreeMap::new();
    for input in chosen.iter().flatten() {
        for a in input.assumptions() {
            match seen.get(&(a.wire, a.time)) {
                Some(v) if **v != a.value => return false,
                Some(_) => {}
                None => {
                    seen.insert((a.wire, a.time), &a.value);
                }
            }
        }
    }
    true
}

/// `{owner} ∪ ⋂_i ⋃_{p ∈ gamma_i} sets(p)`, with ports outside `allowed`
/// contributing nothing.
fn intersect_covers<'s>(
    owner: TimedComponent,
    gamma: &[BTreeSet<usize>],
    allowed: Option<&BTreeSet<usize>>,
    sets: impl Fn(usize) -> &'s TcSet,
) -> TcSet {
    let mut acc: Option<TcSet> = None;
    for cover in gamma {
        let mut delta = TcSet::new();
        for &p in cover {
            if allowed.is_none_or(|a| a.contains(&p)) {
                delta.extend(sets(p).iter().copied());
            }
        }
        let next = match acc {
            None => delta,
            Some(prev) => prev.intersection(&delta).copied().collect(),
        };
        let empty = next.is_empty();
        acc = Some(next);
        if empty {
            break;
        }
    }
    let mut out = acc.unwrap_or_default();
    out.insert(owner);
    out
}
