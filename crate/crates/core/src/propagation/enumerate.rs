//! Exhaustive enumeration of dependency sets, for small models and tests.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::{forward_predict, PropagationError, TcSet, TimedComponent};
use crate::model::{Observation, SystemModel};
use crate::propagation::eval::evaluate_component;
use crate::propagation::PredictionState;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepEnumeration {
    /// Minimal dependency sets, sorted.
    pub sets: Vec<TcSet>,
    /// Set when the search stopped at the limit.
    pub truncated: bool,
}

impl DepEnumeration {
    pub fn intersection(&self) -> TcSet {
        let mut it = self.sets.iter();
        let Some(first) = it.next() else {
            return TcSet::new();
        };
        it.fold(first.clone(), |acc, s| acc.intersection(s).copied().collect())
    }
}

/// Every minimal set containing `owner` that, for each unmeasured member,
/// also contains one whole determining input cover of that member.
///
/// The search explores one cover choice per member and stops once `limit`
/// distinct closed sets have been found. Requires a loop-free model.
pub fn enumerate_dep_sets(
    model: &SystemModel,
    observations: &[Observation],
    owner: TimedComponent,
    limit: usize,
) -> Result<DepEnumeration, PropagationError> {
    let state = forward_predict(model, observations)?;
    if state.get(owner).is_empty() {
        return Ok(DepEnumeration { sets: Vec::new(), truncated: false });
    }
    let mut covers: BTreeMap<TimedComponent, Vec<Vec<TimedComponent>>> = BTreeMap::new();
    let mut found: BTreeSet<TcSet> = BTreeSet::new();
    let mut truncated = false;
    let mut start = TcSet::new();
    start.insert(owner);
    let mut stack: Vec<(TcSet, Vec<TimedComponent>)> = alloc::vec![(start, alloc::vec![owner])];
    while let Some((set, mut pending)) = stack.pop() {
        let Some(next) = pending.pop() else {
            found.insert(set);
            if found.len() >= limit {
                truncated = !stack.is_empty();
                break;
            }
            continue;
        };
        if !covers.contains_key(&next) {
            let list = covers_of(model, &state, next)?;
            covers.insert(next, list);
        }
        for cover in covers[&next].iter().rev() {
            let mut s = set.clone();
            let mut p = pending.clone();
            for &m in cover {
                if s.insert(m) {
                    p.push(m);
                }
            }
            stack.push((s, p));
        }
    }
    let all: Vec<TcSet> = found.into_iter().collect();
    let sets = all
        .iter()
        .filter(|s| !all.iter().any(|o| o != *s && o.is_subset(s)))
        .cloned()
        .collect();
    Ok(DepEnumeration { sets, truncated })
}

/// Determining input covers of `tc` as timed feeders, measured ones left out.
fn covers_of(
    model: &SystemModel,
    state: &PredictionState,
    tc: TimedComponent,
) -> Result<Vec<Vec<TimedComponent>>, PropagationError> {
    let comp = model.component(tc.comp);
    let delay = comp.delay();
    let Some(spec) = comp.function_spec() else {
        return Ok(alloc::vec![Vec::new()]);
    };
    if tc.time < delay {
        return Ok(alloc::vec![Vec::new()]);
    }
    let ti = tc.time - delay;
    let mut feeders = Vec::new();
    let mut values: Vec<Option<Value>> = Vec::new();
    for f in model.feeders(tc.comp) {
        let Some(f) = f else {
            feeders.push(None);
            values.push(None);
            continue;
        };
        let ftc = TimedComponent::new(*f, ti);
        let v = match state.measured.get(&ftc) {
            Some(v) => Some(v.clone()),
            None => match state.get(ftc) {
                [] => None,
                [p] => Some(p.value.clone()),
                _ => {
                    return Err(PropagationError::Ambiguous {
                        component: String::from(model.id(*f).as_str()),
                        time: ti,
                    })
                }
            },
        };
        feeders.push(Some(ftc));
        values.push(v);
    }
    let eval = evaluate_component(comp, spec, &values).map_err(|source| PropagationError::Eval {
        component: String::from(comp.id.as_str()),
        time: tc.time,
        source,
    })?;
    let Some(e) = eval else {
        return Ok(Vec::new());
    };
    Ok(e.gamma
        .iter()
        .map(|g| {
            g.iter()
                .filter_map(|&p| feeders[p])
                .filter(|ftc| !state.measured.contains_key(ftc))
                .collect()
        })
        .collect())
}
