//! Randomised invariants, checked against brute-force oracles. Each
//! property takes a case count so the acceptance run can reuse it.

use std::collections::{BTreeMap, BTreeSet};

use mbd_core::focusing::{cancelled, classify, focus_rule1, focus_rule2, focus_rule3, CancelMode};
use mbd_core::probing::{prob_any_broken, select_probe_entropy, select_probe_halving, Priors};
use mbd_core::propagation::{
    enumerate_dep_sets, evaluate_component, forward_predict, loop_predict_stateful, TcSet, TimedComponent,
};
use mbd_core::simulator::{generate, inject, pick_faults, random_boolean, run_session, Family, GeneratorConfig};
use mbd_core::{
    gates, CompIx, Component, ComponentId, DiagnosisConfig, EvidenceKind, EvidenceSet, Member, ModelBuilder,
    Observation, Rule, Strategy as ProbeStrategy, SystemModel, Value,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

/// Random small Boolean circuit with a random subset of gate outputs
/// measured at random values.
fn measured_circuit(gates: usize, seed: u64, mask: u32) -> (SystemModel, Vec<Observation>) {
    let g = random_boolean(gates, 3, seed);
    let mut obs = g.inputs.clone();
    for (i, c) in g.model.ixs().filter(|&c| !g.model.component(c).is_source()).enumerate() {
        if mask >> (2 * i) & 1 == 1 {
            obs.push(Observation::new(g.model.id(c).as_str(), 0, Value::Bool(mask >> (2 * i + 1) & 1 == 1)));
        }
    }
    (g.model, obs)
}

/// Sets closed in the sense of the dependency-set definition: the owner is
/// in the set, no other member is measured, and every member's output is
/// determined by its measured inputs together with the outputs of members
/// feeding it. Returns the subset-minimal ones.
fn minimal_closed_sets(model: &SystemModel, obs: &[Observation], owner: CompIx) -> Vec<BTreeSet<CompIx>> {
    let measured: BTreeMap<CompIx, Value> =
        obs.iter().map(|o| (model.ix(o.component.as_str()).unwrap(), o.value.clone())).collect();
    let pool: Vec<CompIx> = model.ixs().filter(|c| *c != owner && !measured.contains_key(c)).collect();
    assert!(pool.len() <= 12);
    let mut closed: Vec<BTreeSet<CompIx>> = Vec::new();
    for bits in 0u32..1 << pool.len() {
        let mut set: BTreeSet<CompIx> = (0..pool.len()).filter(|i| bits >> i & 1 == 1).map(|i| pool[i]).collect();
        set.insert(owner);
        if determined(model, &measured, &set, owner) {
            closed.push(set);
        }
    }
    closed.iter().filter(|s| !closed.iter().any(|o| o.len() < s.len() && o.is_subset(s))).cloned().collect()
}

/// Whether every member of `set` evaluates from measured inputs and other
/// members only. The owner's own measurement does not count as known.
fn determined(model: &SystemModel, measured: &BTreeMap<CompIx, Value>, set: &BTreeSet<CompIx>, owner: CompIx) -> bool {
    let mut memo: BTreeMap<CompIx, Option<Value>> = BTreeMap::new();
    set.iter().all(|&c| value_in(model, measured, set, owner, c, &mut memo).is_some())
}

fn value_in(
    model: &SystemModel,
    measured: &BTreeMap<CompIx, Value>,
    set: &BTreeSet<CompIx>,
    owner: CompIx,
    c: CompIx,
    memo: &mut BTreeMap<CompIx, Option<Value>>,
) -> Option<Value> {
    if let Some(v) = memo.get(&c) {
        return v.clone();
    }
    let comp = model.component(c);
    let out = if c != owner && measured.contains_key(&c) {
        measured.get(&c).cloned()
    } else if comp.is_source() {
        measured.get(&c).cloned()
    } else if !set.contains(&c) {
        None
    } else {
        let inputs: Vec<Option<Value>> = model
            .feeders(c)
            .iter()
            .map(|f| {
                let f = f.unwrap();
                if measured.contains_key(&f) && f != owner {
                    measured.get(&f).cloned()
                } else if set.contains(&f) {
                    value_in(model, measured, set, owner, f, memo)
                } else {
                    None
                }
            })
            .collect();
        evaluate_component(comp, comp.function_spec().unwrap(), &inputs).unwrap().map(|e| e.value)
    };
    memo.insert(c, out.clone());
    out
}

fn comps(set: &TcSet) -> BTreeSet<CompIx> {
    set.iter().map(|t| t.comp).collect()
}

fn run<S: Strategy>(cases: u32, strategy: &S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner.run(strategy, test).map_err(|e| e.to_string())
}

/// Every property, for the acceptance run.
#[allow(dead_code)]
pub const ALL: &[(&str, fn(u32) -> Result<(), String>)] = &[
    ("dep_set_chain", dep_set_chain),
    ("focused_set_is_intersection_of_minimal_dependency_sets", focused_set_is_intersection_of_minimal_dependency_sets),
    ("prob_any_broken_is_monotone", prob_any_broken_is_monotone),
    ("intermittent_cancellation_implies_non_intermittent", intermittent_cancellation_implies_non_intermittent),
    ("rule3_matches_rule1_on_static_evidence", rule3_matches_rule1_on_static_evidence),
    ("probes_split_strictly", probes_split_strictly),
    ("entropy_reaches_the_halving_optimum_on_chains", entropy_reaches_the_halving_optimum_on_chains),
    ("loop_fixed_points_are_stable", loop_fixed_points_are_stable),
    ("transcripts_are_deterministic", transcripts_are_deterministic),
];

pub fn dep_set_chain(cases: u32) -> Result<(), String> {
    run(cases, &(1usize..7, any::<u64>(), any::<u32>()), |(gates, seed, mask)| {
        let (m, obs) = measured_circuit(gates, seed, mask);
        let s = forward_predict(&m, &obs).unwrap();
        for p in s.all() {
            prop_assert!(p.deps.mask_free.is_subset(&p.deps.focused));
            prop_assert!(p.deps.focused.is_subset(&p.deps.dep));
            prop_assert!(p.deps.mask_free.contains(&p.owner));
            for t in &p.deps.dep {
                prop_assert!(*t == p.owner || !s.is_measured(*t));
            }
        }
        Ok(())
    })
}

pub fn focused_set_is_intersection_of_minimal_dependency_sets(cases: u32) -> Result<(), String> {
    run(cases, &(1usize..7, any::<u64>(), any::<u32>()), |(gates, seed, mask)| {
        let (m, obs) = measured_circuit(gates, seed, mask);
        let s = forward_predict(&m, &obs).unwrap();
        for p in s.all() {
            let oracle = minimal_closed_sets(&m, &obs, p.owner.comp);
            prop_assert!(!oracle.is_empty());
            let mut inter = oracle[0].clone();
            for o in &oracle[1..] {
                inter = inter.intersection(o).copied().collect();
            }
            prop_assert_eq!(&comps(&p.deps.focused), &inter, "owner {}", m.id(p.owner.comp));
            // Dep is one sufficient set, not necessarily a minimal one
            let measured: BTreeMap<CompIx, Value> =
                obs.iter().map(|o| (m.ix(o.component.as_str()).unwrap(), o.value.clone())).collect();
            prop_assert!(determined(&m, &measured, &comps(&p.deps.dep), p.owner.comp));
            let e = enumerate_dep_sets(&m, &obs, p.owner, 10_000).unwrap();
            let enumerated: BTreeSet<BTreeSet<CompIx>> = e.sets.iter().map(comps).collect();
            let oracle: BTreeSet<BTreeSet<CompIx>> = oracle.into_iter().collect();
            prop_assert_eq!(enumerated, oracle);
            prop_assert_eq!(e.intersection(), p.deps.focused.clone());
        }
        Ok(())
    })
}

pub fn prob_any_broken_is_monotone(cases: u32) -> Result<(), String> {
    run(cases, &(prop::collection::vec(0.0f64..0.999, 1..12), any::<u32>(), any::<u32>()), |(priors, sub, extra)| {
        let n = priors.len();
        let m = chain(n);
        let pr = Priors::from_model(&m.with_priors(&priors));
        let pick = |bits: u32| -> BTreeSet<TimedComponent> {
            (0..n).filter(|i| bits >> i & 1 == 1).map(|i| TimedComponent::new(CompIx(i as u32 + 1), 0)).collect()
        };
        let x = pick(sub);
        let y = pick(sub | extra);
        let (px, py) = (prob_any_broken(&x, &pr), prob_any_broken(&y, &pr));
        prop_assert!(px <= py + 1e-15);
        prop_assert!((0.0..1.0).contains(&px) && (0.0..1.0).contains(&py));
        prop_assert_eq!(prob_any_broken(&BTreeSet::new(), &pr), 0.0);
        Ok(())
    })
}

pub fn intermittent_cancellation_implies_non_intermittent(cases: u32) -> Result<(), String> {
    run(cases, &temporal_evidence(), |evidence| {
        for k in evidence.iter().filter(|e| e.is_conflict()) {
            for c in 0..4 {
                if cancelled(CompIx(c), k, &evidence, CancelMode::Intermittent) {
                    prop_assert!(cancelled(CompIx(c), k, &evidence, CancelMode::NonIntermittent));
                }
            }
        }
        // a conflict Rule 3 finds inconsistent in intermittent mode is also
        // inconsistent in non-intermittent mode
        if focus_rule3(&evidence, CancelMode::Intermittent).is_err() {
            prop_assert!(focus_rule3(&evidence, CancelMode::NonIntermittent).is_err());
        }
        Ok(())
    })
}

pub fn rule3_matches_rule1_on_static_evidence(cases: u32) -> Result<(), String> {
    run(cases, &(2usize..7, any::<u64>(), any::<u32>()), |(gates, seed, mask)| {
        let (m, obs) = measured_circuit(gates, seed, mask);
        let ev = classify(&m, &forward_predict(&m, &obs).unwrap());
        prop_assert_eq!(focus_rule1(&ev), focus_rule3(&ev, CancelMode::NonIntermittent));
        prop_assert_eq!(focus_rule2(&ev), mbd_core::focusing::focus_rule4(&ev, CancelMode::NonIntermittent));
        Ok(())
    })
}

pub fn probes_split_strictly(cases: u32) -> Result<(), String> {
    run(cases, &(2usize..8, any::<u64>(), any::<u64>()), |(gates, seed, fault_seed)| {
        let g = random_boolean(gates, 3, seed);
        let faulty = inject(&g.model, &pick_faults(&g, 1, fault_seed), false).unwrap();
        let sinks: Vec<_> = g.model.sinks().map(|c| TimedComponent::new(c, 0)).collect();
        let obs = faulty.observe(&g.inputs, sinks).unwrap();
        for strategy in [ProbeStrategy::EntropySplit, ProbeStrategy::Bounds, ProbeStrategy::Halving] {
            let config = DiagnosisConfig { rule: Rule::R2, strategy, ..DiagnosisConfig::default() };
            let a = mbd_core::assess(&g.model, &obs, &config).unwrap();
            let Some(advice) = a.advice else { continue };
            let dep = &a.state.unique(advice.probe).unwrap().deps.focused;
            let ok = a.focuses.focuses.iter().any(|f| {
                let fc: BTreeSet<TimedComponent> = f.members.iter().filter_map(Member::component).collect();
                let hit = fc.iter().filter(|t| dep.contains(t)).count();
                hit > 0 && hit < fc.len()
            });
            prop_assert!(ok);
            prop_assert!(!a.state.is_measured(advice.probe));
            prop_assert!((0.0..=1.0).contains(&advice.criterion_value));
            if let Some((lo, hi)) = advice.bounds {
                prop_assert!(lo <= advice.criterion_value && advice.criterion_value <= hi);
            }
        }
        Ok(())
    })
}

pub fn entropy_reaches_the_halving_optimum_on_chains(cases: u32) -> Result<(), String> {
    run(cases, &(3usize..16, 1e-5f64..1e-3), |(n, p)| {
        let m = chain(n);
        let s = forward_predict(&m, &[Observation::new("s", 0, Value::Bool(true))]).unwrap();
        let f: BTreeSet<TimedComponent> = (1..=n).map(|i| TimedComponent::new(CompIx(i as u32), 0)).collect();
        let priors = Priors::uniform(&m, p);
        let e = select_probe_entropy(&m, &f, &s, &priors).unwrap();
        let h = select_probe_halving(&m, &f, &s).unwrap();
        let left = |probe: TimedComponent| f.iter().filter(|t| !s.unique(probe).unwrap().deps.focused.contains(t)).count();
        prop_assert_eq!((2 * left(e.probe)).abs_diff(n), (2 * left(h.probe)).abs_diff(n));
        Ok(())
    })
}

pub fn loop_fixed_points_are_stable(cases: u32) -> Result<(), String> {
    run(cases, &(prop::collection::vec(0u8..4, 2..5), any::<u8>(), any::<u8>()), |(kinds, srcs, prev)| {
        let m = ring(&kinds);
        let k = kinds.len();
        let obs: Vec<_> = (0..k).map(|i| Observation::new(format!("s{i}"), 0, Value::Bool(srcs >> i & 1 == 1))).collect();
        let scc: Vec<ComponentId> = (0..k).map(|i| ComponentId::new(format!("g{i}"))).collect();
        let start: BTreeMap<ComponentId, Value> = scc.iter().enumerate().map(|(i, id)| (id.clone(), Value::Bool(prev >> i & 1 == 1))).collect();
        if let Ok(preds) = loop_predict_stateful(&m, &obs, &scc, &start, None) {
            let fixed: BTreeMap<ComponentId, Value> = preds.iter().map(|p| (m.id(p.owner.comp).clone(), p.value.clone())).collect();
            prop_assert_eq!(fixed.len(), k);
            // re-evaluating every member on the fixed point reproduces it
            for (id, v) in &fixed {
                let c = m.ix(id.as_str()).unwrap();
                let inputs: Vec<Option<Value>> = m.feeders(c).iter().map(|f| {
                    let f = f.unwrap();
                    let fid = m.id(f);
                    fixed.get(fid).cloned().or_else(|| obs.iter().find(|o| &o.component == fid).map(|o| o.value.clone()))
                }).collect();
                let comp = m.component(c);
                let e = evaluate_component(comp, comp.function_spec().unwrap(), &inputs).unwrap().unwrap();
                prop_assert_eq!(&e.value, v);
            }
            // and starting from it is a no-op
            let again = loop_predict_stateful(&m, &obs, &scc, &fixed, None).unwrap();
            let again: BTreeMap<ComponentId, Value> = again.iter().map(|p| (m.id(p.owner.comp).clone(), p.value.clone())).collect();
            prop_assert_eq!(again, fixed);
        }
        Ok(())
    })
}

pub fn transcripts_are_deterministic(cases: u32) -> Result<(), String> {
    run(cases, &(3usize..30, any::<u64>(), 1usize..4), |(n, seed, k)| {
        let g = generate(GeneratorConfig { family: Family::Dag { k }, n, seed });
        let faults = pick_faults(&g, 1, seed ^ 0x5eed);
        let run = || {
            let faulty = inject(&g.model, &faults, false).unwrap();
            let sinks: Vec<_> = g.model.sinks().map(|c| TimedComponent::new(c, 0)).collect();
            let initial = faulty.observe(&g.inputs, sinks).unwrap();
            format!("{:?}", run_session(&faulty, &DiagnosisConfig::default(), &initial).unwrap())
        };
        prop_assert_eq!(run(), run());
        Ok(())
    })
}

/// Source `s` feeding a chain of `n` buffers `g01`...
fn chain(n: usize) -> SystemModel {
    let mut b = ModelBuilder::default().component(Component::source("s"));
    let mut prev = "s".to_string();
    for i in 1..=n {
        let id = format!("g{i:02}");
        b = b.component(Component::function(id.clone(), ["in1"], gates::buf())).connect(&prev, &id, "in1");
        prev = id;
    }
    b.observe_all().build().unwrap()
}

trait WithPriors {
    fn with_priors(&self, priors: &[f64]) -> SystemModel;
}

impl WithPriors for SystemModel {
    fn with_priors(&self, priors: &[f64]) -> SystemModel {
        let mut b = ModelBuilder::default();
        for c in self.components() {
            let mut c = c.clone();
            if let Some(i) = c.id.as_str().strip_prefix('g') {
                c.prior = priors[i.parse::<usize>().unwrap() - 1].max(1e-9);
            }
            b = b.component(c);
        }
        for (from, to, port) in self.connections() {
            b = b.connect(self.id(from).as_str(), self.id(to).as_str(), port);
        }
        b.observe_all().build().unwrap()
    }
}

/// Ring of two-input gates `g0 -> g1 -> ... -> g0`, each also reading its
/// own source `s{i}`.
fn ring(kinds: &[u8]) -> SystemModel {
    let k = kinds.len();
    let mut b = ModelBuilder::default();
    for (i, kind) in kinds.iter().enumerate() {
        let spec = match kind {
            0 => gates::nand(2),
            1 => gates::nor(2),
            2 => gates::and(2),
            _ => gates::or(2),
        };
        let (g, s) = (format!("g{i}"), format!("s{i}"));
        b = b
            .component(Component::source(s.clone()))
            .component(Component::function(g.clone(), gates::ports(2), spec))
            .connect(&s, &g, "in1")
            .connect(&format!("g{}", (i + k - 1) % k), &g, "in2");
    }
    b.observe_all().build().unwrap()
}

/// Random temporal evidence over four components and four time steps.
fn temporal_evidence() -> impl Strategy<Value = Vec<EvidenceSet>> {
    let member = (0u32..4, 0u32..4).prop_map(|(c, t)| Member::Component(TimedComponent::new(CompIx(c), t)));
    let set = prop::collection::btree_set(member, 1..6);
    prop::collection::vec((any::<bool>(), set), 1..8).prop_map(|sets| {
        sets.into_iter()
            .enumerate()
            .map(|(i, (conflict, members))| EvidenceSet {
                kind: if conflict { EvidenceKind::Conflict } else { EvidenceKind::Confirmation },
                origin: TimedComponent::new(CompIx(9), i as u32),
                members: members.clone(),
                focused_members: members,
                assumptions: BTreeSet::new(),
                loop_check: false,
                predicted: Value::Bool(true),
                observed: Value::Bool(conflict),
            })
            .collect()
    })
}
