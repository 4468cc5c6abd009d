//! Conflict and confirmation evidence, and the focusing rules.
//!
//! A measured output that contradicts its prediction yields a conflict: at
//! least one member of its dependency set is broken. One that agrees yields
//! a confirmation: members of its mask-free set are probably fine. The
//! rules turn this evidence into focuses, small sets that probably contain
//! exactly one broken component each.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{CompIx, SystemModel};
use crate::propagation::{Assumption, Prediction, PredictionState, TcSet, TimedComponent};
use crate::value::Value;

/// An element of evidence or of a focus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Member {
    Component(TimedComponent),
    Assumption(Assumption),
}

impl Member {
    pub fn component(&self) -> Option<TimedComponent> {
        match self {
            Member::Component(t) => Some(*t),
            Member::Assumption(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EvidenceKind {
    Conflict,
    Confirmation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceSet {
    pub kind: EvidenceKind,
    pub origin: TimedComponent,
    /// `K` for conflicts, `B` for confirmations; assumptions included.
    pub members: BTreeSet<Member>,
    /// `K^f` for conflicts; equal to `members` for confirmations.
    pub focused_members: BTreeSet<Member>,
    pub assumptions: BTreeSet<Assumption>,
    /// Raised by an assumed loop wire disagreeing with (or confirming) the
    /// value predicted for it round the loop.
    pub loop_check: bool,
    pub predicted: Value,
    pub observed: Value,
}

impl EvidenceSet {
    pub fn is_conflict(&self) -> bool {
        self.kind == EvidenceKind::Conflict
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Focus {
    pub members: BTreeSet<Member>,
    pub score: i64,
    /// Set for focuses derived while assuming this member broken.
    pub under_assumed_broken: Option<Member>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FocusSet {
    pub focuses: Vec<Focus>,
}

impl FocusSet {
    pub fn is_empty(&self) -> bool {
        self.focuses.is_empty()
    }

    pub fn len(&self) -> usize {
        self.focuses.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FocusError {
    /// Every member of a focused conflict set is confirmed or cancelled.
    #[error("every member of the focused conflict set of {origin:?} is confirmed or cancelled")]
    InconsistentEvidence { origin: TimedComponent },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CancelMode {
    NonIntermittent,
    Intermittent,
}

fn members_of(set: &TcSet, assumptions: &BTreeSet<Assumption>) -> BTreeSet<Member> {
    set.iter()
        .copied()
        .map(Member::Component)
        .chain(assumptions.iter().cloned().map(Member::Assumption))
        .collect()
}

fn evidence_from(
    prediction: &Prediction,
    origin: TimedComponent,
    observed: &Value,
    agrees: bool,
    assumptions: BTreeSet<Assumption>,
    loop_check: bool,
) -> EvidenceSet {
    let d = &prediction.deps;
    if agrees {
        let b = members_of(&d.mask_free, &assumptions);
        EvidenceSet {
            kind: EvidenceKind::Confirmation,
            origin,
            members: b.clone(),
            focused_members: b,
            assumptions,
            loop_check,
            predicted: prediction.value.clone(),
            observed: observed.clone(),
        }
    } else {
        EvidenceSet {
            kind: EvidenceKind::Conflict,
            origin,
            members: members_of(&d.dep, &assumptions),
            focused_members: members_of(&d.focused, &assumptions),
            assumptions,
            loop_check,
            predicted: prediction.value.clone(),
            observed: observed.clone(),
        }
    }
}

/// Evidence for every measured non-source output and every assumed loop
/// wire, ordered by time, then origin, with loop checks last.
pub fn classify(model: &SystemModel, state: &PredictionState) -> Vec<EvidenceSet> {
    let mut out = Vec::new();
    for (&tc, observed) in &state.measured {
        let comp = model.component(tc.comp);
        if comp.is_source() {
            continue;
        }
        for p in state.get(tc) {
            let agrees = comp.domain.matches(&p.value, observed);
            out.push(evidence_from(p, tc, observed, agrees, p.deps.assumptions.clone(), false));
        }
    }
    for (&tc, checks) in &state.loop_checks {
        let comp = model.component(tc.comp);
        for p in checks {
            let own = p.deps.assumptions.iter().find(|a| a.wire == tc.comp && a.time == tc.time);
            let assumed: Vec<Value> = match own {
                Some(a) => alloc::vec![a.value.clone()],
                None => comp.domain.finite_values().unwrap_or_default(),
            };
            for v in assumed {
                let mut assumptions = p.deps.assumptions.clone();
                assumptions.insert(Assumption { wire: tc.comp, time: tc.time, value: v.clone() });
                let agrees = comp.domain.matches(&p.value, &v);
                out.push(evidence_from(p, tc, &v, agrees, assumptions, true));
            }
        }
    }
    out.sort_by_key(|e| (e.origin.time, e.origin.comp, e.loop_check));
    out
}

/// Interned view of the focused evidence.
struct Index {
    members: Vec<Member>,
    conflicts: Vec<(TimedComponent, Vec<usize>)>,
    confirmations: Vec<Vec<usize>>,
}

/// Dense ids for members: components through a per-component table of
/// times, assumptions through an ordered map.
#[derive(Default)]
struct Interner<'e> {
    by_comp: Vec<Vec<(u32, usize)>>,
    others: BTreeMap<&'e Member, usize>,
    members: Vec<Member>,
}

impl<'e> Interner<'e> {
    fn id(&mut self, m: &'e Member) -> usize {
        let next = self.members.len();
        let id = match m {
            Member::Component(tc) => {
                let slot = tc.comp.0 as usize;
                if slot >= self.by_comp.len() {
                    self.by_comp.resize_with(slot + 1, Vec::new);
                }
                let times = &mut self.by_comp[slot];
                match times.iter().find(|(t, _)| *t == tc.time) {
                    Some(&(_, id)) => id,
                    None => {
                        times.push((tc.time, next));
                        next
                    }
                }
            }
            Member::Assumption(_) => *self.others.entry(m).or_insert(next),
        };
        if id == next {
            self.members.push(m.clone());
        }
        id
    }

    fn intern(&mut self, set: &'e BTreeSet<Member>) -> Vec<usize> {
        set.iter().map(|m| self.id(m)).collect()
    }
}

impl Index {
    fn new<'e>(evidence: impl IntoIterator<Item = &'e EvidenceSet>) -> Self {
        let mut interner = Interner::default();
        let mut conflicts = Vec::new();
        let mut confirmations = Vec::new();
        for e in evidence {
            let set = interner.intern(&e.focused_members);
            match e.kind {
                EvidenceKind::Conflict => conflicts.push((e.origin, set)),
                EvidenceKind::Confirmation => confirmations.push(set),
            }
        }
        Index { members: interner.members, conflicts, confirmations }
    }

    fn conflict_counts(&self) -> Vec<i64> {
        let mut count = alloc::vec![0i64; self.members.len()];
        for (_, k) in &self.conflicts {
            for &m in k {
                count[m] += 1;
            }
        }
        count
    }

    fn confirmation_counts(&self) -> Vec<i64> {
        let mut count = alloc::vec![0i64; self.members.len()];
        for b in &self.confirmations {
            for &m in b {
                count[m] += 1;
            }
        }
        count
    }

    fn focus(&self, chosen: impl IntoIterator<Item = usize>, score: i64) -> Focus {
        Focus {
            members: chosen.into_iter().map(|m| self.members[m].clone()).collect(),
            score,
            under_assumed_broken: None,
        }
    }
}

/// Members of `k` passing `keep` that maximise `score`.
fn argmax(k: &[usize], keep: impl Fn(usize) -> bool, score: impl Fn(usize) -> i64) -> Option<(Vec<usize>, i64)> {
    let mut best: Option<i64> = None;
    let mut chosen = Vec::new();
    for &m in k {
        if !keep(m) {
            continue;
        }
        let s = score(m);
        match best {
            Some(b) if s < b => {}
            Some(b) if s == b => chosen.push(m),
            _ => {
                best = Some(s);
                chosen.clear();
                chosen.push(m);
            }
        }
    }
    best.map(|b| (chosen, b))
}

/// Rule 1: within each focused conflict set, the members in no confirmation
/// set that occur in the most other focused conflict sets.
pub fn focus_rule1(evidence: &[EvidenceSet]) -> Result<FocusSet, FocusError> {
    let ix = Index::new(evidence);
    let count = ix.conflict_counts();
    let confirmed = ix.confirmation_counts();
    let mut focuses = Vec::with_capacity(ix.conflicts.len());
    for (origin, k) in &ix.conflicts {
        let (chosen, score) = argmax(k, |m| confirmed[m] == 0, |m| count[m] - 1)
            .ok_or(FocusError::InconsistentEvidence { origin: *origin })?;
        focuses.push(ix.focus(chosen, score));
    }
    Ok(minimize(focuses))
}

/// Rule 2: within each focused conflict set, the members maximising
/// (focused conflict sets containing them) minus (confirmation sets
/// containing them). Assumptions are scored on conflicts alone.
pub fn focus_rule2(evidence: &[EvidenceSet]) -> FocusSet {
    let ix = Index::new(evidence);
    let count = ix.conflict_counts();
    let confirmed = ix.confirmation_counts();
    let score = |m: usize| match ix.members[m] {
        Member::Component(_) => count[m] - confirmed[m],
        Member::Assumption(_) => count[m],
    };
    let focuses = ix
        .conflicts
        .iter()
        .filter_map(|(_, k)| argmax(k, |_| true, score).map(|(chosen, s)| ix.focus(chosen, s)))
        .collect();
    minimize(focuses)
}

/// Whether `comp` is cancelled for the focused conflict set `kf`.
///
/// Non-intermittent: every `<comp, t1>` in `kf` has some confirmation set
/// holding `<comp, t4>` with `t1 <= t4`. Intermittent: every `<comp, t1>`
/// in `kf` is itself in some confirmation set.
pub fn cancelled<'e>(
    comp: CompIx,
    kf: &EvidenceSet,
    confirmations: impl IntoIterator<Item = &'e EvidenceSet> + Clone,
    mode: CancelMode,
) -> bool {
    let times: Vec<u32> = times_of(comp, &kf.focused_members);
    if times.is_empty() {
        return false;
    }
    times.iter().all(|&t1| {
        confirmations.clone().into_iter().filter(|b| !b.is_conflict()).any(|b| {
            times_of(comp, &b.focused_members).into_iter().any(|t4| match mode {
                CancelMode::NonIntermittent => t1 <= t4,
                CancelMode::Intermittent => t1 == t4,
            })
        })
    })
}

fn times_of(comp: CompIx, set: &BTreeSet<Member>) -> Vec<u32> {
    set.iter()
        .filter_map(|m| match m {
            Member::Component(t) if t.comp == comp => Some(t.time),
            _ => None,
        })
        .collect()
}

/// Component-level view of the evidence for Rules 3 and 4.
struct Temporal<'e> {
    conflicts: Vec<&'e EvidenceSet>,
    confirmations: Vec<&'e EvidenceSet>,
    /// Conflicts containing the component at any time.
    conflict_count: BTreeMap<CompIx, i64>,
    assumption_conflicts: BTreeMap<&'e Assumption, i64>,
    confirmed_assumptions: BTreeSet<&'e Assumption>,
    /// Per component: for each confirmation holding it, its times there.
    confirmation_times: BTreeMap<CompIx, Vec<Vec<u32>>>,
}

/// A member of a focused conflict set at component granularity.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Unit<'e> {
    Comp(CompIx),
    Assumed(&'e Assumption),
}

impl<'e> Temporal<'e> {
    fn new(evidence: &'e [EvidenceSet]) -> Self {
        let mut t = Temporal {
            conflicts: Vec::new(),
            confirmations: Vec::new(),
            conflict_count: BTreeMap::new(),
            assumption_conflicts: BTreeMap::new(),
            confirmed_assumptions: BTreeSet::new(),
            confirmation_times: BTreeMap::new(),
        };
        for e in evidence {
            let mut times: BTreeMap<CompIx, Vec<u32>> = BTreeMap::new();
            for m in &e.focused_members {
                match m {
                    Member::Component(tc) => times.entry(tc.comp).or_default().push(tc.time),
                    Member::Assumption(a) => {
                        if e.is_conflict() {
                            *t.assumption_conflicts.entry(a).or_default() += 1;
                        } else {
                            t.confirmed_assumptions.insert(a);
                        }
                    }
                }
            }
            if e.is_conflict() {
                for c in times.keys() {
                    *t.conflict_count.entry(*c).or_default() += 1;
                }
                t.conflicts.push(e);
            } else {
                for (c, ts) in times {
                    t.confirmation_times.entry(c).or_default().push(ts);
                }
                t.confirmations.push(e);
            }
        }
        t
    }

    fn units(kf: &'e EvidenceSet) -> BTreeMap<Unit<'e>, Vec<&'e Member>> {
        let mut out: BTreeMap<Unit<'e>, Vec<&'e Member>> = BTreeMap::new();
        for m in &kf.focused_members {
            let u = match m {
                Member::Component(tc) => Unit::Comp(tc.comp),
                Member::Assumption(a) => Unit::Assumed(a),
            };
            out.entry(u).or_default().push(m);
        }
        out
    }

    /// Number of confirmation sets that on their own cancel `comp` for a
    /// conflict holding it at `times`.
    fn cancelling(&self, comp: CompIx, times: &[u32], mode: CancelMode) -> i64 {
        let Some(per_b) = self.confirmation_times.get(&comp) else {
            return 0;
        };
        per_b
            .iter()
            .filter(|b_times| {
                times.iter().all(|&t1| {
                    b_times.iter().any(|&t4| match mode {
                        CancelMode::NonIntermittent => t1 <= t4,
                        CancelMode::Intermittent => t1 == t4,
                    })
                })
            })
            .count() as i64
    }

    fn is_cancelled(&self, comp: CompIx, times: &[u32], mode: CancelMode) -> bool {
        let Some(per_b) = self.confirmation_times.get(&comp) else {
            return false;
        };
        times.iter().all(|&t1| {
            per_b.iter().flatten().any(|&t4| match mode {
                CancelMode::NonIntermittent => t1 <= t4,
                CancelMode::Intermittent => t1 == t4,
            })
        })
    }
}

fn unit_times(members: &[&Member]) -> Vec<u32> {
    members.iter().filter_map(|m| m.component()).map(|t| t.time).collect()
}

fn choose_units<'e>(
    units: &BTreeMap<Unit<'e>, Vec<&'e Member>>,
    keep: impl Fn(&Unit<'e>, &[&'e Member]) -> bool,
    score: impl Fn(&Unit<'e>, &[&'e Member]) -> i64,
) -> Option<Focus> {
    let mut best: Option<i64> = None;
    let mut chosen: Vec<&Member> = Vec::new();
    for (u, ms) in units {
        if !keep(u, ms) {
            continue;
        }
        let s = score(u, ms);
        match best {
            Some(b) if s < b => {}
            Some(b) if s == b => chosen.extend(ms.iter().copied()),
            _ => {
                best = Some(s);
                chosen.clear();
                chosen.extend(ms.iter().copied());
            }
        }
    }
    best.map(|score| Focus { members: chosen.into_iter().cloned().collect(), score, under_assumed_broken: None })
}

/// Rule 3: like Rule 1, with "not cancelled for this conflict" in place of
/// "in no confirmation set". Works per component; the focus holds every
/// time-indexed occurrence of the chosen components in the seeding set.
pub fn focus_rule3(evidence: &[EvidenceSet], mode: CancelMode) -> Result<FocusSet, FocusError> {
    let t = Temporal::new(evidence);
    let mut focuses = Vec::new();
    for kf in &t.conflicts {
        let units = Temporal::units(kf);
        let focus = choose_units(
            &units,
            |u, ms| match u {
                Unit::Comp(c) => !t.is_cancelled(*c, &unit_times(ms), mode),
                Unit::Assumed(a) => !t.confirmed_assumptions.contains(a),
            },
            |u, _| match u {
                Unit::Comp(c) => t.conflict_count[c] - 1,
                Unit::Assumed(a) => t.assumption_conflicts[a] - 1,
            },
        )
        .ok_or(FocusError::InconsistentEvidence { origin: kf.origin })?;
        focuses.push(focus);
    }
    Ok(minimize(focuses))
}

/// Rule 4: like Rule 2, subtracting the number of confirmation sets that
/// cancel the component for this conflict.
pub fn focus_rule4(evidence: &[EvidenceSet], mode: CancelMode) -> FocusSet {
    let t = Temporal::new(evidence);
    let focuses = t
        .conflicts
        .iter()
        .filter_map(|kf| {
            let units = Temporal::units(kf);
            choose_units(
                &units,
                |_, _| true,
                |u, ms| match u {
                    Unit::Comp(c) => t.conflict_count[c] - t.cancelling(*c, &unit_times(ms), mode),
                    Unit::Assumed(a) => t.assumption_conflicts[a],
                },
            )
        })
        .collect();
    minimize(focuses)
}

/// Extra focuses assuming `e` broken: conflicts holding `e` are explained,
/// and confirmations holding `e` turn into conflicts over their members
/// outside those explained conflicts. Returns `None` when `e` is in no
/// confirmation set.
pub fn supplementary_focus(e: &Member, evidence: &[EvidenceSet]) -> Option<FocusSet> {
    if !evidence.iter().any(|x| !x.is_conflict() && x.focused_members.contains(e)) {
        return None;
    }
    let delta: BTreeSet<&Member> = evidence
        .iter()
        .filter(|x| x.is_conflict() && x.focused_members.contains(e))
        .flat_map(|x| x.focused_members.iter())
        .collect();
    let mut transformed = Vec::new();
    for x in evidence {
        let contains = x.focused_members.contains(e);
        let set: BTreeSet<Member> = match (x.kind, contains) {
            (EvidenceKind::Conflict, false) => x.focused_members.clone(),
            (EvidenceKind::Confirmation, true) => {
                x.focused_members.iter().filter(|m| !delta.contains(m)).cloned().collect()
            }
            _ => continue,
        };
        if set.is_empty() {
            continue;
        }
        transformed.push(EvidenceSet {
            kind: EvidenceKind::Conflict,
            origin: x.origin,
            members: set.clone(),
            focused_members: set,
            assumptions: x.assumptions.clone(),
            loop_check: x.loop_check,
            predicted: x.predicted.clone(),
            observed: x.observed.clone(),
        });
    }
    let mut result = focus_rule2(&transformed);
    for f in &mut result.focuses {
        f.under_assumed_broken = Some(e.clone());
    }
    Some(result)
}

/// Drops every focus whose members include another focus's members, and
/// sorts the rest by member list. Of equal focuses the first is kept.
pub fn minimize(focuses: Vec<Focus>) -> FocusSet {
    let mut order: Vec<usize> = (0..focuses.len()).collect();
    order.sort_by_key(|&i| focuses[i].members.len());
    // kept focuses indexed by their smallest member
    let mut by_first: BTreeMap<&Member, Vec<usize>> = BTreeMap::new();
    let mut kept = Vec::new();
    for i in order {
        let f = &focuses[i];
        let covered = f.members.iter().any(|m| {
            by_first.get(m).is_some_and(|list| list.iter().any(|&j| focuses[j].members.is_subset(&f.members)))
        });
        if covered || f.members.is_empty() {
            continue;
        }
        let first = f.members.iter().next().expect("non-empty focus");
        by_first.entry(first).or_default().push(i);
        kept.push(i);
    }
    kept.sort_by(|&a, &b| focuses[a].members.iter().cmp(focuses[b].members.iter()).then(a.cmp(&b)));
    let mut focuses: Vec<Option<Focus>> = focuses.into_iter().map(Some).collect();
    FocusSet { focuses: kept.into_iter().map(|i| focuses[i].take().expect("kept once")).collect() }
}
