//! Structural checks on a built model.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::graph;
use crate::model::{CompIx, ComponentKind, SystemModel};
use crate::propagation::{choose_cuts, names};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    UnconnectedPort { component: String, port: String },
    SourceWithInputs { component: String },
    NoBranches { component: String },
    BranchReadsUnknownPort { component: String, branch: usize, port: String },
    ReadsMismatch { component: String, branch: usize },
    MaskingUnknownPort { component: String, port: String },
    PriorOutOfRange { component: String },
    EpsilonOutOfRange,
    ZeroHorizon,
    StatefulSource { component: String },
    ZeroDelay { component: String },
    InitialOutOfDomain { component: String },
    EmptyEnumDomain { component: String },
    NegativeTolerance { component: String },
    LoopWithoutFiniteWire { members: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnconnectedPort { component, port } => write!(f, "input `{component}.{port}` is not connected"),
            Violation::SourceWithInputs { component } => write!(f, "source `{component}` declares inputs"),
            Violation::NoBranches { component } => write!(f, "`{component}` has no function branches"),
            Violation::BranchReadsUnknownPort { component, branch, port } => {
                write!(f, "branch {branch} of `{component}` reads unknown port `{port}`")
            }
            Violation::ReadsMismatch { component, branch } => {
                write!(f, "branch {branch} of `{component}` declares reads that differ from the ports it mentions")
            }
            Violation::MaskingUnknownPort { component, port } => {
                write!(f, "`{component}` marks unknown port `{port}` as masking")
            }
            Violation::PriorOutOfRange { component } => write!(f, "prior of `{component}` is not in (0, 1)"),
            Violation::EpsilonOutOfRange => f.write_str("epsilon is not in (0, 1)"),
            Violation::ZeroHorizon => f.write_str("time horizon must be at least 1"),
            Violation::StatefulSource { component } => write!(f, "source `{component}` cannot be stateful"),
            Violation::ZeroDelay { component } => write!(f, "stateful `{component}` needs a delay of at least 1"),
            Violation::InitialOutOfDomain { component } => {
                write!(f, "initial value of `{component}` is outside its domain")
            }
            Violation::EmptyEnumDomain { component } => write!(f, "`{component}` has an empty enum domain"),
            Violation::NegativeTolerance { component } => write!(f, "`{component}` has a negative tolerance"),
            Violation::LoopWithoutFiniteWire { members } => {
                write!(f, "loop {members:?} has no finite-domain wire to place an assumption on")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Loops (strongly connected components ignoring delayed edges), each
    /// sorted by id.
    pub loops: Vec<Vec<String>>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Same-step feeder -> consumer edges, with delayed inputs left out.
pub fn dependency_graph(model: &SystemModel) -> Vec<Vec<usize>> {
    let mut adj = alloc::vec![Vec::new(); model.len()];
    for c in model.ixs() {
        if model.component(c).delay() > 0 {
            continue;
        }
        for f in model.feeders(c).iter().flatten() {
            adj[f.ix()].push(c.ix());
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

pub fn validate(model: &SystemModel) -> ValidationReport {
    let mut v = Vec::new();
    if !(model.epsilon > 0.0 && model.epsilon < 1.0) {
        v.push(Violation::EpsilonOutOfRange);
    }
    if model.time_horizon == 0 {
        v.push(Violation::ZeroHorizon);
    }
    for c in model.ixs() {
        check_component(model, c, &mut v);
    }

    let adj = dependency_graph(model);
    let mut loops = Vec::new();
    for comp in graph::scc(&adj) {
        if !graph::is_loop(&adj, &comp) {
            continue;
        }
        let members = names(model, comp.iter().map(|&c| CompIx(c as u32)));
        if let Err(stuck) = choose_cuts(model, &comp, &adj) {
            v.push(Violation::LoopWithoutFiniteWire {
                members: names(model, stuck.into_iter().map(|c| CompIx(c as u32))),
            });
        }
        loops.push(members);
    }
    loops.sort();
    ValidationReport { violations: v, loops }
}

fn check_component(model: &SystemModel, c: CompIx, v: &mut Vec<Violation>) {
    let comp = model.component(c);
    let name = || String::from(comp.id.as_str());
    if !(comp.prior > 0.0 && comp.prior < 1.0) {
        v.push(Violation::PriorOutOfRange { component: name() });
    }
    match &comp.domain {
        crate::value::ValueDomain::Enum(symbols) if symbols.is_empty() => {
            v.push(Violation::EmptyEnumDomain { component: name() })
        }
        crate::value::ValueDomain::Real { tolerance } if *tolerance < 0.0 || tolerance.is_nan() => {
            v.push(Violation::NegativeTolerance { component: name() })
        }
        _ => {}
    }
    if let Some(s) = &comp.stateful {
        if comp.is_source() {
            v.push(Violation::StatefulSource { component: name() });
        }
        if s.delay == 0 {
            v.push(Violation::ZeroDelay { component: name() });
        }
        if s.initial.as_ref().is_some_and(|i| comp.domain.coerce(i).is_none()) {
            v.push(Violation::InitialOutOfDomain { component: name() });
        }
    }
    let spec = match &comp.kind {
        ComponentKind::Source => {
            if !comp.inputs.is_empty() {
                v.push(Violation::SourceWithInputs { component: name() });
            }
            return;
        }
        ComponentKind::Function(f) => f,
    };
    for (p, feeder) in model.feeders(c).iter().enumerate() {
        if feeder.is_none() {
            v.push(Violation::UnconnectedPort { component: name(), port: comp.inputs[p].clone() });
        }
    }
    if spec.branches.is_empty() {
        v.push(Violation::NoBranches { component: name() });
    }
    let declared: BTreeSet<&String> = comp.inputs.iter().collect();
    for (i, b) in spec.branches.iter().enumerate() {
        let mentioned = b.mentioned();
        for port in mentioned.union(&b.reads) {
            if !declared.contains(port) {
                v.push(Violation::BranchReadsUnknownPort { component: name(), branch: i, port: port.clone() });
            }
        }
        if mentioned != b.reads {
            v.push(Violation::ReadsMismatch { component: name(), branch: i });
        }
    }
    for port in &spec.masking {
        if !declared.contains(port) {
            v.push(Violation::MaskingUnknownPort { component: name(), port: port.clone() });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::gates;
    use crate::model::{Branch, Component, FunctionSpec, ModelBuilder};
    use crate::value::ValueDomain;

    #[test]
    fn unconnected_port_is_reported() {
        let m = ModelBuilder::default()
            .component(Component::function("g", gates::ports(2), gates::and(2)))
            .component(Component::source("s"))
            .connect("s", "g", "in1")
            .build()
            .unwrap();
        let r = validate(&m);
        assert_eq!(r.violations, [Violation::UnconnectedPort { component: "g".into(), port: "in2".into() }]);
    }

    #[test]
    fn reads_must_match_mentions() {
        let mut b = Branch::always(Expr::parse("in1").unwrap());
        b.reads.insert("in2".into());
        let m = ModelBuilder::default()
            .component(Component::function("g", gates::ports(2), FunctionSpec::new(alloc::vec![b])))
            .component(Component::source("s"))
            .connect("s", "g", "in1")
            .connect("s", "g", "in2")
            .build()
            .unwrap();
        assert_eq!(validate(&m).violations, [Violation::ReadsMismatch { component: "g".into(), branch: 0 }]);
    }

    #[test]
    fn integer_loop_cannot_be_assumed() {
        let m = ModelBuilder::default()
            .component(Component::function("x", ["in1"], gates::buf()).with_domain(ValueDomain::Integer))
            .connect("x", "x", "in1")
            .build()
            .unwrap();
        let r = validate(&m);
        assert_eq!(r.loops, [["x"]]);
        assert!(matches!(r.violations[0], Violation::LoopWithoutFiniteWire { .. }));
    }

    #[test]
    fn delayed_self_loop_is_not_a_loop() {
        let m = ModelBuilder::default()
            .component(
                Component::function("x", ["in1"], gates::not()).with_stateful(1, Some(crate::value::Value::Bool(false))),
            )
            .connect("x", "x", "in1")
            .build()
            .unwrap();
        let r = validate(&m);
        assert!(r.is_valid());
        assert!(r.loops.is_empty());
    }
}
