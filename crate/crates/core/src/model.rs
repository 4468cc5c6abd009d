//! System models: components, their causal functions and the wiring.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::expr::Expr;
use crate::value::{Value, ValueDomain};

pub const DEFAULT_PRIOR: f64 = 1e-4;
pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(String);

impl ComponentId {
    pub fn new(id: impl Into<String>) -> Self {
        ComponentId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ComponentId {
    fn from(s: &str) -> Self {
        ComponentId(s.to_string())
    }
}

/// Dense index of a component inside its model. Components are stored
/// sorted by id, so index order is id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CompIx(pub u32);

impl CompIx {
    pub fn ix(self) -> usize {
        self.0 as usize
    }
}

/// One guarded case of a component function.
///
/// When every port in `reads` has a value and `guard` holds, the output is
/// `expr`. Each branch must be a valid implication on its own; the first
/// applicable branch in declared order fires.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub guard: Expr,
    pub reads: BTreeSet<String>,
    pub expr: Expr,
}

impl Branch {
    /// Branch whose `reads` are the ports mentioned by `guard` and `expr`.
    pub fn new(guard: Expr, expr: Expr) -> Self {
        let mut reads = guard.ports();
        reads.extend(expr.ports());
        Branch { guard, reads, expr }
    }

    pub fn always(expr: Expr) -> Self {
        Branch::new(Expr::truth(), expr)
    }

    /// Ports mentioned by the guard or the expression.
    pub fn mentioned(&self) -> BTreeSet<String> {
        let mut ports = self.guard.ports();
        ports.extend(self.expr.ports());
        ports
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    pub branches: Vec<Branch>,
    /// Ports on which a wrong value leaves the output unchanged with
    /// probability at least epsilon.
    pub masking: BTreeSet<String>,
}

impl FunctionSpec {
    pub fn new(branches: Vec<Branch>) -> Self {
        FunctionSpec { branches, masking: BTreeSet::new() }
    }

    pub fn with_masking<I, S>(mut self, ports: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.masking.extend(ports.into_iter().map(Into::into));
        self
    }

    /// Constant output, as used by stuck-at faults.
    pub fn constant(value: Value) -> Self {
        FunctionSpec::new(alloc::vec![Branch::always(Expr::Lit(value))])
    }
}

/// Output at `t` is computed from inputs at `t - delay`; before that the
/// output is `initial`, or unknown when no initial value is given.
#[derive(Debug, Clone, PartialEq)]
pub struct Stateful {
    pub delay: u32,
    pub initial: Option<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComponentKind {
    Source,
    Function(FunctionSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub id: ComponentId,
    pub inputs: Vec<String>,
    pub kind: ComponentKind,
    pub domain: ValueDomain,
    pub prior: f64,
    pub stateful: Option<Stateful>,
    /// Preferred place to cut a loop when assumptions are needed.
    pub loop_cut: bool,
}

impl Component {
    pub fn source(id: impl Into<String>) -> Self {
        Component {
            id: ComponentId::new(id),
            inputs: Vec::new(),
            kind: ComponentKind::Source,
            domain: ValueDomain::Boolean,
            prior: DEFAULT_PRIOR,
            stateful: None,
            loop_cut: false,
        }
    }

    pub fn function<I, S>(id: impl Into<String>, inputs: I, function: FunctionSpec) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Component {
            id: ComponentId::new(id),
            inputs: inputs.into_iter().map(Into::into).collect(),
            kind: ComponentKind::Function(function),
            domain: ValueDomain::Boolean,
            prior: DEFAULT_PRIOR,
            stateful: None,
            loop_cut: false,
        }
    }

    pub fn with_domain(mut self, domain: ValueDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_prior(mut self, prior: f64) -> Self {
        self.prior = prior;
        self
    }

    pub fn with_stateful(mut self, delay: u32, initial: Option<Value>) -> Self {
        self.stateful = Some(Stateful { delay, initial });
        self
    }

    pub fn with_loop_cut(mut self) -> Self {
        self.loop_cut = true;
        self
    }

    pub fn is_source(&self) -> bool {
        matches!(self.kind, ComponentKind::Source)
    }

    pub fn function_spec(&self) -> Option<&FunctionSpec> {
        match &self.kind {
            ComponentKind::Function(f) => Some(f),
            ComponentKind::Source => None,
        }
    }

    pub fn port_index(&self, port: &str) -> Option<usize> {
        self.inputs.iter().position(|p| p == port)
    }

    /// Input time offset: `delay` for stateful components, 0 otherwise.
    pub fn delay(&self) -> u32 {
        self.stateful.as_ref().map_or(0, |s| s.delay)
    }
}

/// A measured output value.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub component: ComponentId,
    pub time: u32,
    pub value: Value,
}

impl Observation {
    pub fn new(component: impl Into<String>, time: u32, value: Value) -> Self {
        Observation { component: ComponentId::new(component), time, value }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("component id must not be empty")]
    EmptyId,
    #[error("duplicate component `{0}`")]
    DuplicateComponent(String),
    #[error("connection refers to missing component `{0}`")]
    DanglingConnection(String),
    #[error("component `{component}` has no input port `{port}`")]
    UnknownPort { component: String, port: String },
    #[error("port `{component}.{port}` is driven more than once")]
    PortMultiplyDriven { component: String, port: String },
    #[error("observable `{0}` is not a component")]
    UnknownObservable(String),
    #[error("value `{value}` is outside the domain of `{component}`")]
    EnumOutOfDomain { component: String, value: String },
    #[error("component `{component}` declares port `{port}` twice")]
    DuplicatePort { component: String, port: String },
}

/// An immutable, indexed system model.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    components: Vec<Component>,
    index: BTreeMap<String, CompIx>,
    /// `feeders[c][p]`: component driving input port `p` of `c`.
    feeders: Vec<Vec<Option<CompIx>>>,
    /// `consumers[c]`: (component, port index) pairs fed by `c`.
    consumers: Vec<Vec<(CompIx, usize)>>,
    observable: Vec<bool>,
    pub epsilon: f64,
    /// Number of discrete time steps; 1 for static models.
    pub time_horizon: u32,
}

impl SystemModel {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, c: CompIx) -> &Component {
        &self.components[c.ix()]
    }

    pub fn ix(&self, id: &str) -> Option<CompIx> {
        self.index.get(id).copied()
    }

    pub fn id(&self, c: CompIx) -> &ComponentId {
        &self.components[c.ix()].id
    }

    pub fn ixs(&self) -> impl Iterator<Item = CompIx> + '_ {
        (0..self.components.len() as u32).map(CompIx)
    }

    pub fn feeders(&self, c: CompIx) -> &[Option<CompIx>] {
        &self.feeders[c.ix()]
    }

    pub fn feeder(&self, c: CompIx, port: &str) -> Option<CompIx> {
        let p = self.component(c).port_index(port)?;
        self.feeders[c.ix()][p]
    }

    pub fn consumers(&self, c: CompIx) -> &[(CompIx, usize)] {
        &self.consumers[c.ix()]
    }

    /// Sources are always observable.
    pub fn is_observable(&self, c: CompIx) -> bool {
        self.observable[c.ix()] || self.component(c).is_source()
    }

    pub fn observables(&self) -> impl Iterator<Item = CompIx> + '_ {
        self.ixs().filter(|&c| self.observable[c.ix()])
    }

    pub fn sources(&self) -> impl Iterator<Item = CompIx> + '_ {
        self.ixs().filter(|&c| self.component(c).is_source())
    }

    /// Components without consumers, i.e. the system outputs.
    pub fn sinks(&self) -> impl Iterator<Item = CompIx> + '_ {
        self.ixs().filter(|&c| self.consumers[c.ix()].is_empty() && !self.component(c).is_source())
    }

    pub fn is_temporal(&self) -> bool {
        self.time_horizon > 1 || self.components.iter().any(|c| c.stateful.is_some())
    }

    /// Connections as (from, to, port) triples in component/port order.
    pub fn connections(&self) -> Vec<(CompIx, CompIx, &str)> {
        let mut out = Vec::new();
        for c in self.ixs() {
            for (p, feeder) in self.feeders[c.ix()].iter().enumerate() {
                if let Some(f) = feeder {
                    out.push((*f, c, self.component(c).inputs[p].as_str()));
                }
            }
        }
        out
    }

    /// Replaces the function of `c`, keeping wiring and domain.
    pub fn with_function(&self, c: CompIx, function: FunctionSpec) -> SystemModel {
        let mut m = self.clone();
        m.components[c.ix()].kind = ComponentKind::Function(function);
        m
    }

    pub fn builder() -> ModelBuilder {
        ModelBuilder::default()
    }

    /// Builder holding this model's content, for edits.
    pub fn to_builder(&self) -> ModelBuilder {
        let mut b = ModelBuilder::default().epsilon(self.epsilon).time_horizon(self.time_horizon);
        for comp in &self.components {
            b = b.component(comp.clone());
        }
        for (from, to, port) in self.connections() {
            b = b.connect(self.id(from).as_str(), self.id(to).as_str(), port);
        }
        for c in self.observables() {
            b = b.observable(self.id(c).as_str());
        }
        b
    }
}

#[derive(Debug, Clone)]
pub struct ModelBuilder {
    components: Vec<Component>,
    connections: Vec<(String, String, String)>,
    observables: Vec<String>,
    epsilon: f64,
    time_horizon: u32,
}

impl Default for ModelBuilder {
    fn default() -> Self {
        ModelBuilder {
            components: Vec::new(),
            connections: Vec::new(),
            observables: Vec::new(),
            epsilon: DEFAULT_EPSILON,
            time_horizon: 1,
        }
    }
}

impl ModelBuilder {
    pub fn component(mut self, c: Component) -> Self {
        self.components.push(c);
        self
    }

    /// Connects the output of `from` to input `port` of `to`.
    pub fn connect(mut self, from: &str, to: &str, port: &str) -> Self {
        self.connections.push((from.to_string(), to.to_string(), port.to_string()));
        self
    }

    pub fn observable(mut self, id: &str) -> Self {
        self.observables.push(id.to_string());
        self
    }

    pub fn observe_all(mut self) -> Self {
        let ids: Vec<String> = self.components.iter().map(|c| c.id.0.clone()).collect();
        self.observables.extend(ids);
        self
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn time_horizon(mut self, horizon: u32) -> Self {
        self.time_horizon = horizon;
        self
    }

    pub fn build(self) -> Result<SystemModel, ModelError> {
        let mut components = self.components;
        components.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = BTreeMap::new();
        for (i, c) in components.iter().enumerate() {
            if c.id.0.is_empty() {
                return Err(ModelError::EmptyId);
            }
            if index.insert(c.id.0.clone(), CompIx(i as u32)).is_some() {
                return Err(ModelError::DuplicateComponent(c.id.0.clone()));
            }
            let mut seen = BTreeSet::new();
            for p in &c.inputs {
                if !seen.insert(p) {
                    return Err(ModelError::DuplicatePort { component: c.id.0.clone(), port: p.clone() });
                }
            }
            check_enum_literals(c)?;
        }
        let mut feeders: Vec<Vec<Option<CompIx>>> =
            components.iter().map(|c| alloc::vec![None; c.inputs.len()]).collect();
        let mut consumers: Vec<Vec<(CompIx, usize)>> = alloc::vec![Vec::new(); components.len()];
        for (from, to, port) in &self.connections {
            let f = *index.get(from).ok_or_else(|| ModelError::DanglingConnection(from.clone()))?;
            let t = *index.get(to).ok_or_else(|| ModelError::DanglingConnection(to.clone()))?;
            let p = components[t.ix()]
                .port_index(port)
                .ok_or_else(|| ModelError::UnknownPort { component: to.clone(), port: port.clone() })?;
            if feeders[t.ix()][p].is_some() {
                return Err(ModelError::PortMultiplyDriven { component: to.clone(), port: port.clone() });
            }
            feeders[t.ix()][p] = Some(f);
            consumers[f.ix()].push((t, p));
        }
        for list in &mut consumers {
            list.sort();
        }
        let mut observable = alloc::vec![false; components.len()];
        for o in &self.observables {
            let c = index.get(o).ok_or_else(|| ModelError::UnknownObservable(o.clone()))?;
            observable[c.ix()] = true;
        }
        Ok(SystemModel {
            components,
            index,
            feeders,
            consumers,
            observable,
            epsilon: self.epsilon,
            time_horizon: self.time_horizon,
        })
    }
}

fn check_enum_literals(c: &Component) -> Result<(), ModelError> {
    let ValueDomain::Enum(symbols) = &c.domain else {
        return Ok(());
    };
    let bad = |v: &Value| match v {
        Value::Sym(s) => !symbols.contains(s),
        _ => false,
    };
    let out_of_domain = |v: &Value| ModelError::EnumOutOfDomain { component: c.id.0.clone(), value: v.to_string() };
    if let Some(initial) = c.stateful.as_ref().and_then(|s| s.initial.as_ref()) {
        if bad(initial) {
            return Err(out_of_domain(initial));
        }
    }
    if let Some(f) = c.function_spec() {
        for b in &f.branches {
            if let Some(v) = b.expr.literals().into_iter().find(|v| bad(v)) {
                return Err(out_of_domain(v));
            }
        }
    }
    Ok(())
}
