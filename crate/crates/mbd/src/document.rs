//! JSON model, observation and fault documents.

use std::collections::BTreeSet;

use mbd_core::expr::{Expr, SyntaxError};
use mbd_core::simulator::{FaultBehavior, FaultSpec};
use mbd_core::{
    Branch, Component, ComponentKind, FunctionSpec, ModelBuilder, ModelError, Observation, SystemModel, Value,
    ValueDomain,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("`{component}` branch {branch}: {source}")]
    Syntax { component: String, branch: usize, source: SyntaxError },
    #[error("`{0}` is a function component without a function")]
    MissingFunction(String),
    #[error("connection endpoint `{0}` is not of the form `component.port`")]
    BadEndpoint(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A value as written in JSON: boolean, integer, real or enum symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueDoc {
    Bool(bool),
    Int(i64),
    Real(f64),
    Sym(String),
}

impl From<&Value> for ValueDoc {
    fn from(v: &Value) -> Self {
        match v {
            Value::Bool(b) => ValueDoc::Bool(*b),
            Value::Int(i) => ValueDoc::Int(*i),
            Value::Real(r) => ValueDoc::Real(*r),
            Value::Sym(s) => ValueDoc::Sym(s.clone()),
        }
    }
}

impl From<ValueDoc> for Value {
    fn from(v: ValueDoc) -> Self {
        match v {
            ValueDoc::Bool(b) => Value::Bool(b),
            ValueDoc::Int(i) => Value::Int(i),
            ValueDoc::Real(r) => Value::Real(r),
            ValueDoc::Sym(s) => Value::Sym(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainDoc {
    Bool,
    Int,
    Enum(Vec<String>),
    Real { tolerance: f64 },
}

impl Default for DomainDoc {
    fn default() -> Self {
        DomainDoc::Bool
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentType {
    Source,
    Function,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<String>,
    /// Ports the branch reads; derived from `guard` and `expr` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reads: Option<Vec<String>>,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionDoc {
    pub branches: Vec<BranchDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub masking: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatefulDoc {
    pub delay: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<ValueDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDoc {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: ComponentType,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionDoc>,
    #[serde(default, skip_serializing_if = "is_default_domain")]
    pub domain: DomainDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stateful: Option<StatefulDoc>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub loop_cut: bool,
}

fn is_default_domain(d: &DomainDoc) -> bool {
    *d == DomainDoc::Bool
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionDoc {
    /// `component` or `component.out`.
    pub from: String,
    /// `component.port`.
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub components: Vec<ComponentDoc>,
    #[serde(default)]
    pub connections: Vec<ConnectionDoc>,
    #[serde(default)]
    pub observables: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_horizon: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationDoc {
    pub component: String,
    #[serde(default)]
    pub time: u32,
    pub value: ValueDoc,
}

impl From<&Observation> for ObservationDoc {
    fn from(o: &Observation) -> Self {
        ObservationDoc { component: o.component.to_string(), time: o.time, value: (&o.value).into() }
    }
}

impl From<ObservationDoc> for Observation {
    fn from(o: ObservationDoc) -> Self {
        Observation::new(o.component, o.time, o.value.into())
    }
}

/// One fault: exactly one of `stuck_at`, `intermittent` or `function`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultDoc {
    pub component: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stuck_at: Option<ValueDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermittent: Option<IntermittentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermittentDoc {
    pub value: ValueDoc,
    pub times: BTreeSet<u32>,
}

fn parse_expr(component: &str, branch: usize, text: &str) -> Result<Expr, DocumentError> {
    Expr::parse(text).map_err(|source| DocumentError::Syntax { component: component.to_string(), branch, source })
}

fn function_spec(component: &str, doc: &FunctionDoc) -> Result<FunctionSpec, DocumentError> {
    let mut branches = Vec::with_capacity(doc.branches.len());
    for (i, b) in doc.branches.iter().enumerate() {
        let expr = parse_expr(component, i, &b.expr)?;
        let guard = match &b.guard {
            Some(g) => parse_expr(component, i, g)?,
            None => Expr::truth(),
        };
        let mut branch = Branch::new(guard, expr);
        if let Some(reads) = &b.reads {
            branch.reads = reads.iter().cloned().collect();
        }
        branches.push(branch);
    }
    Ok(FunctionSpec::new(branches).with_masking(doc.masking.iter().cloned()))
}

fn function_doc(spec: &FunctionSpec) -> FunctionDoc {
    FunctionDoc {
        branches: spec
            .branches
            .iter()
            .map(|b| BranchDoc {
                guard: (b.guard != Expr::truth()).then(|| b.guard.to_string()),
                reads: (b.reads != b.mentioned()).then(|| b.reads.iter().cloned().collect()),
                expr: b.expr.to_string(),
            })
            .collect(),
        masking: spec.masking.iter().cloned().collect(),
    }
}

fn endpoint(text: &str) -> Option<(&str, &str)> {
    text.split_once('.')
}

impl ModelDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_model(&self) -> Result<SystemModel, DocumentError> {
        let mut b = ModelBuilder::default();
        for c in &self.components {
            let mut comp = match c.kind {
                ComponentType::Source => {
                    let mut s = Component::source(c.id.clone());
                    s.inputs = c.inputs.clone();
                    s
                }
                ComponentType::Function => {
                    let f = c.function.as_ref().ok_or_else(|| DocumentError::MissingFunction(c.id.clone()))?;
                    Component::function(c.id.clone(), c.inputs.iter().cloned(), function_spec(&c.id, f)?)
                }
            };
            comp.domain = match &c.domain {
                DomainDoc::Bool => ValueDomain::Boolean,
                DomainDoc::Int => ValueDomain::Integer,
                DomainDoc::Enum(symbols) => ValueDomain::Enum(symbols.clone()),
                DomainDoc::Real { tolerance } => ValueDomain::Real { tolerance: *tolerance },
            };
            if let Some(p) = c.prior {
                comp.prior = p;
            }
            if let Some(s) = &c.stateful {
                comp = comp.with_stateful(s.delay, s.initial.clone().map(Value::from));
            }
            comp.loop_cut = c.loop_cut;
            b = b.component(comp);
        }
        for conn in &self.connections {
            let from = endpoint(&conn.from).map_or(conn.from.as_str(), |(c, _)| c);
            let (to, port) = endpoint(&conn.to).ok_or_else(|| DocumentError::BadEndpoint(conn.to.clone()))?;
            b = b.connect(from, to, port);
        }
        for o in &self.observables {
            b = b.observable(o);
        }
        if let Some(e) = self.epsilon {
            b = b.epsilon(e);
        }
        if let Some(h) = self.time_horizon {
            b = b.time_horizon(h);
        }
        Ok(b.build()?)
    }

    pub fn from_model(model: &SystemModel) -> Self {
        let components = model
            .components()
            .iter()
            .map(|c| ComponentDoc {
                id: c.id.to_string(),
                kind: if c.is_source() { ComponentType::Source } else { ComponentType::Function },
                inputs: c.inputs.clone(),
                function: match &c.kind {
                    ComponentKind::Source => None,
                    ComponentKind::Function(f) => Some(function_doc(f)),
                },
                domain: match &c.domain {
                    ValueDomain::Boolean => DomainDoc::Bool,
                    ValueDomain::Integer => DomainDoc::Int,
                    ValueDomain::Enum(s) => DomainDoc::Enum(s.clone()),
                    ValueDomain::Real { tolerance } => DomainDoc::Real { tolerance: *tolerance },
                },
                prior: (c.prior != mbd_core::model::DEFAULT_PRIOR).then_some(c.prior),
                stateful: c
                    .stateful
                    .as_ref()
                    .map(|s| StatefulDoc { delay: s.delay, initial: s.initial.as_ref().map(ValueDoc::from) }),
                loop_cut: c.loop_cut,
            })
            .collect();
        let connections = model
            .connections()
            .into_iter()
            .map(|(from, to, port)| ConnectionDoc {
                from: format!("{}.out", model.id(from)),
                to: format!("{}.{port}", model.id(to)),
            })
            .collect();
        let observables = model.observables().map(|c| model.id(c).to_string()).collect();
        ModelDocument {
            components,
            connections,
            observables,
            epsilon: (model.epsilon != mbd_core::model::DEFAULT_EPSILON).then_some(model.epsilon),
            time_horizon: (model.time_horizon != 1).then_some(model.time_horizon),
        }
    }
}

pub fn parse_model(text: &str) -> Result<SystemModel, DocumentError> {
    ModelDocument::parse(text)?.to_model()
}

pub fn parse_observations(text: &str) -> Result<Vec<Observation>, DocumentError> {
    let docs: Vec<ObservationDoc> = serde_json::from_str(text)?;
    Ok(docs.into_iter().map(Observation::from).collect())
}

#[derive(Debug, Error)]
pub enum FaultDocError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("fault on `{0}` must give exactly one of stuck_at, intermittent, function")]
    Ambiguous(String),
    #[error(transparent)]
    Document(#[from] DocumentError),
}

pub fn parse_faults(text: &str) -> Result<Vec<FaultSpec>, FaultDocError> {
    let docs: Vec<FaultDoc> = serde_json::from_str(text)?;
    docs.into_iter()
        .map(|f| {
            let behavior = match (f.stuck_at, f.intermittent, &f.function) {
                (Some(v), None, None) => FaultBehavior::StuckAt(v.into()),
                (None, Some(i), None) => {
                    FaultBehavior::IntermittentStuckAt { value: i.value.into(), active_times: i.times }
                }
                (None, None, Some(func)) => FaultBehavior::FunctionOverride(function_spec(&f.component, func)?),
                _ => return Err(FaultDocError::Ambiguous(f.component)),
            };
            Ok(FaultSpec { component: f.component.as_str().into(), behavior })
        })
        .collect()
}

pub fn fault_doc(f: &FaultSpec) -> FaultDoc {
    let mut doc = FaultDoc { component: f.component.to_string(), stuck_at: None, intermittent: None, function: None };
    match &f.behavior {
        FaultBehavior::StuckAt(v) => doc.stuck_at = Some(v.into()),
        FaultBehavior::IntermittentStuckAt { value, active_times } => {
            doc.intermittent = Some(IntermittentDoc { value: value.into(), times: active_times.clone() })
        }
        FaultBehavior::FunctionOverride(spec) => doc.function = Some(function_doc(spec)),
    }
    doc
}
