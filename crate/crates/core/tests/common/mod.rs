#![allow(dead_code)]

use std::collections::BTreeSet;

use mbd_core::propagation::{Assumption, TcSet, TimedComponent};
use mbd_core::{Member, SystemModel, Value};

pub fn tc(model: &SystemModel, id: &str, time: u32) -> TimedComponent {
    TimedComponent::new(model.ix(id).unwrap_or_else(|| panic!("no component {id}")), time)
}

pub fn ids(model: &SystemModel, set: &TcSet) -> Vec<String> {
    let mut out: Vec<String> = set.iter().map(|t| model.id(t.comp).to_string()).collect();
    out.sort();
    out
}

pub fn timed(model: &SystemModel, set: &TcSet) -> Vec<(String, u32)> {
    let mut out: Vec<(String, u32)> = set.iter().map(|t| (model.id(t.comp).to_string(), t.time)).collect();
    out.sort();
    out
}

pub fn assumption_label(model: &SystemModel, a: &Assumption) -> String {
    format!("output({})={}", model.id(a.wire), a.value)
}

pub fn member_label(model: &SystemModel, m: &Member) -> String {
    match m {
        Member::Component(t) if model.time_horizon > 1 => format!("{}@{}", model.id(t.comp), t.time),
        Member::Component(t) => model.id(t.comp).to_string(),
        Member::Assumption(a) => assumption_label(model, a),
    }
}

pub fn labels<'a>(model: &SystemModel, members: impl IntoIterator<Item = &'a Member>) -> Vec<String> {
    let mut out: Vec<String> = members.into_iter().map(|m| member_label(model, m)).collect();
    out.sort();
    out
}

pub fn strs(xs: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = xs.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

pub fn set_of(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

pub fn bit(b: bool) -> Value {
    Value::Bool(b)
}
