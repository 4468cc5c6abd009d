use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::expr::EvalError;
use crate::model::{Component, FunctionSpec};
use crate::value::Value;

/// Result of evaluating one component on (possibly partial) inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: Value,
    /// Index of the first applicable branch.
    pub fired: usize,
    /// Minimal port-index sets that on their own determine `value`.
    pub gamma: Vec<BTreeSet<usize>>,
    /// Port indices without the masking flag.
    pub non_masking: BTreeSet<usize>,
}

/// Evaluates `function` for `component` on `inputs` (indexed like
/// `component.inputs`, `None` for unknown). Returns `Ok(None)` when no
/// branch can fire yet.
pub fn evaluate_component(
    component: &Component,
    function: &FunctionSpec,
    inputs: &[Option<Value>],
) -> Result<Option<Evaluation>, EvalError> {
    let tolerance = component.domain.tolerance();
    let lookup = |port: &str| component.port_index(port).and_then(|i| inputs.get(i)).and_then(Option::as_ref);
    let mut fired: Option<(usize, Value)> = None;
    let mut covers: Vec<BTreeSet<usize>> = Vec::new();
    for (b, branch) in function.branches.iter().enumerate() {
        let mut ports = BTreeSet::new();
        let mut known = true;
        for r in &branch.reads {
            match component.port_index(r) {
                Some(i) if inputs.get(i).is_some_and(Option::is_some) => {
                    ports.insert(i);
                }
                _ => {
                    known = false;
                    break;
                }
            }
        }
        if !known {
            continue;
        }
        let guard = branch.guard.eval(&lookup, tolerance)?;
        let holds = match guard {
            Value::Bool(b) => b,
            Value::Int(i) => i != 0,
            other => return Err(EvalError::TypeMismatch(alloc::format!("guard evaluated to `{other}`"))),
        };
        if !holds {
            continue;
        }
        let raw = branch.expr.eval(&lookup, tolerance)?;
        let value = component.domain.coerce(&raw).ok_or_else(|| {
            EvalError::TypeMismatch(alloc::format!("`{raw}` is outside the output domain of `{}`", component.id))
        })?;
        match &fired {
            None => {
                fired = Some((b, value));
                covers.push(ports);
            }
            Some((_, v)) if component.domain.matches(v, &value) => covers.push(ports),
            Some(_) => {}
        }
    }
    let Some((fired, value)) = fired else {
        return Ok(None);
    };
    covers.sort_by_key(BTreeSet::len);
    let mut gamma: Vec<BTreeSet<usize>> = Vec::new();
    for c in covers {
        if !gamma.iter().any(|g| g.is_subset(&c)) {
            gamma.push(c);
        }
    }
    gamma.sort();
    let non_masking = (0..component.inputs.len())
        .filter(|&i| !function.masking.contains(&component.inputs[i]))
        .collect();
    Ok(Some(Evaluation { value, fired, gamma, non_masking }))
}
