//! Function specs for common gates and arithmetic parts.
//!
//! Input ports are named `in1`, `in2`, ... Absorbing inputs get their own
//! branches so that a single controlling input determines the output.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::Expr;
use crate::model::{Branch, FunctionSpec};
use crate::value::Value;

pub fn port(i: usize) -> String {
    format!("in{}", i + 1)
}

pub fn ports(n: usize) -> Vec<String> {
    (0..n).map(port).collect()
}

fn parse(text: &str) -> Expr {
    Expr::parse(text).expect("gate expression")
}

fn joined(n: usize, op: &str) -> String {
    ports(n).join(op)
}

fn absorbing(n: usize, guard_for: impl Fn(&str) -> String, absorbed: bool, rest: &str) -> FunctionSpec {
    let mut branches: Vec<Branch> = (0..n)
        .map(|i| Branch::new(parse(&guard_for(&port(i))), Expr::Lit(Value::Bool(absorbed))))
        .collect();
    branches.push(Branch::always(parse(rest)));
    FunctionSpec::new(branches)
}

pub fn buf() -> FunctionSpec {
    FunctionSpec::new(alloc::vec![Branch::always(parse("in1"))])
}

pub fn not() -> FunctionSpec {
    FunctionSpec::new(alloc::vec![Branch::always(parse("not in1"))])
}

pub fn and(n: usize) -> FunctionSpec {
    absorbing(n, |p| format!("not {p}"), false, &joined(n, " and "))
}

pub fn or(n: usize) -> FunctionSpec {
    absorbing(n, |p| p.into(), true, &joined(n, " or "))
}

pub fn nand(n: usize) -> FunctionSpec {
    absorbing(n, |p| format!("not {p}"), true, &format!("not ({})", joined(n, " and ")))
}

pub fn nor(n: usize) -> FunctionSpec {
    absorbing(n, |p| p.into(), false, &format!("not ({})", joined(n, " or ")))
}

pub fn xor() -> FunctionSpec {
    FunctionSpec::new(alloc::vec![Branch::always(parse("in1 != in2"))])
}

/// `in1 + ... + inN + offset`.
pub fn sum(n: usize, offset: i64) -> FunctionSpec {
    let text = match (n, offset) {
        (0, _) => format!("{offset}"),
        (_, 0) => joined(n, " + "),
        (_, o) if o < 0 => format!("{} - {}", joined(n, " + "), o.unsigned_abs()),
        (_, o) => format!("{} + {o}", joined(n, " + ")),
    };
    FunctionSpec::new(alloc::vec![Branch::always(parse(&text))])
}

/// Two-input multiplier with a zero-absorbing branch per input.
pub fn multiplier() -> FunctionSpec {
    FunctionSpec::new(alloc::vec![
        Branch::new(parse("in1 == 0"), parse("0")),
        Branch::new(parse("in2 == 0"), parse("0")),
        Branch::always(parse("in1 * in2")),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn reads_follow_mentions() {
        let f = and(2);
        assert_eq!(f.branches.len(), 3);
        assert_eq!(f.branches[0].reads.iter().collect::<Vec<_>>(), ["in1"]);
        assert_eq!(f.branches[2].reads.len(), 2);
        assert_eq!(sum(3, -2).branches[0].expr.to_string(), "in1 + in2 + in3 - 2");
    }
}
