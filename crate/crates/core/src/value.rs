//! Output values and the domains they are drawn from.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// Domain of a component output.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueDomain {
    Boolean,
    /// Ordered list of symbols.
    Enum(Vec<String>),
    Integer,
    /// Real values compare equal when `|a - b| <= tolerance`.
    Real { tolerance: f64 },
}

/// A concrete output value.
///
/// `Eq`/`Ord` are structural (reals via `total_cmp`) so values can live in
/// ordered sets; use [`ValueDomain::matches`] for measurement comparison.
#[derive(Debug, Clone)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Sym(String),
}

impl Value {
    fn rank(&self) -> u8 {
        match self {
            Value::Bool(_) => 0,
            Value::Int(_) => 1,
            Value::Real(_) => 2,
            Value::Sym(_) => 3,
        }
    }

    /// Numeric view; booleans count as 0/1.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            Value::Sym(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Bool(b) => Some(*b as i64),
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Real(a), Value::Real(b)) => a.total_cmp(b),
            (Value::Sym(a), Value::Sym(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{}", *b as u8),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Sym(s) => write!(f, "{s}"),
        }
    }
}

impl ValueDomain {
    /// Converts `value` into this domain's canonical variant, if it fits.
    ///
    /// Booleans accept the integers 0 and 1, integers accept booleans, and
    /// reals accept any numeric value.
    pub fn coerce(&self, value: &Value) -> Option<Value> {
        match (self, value) {
            (ValueDomain::Boolean, Value::Bool(b)) => Some(Value::Bool(*b)),
            (ValueDomain::Boolean, Value::Int(0)) => Some(Value::Bool(false)),
            (ValueDomain::Boolean, Value::Int(1)) => Some(Value::Bool(true)),
            (ValueDomain::Integer, Value::Int(i)) => Some(Value::Int(*i)),
            (ValueDomain::Integer, Value::Bool(b)) => Some(Value::Int(*b as i64)),
            (ValueDomain::Real { .. }, v) => v.as_f64().map(Value::Real),
            (ValueDomain::Enum(symbols), Value::Sym(s)) if symbols.iter().any(|x| x == s) => {
                Some(Value::Sym(s.clone()))
            }
            _ => None,
        }
    }

    pub fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (ValueDomain::Boolean, Value::Bool(_))
            | (ValueDomain::Integer, Value::Int(_))
            | (ValueDomain::Real { .. }, Value::Real(_)) => true,
            (ValueDomain::Enum(symbols), Value::Sym(s)) => symbols.iter().any(|x| x == s),
            _ => false,
        }
    }

    /// Measurement equality: tolerance for reals, exact otherwise.
    pub fn matches(&self, a: &Value, b: &Value) -> bool {
        match self {
            ValueDomain::Real { tolerance } => match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => (x - y).abs() <= *tolerance,
                _ => false,
            },
            _ => a == b,
        }
    }

    /// Every value of a finite domain in declared order; `None` for
    /// integers and reals.
    pub fn finite_values(&self) -> Option<Vec<Value>> {
        match self {
            ValueDomain::Boolean => Some(alloc::vec![Value::Bool(false), Value::Bool(true)]),
            ValueDomain::Enum(symbols) => Some(symbols.iter().cloned().map(Value::Sym).collect()),
            ValueDomain::Integer | ValueDomain::Real { .. } => None,
        }
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            ValueDomain::Real { tolerance } => *tolerance,
            _ => 0.0,
        }
    }
}
