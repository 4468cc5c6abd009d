//! Guard and output expressions.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! or    := and ("or" and)*
//! and   := not ("and" not)*
//! not   := "not" not | cmp
//! cmp   := sum (("==" | "!=" | "<" | ">" | "<=" | ">=") sum)?
//! sum   := prod (("+" | "-") prod)*
//! prod  := unary (("*" | "/") unary)*
//! unary := "-" unary | atom
//! atom  := integer | real | "true" | "false" | 'symbol' | port | "(" or ")"
//! ```

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Value),
    Port(String),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expression syntax error at column {column}: {message}")]
pub struct SyntaxError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("port `{0}` has no value")]
    Unbound(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, SyntaxError> {
        let tokens = lex(text)?;
        let mut parser = Parser { tokens, pos: 0, end: text.chars().count() + 1 };
        let expr = parser.or()?;
        match parser.peek() {
            None => Ok(expr),
            Some((col, tok)) => Err(SyntaxError {
                column: *col,
                message: alloc::format!("unexpected {tok}"),
            }),
        }
    }

    pub fn truth() -> Expr {
        Expr::Lit(Value::Bool(true))
    }

    /// Port names mentioned anywhere in the expression.
    pub fn ports(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_ports(&mut out);
        out
    }

    fn collect_ports(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Port(p) => {
                out.insert(p.clone());
            }
            Expr::Not(e) | Expr::Neg(e) => e.collect_ports(out),
            Expr::Bin(_, l, r) => {
                l.collect_ports(out);
                r.collect_ports(out);
            }
        }
    }

    /// Literals appearing in the expression.
    pub fn literals(&self) -> Vec<&Value> {
        let mut out = Vec::new();
        let mut stack = alloc::vec![self];
        while let Some(e) = stack.pop() {
            match e {
                Expr::Lit(v) => out.push(v),
                Expr::Port(_) => {}
                Expr::Not(x) | Expr::Neg(x) => stack.push(x),
                Expr::Bin(_, l, r) => {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        out
    }

    /// Evaluates with `lookup` resolving ports. Real `==`/`!=` compare with
    /// `tolerance`.
    pub fn eval<'a, F>(&self, lookup: &F, tolerance: f64) -> Result<Value, EvalError>
    where
        F: Fn(&str) -> Option<&'a Value>,
    {
        match self {
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Port(p) => lookup(p).cloned().ok_or_else(|| EvalError::Unbound(p.clone())),
            Expr::Not(e) => Ok(Value::Bool(!truthy(&e.eval(lookup, tolerance)?)?)),
            Expr::Neg(e) => match e.eval(lookup, tolerance)? {
                Value::Bool(b) => Ok(Value::Int(-(b as i64))),
                Value::Int(i) => i.checked_neg().map(Value::Int).ok_or(EvalError::Overflow),
                Value::Real(r) => Ok(Value::Real(-r)),
                Value::Sym(s) => Err(EvalError::TypeMismatch(alloc::format!("cannot negate `{s}`"))),
            },
            Expr::Bin(op, l, r) => {
                let a = l.eval(lookup, tolerance)?;
                let b = r.eval(lookup, tolerance)?;
                binary(*op, &a, &b, tolerance)
            }
        }
    }
}

fn truthy(v: &Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Int(i) => Ok(*i != 0),
        other => Err(EvalError::TypeMismatch(alloc::format!("`{other}` is not a truth value"))),
    }
}

fn numeric_pair(a: &Value, b: &Value) -> Result<Num, EvalError> {
    match (a, b) {
        (Value::Real(_), _) | (_, Value::Real(_)) => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => Ok(Num::Real(x, y)),
            _ => Err(mismatch(a, b)),
        },
        _ => match (a.as_i64(), b.as_i64()) {
            (Some(x), Some(y)) => Ok(Num::Int(x, y)),
            _ => Err(mismatch(a, b)),
        },
    }
}

enum Num {
    Int(i64, i64),
    Real(f64, f64),
}

fn mismatch(a: &Value, b: &Value) -> EvalError {
    EvalError::TypeMismatch(alloc::format!("incompatible operands `{a}` and `{b}`"))
}

fn equal(a: &Value, b: &Value, tolerance: f64) -> Result<bool, EvalError> {
    match (a, b) {
        (Value::Sym(x), Value::Sym(y)) => Ok(x == y),
        (Value::Sym(_), _) | (_, Value::Sym(_)) => Err(mismatch(a, b)),
        _ => Ok(match numeric_pair(a, b)? {
            Num::Int(x, y) => x == y,
            Num::Real(x, y) => (x - y).abs() <= tolerance,
        }),
    }
}

fn binary(op: BinOp, a: &Value, b: &Value, tolerance: f64) -> Result<Value, EvalError> {
    use BinOp::*;
    Ok(match op {
        Or => Value::Bool(truthy(a)? | truthy(b)?),
        And => Value::Bool(truthy(a)? & truthy(b)?),
        Eq => Value::Bool(equal(a, b, tolerance)?),
        Ne => Value::Bool(!equal(a, b, tolerance)?),
        Lt | Gt | Le | Ge => {
            let ord = match numeric_pair(a, b)? {
                Num::Int(x, y) => x.cmp(&y),
                Num::Real(x, y) => x.partial_cmp(&y).ok_or_else(|| mismatch(a, b))?,
            };
            Value::Bool(match op {
                Lt => ord.is_lt(),
                Gt => ord.is_gt(),
                Le => ord.is_le(),
                _ => ord.is_ge(),
            })
        }
        Add | Sub | Mul | Div => match numeric_pair(a, b)? {
            Num::Int(x, y) => Value::Int(
                match op {
                    Add => x.checked_add(y),
                    Sub => x.checked_sub(y),
                    Mul => x.checked_mul(y),
                    _ => {
                        if y == 0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        x.checked_div(y)
                    }
                }
                .ok_or(EvalError::Overflow)?,
            ),
            Num::Real(x, y) => Value::Real(match op {
                Add => x + y,
                Sub => x - y,
                Mul => x * y,
                _ => {
                    if y == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    x / y
                }
            }),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Int(i64),
    Real(f64),
    Sym(String),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Int(i) => write!(f, "`{i}`"),
            Token::Real(r) => write!(f, "`{r}`"),
            Token::Sym(s) => write!(f, "'{s}'"),
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::Op(o) => write!(f, "`{o}`"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Token)>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let lexeme: String = chars[start..i].iter().collect();
            let tok = if lexeme.contains('.') {
                lexeme.parse::<f64>().map(Token::Real).ok()
            } else {
                lexeme.parse::<i64>().map(Token::Int).ok()
            };
            match tok {
                Some(t) => out.push((col, t)),
                None => {
                    return Err(SyntaxError {
                        column: col,
                        message: alloc::format!("malformed number `{lexeme}`"),
                    })
                }
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "and" => Token::Op("and"),
                "or" => Token::Op("or"),
                "not" => Token::Op("not"),
                _ => Token::Ident(word),
            };
            out.push((col, tok));
            continue;
        }
        if c == '\'' || c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != c {
                j += 1;
            }
            if j == chars.len() {
                return Err(SyntaxError { column: col, message: "unterminated symbol".to_string() });
            }
            out.push((col, Token::Sym(chars[start..j].iter().collect())));
            i = j + 1;
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let op = match two.as_str() {
            "==" => Some("=="),
            "!=" => Some("!="),
            "<=" => Some("<="),
            ">=" => Some(">="),
            _ => None,
        };
        if let Some(op) = op {
            out.push((col, Token::Op(op)));
            i += 2;
            continue;
        }
        let tok = match c {
            '<' => Token::Op("<"),
            '>' => Token::Op(">"),
            '+' => Token::Op("+"),
            '-' => Token::Op("-"),
            '*' => Token::Op("*"),
            '/' => Token::Op("/"),
            '(' => Token::LParen,
            ')' => Token::RParen,
            _ => {
                return Err(SyntaxError {
                    column: col,
                    message: alloc::format!("unexpected character `{c}`"),
                })
            }
        };
        out.push((col, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(usize, Token)> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, ops: &[&'static str]) -> Option<&'static str> {
        match self.peek() {
            Some((_, Token::Op(o))) if ops.contains(o) => {
                let o = *o;
                self.pos += 1;
                Some(o)
            }
            _ => None,
        }
    }

    fn error(&self, message: &str) -> SyntaxError {
        let column = self.peek().map(|(c, _)| *c).unwrap_or(self.end);
        SyntaxError { column, message: message.to_string() }
    }

    fn or(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.and()?;
        while self.eat_op(&["or"]).is_some() {
            lhs = Expr::Bin(BinOp::Or, Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.not()?;
        while self.eat_op(&["and"]).is_some() {
            lhs = Expr::Bin(BinOp::And, Box::new(lhs), Box::new(self.not()?));
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_op(&["not"]).is_some() {
            return Ok(Expr::Not(Box::new(self.not()?)));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.sum()?;
        let op = match self.eat_op(&["==", "!=", "<", ">", "<=", ">="]) {
            Some("==") => BinOp::Eq,
            Some("!=") => BinOp::Ne,
            Some("<") => BinOp::Lt,
            Some(">") => BinOp::Gt,
            Some("<=") => BinOp::Le,
            Some(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        Ok(Expr::Bin(op, Box::new(lhs), Box::new(self.sum()?)))
    }

    fn sum(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.prod()?;
        while let Some(o) = self.eat_op(&["+", "-"]) {
            let op = if o == "+" { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.prod()?));
        }
        Ok(lhs)
    }

    fn prod(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        while let Some(o) = self.eat_op(&["*", "/"]) {
            let op = if o == "*" { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_op(&["-"]).is_some() {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        let Some((_, tok)) = self.peek().cloned() else {
            return Err(self.error("unexpected end of expression"));
        };
        let expr = match tok {
            Token::Int(i) => Expr::Lit(Value::Int(i)),
            Token::Real(r) => Expr::Lit(Value::Real(r)),
            Token::Sym(s) => Expr::Lit(Value::Sym(s)),
            Token::Ident(w) if w == "true" => Expr::Lit(Value::Bool(true)),
            Token::Ident(w) if w == "false" => Expr::Lit(Value::Bool(false)),
            Token::Ident(w) => Expr::Port(w),
            Token::LParen => {
                self.pos += 1;
                let inner = self.or()?;
                if !matches!(self.peek(), Some((_, Token::RParen))) {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                return Ok(inner);
            }
            Token::RParen | Token::Op(_) => return Err(self.error("expected a value")),
        };
        self.pos += 1;
        Ok(expr)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f, 0)
    }
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
    match e {
        Expr::Lit(Value::Bool(b)) => f.write_str(if *b { "true" } else { "false" }),
        Expr::Lit(Value::Int(i)) if *i < 0 => write!(f, "({i})"),
        Expr::Lit(Value::Int(i)) => write!(f, "{i}"),
        Expr::Lit(Value::Real(r)) => {
            let text = alloc::format!("{r:?}");
            if *r < 0.0 {
                write!(f, "({text})")
            } else {
                f.write_str(&text)
            }
        }
        Expr::Lit(Value::Sym(s)) => write!(f, "'{s}'"),
        Expr::Port(p) => f.write_str(p),
        Expr::Not(inner) => {
            let paren = min_prec > 3;
            if paren {
                f.write_str("(")?;
            }
            f.write_str("not ")?;
            write_expr(inner, f, 3)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Expr::Neg(inner) => {
            f.write_str("-")?;
            write_expr(inner, f, 7)
        }
        Expr::Bin(op, l, r) => {
            let p = op.precedence();
            let paren = p < min_prec;
            if paren {
                f.write_str("(")?;
            }
            // comparisons do not chain, so both sides bind tighter
            let (lp, rp) = if p == 4 { (5, 5) } else { (p, p + 1) };
            write_expr(l, f, lp)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(r, f, rp)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}
