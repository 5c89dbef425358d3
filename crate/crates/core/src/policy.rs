//! Treatment rules: a small expression language of threshold conjunctions.
//!
//! ```text
//! expr := atom ( '&' atom )*
//! atom := column op number | column ':' 'binary'
//! op   := '<=' | '<' | '>=' | '>' | '=='
//! ```

use std::fmt;

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

impl Comparison {
    fn symbol(self) -> &'static str {
        match self {
            Comparison::Le => "<=",
            Comparison::Lt => "<",
            Comparison::Ge => ">=",
            Comparison::Gt => ">",
            Comparison::Eq => "==",
        }
    }

    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparison::Le => lhs <= rhs,
            Comparison::Lt => lhs < rhs,
            Comparison::Ge => lhs >= rhs,
            Comparison::Gt => lhs > rhs,
            Comparison::Eq => lhs == rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Atom {
    Threshold {
        column: String,
        op: Comparison,
        value: f64,
    },
    /// The rule reads a 0/1 covariate directly.
    Binary { column: String },
}

impl Atom {
    fn column(&self) -> &str {
        match self {
            Atom::Threshold { column, .. } | Atom::Binary { column } => column,
        }
    }
}

/// A deterministic treatment rule `x -> {0, 1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyRule {
    atoms: Vec<Atom>,
}

impl PolicyRule {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Resolves column names against a covariate schema.
    pub fn bind(&self, names: &[String]) -> Result<BoundPolicy> {
        let atoms = self
            .atoms
            .iter()
            .map(|atom| {
                let idx = names
                    .iter()
                    .position(|n| n == atom.column())
                    .ok_or_else(|| Error::UnboundColumn(atom.column().to_string()))?;
                Ok(match atom {
                    Atom::Threshold { op, value, .. } => BoundAtom::Threshold {
                        idx,
                        op: *op,
                        value: *value,
                    },
                    Atom::Binary { .. } => BoundAtom::Binary { idx },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundPolicy { atoms })
    }
}

impl fmt::Display for PolicyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            match atom {
                Atom::Threshold { column, op, value } => {
                    write!(f, "{column} {} {value}", op.symbol())?
                }
                Atom::Binary { column } => write!(f, "{column}:binary")?,
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for PolicyRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_policy(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum BoundAtom {
    Threshold { idx: usize, op: Comparison, value: f64 },
    Binary { idx: usize },
}

/// A policy whose column references have been resolved to indices.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundPolicy {
    atoms: Vec<BoundAtom>,
}

impl BoundPolicy {
    pub fn eval(&self, x: &[f64]) -> Result<u8> {
        let mut out = 1u8;
        for atom in &self.atoms {
            let holds = match *atom {
                BoundAtom::Threshold { idx, op, value } => op.holds(x[idx], value),
                BoundAtom::Binary { idx } => match x[idx] {
                    v if v == 1.0 => true,
                    v if v == 0.0 => false,
                    v => {
                        return Err(Error::argument(
                            "core-data",
                            format!("binary policy column holds non-binary value {v}"),
                        ))
                    }
                },
            };
            if !holds {
                out = 0;
            }
        }
        Ok(out)
    }
}

/// Benchmark policy `delta_star` and the new policy `delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyPair {
    pub delta_star: PolicyRule,
    pub delta: PolicyRule,
}

impl PolicyPair {
    pub fn new(delta_star: PolicyRule, delta: PolicyRule) -> Self {
        PolicyPair { delta_star, delta }
    }

    pub fn parse(delta_star: &str, delta: &str) -> Result<Self> {
        Ok(PolicyPair::new(parse_policy(delta_star)?, parse_policy(delta)?))
    }

    pub fn bind(&self, names: &[String]) -> Result<BoundPair> {
        Ok(BoundPair {
            delta_star: self.delta_star.bind(names)?,
            delta: self.delta.bind(names)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundPair {
    pub delta_star: BoundPolicy,
    pub delta: BoundPolicy,
}

impl BoundPair {
    /// `(theta10, theta01)` at a covariate vector.
    pub fn indicators(&self, x: &[f64]) -> Result<(u8, u8)> {
        let new = self.delta.eval(x)?;
        let old = self.delta_star.eval(x)?;
        Ok(((new == 1 && old == 0) as u8, (new == 0 && old == 1) as u8))
    }
}

/// Per-row indicators of the newly treated (`theta10`) and of those no
/// longer treated (`theta01`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorVectors {
    pub theta10: Vec<u8>,
    pub theta01: Vec<u8>,
}

impl IndicatorVectors {
    pub fn len(&self) -> usize {
        self.theta10.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta10.is_empty()
    }

    pub fn at(&self, i: usize) -> (u8, u8) {
        (self.theta10[i], self.theta01[i])
    }
}

pub fn policy_indicators(pair: &PolicyPair, data: &Dataset) -> Result<IndicatorVectors> {
    let bound = pair.bind(data.x_names())?;
    let mut theta10 = Vec::with_capacity(data.len());
    let mut theta01 = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let (a, b) = bound.indicators(data.covariates(i)).map_err(|e| e.in_row(i))?;
        theta10.push(a);
        theta01.push(b);
    }
    Ok(IndicatorVectors { theta10, theta01 })
}

pub fn parse_policy(text: &str) -> Result<PolicyRule> {
    let mut parser = Parser {
        src: text,
        pos: 0,
    };
    parser.skip_ws();
    if parser.at_end() {
        return Err(syntax(0, "empty expression"));
    }
    let mut atoms = vec![parser.atom()?];
    loop {
        parser.skip_ws();
        if parser.at_end() {
            break;
        }
        if !parser.eat("&") {
            return Err(syntax(parser.pos, "expected '&' between conditions"));
        }
        atoms.push(parser.atom()?);
    }
    Ok(PolicyRule { atoms })
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::PolicySyntax {
        position,
        message: message.into(),
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let rest = self.rest();
        let len = rest.find(|c: char| !pred(c)).unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    fn atom(&mut self) -> Result<Atom> {
        self.skip_ws();
        let start = self.pos;
        let column = self.take_while(|c| c.is_alphanumeric() || c == '_' || c == '.');
        if column.is_empty() || column.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(syntax(start, "expected a column name"));
        }
        let column = column.to_string();
        self.skip_ws();
        if self.eat(":") {
            let kw_pos = self.pos;
            if self.take_while(|c| c.is_alphanumeric()) != "binary" {
                return Err(syntax(kw_pos, "expected 'binary' after ':'"));
            }
            return Ok(Atom::Binary { column });
        }
        let op_pos = self.pos;
        let op_text = self.take_while(|c| "<>=!".contains(c));
        let op = match op_text {
            "<=" => Comparison::Le,
            "<" => Comparison::Lt,
            ">=" => Comparison::Ge,
            ">" => Comparison::Gt,
            "==" => Comparison::Eq,
            "" => return Err(syntax(op_pos, "expected a comparison operator")),
            other => return Err(syntax(op_pos, format!("unknown operator '{other}'"))),
        };
        self.skip_ws();
        let num_pos = self.pos;
        let literal =
            self.take_while(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
        if literal.is_empty() {
            return Err(syntax(num_pos, "expected a numeric constant"));
        }
        let value: f64 = literal
            .parse()
            .map_err(|_| syntax(num_pos, format!("invalid number '{literal}'")))?;
        if !value.is_finite() {
            return Err(syntax(num_pos, "constant must be finite"));
        }
        Ok(Atom::Threshold { column, op, value })
    }
}
