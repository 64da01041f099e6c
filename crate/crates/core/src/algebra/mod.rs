//! One-variable algebraic expressions and (in)equations.
//!
//! Expressions are exact: constants are rationals over `i128`, so every
//! rewrite and every normalization is bit-deterministic. The text grammar
//! accepted by [`parse_relation`] covers integers, a single variable letter,
//! `+ - * / ^`, parentheses and implicit multiplication (`7x`, `3(x+1)`).

mod equiv;
mod normalize;
mod parse;
mod poly;
mod render;

use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use equiv::{equivalent, equivalent_with_bound, DEFAULT_DEGREE_BOUND};
pub use normalize::{eval_const, normalize, normalize_relation};
pub use parse::{parse_expr, parse_relation, ParseError, ParseErrorKind};
pub use render::{render, render_expr};

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("unsupported expression: {0}")]
    Unsupported(String),
    #[error("relations use different variables ({0} and {1})")]
    MismatchedVariables(char, char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }
}

/// A signed child of a sum.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub sign: Sign,
    pub expr: Expr,
}

impl Term {
    pub fn plus(expr: Expr) -> Term {
        Term { sign: Sign::Plus, expr }
    }

    pub fn minus(expr: Expr) -> Term {
        Term { sign: Sign::Minus, expr }
    }

    /// The term as a standalone expression, with its sign folded in.
    pub fn to_expr(&self) -> Expr {
        match self.sign {
            Sign::Plus => self.expr.clone(),
            Sign::Minus => self.expr.negated(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(Rational),
    Var(char),
    Sum(Vec<Term>),
    Product(Vec<Expr>),
    Quotient(Box<Expr>, Box<Expr>),
    Power(Box<Expr>, u32),
}

impl Expr {
    pub fn int(n: i128) -> Expr {
        Expr::Const(Rational::from_integer(n))
    }

    pub fn constant(r: Rational) -> Expr {
        Expr::Const(r)
    }

    pub fn quotient(num: Expr, den: Expr) -> Expr {
        Expr::Quotient(Box::new(num), Box::new(den))
    }

    pub fn power(base: Expr, exp: u32) -> Expr {
        Expr::Power(Box::new(base), exp)
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn contains_var(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(_) => true,
            Expr::Sum(ts) => ts.iter().any(|t| t.expr.contains_var()),
            Expr::Product(fs) => fs.iter().any(Expr::contains_var),
            Expr::Quotient(n, d) => n.contains_var() || d.contains_var(),
            Expr::Power(b, _) => b.contains_var(),
        }
    }

    /// The variable letter, if any occurs.
    pub fn variable(&self) -> Option<char> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(v) => Some(*v),
            Expr::Sum(ts) => ts.iter().find_map(|t| t.expr.variable()),
            Expr::Product(fs) => fs.iter().find_map(Expr::variable),
            Expr::Quotient(n, d) => n.variable().or_else(|| d.variable()),
            Expr::Power(b, _) => b.variable(),
        }
    }

    /// Whether the expression reads with a leading minus sign.
    pub fn is_negative_form(&self) -> bool {
        match self {
            Expr::Const(c) => c.is_negative(),
            Expr::Product(fs) => fs.first().is_some_and(Expr::is_negative_form),
            Expr::Quotient(n, _) => n.is_negative_form(),
            _ => false,
        }
    }

    /// Arithmetic negation, folded into a leading constant when there is one.
    pub fn negated(&self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Product(fs) => {
                if let Some(Expr::Const(c)) = fs.first() {
                    if *c == -Rational::one() && fs.len() >= 2 {
                        let rest = fs[1..].to_vec();
                        return if rest.len() == 1 {
                            rest.into_iter().next().unwrap()
                        } else {
                            Expr::Product(rest)
                        };
                    }
                    let mut out = fs.clone();
                    out[0] = Expr::Const(-c);
                    return Expr::Product(out);
                }
                if let Some(q @ Expr::Quotient(..)) = fs.first() {
                    let mut out = fs.clone();
                    out[0] = q.negated();
                    return Expr::Product(out);
                }
                let mut out = Vec::with_capacity(fs.len() + 1);
                out.push(Expr::int(-1));
                out.extend(fs.iter().cloned());
                Expr::Product(out)
            }
            Expr::Quotient(n, d) => Expr::Quotient(Box::new(n.negated()), d.clone()),
            other => Expr::Product(vec![Expr::int(-1), other.clone()]),
        }
    }

    /// Syntactic degree in the variable.
    pub fn degree(&self) -> u32 {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(_) => 1,
            Expr::Sum(ts) => ts.iter().map(|t| t.expr.degree()).max().unwrap_or(0),
            Expr::Product(fs) => fs.iter().map(Expr::degree).sum(),
            Expr::Quotient(n, _) => n.degree(),
            Expr::Power(b, k) => b.degree() * k,
        }
    }

    pub fn has_fraction(&self) -> bool {
        match self {
            Expr::Const(c) => !c.is_integer(),
            Expr::Var(_) => false,
            Expr::Sum(ts) => ts.iter().any(|t| t.expr.has_fraction()),
            Expr::Product(fs) => fs.iter().any(Expr::has_fraction),
            Expr::Quotient(..) => true,
            Expr::Power(b, _) => b.has_fraction(),
        }
    }

    /// Child at `index`, following the path convention used by [`NodeRef`]:
    /// sum → term `i`, product → factor `i`, quotient → 0 numerator / 1
    /// denominator, power → 0 base.
    pub fn child(&self, index: usize) -> Option<&Expr> {
        match self {
            Expr::Sum(ts) => ts.get(index).map(|t| &t.expr),
            Expr::Product(fs) => fs.get(index),
            Expr::Quotient(n, d) => match index {
                0 => Some(n),
                1 => Some(d),
                _ => None,
            },
            Expr::Power(b, _) if index == 0 => Some(b),
            _ => None,
        }
    }

    pub fn child_mut(&mut self, index: usize) -> Option<&mut Expr> {
        match self {
            Expr::Sum(ts) => ts.get_mut(index).map(|t| &mut t.expr),
            Expr::Product(fs) => fs.get_mut(index),
            Expr::Quotient(n, d) => match index {
                0 => Some(n),
                1 => Some(d),
                _ => None,
            },
            Expr::Power(b, _) if index == 0 => Some(b),
            _ => None,
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&Expr> {
        path.iter().try_fold(self, |e, &i| e.child(i))
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut Expr> {
        let mut cur = self;
        for &i in path {
            cur = cur.child_mut(i)?;
        }
        Some(cur)
    }

    /// Pre-order list of every node path.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        fn walk(e: &Expr, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            out.push(prefix.clone());
            let n = match e {
                Expr::Sum(ts) => ts.len(),
                Expr::Product(fs) => fs.len(),
                Expr::Quotient(..) => 2,
                Expr::Power(..) => 1,
                _ => 0,
            };
            for i in 0..n {
                prefix.push(i);
                walk(e.child(i).unwrap(), prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    /// Structural validity: nonzero constant denominators are guaranteed by
    /// `Ratio`; sums and products need at least two children.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => true,
            Expr::Sum(ts) => ts.len() >= 2 && ts.iter().all(|t| t.expr.is_well_formed()),
            Expr::Product(fs) => fs.len() >= 2 && fs.iter().all(Expr::is_well_formed),
            Expr::Quotient(n, d) => n.is_well_formed() && d.is_well_formed(),
            Expr::Power(b, _) => b.is_well_formed(),
        }
    }
}

/// The signed top-level terms of a side. A literal `0` side has no terms.
pub fn side_terms(e: &Expr) -> Vec<Term> {
    match e {
        Expr::Sum(ts) => ts.clone(),
        e if e.is_zero() => Vec::new(),
        e => vec![Term::plus(e.clone())],
    }
}

/// Inverse of [`side_terms`]: an empty list becomes `0`, a single term
/// becomes that term with its sign folded in.
pub fn from_terms(mut terms: Vec<Term>) -> Expr {
    match terms.len() {
        0 => Expr::int(0),
        1 => terms.pop().unwrap().to_expr(),
        _ => Expr::Sum(terms),
    }
}

/// Build a product, collapsing the one-factor case.
pub fn from_factors(mut factors: Vec<Expr>) -> Expr {
    match factors.len() {
        0 => Expr::int(1),
        1 => factors.pop().unwrap(),
        _ => Expr::Product(factors),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Eq => "=",
            Sense::Lt => "<",
            Sense::Gt => ">",
            Sense::Le => "<=",
            Sense::Ge => ">=",
        }
    }

    /// The sense obtained when both sides are multiplied by a negative number.
    pub fn reversed(self) -> Sense {
        match self {
            Sense::Eq => Sense::Eq,
            Sense::Lt => Sense::Gt,
            Sense::Gt => Sense::Lt,
            Sense::Le => Sense::Ge,
            Sense::Ge => Sense::Le,
        }
    }

    pub fn is_equation(self) -> bool {
        self == Sense::Eq
    }

    /// Truth of `lhs <sense> rhs` given the sign of `lhs - rhs`.
    pub fn holds(self, diff_sign: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            Sense::Eq => diff_sign == Equal,
            Sense::Lt => diff_sign == Less,
            Sense::Gt => diff_sign == Greater,
            Sense::Le => diff_sign != Greater,
            Sense::Ge => diff_sign != Less,
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relation {
    pub lhs: Expr,
    pub rhs: Expr,
    pub sense: Sense,
}

impl Relation {
    pub fn new(lhs: Expr, rhs: Expr, sense: Sense) -> Relation {
        Relation { lhs, rhs, sense }
    }

    pub fn side(&self, side: Side) -> &Expr {
        match side {
            Side::Left => &self.lhs,
            Side::Right => &self.rhs,
        }
    }

    pub fn side_mut(&mut self, side: Side) -> &mut Expr {
        match side {
            Side::Left => &mut self.lhs,
            Side::Right => &mut self.rhs,
        }
    }

    pub fn node(&self, node: &NodeRef) -> Option<&Expr> {
        self.side(node.side).at(&node.path)
    }

    pub fn variable(&self) -> Option<char> {
        self.lhs.variable().or_else(|| self.rhs.variable())
    }

    pub fn is_well_formed(&self) -> bool {
        self.lhs.is_well_formed() && self.rhs.is_well_formed()
    }
}

impl Relation {
    /// References to the signed top-level terms of one side, in order.
    pub fn term_refs(&self, side: Side) -> Vec<NodeRef> {
        match self.side(side) {
            Expr::Sum(ts) => (0..ts.len()).map(|i| NodeRef::new(side, vec![i])).collect(),
            e if e.is_zero() => Vec::new(),
            _ => vec![NodeRef::root(side)],
        }
    }

    /// Whether the node reads as negative once the signs written above it
    /// are taken into account. A leading factor or a numerator carries the
    /// sign of its parent; a `-` sum edge flips it.
    pub fn is_negative_at(&self, node: &NodeRef) -> bool {
        let root = self.side(node.side);
        let Some(e) = root.at(&node.path) else { return false };
        let mut neg = e.is_negative_form();
        let mut path = node.path.clone();
        while let Some(last) = path.pop() {
            match root.at(&path) {
                Some(Expr::Sum(ts)) => {
                    if ts[last].sign.is_minus() {
                        neg = !neg;
                    }
                    return neg;
                }
                Some(Expr::Product(_)) | Some(Expr::Quotient(..)) if last == 0 => {}
                _ => return neg,
            }
        }
        neg
    }
}

/// Structural key used to compare search states. Sums and products are
/// compared as multisets of their children, while constant arithmetic is
/// left alone, so `2/(-4)` and `-1/2` stay distinct.
pub fn shape_key(r: &Relation) -> String {
    format!("{}{}{}", expr_key(&r.lhs), r.sense.symbol(), expr_key(&r.rhs))
}

fn expr_key(e: &Expr) -> String {
    match e {
        Expr::Const(c) if c.is_integer() => c.to_integer().to_string(),
        Expr::Const(c) => format!("({})/({})", c.numer(), c.denom()),
        Expr::Var(v) => v.to_string(),
        Expr::Sum(_) => {
            let mut parts = Vec::new();
            flatten_key(e, Sign::Plus, &mut parts);
            parts.sort();
            format!("[{}]", parts.concat())
        }
        Expr::Product(fs) => {
            let mut parts: Vec<String> = fs.iter().map(expr_key).collect();
            parts.sort();
            format!("{{{}}}", parts.join("*"))
        }
        Expr::Quotient(n, d) => format!("({})/({})", expr_key(n), expr_key(d)),
        Expr::Power(b, k) => format!("({})^{}", expr_key(b), k),
    }
}

fn flatten_key(e: &Expr, sign: Sign, out: &mut Vec<String>) {
    match e {
        Expr::Sum(ts) => {
            for t in ts {
                let s = if sign.is_minus() { t.sign.flipped() } else { t.sign };
                flatten_key(&t.expr, s, out);
            }
        }
        e => {
            let (sign, e) = if e.is_negative_form() && !matches!(e, Expr::Quotient(..)) {
                (sign.flipped(), e.negated())
            } else {
                (sign, e.clone())
            };
            let mark = if sign.is_minus() { '-' } else { '+' };
            out.push(format!("{mark}{}", expr_key(&e)));
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

/// Address of a sub-expression inside a relation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeRef {
    pub side: Side,
    pub path: Vec<usize>,
}

impl NodeRef {
    pub fn new(side: Side, path: Vec<usize>) -> NodeRef {
        NodeRef { side, path }
    }

    pub fn root(side: Side) -> NodeRef {
        NodeRef { side, path: Vec::new() }
    }

    pub fn parent(&self) -> Option<NodeRef> {
        let mut path = self.path.clone();
        path.pop()?;
        Some(NodeRef { side: self.side, path })
    }

    pub fn child(&self, index: usize) -> NodeRef {
        let mut path = self.path.clone();
        path.push(index);
        NodeRef { side: self.side, path }
    }

    pub fn is_ancestor_of(&self, other: &NodeRef) -> bool {
        self.side == other.side && other.path.starts_with(&self.path)
    }
}
