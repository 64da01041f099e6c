//! Encoding of elementary steps as {context, action, outcome} cases.

mod schema;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use schema::{AttrCategory, AttributeDescriptor, AttributeSchema, SchemaError};

use crate::algebra::{render, Expr, NodeRef, Relation, Side};
use crate::rules::Correctness;
use crate::segment::ElementaryStep;

/// Attributes every schema must define for the algebra encoder.
pub const MANDATORY: &[(AttrCategory, &str)] = &[
    (AttrCategory::Context, "arg.side"),
    (AttrCategory::Context, "arg.location"),
    (AttrCategory::Context, "arg.polynomial"),
    (AttrCategory::Context, "arg.coefficient"),
    (AttrCategory::Context, "arg.implicitSign"),
    (AttrCategory::Context, "arg.operator"),
    (AttrCategory::Context, "arg.category"),
    (AttrCategory::Context, "arg.negative"),
    (AttrCategory::Context, "arg.complex"),
    (AttrCategory::Context, "term.polynomial"),
    (AttrCategory::Context, "expr.type"),
    (AttrCategory::Context, "expr.polynomial"),
    (AttrCategory::Action, "arg.operatorChanged"),
    (AttrCategory::Action, "arg.categoryChanged"),
    (AttrCategory::Action, "arg.signChanged"),
    (AttrCategory::Action, "expr.typeChanged"),
    (AttrCategory::Action, "expr.senseChanged"),
    (AttrCategory::Action, "expr.correct"),
    (AttrCategory::Outcome, "arg.side"),
    (AttrCategory::Outcome, "arg.operator"),
    (AttrCategory::Outcome, "arg.category"),
    (AttrCategory::Outcome, "arg.negative"),
    (AttrCategory::Outcome, "arg.location"),
    (AttrCategory::Outcome, "expr.type"),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("schema is missing mandatory attribute {0}")]
    MissingMandatory(String),
    #[error("schema attribute {0} has no encoder")]
    UnknownAttribute(String),
    #[error("value `{value}` is outside the domain of {attribute}")]
    OutOfDomain { attribute: String, value: String },
}

/// The three location levels of a step's argument.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgumentLocus {
    pub argument: Expr,
    pub term: Expr,
    pub expression: Relation,
    pub argument_ref: NodeRef,
    pub term_ref: NodeRef,
}

pub fn locate_argument(step: &ElementaryStep) -> ArgumentLocus {
    let rel = &step.from;
    ArgumentLocus {
        argument: rel.node(&step.locus.arg).expect("locus points into the initial state").clone(),
        term: rel.node(&step.locus.term).expect("locus points into the initial state").clone(),
        expression: rel.clone(),
        argument_ref: step.locus.arg.clone(),
        term_ref: step.locus.term.clone(),
    }
}

/// Where a case came from, kept for examples in diagnoses.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseOrigin {
    pub rule_id: String,
    pub from: String,
    pub to: String,
}

/// One value index per schema attribute; `None` marks an attribute that does
/// not apply to this step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Case {
    pub values: Vec<Option<u16>>,
    pub correctness: Correctness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<CaseOrigin>,
}

impl Case {
    /// Build a case from `(category, attribute, value)` triples; unlisted
    /// attributes are undefined.
    pub fn from_symbols(
        schema: &AttributeSchema,
        symbols: &[(AttrCategory, &str, &str)],
        correctness: Correctness,
    ) -> Result<Case, EncodeError> {
        let mut values = vec![None; schema.len()];
        for (cat, name, sym) in symbols {
            let idx = schema
                .index_of(*cat, name)
                .ok_or_else(|| EncodeError::UnknownAttribute(format!("{cat}.{name}")))?;
            let a = &schema.attributes()[idx];
            let v = a.value_index(sym).ok_or_else(|| EncodeError::OutOfDomain {
                attribute: a.qualified_name(),
                value: sym.to_string(),
            })?;
            values[idx] = Some(v as u16);
        }
        Ok(Case { values, correctness, origin: None })
    }

    pub fn value<'s>(&self, schema: &'s AttributeSchema, category: AttrCategory, name: &str) -> Option<&'s str> {
        let idx = schema.index_of(category, name)?;
        let v = self.values[idx]?;
        Some(schema.attributes()[idx].values[v as usize].as_str())
    }

    pub fn is_correct(&self) -> bool {
        self.correctness.is_correct()
    }
}

pub fn encode_case(step: &ElementaryStep, schema: &AttributeSchema) -> Result<Case, EncodeError> {
    for (cat, name) in MANDATORY {
        if schema.index_of(*cat, name).is_none() {
            return Err(EncodeError::MissingMandatory(format!("{cat}.{name}")));
        }
    }
    let feats = features(step);
    let mut values = Vec::with_capacity(schema.len());
    for a in schema.attributes() {
        let Some(sym) = feats.get(&(a.category, a.name.as_str())) else {
            return Err(EncodeError::UnknownAttribute(a.qualified_name()));
        };
        match sym {
            None => values.push(None),
            Some(s) => {
                let v = a.value_index(s).ok_or_else(|| EncodeError::OutOfDomain {
                    attribute: a.qualified_name(),
                    value: s.clone(),
                })?;
                values.push(Some(v as u16));
            }
        }
    }
    Ok(Case {
        values,
        correctness: step.correctness,
        origin: Some(CaseOrigin { rule_id: step.rule_id.clone(), from: render(&step.from), to: render(&step.to) }),
    })
}

fn flag(b: bool) -> Option<String> {
    Some(b.to_string())
}

/// How a node is attached to its parent.
fn operator(rel: &Relation, node: &NodeRef) -> &'static str {
    let Some(parent) = node.parent() else { return "+" };
    match rel.node(&parent) {
        Some(Expr::Product(_)) => "×",
        Some(Expr::Quotient(..)) if node.path.last() == Some(&1) => "/",
        Some(Expr::Quotient(..)) => "×",
        Some(Expr::Power(..)) => "^",
        _ => "+",
    }
}

fn op_category(op: &str) -> &'static str {
    match op {
        "+" => "additive",
        "^" => "exponent",
        _ => "multiplicative",
    }
}

fn location(rel: &Relation, node: &NodeRef) -> &'static str {
    let n = rel.term_refs(node.side).len();
    if n <= 1 || node.path.is_empty() {
        return "alone";
    }
    match node.path[0] {
        0 => "beginning",
        i if i + 1 == n => "end",
        _ => "middle",
    }
}

fn in_denominator(rel: &Relation, node: &NodeRef) -> bool {
    let root = rel.side(node.side);
    (1..=node.path.len()).any(|k| {
        matches!(root.at(&node.path[..k - 1]), Some(Expr::Quotient(..))) && node.path[k - 1] == 1
    })
}

fn is_coefficient(rel: &Relation, node: &NodeRef) -> bool {
    let Some(parent) = node.parent() else { return false };
    match (rel.node(&parent), rel.node(node)) {
        (Some(Expr::Product(fs)), Some(Expr::Const(_))) => {
            node.path.last() == Some(&0) && fs[1..].iter().any(Expr::contains_var)
        }
        _ => false,
    }
}

fn bucket(n: usize, labels: &[&str]) -> String {
    labels[n.min(labels.len() - 1)].to_string()
}

fn arity(e: &Expr) -> usize {
    match e {
        Expr::Sum(ts) => ts.len(),
        Expr::Product(fs) => fs.len(),
        Expr::Quotient(..) => 2,
        _ => 1,
    }
}

fn side_name(s: Side) -> Option<String> {
    Some(s.name().to_string())
}

fn expr_type(rel: &Relation) -> &'static str {
    if rel.sense.is_equation() {
        "equation"
    } else {
        "inequation"
    }
}

type Features = BTreeMap<(AttrCategory, &'static str), Option<String>>;

fn features(step: &ElementaryStep) -> Features {
    use AttrCategory::*;
    let from = &step.from;
    let to = &step.to;
    let arg_ref = &step.locus.arg;
    let term_ref = &step.locus.term;
    let out_ref = &step.locus.outcome;
    let arg = from.node(arg_ref).expect("locus points into the initial state");
    let term = from.node(term_ref).expect("locus points into the initial state");
    let konst = arg.as_const().copied();

    let mut f = Features::new();
    let op = operator(from, arg_ref);
    let neg = from.is_negative_at(arg_ref);
    let out_op = operator(to, out_ref);
    let out_neg = to.is_negative_at(out_ref);
    let first_term = arg_ref.path.first().copied().unwrap_or(0) == 0;

    f.insert((Context, "arg.side"), side_name(arg_ref.side));
    f.insert((Context, "arg.location"), Some(location(from, arg_ref).into()));
    f.insert((Context, "arg.polynomial"), flag(arg.contains_var()));
    f.insert((Context, "arg.coefficient"), flag(is_coefficient(from, arg_ref)));
    f.insert((Context, "arg.implicitSign"), flag(!neg && first_term));
    f.insert((Context, "arg.operator"), Some(op.into()));
    f.insert((Context, "arg.category"), Some(op_category(op).into()));
    f.insert((Context, "arg.negative"), flag(neg));
    f.insert((Context, "arg.complex"), flag(!matches!(arg, Expr::Const(_) | Expr::Var(_))));
    f.insert((Context, "arg.integer"), konst.and_then(|c| flag(c.is_integer())));
    f.insert((Context, "arg.fraction"), flag(matches!(arg, Expr::Quotient(..)) || konst.is_some_and(|c| !c.is_integer())));
    f.insert((Context, "arg.isZero"), konst.and_then(|c| flag(c == 0.into())));
    f.insert((Context, "arg.isOne"), konst.and_then(|c| flag(c == 1.into() || c == (-1).into())));
    f.insert((Context, "arg.denominatorPosition"), flag(in_denominator(from, arg_ref)));
    f.insert((Context, "term.polynomial"), flag(term.contains_var()));
    f.insert((Context, "term.negative"), flag(from.is_negative_at(term_ref)));
    f.insert((Context, "term.length"), Some(bucket(arity(term), &["1", "1", "2", "3+"])));
    f.insert((Context, "term.side"), side_name(term_ref.side));
    f.insert((Context, "expr.type"), Some(expr_type(from).into()));
    f.insert((Context, "expr.polynomial"), flag(from.lhs.contains_var() || from.rhs.contains_var()));
    f.insert((Context, "expr.sense"), Some(from.sense.symbol().into()));
    let degree = from.lhs.degree().max(from.rhs.degree()) as usize;
    f.insert((Context, "expr.degree"), Some(bucket(degree, &["0", "1", "2", "3+"])));
    let terms = from.term_refs(Side::Left).len() + from.term_refs(Side::Right).len();
    f.insert((Context, "expr.numTerms"), Some(bucket(terms, &["1", "1", "2", "3", "4+"])));
    f.insert((Context, "expr.hasFractions"), flag(from.lhs.has_fraction() || from.rhs.has_fraction()));
    f.insert((Context, "expr.bothSidesNonEmpty"), flag(!from.lhs.is_zero() && !from.rhs.is_zero()));

    f.insert((Action, "arg.operatorChanged"), flag(op != out_op));
    f.insert((Action, "arg.categoryChanged"), flag(op_category(op) != op_category(out_op)));
    f.insert((Action, "arg.signChanged"), flag(neg != out_neg));
    f.insert((Action, "expr.typeChanged"), flag(expr_type(from) != expr_type(to)));
    f.insert((Action, "expr.senseChanged"), flag(from.sense != to.sense));
    f.insert((Action, "expr.correct"), flag(step.correctness.is_correct()));

    f.insert((Outcome, "arg.side"), side_name(out_ref.side));
    f.insert((Outcome, "arg.operator"), Some(out_op.into()));
    f.insert((Outcome, "arg.category"), Some(op_category(out_op).into()));
    f.insert((Outcome, "arg.negative"), flag(out_neg));
    f.insert((Outcome, "arg.location"), Some(location(to, out_ref).into()));
    f.insert((Outcome, "expr.type"), Some(expr_type(to).into()));
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_relation;
    use crate::rules::RuleSet;
    use crate::segment::{segment, DEFAULT_BUDGET};

    fn step(a: &str, b: &str) -> ElementaryStep {
        let mut s =
            segment(&parse_relation(a).unwrap(), &parse_relation(b).unwrap(), &RuleSet::default(), DEFAULT_BUDGET)
                .unwrap();
        assert_eq!(s.len(), 1);
        s.pop().unwrap()
    }

    #[test]
    fn locus_levels() {
        let l = locate_argument(&step("7x-4=3", "7x=3+4"));
        assert_eq!(l.argument, Expr::int(4));
        assert_eq!(l.term, l.expression.lhs);
        let alone = locate_argument(&step("x/3=2", "x=2*3"));
        assert_eq!(alone.argument, Expr::int(3));
        let l = locate_argument(&step("5=x", "5-x=0"));
        assert_eq!(l.argument, l.term);
    }

    #[test]
    fn additive_move_encoding() {
        let schema = AttributeSchema::default();
        let c = encode_case(&step("7x-4=3", "7x=3+4"), &schema).unwrap();
        let v = |cat, n| c.value(&schema, cat, n).unwrap();
        assert_eq!(v(AttrCategory::Context, "arg.negative"), "true");
        assert_eq!(v(AttrCategory::Outcome, "arg.negative"), "false");
        assert_eq!(v(AttrCategory::Action, "arg.signChanged"), "true");
        assert_eq!(v(AttrCategory::Context, "arg.side"), "left");
        assert_eq!(v(AttrCategory::Outcome, "arg.side"), "right");
        assert_eq!(v(AttrCategory::Action, "expr.correct"), "true");
        assert_eq!(c.value(&schema, AttrCategory::Context, "arg.integer"), Some("true"));
    }

    #[test]
    fn undefined_attributes_for_non_constants() {
        let schema = AttributeSchema::default();
        let c = encode_case(&step("x+2=3x", "2=3x-x"), &schema).unwrap();
        assert_eq!(c.value(&schema, AttrCategory::Context, "arg.integer"), None);
        assert_eq!(c.value(&schema, AttrCategory::Context, "arg.isZero"), None);
        assert_eq!(c.value(&schema, AttrCategory::Action, "arg.signChanged"), Some("true"));
    }

    #[test]
    fn missing_mandatory_attribute() {
        let schema = AttributeSchema::default();
        let kept: Vec<_> = schema.attributes().iter().filter(|a| a.name != "arg.side").cloned().collect();
        let small = AttributeSchema::new(kept).unwrap();
        assert!(matches!(
            encode_case(&step("7x-4=3", "7x=3+4"), &small),
            Err(EncodeError::MissingMandatory(_))
        ));
    }
}

