//! Decomposition of a raw transition into elementary rule applications.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{shape_key, Relation};
use crate::rules::{applicable_rewrites, Correctness, Locus, RuleSet};

pub const DEFAULT_BUDGET: usize = 5000;

/// One recorded `{initial state, final state}` transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPair {
    pub student_id: String,
    pub problem_id: String,
    pub step_index: u32,
    pub from: Relation,
    pub to: Relation,
}

/// A single rule application; `to` is exactly what the rule produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementaryStep {
    #[serde(with = "relation_text")]
    pub from: Relation,
    #[serde(with = "relation_text")]
    pub to: Relation,
    pub rule_id: String,
    pub correctness: Correctness,
    pub locus: Locus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentError {
    #[error("search budget must be positive")]
    ZeroBudget,
    #[error("no decomposition found after expanding {expanded} states")]
    BudgetExhausted { expanded: usize },
    #[error("no decomposition exists with the given rules ({expanded} states explored)")]
    Unreachable { expanded: usize },
}

pub fn segment_pair(pair: &StepPair, rules: &RuleSet, budget: usize) -> Result<Vec<ElementaryStep>, SegmentError> {
    segment(&pair.from, &pair.to, rules, budget)
}

struct Node {
    state: Relation,
    parent: Option<usize>,
    step: Option<(String, Correctness, Locus)>,
}

/// Best-first search from `from` to `to`.
///
/// States are identified by [`shape_key`]. The queue is ordered by
/// (steps + h, incorrect steps, rule-id path) where `h` is 0 at the target
/// and 1 elsewhere, so the first goal popped has the fewest steps, then the
/// fewest incorrect steps, then the smallest rule-id sequence.
pub fn segment(from: &Relation, to: &Relation, rules: &RuleSet, budget: usize) -> Result<Vec<ElementaryStep>, SegmentError> {
    if budget == 0 {
        return Err(SegmentError::ZeroBudget);
    }
    let target = shape_key(to);
    let mut nodes = vec![Node { state: from.clone(), parent: None, step: None }];
    type Key = (usize, usize, Vec<(String, usize)>, usize);
    let mut heap: BinaryHeap<Reverse<Key>> = BinaryHeap::new();
    let h = |key: &str| usize::from(key != target);
    heap.push(Reverse((h(&shape_key(from)), 0, Vec::new(), 0)));
    let mut closed: HashSet<String> = HashSet::new();
    let mut expanded = 0;

    while let Some(Reverse((_, incorrect, path, idx))) = heap.pop() {
        let key = shape_key(&nodes[idx].state);
        if key == target {
            return Ok(unwind(&nodes, idx));
        }
        if !closed.insert(key) {
            continue;
        }
        if expanded == budget {
            return Err(SegmentError::BudgetExhausted { expanded });
        }
        expanded += 1;
        let state = nodes[idx].state.clone();
        for (site, rw) in applicable_rewrites(&state, rules).into_iter().enumerate() {
            let k = shape_key(&rw.result);
            if closed.contains(&k) {
                continue;
            }
            let bad = incorrect + usize::from(!rw.rule.correctness.is_correct());
            let mut p = path.clone();
            p.push((rw.rule.id.clone(), site));
            let g = p.len();
            nodes.push(Node {
                state: rw.result,
                parent: Some(idx),
                step: Some((rw.rule.id.clone(), rw.rule.correctness, rw.locus)),
            });
            heap.push(Reverse((g + h(&k), bad, p, nodes.len() - 1)));
        }
    }
    Err(SegmentError::Unreachable { expanded })
}

fn unwind(nodes: &[Node], mut idx: usize) -> Vec<ElementaryStep> {
    let mut out = Vec::new();
    while let Some(parent) = nodes[idx].parent {
        let (rule_id, correctness, locus) = nodes[idx].step.clone().expect("non-root nodes carry a step");
        out.push(ElementaryStep {
            from: nodes[parent].state.clone(),
            to: nodes[idx].state.clone(),
            rule_id,
            correctness,
            locus,
        });
        idx = parent;
    }
    out.reverse();
    out
}

/// Serialize relations as their rendered text.
pub mod relation_text {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::algebra::{parse_relation, render, Relation};

    pub fn serialize<S: Serializer>(r: &Relation, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&render(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Relation, D::Error> {
        let text = String::deserialize(d)?;
        parse_relation(&text).map_err(D::Error::custom)
    }
}
