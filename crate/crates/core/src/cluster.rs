//! Agglomerative clustering of cases into attitudes.
//!
//! A cluster keeps one counter per attribute value. Two clusters are compared
//! through the value frequencies of each attribute (an L1 distance per
//! attribute, weighted and summed per category) and the context part is
//! balanced against action + outcome by `alpha`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::{AttrCategory, AttributeSchema, Case};

/// Attributes that never take part in distances.
pub const EXCLUDED: &[(AttrCategory, &str)] = &[(AttrCategory::Action, "expr.correct")];

/// Distances closer than this are treated as ties.
pub const TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("nothing to cluster")]
    Empty,
    #[error("clusters share member {0}")]
    Overlap(usize),
    #[error("clusters have different shapes")]
    ShapeMismatch,
    #[error("case has {got} values but the schema has {want} attributes")]
    CaseWidth { got: usize, want: usize },
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("threshold must be non-negative, got {0}")]
    Threshold(f64),
    #[error("weight given for unknown attribute `{0}`")]
    UnknownWeight(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub alpha: f64,
    pub stop_threshold: f64,
    pub normalize_categories: bool,
    /// Weight overrides keyed by qualified attribute name.
    #[serde(default)]
    pub weights: BTreeMap<String, u32>,
}

impl Default for ClusterParams {
    fn default() -> ClusterParams {
        ClusterParams { alpha: 0.5, stop_threshold: 4.0, normalize_categories: false, weights: BTreeMap::new() }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ClusterError::Alpha(self.alpha));
        }
        if self.stop_threshold.is_nan() || self.stop_threshold < 0.0 {
            return Err(ClusterError::Threshold(self.stop_threshold));
        }
        Ok(())
    }
}

/// Value counters for a set of cases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub members: BTreeSet<usize>,
    pub counters: Vec<Vec<u32>>,
    pub correct: u32,
    pub incorrect: u32,
}

impl ClusterStats {
    /// A one-case cluster with `id` as its member id.
    pub fn singleton(id: usize, case: &Case, schema: &AttributeSchema) -> Result<ClusterStats, ClusterError> {
        if case.values.len() != schema.len() {
            return Err(ClusterError::CaseWidth { got: case.values.len(), want: schema.len() });
        }
        let counters = schema
            .attributes()
            .iter()
            .zip(&case.values)
            .map(|(a, v)| {
                let mut c = vec![0; a.values.len()];
                if let Some(v) = v {
                    c[*v as usize] = 1;
                }
                c
            })
            .collect();
        let ok = case.is_correct();
        Ok(ClusterStats {
            members: BTreeSet::from([id]),
            counters,
            correct: u32::from(ok),
            incorrect: u32::from(!ok),
        })
    }

    pub fn size(&self) -> usize {
        (self.correct + self.incorrect) as usize
    }

    /// Smallest member id; identifies the cluster for tie-breaking.
    pub fn representative(&self) -> usize {
        *self.members.first().expect("clusters are never empty")
    }

    pub fn merge(&self, other: &ClusterStats) -> Result<ClusterStats, ClusterError> {
        if let Some(m) = self.members.intersection(&other.members).next() {
            return Err(ClusterError::Overlap(*m));
        }
        if self.counters.len() != other.counters.len()
            || self.counters.iter().zip(&other.counters).any(|(a, b)| a.len() != b.len())
        {
            return Err(ClusterError::ShapeMismatch);
        }
        Ok(ClusterStats {
            members: self.members.union(&other.members).copied().collect(),
            counters: self
                .counters
                .iter()
                .zip(&other.counters)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
            correct: self.correct + other.correct,
            incorrect: self.incorrect + other.incorrect,
        })
    }

    /// Same counters under a new single member id.
    pub fn relabel(&self, id: usize) -> ClusterStats {
        ClusterStats { members: BTreeSet::from([id]), ..self.clone() }
    }

    /// Value frequencies of attribute `attr`, or `None` when no member defines it.
    pub fn frequencies(&self, attr: usize) -> Option<Vec<f64>> {
        let c = &self.counters[attr];
        let total: u32 = c.iter().sum();
        (total > 0).then(|| c.iter().map(|&x| f64::from(x) / f64::from(total)).collect())
    }

    /// Index of the most frequent value (lowest index on ties).
    pub fn dominant(&self, attr: usize) -> Option<usize> {
        let c = &self.counters[attr];
        let max = *c.iter().max()?;
        (max > 0).then(|| c.iter().position(|&x| x == max).expect("max is present"))
    }
}

/// Per-attribute category and weight, resolved once from a schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    attrs: Vec<(AttrCategory, f64)>,
    alpha: f64,
    normalize: bool,
    totals: [f64; 3],
}

fn cat_index(c: AttrCategory) -> usize {
    match c {
        AttrCategory::Context => 0,
        AttrCategory::Action => 1,
        AttrCategory::Outcome => 2,
    }
}

impl Metric {
    pub fn new(schema: &AttributeSchema, params: &ClusterParams) -> Result<Metric, ClusterError> {
        params.validate()?;
        let mut attrs = Vec::with_capacity(schema.len());
        for a in schema.attributes() {
            let excluded = EXCLUDED.iter().any(|(c, n)| *c == a.category && *n == a.name);
            let w = params.weights.get(&a.qualified_name()).copied().unwrap_or(a.weight);
            attrs.push((a.category, if excluded { 0.0 } else { f64::from(w) }));
        }
        if let Some(k) = params.weights.keys().find(|k| schema.attributes().iter().all(|a| &a.qualified_name() != *k)) {
            return Err(ClusterError::UnknownWeight(k.clone()));
        }
        let mut totals = [0.0; 3];
        for (c, w) in &attrs {
            totals[cat_index(*c)] += w;
        }
        Ok(Metric { attrs, alpha: params.alpha, normalize: params.normalize_categories, totals })
    }

    /// Sum of the weights in `category`.
    pub fn weight_total(&self, category: AttrCategory) -> f64 {
        self.totals[cat_index(category)]
    }

    pub fn category_distance(&self, a: &ClusterStats, b: &ClusterStats, category: AttrCategory) -> f64 {
        let mut total = 0.0;
        for (d, (c, w)) in self.attrs.iter().enumerate() {
            if *c != category || *w == 0.0 {
                continue;
            }
            let (Some(fa), Some(fb)) = (a.frequencies(d), b.frequencies(d)) else { continue };
            let l1: f64 = fa.iter().zip(&fb).map(|(x, y)| (x - y).abs()).sum();
            total += w * l1;
        }
        total
    }

    pub fn distance(&self, a: &ClusterStats, b: &ClusterStats) -> f64 {
        let part = |c: AttrCategory| {
            let d = self.category_distance(a, b, c);
            let t = self.weight_total(c);
            if self.normalize && t > 0.0 {
                d / t
            } else {
                d
            }
        };
        self.alpha * part(AttrCategory::Context)
            + (1.0 - self.alpha) * (part(AttrCategory::Action) + part(AttrCategory::Outcome))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DendrogramNode {
    pub id: usize,
    pub stats: ClusterStats,
    /// Child node ids for merge nodes; `None` for leaves.
    pub children: Option<(usize, usize)>,
    pub distance: Option<f64>,
}

/// The merge tree. Leaves come first in input order, merge nodes follow in
/// the order the merges happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub nodes: Vec<DendrogramNode>,
    pub roots: Vec<usize>,
}

/// One merge: the two node ids and their distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
}

impl Dendrogram {
    pub fn node(&self, id: usize) -> &DendrogramNode {
        &self.nodes[id]
    }

    pub fn merges(&self) -> Vec<Merge> {
        self.nodes
            .iter()
            .filter_map(|n| {
                let (left, right) = n.children?;
                Some(Merge { left, right, distance: n.distance.expect("merge nodes carry a distance") })
            })
            .collect()
    }

    /// Surviving clusters, ordered by representative member id.
    pub fn attitudes(&self) -> Vec<&ClusterStats> {
        self.roots.iter().map(|&r| &self.nodes[r].stats).collect()
    }

    /// All leaf node ids under `id`.
    pub fn leaves(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            match self.nodes[n].children {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => out.push(n),
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dendrogram serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Dendrogram> {
        serde_json::from_str(text)
    }
}

/// Cluster cases; member ids are the case positions.
pub fn agglomerate(cases: &[Case], schema: &AttributeSchema, params: &ClusterParams) -> Result<Dendrogram, ClusterError> {
    let metric = Metric::new(schema, params)?;
    let leaves = cases
        .iter()
        .enumerate()
        .map(|(i, c)| ClusterStats::singleton(i, c, schema))
        .collect::<Result<Vec<_>, _>>()?;
    agglomerate_stats(leaves, &metric, params.stop_threshold)
}

/// Greedy agglomeration of prepared clusters.
///
/// Each round merges the closest pair; among pairs within [`TIE_EPSILON`] of
/// the minimum, the one with the smallest (lower, higher) representative ids
/// wins. Stops when the minimum exceeds `stop_threshold` or one cluster is left.
pub fn agglomerate_stats(leaves: Vec<ClusterStats>, metric: &Metric, stop_threshold: f64) -> Result<Dendrogram, ClusterError> {
    if leaves.is_empty() {
        return Err(ClusterError::Empty);
    }
    let n = leaves.len();
    let mut nodes: Vec<DendrogramNode> = leaves
        .into_iter()
        .enumerate()
        .map(|(id, stats)| DendrogramNode { id, stats, children: None, distance: None })
        .collect();
    // slot -> node id of the live cluster, or None once absorbed
    let mut live: Vec<Option<usize>> = (0..n).map(Some).collect();
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = metric.distance(&nodes[i].stats, &nodes[j].stats);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }

    loop {
        let slots: Vec<usize> = (0..n).filter(|&s| live[s].is_some()).collect();
        if slots.len() < 2 {
            break;
        }
        let mut min = f64::INFINITY;
        for (k, &i) in slots.iter().enumerate() {
            for &j in &slots[k + 1..] {
                min = min.min(dist[i][j]);
            }
        }
        if min > stop_threshold {
            break;
        }
        let rep = |s: usize| nodes[live[s].unwrap()].stats.representative();
        let mut best: Option<((usize, usize), (usize, usize))> = None;
        for (k, &i) in slots.iter().enumerate() {
            for &j in &slots[k + 1..] {
                if dist[i][j] > min + TIE_EPSILON {
                    continue;
                }
                let (ri, rj) = (rep(i), rep(j));
                let key = (ri.min(rj), ri.max(rj));
                if best.is_none_or(|(b, _)| key < b) {
                    best = Some((key, (i, j)));
                }
            }
        }
        let (_, (i, j)) = best.expect("at least one pair exists");
        let (a, b) = (live[i].unwrap(), live[j].unwrap());
        let (a, b) = if nodes[a].stats.representative() < nodes[b].stats.representative() { (a, b) } else { (b, a) };
        let merged = nodes[a].stats.merge(&nodes[b].stats)?;
        let id = nodes.len();
        nodes.push(DendrogramNode { id, stats: merged, children: Some((a, b)), distance: Some(dist[i][j]) });
        // the merged cluster takes the lower slot
        let (keep, drop) = (i.min(j), i.max(j));
        live[keep] = Some(id);
        live[drop] = None;
        for s in 0..n {
            if s != keep && live[s].is_some() {
                let d = metric.distance(&nodes[id].stats, &nodes[live[s].unwrap()].stats);
                dist[keep][s] = d;
                dist[s][keep] = d;
            }
        }
    }

    let mut roots: Vec<usize> = live.into_iter().flatten().collect();
    roots.sort_by_key(|&r| nodes[r].stats.representative());
    Ok(Dendrogram { nodes, roots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::AttributeDescriptor;
    use crate::rules::Correctness;

    fn table2_schema() -> AttributeSchema {
        let d = |n: &str, vals: &[&str]| AttributeDescriptor {
            name: n.into(),
            category: AttrCategory::Context,
            values: vals.iter().map(|v| v.to_string()).collect(),
            weight: 1,
        };
        AttributeSchema::new(vec![
            d("arg.side", &["left", "right"]),
            d("arg.location", &["beginning", "middle", "end", "alone"]),
            d("arg.complex", &["true", "false"]),
            d("arg.polynomial", &["true", "false"]),
        ])
        .unwrap()
    }

    #[test]
    fn singleton_has_one_counter_per_defined_attribute() {
        let schema = table2_schema();
        let case = Case::from_symbols(
            &schema,
            &[
                (AttrCategory::Context, "arg.side", "right"),
                (AttrCategory::Context, "arg.location", "middle"),
                (AttrCategory::Context, "arg.complex", "true"),
            ],
            Correctness::Correct,
        )
        .unwrap();
        let s = ClusterStats::singleton(12, &case, &schema).unwrap();
        assert_eq!(s.counters, vec![vec![0, 1], vec![0, 1, 0, 0], vec![1, 0], vec![0, 0]]);
        assert_eq!((s.correct, s.incorrect), (1, 0));
        assert_eq!(s.frequencies(3), None);
    }

    #[test]
    fn merge_rejects_overlap() {
        let schema = table2_schema();
        let case = Case::from_symbols(&schema, &[], Correctness::Incorrect).unwrap();
        let s = ClusterStats::singleton(0, &case, &schema).unwrap();
        assert_eq!(s.merge(&s), Err(ClusterError::Overlap(0)));
    }

    #[test]
    fn identical_cases_merge_first() {
        let schema = table2_schema();
        let a = Case::from_symbols(&schema, &[(AttrCategory::Context, "arg.side", "left")], Correctness::Correct).unwrap();
        let b = Case::from_symbols(&schema, &[(AttrCategory::Context, "arg.side", "right")], Correctness::Correct).unwrap();
        let params = ClusterParams { alpha: 1.0, stop_threshold: 0.5, ..ClusterParams::default() };
        let d = agglomerate(&[a.clone(), b, a], &schema, &params).unwrap();
        assert_eq!(d.roots.len(), 2);
        assert_eq!(d.merges(), vec![Merge { left: 0, right: 2, distance: 0.0 }]);
        assert_eq!(d.leaves(3), vec![0, 2]);
    }

    #[test]
    fn params_are_validated() {
        let schema = table2_schema();
        let bad = ClusterParams { alpha: 1.5, ..ClusterParams::default() };
        assert_eq!(Metric::new(&schema, &bad), Err(ClusterError::Alpha(1.5)));
        assert_eq!(agglomerate(&[], &schema, &ClusterParams::default()), Err(ClusterError::Empty));
    }
}
