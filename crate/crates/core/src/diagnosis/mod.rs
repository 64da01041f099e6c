//! Coherence labels, explanations and readable descriptions of attitudes.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{ClusterStats, Dendrogram, Metric};
use crate::encode::{AttrCategory, AttributeSchema, Case};

const DEFAULT_TEMPLATES: &str = include_str!("default_templates.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coherence {
    CoherentCorrect,
    CoherentIncorrect,
    Incoherent,
}

impl Coherence {
    pub fn name(self) -> &'static str {
        match self {
            Coherence::CoherentCorrect => "coherent_correct",
            Coherence::CoherentIncorrect => "coherent_incorrect",
            Coherence::Incoherent => "incoherent",
        }
    }

    pub fn is_coherent(self) -> bool {
        self != Coherence::Incoherent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisParams {
    pub min_count: u32,
    pub min_fraction: f64,
}

impl Default for DiagnosisParams {
    fn default() -> DiagnosisParams {
        DiagnosisParams { min_count: 2, min_fraction: 0.15 }
    }
}

/// Incoherent when the minority correctness reaches both `min_count` cases
/// and `min_fraction` of the members; otherwise the majority decides (ties
/// count as correct).
pub fn classify_coherence(stats: &ClusterStats, params: &DiagnosisParams) -> Coherence {
    let minority = stats.correct.min(stats.incorrect);
    let n = stats.size().max(1) as f64;
    if minority >= params.min_count && f64::from(minority) / n >= params.min_fraction {
        Coherence::Incoherent
    } else if stats.correct >= stats.incorrect {
        Coherence::CoherentCorrect
    } else {
        Coherence::CoherentIncorrect
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attitude {
    /// 1-based, in the order of the dendrogram roots.
    pub id: usize,
    pub node: usize,
    pub stats: ClusterStats,
    pub coherence: Coherence,
}

pub fn attitudes(d: &Dendrogram, params: &DiagnosisParams) -> Vec<Attitude> {
    d.roots
        .iter()
        .enumerate()
        .map(|(i, &node)| {
            let stats = d.node(node).stats.clone();
            let coherence = classify_coherence(&stats, params);
            Attitude { id: i + 1, node, stats, coherence }
        })
        .collect()
}

/// A context attribute whose dominant value differs between two clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discriminant {
    pub attribute: String,
    /// Dominant value in the cluster with more incorrect cases.
    pub value: String,
    /// Dominant value in the other cluster.
    pub other_value: String,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub split_node: usize,
    /// Set when no node below the attitude joins two coherent clusters.
    pub flagged: bool,
    pub discriminants: Vec<Discriminant>,
}

/// Context attributes whose dominant values differ, largest frequency gap first.
pub fn discriminants(a: &ClusterStats, b: &ClusterStats, schema: &AttributeSchema) -> Vec<Discriminant> {
    let rate = |s: &ClusterStats| f64::from(s.incorrect) / s.size().max(1) as f64;
    let (bad, good) = if rate(b) > rate(a) { (b, a) } else { (a, b) };
    let mut out = Vec::new();
    for (i, attr) in schema.attributes().iter().enumerate() {
        if attr.category != AttrCategory::Context {
            continue;
        }
        let (Some(x), Some(y)) = (bad.dominant(i), good.dominant(i)) else { continue };
        if x == y {
            continue;
        }
        let (fx, fy) = (bad.frequencies(i).unwrap(), good.frequencies(i).unwrap());
        let gap = fx.iter().zip(&fy).map(|(p, q)| (p - q).abs()).sum();
        out.push(Discriminant {
            attribute: attr.qualified_name(),
            value: attr.values[x].clone(),
            other_value: attr.values[y].clone(),
            gap,
        });
    }
    out.sort_by(|p, q| q.gap.total_cmp(&p.gap));
    out
}

/// Walk down from the attitude's node, breadth first, to the shallowest
/// merge of two coherent clusters. Returns `None` for leaves.
pub fn explain_incoherence(
    attitude: &Attitude,
    d: &Dendrogram,
    schema: &AttributeSchema,
    params: &DiagnosisParams,
) -> Option<Explanation> {
    d.node(attitude.node).children?;
    let coherent = |n: usize| classify_coherence(&d.node(n).stats, params).is_coherent();
    let mut queue = VecDeque::from([attitude.node]);
    let mut fallback = attitude.node;
    let mut found = None;
    while let Some(n) = queue.pop_front() {
        let Some((l, r)) = d.node(n).children else { continue };
        if coherent(l) && coherent(r) {
            found = Some(n);
            break;
        }
        if coherent(l) || coherent(r) {
            fallback = n;
        }
        queue.push_back(l);
        queue.push_back(r);
    }
    let split = found.unwrap_or(fallback);
    let (l, r) = d.node(split).children.expect("split nodes are merges");
    Some(Explanation {
        split_node: split,
        flagged: found.is_none(),
        discriminants: discriminants(&d.node(l).stats, &d.node(r).stats, schema),
    })
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("cannot read templates: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid template file: {0}")]
    Toml(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionPhrase {
    pub attribute: String,
    pub phrase: String,
    #[serde(default)]
    pub always: bool,
    /// Like `always`, but only for this relation type.
    #[serde(default)]
    pub always_for: Option<String>,
}

/// Sentence pieces for descriptions; see the embedded default file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Templates {
    pub header: String,
    pub description: String,
    pub action_clause: String,
    pub outcome_clause: String,
    pub split: String,
    pub held: String,
    pub absent: String,
    pub incoherent_note: String,
    pub causes_intro: String,
    pub coherent_correct_note: String,
    pub coherent_incorrect_note: String,
    pub unresolved_note: String,
    pub adjective: BTreeMap<String, String>,
    pub value: BTreeMap<String, String>,
    #[serde(default)]
    pub action: Vec<ActionPhrase>,
    #[serde(default)]
    pub cause: BTreeMap<String, String>,
}

impl Templates {
    pub fn from_toml_str(text: &str) -> Result<Templates, TemplateError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Templates, TemplateError> {
        Templates::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

impl Default for Templates {
    fn default() -> Templates {
        Templates::from_toml_str(DEFAULT_TEMPLATES).expect("embedded templates are valid")
    }
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub case_id: usize,
    pub from: String,
    pub to: String,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub attitude_id: usize,
    pub coherence: Coherence,
    pub size: usize,
    pub correct: u32,
    pub incorrect: u32,
    pub header: String,
    pub description: String,
    pub examples: Vec<Example>,
    pub explanation: Vec<String>,
    pub causes: Vec<Discriminant>,
}

impl Diagnosis {
    /// Plain-text block: header, diagnostic, examples, explanation.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{}", self.header).unwrap();
        writeln!(s, "Diagnostic:").unwrap();
        writeln!(s, "{}", self.description).unwrap();
        writeln!(s, "Examples:").unwrap();
        for e in &self.examples {
            writeln!(s, "  {} -----> {}", e.from, e.to).unwrap();
        }
        writeln!(s, "Explanation:").unwrap();
        for line in &self.explanation {
            writeln!(s, "{line}").unwrap();
        }
        s
    }
}

/// Everything needed to describe attitudes of one clustering.
pub struct Describer<'a> {
    pub schema: &'a AttributeSchema,
    pub metric: &'a Metric,
    pub templates: &'a Templates,
    pub params: &'a DiagnosisParams,
}

impl Describer<'_> {
    fn attr(&self, cat: AttrCategory, name: &str) -> Option<usize> {
        self.schema.index_of(cat, name)
    }

    /// Values holding at least `min_fraction` of the defined counts,
    /// most frequent first.
    fn significant(&self, stats: &ClusterStats, idx: usize) -> Vec<usize> {
        let Some(freq) = stats.frequencies(idx) else { return Vec::new() };
        let mut vals: Vec<usize> = (0..freq.len()).filter(|&v| freq[v] > 0.0 && freq[v] >= self.params.min_fraction).collect();
        vals.sort_by(|&a, &b| freq[b].total_cmp(&freq[a]).then(a.cmp(&b)));
        vals
    }

    /// Phrase for an attribute; significant alternatives are joined with "or".
    fn value_phrase(&self, stats: &ClusterStats, cat: AttrCategory, name: &str) -> String {
        let Some(idx) = self.attr(cat, name) else { return String::new() };
        let a = &self.schema.attributes()[idx];
        let word = |v: usize| {
            let key = format!("{}.{}", a.qualified_name(), a.values[v]);
            self.templates.value.get(&key).cloned().unwrap_or_else(|| a.values[v].clone())
        };
        let vals = self.significant(stats, idx);
        match vals.len() {
            0 => stats.dominant(idx).map(word).unwrap_or_default(),
            _ => vals.into_iter().map(word).collect::<Vec<_>>().join(" or "),
        }
    }

    fn relation_word(&self, stats: &ClusterStats) -> &'static str {
        let idx = self.attr(AttrCategory::Context, "expr.type");
        match idx.and_then(|i| stats.dominant(i)).map(|v| self.schema.attributes()[idx.unwrap()].values[v].as_str()) {
            Some("inequation") => "inequation",
            _ => "equation",
        }
    }

    fn action_text(&self, stats: &ClusterStats) -> String {
        let t = self.templates;
        let mut parts = Vec::new();
        for ap in &t.action {
            let Some(idx) = self.attr(AttrCategory::Action, &ap.attribute) else { continue };
            let a = &self.schema.attributes()[idx];
            let (Some(yes), Some(no)) = (a.value_index("true"), a.value_index("false")) else { continue };
            let sig = self.significant(stats, idx);
            let phrase = [("phrase", ap.phrase.as_str())];
            if sig.contains(&yes) && sig.contains(&no) {
                parts.push(fill(&t.split, &phrase));
            } else if stats.dominant(idx) == Some(yes) {
                parts.push(fill(&t.held, &phrase));
            } else if (ap.always || ap.always_for.as_deref() == Some(self.relation_word(stats)))
                && stats.dominant(idx) == Some(no)
            {
                parts.push(fill(&t.absent, &phrase));
            }
        }
        if parts.is_empty() {
            String::new()
        } else {
            fill(&t.action_clause, &[("actions", &parts.join(" and "))])
        }
    }

    fn description(&self, stats: &ClusterStats, coherence: Coherence) -> String {
        let t = self.templates;
        let adjective = t.adjective.get(coherence.name()).cloned().unwrap_or_else(|| coherence.name().to_string());
        let outcome_category = self.value_phrase(stats, AttrCategory::Outcome, "arg.category");
        let outcome = if outcome_category.is_empty() {
            String::new()
        } else {
            fill(&t.outcome_clause, &[("outcome_category", &outcome_category)])
        };
        fill(
            &t.description,
            &[
                ("adjective", &adjective),
                ("sign", &self.value_phrase(stats, AttrCategory::Context, "arg.negative")),
                ("category", &self.value_phrase(stats, AttrCategory::Context, "arg.category")),
                ("relation_article", &self.value_phrase(stats, AttrCategory::Context, "expr.type")),
                ("action", &self.action_text(stats)),
                ("outcome", &outcome),
            ],
        )
    }

    /// Short one-line description, used by cohort reports.
    pub fn summary(&self, stats: &ClusterStats) -> String {
        self.description(stats, classify_coherence(stats, self.params))
    }

    fn examples(&self, attitude: &Attitude, cases: &[Case]) -> Vec<Example> {
        let mut ranked: Vec<(f64, usize)> = attitude
            .stats
            .members
            .iter()
            .filter_map(|&id| {
                let s = ClusterStats::singleton(id, cases.get(id)?, self.schema).ok()?;
                Some((self.metric.distance(&s, &attitude.stats), id))
            })
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let picked: Vec<usize> = if attitude.coherence == Coherence::Incoherent {
            let first = |ok: bool| ranked.iter().find(|(_, id)| cases[*id].is_correct() == ok).map(|x| x.1);
            [first(true), first(false)].into_iter().flatten().collect()
        } else {
            ranked.iter().take(2).map(|x| x.1).collect()
        };
        picked
            .into_iter()
            .map(|id| {
                let c = &cases[id];
                let (from, to) = match &c.origin {
                    Some(o) => (o.from.clone(), o.to.clone()),
                    None => (format!("case {id}"), String::from("?")),
                };
                Example { case_id: id, from, to, correct: c.is_correct() }
            })
            .collect()
    }

    pub fn render(&self, attitude: &Attitude, d: &Dendrogram, cases: &[Case]) -> Diagnosis {
        let t = self.templates;
        let s = &attitude.stats;
        let header = fill(
            &t.header,
            &[
                ("id", &attitude.id.to_string()),
                ("n", &s.size().to_string()),
                ("correct", &s.correct.to_string()),
                ("incorrect", &s.incorrect.to_string()),
            ],
        );
        let mut explanation = Vec::new();
        let mut causes = Vec::new();
        match attitude.coherence {
            Coherence::CoherentCorrect => explanation.push(t.coherent_correct_note.clone()),
            Coherence::CoherentIncorrect => explanation.push(t.coherent_incorrect_note.clone()),
            Coherence::Incoherent => {
                explanation.push(t.incoherent_note.clone());
                if let Some(ex) = explain_incoherence(attitude, d, self.schema, self.params) {
                    if ex.flagged {
                        explanation.push(t.unresolved_note.clone());
                    }
                    if !ex.discriminants.is_empty() {
                        explanation.push(t.causes_intro.clone());
                    }
                    let relation = self.relation_word(s);
                    let mut seen = Vec::new();
                    for dsc in &ex.discriminants {
                        let key = format!("{}.{}", dsc.attribute, dsc.value);
                        let line = match t.cause.get(&key) {
                            Some(p) => fill(p, &[("relation", relation)]),
                            None => format!("{} is {}", dsc.attribute, dsc.value),
                        };
                        if !seen.contains(&line) {
                            explanation.push(format!("- {line};"));
                            seen.push(line);
                        }
                    }
                    causes = ex.discriminants;
                }
            }
        }
        Diagnosis {
            attitude_id: attitude.id,
            coherence: attitude.coherence,
            size: s.size(),
            correct: s.correct,
            incorrect: s.incorrect,
            header,
            description: self.description(s, attitude.coherence),
            examples: self.examples(attitude, cases),
            explanation,
            causes,
        }
    }
}
