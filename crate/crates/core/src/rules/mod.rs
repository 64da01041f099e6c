//! Correct and buggy rewrite rules over relations.
//!
//! A rule library is a TOML file with one `[[rule]]` table per rule; the
//! default library is embedded in the binary. Rules are kept sorted by id,
//! which fixes the order of [`applicable_rewrites`].

mod apply;
pub mod dsl;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{render, NodeRef, Relation};
pub use dsl::{Action, DslError, Guard, Pattern, Selector, SenseMode};

const DEFAULT_RULES: &str = include_str!("default_rules.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correctness {
    Correct,
    Incorrect,
}

impl Correctness {
    pub fn is_correct(self) -> bool {
        self == Correctness::Correct
    }
}

impl fmt::Display for Correctness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_correct() { "correct" } else { "incorrect" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    AdditiveMove,
    MultiplicativeMove,
    SignError,
    SenseError,
    FractionSimplify,
    CombineLikeTerms,
    Expand,
    PowerBug,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RuleSpec {
    id: String,
    #[serde(default)]
    description: String,
    correctness: Correctness,
    category: Category,
    #[serde(rename = "match")]
    pattern: String,
    action: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RuleFile {
    rule: Vec<RuleSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteRule {
    pub id: String,
    pub description: String,
    pub correctness: Correctness,
    pub category: Category,
    pub pattern: Pattern,
    pub action: Action,
    source: RuleSpec,
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("cannot read rule file: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid rule file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("rule `{id}`: {source}")]
    Dsl { id: String, source: DslError },
    #[error("duplicate rule id `{0}`")]
    Duplicate(String),
    #[error("rule file has no rules")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    rules: Vec<RewriteRule>,
}

impl RewriteRule {
    /// Whether the rule carries an argument across the relation sign.
    pub fn is_movement(&self) -> bool {
        matches!(self.pattern.selector, Selector::SideTerm | Selector::TermCoefficient | Selector::SideDivisor)
    }
}

impl RuleSet {
    pub fn from_toml_str(text: &str) -> Result<RuleSet, RuleError> {
        let file: RuleFile = toml::from_str(text)?;
        if file.rule.is_empty() {
            return Err(RuleError::Empty);
        }
        let mut rules = Vec::with_capacity(file.rule.len());
        for spec in file.rule {
            let wrap = |source| RuleError::Dsl { id: spec.id.clone(), source };
            let pattern = dsl::parse_pattern(&spec.pattern).map_err(wrap)?;
            let action = dsl::parse_action(&spec.action, pattern.selector).map_err(wrap)?;
            rules.push(RewriteRule {
                id: spec.id.clone(),
                description: spec.description.clone(),
                correctness: spec.correctness,
                category: spec.category,
                pattern,
                action,
                source: spec,
            });
        }
        rules.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = rules.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(RuleError::Duplicate(w[0].id.clone()));
        }
        Ok(RuleSet { rules })
    }

    pub fn load(path: &Path) -> Result<RuleSet, RuleError> {
        RuleSet::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        let file = RuleFile { rule: self.rules.iter().map(|r| r.source.clone()).collect() };
        toml::to_string(&file).expect("rule specs serialize")
    }

    /// Keep only the rules whose id satisfies `keep`.
    pub fn filtered(&self, keep: impl Fn(&str) -> bool) -> RuleSet {
        RuleSet { rules: self.rules.iter().filter(|r| keep(&r.id)).cloned().collect() }
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn get(&self, id: &str) -> Option<&RewriteRule> {
        self.rules.binary_search_by(|r| r.id.as_str().cmp(id)).ok().map(|i| &self.rules[i])
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

impl Default for RuleSet {
    fn default() -> RuleSet {
        RuleSet::from_toml_str(DEFAULT_RULES).expect("embedded rule library is valid")
    }
}

/// Where a rewrite acted: the transformed argument, its enclosing term
/// (the parent group, or the argument itself when it stands alone), and
/// the argument's position in the result.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Locus {
    pub arg: NodeRef,
    pub term: NodeRef,
    pub outcome: NodeRef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rewrite<'r> {
    pub rule: &'r RewriteRule,
    pub result: Relation,
    pub locus: Locus,
}

/// Every single-rule rewrite of `state`, ordered by rule id and then by
/// match site. Rewrites that leave the rendered text unchanged are dropped.
pub fn applicable_rewrites<'r>(state: &Relation, rules: &'r RuleSet) -> Vec<Rewrite<'r>> {
    let before = render(state);
    let mut out = Vec::new();
    for rule in &rules.rules {
        for site in apply::sites(state, rule.pattern.selector) {
            if !rule.pattern.guards.iter().all(|(want, g)| apply::guard_holds(state, &site, *g) == *want) {
                continue;
            }
            let Some((result, outcome)) = apply::apply(state, &site, rule.action) else { continue };
            if !result.is_well_formed() || render(&result) == before {
                continue;
            }
            let term = site.arg.parent().unwrap_or_else(|| site.arg.clone());
            out.push(Rewrite { rule, result, locus: Locus { arg: site.arg, term, outcome } });
        }
    }
    out
}
