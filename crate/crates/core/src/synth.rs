//! Synthetic students: random linear exercises solved one rule at a time,
//! with buggy rules swapped in at a fixed rate.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{parse_relation, render, Relation, Side};
use crate::rules::{applicable_rewrites, Category, Correctness, Rewrite, RuleSet};
use crate::traces::{write_jsonl, TraceRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bug {
    pub rule_id: String,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExerciseForm {
    /// `ax+b ~ c`
    OneSided,
    /// `ax+b ~ cx+d`
    TwoSided,
    /// `a(x+b) ~ c`
    Bracketed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisconceptionProfile {
    pub student_id: String,
    #[serde(default)]
    pub bugs: Vec<Bug>,
    pub exercises: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "all_forms")]
    pub forms: Vec<ExerciseForm>,
    /// Chance that an exercise is an inequation rather than an equation.
    #[serde(default = "half")]
    pub inequation_rate: f64,
    pub seed: u64,
}

fn default_max_steps() -> usize {
    12
}

fn all_forms() -> Vec<ExerciseForm> {
    vec![ExerciseForm::OneSided, ExerciseForm::TwoSided, ExerciseForm::Bracketed]
}

fn half() -> f64 {
    0.5
}

impl MisconceptionProfile {
    pub fn new(student_id: impl Into<String>, exercises: usize, seed: u64) -> MisconceptionProfile {
        MisconceptionProfile {
            student_id: student_id.into(),
            bugs: Vec::new(),
            exercises,
            max_steps: default_max_steps(),
            forms: all_forms(),
            inequation_rate: half(),
            seed,
        }
    }

    pub fn with_bug(mut self, rule_id: &str, q: f64) -> MisconceptionProfile {
        self.bugs.push(Bug { rule_id: rule_id.into(), q });
        self
    }
}

/// What the generator actually did for one trace line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub student_id: String,
    pub problem_id: String,
    pub step_index: u32,
    pub rule_id: String,
    pub category: Category,
    pub correctness: Correctness,
    /// Whether a listed bug could have replaced the correct rule here.
    pub eligible: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub traces: Vec<TraceRecord>,
    pub truth: Vec<GroundTruth>,
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("no profiles given")]
    NoProfiles,
    #[error("profile `{student}`: unknown rule `{rule}`")]
    UnknownRule { student: String, rule: String },
    #[error("profile `{student}`: rule `{rule}` is not a buggy rule")]
    NotBuggy { student: String, rule: String },
    #[error("profile `{student}`: probability {q} outside [0, 1]")]
    Probability { student: String, q: f64 },
    #[error("profile `{0}` lists no exercise forms")]
    NoForms(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

pub fn generate(profiles: &[MisconceptionProfile], rules: &RuleSet) -> Result<Corpus, SynthError> {
    if profiles.is_empty() {
        return Err(SynthError::NoProfiles);
    }
    let mut corpus = Corpus::default();
    for p in profiles {
        validate(p, rules)?;
        generate_student(p, rules, &mut corpus);
    }
    Ok(corpus)
}

/// Generate and write `<stem>.jsonl` plus `<stem>.truth.jsonl`.
pub fn generate_traces(profiles: &[MisconceptionProfile], rules: &RuleSet, traces: &Path, truth: &Path) -> Result<Corpus, SynthError> {
    let corpus = generate(profiles, rules)?;
    write_jsonl(std::io::BufWriter::new(std::fs::File::create(traces)?), &corpus.traces)?;
    write_jsonl(std::io::BufWriter::new(std::fs::File::create(truth)?), &corpus.truth)?;
    Ok(corpus)
}

fn validate(p: &MisconceptionProfile, rules: &RuleSet) -> Result<(), SynthError> {
    if p.forms.is_empty() {
        return Err(SynthError::NoForms(p.student_id.clone()));
    }
    for b in &p.bugs {
        let student = p.student_id.clone();
        let rule = rules.get(&b.rule_id).ok_or_else(|| SynthError::UnknownRule { student: student.clone(), rule: b.rule_id.clone() })?;
        if rule.correctness.is_correct() {
            return Err(SynthError::NotBuggy { student, rule: b.rule_id.clone() });
        }
        if !(0.0..=1.0).contains(&b.q) {
            return Err(SynthError::Probability { student, q: b.q });
        }
    }
    if !(0.0..=1.0).contains(&p.inequation_rate) {
        return Err(SynthError::Probability { student: p.student_id.clone(), q: p.inequation_rate });
    }
    Ok(())
}

fn coef(rng: &mut ChaCha8Rng) -> i64 {
    let v = rng.gen_range(1..=9);
    if rng.gen_bool(0.5) {
        -v
    } else {
        v
    }
}

fn signed(n: i64) -> String {
    if n < 0 {
        n.to_string()
    } else {
        format!("+{n}")
    }
}

fn var_term(a: i64) -> String {
    match a {
        1 => "x".into(),
        -1 => "-x".into(),
        _ => format!("{a}x"),
    }
}

fn exercise(rng: &mut ChaCha8Rng, p: &MisconceptionProfile) -> Relation {
    let form = *p.forms.choose(rng).expect("forms are non-empty");
    let sense = if rng.gen_bool(p.inequation_rate) { *["<", ">", "<=", ">="].choose(rng).unwrap() } else { "=" };
    let (a, b, c) = (coef(rng), coef(rng), coef(rng));
    let text = match form {
        ExerciseForm::OneSided => format!("{}{}{sense}{c}", var_term(a), signed(b)),
        ExerciseForm::TwoSided => {
            let mut c = c;
            while c == a {
                c = coef(rng);
            }
            let d = coef(rng);
            format!("{}{}{sense}{}{}", var_term(a), signed(b), var_term(c), signed(d))
        }
        ExerciseForm::Bracketed => format!("{a}(x{}){sense}{c}", signed(b)),
    };
    parse_relation(&text).expect("generated exercises parse")
}

/// Rank of a correct rewrite for the solving strategy; `None` if the
/// strategy never uses it.
fn priority(state: &Relation, rw: &Rewrite) -> Option<u8> {
    let arg = state.node(&rw.locus.arg)?;
    let has_var = arg.contains_var();
    let left_has_var = state.lhs.contains_var();
    match rw.rule.id.as_str() {
        "distribute" => Some(0),
        "like_combine" => Some(1),
        "const_combine" | "const_multiply" => Some(2),
        "add_move" => {
            let side = rw.locus.arg.side;
            let wanted = if has_var { side == Side::Right } else { side == Side::Left && left_has_var };
            wanted.then_some(3)
        }
        "mul_move" => Some(4),
        "div_move" => state.side(rw.locus.arg.side).contains_var().then_some(4),
        "frac_simplify" => Some(5),
        _ => None,
    }
}

fn generate_student(p: &MisconceptionProfile, rules: &RuleSet, corpus: &mut Corpus) {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    for e in 0..p.exercises {
        let problem_id = format!("e{e:03}");
        let mut state = exercise(&mut rng, p);
        for step in 0..p.max_steps {
            let options = applicable_rewrites(&state, rules);
            let Some(chosen) = options
                .iter()
                .filter(|rw| rw.rule.correctness.is_correct())
                .filter_map(|rw| priority(&state, rw).map(|k| (k, rw)))
                .min_by_key(|(k, _)| *k)
                .map(|(_, rw)| rw)
            else {
                break;
            };
            let mut taken = chosen;
            let mut eligible = false;
            for bug in &p.bugs {
                let Some(alt) = options.iter().find(|rw| {
                    rw.rule.id == bug.rule_id
                        && rw.rule.pattern.selector == chosen.rule.pattern.selector
                        && rw.locus.arg == chosen.locus.arg
                })
                else {
                    continue;
                };
                eligible = true;
                if rng.gen_bool(bug.q) {
                    taken = alt;
                    break;
                }
            }
            let step_index = step as u32;
            corpus.traces.push(TraceRecord {
                student_id: p.student_id.clone(),
                problem_id: problem_id.clone(),
                step_index,
                from: render(&state),
                to: render(&taken.result),
            });
            corpus.truth.push(GroundTruth {
                student_id: p.student_id.clone(),
                problem_id: problem_id.clone(),
                step_index,
                rule_id: taken.rule.id.clone(),
                category: taken.rule.category,
                correctness: taken.rule.correctness,
                eligible,
            });
            state = taken.result.clone();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_to_isolated_variable() {
        let rules = RuleSet::default();
        let c = generate(&[MisconceptionProfile::new("s", 5, 1)], &rules).unwrap();
        assert!(c.truth.iter().all(|t| t.correctness.is_correct()));
        let last: Vec<_> = c.traces.iter().filter(|t| t.problem_id == "e000").collect();
        assert!(last.last().unwrap().to.starts_with("x"), "{:?}", last);
    }

    #[test]
    fn rejects_bad_profiles() {
        let rules = RuleSet::default();
        let p = MisconceptionProfile::new("s", 1, 1).with_bug("add_move", 0.5);
        assert!(matches!(generate(&[p], &rules), Err(SynthError::NotBuggy { .. })));
        let p = MisconceptionProfile::new("s", 1, 1).with_bug("add_move_keep_sign", 1.5);
        assert!(matches!(generate(&[p], &rules), Err(SynthError::Probability { .. })));
        assert!(matches!(generate(&[], &rules), Err(SynthError::NoProfiles)));
    }
}
