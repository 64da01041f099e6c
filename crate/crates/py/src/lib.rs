//! Python bindings: parsing, segmentation, encoding, the full pipeline and
//! the synthetic trace generator.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use attitudes::algebra::{parse_relation, render};
use attitudes::encode::encode_case;
use attitudes::pipeline::{case_symbols, export_report, parse_formats, run_pipeline, student_text, PipelineConfig, Resources};
use attitudes::segment::segment;
use attitudes::synth::{generate_traces, MisconceptionProfile};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn config(path: Option<PathBuf>) -> PyResult<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(&p).map_err(err),
        None => Ok(PipelineConfig::default()),
    }
}

/// Parse a relation and return its canonical text.
#[pyfunction]
fn normalize_text(text: &str) -> PyResult<String> {
    parse_relation(text).map(|r| render(&r)).map_err(err)
}

#[pyclass(frozen, get_all)]
struct Step {
    from_state: String,
    to_state: String,
    rule_id: String,
    correct: bool,
}

#[pymethods]
impl Step {
    fn __repr__(&self) -> String {
        format!("Step({} -> {}, {}, correct={})", self.from_state, self.to_state, self.rule_id, self.correct)
    }
}

fn steps_between(from: &str, to: &str, cfg: &PipelineConfig, res: &Resources) -> PyResult<Vec<attitudes::segment::ElementaryStep>> {
    let from = parse_relation(from).map_err(err)?;
    let to = parse_relation(to).map_err(err)?;
    segment(&from, &to, &res.rules, cfg.budget).map_err(err)
}

/// Decompose one transition into elementary rule applications.
#[pyfunction]
#[pyo3(signature = (from_state, to_state, config=None))]
fn segment_pair(from_state: &str, to_state: &str, config: Option<PathBuf>) -> PyResult<Vec<Step>> {
    let cfg = self::config(config)?;
    let res = Resources::load(&cfg).map_err(err)?;
    Ok(steps_between(from_state, to_state, &cfg, &res)?
        .into_iter()
        .map(|s| Step { from_state: render(&s.from), to_state: render(&s.to), rule_id: s.rule_id, correct: s.correctness.is_correct() })
        .collect())
}

/// Attribute values (qualified name to value) of every step of a transition.
#[pyfunction]
#[pyo3(signature = (from_state, to_state, config=None))]
fn encode_pair(from_state: &str, to_state: &str, config: Option<PathBuf>) -> PyResult<Vec<BTreeMap<String, String>>> {
    let cfg = self::config(config)?;
    let res = Resources::load(&cfg).map_err(err)?;
    steps_between(from_state, to_state, &cfg, &res)?
        .iter()
        .map(|s| encode_case(s, &res.schema).map(|c| case_symbols(&c, &res.schema)).map_err(err))
        .collect()
}

#[pyclass(frozen, get_all)]
struct Summary {
    students: usize,
    pairs: usize,
    segmented_steps: usize,
    unsegmentable_pairs: usize,
    cases: usize,
    attitudes: usize,
    group_attitudes: usize,
    attitudes_per_student: BTreeMap<String, usize>,
}

/// Result of a pipeline run.
#[pyclass]
struct Run {
    inner: attitudes::pipeline::RunResult,
}

#[pymethods]
impl Run {
    #[getter]
    fn summary(&self) -> Summary {
        let s = &self.inner.summary;
        Summary {
            students: s.students,
            pairs: s.pairs,
            segmented_steps: s.segmented_steps,
            unsegmentable_pairs: s.unsegmentable_pairs,
            cases: s.cases,
            attitudes: s.attitudes,
            group_attitudes: s.group_attitudes,
            attitudes_per_student: s.attitudes_per_student.clone(),
        }
    }

    /// Diagnosis text per student id.
    fn reports(&self) -> BTreeMap<String, String> {
        self.inner.students.iter().map(|s| (s.student_id.clone(), student_text(s))).collect()
    }

    /// Histogram rows as (rank, group id, correct, incorrect, students, description).
    fn histogram(&self) -> Vec<(usize, usize, u32, u32, usize, String)> {
        self.inner
            .histogram
            .iter()
            .map(|r| (r.rank, r.group_id, r.correct_cases, r.incorrect_cases, r.students, r.description.clone()))
            .collect()
    }

    #[pyo3(signature = (out_dir, formats="csv,svg,txt"))]
    fn export(&self, out_dir: PathBuf, formats: &str) -> PyResult<Vec<PathBuf>> {
        let formats = parse_formats(formats).map_err(err)?;
        export_report(&self.inner, &out_dir, &formats).map_err(err)
    }
}

/// Run ingest, segmentation, encoding, clustering, diagnosis and cohort aggregation.
#[pyfunction]
#[pyo3(signature = (traces, config=None))]
fn mine(py: Python<'_>, traces: PathBuf, config: Option<PathBuf>) -> PyResult<Run> {
    let cfg = self::config(config)?;
    let inner = py.detach(|| run_pipeline(&traces, &cfg)).map_err(err)?;
    Ok(Run { inner })
}

/// Write synthetic traces and ground truth. `bugs` maps buggy rule ids to
/// application probabilities.
#[pyfunction]
#[pyo3(signature = (traces, truth, student_id, exercises, seed, bugs=BTreeMap::new()))]
fn synth(traces: PathBuf, truth: PathBuf, student_id: &str, exercises: usize, seed: u64, bugs: BTreeMap<String, f64>) -> PyResult<usize> {
    let mut p = MisconceptionProfile::new(student_id, exercises, seed);
    for (rule, q) in bugs {
        p = p.with_bug(&rule, q);
    }
    let res = Resources::load(&PipelineConfig::default()).map_err(err)?;
    let corpus = generate_traces(&[p], &res.rules, &traces, &truth).map_err(err)?;
    Ok(corpus.traces.len())
}

#[pymodule]
fn attitudes_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Step>()?;
    m.add_class::<Summary>()?;
    m.add_class::<Run>()?;
    m.add_function(wrap_pyfunction!(normalize_text, m)?)?;
    m.add_function(wrap_pyfunction!(segment_pair, m)?)?;
    m.add_function(wrap_pyfunction!(encode_pair, m)?)?;
    m.add_function(wrap_pyfunction!(mine, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    Ok(())
}
