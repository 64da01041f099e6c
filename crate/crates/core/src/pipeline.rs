//! Ingest, segment, encode, cluster, diagnose, aggregate and export.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{agglomerate, ClusterError, ClusterParams, Dendrogram, Metric};
use crate::cohort::{
    aggregate_attitudes, build_histogram, render_svg, write_csv, GroupAttitude, HistogramRow, StudentAttitude,
    DEFAULT_GROUP_THRESHOLD, DEFAULT_TOP_K,
};
use crate::diagnosis::{attitudes, Attitude, Describer, Diagnosis, DiagnosisParams, TemplateError, Templates};
use crate::encode::{encode_case, AttributeSchema, Case, EncodeError, SchemaError};
use crate::rules::{RuleError, RuleSet};
use crate::segment::{segment_pair, ElementaryStep, StepPair, DEFAULT_BUDGET};
use crate::traces::{ingest_traces, IngestError, Ingested, Rejected};

/// Which elementary steps become cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseSelection {
    /// Only steps whose rule moves an argument across the relation.
    Movements,
    AllSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub alpha: f64,
    pub stop_threshold: f64,
    pub normalize_categories: bool,
    pub group_threshold: f64,
    pub min_count: u32,
    pub min_fraction: f64,
    pub top_k: usize,
    pub budget: usize,
    pub cases: CaseSelection,
    /// Largest tolerated share of malformed trace lines.
    pub max_malformed: f64,
    pub seed: u64,
    pub rules: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    /// TOML table of `qualified.name = weight` overrides.
    pub weights: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        let c = ClusterParams::default();
        let d = DiagnosisParams::default();
        PipelineConfig {
            alpha: c.alpha,
            stop_threshold: c.stop_threshold,
            normalize_categories: c.normalize_categories,
            group_threshold: DEFAULT_GROUP_THRESHOLD,
            min_count: d.min_count,
            min_fraction: d.min_fraction,
            top_k: DEFAULT_TOP_K,
            budget: DEFAULT_BUDGET,
            cases: CaseSelection::Movements,
            max_malformed: 0.5,
            seed: 0,
            rules: None,
            schema: None,
            templates: None,
            weights: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("rules: {0}")]
    Rules(#[from] RuleError),
    #[error("schema: {0}")]
    Schema(#[from] SchemaError),
    #[error("templates: {0}")]
    Templates(#[from] TemplateError),
    #[error("encode ({student}): {source}")]
    Encode { student: String, source: EncodeError },
    #[error("cluster ({stage}): {source}")]
    Cluster { stage: String, source: ClusterError },
    #[error("export: {0}")]
    Export(String),
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<PipelineConfig, PipelineError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a config file; relative paths inside it are taken from the file's directory.
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = PipelineConfig::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.rules, &mut cfg.schema, &mut cfg.templates, &mut cfg.weights].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        for (name, v) in [
            ("stop_threshold", self.stop_threshold),
            ("group_threshold", self.group_threshold),
            ("min_fraction", self.min_fraction),
            ("max_malformed", self.max_malformed),
        ] {
            if v.is_nan() || v < 0.0 {
                return bad(&format!("{name} must be non-negative"));
            }
        }
        if self.budget == 0 {
            return bad("budget must be positive");
        }
        Ok(())
    }

    pub fn cluster_params(&self) -> ClusterParams {
        ClusterParams {
            alpha: self.alpha,
            stop_threshold: self.stop_threshold,
            normalize_categories: self.normalize_categories,
            weights: BTreeMap::new(),
        }
    }

    pub fn diagnosis_params(&self) -> DiagnosisParams {
        DiagnosisParams { min_count: self.min_count, min_fraction: self.min_fraction }
    }
}

/// Rule library, schema (with weights applied) and templates.
#[derive(Debug, Clone)]
pub struct Resources {
    pub rules: RuleSet,
    pub schema: AttributeSchema,
    pub templates: Templates,
}

impl Resources {
    pub fn load(cfg: &PipelineConfig) -> Result<Resources, PipelineError> {
        let rules = match &cfg.rules {
            Some(p) => RuleSet::load(p)?,
            None => RuleSet::default(),
        };
        let mut schema = match &cfg.schema {
            Some(p) => AttributeSchema::load(p)?,
            None => AttributeSchema::default(),
        };
        if let Some(p) = &cfg.weights {
            let text = std::fs::read_to_string(p).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
            let w: BTreeMap<String, u32> = toml::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?;
            schema.apply_weights(&w)?;
        }
        let templates = match &cfg.templates {
            Some(p) => Templates::load(p)?,
            None => Templates::default(),
        };
        Ok(Resources { rules, schema, templates })
    }
}

/// A pair the segmenter could not decompose.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unsegmented {
    pub problem_id: String,
    pub step_index: u32,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct StudentResult {
    pub student_id: String,
    pub pairs: usize,
    pub steps: Vec<ElementaryStep>,
    pub unsegmented: Vec<Unsegmented>,
    pub cases: Vec<Case>,
    pub dendrogram: Option<Dendrogram>,
    pub attitudes: Vec<Attitude>,
    pub diagnoses: Vec<Diagnosis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub students: usize,
    pub trace_lines: usize,
    pub rejected_lines: usize,
    pub pairs: usize,
    pub segmented_steps: usize,
    pub unsegmentable_pairs: usize,
    pub cases: usize,
    pub attitudes: usize,
    pub attitudes_per_student: BTreeMap<String, usize>,
    pub mean_steps_per_student: f64,
    pub mean_attitudes_per_student: f64,
    pub group_attitudes: usize,
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "students: {}", self.students).unwrap();
        writeln!(s, "trace lines: {} ({} rejected)", self.trace_lines, self.rejected_lines).unwrap();
        writeln!(s, "pairs: {}", self.pairs).unwrap();
        writeln!(s, "segmented steps: {}", self.segmented_steps).unwrap();
        writeln!(s, "unsegmentable pairs: {}", self.unsegmentable_pairs).unwrap();
        writeln!(s, "cases: {}", self.cases).unwrap();
        writeln!(s, "attitudes: {}", self.attitudes).unwrap();
        writeln!(s, "steps per student: {:.2}", self.mean_steps_per_student).unwrap();
        writeln!(s, "attitudes per student: {:.2}", self.mean_attitudes_per_student).unwrap();
        writeln!(s, "group attitudes: {}", self.group_attitudes).unwrap();
        for (student, n) in &self.attitudes_per_student {
            writeln!(s, "  {student}: {n}").unwrap();
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub students: Vec<StudentResult>,
    pub rejected: Vec<Rejected>,
    pub groups: Vec<GroupAttitude>,
    pub histogram: Vec<HistogramRow>,
    pub summary: RunSummary,
}

/// Segmented steps, failed pairs and the cases kept from the steps.
pub type Encoded = (Vec<ElementaryStep>, Vec<Unsegmented>, Vec<Case>);

/// Segment and encode one student's pairs.
pub fn segment_and_encode(
    student_id: &str,
    pairs: &[StepPair],
    res: &Resources,
    cfg: &PipelineConfig,
) -> Result<Encoded, PipelineError> {
    let mut steps = Vec::new();
    let mut unsegmented = Vec::new();
    let mut cases = Vec::new();
    for pair in pairs {
        match segment_pair(pair, &res.rules, cfg.budget) {
            Ok(found) => {
                for step in found {
                    let keep = match cfg.cases {
                        CaseSelection::AllSteps => true,
                        CaseSelection::Movements => res.rules.get(&step.rule_id).is_some_and(|r| r.is_movement()),
                    };
                    if keep {
                        let case = encode_case(&step, &res.schema)
                            .map_err(|source| PipelineError::Encode { student: student_id.to_string(), source })?;
                        cases.push(case);
                    }
                    steps.push(step);
                }
            }
            Err(e) => unsegmented.push(Unsegmented {
                problem_id: pair.problem_id.clone(),
                step_index: pair.step_index,
                reason: e.to_string(),
            }),
        }
    }
    Ok((steps, unsegmented, cases))
}

fn run_student(student_id: &str, pairs: &[StepPair], res: &Resources, cfg: &PipelineConfig) -> Result<StudentResult, PipelineError> {
    let (steps, unsegmented, cases) = segment_and_encode(student_id, pairs, res, cfg)?;
    let params = cfg.cluster_params();
    let dparams = cfg.diagnosis_params();
    let mut out = StudentResult {
        student_id: student_id.to_string(),
        pairs: pairs.len(),
        steps,
        unsegmented,
        cases,
        dendrogram: None,
        attitudes: Vec::new(),
        diagnoses: Vec::new(),
    };
    if out.cases.is_empty() {
        return Ok(out);
    }
    let stage = |source| PipelineError::Cluster { stage: format!("student {student_id}"), source };
    let d = agglomerate(&out.cases, &res.schema, &params).map_err(stage)?;
    let metric = Metric::new(&res.schema, &params).map_err(stage)?;
    let describer = Describer { schema: &res.schema, metric: &metric, templates: &res.templates, params: &dparams };
    out.attitudes = attitudes(&d, &dparams);
    out.diagnoses = out.attitudes.iter().map(|a| describer.render(a, &d, &out.cases)).collect();
    out.dendrogram = Some(d);
    Ok(out)
}

/// Group attitudes across students and build the report rows.
pub fn run_cohort(
    inputs: &[StudentAttitude],
    res: &Resources,
    cfg: &PipelineConfig,
) -> Result<(Vec<GroupAttitude>, Vec<HistogramRow>), PipelineError> {
    if inputs.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let params = cfg.cluster_params();
    let stage = |source| PipelineError::Cluster { stage: "cohort".into(), source };
    let groups = aggregate_attitudes(inputs, &res.schema, &params, cfg.group_threshold).map_err(stage)?;
    let metric = Metric::new(&res.schema, &params).map_err(stage)?;
    let dparams = cfg.diagnosis_params();
    let describer = Describer { schema: &res.schema, metric: &metric, templates: &res.templates, params: &dparams };
    let rows = build_histogram(&groups, cfg.top_k, &describer);
    Ok((groups, rows))
}

pub fn run_on(ingested: Ingested, res: &Resources, cfg: &PipelineConfig) -> Result<RunResult, PipelineError> {
    cfg.validate()?;
    let students: Vec<(String, Vec<StepPair>)> = ingested.students.into_iter().collect();
    let results = students
        .par_iter()
        .map(|(id, pairs)| run_student(id, pairs, res, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let inputs = student_attitudes(&results);
    let (groups, histogram) = run_cohort(&inputs, res, cfg)?;

    let n = results.len();
    let per_student: BTreeMap<String, usize> = results.iter().map(|r| (r.student_id.clone(), r.attitudes.len())).collect();
    let total_steps: usize = results.iter().map(|r| r.steps.len()).sum();
    let total_attitudes: usize = per_student.values().sum();
    let mean = |x: usize| if n == 0 { 0.0 } else { x as f64 / n as f64 };
    let summary = RunSummary {
        students: n,
        trace_lines: ingested.lines,
        rejected_lines: ingested.rejected.len(),
        pairs: results.iter().map(|r| r.pairs).sum(),
        segmented_steps: total_steps,
        unsegmentable_pairs: results.iter().map(|r| r.unsegmented.len()).sum(),
        cases: results.iter().map(|r| r.cases.len()).sum(),
        attitudes: total_attitudes,
        attitudes_per_student: per_student,
        mean_steps_per_student: mean(total_steps),
        mean_attitudes_per_student: mean(total_attitudes),
        group_attitudes: groups.len(),
    };
    Ok(RunResult { students: results, rejected: ingested.rejected, groups, histogram, summary })
}

pub fn run_pipeline(traces: &Path, cfg: &PipelineConfig) -> Result<RunResult, PipelineError> {
    let res = Resources::load(cfg)?;
    let ingested = ingest_traces(traces, cfg.max_malformed)?;
    run_on(ingested, &res, cfg)
}

pub fn student_attitudes(results: &[StudentResult]) -> Vec<StudentAttitude> {
    results
        .iter()
        .flat_map(|r| {
            r.attitudes.iter().map(|a| StudentAttitude {
                student_id: r.student_id.clone(),
                attitude_id: a.id,
                stats: a.stats.clone(),
            })
        })
        .collect()
}

/// A case with its attribute values spelled out, for dumps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub student_id: String,
    pub problem_id: String,
    pub step_index: u32,
    pub rule_id: String,
    pub from: String,
    pub to: String,
    pub correct: bool,
    /// Qualified attribute name to value; undefined attributes are left out.
    pub values: BTreeMap<String, String>,
}

pub fn case_symbols(case: &Case, schema: &AttributeSchema) -> BTreeMap<String, String> {
    schema
        .attributes()
        .iter()
        .zip(&case.values)
        .filter_map(|(a, v)| v.map(|v| (a.qualified_name(), a.values[v as usize].clone())))
        .collect()
}

/// Encode every pair of every student without clustering.
pub fn encode_all(ingested: &Ingested, res: &Resources, cfg: &PipelineConfig) -> Result<(Vec<CaseRecord>, Vec<Unsegmented>), PipelineError> {
    let mut records = Vec::new();
    let mut failed = Vec::new();
    for (student, pairs) in &ingested.students {
        for pair in pairs {
            let (_, unsegmented, cases) = segment_and_encode(student, std::slice::from_ref(pair), res, cfg)?;
            failed.extend(unsegmented);
            for case in cases {
                let origin = case.origin.clone().unwrap_or_default();
                records.push(CaseRecord {
                    student_id: student.clone(),
                    problem_id: pair.problem_id.clone(),
                    step_index: pair.step_index,
                    rule_id: origin.rule_id,
                    from: origin.from,
                    to: origin.to,
                    correct: case.is_correct(),
                    values: case_symbols(&case, &res.schema),
                });
            }
        }
    }
    Ok((records, failed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Format {
    Csv,
    Svg,
    /// Per-student diagnosis texts; always written.
    Txt,
    /// Dendrograms and saved attitudes.
    Json,
}

pub fn parse_formats(text: &str) -> Result<BTreeSet<Format>, PipelineError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s {
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            "txt" => Ok(Format::Txt),
            "json" => Ok(Format::Json),
            other => Err(PipelineError::Config(format!("unknown format `{other}`"))),
        })
        .collect()
}

fn file_name(student_id: &str) -> String {
    student_id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn write(path: &Path, data: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    std::fs::write(path, data).map_err(|e| PipelineError::Export(format!("{}: {e}", path.display())))
}

pub fn student_text(r: &StudentResult) -> String {
    let mut s = String::new();
    writeln!(s, "Student {}: {} pairs, {} steps, {} cases, {} attitudes", r.student_id, r.pairs, r.steps.len(), r.cases.len(), r.attitudes.len()).unwrap();
    for u in &r.unsegmented {
        writeln!(s, "unsegmented {} step {}: {}", u.problem_id, u.step_index, u.reason).unwrap();
    }
    for d in &r.diagnoses {
        s.push('\n');
        s.push_str(&d.to_text());
    }
    s
}

/// Write `histogram.csv` and `histogram.svg` as requested.
pub fn export_histogram(rows: &[HistogramRow], out_dir: &Path, formats: &BTreeSet<Format>) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::Export(format!("{}: {e}", out_dir.display())))?;
    let mut written = Vec::new();
    if formats.contains(&Format::Csv) {
        let mut buf = Vec::new();
        write_csv(rows, &mut buf).map_err(|e| PipelineError::Export(e.to_string()))?;
        let p = out_dir.join("histogram.csv");
        write(&p, buf)?;
        written.push(p);
    }
    if formats.contains(&Format::Svg) {
        let p = out_dir.join("histogram.svg");
        write(&p, render_svg(rows))?;
        written.push(p);
    }
    Ok(written)
}

/// Write the report files into `out_dir` and return their paths.
pub fn export_report(result: &RunResult, out_dir: &Path, formats: &BTreeSet<Format>) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::Export(format!("{}: {e}", out_dir.display())))?;
    let mut written = Vec::new();
    written.extend(export_histogram(&result.histogram, out_dir, formats)?);
    let mut put = |name: PathBuf, data: Vec<u8>| -> Result<(), PipelineError> {
        write(&name, data)?;
        written.push(name);
        Ok(())
    };
    let mut summary = result.summary.to_text();
    for r in &result.rejected {
        writeln!(summary, "rejected line {}: {}", r.line, r.reason).unwrap();
    }
    put(out_dir.join("summary.txt"), summary.into_bytes())?;
    let students = out_dir.join("students");
    std::fs::create_dir_all(&students).map_err(|e| PipelineError::Export(e.to_string()))?;
    for r in &result.students {
        put(students.join(format!("{}.txt", file_name(&r.student_id))), student_text(r).into_bytes())?;
    }
    if formats.contains(&Format::Json) {
        let dir = out_dir.join("dendrograms");
        std::fs::create_dir_all(&dir).map_err(|e| PipelineError::Export(e.to_string()))?;
        for r in &result.students {
            if let Some(d) = &r.dendrogram {
                put(dir.join(format!("{}.json", file_name(&r.student_id))), d.to_json().into_bytes())?;
            }
        }
        let saved = serde_json::to_string_pretty(&student_attitudes(&result.students)).expect("attitudes serialize");
        put(out_dir.join("attitudes.json"), saved.into_bytes())?;
        let groups = serde_json::to_string_pretty(&result.groups).expect("groups serialize");
        put(out_dir.join("groups.json"), groups.into_bytes())?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traces::ingest_reader;

    #[test]
    fn empty_input_gives_empty_outputs() {
        let res = Resources::load(&PipelineConfig::default()).unwrap();
        let r = run_on(ingest_reader("".as_bytes(), 0.5).unwrap(), &res, &PipelineConfig::default()).unwrap();
        assert_eq!(r.summary.students, 0);
        assert_eq!(r.summary.cases, 0);
        assert!(r.histogram.is_empty());
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = PipelineConfig::from_toml_str("alpha = 0.25\n").unwrap();
        assert_eq!(cfg.alpha, 0.25);
        assert_eq!(cfg.top_k, 38);
        assert!(PipelineConfig::from_toml_str("alpha = 2.0\n").is_err());
        assert!(PipelineConfig::from_toml_str("nonsense = 1\n").is_err());
        assert_eq!(parse_formats("csv, svg").unwrap(), BTreeSet::from([Format::Csv, Format::Svg]));
        assert!(parse_formats("pdf").is_err());
    }
}
