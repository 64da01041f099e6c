//! Trace files: one JSON object per line.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::parse_relation;
use crate::segment::StepPair;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub student_id: String,
    pub problem_id: String,
    pub step_index: u32,
    pub from: String,
    pub to: String,
}

/// A line that could not be used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejected {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    /// Pairs per student, ordered by (problem id, step index).
    pub students: BTreeMap<String, Vec<StepPair>>,
    pub rejected: Vec<Rejected>,
    pub lines: usize,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read traces: {0}")]
    Io(#[from] std::io::Error),
    #[error("{bad} of {total} trace lines are malformed (limit {limit})")]
    TooManyMalformed { bad: usize, total: usize, limit: f64 },
}

pub fn ingest_traces(path: &Path, max_malformed: f64) -> Result<Ingested, IngestError> {
    let file = std::fs::File::open(path)?;
    ingest_reader(std::io::BufReader::new(file), max_malformed)
}

/// Parse trace lines. Blank lines are ignored; bad lines are reported, and
/// the whole read fails only when their share exceeds `max_malformed`.
pub fn ingest_reader(reader: impl BufRead, max_malformed: f64) -> Result<Ingested, IngestError> {
    let mut out = Ingested::default();
    let mut seen = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.lines += 1;
        let lineno = i + 1;
        let reject = |reason: String| Rejected { line: lineno, reason };
        let rec: TraceRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                out.rejected.push(reject(format!("not a trace record: {e}")));
                continue;
            }
        };
        let parsed = parse_relation(&rec.from)
            .map_err(|e| format!("bad `from`: {e}"))
            .and_then(|f| parse_relation(&rec.to).map(|t| (f, t)).map_err(|e| format!("bad `to`: {e}")));
        let (from, to) = match parsed {
            Ok(p) => p,
            Err(e) => {
                out.rejected.push(reject(e));
                continue;
            }
        };
        if !seen.insert((rec.student_id.clone(), rec.problem_id.clone(), rec.step_index)) {
            out.rejected.push(reject("duplicate (student, problem, step)".into()));
            continue;
        }
        out.students.entry(rec.student_id.clone()).or_default().push(StepPair {
            student_id: rec.student_id,
            problem_id: rec.problem_id,
            step_index: rec.step_index,
            from,
            to,
        });
    }
    if out.lines > 0 && out.rejected.len() as f64 / out.lines as f64 > max_malformed {
        return Err(IngestError::TooManyMalformed { bad: out.rejected.len(), total: out.lines, limit: max_malformed });
    }
    for pairs in out.students.values_mut() {
        pairs.sort_by(|a, b| (&a.problem_id, a.step_index).cmp(&(&b.problem_id, b.step_index)));
    }
    Ok(out)
}

/// Write records as JSON lines.
pub fn write_jsonl<T: Serialize>(mut w: impl Write, records: &[T]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::render;

    #[test]
    fn groups_orders_and_rejects() {
        let text = r#"{"student_id":"s1","problem_id":"p1","step_index":1,"from":"x<2/(-4)","to":"x<-1/2"}
{"student_id":"s1","problem_id":"p1","step_index":0,"from":"-4x<2","to":"x<2/(-4)"}

{"student_id":"s1","problem_id":"p1","step_index":2,"from":"x<<1","to":"x<1"}
not json
"#;
        let got = ingest_reader(text.as_bytes(), 0.5).unwrap();
        assert_eq!(got.lines, 4);
        let pairs = &got.students["s1"];
        assert_eq!(pairs.len(), 2);
        assert_eq!(render(&pairs[0].from), "-4x<2");
        assert_eq!(render(&pairs[1].to), "x<-1/2");
        assert_eq!(got.rejected.iter().map(|r| r.line).collect::<Vec<_>>(), vec![4, 5]);
        assert!(matches!(ingest_reader(text.as_bytes(), 0.25), Err(IngestError::TooManyMalformed { bad: 2, .. })));
    }
}
