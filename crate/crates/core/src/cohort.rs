//! Group attitudes across students and the frequency report.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cluster::{agglomerate_stats, ClusterError, ClusterParams, ClusterStats, Metric};
use crate::diagnosis::Describer;
use crate::encode::AttributeSchema;

pub const DEFAULT_GROUP_THRESHOLD: f64 = 0.1;
pub const DEFAULT_TOP_K: usize = 38;

/// One attitude of one student, as input to group aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentAttitude {
    pub student_id: String,
    pub attitude_id: usize,
    pub stats: ClusterStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAttitude {
    pub id: usize,
    /// Counters summed over the member attitudes; member ids index the input list.
    pub stats: ClusterStats,
    pub students: BTreeSet<String>,
    pub members: Vec<(String, usize)>,
}

impl GroupAttitude {
    pub fn correct(&self) -> u32 {
        self.stats.correct
    }

    pub fn incorrect(&self) -> u32 {
        self.stats.incorrect
    }

    pub fn cases(&self) -> u32 {
        self.stats.correct + self.stats.incorrect
    }
}

/// Re-cluster attitudes at a low threshold. Category distances are always
/// normalized here so the threshold is on a fixed scale.
pub fn aggregate_attitudes(
    inputs: &[StudentAttitude],
    schema: &AttributeSchema,
    params: &ClusterParams,
    threshold: f64,
) -> Result<Vec<GroupAttitude>, ClusterError> {
    let params = ClusterParams { normalize_categories: true, stop_threshold: threshold, ..params.clone() };
    let metric = Metric::new(schema, &params)?;
    let leaves: Vec<ClusterStats> = inputs.iter().enumerate().map(|(i, a)| a.stats.relabel(i)).collect();
    let d = agglomerate_stats(leaves, &metric, threshold)?;
    Ok(d.attitudes()
        .into_iter()
        .enumerate()
        .map(|(g, stats)| {
            let members: Vec<(String, usize)> =
                stats.members.iter().map(|&i| (inputs[i].student_id.clone(), inputs[i].attitude_id)).collect();
            GroupAttitude {
                id: g + 1,
                stats: stats.clone(),
                students: members.iter().map(|(s, _)| s.clone()).collect(),
                members,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub rank: usize,
    pub group_id: usize,
    pub correct_cases: u32,
    pub incorrect_cases: u32,
    pub students: usize,
    pub description: String,
}

/// Rows by total case count, largest first (ties by group id), cut to `top_k`.
pub fn build_histogram(groups: &[GroupAttitude], top_k: usize, describer: &Describer) -> Vec<HistogramRow> {
    let mut order: Vec<&GroupAttitude> = groups.iter().collect();
    order.sort_by(|a, b| b.cases().cmp(&a.cases()).then(a.id.cmp(&b.id)));
    order
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(i, g)| HistogramRow {
            rank: i + 1,
            group_id: g.id,
            correct_cases: g.correct(),
            incorrect_cases: g.incorrect(),
            students: g.students.len(),
            description: describer.summary(&g.stats),
        })
        .collect()
}

pub fn write_csv(rows: &[HistogramRow], w: impl std::io::Write) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(["rank", "group_id", "correct_cases", "incorrect_cases", "students", "description"])?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Grouped bar chart: correct, incorrect and student counts per row.
pub fn render_svg(rows: &[HistogramRow]) -> String {
    const BAR: f64 = 6.0;
    const GROUP: f64 = 3.0 * BAR + 8.0;
    const HEIGHT: f64 = 240.0;
    const LEFT: f64 = 50.0;
    const TOP: f64 = 30.0;
    let max = rows
        .iter()
        .map(|r| r.correct_cases.max(r.incorrect_cases).max(r.students as u32))
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let width = LEFT + GROUP * rows.len().max(1) as f64 + 20.0;
    let total_h = TOP + HEIGHT + 60.0;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{total_h:.0}" font-family="sans-serif" font-size="10">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#, TOP + HEIGHT).unwrap();
    writeln!(s, r#"<line x1="{LEFT}" y1="{:.1}" x2="{width:.1}" y2="{:.1}" stroke="black"/>"#, TOP + HEIGHT, TOP + HEIGHT).unwrap();
    writeln!(s, r#"<text x="4" y="{:.1}">{}</text>"#, TOP + 4.0, max as u64).unwrap();
    writeln!(s, r#"<text x="4" y="{:.1}">0</text>"#, TOP + HEIGHT).unwrap();
    for (i, r) in rows.iter().enumerate() {
        let x0 = LEFT + 4.0 + GROUP * i as f64;
        let bars = [(r.correct_cases as f64, "green"), (r.incorrect_cases as f64, "red"), (r.students as f64, "blue")];
        for (k, (v, color)) in bars.iter().enumerate() {
            let h = HEIGHT * v / max;
            writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{BAR}" height="{h:.1}" fill="{color}"><title>group {} {}: {}</title></rect>"#,
                x0 + BAR * k as f64,
                TOP + HEIGHT - h,
                r.group_id,
                ["correct", "incorrect", "students"][k],
                *v as u64
            )
            .unwrap();
        }
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">#{}</text>"#, x0 + 1.5 * BAR, TOP + HEIGHT + 14.0, r.group_id).unwrap();
    }
    let ly = TOP + HEIGHT + 36.0;
    for (k, (label, color)) in [("correct cases", "green"), ("incorrect cases", "red"), ("students", "blue")].iter().enumerate() {
        let x = LEFT + 110.0 * k as f64;
        writeln!(s, r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{color}"/>"#, ly - 9.0).unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">{label}</text>"#, x + 14.0).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnosis::{DiagnosisParams, Templates};

    fn stats(id: usize, counters: Vec<Vec<u32>>, correct: u32, incorrect: u32) -> ClusterStats {
        ClusterStats { members: BTreeSet::from([id]), counters, correct, incorrect }
    }

    fn input(student: &str, s: ClusterStats) -> StudentAttitude {
        StudentAttitude { student_id: student.into(), attitude_id: 1, stats: s }
    }

    #[test]
    fn identical_attitudes_join_and_far_ones_stay_apart() {
        let schema = AttributeSchema::default();
        let base: Vec<Vec<u32>> = schema.attributes().iter().map(|a| vec![0; a.values.len()]).collect();
        let (mut left, mut right) = (base.clone(), base);
        for i in 0..10 {
            left[i][0] = 3;
            right[i][1] = 3;
        }
        let inputs = vec![
            input("a", stats(0, left.clone(), 3, 0)),
            input("b", stats(0, left, 2, 1)),
            input("c", stats(0, right, 3, 0)),
        ];
        let groups = aggregate_attitudes(&inputs, &schema, &ClusterParams::default(), DEFAULT_GROUP_THRESHOLD).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].students.len(), 2);
        assert_eq!((groups[0].correct(), groups[0].incorrect()), (5, 1));
        let total: u32 = groups.iter().map(|g| g.cases()).sum();
        assert_eq!(total, 9);

        let metric = Metric::new(&schema, &ClusterParams::default()).unwrap();
        let templates = Templates::default();
        let params = DiagnosisParams::default();
        let describer = Describer { schema: &schema, metric: &metric, templates: &templates, params: &params };
        let rows = build_histogram(&groups, 38, &describer);
        assert_eq!(rows[0].group_id, 1);
        assert_eq!((rows[0].correct_cases, rows[0].incorrect_cases, rows[0].students), (5, 1, 2));
        assert!(build_histogram(&[], 38, &describer).is_empty());
        let mut csv = Vec::new();
        write_csv(&rows, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("rank,group_id,correct_cases,incorrect_cases,students,description\n"));
        assert!(render_svg(&rows).contains("<svg"));
    }
}
