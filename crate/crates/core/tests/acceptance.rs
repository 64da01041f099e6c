//! One line per acceptance criterion, then a single assertion over all of them.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use attitudes::algebra::{parse_relation, render};
use attitudes::cluster::{agglomerate, ClusterParams, ClusterStats, Metric};
use attitudes::diagnosis::{attitudes as attitudes_of, Coherence, Describer, DiagnosisParams, Templates};
use attitudes::encode::{encode_case, AttrCategory, AttributeDescriptor, AttributeSchema, Case};
use attitudes::cohort::write_csv;
use attitudes::pipeline::{run_on, segment_and_encode, PipelineConfig, Resources};
use attitudes::rules::{Correctness, RuleSet};
use attitudes::segment::{segment, DEFAULT_BUDGET};
use attitudes::synth::{generate, MisconceptionProfile};
use attitudes::traces::{ingest_reader, write_jsonl};
use common::{oracle_agglomerate, oracle_category, oracle_distance, random_counts, Counts, Layout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use AttrCategory::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let took = start.elapsed();
    (took < limit, format!("{:.3}s of {:.0}s", took.as_secs_f64(), limit.as_secs_f64()))
}

fn layout_of(schema: &AttributeSchema) -> Layout {
    Layout {
        cats: schema
            .attributes()
            .iter()
            .map(|a| match a.category {
                Context => 0,
                Action => 1,
                Outcome => 2,
            })
            .collect(),
        sizes: schema.attributes().iter().map(|a| a.values.len()).collect(),
        weights: schema.attributes().iter().map(|a| a.weight as f64).collect(),
        skip: schema.index_of(Action, "expr.correct"),
    }
}

fn stats(members: std::ops::Range<usize>, counters: Counts, correct: u32, incorrect: u32) -> ClusterStats {
    ClusterStats { members: members.collect(), counters, correct, incorrect }
}

fn table2() -> (AttributeSchema, ClusterStats, ClusterStats) {
    let d = |n: &str, vals: &[&str]| AttributeDescriptor {
        name: n.into(),
        category: Context,
        values: vals.iter().map(|v| v.to_string()).collect(),
        weight: 1,
    };
    let schema = AttributeSchema::new(vec![
        d("arg.side", &["left", "right"]),
        d("arg.location", &["beginning", "middle", "end", "alone"]),
        d("arg.complex", &["true", "false"]),
        d("arg.polynomial", &["true", "false"]),
    ])
    .unwrap();
    let case12 = stats(12..13, vec![vec![0, 1], vec![0, 1, 0, 0], vec![1, 0], vec![1, 0]], 1, 0);
    let wc6 = stats(100..103, vec![vec![1, 3], vec![0, 1, 3, 0], vec![0, 1], vec![3, 0]], 3, 0);
    (schema, case12, wc6)
}

fn criterion1() -> Outcome {
    let start = Instant::now();
    let (_, case12, wc6) = table2();
    let merged = case12.merge(&wc6).unwrap();
    let want = vec![vec![1, 4], vec![0, 2, 3, 0], vec![1, 1], vec![4, 0]];
    let exact = merged.counters == want && merged.size() == 4;
    let (fast, t) = within(Duration::from_secs(1), start);
    outcome(exact && fast, format!("merged counters {:?}; {t}", merged.counters))
}

fn criterion2() -> Outcome {
    let start = Instant::now();
    let schema = AttributeSchema::default();
    let rules = RuleSet::default();
    let steps = segment(
        &parse_relation("-5x+4-7/3=9x^2-10").unwrap(),
        &parse_relation("x+4-7/3=9x^2-10+5").unwrap(),
        &rules,
        DEFAULT_BUDGET,
    )
    .unwrap();
    let case = encode_case(&steps[0], &schema).unwrap();
    let expected = [
        (Context, "arg.side", "left"),
        (Context, "arg.location", "beginning"),
        (Context, "arg.polynomial", "false"),
        (Context, "arg.coefficient", "true"),
        (Context, "arg.implicitSign", "false"),
        (Context, "arg.operator", "×"),
        (Context, "arg.category", "multiplicative"),
        (Context, "arg.negative", "true"),
        (Context, "term.polynomial", "true"),
        (Context, "expr.type", "equation"),
        (Context, "expr.polynomial", "true"),
        (Action, "arg.operatorChanged", "true"),
        (Action, "arg.categoryChanged", "true"),
        (Action, "arg.signChanged", "true"),
        (Action, "expr.typeChanged", "false"),
        (Action, "expr.correct", "false"),
        (Outcome, "arg.operator", "+"),
        (Outcome, "arg.category", "additive"),
        (Outcome, "arg.negative", "false"),
        (Outcome, "expr.type", "equation"),
    ];
    let wrong: Vec<String> = expected
        .iter()
        .filter(|(c, n, v)| case.value(&schema, *c, n) != Some(*v))
        .map(|(c, n, _)| format!("{c}.{n}"))
        .collect();
    let (fast, t) = within(Duration::from_secs(1), start);
    let pass = steps.len() == 1 && wrong.is_empty() && fast;
    outcome(pass, format!("{} of {} values match; {t}", expected.len() - wrong.len(), expected.len()))
}

fn criterion3() -> Outcome {
    let start = Instant::now();
    let steps = segment(&parse_relation("-4x<2").unwrap(), &parse_relation("x<-1/2").unwrap(), &RuleSet::default(), DEFAULT_BUDGET)
        .unwrap();
    let labels: Vec<Correctness> = steps.iter().map(|s| s.correctness).collect();
    let mid = steps.first().map(|s| render(&s.to)).unwrap_or_default();
    let (fast, t) = within(Duration::from_secs(1), start);
    let pass = labels == [Correctness::Incorrect, Correctness::Correct] && mid == "x<2/(-4)" && fast;
    outcome(pass, format!("{} steps {:?} via {mid}; {t}", steps.len(), labels))
}

fn random_stats(rng: &mut ChaCha8Rng, layout: &Layout, id: usize) -> ClusterStats {
    stats(id..id + 1, random_counts(rng, layout, 5), rng.gen_range(0..5), rng.gen_range(0..5))
}

fn criterion4() -> Outcome {
    let (t2_schema, case12, wc6) = table2();
    let t2_metric = Metric::new(&t2_schema, &ClusterParams::default()).unwrap();
    let t2 = t2_metric.category_distance(&case12, &wc6, Context);
    let t2_oracle = oracle_category(&layout_of(&t2_schema), &case12.counters, &wc6.counters, 0);

    let schema = AttributeSchema::default();
    let layout = layout_of(&schema);
    let metric = Metric::new(&schema, &ClusterParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (a, b) = (random_stats(&mut rng, &layout, 0), random_stats(&mut rng, &layout, 1));
        for (cat, k) in [(Context, 0), (Action, 1), (Outcome, 2)] {
            worst = worst.max((metric.category_distance(&a, &b, cat) - oracle_category(&layout, &a.counters, &b.counters, k)).abs());
        }
    }
    let pass = worst <= 1e-12 && (t2 - 4.0).abs() <= 1e-12 && (t2_oracle - 4.0).abs() <= 1e-12;
    outcome(pass, format!("max |diff| {worst:.1e} over 1000 pairs; table value {t2}"))
}

fn random_case(rng: &mut ChaCha8Rng, schema: &AttributeSchema) -> Case {
    let values = schema
        .attributes()
        .iter()
        .map(|a| if rng.gen_ratio(1, 8) { None } else { Some(rng.gen_range(0..a.values.len().min(2)) as u16) })
        .collect();
    let correctness = if rng.gen_bool(0.5) { Correctness::Correct } else { Correctness::Incorrect };
    Case { values, correctness, origin: None }
}

fn criterion5() -> Outcome {
    let schema = AttributeSchema::default();
    let layout = layout_of(&schema);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    let mut merges = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=10);
        let cases: Vec<Case> = (0..n).map(|_| random_case(&mut rng, &schema)).collect();
        let params = ClusterParams {
            alpha: rng.gen_range(0.0..=1.0),
            stop_threshold: rng.gen_range(0.0..20.0),
            normalize_categories: rng.gen_bool(0.5),
            ..ClusterParams::default()
        };
        let d = agglomerate(&cases, &schema, &params).unwrap();
        let leaves: Vec<Counts> = cases.iter().enumerate().map(|(i, c)| ClusterStats::singleton(i, c, &schema).unwrap().counters).collect();
        let want = oracle_agglomerate(&layout, &leaves, params.alpha, params.normalize_categories, params.stop_threshold);
        let got: Vec<(Vec<usize>, Vec<usize>, f64)> = d
            .merges()
            .into_iter()
            .map(|m| {
                let ids = |x| d.node(x).stats.members.iter().copied().collect::<Vec<_>>();
                (ids(m.left), ids(m.right), m.distance)
            })
            .collect();
        merges += want.len();
        let same = got.len() == want.len()
            && got.iter().zip(&want).all(|(g, w)| g.0 == w.0 && g.1 == w.1 && (g.2 - w.2).abs() <= 1e-12);
        if !same {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} of 200 inputs differ ({merges} merges compared)"))
}

fn criterion6() -> Outcome {
    let schema = AttributeSchema::default();
    let layout = layout_of(&schema);
    let excluded = schema.index_of(Action, "expr.correct").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures: BTreeMap<&str, usize> = BTreeMap::new();
    let mut fail = |k| *failures.entry(k).or_insert(0) += 1;
    for _ in 0..1000 {
        let alpha = rng.gen_range(0.0..=1.0);
        let normalize = rng.gen_bool(0.5);
        let params = ClusterParams { alpha, normalize_categories: normalize, ..ClusterParams::default() };
        let metric = Metric::new(&schema, &params).unwrap();
        let na = rng.gen_range(1..6);
        let nb = rng.gen_range(1..6);
        let a = (0..na).map(|i| ClusterStats::singleton(i, &random_case(&mut rng, &schema), &schema).unwrap());
        let a = a.reduce(|x, y| x.merge(&y).unwrap()).unwrap();
        let b = (na..na + nb).map(|i| ClusterStats::singleton(i, &random_case(&mut rng, &schema), &schema).unwrap());
        let b = b.reduce(|x, y| x.merge(&y).unwrap()).unwrap();

        // counter conservation
        let m = a.merge(&b).unwrap();
        let sums_ok = (0..schema.len()).all(|d| (0..m.counters[d].len()).all(|v| m.counters[d][v] == a.counters[d][v] + b.counters[d][v]));
        let totals_ok = m.counters.iter().all(|c| c.iter().sum::<u32>() as usize <= m.size())
            && (m.correct + m.incorrect) as usize == m.size()
            && m.size() == na + nb;
        if !(sums_ok && totals_ok) {
            fail("conservation");
        }

        // frequency normalization
        for d in 0..schema.len() {
            let defined = m.counters[d].iter().sum::<u32>() > 0;
            match m.frequencies(d) {
                Some(f) if defined => {
                    if (f.iter().sum::<f64>() - 1.0).abs() > 1e-12 || f.iter().any(|x| !(0.0..=1.0).contains(x)) {
                        fail("normalization");
                    }
                }
                None if !defined => {}
                _ => fail("normalization"),
            }
        }

        // symmetry, identity, bounds, oracle agreement
        let dab = metric.distance(&a, &b);
        if (dab - metric.distance(&b, &a)).abs() > 1e-12 {
            fail("symmetry");
        }
        if metric.distance(&a, &a).abs() > 1e-12 || metric.distance(&a, &a.relabel(99)).abs() > 1e-12 {
            fail("identity");
        }
        let bound = |cat| if normalize { 2.0 } else { 2.0 * metric.weight_total(cat) };
        let upper = alpha * bound(Context) + (1.0 - alpha) * (bound(Action) + bound(Outcome));
        // per-category sums are never normalized
        let cats_ok = [Context, Action, Outcome].into_iter().all(|c| {
            let x = metric.category_distance(&a, &b, c);
            (0.0..=2.0 * metric.weight_total(c) + 1e-12).contains(&x)
        });
        if !(cats_ok && dab >= 0.0 && dab <= upper + 1e-12) {
            fail("bounds");
        }
        if (dab - oracle_distance(&layout, &a.counters, &b.counters, alpha, normalize)).abs() > 1e-12 {
            fail("oracle");
        }

        // expr.correct never contributes
        let mut flipped = a.clone();
        flipped.counters[excluded].reverse();
        flipped.counters[excluded][0] += 3;
        if (metric.distance(&flipped, &b) - dab).abs() > 1e-12 {
            fail("exclusion");
        }
    }
    let pass = failures.is_empty();
    let detail = if pass { "1000 trials, all invariants hold".to_string() } else { format!("failures {failures:?}") };
    outcome(pass, detail)
}

/// Movement cases of one synthetic student, with the ground-truth
/// eligibility of the trace line each case came from.
fn synthetic_cases(profile: MisconceptionProfile, res: &Resources, cfg: &PipelineConfig) -> (Vec<Case>, Vec<bool>) {
    let corpus = generate(std::slice::from_ref(&profile), &res.rules).unwrap();
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &corpus.traces).unwrap();
    let ingested = ingest_reader(&buf[..], 0.0).unwrap();
    let pairs = &ingested.students[&profile.student_id];
    let truth: BTreeMap<(String, u32), bool> =
        corpus.truth.iter().map(|t| ((t.problem_id.clone(), t.step_index), t.eligible)).collect();
    let mut cases = Vec::new();
    let mut eligible = Vec::new();
    for pair in pairs {
        let (_, _, c) = segment_and_encode(&profile.student_id, std::slice::from_ref(pair), res, cfg).unwrap();
        eligible.extend(std::iter::repeat_n(truth[&(pair.problem_id.clone(), pair.step_index)], c.len()));
        cases.extend(c);
    }
    (cases, eligible)
}

fn criterion7() -> Outcome {
    let start = Instant::now();
    let cfg = PipelineConfig::default();
    let res = Resources::load(&cfg).unwrap();
    let mut counts = Vec::new();
    for seed in 0..20u64 {
        let p = MisconceptionProfile::new(format!("s{seed}"), 30, seed).with_bug("mul_move_keep_sense", 1.0);
        let (mut cases, _) = synthetic_cases(p, &res, &cfg);
        cases.truncate(50);
        let d = agglomerate(&cases, &res.schema, &cfg.cluster_params()).unwrap();
        counts.push((cases.len(), d.roots.len()));
    }
    let good = counts.iter().filter(|(n, k)| *n == 50 && (4..=7).contains(k)).count();
    let (fast, t) = within(Duration::from_secs(10), start);
    let ks: Vec<usize> = counts.iter().map(|c| c.1).collect();
    outcome(good >= 18 && fast, format!("{good}/20 seeds in 4..=7 (counts {ks:?}); {t}"))
}

fn criterion8() -> Outcome {
    let cfg = PipelineConfig::default();
    let res = Resources::load(&cfg).unwrap();
    let dparams = cfg.diagnosis_params();
    let mut parts = Vec::new();
    let mut pass = true;
    for (q, want) in [(0.0, Coherence::CoherentCorrect), (1.0, Coherence::CoherentIncorrect), (0.3, Coherence::Incoherent)] {
        let mut good = 0;
        let mut worst_gap: f64 = 0.0;
        for seed in 0..20u64 {
            let p = MisconceptionProfile::new(format!("s{seed}"), 60, 100 + seed).with_bug("add_move_keep_sign", q);
            let (cases, eligible) = synthetic_cases(p, &res, &cfg);
            let d = agglomerate(&cases, &res.schema, &cfg.cluster_params()).unwrap();
            let atts = attitudes_of(&d, &dparams);
            let best = atts
                .iter()
                .max_by_key(|a| (a.stats.members.iter().filter(|&&i| eligible[i]).count(), std::cmp::Reverse(a.id)))
                .unwrap();
            let s = &best.stats;
            let minority = s.correct.min(s.incorrect) as f64 / s.size() as f64;
            let ok = best.coherence == want && (want != Coherence::Incoherent || (minority - 0.3).abs() <= 0.12);
            if want == Coherence::Incoherent {
                worst_gap = worst_gap.max((minority - 0.3).abs());
            }
            if ok {
                good += 1;
            }
        }
        pass &= good >= 18;
        parts.push(format!("q={q}: {good}/20 {}", want.name()));
        if want == Coherence::Incoherent {
            parts.push(format!("max minority gap {worst_gap:.2}"));
        }
    }
    outcome(pass, parts.join("; "))
}

fn criterion9() -> Outcome {
    let schema = AttributeSchema::default();
    let movement = |side: &'static str, sign: &'static str, ok: &'static str| {
        vec![
            (Context, "arg.side", side),
            (Context, "arg.negative", "false"),
            (Context, "arg.category", "additive"),
            (Context, "arg.operator", "+"),
            (Context, "expr.type", "equation"),
            (Action, "arg.signChanged", sign),
            (Action, "expr.correct", ok),
            (Outcome, "arg.category", "additive"),
            (Outcome, "arg.operator", "+"),
            (Outcome, "expr.type", "equation"),
        ]
    };
    let mut cases = Vec::new();
    for _ in 0..8 {
        cases.push(Case::from_symbols(&schema, &movement("left", "true", "true"), Correctness::Correct).unwrap());
    }
    for _ in 0..6 {
        cases.push(Case::from_symbols(&schema, &movement("right", "false", "false"), Correctness::Incorrect).unwrap());
    }
    let params = ClusterParams { stop_threshold: 1e9, ..ClusterParams::default() };
    let d = agglomerate(&cases, &schema, &params).unwrap();
    let metric = Metric::new(&schema, &params).unwrap();
    let dparams = DiagnosisParams::default();
    let templates = Templates::default();
    let describer = Describer { schema: &schema, metric: &metric, templates: &templates, params: &dparams };
    let atts = attitudes_of(&d, &dparams);
    let text = describer.render(&atts[0], &d, &cases).to_text();
    let checks = [
        ("header", text.contains("based on 14 transformations (8 correct, 6 incorrect)")),
        ("sign split", text.contains("with or without changing its sign")),
        ("discriminant", text.contains("- the term to be moved is on the right side of the equation;")),
    ];
    let missing: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(atts.len() == 1 && missing.is_empty(), if missing.is_empty() { "all substrings present".into() } else { format!("missing {missing:?}") })
}

fn cohort_run(seed: u64) -> (usize, usize, Vec<u8>) {
    let cfg = PipelineConfig::default();
    let res = Resources::load(&cfg).unwrap();
    let profiles: Vec<MisconceptionProfile> = (0..30u64)
        .map(|i| {
            let p = MisconceptionProfile::new(format!("s{i:02}"), 40, seed * 100 + i);
            match i {
                0..=9 => p.with_bug("add_move_keep_sign", 1.0),
                10..=19 => p.with_bug("mul_move_keep_sense", 0.5),
                _ => p,
            }
        })
        .collect();
    let corpus = generate(&profiles, &res.rules).unwrap();
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &corpus.traces).unwrap();
    let r = run_on(ingest_reader(&buf[..], 0.0).unwrap(), &res, &cfg).unwrap();
    let mut csv = Vec::new();
    write_csv(&r.histogram, &mut csv).unwrap();

    let target: BTreeSet<String> = (0..10).map(|i| format!("s{i:02}")).collect();
    let mut reader = csv::Reader::from_reader(&csv[..]);
    let mut best = (0, usize::MAX);
    for row in reader.records() {
        let row = row.unwrap();
        let rank: usize = row[0].parse().unwrap();
        let gid: usize = row[1].parse().unwrap();
        let g = r.groups.iter().find(|g| g.id == gid).unwrap();
        if g.incorrect() <= g.correct() {
            continue;
        }
        let k = g.students.intersection(&target).count();
        if k > best.0 {
            best = (k, rank);
        }
    }
    (best.0, best.1, csv)
}

fn criterion10() -> Outcome {
    let (overlap, rank, csv) = cohort_run(1);
    let (_, _, again) = cohort_run(1);
    let pass = overlap >= 9 && rank <= 3 && csv == again;
    outcome(pass, format!("buggy group holds {overlap}/10 students at rank {rank}; rerun identical: {}", csv == again))
}

fn digests(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if matches!(p.extension().and_then(|x| x.to_str()), Some("txt" | "csv")) {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), Sha256::digest(std::fs::read(&p).unwrap()).to_vec());
            }
        }
    }
    out
}

fn criterion11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus.jsonl");
    let mut runs = Vec::new();
    for name in ["first", "second"] {
        let out = dir.path().join(name);
        let res = Command::new(env!("CARGO_BIN_EXE_attitudes"))
            .args(["mine", "--traces"])
            .arg(&fixture)
            .arg("--out")
            .arg(&out)
            .args(["--format", "csv,svg,txt"])
            .output()
            .unwrap();
        if !res.status.success() {
            return outcome(false, String::from_utf8_lossy(&res.stderr).into_owned());
        }
        runs.push(digests(&out));
    }
    let pass = !runs[0].is_empty() && runs[0] == runs[1];
    outcome(pass, format!("{} text/CSV files compared", runs[0].len()))
}

#[test]
fn acceptance() {
    let criteria: [(usize, fn() -> Outcome); 11] = [
        (1, criterion1),
        (2, criterion2),
        (3, criterion3),
        (4, criterion4),
        (5, criterion5),
        (6, criterion6),
        (7, criterion7),
        (8, criterion8),
        (9, criterion9),
        (10, criterion10),
        (11, criterion11),
    ];
    let mut failed = Vec::new();
    for (n, check) in criteria {
        let o = check();
        println!("criterion {n}: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
