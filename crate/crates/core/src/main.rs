use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use attitudes::algebra::{parse_relation, render};
use attitudes::cohort::StudentAttitude;
use attitudes::pipeline::{
    encode_all, export_histogram, export_report, parse_formats, run_cohort, run_on, Format, PipelineConfig, Resources,
};
use attitudes::segment::segment;
use attitudes::synth::{generate_traces, MisconceptionProfile};
use attitudes::traces::{ingest_traces, write_jsonl};

#[derive(Parser)]
#[command(name = "attitudes", version, about = "Mine student attitudes from algebra traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write the report.
    Mine {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated: csv, svg, txt, json.
        #[arg(long, default_value = "csv,svg,txt")]
        format: String,
        #[command(flatten)]
        common: Common,
    },
    /// Decompose one transition into elementary steps.
    Segment {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[command(flatten)]
        common: Common,
    },
    /// Dump the encoded cases of a trace file as JSON lines.
    Encode {
        #[arg(long)]
        traces: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-aggregate attitudes saved by `mine --format json`.
    Cohort {
        #[arg(long)]
        attitudes: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv,svg")]
        format: String,
        #[command(flatten)]
        common: Common,
    },
    /// Generate synthetic traces and ground truth from a profile file.
    Synth {
        /// TOML with `[[profile]]` tables.
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p).context("config")?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn formats(text: &str) -> Result<BTreeSet<Format>> {
    parse_formats(text).context("config")
}

fn mine(traces: &Path, out: &Path, format: &str, common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let formats = formats(format)?;
    let res = Resources::load(&cfg)?;
    let ingested = ingest_traces(traces, cfg.max_malformed).context("ingest")?;
    let result = run_on(ingested, &res, &cfg)?;
    export_report(&result, out, &formats)?;
    print!("{}", result.summary.to_text());
    Ok(())
}

fn segment_one(from: &str, to: &str, common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let res = Resources::load(&cfg)?;
    let from = parse_relation(from).context("parse `from`")?;
    let to = parse_relation(to).context("parse `to`")?;
    let steps = segment(&from, &to, &res.rules, cfg.budget).context("segment")?;
    for s in steps {
        println!("{} -> {}  [{} {}]", render(&s.from), render(&s.to), s.rule_id, s.correctness);
    }
    Ok(())
}

fn encode(traces: &Path, out: Option<&Path>, common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let res = Resources::load(&cfg)?;
    let ingested = ingest_traces(traces, cfg.max_malformed).context("ingest")?;
    let (records, failed) = encode_all(&ingested, &res, &cfg)?;
    match out {
        Some(p) => write_jsonl(std::io::BufWriter::new(std::fs::File::create(p).with_context(|| format!("export: {}", p.display()))?), &records)?,
        None => write_jsonl(std::io::stdout().lock(), &records)?,
    }
    for f in failed {
        eprintln!("unsegmented {} step {}: {}", f.problem_id, f.step_index, f.reason);
    }
    Ok(())
}

fn cohort(attitudes: &Path, out: &Path, format: &str, common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let formats = formats(format)?;
    let res = Resources::load(&cfg)?;
    let text = std::fs::read_to_string(attitudes).with_context(|| format!("ingest: {}", attitudes.display()))?;
    let inputs: Vec<StudentAttitude> = serde_json::from_str(&text).context("ingest: attitudes file")?;
    let (groups, rows) = run_cohort(&inputs, &res, &cfg)?;
    export_histogram(&rows, out, &formats)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "attitudes: {}", inputs.len())?;
    writeln!(stdout, "group attitudes: {}", groups.len())?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    profile: Vec<MisconceptionProfile>,
}

fn synth(profiles: &Path, out: &Path, common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let res = Resources::load(&cfg)?;
    let text = std::fs::read_to_string(profiles).with_context(|| format!("synth: {}", profiles.display()))?;
    let mut file: ProfileFile = toml::from_str(&text).context("synth: profile file")?;
    if let Some(seed) = common.seed {
        for (i, p) in file.profile.iter_mut().enumerate() {
            p.seed = seed.wrapping_add(i as u64);
        }
    }
    std::fs::create_dir_all(out).with_context(|| format!("synth: {}", out.display()))?;
    let corpus = generate_traces(&file.profile, &res.rules, &out.join("traces.jsonl"), &out.join("truth.jsonl")).context("synth")?;
    if corpus.traces.is_empty() {
        bail!("synth: no steps generated");
    }
    println!("students: {}", file.profile.len());
    println!("trace lines: {}", corpus.traces.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Mine { traces, out, format, common } => mine(traces, out, format, common),
        Command::Segment { from, to, common } => segment_one(from, to, common),
        Command::Encode { traces, out, common } => encode(traces, out.as_deref(), common),
        Command::Cohort { attitudes, out, format, common } => cohort(attitudes, out, format, common),
        Command::Synth { profiles, out, common } => synth(profiles, out, common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
