use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use maxcorr::oracle::{self, OracleReport, Verdict};
use maxcorr::{DistributionSpec, SequenceSpec};

use crate::exit;
use crate::manifest::{self, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    /// Aligned key/value table
    Table,
}

#[derive(Debug, Args, Serialize)]
pub struct Output {
    /// Output format on stdout
    #[arg(long, value_enum, default_value = "json")]
    #[serde(skip)]
    pub format: Format,

    /// Also write the JSON report here, with a .manifest.json next to it
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Two-sided bound c^-1 S <= E|X| <= beta_1 + (B+1) c S with S = sum alpha_n P(|X| >= beta_n)
    Sandwich(SandwichArgs),
    /// Does sum n^alpha P(|X| >= n^beta) converge exactly when E|X|^((alpha+1)/beta) is finite?
    Series(SeriesArgs),
    /// Monte Carlo ratio P(max product of m >= u_n) / (C(n,m) P(product >= u_n))
    Lemma1(Lemma1Args),
    /// Series and moment sides of the sqrt(n ln n) condition for products of m factors
    SqrtNlogn(SqrtNlognArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SandwichArgs {
    /// Distribution of X, e.g. pareto(a=2)
    #[arg(long, value_name = "DIST")]
    #[serde(serialize_with = "as_text")]
    pub dist: DistributionSpec,

    /// Weights alpha_n: linear, const1, power(E), power-log(E), sqrt-nlogn, explicit(...)
    #[arg(long, value_name = "SEQ")]
    #[serde(serialize_with = "as_text")]
    pub alpha_seq: SequenceSpec,

    /// Thresholds beta_n, same forms as --alpha-seq
    #[arg(long, value_name = "SEQ")]
    #[serde(serialize_with = "as_text")]
    pub beta_seq: SequenceSpec,

    /// Number of series terms summed exactly
    #[arg(long = "N", value_name = "N", default_value_t = 10_000)]
    pub n_terms: usize,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct SeriesArgs {
    /// Distribution of X, e.g. pareto(a=3)
    #[arg(long, value_name = "DIST")]
    #[serde(serialize_with = "as_text")]
    pub dist: DistributionSpec,

    /// Weight exponent in n^alpha
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,

    /// Threshold exponent in n^beta
    #[arg(long)]
    pub beta: f64,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct Lemma1Args {
    /// Distribution of the factors, e.g. pareto(a=3.2)
    #[arg(long, value_name = "DIST")]
    #[serde(serialize_with = "as_text")]
    pub dist: DistributionSpec,

    /// Number of factors in each product
    #[arg(long, default_value_t = 2)]
    pub m: usize,

    /// Threshold sequence u_n, e.g. linear or const2
    #[arg(long, value_name = "SEQ")]
    #[serde(serialize_with = "as_text")]
    pub u: SequenceSpec,

    /// Number of variables
    #[arg(long)]
    pub n: usize,

    /// Monte Carlo replications
    #[arg(long, default_value_t = 1_000_000)]
    pub reps: u64,

    /// Master seed (required whenever sampling happens)
    #[arg(long)]
    pub seed: Option<u64>,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct SqrtNlognArgs {
    /// Distribution of the factors
    #[arg(long, value_name = "DIST")]
    #[serde(serialize_with = "as_text")]
    pub dist: DistributionSpec,

    /// Number of factors in each product
    #[arg(long, default_value_t = 1)]
    pub m: usize,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: Output,
}

fn as_text<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Split an outcome into its report and the remaining fields.
fn split(outcome: impl Serialize) -> Result<(Value, Value)> {
    let mut v = serde_json::to_value(outcome)?;
    let report = v
        .as_object_mut()
        .and_then(|o| o.remove("report"))
        .ok_or_else(|| anyhow!("outcome has no report"))?;
    Ok((report, v))
}

fn emit(check: &str, args: &impl Serialize, output: &Output, seed: Option<u64>, report: &OracleReport, details: Value, passed: bool) -> Result<u8> {
    let doc = json!({ "check": check, "report": report, "details": details });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match output.format {
        Format::Json => print!("{text}"),
        Format::Table => print_table(&doc),
    }
    if let Some(path) = &output.out {
        std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
        let side = manifest::sidecar(path);
        let config = json!({ "check": check, "args": args });
        RunManifest::new("oracle", config, seed, vec![manifest::file_name(path), manifest::file_name(&side)])
            .write(&side)?;
    }
    Ok(if passed { exit::OK } else { exit::ASSERTION })
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_owned(), s.clone())),
        other => rows.push((prefix.to_owned(), other.to_string())),
    }
}

fn print_table(doc: &Value) {
    let mut rows = Vec::new();
    flatten("", doc, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in rows {
        println!("{k:<width$}  {v}");
    }
}

pub fn run(cmd: &OracleCommand) -> Result<u8> {
    match cmd {
        OracleCommand::Sandwich(a) => {
            let out = oracle::sandwich_check(&a.dist, &a.alpha_seq, &a.beta_seq, a.n_terms)?;
            let passed = out.report.verdict == Verdict::Holds;
            let (_, details) = split(&out)?;
            emit("sandwich", a, &a.output, None, &out.report, details, passed)
        }
        OracleCommand::Series(a) => {
            let out = oracle::series_classify(&a.dist, a.alpha, a.beta)?;
            let (_, details) = split(&out)?;
            emit("series", a, &a.output, None, &out.report, details, out.agree)
        }
        OracleCommand::Lemma1(a) => {
            // Refusals are decided exactly, before any sampling, so they
            // do not need a seed.
            oracle::lemma1_plan(&a.dist, a.m, &a.u, a.n, a.reps)?;
            let seed = a.seed.ok_or_else(|| anyhow!("--seed is required: every Monte Carlo run must name its seed"))?;
            let out = oracle::lemma1_ratio(&a.dist, a.m, &a.u, a.n, a.reps, seed)?;
            let passed = out.report.verdict == Verdict::Holds;
            let (_, details) = split(&out)?;
            emit("lemma1", a, &a.output, Some(seed), &out.report, details, passed)
        }
        OracleCommand::SqrtNlogn(a) => {
            let out = oracle::sqrt_nlogn_condition(&a.dist, a.m)?;
            let (_, details) = split(&out)?;
            emit("sqrt-nlogn", a, &a.output, None, &out.report, details, out.agree)
        }
    }
}
