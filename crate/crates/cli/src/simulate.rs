use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use maxcorr::sims::{
    run_experiment, summarize, trend_assert, write_plot_data, write_records_csv, write_summary_csv, Expectation,
    Normalization, SimConfig,
};
use maxcorr::DistributionSpec;

use crate::exit;
use crate::manifest::RunManifest;

const RECORDS: &str = "records.csv";
const SUMMARY: &str = "summary.csv";
const PLOT: &str = "plot.dat";
const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// W_n from one array
    W,
    /// T_n from two independent arrays U and V
    T,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON file with config fields (or a manifest from an earlier run); flags override it
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Distribution of the entries of U, e.g. gaussian, pareto(a=3.2)
    #[arg(long, alias = "dist-u", value_name = "DIST")]
    pub dist: Option<String>,

    /// Distribution of the entries of V (implies mode T)
    #[arg(long, value_name = "DIST")]
    pub dist_v: Option<String>,

    /// W or T; T without --dist-v draws V from the same distribution as U
    #[arg(long, value_enum, ignore_case = true)]
    pub mode: Option<ModeArg>,

    /// c in p_n = round(c n) [default: 1]
    #[arg(long, value_name = "C")]
    pub p_rule: Option<f64>,

    /// Sample sizes, comma separated and strictly increasing
    #[arg(long = "n", value_name = "LIST", value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,

    /// Replications per sample size
    #[arg(long)]
    pub reps: Option<usize>,

    /// Exponent of the power normalizer n^alpha, in (1/2, 1]
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Normalizer: power (n^alpha) or sqrt-nlogn (sqrt(n ln n))
    #[arg(long, value_name = "NORM")]
    pub norm: Option<Normalization>,

    /// Master seed for all random streams (required unless the config has one)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Trend to assert on the medians: to_zero, to_two, bounded_by_two or diverges; failure exits 4
    #[arg(long, value_name = "TREND")]
    pub expect: Option<Expectation>,

    /// Band LO,HI for to_two [default: 1.7,2.2]
    #[arg(long, value_name = "LO,HI")]
    pub band: Option<String>,

    /// Slack above 2 allowed for bounded_by_two [default: 0.25]
    #[arg(long)]
    pub slack: Option<f64>,

    /// Directory for records.csv, summary.csv, plot.dat and manifest.json
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

/// Config file contents; every field optional so flags can fill the gaps.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    dist_u: Option<String>,
    dist_v: Option<String>,
    p_rule: Option<f64>,
    n_grid: Option<Vec<usize>>,
    reps: Option<usize>,
    alpha: Option<f64>,
    normalization: Option<Normalization>,
    master_seed: Option<u64>,
    expect: Option<Expectation>,
}

fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    // A manifest carries the resolved config under `config`.
    if value.get("subcommand").is_some() {
        value = value.get("config").cloned().ok_or_else(|| anyhow!("manifest has no config"))?;
    }
    serde_json::from_value(value).with_context(|| format!("invalid config in {}", path.display()))
}

fn parse_dist(s: &str) -> Result<DistributionSpec> {
    Ok(s.parse::<DistributionSpec>()?)
}

fn resolve(args: &SimulateArgs) -> Result<(SimConfig, Option<Expectation>)> {
    let file = match &args.config {
        Some(p) => load_config(p)?,
        None => ConfigFile::default(),
    };
    let expect = expectation(args, file.expect)?;
    let dist_u = args.dist.as_deref().or(file.dist_u.as_deref()).ok_or_else(|| anyhow!("--dist is required"))?;
    let dist_u = parse_dist(dist_u)?;
    let dist_v = match (args.mode, &args.dist_v) {
        (Some(ModeArg::W), Some(_)) => bail!("--dist-v conflicts with --mode W"),
        (Some(ModeArg::W), None) => None,
        (_, Some(v)) => Some(parse_dist(v)?),
        (Some(ModeArg::T), None) => Some(file.dist_v.as_deref().map(parse_dist).transpose()?.unwrap_or(dist_u)),
        (None, None) => file.dist_v.as_deref().map(parse_dist).transpose()?,
    };
    let normalization = args
        .norm
        .or(file.normalization)
        .ok_or_else(|| anyhow!("--norm is required (power or sqrt-nlogn)"))?;
    let cfg = SimConfig {
        dist_u,
        dist_v,
        p_rule: args.p_rule.or(file.p_rule).unwrap_or(1.0),
        n_grid: args.n_grid.clone().or(file.n_grid).ok_or_else(|| anyhow!("--n is required"))?,
        reps: args.reps.or(file.reps).ok_or_else(|| anyhow!("--reps is required"))?,
        alpha: args.alpha.or(file.alpha),
        normalization,
        master_seed: args
            .seed
            .or(file.master_seed)
            .ok_or_else(|| anyhow!("--seed is required: every run must name its master seed"))?,
    };
    cfg.validate()?;
    Ok((cfg, expect))
}

fn expectation(args: &SimulateArgs, from_file: Option<Expectation>) -> Result<Option<Expectation>> {
    let Some(mut e) = args.expect.or(from_file) else {
        if args.band.is_some() || args.slack.is_some() {
            bail!("--band and --slack need --expect");
        }
        return Ok(None);
    };
    if let Some(band) = &args.band {
        let Expectation::ToTwo { .. } = e else { bail!("--band only applies to --expect to_two") };
        let (lo, hi) = band.split_once(',').ok_or_else(|| anyhow!("--band must be LO,HI"))?;
        let (lo, hi): (f64, f64) = (lo.trim().parse()?, hi.trim().parse()?);
        if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            bail!("--band needs LO < HI");
        }
        e = Expectation::ToTwo { lo, hi };
    }
    if let Some(slack) = args.slack {
        let Expectation::BoundedByTwo { .. } = e else { bail!("--slack only applies to --expect bounded_by_two") };
        e = Expectation::BoundedByTwo { slack };
    }
    Ok(Some(e))
}

#[derive(Serialize)]
struct ResolvedRun<'a> {
    #[serde(flatten)]
    config: &'a SimConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    expect: Option<Expectation>,
}

pub fn run(args: &SimulateArgs) -> Result<u8> {
    let (cfg, expect) = resolve(args)?;
    if expect.is_some() && cfg.n_grid.len() < 3 {
        return Err(maxcorr::Error::TooFewPoints { need: 3, got: cfg.n_grid.len() }.into());
    }

    let result = run_experiment(&cfg)?;
    let summary = summarize(&result.records)?;

    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let create = |name: &str| {
        let p = dir.join(name);
        std::fs::File::create(&p).with_context(|| format!("writing {}", p.display()))
    };
    write_records_csv(&result.records, create(RECORDS)?)?;
    write_summary_csv(&summary, create(SUMMARY)?)?;
    let label = match cfg.dist_v {
        None => format!("W_n / {} for {}", cfg.normalization, cfg.dist_u),
        Some(v) => format!("T_n / {} for U ~ {}, V ~ {v}", cfg.normalization, cfg.dist_u),
    };
    write_plot_data(&summary, &label, create(PLOT)?)?;
    let outputs = [RECORDS, SUMMARY, PLOT, MANIFEST].map(String::from).to_vec();
    RunManifest::new("simulate", ResolvedRun { config: &cfg, expect }, Some(cfg.master_seed), outputs)
        .write(&dir.join(MANIFEST))?;

    println!("{:>8}  {:>10}  {:>10}  {:>10}", "n", "median", "q05", "q95");
    for r in &summary {
        println!("{:>8}  {:>10.4}  {:>10.4}  {:>10.4}", r.n, r.median, r.q05, r.q95);
    }
    let Some(e) = expect else { return Ok(exit::OK) };
    let report = trend_assert(&summary, e)?;
    println!("{} {}: {}", if report.passed { "PASS" } else { "FAIL" }, expect_name(e), report.message);
    Ok(if report.passed { exit::OK } else { exit::ASSERTION })
}

fn expect_name(e: Expectation) -> &'static str {
    match e {
        Expectation::ToZero => "to_zero",
        Expectation::ToTwo { .. } => "to_two",
        Expectation::BoundedByTwo { .. } => "bounded_by_two",
        Expectation::Diverges => "diverges",
    }
}
