//! Monte Carlo experiments on the normalized maxima `W_n / a_n` and
//! `T_n / a_n` over a grid of sample sizes, with `p_n = round(c n)`.
//!
//! Every `(n, rep)` draw comes from its own stream, so results do not depend
//! on the number of worker threads.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::stats::{t_statistic, w_statistic, DataMatrix};

/// Largest number of cells allowed in one simulated matrix (1 GiB of f64).
pub const MAX_CELLS: usize = 1 << 27;
/// Matrices above this many cells are simulated one replication at a time,
/// with the parallelism inside the kernel, to bound peak memory.
pub const PARALLEL_REPS_MAX_CELLS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `n^alpha`
    Power,
    /// `sqrt(n ln n)`
    SqrtNlogn,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Power => "power",
            Normalization::SqrtNlogn => "sqrt-nlogn",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "power" => Ok(Normalization::Power),
            "sqrt-nlogn" => Ok(Normalization::SqrtNlogn),
            other => Err(Error::InvalidParameter(format!(
                "unknown normalization `{other}` (expected power or sqrt-nlogn)"
            ))),
        }
    }
}

mod text_form {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};
    use std::fmt::Display;
    use std::str::FromStr;

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<T: Display, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.collect_str(v),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, T, D>(d: D) -> Result<Option<T>, D::Error>
        where
            T: FromStr,
            T::Err: Display,
            D: Deserializer<'de>,
        {
            Option::<String>::deserialize(d)?
                .map(|s| s.parse().map_err(D::Error::custom))
                .transpose()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(with = "text_form")]
    pub dist_u: DistributionSpec,
    /// Present for `T_n`, absent for `W_n`.
    #[serde(with = "text_form::option", default, skip_serializing_if = "Option::is_none")]
    pub dist_v: Option<DistributionSpec>,
    /// `c` in `p_n = round(c n)`.
    pub p_rule: f64,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub normalization: Normalization,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    W,
    T,
}

impl SimConfig {
    pub fn mode(&self) -> Mode {
        if self.dist_v.is_some() {
            Mode::T
        } else {
            Mode::W
        }
    }

    /// `p_n = round(c n)`
    pub fn p_of(&self, n: usize) -> usize {
        (self.p_rule * n as f64).round() as usize
    }

    pub fn normalizer(&self, n: usize) -> f64 {
        let x = n as f64;
        match self.normalization {
            Normalization::Power => x.powf(self.alpha.unwrap_or(1.0)),
            Normalization::SqrtNlogn => (x * x.ln()).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dist_u.validate()?;
        if let Some(v) = &self.dist_v {
            v.validate()?;
        }
        if !(self.p_rule > 0.0 && self.p_rule.is_finite()) {
            return Err(Error::InvalidParameter(format!("p_rule must be positive, got {}", self.p_rule)));
        }
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidParameter("n_grid is empty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("n_grid must be strictly increasing".into()));
        }
        if self.n_grid.len() > u32::MAX as usize || self.reps > u32::MAX as usize {
            return Err(Error::InvalidParameter("grid or replication count too large".into()));
        }
        match self.normalization {
            Normalization::Power => match self.alpha {
                Some(a) if a > 0.5 && a <= 1.0 => {}
                Some(a) => return Err(Error::InvalidParameter(format!("alpha must lie in (1/2, 1], got {a}"))),
                None => return Err(Error::InvalidParameter("power normalization needs alpha".into())),
            },
            Normalization::SqrtNlogn => {
                if self.n_grid[0] < 3 {
                    return Err(Error::InvalidParameter("sqrt-nlogn normalization needs n >= 3".into()));
                }
            }
        }
        for &n in &self.n_grid {
            if n > u32::MAX as usize {
                return Err(Error::InvalidParameter(format!("n = {n} is too large")));
            }
            let p = self.p_of(n);
            if p < 2 {
                return Err(Error::InvalidParameter(format!("p_n = {p} at n = {n}; need at least 2 columns")));
            }
            if n.checked_mul(p).is_none_or(|cells| cells > MAX_CELLS) {
                return Err(Error::Infeasible(format!(
                    "a {n} x {p} matrix exceeds the limit of {MAX_CELLS} cells"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub n: usize,
    pub rep: usize,
    pub statistic: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub config: SimConfig,
    /// Ordered by `(n, rep)`.
    pub records: Vec<SimRecord>,
}

/// Draw one replication at sample size `n` and return the statistic.
pub fn simulate_one(cfg: &SimConfig, n: usize, rep: usize) -> Result<f64> {
    let p = cfg.p_of(n);
    let mut rng = rng::stream(cfg.master_seed, Domain::Simulation, n as u64, rep as u64);
    let mut u = vec![0.0; n * p];
    cfg.dist_u.sample_into(&mut u, &mut rng)?;
    let u = DataMatrix::from_col_major(n, p, u)?;
    match &cfg.dist_v {
        None => Ok(w_statistic(&u)?.value),
        Some(dv) => {
            let mut v = vec![0.0; n * p];
            dv.sample_into(&mut v, &mut rng)?;
            let v = DataMatrix::from_col_major(n, p, v)?;
            Ok(t_statistic(&u, &v)?.value)
        }
    }
}

pub fn run_experiment(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let record = |n: usize, rep: usize| -> Result<SimRecord> {
        let statistic = simulate_one(cfg, n, rep)?;
        Ok(SimRecord { n, rep, statistic, ratio: statistic / cfg.normalizer(n) })
    };
    let mut records = Vec::with_capacity(cfg.n_grid.len() * cfg.reps);
    for &n in &cfg.n_grid {
        if n * cfg.p_of(n) <= PARALLEL_REPS_MAX_CELLS {
            records.extend((0..cfg.reps).into_par_iter().map(|rep| record(n, rep)).collect::<Result<Vec<_>>>()?);
        } else {
            for rep in 0..cfg.reps {
                records.push(record(n, rep)?);
            }
        }
    }
    Ok(SimResult { config: cfg.clone(), records })
}

/// Type-7 quantile (linear interpolation between order statistics) of
/// sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n: usize,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Per-`n` median and 5%/95% quantiles of the normalized ratio, in grid order.
pub fn summarize(records: &[SimRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no records to summarize".into()));
    }
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    Ok(ns
        .into_iter()
        .map(|n| {
            let mut v: Vec<f64> = records.iter().filter(|r| r.n == n).map(|r| r.ratio).collect();
            v.sort_by(f64::total_cmp);
            SummaryRow {
                n,
                median: quantile_sorted(&v, 0.5),
                q05: quantile_sorted(&v, 0.05),
                q95: quantile_sorted(&v, 0.95),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expectation {
    /// Medians strictly decreasing and the last below half the first.
    ToZero,
    /// Last median inside `[lo, hi]` and `|median - 2|` not increasing over
    /// the last two points.
    ToTwo { lo: f64, hi: f64 },
    /// 95% quantile at the last point at most `2 + slack`.
    BoundedByTwo { slack: f64 },
    /// Last median above twice the first.
    Diverges,
}

impl Expectation {
    pub const DEFAULT_TWO_BAND: (f64, f64) = (1.7, 2.2);
    pub const DEFAULT_SLACK: f64 = 0.25;

    pub fn to_two() -> Self {
        let (lo, hi) = Self::DEFAULT_TWO_BAND;
        Expectation::ToTwo { lo, hi }
    }

    /// Band `2 +- half_width`.
    pub fn to_two_symmetric(half_width: f64) -> Self {
        Expectation::ToTwo { lo: 2.0 - half_width, hi: 2.0 + half_width }
    }
}

impl FromStr for Expectation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "to_zero" => Ok(Expectation::ToZero),
            "to_two" => Ok(Expectation::to_two()),
            "bounded_by_two" => Ok(Expectation::BoundedByTwo { slack: Self::DEFAULT_SLACK }),
            "diverges" => Ok(Expectation::Diverges),
            other => Err(Error::InvalidParameter(format!(
                "unknown expectation `{other}` (expected to_zero, to_two, bounded_by_two or diverges)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    pub expectation: Expectation,
    pub passed: bool,
    pub summary: Vec<SummaryRow>,
    pub message: String,
}

pub fn trend_assert(summary: &[SummaryRow], expectation: Expectation) -> Result<TrendReport> {
    if summary.len() < 3 {
        return Err(Error::TooFewPoints { need: 3, got: summary.len() });
    }
    let med: Vec<f64> = summary.iter().map(|r| r.median).collect();
    let first = med[0];
    let last = med[med.len() - 1];
    let (passed, message) = match expectation {
        Expectation::ToZero => {
            let decreasing = med.windows(2).all(|w| w[1] < w[0]);
            let halved = last < 0.5 * first;
            (
                decreasing && halved,
                format!("strictly decreasing: {decreasing}; last/first = {:.4} (need < 0.5)", last / first),
            )
        }
        Expectation::ToTwo { lo, hi } => {
            let in_band = (lo..=hi).contains(&last);
            let prev = med[med.len() - 2];
            let approaching = (last - 2.0).abs() <= (prev - 2.0).abs();
            (
                in_band && approaching,
                format!(
                    "last median {last:.4} in [{lo}, {hi}]: {in_band}; |m-2| {:.4} -> {:.4} nonincreasing: {approaching}",
                    (prev - 2.0).abs(),
                    (last - 2.0).abs()
                ),
            )
        }
        Expectation::BoundedByTwo { slack } => {
            let q95 = summary[summary.len() - 1].q95;
            (q95 <= 2.0 + slack, format!("last q95 {q95:.4} (need <= {})", 2.0 + slack))
        }
        Expectation::Diverges => {
            let grew = last > 2.0 * first;
            (grew, format!("last/first = {:.4} (need > 2)", last / first))
        }
    };
    Ok(TrendReport { expectation, passed, summary: summary.to_vec(), message })
}

/// `n,rep,statistic,ratio`
pub fn write_records_csv<W: Write>(records: &[SimRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `n,median,q05,q95`
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated `n median` lines with a `#` header, for plotting tools.
pub fn write_plot_data<W: Write>(rows: &[SummaryRow], label: &str, mut out: W) -> Result<()> {
    writeln!(out, "# {label}")?;
    writeln!(out, "# n median_ratio")?;
    for r in rows {
        writeln!(out, "{} {}", r.n, r.median)?;
    }
    Ok(())
}
