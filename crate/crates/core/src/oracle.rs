//! Numerical checks of the moment/series equivalences: the two-sided
//! sandwich for `E|X|`, the series-vs-moment classifier, the max/product
//! probability ratio, and the `sqrt(n ln n)` moment condition.
//!
//! Convergence verdicts are exponent comparisons. Partial sums and their
//! remainder bounds are reported alongside as numeric evidence.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::distributions::{exponents_equal, DistributionSpec, Moment, TailClass};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::seqkit::{self, SandwichConstants, SequenceSpec};
use crate::stats::top_product_in_place;
use crate::summation::NeumaierSum;

/// Relative slack applied to every inequality comparison.
pub const REL_SLACK: f64 = 1e-9;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;
/// Below this many hits the Monte Carlo ratio is refused.
pub const MIN_HITS: u64 = 10;
/// Partial-sum checkpoints for the series checks.
pub const PARTIAL_SUM_POINTS: [usize; 3] = [100, 1_000, 10_000];

const MC_BATCH: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McInterval {
    pub estimate: f64,
    pub half_width: f64,
    pub reps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub lower_sum: f64,
    pub exact_moment: Moment,
    #[serde(serialize_with = "number_or_infinite")]
    pub upper_bound: f64,
    pub verdict: Verdict,
    #[serde(rename = "N_terms")]
    pub n_terms: u64,
    pub mc_ci: Option<McInterval>,
}

fn number_or_infinite<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("infinite")
    }
}

fn require_first_index_one(spec: &SequenceSpec, name: &str) -> Result<()> {
    spec.validate()?;
    if spec.offset != 1 {
        return Err(Error::InvalidSequence(format!("{name} must start at n = 1 (offset {})", spec.offset)));
    }
    Ok(())
}

/// Upper bound on `sum_{n > last} alpha_n P(|X| >= beta_n)`. Infinite when
/// no bound is available.
fn sandwich_remainder(dist: &DistributionSpec, alpha: &SequenceSpec, beta: &SequenceSpec, last: usize) -> f64 {
    if let (Some(sup), Some(next)) = (dist.abs_upper_bound(), beta.value(last + 1)) {
        if beta.is_monotone() && next > sup {
            return 0.0;
        }
    }
    let start = last.max(3);
    let mut head = NeumaierSum::new();
    for n in last + 1..=start {
        match (alpha.value(n), beta.value(n)) {
            (Some(a), Some(b)) => head.add(a * dist.tail_prob_closed(b)),
            _ => return f64::INFINITY,
        }
    }
    let (Some((ka, ea)), Some((kb, eb))) = (alpha.upper_envelope(start), beta.lower_envelope(start)) else {
        return f64::INFINITY;
    };
    if !(kb > 0.0) {
        return f64::INFINITY;
    }
    let tail = dist
        .polynomial_tail_bounds()
        .into_iter()
        .filter_map(|(k, q)| power_tail_integral(ka * k * kb.powf(-q), ea - q * eb, start as f64))
        .fold(f64::INFINITY, f64::min);
    head.value() + tail
}

/// `int_x0^inf scale * x^s dx`, which bounds `sum_{n > x0} scale * n^s` for
/// `s < -1`.
fn power_tail_integral(scale: f64, s: f64, x0: f64) -> Option<f64> {
    (s < -1.0).then(|| scale * x0.powf(s + 1.0) / (-(s + 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichOutcome {
    pub report: OracleReport,
    pub constants: SandwichConstants,
    /// `sum_{n <= N} alpha_n P(|X| >= beta_n)`
    pub partial_sum: f64,
    /// Bound on the same sum over `n > N`.
    #[serde(serialize_with = "number_or_infinite")]
    pub remainder_bound: f64,
    pub beta_1: f64,
}

/// Check `c^{-1} S <= E|X| <= beta_1 + (B+1) c S` with
/// `S = sum_n alpha_n P(|X| >= beta_n)`, using the first `n_terms` terms and
/// a rigorous bound on the rest. `c` and `B` are measured on `1..=n_terms`.
pub fn sandwich_check(
    dist: &DistributionSpec,
    alpha: &SequenceSpec,
    beta: &SequenceSpec,
    n_terms: usize,
) -> Result<SandwichOutcome> {
    dist.validate()?;
    require_first_index_one(alpha, "alpha")?;
    require_first_index_one(beta, "beta")?;
    if n_terms == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let a = seqkit::gen_sequence(alpha, n_terms)?;
    let b = seqkit::gen_sequence(beta, n_terms)?;
    let constants = seqkit::fit_sandwich_constants(&a, &b)?;

    let mut s = NeumaierSum::new();
    for (an, bn) in a.iter().zip(&b) {
        s.add(an * dist.tail_prob_closed(*bn));
    }
    let partial = s.value();
    let rem = sandwich_remainder(dist, alpha, beta, n_terms);
    let moment = dist.moment(1.0)?;

    let c = constants.c;
    let k = (constants.growth_bound + 1.0) * c;
    let lower = partial / c;
    let lower_max = (partial + rem) / c;
    let upper_min = b[0] + k * partial;
    let upper_max = b[0] + k * (partial + rem);

    let verdict = match moment {
        Moment::Finite(e) => {
            if lower > e * (1.0 + REL_SLACK) || upper_max < e * (1.0 - REL_SLACK) {
                Verdict::Fails
            } else if lower_max <= e * (1.0 + REL_SLACK) && e <= upper_min * (1.0 + REL_SLACK) {
                Verdict::Holds
            } else {
                Verdict::Inconclusive
            }
        }
        // A provably finite series with an infinite mean contradicts the
        // upper inequality; otherwise nothing can be decided from N terms.
        Moment::Infinite if rem.is_finite() => Verdict::Fails,
        Moment::Infinite => Verdict::Inconclusive,
    };

    Ok(SandwichOutcome {
        report: OracleReport {
            lower_sum: lower,
            exact_moment: moment,
            upper_bound: upper_min,
            verdict,
            n_terms: n_terms as u64,
            mc_ci: None,
        },
        constants,
        partial_sum: partial,
        remainder_bound: rem,
        beta_1: b[0],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesVerdict {
    Converges,
    Diverges,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentVerdict {
    Finite,
    Infinite,
}

impl From<bool> for SeriesVerdict {
    fn from(converges: bool) -> Self {
        if converges {
            SeriesVerdict::Converges
        } else {
            SeriesVerdict::Diverges
        }
    }
}

impl From<bool> for MomentVerdict {
    fn from(finite: bool) -> Self {
        if finite {
            MomentVerdict::Finite
        } else {
            MomentVerdict::Infinite
        }
    }
}

fn agreement(series: SeriesVerdict, moment: MomentVerdict) -> bool {
    (series == SeriesVerdict::Converges) == (moment == MomentVerdict::Finite)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesOutcome {
    pub series: SeriesVerdict,
    pub moment: MomentVerdict,
    pub agree: bool,
    /// The critical exponent is attained exactly.
    pub boundary: bool,
    /// Moment order `(alpha + 1) / beta`.
    pub moment_order: f64,
    /// `(N, sum_{n <= N} n^alpha P(|X| > n^beta))`
    pub partial_sums: Vec<(usize, f64)>,
    pub report: OracleReport,
}

/// Classify `sum n^alpha P(|X| > n^beta)` and `E|X|^{(alpha+1)/beta}`
/// independently and report whether the verdicts agree.
pub fn series_classify(dist: &DistributionSpec, alpha: f64, beta: f64) -> Result<SeriesOutcome> {
    dist.validate()?;
    if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need alpha > 0 and beta > 0, got alpha = {alpha}, beta = {beta}"
        )));
    }
    let q = (alpha + 1.0) / beta;

    // Terms are n^alpha times a tail of index a at n^beta, i.e. of order
    // n^{alpha - beta a}; at the critical margin they are of order 1/n.
    let (series, series_boundary) = match dist.tail_class() {
        TailClass::Polynomial(a) => {
            let margin = beta * a - alpha;
            if exponents_equal(margin, 1.0) {
                (SeriesVerdict::Diverges, true)
            } else {
                ((margin > 1.0).into(), false)
            }
        }
        TailClass::Bounded | TailClass::Light => (SeriesVerdict::Converges, false),
    };

    let (moment_value, moment_boundary) = match dist.tail_exponent() {
        Some(a) if exponents_equal(q, a) => (Moment::Infinite, true),
        _ => (dist.moment(q)?, false),
    };
    let moment: MomentVerdict = moment_value.is_finite().into();

    let last = *PARTIAL_SUM_POINTS.last().expect("nonempty");
    let mut partial_sums = Vec::with_capacity(PARTIAL_SUM_POINTS.len());
    let mut s = NeumaierSum::new();
    let mut next = 0;
    for n in 1..=last {
        let x = n as f64;
        s.add(x.powf(alpha) * dist.tail_prob(x.powf(beta)));
        if n == PARTIAL_SUM_POINTS[next] {
            partial_sums.push((n, s.value()));
            next += 1;
        }
    }
    let total = s.value();
    let rem = sandwich_remainder(dist, &SequenceSpec::power(alpha), &SequenceSpec::power(beta), last);
    let agree = agreement(series, moment);

    Ok(SeriesOutcome {
        series,
        moment,
        agree,
        boundary: series_boundary || moment_boundary,
        moment_order: q,
        partial_sums,
        report: OracleReport {
            lower_sum: total,
            exact_moment: moment_value,
            upper_bound: total + rem,
            verdict: if agree { Verdict::Holds } else { Verdict::Fails },
            n_terms: last as u64,
            mc_ci: None,
        },
    })
}

/// `C(n, m)` in floating point.
pub fn binomial(n: usize, m: usize) -> f64 {
    if m > n {
        return 0.0;
    }
    let m = m.min(n - m);
    (1..=m).fold(1.0, |acc, i| acc * (n - m + i) as f64 / i as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Outcome {
    /// `P(max over m-subsets of prod |X| >= u_n) / (C(n,m) P(prod |X| >= u_n))`
    pub ratio: f64,
    pub ci_half_width: f64,
    pub hits: u64,
    pub reps: u64,
    /// Monte Carlo estimate of the numerator probability.
    pub max_probability: f64,
    /// `C(n, m) P(prod |X| >= u_n)`, exact.
    pub denominator: f64,
    pub threshold: f64,
    pub report: OracleReport,
}

/// Exact part of the max/product ratio check, decided before any sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Plan {
    pub threshold: f64,
    /// `C(n, m) P(prod |X| >= u_n)`
    pub denominator: f64,
}

/// Validate the inputs and refuse estimates whose hit count is capped below
/// [`MIN_HITS`]. Needs no seed.
pub fn lemma1_plan(dist: &DistributionSpec, m: usize, u: &SequenceSpec, n: usize, reps: u64) -> Result<Lemma1Plan> {
    dist.validate()?;
    u.validate()?;
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let threshold = u
        .value(n)
        .ok_or_else(|| Error::InvalidSequence(format!("threshold sequence {u} has no value at n = {n}")))?;
    let p = dist.product_tail_prob(m, threshold)?;
    let denominator = binomial(n, m) * p;
    if denominator >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "C(n,m) P(prod >= u_n) = {denominator} is not below 1; pick a larger threshold"
        )));
    }
    // Sub-additivity caps the hit probability by the denominator.
    let expected_cap = reps as f64 * denominator;
    if expected_cap < MIN_HITS as f64 {
        return Err(Error::Refused(format!(
            "at most {expected_cap:.3} expected hits (need {MIN_HITS}); the event is too rare for {reps} replications"
        )));
    }
    Ok(Lemma1Plan { threshold, denominator })
}

/// Monte Carlo estimate of the max/product probability ratio at one `n`.
///
/// Replications are split into fixed batches, each drawn from its own stream
/// addressed by `(n, batch)`, so the estimate depends only on `master_seed`.
pub fn lemma1_ratio(
    dist: &DistributionSpec,
    m: usize,
    u: &SequenceSpec,
    n: usize,
    reps: u64,
    master_seed: u64,
) -> Result<Lemma1Outcome> {
    let Lemma1Plan { threshold, denominator } = lemma1_plan(dist, m, u, n, reps)?;

    let batches = reps.div_ceil(MC_BATCH);
    let hits: u64 = (0..batches)
        .into_par_iter()
        .map(|bi| -> Result<u64> {
            let mut rng = rng::stream(master_seed, Domain::ProductMax, n as u64, bi);
            let count = MC_BATCH.min(reps - bi * MC_BATCH);
            let mut buf = vec![0.0; n];
            let mut h = 0;
            for _ in 0..count {
                dist.sample_into(&mut buf, &mut rng)?;
                if top_product_in_place(&mut buf, m) >= threshold {
                    h += 1;
                }
            }
            Ok(h)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    if hits < MIN_HITS {
        return Err(Error::Refused(format!("only {hits} hits in {reps} replications (need {MIN_HITS})")));
    }

    let phat = hits as f64 / reps as f64;
    let ratio = phat / denominator;
    let hw = Z95 * (phat * (1.0 - phat) / reps as f64).sqrt() / denominator;
    Ok(Lemma1Outcome {
        ratio,
        ci_half_width: hw,
        hits,
        reps,
        max_probability: phat,
        denominator,
        threshold,
        report: OracleReport {
            lower_sum: ratio - hw,
            exact_moment: Moment::Finite(1.0),
            upper_bound: ratio + hw,
            verdict: if ratio <= 1.0 + 3.0 * hw { Verdict::Holds } else { Verdict::Fails },
            n_terms: n as u64,
            mc_ci: Some(McInterval { estimate: ratio, half_width: hw, reps }),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqrtNlognOutcome {
    pub series: SeriesVerdict,
    pub moment: MomentVerdict,
    pub agree: bool,
    pub boundary: bool,
    /// `(min, max)` of `f(n ln n) / n` over `3..=N`, `f(x) = x / ln(e + sqrt x)`.
    pub growth_ratio_range: (f64, f64),
    pub report: OracleReport,
}

/// Compare `sum n^m P(prod_{h<=m} |X_h| >= sqrt(n ln n))` with
/// `E[Z^{2(m+1)} / ln(e + Z)^{m+1}]`, `Z` a product of `m` copies of `|X|`.
pub fn sqrt_nlogn_condition(dist: &DistributionSpec, m: usize) -> Result<SqrtNlognOutcome> {
    dist.validate()?;
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let mf = m as f64;
    let q = 2.0 * (mf + 1.0);
    let r = mf + 1.0;

    // A product of m factors with tail index a has tail u^{-a} (ln u)^{m-1}
    // up to constants, so the terms are n^{m - a/2} (ln n)^{m-1-a/2}.
    let (series, series_boundary) = match dist.tail_class() {
        TailClass::Polynomial(a) => {
            let e_n = mf - a / 2.0;
            let e_log = mf - 1.0 - a / 2.0;
            if exponents_equal(e_n, -1.0) {
                ((e_log < -1.0).into(), true)
            } else {
                ((e_n < -1.0).into(), false)
            }
        }
        TailClass::Bounded | TailClass::Light => (SeriesVerdict::Converges, false),
    };

    let fin = dist.log_adjusted_finiteness(q, r, m)?;
    let moment_value = dist.log_adjusted_moment(q, r, m)?;
    let moment: MomentVerdict = fin.finite.into();

    let last = *PARTIAL_SUM_POINTS.last().expect("nonempty");
    let u = SequenceSpec::sqrt_nlogn();
    let mut s = NeumaierSum::new();
    let mut growth = Vec::with_capacity(last);
    for n in 1..=last {
        let x = n as f64;
        let un = u.value(n).expect("closed form");
        s.add(x.powi(m as i32) * dist.product_tail_prob(m, un)?);
        if n >= 3 {
            growth.push(seqkit::f_log_adjusted(x * x.ln())?);
        }
    }
    let total = s.value();
    let rem = sqrt_nlogn_remainder(dist, m, last)?;
    let growth_ratio_range = seqkit::check_bounded_away_from(&growth, 3, 1.0)?;
    let agree = agreement(series, moment);

    Ok(SqrtNlognOutcome {
        series,
        moment,
        agree,
        boundary: series_boundary || fin.boundary,
        growth_ratio_range,
        report: OracleReport {
            lower_sum: total,
            exact_moment: moment_value,
            upper_bound: total + rem,
            verdict: if agree { Verdict::Holds } else { Verdict::Fails },
            n_terms: last as u64,
            mc_ci: None,
        },
    })
}

/// Bound on `sum_{n > last} n^m P(prod >= sqrt(n ln n))` through
/// `P(prod >= u) <= (E|X|^{q'})^m u^{-q'}` and `ln n >= 1` for `n >= 3`.
fn sqrt_nlogn_remainder(dist: &DistributionSpec, m: usize, last: usize) -> Result<f64> {
    if let Some(sup) = dist.abs_upper_bound() {
        let next = SequenceSpec::sqrt_nlogn().value(last + 1).expect("closed form");
        if next > sup.powi(m as i32) {
            return Ok(0.0);
        }
    }
    let crit = 2.0 * (m as f64 + 1.0);
    let q2 = match dist.tail_class() {
        TailClass::Polynomial(a) if a > crit && !exponents_equal(a, crit) => 0.5 * (a + crit),
        TailClass::Polynomial(_) => return Ok(f64::INFINITY),
        _ => crit + 16.0,
    };
    let k = dist.moment(q2)?.as_f64().powi(m as i32);
    let start = last.max(3) as f64;
    Ok(power_tail_integral(k, m as f64 - q2 / 2.0, start).unwrap_or(f64::INFINITY))
}
