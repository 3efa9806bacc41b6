//! Deterministic index sequences (weights, thresholds, normalizers) and the
//! finite-range checks run on them before they are fed to the oracles.
//!
//! All logarithms are natural.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SequenceKind {
    /// `n^exponent`
    Power { exponent: f64 },
    /// `(n ln n)^exponent`; exponent 1/2 gives `sqrt(n ln n)`.
    PowerWithLog { exponent: f64 },
    /// The same value at every index.
    Constant { value: f64 },
    /// Values listed from `offset` onwards.
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub offset: usize,
}

impl SequenceSpec {
    pub fn power(exponent: f64) -> Self {
        Self { kind: SequenceKind::Power { exponent }, offset: 1 }
    }

    pub fn power_with_log(exponent: f64) -> Self {
        Self { kind: SequenceKind::PowerWithLog { exponent }, offset: 1 }
    }

    pub fn sqrt_nlogn() -> Self {
        Self::power_with_log(0.5)
    }

    pub fn constant(value: f64) -> Self {
        Self { kind: SequenceKind::Constant { value }, offset: 1 }
    }

    pub fn explicit(values: Vec<f64>) -> Self {
        Self { kind: SequenceKind::Explicit { values }, offset: 1 }
    }

    pub fn with_offset(mut self, offset: usize) -> Self {
        self.offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.offset < 1 {
            return Err(Error::InvalidSequence("offset must be at least 1".into()));
        }
        match &self.kind {
            SequenceKind::Power { exponent } | SequenceKind::PowerWithLog { exponent } => {
                if !(exponent.is_finite() && *exponent >= 0.0) {
                    return Err(Error::InvalidSequence(format!(
                        "exponent must be finite and nonnegative, got {exponent}"
                    )));
                }
            }
            SequenceKind::Constant { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(Error::InvalidSequence(format!(
                        "constant must be finite and nonnegative, got {value}"
                    )));
                }
            }
            SequenceKind::Explicit { values } => {
                if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
                    return Err(Error::InvalidSequence(format!(
                        "explicit value {v} at n = {} is negative or non-finite",
                        self.offset + i
                    )));
                }
            }
        }
        Ok(())
    }

    /// Value at index `n`. Explicit sequences return `None` past their end
    /// or before the offset.
    pub fn value(&self, n: usize) -> Option<f64> {
        let x = n as f64;
        match &self.kind {
            SequenceKind::Power { exponent } => Some(power(x, *exponent)),
            SequenceKind::PowerWithLog { exponent } => Some(power(x * x.ln(), *exponent)),
            SequenceKind::Constant { value } => Some(*value),
            SequenceKind::Explicit { values } => {
                n.checked_sub(self.offset).and_then(|i| values.get(i).copied())
            }
        }
    }

    /// `(scale, exponent)` with `value(x) <= scale * x^exponent` for all real
    /// `x >= from` (`from >= 3`). `None` when no such envelope is known.
    pub fn upper_envelope(&self, from: usize) -> Option<(f64, f64)> {
        let from = from.max(3) as f64;
        match &self.kind {
            SequenceKind::Power { exponent } => Some((1.0, *exponent)),
            SequenceKind::Constant { value } => Some((*value, 0.0)),
            // ln x <= ln N (x/N)^{1/ln N} for x >= N, from 1 + y <= e^y.
            SequenceKind::PowerWithLog { exponent } => {
                let ln_n = from.ln();
                let e = *exponent;
                Some((ln_n.powf(e) * from.powf(-e / ln_n), e + e / ln_n))
            }
            SequenceKind::Explicit { .. } => None,
        }
    }

    /// `(scale, exponent)` with `value(x) >= scale * x^exponent` for `x >= from`.
    pub fn lower_envelope(&self, from: usize) -> Option<(f64, f64)> {
        let from = from.max(3) as f64;
        match &self.kind {
            SequenceKind::Power { exponent } => Some((1.0, *exponent)),
            SequenceKind::Constant { value } => Some((*value, 0.0)),
            SequenceKind::PowerWithLog { exponent } => Some((from.ln().powf(*exponent), *exponent)),
            SequenceKind::Explicit { .. } => None,
        }
    }

    /// Whether the generated values are guaranteed nondecreasing.
    pub fn is_monotone(&self) -> bool {
        !matches!(self.kind, SequenceKind::Explicit { .. })
    }
}

fn power(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.powf(e)
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SequenceKind::Power { exponent } => write!(f, "power({exponent})")?,
            SequenceKind::PowerWithLog { exponent } => write!(f, "power-log({exponent})")?,
            SequenceKind::Constant { value } => write!(f, "const({value})")?,
            SequenceKind::Explicit { values } => {
                let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "explicit({})", parts.join(","))?;
            }
        }
        if self.offset != 1 {
            write!(f, "@{}", self.offset)?;
        }
        Ok(())
    }
}

/// Text forms: `linear`, `const1`, `const(2.5)`, `power(1.5)`, `power-log(0.5)`,
/// `sqrt-nlogn`, `explicit(0,1,4,9)`, optionally suffixed with `@offset`.
impl FromStr for SequenceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, offset) = match s.rsplit_once('@') {
            Some((b, o)) => {
                let o = o
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidSequence(format!("bad offset in `{s}`")))?;
                (b.trim(), o)
            }
            None => (s, 1),
        };
        let bad = || Error::InvalidSequence(format!("cannot parse sequence `{s}`"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());

        let kind = if body == "linear" {
            SequenceKind::Power { exponent: 1.0 }
        } else if body == "sqrt-nlogn" {
            SequenceKind::PowerWithLog { exponent: 0.5 }
        } else if let Some(rest) = body.strip_prefix("const") {
            let inner = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(rest);
            SequenceKind::Constant { value: num(inner)? }
        } else if let Some((name, args)) = body.split_once('(') {
            let args = args.strip_suffix(')').ok_or_else(bad)?;
            match name.trim() {
                "power" => SequenceKind::Power { exponent: num(args)? },
                "power-log" | "power-with-log" => SequenceKind::PowerWithLog { exponent: num(args)? },
                "explicit" => {
                    let values = args.split(',').map(num).collect::<Result<Vec<_>>>()?;
                    SequenceKind::Explicit { values }
                }
                _ => return Err(bad()),
            }
        } else {
            return Err(bad());
        };
        let spec = SequenceSpec { kind, offset };
        spec.validate()?;
        Ok(spec)
    }
}

/// Values for `n = offset..=n_max`.
pub fn gen_sequence(spec: &SequenceSpec, n_max: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    if n_max < spec.offset {
        return Err(Error::InvalidSequence(format!(
            "n_max = {n_max} is below the first index {}",
            spec.offset
        )));
    }
    if let SequenceKind::Explicit { values } = &spec.kind {
        let need = n_max - spec.offset + 1;
        if values.len() < need {
            return Err(Error::InvalidSequence(format!(
                "explicit sequence has {} values, {need} needed up to n = {n_max}",
                values.len()
            )));
        }
        return Ok(values[..need].to_vec());
    }
    Ok((spec.offset..=n_max).map(|n| spec.value(n).expect("closed-form kind")).collect())
}

/// Constants certifying `c^{-1} a_n <= b_n - b_{n-1} <= c a_n` and
/// `(b_{n+1} - b_n) / b_n <= growth_bound` over `n_range` only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichConstants {
    pub c: f64,
    #[serde(rename = "B")]
    pub growth_bound: f64,
    pub n_range: (usize, usize),
    /// Always true: the constants are measured, not proved for every n.
    pub finite_range_certificate: bool,
}

impl SandwichConstants {
    /// Re-check both inequality families element-wise. Returns the first
    /// failing index.
    pub fn verify(&self, alpha: &[f64], beta: &[f64]) -> std::result::Result<(), usize> {
        let slack = 1e-12;
        let mut prev = 0.0;
        for (i, (&a, &b)) in alpha.iter().zip(beta).enumerate() {
            let inc = b - prev;
            if inc < a / self.c * (1.0 - slack) || inc > self.c * a * (1.0 + slack) {
                return Err(i + 1);
            }
            prev = b;
        }
        for (i, w) in beta.windows(2).enumerate() {
            if w[0] > 0.0 && (w[1] - w[0]) / w[0] > self.growth_bound * (1.0 + slack) {
                return Err(i + 1);
            }
        }
        Ok(())
    }
}

/// Minimal `c >= 1` and measured growth ratio `B` for `alpha = (a_1..a_N)` and
/// `beta = (b_1..b_N)`; `b_0 = 0` is prepended internally.
pub fn fit_sandwich_constants(alpha: &[f64], beta: &[f64]) -> Result<SandwichConstants> {
    if alpha.len() != beta.len() {
        return Err(Error::ShapeMismatch(format!(
            "alpha has {} terms, beta has {}",
            alpha.len(),
            beta.len()
        )));
    }
    if alpha.is_empty() {
        return Err(Error::InvalidSequence("empty sequences".into()));
    }
    let mut c: f64 = 1.0;
    let mut prev = 0.0;
    for (i, (&a, &b)) in alpha.iter().zip(beta).enumerate() {
        let n = i + 1;
        if a < 0.0 || b < 0.0 {
            return Err(Error::SandwichHypothesis { n, reason: "negative term".into() });
        }
        let inc = b - prev;
        match (a > 0.0, inc > 0.0) {
            (true, true) => c = c.max(inc / a).max(a / inc),
            (true, false) => {
                return Err(Error::SandwichHypothesis {
                    n,
                    reason: format!("increment {inc} is not positive while alpha_n = {a}"),
                })
            }
            (false, true) => {
                return Err(Error::SandwichHypothesis {
                    n,
                    reason: format!("alpha_n = 0 with positive increment {inc}"),
                })
            }
            (false, false) if inc < 0.0 => {
                return Err(Error::SandwichHypothesis { n, reason: "beta decreases".into() })
            }
            (false, false) => {}
        }
        prev = b;
    }
    let growth_bound = beta
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| (w[1] - w[0]) / w[0])
        .fold(0.0, f64::max);
    Ok(SandwichConstants {
        c,
        growth_bound,
        n_range: (1, alpha.len()),
        finite_range_certificate: true,
    })
}

/// `x / ln(e + sqrt(x))`
pub fn f_log_adjusted(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!("f_log_adjusted needs x >= 0, got {x}")));
    }
    Ok(x / (std::f64::consts::E + x.sqrt()).ln())
}

/// `(min, max)` of `values[n-1] / n^exponent` for `n = 1..=len`.
pub fn check_bounded_away(values: &[f64], exponent: f64) -> Result<(f64, f64)> {
    check_bounded_away_from(values, 1, exponent)
}

/// Same as [`check_bounded_away`] with `values[0]` taken at index `first`.
pub fn check_bounded_away_from(values: &[f64], first: usize, exponent: f64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("check_bounded_away on an empty list".into()));
    }
    if !(exponent > 0.0) {
        return Err(Error::InvalidParameter(format!("exponent must be positive, got {exponent}")));
    }
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, v)| v / ((first + i) as f64).powf(exponent))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r))))
}
