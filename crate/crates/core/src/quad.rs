//! Adaptive integration on top of the double-exponential rule from the
//! `quadrature` crate: interval bisection for a relative tolerance, and a
//! geometric sweep with an explicit remainder bound for half-infinite ranges.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 40;
const MAX_PIECES: usize = 400;

/// Integral of `f` over `[a, b]` to relative tolerance `rel_tol`, with
/// `abs_floor` as the absolute error below which a piece is accepted anyway.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64, abs_floor: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let whole = quadrature::integrate(f, a, b, abs_floor.max(f64::MIN_POSITIVE));
    let target = (rel_tol * whole.integral.abs()).max(abs_floor);
    bisect(f, a, b, whole, target, 0)
}

fn bisect<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    est: quadrature::Output,
    target: f64,
    depth: u32,
) -> Result<f64> {
    if est.error_estimate <= target {
        return Ok(est.integral);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature(format!(
            "no convergence on [{a}, {b}] (error estimate {:e}, target {target:e})",
            est.error_estimate
        )));
    }
    let mid = 0.5 * (a + b);
    let left = quadrature::integrate(f, a, mid, 0.5 * target);
    let right = quadrature::integrate(f, mid, b, 0.5 * target);
    Ok(bisect(f, a, mid, left, 0.5 * target, depth + 1)? + bisect(f, mid, b, right, 0.5 * target, depth + 1)?)
}

/// Integral of `f` over `[start, inf)`. Pieces double in width starting from
/// `first_width`; the sweep stops once `tail_bound(x)`, an upper bound on the
/// integral over `[x, inf)`, is below `rel_tol` times the running total.
/// Returns `(integral, remainder_bound)`.
pub fn integrate_to_infinity<F, T>(f: &F, start: f64, first_width: f64, tail_bound: T, rel_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
{
    let mut lo = start;
    let mut width = first_width;
    let mut total: f64 = 0.0;
    for _ in 0..MAX_PIECES {
        let hi = lo + width;
        total += integrate(f, lo, hi, rel_tol * 0.1, total.abs() * rel_tol * 1e-3)?;
        let rem = tail_bound(hi);
        if rem.is_finite() && rem <= rel_tol * total.abs() {
            return Ok((total + 0.5 * rem, 0.5 * rem));
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::Quadrature(format!("remainder bound did not fall below tolerance past x = {lo:e}")))
}
