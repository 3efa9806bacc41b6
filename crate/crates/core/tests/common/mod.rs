//! Brute-force reference implementations shared by the integration tests.
//! Everything here is written for clarity, not speed, and shares no code
//! with the library.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Rows of an `n x p` matrix.
pub type Rows = Vec<Vec<f64>>;

pub fn gaussian_rows(n: usize, p: usize, seed: u64) -> Rows {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect()).collect()
}

pub fn col_major(rows: &Rows) -> Vec<f64> {
    let p = rows[0].len();
    (0..p).flat_map(|j| rows.iter().map(move |r| r[j])).collect()
}

pub fn cross(x: &Rows, y: &Rows, i: usize, j: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..x.len() {
        s += x[k][i] * y[k][j];
    }
    s
}

/// Pearson correlation by the textbook two-pass formula.
pub fn corr(x: &Rows, i: usize, j: usize) -> f64 {
    let n = x.len() as f64;
    let mi = x.iter().map(|r| r[i]).sum::<f64>() / n;
    let mj = x.iter().map(|r| r[j]).sum::<f64>() / n;
    let (mut sij, mut sii, mut sjj) = (0.0, 0.0, 0.0);
    for r in x {
        let (a, b) = (r[i] - mi, r[j] - mj);
        sij += a * b;
        sii += a * a;
        sjj += b * b;
    }
    sij / (sii * sjj).sqrt()
}

/// `(max |v|, i, j)` over the given pairs, first pair wins ties.
fn max_over(pairs: impl Iterator<Item = (usize, usize)>, f: impl Fn(usize, usize) -> f64) -> (f64, usize, usize) {
    let mut best = (-1.0, 0, 0);
    for (i, j) in pairs {
        let v = f(i, j).abs();
        if v > best.0 {
            best = (v, i, j);
        }
    }
    best
}

fn upper_pairs(p: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..p).flat_map(move |i| (i + 1..p).map(move |j| (i, j)))
}

pub fn l_stat(x: &Rows) -> (f64, usize, usize) {
    max_over(upper_pairs(x[0].len()), |i, j| corr(x, i, j))
}

pub fn w_stat(x: &Rows) -> (f64, usize, usize) {
    max_over(upper_pairs(x[0].len()), |i, j| cross(x, x, i, j))
}

pub fn t_stat(u: &Rows, v: &Rows) -> (f64, usize, usize) {
    let p = u[0].len();
    let pairs = (0..p).flat_map(move |i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)));
    max_over(pairs, |i, j| cross(u, v, i, j))
}

/// Largest product of `|x|` over all `m`-subsets, by enumeration.
pub fn max_product(x: &[f64], m: usize) -> f64 {
    fn rec(x: &[f64], start: usize, left: usize, acc: f64, best: &mut f64) {
        if left == 0 {
            *best = best.max(acc);
            return;
        }
        for k in start..=x.len() - left {
            rec(x, k + 1, left - 1, acc * x[k].abs(), best);
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(x, 0, m, 1.0, &mut best);
    best
}

/// Column-major `W_n` by a direct loop over column pairs; the timing
/// baseline for the blocked kernel.
pub fn naive_w_col_major(n: usize, p: usize, values: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..p {
        let ci = &values[i * n..(i + 1) * n];
        for j in i + 1..p {
            let cj = &values[j * n..(j + 1) * n];
            let s: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
            best = best.max(s.abs());
        }
    }
    best
}

/// Composite Simpson rule with `2k` panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, k: usize) -> f64 {
    let m = 2 * k;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Exact `P(X_(n) X_(n-1) >= u)` for `n` iid Pareto(a) variables on
/// `[1, inf)`, `u >= 1`, from the joint law of the two largest order
/// statistics:
///
/// `P = n(n-1) a u^-a int_0^{ln sqrt u} (1 - e^{-a s})^{n-2} ds
///    + 1 - n w^{n-1} + (n-1) w^n`, with `w = 1 - u^{-a/2}`.
pub fn pareto_top_two_product_tail(a: f64, n: usize, u: f64) -> f64 {
    let nf = n as f64;
    let half = 0.5 * u.ln();
    let below = if half > 0.0 {
        nf * (nf - 1.0) * a * u.powf(-a) * simpson(|s| (1.0 - (-a * s).exp()).powi(n as i32 - 2), 0.0, half, 20_000)
    } else {
        0.0
    };
    let w = 1.0 - u.powf(-a / 2.0);
    let above = 1.0 - nf * w.powi(n as i32 - 1) + (nf - 1.0) * w.powi(n as i32);
    below + above
}

/// `P(X_1 X_2 >= u)` for two iid Pareto(a): `u^-a (1 + a ln u)`.
pub fn pareto_pair_product_tail(a: f64, u: f64) -> f64 {
    u.powf(-a) * (1.0 + a * u.ln())
}
