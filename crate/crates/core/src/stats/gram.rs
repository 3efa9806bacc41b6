//! Blocked cross-product kernel `G[i][j] = sum_k A[k][i] B[k][j]` over
//! column-major inputs.
//!
//! Columns are grouped into panels of [`PANEL`], packed so an 8x4
//! register tile reads contiguous memory. Rows are processed in chunks of
//! [`ROW_CHUNK`]: each chunk is summed plainly in row order and chunk
//! partials are folded into Neumaier sums. Every entry therefore has a fixed
//! summation order, independent of how rayon schedules the panel pairs.

use rayon::prelude::*;

use crate::summation::NeumaierSum;

pub const PANEL: usize = 64;
pub const ROW_CHUNK: usize = 256;
const MR: usize = 8;
const NR: usize = 4;

/// Column-major matrix view.
#[derive(Clone, Copy)]
pub(crate) struct ColView<'a> {
    pub n: usize,
    pub p: usize,
    pub values: &'a [f64],
}

/// Pack columns `c0..c0 + w` into strips of `pad` columns (the last one
/// zero-padded); each strip stores its `n` rows contiguously, `pad` values
/// per row.
fn pack_panel(m: ColView<'_>, c0: usize, w: usize, pad: usize, buf: &mut Vec<f64>) {
    let wp = w.div_ceil(pad) * pad;
    buf.clear();
    buf.resize(m.n * wp, 0.0);
    for c in 0..w {
        let col = &m.values[(c0 + c) * m.n..(c0 + c + 1) * m.n];
        let strip = &mut buf[(c / pad) * m.n * pad..(c / pad + 1) * m.n * pad];
        for (k, &v) in col.iter().enumerate() {
            strip[k * pad + c % pad] = v;
        }
    }
}

/// Which `(i, j)` entries a maximum ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Pairs {
    /// `i < j`
    Upper,
    /// `i != j`
    OffDiagonal,
}

/// One block of cross products, row-major with rows of `wj`, whose first
/// entry is `(i0, j0)`.
struct Block<'a> {
    i0: usize,
    j0: usize,
    wj: usize,
    values: &'a [f64],
}

/// Visit every panel pair (only `j >= i` panels when `upper_only`), one
/// rayon task per row panel. Results come back in row-panel order.
fn for_each_block<R, I, V>(a: ColView<'_>, b: ColView<'_>, upper_only: bool, init: I, visit: V) -> Vec<R>
where
    R: Send,
    I: Fn() -> R + Sync,
    V: Fn(&mut R, Block<'_>) + Sync,
{
    assert_eq!(a.n, b.n, "row counts differ");
    let n = a.n;
    let panels_a = a.p.div_ceil(PANEL);
    let panels_b = b.p.div_ceil(PANEL);
    let signs = SignBits::new(a).zip(SignBits::new(b));
    // B panels are packed once up front; each task packs its own A panel.
    let packed_b: Vec<Vec<f64>> = if signs.is_none() {
        (0..panels_b)
            .into_par_iter()
            .map(|bj| {
                let mut buf = Vec::new();
                pack_panel(b, bj * PANEL, (b.p - bj * PANEL).min(PANEL), NR, &mut buf);
                buf
            })
            .collect()
    } else {
        Vec::new()
    };
    (0..panels_a)
        .into_par_iter()
        .map(|bi| {
            let i0 = bi * PANEL;
            let wi = (a.p - i0).min(PANEL);
            let mut acc = init();
            let mut ap = Vec::new();
            if signs.is_none() {
                pack_panel(a, i0, wi, MR, &mut ap);
            }
            // `packed_b` is empty on the sign path, so loop over indices.
            #[allow(clippy::needless_range_loop)]
            for bj in (if upper_only { bi } else { 0 })..panels_b {
                let j0 = bj * PANEL;
                let wj = (b.p - j0).min(PANEL);
                let values = match &signs {
                    Some((sa, sb)) => sign_block(sa, i0, wi, sb, j0, wj),
                    None => block(n, &ap, wi, &packed_b[bj], wj),
                };
                visit(&mut acc, Block { i0, j0, wj, values: &values });
            }
            acc
        })
        .collect()
}

/// Row-major `a.p x b.p` matrix of column cross products. With
/// `upper_only`, `a` and `b` must be the same matrix and only entries with
/// `j >= i` are computed (the rest are left at zero).
pub(crate) fn cross_products(a: ColView<'_>, b: ColView<'_>, upper_only: bool) -> Vec<f64> {
    let pb = b.p;
    let strips = for_each_block(a, b, upper_only, Vec::new, |strip: &mut Vec<f64>, blk| {
        let wi = blk.values.len() / blk.wj;
        if strip.is_empty() {
            strip.resize(wi * pb, 0.0);
        }
        for (li, row) in blk.values.chunks_exact(blk.wj).enumerate() {
            for (lj, &v) in row.iter().enumerate() {
                let (i, j) = (blk.i0 + li, blk.j0 + lj);
                if !upper_only || j >= i {
                    strip[li * pb + j] = v;
                }
            }
        }
    });
    strips.concat()
}

type Entry = (f64, usize, usize);

fn better(cand: Entry, best: Option<Entry>) -> bool {
    match best {
        None => true,
        Some(b) => cand.0 > b.0 || (cand.0 == b.0 && (cand.1, cand.2) < (b.1, b.2)),
    }
}

/// Largest `|G[i][j]|` over `pairs` as `(value, i, j)`; among equal values
/// the lexicographically smallest pair wins. `None` if no pair qualifies.
/// Never stores more than one block of `G`.
pub(crate) fn max_abs_cross(a: ColView<'_>, b: ColView<'_>, pairs: Pairs) -> Option<Entry> {
    let per_panel = for_each_block(a, b, pairs == Pairs::Upper, || None, |best: &mut Option<Entry>, blk| {
        for (li, row) in blk.values.chunks_exact(blk.wj).enumerate() {
            let i = blk.i0 + li;
            for (lj, &v) in row.iter().enumerate() {
                let j = blk.j0 + lj;
                let ok = match pairs {
                    Pairs::Upper => j > i,
                    Pairs::OffDiagonal => j != i,
                };
                let cand = (v.abs(), i, j);
                if ok && better(cand, *best) {
                    *best = Some(cand);
                }
            }
        }
    });
    per_panel
        .into_iter()
        .flatten()
        .fold(None, |best, cand| if better(cand, best) { Some(cand) } else { best })
}

/// Columns whose entries are all `+1` or `-1`, stored as bit masks of the
/// negative entries.
struct SignBits {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl SignBits {
    fn new(m: ColView<'_>) -> Option<Self> {
        if !m.values.iter().all(|&v| v == 1.0 || v == -1.0) {
            return None;
        }
        let words = m.n.div_ceil(64);
        let mut bits = vec![0u64; words * m.p];
        for (c, col) in m.values.chunks_exact(m.n).enumerate() {
            for (k, &v) in col.iter().enumerate() {
                if v < 0.0 {
                    bits[c * words + k / 64] |= 1 << (k % 64);
                }
            }
        }
        Some(Self { n: m.n, words, bits })
    }

    fn col(&self, c: usize) -> &[u64] {
        &self.bits[c * self.words..(c + 1) * self.words]
    }
}

/// Cross products of sign columns, `n - 2 popcount(x xor y)`. The values are
/// exact integers, so they equal what [`block`] returns for the same data.
fn sign_block(a: &SignBits, i0: usize, wi: usize, b: &SignBits, j0: usize, wj: usize) -> Vec<f64> {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx512vpopcntdq") && std::is_x86_feature_detected!("avx512f") {
            // SAFETY: the features were detected at runtime.
            return unsafe { sign_block_avx512(a, i0, wi, b, j0, wj) };
        }
        if std::is_x86_feature_detected!("popcnt") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { sign_block_popcnt(a, i0, wi, b, j0, wj) };
        }
    }
    sign_block_generic(a, i0, wi, b, j0, wj)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "popcnt")]
unsafe fn sign_block_popcnt(a: &SignBits, i0: usize, wi: usize, b: &SignBits, j0: usize, wj: usize) -> Vec<f64> {
    sign_block_generic(a, i0, wi, b, j0, wj)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f,avx512vpopcntdq")]
unsafe fn sign_block_avx512(a: &SignBits, i0: usize, wi: usize, b: &SignBits, j0: usize, wj: usize) -> Vec<f64> {
    sign_block_generic(a, i0, wi, b, j0, wj)
}

#[inline(always)]
fn sign_block_generic(a: &SignBits, i0: usize, wi: usize, b: &SignBits, j0: usize, wj: usize) -> Vec<f64> {
    let n = a.n as f64;
    let mut out = vec![0.0; wi * wj];
    for (li, row) in out.chunks_exact_mut(wj).enumerate() {
        let x = a.col(i0 + li);
        let mut lj = 0;
        while lj + 8 <= wj {
            let ys: [&[u64]; 8] = std::array::from_fn(|c| &b.col(j0 + lj + c)[..x.len()]);
            let mut d = [0u64; 8];
            for (w, &xw) in x.iter().enumerate() {
                for c in 0..8 {
                    d[c] += (xw ^ ys[c][w]).count_ones() as u64;
                }
            }
            for c in 0..8 {
                row[lj + c] = n - 2.0 * d[c] as f64;
            }
            lj += 8;
        }
        for (lj, slot) in row.iter_mut().enumerate().skip(lj) {
            let diff: u64 = x.iter().zip(b.col(j0 + lj)).map(|(p, q)| (p ^ q).count_ones() as u64).sum();
            *slot = n - 2.0 * diff as f64;
        }
    }
    out
}

/// Cross products of one packed panel pair, `wi x wj` row-major.
fn block(n: usize, ap: &[f64], wi: usize, bp: &[f64], wj: usize) -> Vec<f64> {
    let mut acc = vec![NeumaierSum::new(); wi * wj];
    let mut k0 = 0;
    while k0 < n {
        let k1 = (k0 + ROW_CHUNK).min(n);
        for ii in (0..wi).step_by(MR) {
            let a_strip = &ap[ii * n + k0 * MR..ii * n + k1 * MR];
            for jj in (0..wj).step_by(NR) {
                let b_strip = &bp[jj * n + k0 * NR..jj * n + k1 * NR];
                let t = tile(a_strip, b_strip);
                for r in 0..MR.min(wi - ii) {
                    for c in 0..NR.min(wj - jj) {
                        acc[(ii + r) * wj + jj + c].add(t[c][r]);
                    }
                }
            }
        }
        k0 = k1;
    }
    acc.iter().map(NeumaierSum::value).collect()
}

/// `t[c][r] = sum_k a[k][r] * b[k][c]` over two packed strips, summed in
/// row order.
fn tile(a: &[f64], b: &[f64]) -> [[f64; MR]; NR] {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { tile_avx2(a, b) };
        }
    }
    tile_generic(a, b)
}

// Same operations in the same order; wider registers only. No FMA, so the
// result is bit-identical to the generic path.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn tile_avx2(a: &[f64], b: &[f64]) -> [[f64; MR]; NR] {
    tile_generic(a, b)
}

#[inline(always)]
fn tile_generic(a: &[f64], b: &[f64]) -> [[f64; MR]; NR] {
    let mut acc = [[0.0f64; MR]; NR];
    for (av, bv) in a.chunks_exact(MR).zip(b.chunks_exact(NR)) {
        for c in 0..NR {
            for r in 0..MR {
                acc[c][r] += av[r] * bv[c];
            }
        }
    }
    acc
}
