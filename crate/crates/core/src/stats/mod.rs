//! Sample correlation matrix and the max-entry statistics `L_n`, `W_n`, `T_n`.
//!
//! Matrices are column-major (`n` samples by `p` variables). Index pairs in
//! results are 0-based; coordinates inside [`Error`] values are 1-based.

mod csv_io;
pub(crate) mod gram;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::summation::NeumaierSum;
use gram::{ColView, Pairs};

pub use csv_io::{read_csv, read_csv_path, write_corr_csv, write_corr_csv_with_columns, HeaderMode};

#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// `values` in column-major order; every entry must be finite.
    pub fn from_col_major(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::ShapeMismatch(format!("empty matrix ({n} x {p})")));
        }
        if values.len() != n * p {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {n} x {p} matrix",
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: idx % n + 1, col: idx / n + 1, value: values[idx] });
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(k) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::ShapeMismatch(format!(
                "row {} has {} values, expected {p}",
                k + 1,
                rows[k].len()
            )));
        }
        let mut values = vec![0.0; n * p];
        for (k, row) in rows.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                values[i * n + k] = *v;
            }
        }
        Self::from_col_major(n, p, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[col * self.n + row]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n)
    }

    pub fn scaled(&self, gamma: f64) -> Result<Self> {
        Self::from_col_major(self.n, self.p, self.values.iter().map(|v| v * gamma).collect())
    }

    fn view(&self) -> ColView<'_> {
        ColView { n: self.n, p: self.p, values: &self.values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroVariancePolicy {
    #[default]
    Error,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StandardizeReport {
    /// Original 0-based indices of the retained columns.
    pub kept: Vec<usize>,
    /// Original 0-based indices of constant columns that were dropped.
    pub dropped: Vec<usize>,
}

/// Centre each column and scale it to unit sum of squares.
pub fn standardize_columns(m: &DataMatrix, policy: ZeroVariancePolicy) -> Result<(DataMatrix, StandardizeReport)> {
    if m.n < 2 {
        return Err(Error::ShapeMismatch(format!("need at least 2 rows, got {}", m.n)));
    }
    let constant: Vec<usize> = m
        .columns()
        .enumerate()
        .filter(|(_, c)| c.iter().all(|v| *v == c[0]))
        .map(|(i, _)| i)
        .collect();
    if policy == ZeroVariancePolicy::Error && !constant.is_empty() {
        return Err(Error::ZeroVariance { columns: constant.iter().map(|i| i + 1).collect() });
    }
    let kept: Vec<usize> = (0..m.p).filter(|i| !constant.contains(i)).collect();
    if kept.is_empty() {
        return Err(Error::ZeroVariance { columns: constant.iter().map(|i| i + 1).collect() });
    }
    let n = m.n;
    let mut values = Vec::with_capacity(n * kept.len());
    for &i in &kept {
        let col = m.column(i);
        let mut s = NeumaierSum::new();
        s.extend(col.iter().copied());
        let mean = s.value() / n as f64;
        let mut ss = NeumaierSum::new();
        ss.extend(col.iter().map(|v| (v - mean) * (v - mean)));
        let norm = ss.value().sqrt();
        values.extend(col.iter().map(|v| (v - mean) / norm));
    }
    let out = DataMatrix { n, p: kept.len(), values };
    Ok((out, StandardizeReport { kept, dropped: constant }))
}

/// Strict upper triangle of the sample correlation matrix, packed row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    p: usize,
    upper: Vec<f64>,
}

impl CorrMatrix {
    pub fn p(&self) -> usize {
        self.p
    }

    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.p);
        i * (2 * self.p - i - 1) / 2 + (j - i - 1)
    }

    /// `rho_{i,j}`; symmetric, with unit diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => self.upper[self.index(i, j)],
            std::cmp::Ordering::Greater => self.upper[self.index(j, i)],
        }
    }

    /// `(i, j, rho_{i,j})` for `i < j` in lexicographic order.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.p).flat_map(move |i| (i + 1..self.p).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn max_abs(&self) -> Option<MaxEntry> {
        argmax_abs(self.iter_upper())
    }
}

/// Correlation matrix of the columns of `m`. Constant columns are an error.
pub fn correlation_matrix(m: &DataMatrix) -> Result<CorrMatrix> {
    let (z, _) = standardize_columns(m, ZeroVariancePolicy::Error)?;
    Ok(correlation_of_standardized(&z))
}

fn correlation_of_standardized(z: &DataMatrix) -> CorrMatrix {
    let p = z.p;
    let g = gram::cross_products(z.view(), z.view(), true);
    // Dividing by the computed diagonal makes identical columns exactly 1.
    let diag: Vec<f64> = (0..p).map(|i| g[i * p + i]).collect();
    let mut upper = Vec::with_capacity(p * p.saturating_sub(1) / 2);
    for i in 0..p {
        upper.extend((i + 1..p).map(|j| (g[i * p + j] / (diag[i] * diag[j]).sqrt()).clamp(-1.0, 1.0)));
    }
    CorrMatrix { p, upper }
}

/// A maximal absolute entry and its (0-based) position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxEntry {
    pub value: f64,
    pub i: usize,
    pub j: usize,
}

/// Largest `|v|`; ties keep the first pair in iteration order.
fn argmax_abs(entries: impl Iterator<Item = (usize, usize, f64)>) -> Option<MaxEntry> {
    let mut best: Option<MaxEntry> = None;
    for (i, j, v) in entries {
        let a = v.abs();
        if best.is_none_or(|b| a > b.value) {
            best = Some(MaxEntry { value: a, i, j });
        }
    }
    best
}

fn need_pairs(p: usize) -> Result<()> {
    if p < 2 {
        return Err(Error::ShapeMismatch(format!("need at least 2 columns, got {p}")));
    }
    Ok(())
}

/// `L_n = max_{i<j} |rho_{i,j}|`.
pub fn l_statistic(m: &DataMatrix) -> Result<MaxEntry> {
    need_pairs(m.p)?;
    Ok(correlation_matrix(m)?.max_abs().expect("p >= 2"))
}

/// `W_n = max_{i<j} |sum_k X_{k,i} X_{k,j}|`.
pub fn w_statistic(m: &DataMatrix) -> Result<MaxEntry> {
    need_pairs(m.p)?;
    let (value, i, j) = gram::max_abs_cross(m.view(), m.view(), Pairs::Upper).expect("p >= 2");
    Ok(MaxEntry { value, i, j })
}

/// `T_n = max_{i != j} |sum_k U_{k,i} V_{k,j}|` over ordered pairs.
pub fn t_statistic(u: &DataMatrix, v: &DataMatrix) -> Result<MaxEntry> {
    if u.n != v.n || u.p != v.p {
        return Err(Error::ShapeMismatch(format!(
            "U is {} x {}, V is {} x {}",
            u.n, u.p, v.n, v.p
        )));
    }
    need_pairs(u.p)?;
    let (value, i, j) = gram::max_abs_cross(u.view(), v.view(), Pairs::OffDiagonal).expect("p >= 2");
    Ok(MaxEntry { value, i, j })
}

/// `max over m-subsets of prod |x_i|`, i.e. the product of the `m` largest
/// magnitudes.
pub fn max_product_statistic(x: &[f64], m: usize) -> Result<f64> {
    if m == 0 || m > x.len() {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= m <= {} (got m = {m})",
            x.len()
        )));
    }
    Ok(top_product_in_place(&mut x.to_vec(), m))
}

/// [`max_product_statistic`] on a scratch buffer, which is reordered and
/// overwritten with magnitudes. `1 <= m <= x.len()` is the caller's job.
pub(crate) fn top_product_in_place(x: &mut [f64], m: usize) -> f64 {
    for v in x.iter_mut() {
        *v = v.abs();
    }
    if m < x.len() {
        x.select_nth_unstable_by(m - 1, |a, b| b.total_cmp(a));
    }
    let top = &mut x[..m];
    top.sort_unstable_by(|a, b| b.total_cmp(a));
    top.iter().product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn standardize_hand_example() {
        let m = DataMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let (z, rep) = standardize_columns(&m, ZeroVariancePolicy::Error).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!(approx(z.get(0, 0), -h, 1e-15) && z.get(1, 0) == 0.0 && approx(z.get(2, 0), h, 1e-15));
        assert!(rep.dropped.is_empty());
    }

    #[test]
    fn standardize_zero_variance() {
        let m = DataMatrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![4.0, 5.0]]).unwrap();
        assert!(matches!(
            standardize_columns(&m, ZeroVariancePolicy::Error),
            Err(Error::ZeroVariance { columns }) if columns == vec![2]
        ));
        let (z, rep) = standardize_columns(&m, ZeroVariancePolicy::Drop).unwrap();
        assert_eq!(z.p(), 1);
        assert_eq!(rep.dropped, vec![1]);
        assert_eq!(rep.kept, vec![0]);
    }

    #[test]
    fn standardize_is_idempotent() {
        let m = DataMatrix::from_rows(&[vec![0.3, -1.0], vec![2.0, 0.5], vec![-1.7, 4.0], vec![0.1, 0.2]]).unwrap();
        let (z, _) = standardize_columns(&m, ZeroVariancePolicy::Error).unwrap();
        let (z2, _) = standardize_columns(&z, ZeroVariancePolicy::Error).unwrap();
        for (a, b) in z.values().iter().zip(z2.values()) {
            assert!(approx(*a, *b, 1e-14));
        }
    }

    #[test]
    fn non_finite_rejected_with_coordinates() {
        let err = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 2, col: 2, .. }));
    }

    #[test]
    fn perfect_correlations() {
        let rows: Vec<Vec<f64>> = [0.3, -1.2, 2.5, 0.7, -0.1].iter().map(|&x| vec![x, x, -x, x * x]).collect();
        let m = DataMatrix::from_rows(&rows).unwrap();
        let c = correlation_matrix(&m).unwrap();
        assert_eq!(c.get(0, 1), 1.0);
        assert_eq!(c.get(0, 2), -1.0);
        assert_eq!(c.get(1, 0), c.get(0, 1));
        let l = l_statistic(&m).unwrap();
        assert_eq!((l.value, l.i, l.j), (1.0, 0, 1));
    }

    #[test]
    fn l_with_two_columns() {
        let m = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 5.0]]).unwrap();
        let c = correlation_matrix(&m).unwrap();
        assert_eq!(l_statistic(&m).unwrap().value, c.get(0, 1).abs());
        assert!(l_statistic(&DataMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap()).is_err());
    }

    #[test]
    fn w_all_ones_and_scaling() {
        let m = DataMatrix::from_col_major(7, 5, vec![1.0; 35]).unwrap();
        assert_eq!(w_statistic(&m).unwrap().value, 7.0);
        let m = DataMatrix::from_rows(&[vec![1.0, -2.0, 0.5], vec![0.5, 1.0, 3.0]]).unwrap();
        let w = w_statistic(&m).unwrap().value;
        let w3 = w_statistic(&m.scaled(3.0).unwrap()).unwrap().value;
        assert!(approx(w3, 9.0 * w, 1e-12 * w3));
    }

    #[test]
    fn t_examples() {
        let u = DataMatrix::from_col_major(6, 3, vec![1.0; 18]).unwrap();
        assert_eq!(t_statistic(&u, &u).unwrap().value, 6.0);
        let u = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0]]).unwrap();
        let v = DataMatrix::from_rows(&[vec![0.5, 4.0], vec![1.0, 1.0]]).unwrap();
        // (1,2): 1*4 + 3*1 = 7; (2,1): 2*0.5 + (-1)*1 = 0
        let t = t_statistic(&u, &v).unwrap();
        assert_eq!((t.value, t.i, t.j), (7.0, 0, 1));
        let bad = DataMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 4.0]]).unwrap();
        assert!(matches!(t_statistic(&u, &bad), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn ties_resolve_to_smallest_pair() {
        let m = DataMatrix::from_col_major(3, 4, vec![1.0; 12]).unwrap();
        let w = w_statistic(&m).unwrap();
        assert_eq!((w.i, w.j), (0, 1));
    }

    #[test]
    fn max_product_examples() {
        assert_eq!(max_product_statistic(&[1.0, -3.0, 2.0], 2).unwrap(), 6.0);
        assert_eq!(max_product_statistic(&[1.0, -3.0, 2.0], 1).unwrap(), 3.0);
        assert_eq!(max_product_statistic(&[1.0, -3.0, 2.0], 3).unwrap(), 6.0);
        assert!(max_product_statistic(&[1.0], 2).is_err());
        assert!(max_product_statistic(&[1.0], 0).is_err());
    }
}
