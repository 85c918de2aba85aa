//! Pairwise comparison matrices, priority vectors and consistency diagnostics.
//!
//! Priorities use the column-normalize / row-average approximation of the
//! principal eigenvector; `lambda_max` is Saaty's estimator
//! `(1/n) Σ (A·w)_i / w_i` on that vector.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_DIMENSION: usize = 2;
pub const MAX_DIMENSION: usize = 16;

/// Largest accepted `|a_ij · a_ji − 1|`. Two-decimal reciprocals of Saaty
/// values up to 9 can miss by as much as `0.005 · 9 = 0.045`.
pub const RECIPROCITY_TOLERANCE: f64 = 0.05;

/// Upper bound of the Saaty ratio scale.
pub const MAX_JUDGMENT: f64 = 10.0;

/// Weight vectors must sum to one within this tolerance.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PairwiseError {
    #[error("matrix must be square with {MIN_DIMENSION} <= n <= {MAX_DIMENSION}, got {rows}x{cols}")]
    DimensionOutOfRange { rows: usize, cols: usize },
    #[error("entry ({row}, {col}) = {value} is outside (0, {MAX_JUDGMENT}]")]
    NonPositiveEntry { row: usize, col: usize, value: f64 },
    #[error("diagonal entry ({index}, {index}) = {value}, expected 1")]
    BadDiagonal { index: usize, value: f64 },
    #[error("reciprocity violated at ({row}, {col}): a_ij * a_ji = {product}")]
    ReciprocityViolation { row: usize, col: usize, product: f64 },
    #[error("weight component {index} is zero")]
    ZeroWeightComponent { index: usize },
    #[error("random index unavailable for n = {0}")]
    RandomIndexUnavailable(usize),
    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),
}

/// Square positive reciprocal judgment matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonMatrix {
    n: usize,
    a: Vec<f64>,
}

impl ComparisonMatrix {
    /// Validates a row-major square matrix.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, PairwiseError> {
        let n = rows.len();
        let ragged = rows.iter().find(|r| r.len() != n);
        if let Some(r) = ragged {
            return Err(PairwiseError::DimensionOutOfRange { rows: n, cols: r.len() });
        }
        Self::from_flat(n, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(n: usize, a: Vec<f64>) -> Result<Self, PairwiseError> {
        if !(MIN_DIMENSION..=MAX_DIMENSION).contains(&n) || a.len() != n * n {
            return Err(PairwiseError::DimensionOutOfRange {
                rows: n,
                cols: a.len().checked_div(n).unwrap_or(0),
            });
        }
        for (k, &value) in a.iter().enumerate() {
            if !(value > 0.0 && value <= MAX_JUDGMENT) {
                return Err(PairwiseError::NonPositiveEntry { row: k / n, col: k % n, value });
            }
        }
        for i in 0..n {
            let value = a[i * n + i];
            if value != 1.0 {
                return Err(PairwiseError::BadDiagonal { index: i, value });
            }
        }
        let mut worst: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let product = a[i * n + j] * a[j * n + i];
                let dev = (product - 1.0).abs();
                if dev > RECIPROCITY_TOLERANCE
                    && worst.is_none_or(|(_, _, p)| dev > (p - 1.0).abs())
                {
                    worst = Some((i, j, product));
                }
            }
        }
        if let Some((row, col, product)) = worst {
            return Err(PairwiseError::ReciprocityViolation { row, col, product });
        }
        Ok(Self { n, a })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.a.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Column-normalize then average rows.
    pub fn priority_vector(&self) -> PriorityVector {
        let n = self.n;
        let col_sums: Vec<f64> = (0..n).map(|j| (0..n).map(|i| self.get(i, j)).sum()).collect();
        let w = (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j) / col_sums[j]).sum::<f64>() / n as f64)
            .collect();
        PriorityVector { w }
    }

    /// Saaty's estimator `(1/n) Σ (A·w)_i / w_i`.
    pub fn principal_eigenvalue(&self, w: &PriorityVector) -> Result<f64, PairwiseError> {
        let n = self.n;
        if w.len() != n {
            return Err(PairwiseError::InvalidWeights(format!(
                "length {} does not match matrix dimension {n}",
                w.len()
            )));
        }
        let mut total = 0.0;
        for i in 0..n {
            if w[i] == 0.0 {
                return Err(PairwiseError::ZeroWeightComponent { index: i });
            }
            let aw: f64 = (0..n).map(|j| self.get(i, j) * w[j]).sum();
            total += aw / w[i];
        }
        Ok(total / n as f64)
    }

    pub fn consistency(&self) -> Result<ConsistencyReport, PairwiseError> {
        let ri = random_index(self.n)?;
        let w = self.priority_vector();
        let lambda_max = self.principal_eigenvalue(&w)?;
        let ci = (lambda_max - self.n as f64) / (self.n as f64 - 1.0);
        let cr = if ri > 0.0 { ci / ri } else { 0.0 };
        Ok(ConsistencyReport { lambda_max, ci, cr, ri, consistent: cr < 0.1 })
    }

    /// The unique consistent matrix with `a_ij = w_i / w_j`.
    pub fn consistent_from_weights(w: &PriorityVector) -> Result<Self, PairwiseError> {
        let n = w.len();
        if let Some(index) = w.iter().position(|&x| x <= 0.0) {
            return Err(PairwiseError::ZeroWeightComponent { index });
        }
        if !(MIN_DIMENSION..=MAX_DIMENSION).contains(&n) {
            return Err(PairwiseError::DimensionOutOfRange { rows: n, cols: n });
        }
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                a.push(if i == j { 1.0 } else { w[i] / w[j] });
            }
        }
        // Ratios of arbitrary weights may exceed the Saaty scale, so this
        // bypasses the judgment-range check on purpose.
        Ok(Self { n, a })
    }
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriorityVector {
    w: Vec<f64>,
}

impl PriorityVector {
    pub fn new(w: Vec<f64>) -> Result<Self, PairwiseError> {
        if w.is_empty() {
            return Err(PairwiseError::InvalidWeights("empty".into()));
        }
        if let Some(x) = w.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(PairwiseError::InvalidWeights(format!("component {x} is negative or non-finite")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(PairwiseError::InvalidWeights(format!("sum {sum} != 1")));
        }
        Ok(Self { w })
    }

    /// Scales a nonnegative vector to unit sum.
    pub fn normalized(raw: Vec<f64>) -> Result<Self, PairwiseError> {
        let sum: f64 = raw.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) || raw.iter().any(|x| *x < 0.0) {
            return Err(PairwiseError::InvalidWeights(format!("cannot normalize vector with sum {sum}")));
        }
        Ok(Self { w: raw.into_iter().map(|x| x / sum).collect() })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.w
    }

    /// Factor indices sorted by descending weight, ties to the lower index.
    pub fn rank_order(&self) -> Vec<usize> {
        rank_order(&self.w)
    }

    pub fn l1_distance(&self, other: &PriorityVector) -> f64 {
        self.w.iter().zip(&other.w).map(|(a, b)| (a - b).abs()).sum()
    }
}

impl std::ops::Deref for PriorityVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.w
    }
}

/// Descending argsort with lower-index tie-break.
pub fn rank_order(w: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| w[b].partial_cmp(&w[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub lambda_max: f64,
    pub ci: f64,
    pub cr: f64,
    pub ri: f64,
    pub consistent: bool,
}

/// Saaty's random consistency index for `n` in `1..=10`.
pub fn random_index(n: usize) -> Result<f64, PairwiseError> {
    const RI: [f64; 10] = [0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49];
    n.checked_sub(1)
        .and_then(|k| RI.get(k).copied())
        .ok_or(PairwiseError::RandomIndexUnavailable(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn eq1() -> ComparisonMatrix {
        ComparisonMatrix::new(vec![
            vec![1.0, 2.0, 4.0, 5.0, 7.0, 9.0],
            vec![0.5, 1.0, 3.0, 4.0, 5.0, 7.0],
            vec![0.25, 0.33, 1.0, 2.0, 4.0, 5.0],
            vec![0.2, 0.25, 0.5, 1.0, 3.0, 5.0],
            vec![0.14, 0.2, 0.25, 0.33, 1.0, 4.0],
            vec![0.11, 0.14, 0.2, 0.2, 0.25, 1.0],
        ])
        .unwrap()
    }

    fn ones(n: usize) -> ComparisonMatrix {
        ComparisonMatrix::new(vec![vec![1.0; n]; n]).unwrap()
    }

    #[test]
    fn accepts_printed_matrices() {
        assert_eq!(eq1().n(), 6);
        assert_eq!(ones(3).n(), 3);
    }

    #[test]
    fn rejects_non_reciprocal_pair() {
        let err = ComparisonMatrix::new(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap_err();
        assert!(matches!(err, PairwiseError::ReciprocityViolation { row: 0, col: 1, .. }));
    }

    #[test]
    fn reports_worst_reciprocity_offender() {
        let err = ComparisonMatrix::new(vec![
            vec![1.0, 2.0, 3.0],
            vec![0.6, 1.0, 5.0],
            vec![0.33, 0.5, 1.0],
        ])
        .unwrap_err();
        // 5 * 0.5 = 2.5 is worse than 2 * 0.6 = 1.2
        assert!(matches!(err, PairwiseError::ReciprocityViolation { row: 1, col: 2, .. }));
    }

    #[test]
    fn rejects_bad_shapes_and_entries() {
        assert!(matches!(
            ComparisonMatrix::new(vec![vec![1.0]]),
            Err(PairwiseError::DimensionOutOfRange { .. })
        ));
        assert!(matches!(
            ComparisonMatrix::new(vec![vec![1.0, 2.0], vec![0.5]]),
            Err(PairwiseError::DimensionOutOfRange { .. })
        ));
        assert!(matches!(
            ComparisonMatrix::new(vec![vec![1.0, -2.0], vec![-0.5, 1.0]]),
            Err(PairwiseError::NonPositiveEntry { .. })
        ));
        assert!(matches!(
            ComparisonMatrix::new(vec![vec![1.0, 12.0], vec![1.0 / 12.0, 1.0]]),
            Err(PairwiseError::NonPositiveEntry { .. })
        ));
        assert!(matches!(
            ComparisonMatrix::new(vec![vec![2.0, 1.0], vec![1.0, 1.0]]),
            Err(PairwiseError::BadDiagonal { index: 0, .. })
        ));
    }

    #[test]
    fn eq1_priority_vector() {
        let w = eq1().priority_vector();
        let expected = [0.408, 0.268, 0.138, 0.100, 0.058, 0.028];
        for (got, want) in w.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 0.005);
        }
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_priority_for_all_ones() {
        let w = ones(3).priority_vector();
        for x in w.iter() {
            assert_abs_diff_eq!(*x, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn table2_population_density() {
        let m = ComparisonMatrix::new(vec![
            vec![1.0, 4.0, 6.0, 8.0, 9.0],
            vec![0.25, 1.0, 2.0, 4.0, 5.0],
            vec![0.17, 0.5, 1.0, 2.0, 3.0],
            vec![0.13, 0.25, 0.5, 1.0, 1.0],
            vec![0.11, 0.2, 0.33, 1.0, 1.0],
        ])
        .unwrap();
        let w = m.priority_vector();
        for (got, want) in w.iter().zip([0.572, 0.207, 0.114, 0.057, 0.050]) {
            assert_abs_diff_eq!(*got, want, epsilon = 0.005);
        }
    }

    #[test]
    fn lambda_max_of_consistent_matrices() {
        let m = ones(3);
        assert_eq!(m.principal_eigenvalue(&m.priority_vector()).unwrap(), 3.0);

        let w = PriorityVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let c = ComparisonMatrix::consistent_from_weights(&w).unwrap();
        assert_abs_diff_eq!(c.principal_eigenvalue(&c.priority_vector()).unwrap(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn lambda_max_rejects_zero_weight() {
        let w = PriorityVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            ones(3).principal_eigenvalue(&w),
            Err(PairwiseError::ZeroWeightComponent { index: 1 })
        );
    }

    #[test]
    fn eq1_consistency() {
        let r = eq1().consistency().unwrap();
        // Saaty estimator on the column-mean vector; a dense eigensolver gives
        // 6.3401 for the same matrix (see tests/oracles.rs).
        assert_abs_diff_eq!(r.lambda_max, 6.353_675_533_394_561, epsilon = 1e-9);
        assert_abs_diff_eq!(r.cr, 0.06, epsilon = 0.01);
        assert_eq!(r.ri, 1.24);
        assert!(r.consistent);
        assert_eq!(r.ci, (r.lambda_max - 6.0) / 5.0);
    }

    #[test]
    fn maximally_intransitive_matrix_is_inconsistent() {
        let m = ComparisonMatrix::new(vec![
            vec![1.0, 9.0, 1.0 / 9.0],
            vec![1.0 / 9.0, 1.0, 9.0],
            vec![9.0, 1.0 / 9.0, 1.0],
        ])
        .unwrap();
        let r = m.consistency().unwrap();
        assert!(r.cr > 0.1);
        assert!(!r.consistent);
    }

    #[test]
    fn consistent_matrix_has_zero_ci() {
        let r = ones(4).consistency().unwrap();
        assert_eq!(r.ci, 0.0);
        assert_eq!(r.cr, 0.0);
    }

    #[test]
    fn random_index_table() {
        assert_eq!(random_index(1).unwrap(), 0.0);
        assert_eq!(random_index(6).unwrap(), 1.24);
        assert_eq!(random_index(10).unwrap(), 1.49);
        assert_eq!(random_index(11), Err(PairwiseError::RandomIndexUnavailable(11)));
        assert_eq!(random_index(0), Err(PairwiseError::RandomIndexUnavailable(0)));
        let big = ComparisonMatrix::new(vec![vec![1.0; 11]; 11]).unwrap();
        assert_eq!(big.consistency(), Err(PairwiseError::RandomIndexUnavailable(11)));
    }

    #[test]
    fn consistent_reconstruction_examples() {
        let half = PriorityVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(
            ComparisonMatrix::consistent_from_weights(&half).unwrap().rows(),
            vec![vec![1.0, 1.0], vec![1.0, 1.0]]
        );
        let w = PriorityVector::new(vec![0.6, 0.3, 0.1]).unwrap();
        let m = ComparisonMatrix::consistent_from_weights(&w).unwrap();
        assert_abs_diff_eq!(m.get(0, 2), 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.get(1, 2), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.get(2, 0), 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.get(2, 1), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn one_n_worst_case_round_trip() {
        let w = PriorityVector::new(vec![0.27336, 0.17956, 0.09246, 0.067, 0.03886, 0.01876, 0.297, 0.033])
            .unwrap();
        let m = ComparisonMatrix::consistent_from_weights(&w).unwrap();
        let back = m.priority_vector();
        for (a, b) in back.iter().zip(w.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(m.consistency().unwrap().ci, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn reconstruction_rejects_zero_weight() {
        let w = PriorityVector::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(
            ComparisonMatrix::consistent_from_weights(&w),
            Err(PairwiseError::ZeroWeightComponent { index: 1 })
        );
    }

    #[test]
    fn rank_order_breaks_ties_by_index() {
        assert_eq!(rank_order(&[0.2, 0.4, 0.2, 0.2]), vec![1, 0, 2, 3]);
    }

    #[test]
    fn priority_vector_validation() {
        assert!(PriorityVector::new(vec![0.5, 0.6]).is_err());
        assert!(PriorityVector::new(vec![1.5, -0.5]).is_err());
        assert!(PriorityVector::new(vec![]).is_err());
        assert_eq!(PriorityVector::normalized(vec![1.0, 3.0]).unwrap().as_slice(), &[0.25, 0.75]);
    }
}
