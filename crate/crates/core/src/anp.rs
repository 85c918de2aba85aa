//! Analytic network process over the four-layer vulnerability network:
//! goal, six criteria, five subcriteria (factor classes) and five
//! alternatives (vulnerability levels).
//!
//! Block matrices list subcriteria and alternatives from the highest class
//! (5) down to the lowest (1), as the tables print them.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::pairwise::PriorityVector;
use crate::raster::SubweightMatrix;

pub const CRITERIA: usize = 6;
pub const SUBCRITERIA: usize = 5;
pub const ALTERNATIVES: usize = 5;
pub const NODES: usize = 1 + CRITERIA + SUBCRITERIA + ALTERNATIVES;

const GOAL: usize = 0;
const CRIT: usize = 1;
const SUB: usize = CRIT + CRITERIA;
const ALT: usize = SUB + SUBCRITERIA;

/// Columns of stochastic blocks may miss unit sum by this much (3-decimal rounding).
pub const COLUMN_SUM_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnpError {
    #[error("block {block} must be {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    BlockDimensionMismatch {
        block: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("block {block} has negative or non-finite entry {value} at ({row}, {col})")]
    NegativeEntry { block: &'static str, row: usize, col: usize, value: f64 },
    #[error("block {block} column {col} sums to {sum}, expected 1")]
    ColumnSum { block: &'static str, col: usize, sum: f64 },
    #[error("block w33 must be zero in the four-layer network")]
    NonZeroSubcriteriaDependence,
    #[error("supermatrix is not column-stochastic (column {col} sums to {sum})")]
    NotColumnStochastic { col: usize, sum: f64 },
    #[error("limit did not converge after {0} squarings")]
    NotConverged(usize),
    #[error("weight product is the zero vector")]
    ZeroVector,
}

/// Component matrices of the supermatrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SupermatrixBlocks {
    pub w21: DVector<f64>,
    pub w22: DMatrix<f64>,
    pub w32: DMatrix<f64>,
    pub w33: DMatrix<f64>,
    pub w34: DMatrix<f64>,
}

fn check_shape(block: &'static str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<(), AnpError> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(AnpError::BlockDimensionMismatch {
            block,
            expected_rows: rows,
            expected_cols: cols,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    for c in 0..cols {
        for r in 0..rows {
            let value = m[(r, c)];
            if !(value.is_finite() && value >= 0.0) {
                return Err(AnpError::NegativeEntry { block, row: r, col: c, value });
            }
        }
    }
    Ok(())
}

fn check_columns(block: &'static str, m: &DMatrix<f64>) -> Result<(), AnpError> {
    for (col, column) in m.column_iter().enumerate() {
        let sum = column.sum();
        if sum != 0.0 && (sum - 1.0).abs() > COLUMN_SUM_TOLERANCE {
            return Err(AnpError::ColumnSum { block, col, sum });
        }
    }
    Ok(())
}

fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        // Ragged input; surfaces as a dimension mismatch in `new`.
        return DMatrix::zeros(nrows, 0);
    }
    DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c])
}

impl SupermatrixBlocks {
    pub fn new(
        w21: DVector<f64>,
        w22: DMatrix<f64>,
        w32: DMatrix<f64>,
        w33: DMatrix<f64>,
        w34: DMatrix<f64>,
    ) -> Result<Self, AnpError> {
        let w21m = DMatrix::from_column_slice(w21.len(), 1, w21.as_slice());
        check_shape("w21", &w21m, CRITERIA, 1)?;
        check_shape("w22", &w22, CRITERIA, CRITERIA)?;
        check_shape("w32", &w32, SUBCRITERIA, CRITERIA)?;
        check_shape("w33", &w33, SUBCRITERIA, SUBCRITERIA)?;
        check_shape("w34", &w34, ALTERNATIVES, SUBCRITERIA)?;
        check_columns("w21", &w21m)?;
        check_columns("w32", &w32)?;
        check_columns("w34", &w34)?;
        if w33.iter().any(|&x| x != 0.0) {
            return Err(AnpError::NonZeroSubcriteriaDependence);
        }
        Ok(Self { w21, w22, w32, w33, w34 })
    }

    /// Row-major constructor used by the configuration loader.
    pub fn from_rows(
        w21: &[f64],
        w22: &[Vec<f64>],
        w32: &[Vec<f64>],
        w33: &[Vec<f64>],
        w34: &[Vec<f64>],
    ) -> Result<Self, AnpError> {
        Self::new(
            DVector::from_column_slice(w21),
            from_rows(w22),
            from_rows(w32),
            from_rows(w33),
            from_rows(w34),
        )
    }
}

/// 17x17 matrix over `[goal; criteria; subcriteria; alternatives]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Supermatrix {
    s: DMatrix<f64>,
}

impl Supermatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn from_matrix(s: DMatrix<f64>) -> Result<Self, AnpError> {
        check_shape("supermatrix", &s, NODES, NODES)?;
        Ok(Self { s })
    }

    /// Reads the blocks back out of the layout written by [`assemble`].
    pub fn blocks(&self) -> SupermatrixBlocks {
        let s = &self.s;
        SupermatrixBlocks {
            w21: s.view((CRIT, GOAL), (CRITERIA, 1)).column(0).into_owned(),
            w22: s.view((CRIT, CRIT), (CRITERIA, CRITERIA)).into_owned(),
            w32: s.view((SUB, CRIT), (SUBCRITERIA, CRITERIA)).into_owned(),
            w33: s.view((SUB, SUB), (SUBCRITERIA, SUBCRITERIA)).into_owned(),
            w34: s.view((ALT, SUB), (ALTERNATIVES, SUBCRITERIA)).into_owned(),
        }
    }
}

pub fn assemble(blocks: &SupermatrixBlocks) -> Supermatrix {
    let mut s = DMatrix::zeros(NODES, NODES);
    s.view_mut((CRIT, GOAL), (CRITERIA, 1)).set_column(0, &blocks.w21);
    s.view_mut((CRIT, CRIT), (CRITERIA, CRITERIA)).copy_from(&blocks.w22);
    s.view_mut((SUB, CRIT), (SUBCRITERIA, CRITERIA)).copy_from(&blocks.w32);
    s.view_mut((SUB, SUB), (SUBCRITERIA, SUBCRITERIA)).copy_from(&blocks.w33);
    s.view_mut((ALT, SUB), (ALTERNATIVES, SUBCRITERIA)).copy_from(&blocks.w34);
    s.view_mut((ALT, ALT), (ALTERNATIVES, ALTERNATIVES)).fill_with_identity();
    Supermatrix { s }
}

/// Scales nonzero columns to unit sum; zero columns become absorbing.
pub fn column_stochasticize(sm: &Supermatrix) -> Supermatrix {
    let mut s = sm.s.clone();
    for c in 0..s.ncols() {
        let sum = s.column(c).sum();
        if sum > 0.0 {
            s.column_mut(c).unscale_mut(sum);
        } else {
            s[(c, c)] = 1.0;
        }
    }
    Supermatrix { s }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitResult {
    #[serde(skip)]
    pub limit: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// False when the goal reaches no alternative; priorities are then uniform.
    pub meaningful: bool,
    /// Ordered from the highest vulnerability level to the lowest.
    pub alternative_priorities: Vec<f64>,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Limit by repeated squaring; a period-2 oscillation is resolved by the
/// Cesàro average of its two accumulation points.
pub fn limit(sm: &Supermatrix, tol: f64, max_iter: usize) -> Result<LimitResult, AnpError> {
    let s = &sm.s;
    for (col, column) in s.column_iter().enumerate() {
        let sum = column.sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(AnpError::NotColumnStochastic { col, sum });
        }
    }
    let mut p = s.clone();
    for it in 1..=max_iter {
        let q = &p * &p;
        if max_abs_diff(&q, &p) < tol {
            let next = &q * s;
            let limit = if max_abs_diff(&next, &q) < tol { q } else { (q + next) * 0.5 };
            let column: Vec<f64> = (ALT..NODES).map(|r| limit[(r, GOAL)]).collect();
            let total: f64 = column.iter().sum();
            let (meaningful, alternative_priorities) = if total > 0.0 {
                (true, column.iter().map(|x| x / total).collect())
            } else {
                (false, vec![1.0 / ALTERNATIVES as f64; ALTERNATIVES])
            };
            return Ok(LimitResult { limit, iterations: it, converged: true, meaningful, alternative_priorities });
        }
        p = q;
    }
    Err(AnpError::NotConverged(max_iter))
}

/// Criteria weights adjusted for inner dependence: `normalize(w22 · w21)`.
pub fn effective_criteria_weights(w21: &DVector<f64>, w22: &DMatrix<f64>) -> Result<PriorityVector, AnpError> {
    if w22.ncols() != w21.len() {
        return Err(AnpError::BlockDimensionMismatch {
            block: "w22",
            expected_rows: w21.len(),
            expected_cols: w21.len(),
            rows: w22.nrows(),
            cols: w22.ncols(),
        });
    }
    let v = w22 * w21;
    PriorityVector::normalized(v.iter().copied().collect()).map_err(|_| AnpError::ZeroVector)
}

/// Per-factor effect of each vulnerability level: column f is
/// `w34 · w32[:, f]` renormalized, returned with rows indexed by class 1..5.
pub fn anp_class_weights(blocks: &SupermatrixBlocks) -> SubweightMatrix {
    let product = &blocks.w34 * &blocks.w32;
    let factors = product.ncols();
    let mut columns = Vec::with_capacity(factors);
    for f in 0..factors {
        let col = product.column(f);
        let sum = col.sum();
        // Stored from class 5 down to class 1.
        let values: Vec<f64> = col.iter().map(|x| if sum > 0.0 { x / sum } else { 0.0 }).collect();
        columns.push(values);
    }
    SubweightMatrix::from_columns_high_first(&columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn reference_blocks() -> SupermatrixBlocks {
        SupermatrixBlocks::from_rows(
            &[0.408, 0.268, 0.138, 0.1, 0.058, 0.028],
            &[
                vec![0.464, 0.233, 0.14, 0.277, 0.0, 0.186],
                vec![0.271, 0.408, 0.12, 0.098, 0.0, 0.077],
                vec![0.105, 0.126, 0.662, 0.0, 0.0, 0.0],
                vec![0.085, 0.079, 0.0, 0.498, 0.0, 0.0],
                vec![0.076, 0.079, 0.078, 0.126, 0.0, 0.0],
                vec![0.0, 0.075, 0.0, 0.0, 0.0, 0.737],
            ],
            &[
                vec![0.572, 0.505, 0.501, 0.642, 0.388, 0.557],
                vec![0.207, 0.186, 0.172, 0.157, 0.233, 0.165],
                vec![0.114, 0.144, 0.124, 0.071, 0.276, 0.129],
                vec![0.057, 0.11, 0.102, 0.065, 0.07, 0.099],
                vec![0.05, 0.055, 0.102, 0.065, 0.033, 0.05],
            ],
            &vec![vec![0.0; 5]; 5],
            &[
                vec![0.56, 0.61, 0.571, 0.483, 0.409],
                vec![0.187, 0.203, 0.229, 0.276, 0.273],
                vec![0.112, 0.102, 0.114, 0.138, 0.182],
                vec![0.08, 0.051, 0.057, 0.069, 0.091],
                vec![0.062, 0.034, 0.029, 0.034, 0.045],
            ],
        )
        .unwrap()
    }

    #[test]
    fn goal_column_carries_w21() {
        let s = assemble(&reference_blocks());
        let m = s.matrix();
        assert_eq!(m.nrows(), 17);
        let expected = [0.408, 0.268, 0.138, 0.1, 0.058, 0.028];
        for r in 0..17 {
            let want = if (1..7).contains(&r) { expected[r - 1] } else { 0.0 };
            assert_eq!(m[(r, 0)], want);
        }
        // goal row is empty
        assert!(m.row(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn blocks_round_trip() {
        let b = reference_blocks();
        assert_eq!(assemble(&b).blocks(), b);
    }

    #[test]
    fn identity_w34_mirrors_subcriteria() {
        let mut b = reference_blocks();
        b.w34 = DMatrix::identity(5, 5);
        let m = assemble(&b);
        assert_eq!(m.matrix().view((12, 7), (5, 5)).into_owned(), DMatrix::<f64>::identity(5, 5));
        let cw = anp_class_weights(&b);
        for f in 0..6 {
            for class in 1..=5 {
                assert_abs_diff_eq!(cw.get(class, f), b.w32[(5 - class, f)] / b.w32.column(f).sum(), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn dimension_and_value_errors() {
        let b = reference_blocks();
        assert!(matches!(
            SupermatrixBlocks::new(b.w21.clone(), DMatrix::zeros(5, 6), b.w32.clone(), b.w33.clone(), b.w34.clone()),
            Err(AnpError::BlockDimensionMismatch { block: "w22", .. })
        ));
        let mut bad = b.w32.clone();
        bad[(0, 0)] = -0.1;
        assert!(matches!(
            SupermatrixBlocks::new(b.w21.clone(), b.w22.clone(), bad, b.w33.clone(), b.w34.clone()),
            Err(AnpError::NegativeEntry { .. })
        ));
        let mut bad = b.w34.clone();
        bad[(0, 0)] = 0.9;
        assert!(matches!(
            SupermatrixBlocks::new(b.w21.clone(), b.w22.clone(), b.w32.clone(), b.w33.clone(), bad),
            Err(AnpError::ColumnSum { block: "w34", col: 0, .. })
        ));
        assert_eq!(
            SupermatrixBlocks::new(b.w21.clone(), b.w22.clone(), b.w32.clone(), DMatrix::from_element(5, 5, 0.1), b.w34.clone()),
            Err(AnpError::NonZeroSubcriteriaDependence)
        );
    }

    #[test]
    fn stochasticize_examples() {
        let id = Supermatrix::from_matrix(DMatrix::identity(17, 17)).unwrap();
        assert_eq!(column_stochasticize(&id), id);

        let mut m = DMatrix::identity(17, 17);
        m[(0, 0)] = 1.0;
        m[(1, 0)] = 1.0;
        let s = column_stochasticize(&Supermatrix::from_matrix(m).unwrap());
        assert_eq!(s.matrix()[(0, 0)], 0.5);
        assert_eq!(s.matrix()[(1, 0)], 0.5);

        let zero = Supermatrix::from_matrix(DMatrix::zeros(17, 17)).unwrap();
        assert_eq!(column_stochasticize(&zero).matrix(), &DMatrix::<f64>::identity(17, 17));

        let stochastic = column_stochasticize(&assemble(&reference_blocks()));
        let raw = assemble(&reference_blocks());
        for r in 0..17 {
            assert_abs_diff_eq!(stochastic.matrix()[(r, 0)], raw.matrix()[(r, 0)], epsilon = 1e-3);
        }
        for c in 0..17 {
            assert_abs_diff_eq!(stochastic.matrix().column(c).sum(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn identity_limit_is_not_meaningful() {
        let id = Supermatrix::from_matrix(DMatrix::identity(17, 17)).unwrap();
        let r = limit(&id, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(r.limit, DMatrix::<f64>::identity(17, 17));
        assert!(r.converged);
        assert!(!r.meaningful);
        assert_eq!(r.alternative_priorities, vec![0.2; 5]);
    }

    #[test]
    fn limit_requires_stochastic_input() {
        let raw = assemble(&reference_blocks());
        assert!(matches!(limit(&raw, 1e-9, 100), Err(AnpError::NotColumnStochastic { .. })));
    }

    #[test]
    fn period_two_chain_uses_cesaro_average() {
        // Alternatives 0 and 1 swap forever; everything else is absorbing.
        let mut m = DMatrix::identity(17, 17);
        m[(12, 12)] = 0.0;
        m[(13, 13)] = 0.0;
        m[(13, 12)] = 1.0;
        m[(12, 13)] = 1.0;
        m[(0, 0)] = 0.0;
        m[(12, 0)] = 1.0;
        let r = limit(&Supermatrix::from_matrix(m).unwrap(), 1e-12, 100).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.limit[(12, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.limit[(13, 0)], 0.5, epsilon = 1e-15);
        assert_eq!(r.alternative_priorities, vec![0.5, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn reference_limit_is_decreasing() {
        let s = column_stochasticize(&assemble(&reference_blocks()));
        let r = limit(&s, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER).unwrap();
        assert!(r.iterations < 100);
        assert!(r.meaningful);
        // Frozen from an independent numpy matrix_power(S, 4096) run.
        let expected = [0.555852522017153, 0.20809243140888425, 0.11648311398626046, 0.07088966104636896, 0.0486822715413333];
        for (got, want) in r.alternative_priorities.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
        }
        for c in 0..17 {
            assert_abs_diff_eq!(r.limit.column(c).sum(), 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn effective_weights() {
        let b = reference_blocks();
        let id = effective_criteria_weights(&b.w21, &DMatrix::identity(6, 6)).unwrap();
        for (a, w) in id.iter().zip(b.w21.iter()) {
            assert_abs_diff_eq!(*a, *w / b.w21.sum(), epsilon = 1e-15);
        }
        let e = effective_criteria_weights(&b.w21, &b.w22).unwrap();
        let first = 0.464 * 0.408 + 0.233 * 0.268 + 0.14 * 0.138 + 0.277 * 0.1 + 0.186 * 0.028;
        let total: f64 = (0..6).map(|r| (0..6).map(|c| b.w22[(r, c)] * b.w21[c]).sum::<f64>()).sum();
        assert_abs_diff_eq!(e[0], first / total, epsilon = 1e-15);
        assert_abs_diff_eq!(e[0], 0.3225951599689274, epsilon = 1e-12);

        let mut single = DMatrix::zeros(6, 6);
        single.set_column(2, &DVector::from_column_slice(&[0.1, 0.2, 0.3, 0.4, 0.0, 0.0]));
        let e = effective_criteria_weights(&b.w21, &single).unwrap();
        assert_abs_diff_eq!(e[3], 0.4, epsilon = 1e-15);

        assert_eq!(effective_criteria_weights(&b.w21, &DMatrix::zeros(6, 6)), Err(AnpError::ZeroVector));
    }

    #[test]
    fn reference_class_weights_decrease_with_class() {
        let cw = anp_class_weights(&reference_blocks());
        for f in 0..6 {
            for class in 1..5 {
                assert!(cw.get(class + 1, f) > cw.get(class, f), "factor {f} class {class}");
            }
        }
        // PD column: w34 · (0.572, 0.207, 0.114, 0.057, 0.05), renormalized.
        assert_abs_diff_eq!(cw.get(5, 0), 0.5593450546287523, epsilon = 1e-12);
        assert_abs_diff_eq!(cw.get(1, 0), 0.0499674186365399, epsilon = 1e-12);
    }

    #[test]
    fn uniform_w32_column_scales_w34_row_sums() {
        let mut b = reference_blocks();
        b.w32.set_column(0, &DVector::from_element(5, 0.2));
        let cw = anp_class_weights(&b);
        let rows: Vec<f64> = (0..5).map(|r| b.w34.row(r).sum() * 0.2).collect();
        let total: f64 = rows.iter().sum();
        for class in 1..=5 {
            assert_abs_diff_eq!(cw.get(class, 0), rows[5 - class] / total, epsilon = 1e-15);
        }
    }
}
