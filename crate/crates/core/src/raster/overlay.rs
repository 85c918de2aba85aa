//! Per-pixel scoring rules.

use crate::exec::Execution;
use crate::one_n::{one_n_weights, ONE_N_FACTORS};
use crate::pairwise::PriorityVector;
use crate::rng::SplitMix64;

use super::grid::{check_aligned, ClassGrid, Grid, GridHeader, CLASS_NODATA};
use super::RasterError;

pub const CLASSES: usize = 5;

/// Per-class subweights, one column per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SubweightMatrix {
    // columns[f][c - 1] is the subweight of class c for factor f
    columns: Vec<[f64; CLASSES]>,
}

impl SubweightMatrix {
    /// `rows[c - 1][f]`, rows ordered class 1..5. Columns must sum to 1
    /// within 0.01.
    pub fn from_class_rows(rows: &[Vec<f64>]) -> Result<Self, RasterError> {
        if rows.len() != CLASSES {
            return Err(RasterError::InvalidSubweights(format!("{} rows, expected {CLASSES}", rows.len())));
        }
        let factors = rows[0].len();
        if factors == 0 || rows.iter().any(|r| r.len() != factors) {
            return Err(RasterError::InvalidSubweights("rows differ in length".into()));
        }
        let columns = (0..factors).map(|f| std::array::from_fn(|c| rows[c][f])).collect();
        let s = Self { columns };
        s.validate()?;
        Ok(s)
    }

    /// One vector per factor, each listed from class 5 down to class 1 (the
    /// order of the within-factor comparison matrices).
    pub fn from_priority_vectors(vectors: &[PriorityVector]) -> Result<Self, RasterError> {
        let columns: Vec<Vec<f64>> = vectors.iter().map(|v| v.to_vec()).collect();
        if columns.iter().any(|c| c.len() != CLASSES) {
            return Err(RasterError::InvalidSubweights("factor vectors must have 5 classes".into()));
        }
        let s = Self::from_columns_high_first(&columns);
        s.validate()?;
        Ok(s)
    }

    /// Unchecked; each column is listed from class 5 down to class 1.
    pub(crate) fn from_columns_high_first(columns: &[Vec<f64>]) -> Self {
        let columns = columns.iter().map(|col| std::array::from_fn(|c| col[CLASSES - 1 - c])).collect();
        Self { columns }
    }

    fn validate(&self) -> Result<(), RasterError> {
        for (f, col) in self.columns.iter().enumerate() {
            if col.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(RasterError::InvalidSubweights(format!("factor {f} has a negative entry")));
            }
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > 0.01 {
                return Err(RasterError::InvalidSubweights(format!("factor {f} sums to {sum}")));
            }
        }
        Ok(())
    }

    /// True when class 5 outweighs class 1 in every column.
    pub fn is_increasing(&self) -> bool {
        self.columns.iter().all(|c| c[CLASSES - 1] > c[0])
    }

    pub fn factors(&self) -> usize {
        self.columns.len()
    }

    /// Subweight of `class` (1..5) for `factor`; class 0 contributes nothing.
    pub fn get(&self, class: usize, factor: usize) -> f64 {
        if class == 0 {
            0.0
        } else {
            self.columns[factor][class - 1]
        }
    }

    /// Rows ordered class 1..5.
    pub fn class_rows(&self) -> Vec<Vec<f64>> {
        (0..CLASSES).map(|c| self.columns.iter().map(|col| col[c]).collect()).collect()
    }

    pub fn min(&self) -> f64 {
        self.columns.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.columns.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn prepare<'a>(classes: &'a [&'a ClassGrid], weights: usize) -> Result<GridHeader, RasterError> {
    if classes.len() != weights {
        return Err(RasterError::WeightCountMismatch { weights, grids: classes.len() });
    }
    let first = classes.first().ok_or(RasterError::EmptyGrid)?;
    check_aligned(classes.iter().map(|g| &g.header))?;
    Ok(first.header)
}

fn overlay_with<F>(classes: &[&ClassGrid], weights: usize, exec: Execution, score: F) -> Result<Grid, RasterError>
where
    F: Fn(usize, u8) -> f64 + Sync + Send,
{
    let header = prepare(classes, weights)?;
    let nodata = header.nodata;
    let values = exec.map_range(header.len(), |p| {
        let mut v = 0.0;
        for (f, g) in classes.iter().enumerate() {
            let c = g.values()[p];
            if c == CLASS_NODATA {
                return nodata;
            }
            v += score(f, c);
        }
        v
    });
    Grid::new(header, values)
}

/// `V(p) = Σ wᵢ·xᵢ(p)`.
pub fn weighted_overlay(classes: &[&ClassGrid], w: &[f64]) -> Result<Grid, RasterError> {
    weighted_overlay_with(classes, w, Execution::default())
}

pub fn weighted_overlay_with(classes: &[&ClassGrid], w: &[f64], exec: Execution) -> Result<Grid, RasterError> {
    overlay_with(classes, w.len(), exec, |f, c| w[f] * c as f64)
}

/// `V(p) = Σ wᵢ·sᵢ(xᵢ(p))`.
pub fn nested_overlay(classes: &[&ClassGrid], w: &[f64], s: &SubweightMatrix) -> Result<Grid, RasterError> {
    nested_overlay_with(classes, w, s, Execution::default())
}

pub fn nested_overlay_with(
    classes: &[&ClassGrid],
    w: &[f64],
    s: &SubweightMatrix,
    exec: Execution,
) -> Result<Grid, RasterError> {
    if s.factors() != w.len() {
        return Err(RasterError::InvalidSubweights(format!("{} factors for {} weights", s.factors(), w.len())));
    }
    overlay_with(classes, w.len(), exec, |f, c| w[f] * s.get(c as usize, f))
}

/// Layer where each pixel carries a factor with probability `p_occ`, at a
/// uniform class 1..5; elsewhere the class is 0. Pixel `i` uses draws 0
/// (occurrence) and 1 (class) of stream `(seed, i)`.
pub fn stochastic_class_layer(header: GridHeader, p_occ: f64, seed: u64) -> Result<ClassGrid, RasterError> {
    if !(0.0..=1.0).contains(&p_occ) {
        return Err(RasterError::InvalidProbability(p_occ));
    }
    let values = Execution::default().map_range(header.len(), |p| {
        let mut rng = SplitMix64::stream(seed, p as u64);
        let occurs = rng.next_f64() < p_occ;
        let class = 1 + (rng.next_f64() * CLASSES as f64) as u8;
        if occurs {
            class.min(CLASSES as u8)
        } else {
            0
        }
    });
    ClassGrid::new(header, values)
}

/// Eight-factor overlay with `known_share` of the weight on the six known
/// factors and the rest split 9:1 between the acute and chronic layers.
pub fn one_n_overlay(
    classes6: &[&ClassGrid],
    acute: &ClassGrid,
    chronic: &ClassGrid,
    base: &PriorityVector,
    known_share: f64,
) -> Result<Grid, RasterError> {
    let w = one_n_weights(base, known_share)?;
    let mut all: Vec<&ClassGrid> = classes6.to_vec();
    all.push(acute);
    all.push(chronic);
    if all.len() != ONE_N_FACTORS {
        return Err(RasterError::WeightCountMismatch { weights: ONE_N_FACTORS, grids: all.len() });
    }
    weighted_overlay(&all, &w)
}

/// Pixel-wise mean of co-registered grids; nodata if any input is nodata.
pub fn mean_overlay(grids: &[Grid]) -> Result<Grid, RasterError> {
    let first = grids.first().ok_or(RasterError::EmptyGrid)?;
    check_aligned(grids.iter().map(|g| &g.header))?;
    let n = grids.len() as f64;
    let values = Execution::default().map_range(first.header.len(), |p| {
        let mut sum = 0.0;
        for g in grids {
            let v = g.values()[p];
            if g.is_nodata(v) {
                return first.header.nodata;
            }
            sum += v;
        }
        sum / n
    });
    Grid::new(first.header, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const W: [f64; 6] = [0.408, 0.268, 0.138, 0.1, 0.058, 0.028];

    fn table3() -> SubweightMatrix {
        let high_first = [
            vec![0.572, 0.207, 0.114, 0.057, 0.05],
            vec![0.505, 0.186, 0.144, 0.110, 0.055],
            vec![0.501, 0.172, 0.124, 0.102, 0.102],
            vec![0.642, 0.157, 0.071, 0.065, 0.065],
            vec![0.416, 0.278, 0.202, 0.070, 0.034],
            vec![0.557, 0.165, 0.129, 0.099, 0.050],
        ];
        let s = SubweightMatrix::from_columns_high_first(&high_first);
        s.validate().unwrap();
        s
    }

    fn pixel(classes: [u8; 6]) -> Vec<ClassGrid> {
        classes.iter().map(|&c| ClassGrid::filled(GridHeader::new(1, 1), c)).collect()
    }

    fn refs(v: &[ClassGrid]) -> Vec<&ClassGrid> {
        v.iter().collect()
    }

    #[test]
    fn weighted_hand_pixel() {
        let g = pixel([5, 4, 3, 2, 1, 1]);
        let v = weighted_overlay(&refs(&g), &W).unwrap();
        assert_abs_diff_eq!(v.values()[0], 3.812, epsilon = 1e-12);
    }

    #[test]
    fn weighted_constant_classes() {
        for c in [1u8, 5] {
            let g = pixel([c; 6]);
            let v = weighted_overlay(&refs(&g), &W).unwrap();
            assert_abs_diff_eq!(v.values()[0], c as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn nested_all_class_five() {
        let g = pixel([5; 6]);
        let v = nested_overlay(&refs(&g), &W, &table3()).unwrap();
        let expected = 0.408 * 0.572 + 0.268 * 0.505 + 0.138 * 0.501 + 0.1 * 0.642 + 0.058 * 0.416 + 0.028 * 0.557;
        assert_abs_diff_eq!(v.values()[0], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(v.values()[0], 0.541778, epsilon = 1e-6);
    }

    #[test]
    fn nested_uniform_subweights() {
        let s = SubweightMatrix::from_class_rows(&vec![vec![0.2; 6]; 5]).unwrap();
        assert!(!s.is_increasing());
        for classes in [[1, 2, 3, 4, 5, 1], [5; 6]] {
            let g = pixel(classes);
            let v = nested_overlay(&refs(&g), &W, &s).unwrap();
            assert_abs_diff_eq!(v.values()[0], 0.2, epsilon = 1e-12);
        }
    }

    #[test]
    fn nodata_and_shape() {
        let mut g = pixel([1; 6]);
        g[3] = ClassGrid::filled(GridHeader::new(1, 1), CLASS_NODATA);
        let v = weighted_overlay(&refs(&g), &W).unwrap();
        assert!(v.is_nodata(v.values()[0]));

        g[3] = ClassGrid::filled(GridHeader::new(1, 2), 1);
        assert!(matches!(weighted_overlay(&refs(&g), &W), Err(RasterError::GridShapeMismatch(_))));
        assert!(matches!(
            weighted_overlay(&refs(&g[..5]), &W),
            Err(RasterError::WeightCountMismatch { weights: 6, grids: 5 })
        ));
    }

    #[test]
    fn subweight_validation() {
        assert!(SubweightMatrix::from_class_rows(&vec![vec![0.3; 6]; 5]).is_err());
        assert!(SubweightMatrix::from_class_rows(&vec![vec![0.2; 6]; 4]).is_err());
        let s = table3();
        assert!(s.is_increasing());
        assert_eq!(s.get(5, 0), 0.572);
        assert_eq!(s.get(1, 5), 0.05);
        assert_eq!(s.class_rows()[4][1], 0.505);
    }

    #[test]
    fn stochastic_extremes() {
        let h = GridHeader::new(50, 50);
        assert!(stochastic_class_layer(h, 0.0, 1).unwrap().values().iter().all(|&c| c == 0));
        let all = stochastic_class_layer(h, 1.0, 1).unwrap();
        assert!(all.values().iter().all(|&c| (1..=5).contains(&c)));
        assert!(stochastic_class_layer(h, 1.5, 1).is_err());
    }

    #[test]
    fn stochastic_fraction_and_uniformity() {
        let h = GridHeader::new(1000, 1000);
        let g = stochastic_class_layer(h, 0.25, 7).unwrap();
        let nonzero = g.values().iter().filter(|&&c| c != 0).count() as f64 / 1e6;
        assert!((nonzero - 0.25).abs() < 0.002, "{nonzero}");

        let g = stochastic_class_layer(h, 1.0, 7).unwrap();
        let mut counts = [0f64; 5];
        for &c in g.values() {
            counts[c as usize - 1] += 1.0;
        }
        let expected = 2e5;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // 4 degrees of freedom, p = 0.001
        assert!(chi2 < 18.47, "{chi2}");
    }

    #[test]
    fn stochastic_is_per_pixel() {
        let small = stochastic_class_layer(GridHeader::new(2, 5), 0.5, 3).unwrap();
        let big = stochastic_class_layer(GridHeader::new(4, 5), 0.5, 3).unwrap();
        assert_eq!(small.values(), &big.values()[..10]);
    }

    #[test]
    fn one_n_limits() {
        let base = PriorityVector::new(W.to_vec()).unwrap();
        let g = pixel([5, 4, 3, 2, 1, 1]);
        let acute = ClassGrid::filled(GridHeader::new(1, 1), 5);
        let chronic = ClassGrid::filled(GridHeader::new(1, 1), 0);
        let full = one_n_overlay(&refs(&g), &acute, &chronic, &base, 1.0).unwrap();
        assert_abs_diff_eq!(full.values()[0], 3.812, epsilon = 1e-12);
        let v = one_n_overlay(&refs(&g), &acute, &chronic, &base, 0.67).unwrap();
        assert_abs_diff_eq!(v.values()[0], 0.67 * 3.812 + 0.297 * 5.0, epsilon = 1e-12);
        assert!(one_n_overlay(&refs(&g), &acute, &chronic, &base, 0.5).is_err());
    }

    #[test]
    fn strategies_agree() {
        let h = GridHeader::new(64, 64);
        let layers: Vec<ClassGrid> = (0..6).map(|s| stochastic_class_layer(h, 1.0, s).unwrap()).collect();
        let a = weighted_overlay_with(&refs(&layers), &W, Execution::Sequential).unwrap();
        let b = weighted_overlay_with(&refs(&layers), &W, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mean_of_grids() {
        let h = GridHeader::new(1, 2);
        let a = Grid::new(h, vec![1.0, 2.0]).unwrap();
        let b = Grid::new(h, vec![3.0, -9999.0]).unwrap();
        let m = mean_overlay(&[a, b]).unwrap();
        assert_eq!(m.values(), &[2.0, -9999.0]);
    }
}
