//! Weight split for the 1-N variant: the six known factors keep a share `N`
//! of the total and the remainder goes to two unknown-factor layers.

use crate::pairwise::{PairwiseError, PriorityVector};

pub const ACUTE_INDEX: usize = 6;
pub const CHRONIC_INDEX: usize = 7;
pub const ONE_N_FACTORS: usize = 8;

/// Fraction of `1 - N` assigned to the acute layer; chronic gets the rest.
pub const ACUTE_SHARE: f64 = 0.9;

pub const MIN_KNOWN_SHARE: f64 = 0.67;

/// Eight-factor weights `(N·w_1 .. N·w_6, 0.9·(1−N), 0.1·(1−N))`.
pub fn one_n_weights(base: &PriorityVector, known_share: f64) -> Result<PriorityVector, PairwiseError> {
    if !(MIN_KNOWN_SHARE..=1.0).contains(&known_share) {
        return Err(PairwiseError::InvalidWeights(format!(
            "known share N = {known_share} outside [{MIN_KNOWN_SHARE}, 1]"
        )));
    }
    let unknown = 1.0 - known_share;
    let mut w: Vec<f64> = base.iter().map(|x| x * known_share).collect();
    w.push(ACUTE_SHARE * unknown);
    w.push((1.0 - ACUTE_SHARE) * unknown);
    PriorityVector::new(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference_base() -> PriorityVector {
        PriorityVector::new(vec![0.408, 0.268, 0.138, 0.100, 0.058, 0.028]).unwrap()
    }

    #[test]
    fn worst_case_split() {
        let w = one_n_weights(&reference_base(), 0.67).unwrap();
        let expected = [0.27336, 0.17956, 0.09246, 0.067, 0.03886, 0.01876, 0.297, 0.033];
        for (got, want) in w.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn average_case_split() {
        let w = one_n_weights(&reference_base(), 0.835).unwrap();
        assert_abs_diff_eq!(w[ACUTE_INDEX], 0.1485, epsilon = 1e-12);
        assert_abs_diff_eq!(w[CHRONIC_INDEX], 0.0165, epsilon = 1e-12);
    }

    #[test]
    fn full_share_leaves_unknowns_empty() {
        let w = one_n_weights(&reference_base(), 1.0).unwrap();
        assert_eq!(&w[..6], reference_base().as_slice());
        assert_eq!(w[ACUTE_INDEX], 0.0);
        assert_eq!(w[CHRONIC_INDEX], 0.0);
    }

    #[test]
    fn share_out_of_range() {
        assert!(one_n_weights(&reference_base(), 0.5).is_err());
        assert!(one_n_weights(&reference_base(), 1.2).is_err());
    }
}
