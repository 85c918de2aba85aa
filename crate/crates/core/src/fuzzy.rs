//! Triangular-fuzzy perturbation of judgment matrices and Monte-Carlo
//! rank-reversal analysis.
//!
//! Each simulation `i` draws its fuzzy matrix from the SplitMix64 stream
//! `(master_seed, i)`: upper-triangle entries in row-major order, the lower
//! bound before the upper bound. Priorities follow the fuzzy geometric-mean
//! method with Buckley normalization and centroid defuzzification.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::one_n::{ACUTE_INDEX, CHRONIC_INDEX, ONE_N_FACTORS};
use crate::pairwise::{ComparisonMatrix, PairwiseError, PriorityVector};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("fuzziness must lie in [0, 1), got {0}")]
    InvalidFuzziness(f64),
    #[error("exclusion probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("baseline has {baseline} factors but priorities have {priorities}")]
    BaselineMismatch { baseline: usize, priorities: usize },
    #[error("no simulation satisfies the selection criterion")]
    NoSuchCase,
    #[error(transparent)]
    Pairwise(#[from] PairwiseError),
}

/// `(l, m, u)` with `0 < l <= m <= u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangularFuzzyNumber {
    pub l: f64,
    pub m: f64,
    pub u: f64,
}

impl TriangularFuzzyNumber {
    pub const ONE: Self = Self { l: 1.0, m: 1.0, u: 1.0 };

    pub fn new(l: f64, m: f64, u: f64) -> Option<Self> {
        (0.0 < l && l <= m && m <= u && u.is_finite()).then_some(Self { l, m, u })
    }

    pub fn crisp(v: f64) -> Self {
        Self { l: v, m: v, u: v }
    }

    /// `(1/u, 1/m, 1/l)`.
    pub fn reciprocal(self) -> Self {
        Self { l: 1.0 / self.u, m: 1.0 / self.m, u: 1.0 / self.l }
    }

    pub fn centroid(self) -> f64 {
        (self.l + self.m + self.u) / 3.0
    }
}

/// Reciprocal matrix of triangular fuzzy judgments, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyComparisonMatrix {
    n: usize,
    entries: Vec<TriangularFuzzyNumber>,
}

impl FuzzyComparisonMatrix {
    /// Builds the matrix from its strict upper triangle (row-major); the
    /// diagonal is `(1,1,1)` and the lower triangle is filled by reciprocals.
    pub fn from_upper(n: usize, upper: &[TriangularFuzzyNumber]) -> Self {
        assert_eq!(upper.len(), n * (n - 1) / 2, "upper triangle length");
        let mut entries = vec![TriangularFuzzyNumber::ONE; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                entries[i * n + j] = upper[k];
                entries[j * n + i] = upper[k].reciprocal();
                k += 1;
            }
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> TriangularFuzzyNumber {
        self.entries[i * self.n + j]
    }

    /// Row geometric means, Buckley-normalized, centroid-defuzzified and
    /// renormalized.
    pub fn priority(&self) -> PriorityVector {
        let n = self.n;
        let inv_n = 1.0 / n as f64;
        let mut g = Vec::with_capacity(n);
        for i in 0..n {
            let row = &self.entries[i * n..(i + 1) * n];
            let (mut ll, mut lm, mut lu) = (0.0, 0.0, 0.0);
            for t in row {
                ll += t.l.ln();
                lm += t.m.ln();
                lu += t.u.ln();
            }
            g.push(((ll * inv_n).exp(), (lm * inv_n).exp(), (lu * inv_n).exp()));
        }
        let sum_l: f64 = g.iter().map(|t| t.0).sum();
        let sum_m: f64 = g.iter().map(|t| t.1).sum();
        let sum_u: f64 = g.iter().map(|t| t.2).sum();
        let crisp: Vec<f64> = g
            .iter()
            .map(|&(l, m, u)| (l / sum_u + m / sum_m + u / sum_l) / 3.0)
            .collect();
        PriorityVector::normalized(crisp).expect("fuzzy weights are positive")
    }
}

/// Monte-Carlo fuzzing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FuzzSpec {
    pub fuzziness: f64,
    pub sim_count: usize,
    pub master_seed: u64,
}

impl FuzzSpec {
    pub fn new(fuzziness: f64, sim_count: usize, master_seed: u64) -> Result<Self, FuzzyError> {
        if !(0.0..1.0).contains(&fuzziness) {
            return Err(FuzzyError::InvalidFuzziness(fuzziness));
        }
        Ok(Self { fuzziness, sim_count, master_seed })
    }
}

/// Number of stream draws consumed by [`fuzzify`] for an `n`-factor matrix.
pub fn draws_per_matrix(n: usize) -> usize {
    n * (n - 1)
}

fn fuzzify_from(m: &ComparisonMatrix, fuzziness: f64, rng: &mut SplitMix64) -> FuzzyComparisonMatrix {
    let n = m.n();
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = m.get(i, j);
            let l = rng.uniform((1.0 - fuzziness) * v, v);
            let u = rng.uniform(v, (1.0 + fuzziness) * v);
            upper.push(TriangularFuzzyNumber { l, m: v, u });
        }
    }
    FuzzyComparisonMatrix::from_upper(n, &upper)
}

/// Fuzzy matrix realized for simulation `sim_index`.
pub fn fuzzify(m: &ComparisonMatrix, spec: &FuzzSpec, sim_index: usize) -> FuzzyComparisonMatrix {
    let mut rng = SplitMix64::stream(spec.master_seed, sim_index as u64);
    fuzzify_from(m, spec.fuzziness, &mut rng)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRecord {
    pub index: usize,
    pub priorities: PriorityVector,
    pub rank_order: Vec<usize>,
}

impl SimulationRecord {
    pub fn new(index: usize, priorities: PriorityVector) -> Self {
        let rank_order = priorities.rank_order();
        Self { index, priorities, rank_order }
    }
}

pub fn run_simulations(m: &ComparisonMatrix, spec: &FuzzSpec) -> Vec<SimulationRecord> {
    run_simulations_with(m, spec, Execution::default())
}

pub fn run_simulations_with(m: &ComparisonMatrix, spec: &FuzzSpec, exec: Execution) -> Vec<SimulationRecord> {
    exec.map_range(spec.sim_count, |i| SimulationRecord::new(i, fuzzify(m, spec, i).priority()))
}

/// Reversal count for one ordered baseline pair (`higher` outranks `lower`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairCount {
    pub higher: usize,
    pub lower: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReversalReport {
    pub total_sims: u64,
    /// Pairs adjacent in the baseline, in baseline order.
    pub first_order: Vec<PairCount>,
    /// Pairs two places apart in the baseline, in baseline order.
    pub second_order: Vec<PairCount>,
    pub sims_with_any_reversal: u64,
    pub sims_with_second_order: u64,
}

impl ReversalReport {
    pub fn first(&self, higher: usize, lower: usize) -> u64 {
        lookup(&self.first_order, higher, lower)
    }

    pub fn second(&self, higher: usize, lower: usize) -> u64 {
        lookup(&self.second_order, higher, lower)
    }

    pub fn first_order_total(&self) -> u64 {
        self.first_order.iter().map(|p| p.count).sum()
    }

    pub fn second_order_total(&self) -> u64 {
        self.second_order.iter().map(|p| p.count).sum()
    }

    pub fn reversal_rate(&self) -> f64 {
        if self.total_sims == 0 {
            0.0
        } else {
            self.sims_with_any_reversal as f64 / self.total_sims as f64
        }
    }

    /// Pair table: `higher,lower,order,count` with names substituted.
    pub fn pairs_csv(&self, names: &[String]) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(["higher", "lower", "order", "count"]).expect("in-memory write");
        for (order, pairs) in [(1, &self.first_order), (2, &self.second_order)] {
            for p in pairs {
                let name = |i: usize| names.get(i).cloned().unwrap_or_else(|| i.to_string());
                w.write_record([name(p.higher), name(p.lower), order.to_string(), p.count.to_string()])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Single-record summary: `total,with_reversal,rate`.
    pub fn rate_csv(&self) -> String {
        format!(
            "total,with_reversal,rate\n{},{},{}\n",
            self.total_sims,
            self.sims_with_any_reversal,
            self.reversal_rate()
        )
    }
}

fn lookup(pairs: &[PairCount], higher: usize, lower: usize) -> u64 {
    pairs
        .iter()
        .find(|p| p.higher == higher && p.lower == lower)
        .map_or(0, |p| p.count)
}

/// Accumulates reversal counts keyed by baseline positions.
struct Tally<'a> {
    baseline: &'a [usize],
    first: BTreeMap<(usize, usize), u64>,
    second: BTreeMap<(usize, usize), u64>,
    total: u64,
    any: u64,
    any_second: u64,
}

impl<'a> Tally<'a> {
    /// `patterns` lists every presence mask that can occur; the pairs they
    /// make adjacent are reported even when their count is zero.
    fn new(baseline: &'a [usize], patterns: &[u64]) -> Self {
        let mut first = BTreeMap::new();
        let mut second = BTreeMap::new();
        for &mask in patterns {
            let present = present_positions(baseline, mask);
            for w in present.windows(2) {
                first.insert((w[0], w[1]), 0);
            }
            for w in present.windows(3) {
                second.insert((w[0], w[2]), 0);
            }
        }
        Self { baseline, first, second, total: 0, any: 0, any_second: 0 }
    }

    fn add(&mut self, priorities: &[f64], mask: u64) {
        let present = present_positions(self.baseline, mask);
        let p = |pos: usize| priorities[self.baseline[pos]];
        let mut any = false;
        let mut any_second = false;
        for w in present.windows(2) {
            if p(w[0]) < p(w[1]) {
                *self.first.entry((w[0], w[1])).or_insert(0) += 1;
                any = true;
            }
        }
        for w in present.windows(3) {
            if p(w[0]) < p(w[2]) {
                *self.second.entry((w[0], w[2])).or_insert(0) += 1;
                any_second = true;
            }
        }
        self.total += 1;
        self.any += u64::from(any || any_second);
        self.any_second += u64::from(any_second);
    }

    fn finish(self) -> ReversalReport {
        let to_pairs = |m: BTreeMap<(usize, usize), u64>| {
            m.into_iter()
                .map(|((a, b), count)| PairCount { higher: self.baseline[a], lower: self.baseline[b], count })
                .collect()
        };
        ReversalReport {
            total_sims: self.total,
            first_order: to_pairs(self.first),
            second_order: to_pairs(self.second),
            sims_with_any_reversal: self.any,
            sims_with_second_order: self.any_second,
        }
    }
}

fn present_positions(baseline: &[usize], mask: u64) -> Vec<usize> {
    (0..baseline.len()).filter(|&pos| mask & (1 << baseline[pos]) != 0).collect()
}

fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub fn count_reversals(batch: &[SimulationRecord], baseline: &[usize]) -> Result<ReversalReport, FuzzyError> {
    let mask = full_mask(baseline.len());
    let mut tally = Tally::new(baseline, &[mask]);
    for rec in batch {
        if rec.priorities.len() != baseline.len() {
            return Err(FuzzyError::BaselineMismatch {
                baseline: baseline.len(),
                priorities: rec.priorities.len(),
            });
        }
        tally.add(&rec.priorities, mask);
    }
    Ok(tally.finish())
}

fn has_reversal(priorities: &[f64], baseline: &[usize]) -> bool {
    baseline.windows(2).any(|w| priorities[w[0]] < priorities[w[1]])
}

/// First simulation in which the two top baseline factors swap.
pub fn select_case1<'a>(batch: &'a [SimulationRecord], baseline: &[usize]) -> Result<&'a SimulationRecord, FuzzyError> {
    if baseline.len() < 2 {
        return Err(FuzzyError::NoSuchCase);
    }
    batch
        .iter()
        .find(|r| r.priorities[baseline[0]] < r.priorities[baseline[1]])
        .ok_or(FuzzyError::NoSuchCase)
}

/// Reversal-containing simulation farthest (L1) from the crisp weights;
/// the earliest one wins ties.
pub fn select_case2<'a>(
    batch: &'a [SimulationRecord],
    crisp: &PriorityVector,
) -> Result<&'a SimulationRecord, FuzzyError> {
    let baseline = crisp.rank_order();
    let mut best: Option<(&SimulationRecord, f64)> = None;
    for rec in batch.iter().filter(|r| has_reversal(&r.priorities, &baseline)) {
        let d = rec.priorities.l1_distance(crisp);
        if best.is_none_or(|(_, bd)| d > bd) {
            best = Some((rec, d));
        }
    }
    best.map(|(r, _)| r).ok_or(FuzzyError::NoSuchCase)
}

/// Simulations that contain at least one reversal against `baseline`.
pub fn reversal_records<'a>(batch: &'a [SimulationRecord], baseline: &[usize]) -> Vec<&'a SimulationRecord> {
    batch.iter().filter(|r| has_reversal(&r.priorities, baseline)).collect()
}

/// Exclusion probabilities for the unknown-factor layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exclusion {
    pub acute: f64,
    pub chronic: f64,
}

impl Default for Exclusion {
    fn default() -> Self {
        Self { acute: 0.975, chronic: 0.75 }
    }
}

/// Fuzzy 1-N protocol: fuzz the consistent 8x8 matrix of `weights8`, then
/// drop the acute and chronic factors per simulation before counting
/// reversals on the survivors.
pub fn fuzzy_one_n(weights8: &PriorityVector, spec: &FuzzSpec, exclusion: Exclusion) -> Result<ReversalReport, FuzzyError> {
    fuzzy_one_n_with(weights8, spec, exclusion, Execution::default())
}

pub fn fuzzy_one_n_with(
    weights8: &PriorityVector,
    spec: &FuzzSpec,
    exclusion: Exclusion,
    exec: Execution,
) -> Result<ReversalReport, FuzzyError> {
    for p in [exclusion.acute, exclusion.chronic] {
        if !(0.0..=1.0).contains(&p) {
            return Err(FuzzyError::InvalidProbability(p));
        }
    }
    if weights8.len() != ONE_N_FACTORS {
        return Err(FuzzyError::BaselineMismatch { baseline: ONE_N_FACTORS, priorities: weights8.len() });
    }
    let matrix = ComparisonMatrix::consistent_from_weights(weights8)?;
    let baseline = weights8.rank_order();
    let all = full_mask(ONE_N_FACTORS);
    let acute_bit = 1u64 << ACUTE_INDEX;
    let chronic_bit = 1u64 << CHRONIC_INDEX;

    let sims = exec.map_range(spec.sim_count, |i| {
        let mut rng = SplitMix64::stream(spec.master_seed, i as u64);
        let priorities = fuzzify_from(&matrix, spec.fuzziness, &mut rng).priority();
        let mut mask = all;
        if rng.next_f64() < exclusion.acute {
            mask &= !acute_bit;
        }
        if rng.next_f64() < exclusion.chronic {
            mask &= !chronic_bit;
        }
        (priorities, mask)
    });

    let mut patterns = Vec::new();
    for (acute_present, chronic_present) in [(true, true), (true, false), (false, true), (false, false)] {
        let possible = |present: bool, p_excl: f64| if present { p_excl < 1.0 } else { p_excl > 0.0 };
        if possible(acute_present, exclusion.acute) && possible(chronic_present, exclusion.chronic) {
            let mut mask = all;
            if !acute_present {
                mask &= !acute_bit;
            }
            if !chronic_present {
                mask &= !chronic_bit;
            }
            patterns.push(mask);
        }
    }
    let mut tally = Tally::new(&baseline, &patterns);
    for (priorities, mask) in &sims {
        tally.add(priorities, *mask);
    }
    Ok(tally.finish())
}
