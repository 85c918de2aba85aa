//! Synthetic six-factor scenario built from bilinear lattice noise.

use crate::rng::SplitMix64;

use super::grid::{Grid, GridHeader};
use super::RasterError;

pub const MIN_SYNTH_DIM: usize = 16;
const CELLSIZE: f64 = 30.0;
const OCTAVES: [(f64, f64); 2] = [(32.0, 0.7), (8.0, 0.3)];

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub pd: Grid,
    pub lulc: Grid,
    pub rain: Grid,
    pub dd: Grid,
    pub slope: Grid,
    pub lst: Grid,
}

impl Scenario {
    pub fn grids(&self) -> [&Grid; 6] {
        [&self.pd, &self.lulc, &self.rain, &self.dd, &self.slope, &self.lst]
    }
}

fn lattice(seed: u64, field: u64, octave: u64, i: u64, j: u64) -> f64 {
    let index = (field << 56) | (octave << 48) | (i << 24) | j;
    SplitMix64::stream(seed, index).next_f64()
}

/// Smooth field rescaled to span exactly [0, 1].
fn noise_field(seed: u64, field: u64, nrows: usize, ncols: usize) -> Vec<f64> {
    let mut v = vec![0.0; nrows * ncols];
    for (o, &(spacing, amp)) in OCTAVES.iter().enumerate() {
        for r in 0..nrows {
            let y = r as f64 / spacing;
            let (i, fy) = (y.floor() as u64, y.fract());
            for c in 0..ncols {
                let x = c as f64 / spacing;
                let (j, fx) = (x.floor() as u64, x.fract());
                let at = |di, dj| lattice(seed, field, o as u64, i + di, j + dj);
                let top = at(0, 0) * (1.0 - fx) + at(0, 1) * fx;
                let bottom = at(1, 0) * (1.0 - fx) + at(1, 1) * fx;
                v[r * ncols + c] += amp * (top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for x in &mut v {
        *x = (*x - min) / (max - min);
    }
    v
}

fn land_cover(t: f64, urban: f64) -> f64 {
    if urban > 0.8 {
        return 50.0;
    }
    let code = match t {
        t if t < 0.12 => 80,
        t if t < 0.18 => 90,
        t if t < 0.38 => 10,
        t if t < 0.48 => 20,
        t if t < 0.58 => 30,
        t if t < 0.88 => 40,
        _ => 60,
    };
    code as f64
}

/// Population density (0..8000, skewed low), land-cover codes, rainfall
/// (700..1600 mm), drainage density (0..5.5), slope (0..45 degrees) and land
/// surface temperature (20..42 C).
pub fn synth_scenario(seed: u64, nrows: usize, ncols: usize) -> Result<Scenario, RasterError> {
    if nrows < MIN_SYNTH_DIM || ncols < MIN_SYNTH_DIM {
        return Err(RasterError::ScenarioTooSmall { nrows, ncols });
    }
    let header = GridHeader { nrows, ncols, xll: 0.0, yll: 0.0, cellsize: CELLSIZE, nodata: -9999.0 };
    let field = |f: u64, map: &dyn Fn(f64) -> f64| {
        let values = noise_field(seed, f, nrows, ncols).into_iter().map(map).collect();
        Grid::new(header, values).expect("header matches")
    };
    let urban = noise_field(seed, 0, nrows, ncols);
    let cover = noise_field(seed, 1, nrows, ncols);
    let lulc = urban.iter().zip(&cover).map(|(&u, &t)| land_cover(t, u)).collect();
    Ok(Scenario {
        pd: field(0, &|t| 8000.0 * t * t),
        lulc: Grid::new(header, lulc)?,
        rain: field(2, &|t| 700.0 + 900.0 * t),
        dd: field(3, &|t| 5.5 * t),
        slope: field(4, &|t| 45.0 * t),
        lst: field(5, &|t| 20.0 + 22.0 * t),
    })
}
