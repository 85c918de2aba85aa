//! Standardized comparison layers.

use serde::Serialize;

use super::grid::{check_aligned, format_value, Grid};
use super::RasterError;

/// `(v - mean) / sd` over valid pixels, population standard deviation.
pub fn zscore(grid: &Grid) -> Result<Grid, RasterError> {
    let mut n = 0usize;
    let mut sum = 0.0;
    for v in grid.valid_values() {
        n += 1;
        sum += v;
    }
    if n < 2 {
        return Err(RasterError::ZeroVariance);
    }
    let mean = sum / n as f64;
    let var = grid.valid_values().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let sd = var.sqrt();
    if sd.is_nan() || sd <= 0.0 {
        return Err(RasterError::ZeroVariance);
    }
    let nodata = grid.header.nodata;
    let values = grid.values().iter().map(|&v| if v == nodata { nodata } else { (v - mean) / sd }).collect();
    Ok(grid.with_values(values))
}

/// `z(ahp) - z(variant)`; positive where the AHP score ranks the pixel as
/// more vulnerable.
pub fn diff_layer(ahp: &Grid, variant: &Grid) -> Result<Grid, RasterError> {
    check_aligned([&ahp.header, &variant.header].into_iter())?;
    let a = zscore(ahp)?;
    let b = zscore(variant)?;
    let nodata = ahp.header.nodata;
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| if a.is_nodata(x) || b.is_nodata(y) { nodata } else { x - y })
        .collect();
    Ok(ahp.with_values(values))
}

/// Per-pixel population standard deviation across the z-scored grids.
pub fn stddev_stack(grids: &[&Grid]) -> Result<Grid, RasterError> {
    if grids.len() < 2 {
        return Err(RasterError::GridShapeMismatch(format!("stack of {} grids, need at least 2", grids.len())));
    }
    check_aligned(grids.iter().map(|g| &g.header))?;
    let z: Vec<Grid> = grids.iter().map(|g| zscore(g)).collect::<Result<_, _>>()?;
    let header = grids[0].header;
    let k = z.len() as f64;
    let values = (0..header.len())
        .map(|p| {
            if z.iter().any(|g| g.is_nodata(g.values()[p])) {
                return header.nodata;
            }
            let mean = z.iter().map(|g| g.values()[p]).sum::<f64>() / k;
            let var = z.iter().map(|g| (g.values()[p] - mean).powi(2)).sum::<f64>() / k;
            var.sqrt()
        })
        .collect();
    Grid::new(header, values)
}

/// Variant layers tracked by the composite, each with its own bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Nested,
    Anp,
    MeanFuzzy,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Nested, Variant::Anp, Variant::MeanFuzzy];

    pub fn bit(self) -> u8 {
        match self {
            Variant::Nested => 1,
            Variant::Anp => 2,
            Variant::MeanFuzzy => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Nested => "nested",
            Variant::Anp => "anp",
            Variant::MeanFuzzy => "mean_fuzzy",
        }
    }
}

/// Z-scored AHP base with signed outlier masks per variant.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeLayer {
    pub base: Grid,
    pub masks: Vec<(Variant, Vec<i8>)>,
}

impl CompositeLayer {
    /// Bitwise OR of [`Variant::bit`] for every variant flagged at each pixel.
    pub fn overlap(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.base.values().len()];
        for (variant, mask) in &self.masks {
            for (o, &m) in out.iter_mut().zip(mask) {
                if m != 0 {
                    *o |= variant.bit();
                }
            }
        }
        out
    }

    fn keep(&self, sign: i8) -> CompositeLayer {
        let masks = self
            .masks
            .iter()
            .map(|(v, m)| (*v, m.iter().map(|&x| if x == sign { x } else { 0 }).collect()))
            .collect();
        CompositeLayer { base: self.base.clone(), masks }
    }

    /// Only pixels where the AHP score exceeds the variant.
    pub fn positive(&self) -> CompositeLayer {
        self.keep(1)
    }

    pub fn negative(&self) -> CompositeLayer {
        self.keep(-1)
    }

    pub fn mask(&self, variant: Variant) -> Option<&[i8]> {
        self.masks.iter().find(|(v, _)| *v == variant).map(|(_, m)| m.as_slice())
    }

    /// Overlap code as a grid (nodata where the base is nodata).
    pub fn overlap_grid(&self) -> Grid {
        let values = self
            .overlap()
            .iter()
            .zip(self.base.values())
            .map(|(&o, &b)| if self.base.is_nodata(b) { b } else { o as f64 })
            .collect();
        self.base.with_values(values)
    }
}

pub fn composite(base_z: &Grid, diffs: &[(Variant, &Grid)], threshold: f64) -> Result<CompositeLayer, RasterError> {
    check_aligned(std::iter::once(&base_z.header).chain(diffs.iter().map(|(_, g)| &g.header)))?;
    let masks = diffs
        .iter()
        .map(|(variant, d)| {
            let mask = d
                .values()
                .iter()
                .map(|&v| {
                    if d.is_nodata(v) || v.abs() < threshold {
                        0
                    } else if v > 0.0 {
                        1
                    } else {
                        -1
                    }
                })
                .collect();
            (*variant, mask)
        })
        .collect();
    Ok(CompositeLayer { base: base_z.clone(), masks })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub bin_lower: f64,
    pub bin_upper: f64,
    pub count: u64,
}

/// Equal-width bins over `[min, max]`; the maximum lands in the last bin.
/// A constant grid yields one bin.
pub fn histogram(grid: &Grid, bin_count: usize) -> Result<Vec<Bin>, RasterError> {
    let (mut min, mut max, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0u64);
    for v in grid.valid_values() {
        min = min.min(v);
        max = max.max(v);
        n += 1;
    }
    if n == 0 || bin_count == 0 {
        return Err(RasterError::EmptyGrid);
    }
    if min == max {
        return Ok(vec![Bin { bin_lower: min, bin_upper: max, count: n }]);
    }
    let width = (max - min) / bin_count as f64;
    let mut bins: Vec<Bin> = (0..bin_count)
        .map(|i| Bin {
            bin_lower: min + width * i as f64,
            bin_upper: if i + 1 == bin_count { max } else { min + width * (i + 1) as f64 },
            count: 0,
        })
        .collect();
    for v in grid.valid_values() {
        let i = (((v - min) / (max - min)) * bin_count as f64) as usize;
        bins[i.min(bin_count - 1)].count += 1;
    }
    Ok(bins)
}

pub fn histogram_csv(bins: &[Bin]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["bin_lower", "bin_upper", "count"]).expect("in-memory write");
    for b in bins {
        w.write_record([format_value(b.bin_lower), format_value(b.bin_upper), b.count.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}
