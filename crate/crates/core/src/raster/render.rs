//! Color-ramp rendering to binary PPM.

use super::compare::CompositeLayer;
use super::grid::Grid;
use super::RasterError;

pub const NODATA_COLOR: [u8; 3] = [128, 128, 128];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stretch {
    /// Fixed range shared across maps.
    Global { min: f64, max: f64 },
    LocalMinMax,
    Percentile5_95,
}

/// Evenly spaced color stops.
#[derive(Debug, Clone, PartialEq)]
pub struct Ramp {
    stops: Vec<[u8; 3]>,
}

impl Default for Ramp {
    /// Blue (low) through pale yellow to red (high).
    fn default() -> Self {
        Self {
            stops: vec![[0x2c, 0x7b, 0xb6], [0xab, 0xd9, 0xe9], [0xff, 0xff, 0xbf], [0xfd, 0xae, 0x61], [0xd7, 0x19, 0x1c]],
        }
    }
}

impl Ramp {
    pub fn new(stops: Vec<[u8; 3]>) -> Option<Self> {
        (stops.len() >= 2).then_some(Self { stops })
    }

    pub fn color(&self, t: f64) -> [u8; 3] {
        let t = t.clamp(0.0, 1.0);
        let segments = self.stops.len() - 1;
        let pos = t * segments as f64;
        let i = (pos.floor() as usize).min(segments - 1);
        let f = pos - i as f64;
        let (a, b) = (self.stops[i], self.stops[i + 1]);
        std::array::from_fn(|k| (a[k] as f64 + (b[k] as f64 - a[k] as f64) * f).round() as u8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl Image {
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }
}

/// Linear-interpolation percentile of sorted data, `q` in [0, 1].
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Stretch bounds for `grid`.
pub fn stretch_range(grid: &Grid, stretch: Stretch) -> Result<(f64, f64), RasterError> {
    let (min, max) = match stretch {
        Stretch::Global { min, max } => (min, max),
        Stretch::LocalMinMax => {
            let mut it = grid.valid_values().peekable();
            if it.peek().is_none() {
                return Err(RasterError::EmptyGrid);
            }
            it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
        }
        Stretch::Percentile5_95 => {
            let mut v: Vec<f64> = grid.valid_values().collect();
            if v.is_empty() {
                return Err(RasterError::EmptyGrid);
            }
            v.sort_by(f64::total_cmp);
            (percentile(&v, 0.05), percentile(&v, 0.95))
        }
    };
    if min.is_nan() || max.is_nan() || min >= max {
        return Err(RasterError::DegenerateRange { min, max });
    }
    Ok((min, max))
}

pub fn render(grid: &Grid, stretch: Stretch, ramp: &Ramp) -> Result<Image, RasterError> {
    let (min, max) = stretch_range(grid, stretch)?;
    let mut rgb = Vec::with_capacity(grid.values().len() * 3);
    for &v in grid.values() {
        let c = if grid.is_nodata(v) { NODATA_COLOR } else { ramp.color((v - min) / (max - min)) };
        rgb.extend_from_slice(&c);
    }
    Ok(Image { width: grid.header.ncols, height: grid.header.nrows, rgb })
}

/// Marker for an overlap code; primaries for single variants, secondaries
/// for pairs, black for all three.
pub fn overlap_color(code: u8) -> Option<[u8; 3]> {
    match code {
        0 => None,
        1 => Some([228, 26, 28]),   // nested: red
        2 => Some([55, 126, 184]),  // anp: blue
        4 => Some([255, 221, 0]),   // mean fuzzy: yellow
        3 => Some([152, 78, 163]),  // red + blue: purple
        5 => Some([255, 127, 0]),   // red + yellow: orange
        6 => Some([77, 175, 74]),   // blue + yellow: green
        _ => Some([0, 0, 0]),
    }
}

/// Gray base layer (z in [-3, 3]) with outlier markers on top.
pub fn render_composite(layer: &CompositeLayer) -> Image {
    let base = &layer.base;
    let overlap = layer.overlap();
    let mut rgb = Vec::with_capacity(overlap.len() * 3);
    for (&v, &code) in base.values().iter().zip(&overlap) {
        let c = if base.is_nodata(v) {
            NODATA_COLOR
        } else if let Some(marker) = overlap_color(code) {
            marker
        } else {
            let g = (((v + 3.0) / 6.0).clamp(0.0, 1.0) * 200.0 + 40.0).round() as u8;
            [g, g, g]
        };
        rgb.extend_from_slice(&c);
    }
    Image { width: base.header.ncols, height: base.header.nrows, rgb }
}
