//! In-memory rasters and the per-pixel scoring kernels.

mod classify;
mod compare;
mod grid;
mod jenks;
mod overlay;
mod render;
mod synth;

pub use classify::{classify, classify_categorical, BreakSet, CategoryMap, Orientation};
pub use compare::{composite, diff_layer, histogram, histogram_csv, stddev_stack, zscore, Bin, CompositeLayer, Variant};
pub use grid::{check_grids_aligned, format_value, parse_ascii, read_grid, to_ascii, write_grid, ClassGrid, Grid, GridHeader, CLASS_NODATA, DEFAULT_NODATA};
pub use jenks::{jenks_breaks, within_class_ssd};
pub use overlay::{
    mean_overlay, nested_overlay, nested_overlay_with, one_n_overlay, stochastic_class_layer, weighted_overlay,
    weighted_overlay_with, SubweightMatrix, CLASSES,
};
pub use render::{overlap_color, render, render_composite, stretch_range, Image, Ramp, Stretch, NODATA_COLOR};
pub use synth::{synth_scenario, Scenario, MIN_SYNTH_DIM};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("row {row} has {found} values, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("non-numeric cell {token:?} at row {row}, column {col}")]
    NonNumericCell { row: usize, col: usize, token: String },
    #[error("value {0} is not a class (1..5)")]
    InvalidClassValue(f64),
    #[error("grids are not co-registered: {0}")]
    GridShapeMismatch(String),
    #[error("breaks must be 4 strictly ascending finite values, got {0:?}")]
    InvalidBreaks(Vec<f64>),
    #[error("category code {0} has no class")]
    UnmappedCategory(i64),
    #[error("class {class} for category {code} is outside 1..5")]
    InvalidCategoryClass { code: i64, class: u8 },
    #[error("need at least {k} distinct values, found {distinct}")]
    TooFewDistinctValues { k: usize, distinct: usize },
    #[error("grid has zero variance")]
    ZeroVariance,
    #[error("grid has no valid pixels")]
    EmptyGrid,
    #[error("stretch range is degenerate: [{min}, {max}]")]
    DegenerateRange { min: f64, max: f64 },
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("invalid subweights: {0}")]
    InvalidSubweights(String),
    #[error("weights have {weights} entries for {grids} grids")]
    WeightCountMismatch { weights: usize, grids: usize },
    #[error("scenario needs at least {MIN_SYNTH_DIM} rows and columns, got {nrows}x{ncols}")]
    ScenarioTooSmall { nrows: usize, ncols: usize },
    #[error(transparent)]
    Pairwise(#[from] crate::pairwise::PairwiseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
