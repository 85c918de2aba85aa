//! Pipeline configuration (TOML).
//!
//! ```toml
//! seed = 42
//! output_dir = "out"
//! comparison = [[1, 2], [0.5, 1]]    # 6x6 factor judgments
//!
//! [[factors]]                        # exactly six, in comparison order
//! name = "population_density"
//! grid = "synthetic"                 # or a path to an ESRI ASCII grid
//! breaks = [865, 1600, 2680, 4036]   # or: categories = { 50 = 5, 80 = 1 }
//! orientation = "higher_is_worse"
//! subcriteria = [[1, 4], [0.25, 1]]  # 5x5, class 5 first
//!
//! [anp]                              # w21, w22, w32, w33, w34
//! [fuzzy]                            # fuzziness, sim_count, master_seed, mean_sample, mean_seed
//! [one_n]                            # known_shares, occurrence, exclusion, seeds, base_weights
//! ```
//!
//! See `docs/config.md` for every key and its default.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::anp::SupermatrixBlocks;
use crate::fuzzy::{Exclusion, FuzzSpec};
use crate::one_n::MIN_KNOWN_SHARE;
use crate::pairwise::{ComparisonMatrix, PriorityVector};
use crate::raster::{BreakSet, CategoryMap, Orientation, SubweightMatrix, MIN_SYNTH_DIM};

pub const FACTOR_COUNT: usize = 6;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_FUZZINESS: f64 = 0.95;
pub const DEFAULT_SIM_COUNT: usize = 100_000;
pub const DEFAULT_THRESHOLD: f64 = 2.0;
pub const DEFAULT_KNOWN_SHARES: [f64; 2] = [0.67, 0.835];
pub const DEFAULT_MEAN_SAMPLE: usize = 500;
pub const DEFAULT_HISTOGRAM_BINS: usize = 20;
pub const DEFAULT_DIM: usize = 256;
pub const DEFAULT_ACUTE_OCCURRENCE: f64 = 0.025;
pub const DEFAULT_CHRONIC_OCCURRENCE: f64 = 0.25;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Schema(String),
    #[error("{field}: {source}")]
    Validation {
        field: String,
        #[source]
        source: crate::Error,
    },
}

fn invalid(field: impl Into<String>, source: impl Into<crate::Error>) -> ConfigError {
    ConfigError::Validation { field: field.into(), source: source.into() }
}

fn schema(msg: impl Into<String>) -> ConfigError {
    ConfigError::Schema(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    output_dir: Option<String>,
    nrows: Option<usize>,
    ncols: Option<usize>,
    composite_threshold: Option<f64>,
    histogram_bins: Option<usize>,
    comparison: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    factors: Vec<RawFactor>,
    anp: Option<RawAnp>,
    #[serde(default)]
    fuzzy: RawFuzzy,
    #[serde(default)]
    one_n: RawOneN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFactor {
    name: String,
    grid: String,
    breaks: Option<Vec<f64>>,
    orientation: Option<Orientation>,
    categories: Option<BTreeMap<String, u8>>,
    subcriteria: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnp {
    w21: Vec<f64>,
    w22: Vec<Vec<f64>>,
    w32: Vec<Vec<f64>>,
    w33: Vec<Vec<f64>>,
    w34: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFuzzy {
    fuzziness: Option<f64>,
    sim_count: Option<usize>,
    master_seed: Option<u64>,
    mean_sample: Option<usize>,
    mean_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOneN {
    known_shares: Option<Vec<f64>>,
    acute_occurrence: Option<f64>,
    chronic_occurrence: Option<f64>,
    acute_exclusion: Option<f64>,
    chronic_exclusion: Option<f64>,
    acute_seed: Option<u64>,
    chronic_seed: Option<u64>,
    fuzzy_seed: Option<u64>,
    base_weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridSource {
    Synthetic,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classing {
    Breaks(BreakSet),
    Categories(CategoryMap),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorConfig {
    pub name: String,
    pub source: GridSource,
    pub classing: Classing,
    /// Within-factor judgments, class 5 first.
    pub subcriteria: ComparisonMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneNConfig {
    pub known_shares: Vec<f64>,
    pub acute_occurrence: f64,
    pub chronic_occurrence: f64,
    pub exclusion: Exclusion,
    pub acute_seed: u64,
    pub chronic_seed: u64,
    pub fuzzy_seed: u64,
    /// Six-factor weights split by the 1-N rule; the computed AHP vector when absent.
    pub base_weights: Option<PriorityVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub nrows: usize,
    pub ncols: usize,
    pub comparison: ComparisonMatrix,
    pub factors: Vec<FactorConfig>,
    pub subweights: SubweightMatrix,
    pub anp: SupermatrixBlocks,
    pub fuzzy: FuzzSpec,
    pub mean_sample: usize,
    pub mean_seed: u64,
    pub one_n: OneNConfig,
    pub composite_threshold: f64,
    pub histogram_bins: usize,
    /// SHA-256 of the effective configuration.
    pub digest: String,
}

impl PipelineConfig {
    pub fn factor_names(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.name.clone()).collect()
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub sim_count: Option<usize>,
}

pub fn load_config(path: impl AsRef<Path>) -> Result<PipelineConfig, ConfigError> {
    load_config_with(path, &Overrides::default())
}

pub fn load_config_with(path: impl AsRef<Path>, overrides: &Overrides) -> Result<PipelineConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base, overrides)
}

/// Parses TOML text; relative grid paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path, overrides: &Overrides) -> Result<PipelineConfig, ConfigError> {
    let mut raw: RawConfig = toml::from_str(text).map_err(|e| schema(e.to_string().trim_end().to_string()))?;
    if let Some(seed) = overrides.seed {
        raw.seed = Some(seed);
    }
    if let Some(n) = overrides.sim_count {
        raw.fuzzy.sim_count = Some(n);
    }
    let mut config = resolve(raw, base_dir)?;
    // A command-line directory is taken as given, not relative to the file.
    if let Some(dir) = &overrides.output_dir {
        config.output_dir = dir.clone();
    }
    Ok(config)
}

fn resolve(raw: RawConfig, base_dir: &Path) -> Result<PipelineConfig, ConfigError> {
    // The output location does not change any artifact, so it stays out of the digest.
    let digest = {
        let mut keyed = raw.clone();
        keyed.output_dir = None;
        hex::encode(Sha256::digest(serde_json::to_vec(&keyed).expect("config serializes")))
    };
    let seed = raw.seed.unwrap_or(DEFAULT_SEED);

    if raw.factors.len() != FACTOR_COUNT {
        return Err(schema(format!("factors: expected {FACTOR_COUNT}, found {}", raw.factors.len())));
    }
    let comparison = raw.comparison.ok_or_else(|| schema("comparison: missing"))?;
    if comparison.len() != FACTOR_COUNT {
        return Err(schema(format!("comparison: expected {FACTOR_COUNT} rows, found {}", comparison.len())));
    }
    let comparison = ComparisonMatrix::new(comparison).map_err(|e| invalid("comparison", e))?;
    comparison.consistency().map_err(|e| invalid("comparison", e))?;

    let nrows = raw.nrows.unwrap_or(DEFAULT_DIM);
    let ncols = raw.ncols.unwrap_or(DEFAULT_DIM);
    let mut factors = Vec::with_capacity(FACTOR_COUNT);
    let mut vectors = Vec::with_capacity(FACTOR_COUNT);
    for (i, f) in raw.factors.into_iter().enumerate() {
        let field = |k: &str| format!("factors[{i}].{k}");
        let source = if f.grid == "synthetic" {
            if nrows < MIN_SYNTH_DIM || ncols < MIN_SYNTH_DIM {
                return Err(schema(format!("nrows/ncols: synthetic grids need at least {MIN_SYNTH_DIM}")));
            }
            GridSource::Synthetic
        } else {
            GridSource::File(base_dir.join(&f.grid))
        };
        let classing = match (f.breaks, f.categories) {
            (Some(b), None) => {
                let orientation = f.orientation.unwrap_or(Orientation::HigherIsWorse);
                Classing::Breaks(BreakSet::new(&b, orientation).map_err(|e| invalid(field("breaks"), e))?)
            }
            (None, Some(c)) => {
                let mut pairs = Vec::with_capacity(c.len());
                for (code, class) in c {
                    let code: i64 =
                        code.parse().map_err(|_| schema(format!("{}: code {code:?} is not an integer", field("categories"))))?;
                    pairs.push((code, class));
                }
                Classing::Categories(CategoryMap::new(pairs).map_err(|e| invalid(field("categories"), e))?)
            }
            _ => return Err(schema(format!("{}: exactly one of breaks or categories", field("breaks")))),
        };
        if f.subcriteria.len() != 5 {
            return Err(schema(format!("{}: expected 5 rows, found {}", field("subcriteria"), f.subcriteria.len())));
        }
        let subcriteria = ComparisonMatrix::new(f.subcriteria).map_err(|e| invalid(field("subcriteria"), e))?;
        subcriteria.consistency().map_err(|e| invalid(field("subcriteria"), e))?;
        vectors.push(subcriteria.priority_vector());
        factors.push(FactorConfig { name: f.name, source, classing, subcriteria });
    }
    let subweights = SubweightMatrix::from_priority_vectors(&vectors).map_err(|e| invalid("factors.subcriteria", e))?;
    if !subweights.is_increasing() {
        return Err(invalid(
            "factors.subcriteria",
            crate::raster::RasterError::InvalidSubweights("class 5 must outweigh class 1".into()),
        ));
    }

    let a = raw.anp.ok_or_else(|| schema("anp: missing"))?;
    let anp = SupermatrixBlocks::from_rows(&a.w21, &a.w22, &a.w32, &a.w33, &a.w34).map_err(|e| invalid("anp", e))?;

    let fuzzy = FuzzSpec::new(
        raw.fuzzy.fuzziness.unwrap_or(DEFAULT_FUZZINESS),
        raw.fuzzy.sim_count.unwrap_or(DEFAULT_SIM_COUNT),
        raw.fuzzy.master_seed.unwrap_or(seed),
    )
    .map_err(|e| invalid("fuzzy", e))?;

    let o = raw.one_n;
    let known_shares = o.known_shares.unwrap_or_else(|| DEFAULT_KNOWN_SHARES.to_vec());
    if let Some(&bad) = known_shares.iter().find(|n| !(MIN_KNOWN_SHARE..=1.0).contains(*n)) {
        return Err(schema(format!("one_n.known_shares: {bad} outside [{MIN_KNOWN_SHARE}, 1]")));
    }
    let probability = |name: &str, v: Option<f64>, default: f64| {
        let p = v.unwrap_or(default);
        if (0.0..=1.0).contains(&p) {
            Ok(p)
        } else {
            Err(schema(format!("one_n.{name}: {p} outside [0, 1]")))
        }
    };
    let default_exclusion = Exclusion::default();
    let base_weights = match o.base_weights {
        Some(w) => {
            if w.len() != FACTOR_COUNT {
                return Err(schema(format!("one_n.base_weights: expected {FACTOR_COUNT}, found {}", w.len())));
            }
            Some(PriorityVector::new(w).map_err(|e| invalid("one_n.base_weights", e))?)
        }
        None => None,
    };
    let one_n = OneNConfig {
        known_shares,
        acute_occurrence: probability("acute_occurrence", o.acute_occurrence, DEFAULT_ACUTE_OCCURRENCE)?,
        chronic_occurrence: probability("chronic_occurrence", o.chronic_occurrence, DEFAULT_CHRONIC_OCCURRENCE)?,
        exclusion: Exclusion {
            acute: probability("acute_exclusion", o.acute_exclusion, default_exclusion.acute)?,
            chronic: probability("chronic_exclusion", o.chronic_exclusion, default_exclusion.chronic)?,
        },
        acute_seed: o.acute_seed.unwrap_or(seed.wrapping_add(1)),
        chronic_seed: o.chronic_seed.unwrap_or(seed.wrapping_add(2)),
        fuzzy_seed: o.fuzzy_seed.unwrap_or(seed.wrapping_add(3)),
        base_weights,
    };

    let composite_threshold = raw.composite_threshold.unwrap_or(DEFAULT_THRESHOLD);
    if !(composite_threshold.is_finite() && composite_threshold > 0.0) {
        return Err(schema(format!("composite_threshold: {composite_threshold} must be positive")));
    }
    let histogram_bins = raw.histogram_bins.unwrap_or(DEFAULT_HISTOGRAM_BINS);
    if histogram_bins == 0 {
        return Err(schema("histogram_bins: must be positive"));
    }

    Ok(PipelineConfig {
        seed,
        output_dir: base_dir.join(raw.output_dir.unwrap_or_else(|| "out".into())),
        nrows,
        ncols,
        comparison,
        factors,
        subweights,
        anp,
        fuzzy,
        mean_sample: raw.fuzzy.mean_sample.unwrap_or(DEFAULT_MEAN_SAMPLE),
        mean_seed: raw.fuzzy.mean_seed.unwrap_or(seed.wrapping_add(4)),
        one_n,
        composite_threshold,
        histogram_bins,
        digest,
    })
}
