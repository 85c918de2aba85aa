//! End-to-end run: scenario, every scoring variant, comparison layers,
//! exports and a manifest of content digests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::anp::{self, LimitResult};
use crate::config::{Classing, GridSource, PipelineConfig};
use crate::fuzzy::{self, FuzzSpec, ReversalReport, SimulationRecord};
use crate::one_n::one_n_weights;
use crate::pairwise::{ConsistencyReport, PriorityVector};
use crate::raster::{self, ClassGrid, Grid, Ramp, Stretch, Variant};
use crate::rng::SplitMix64;

pub const DIGEST_ALGORITHM: &str = "sha256";

#[derive(Debug, Error)]
#[error("stage {stage}: {source}")]
pub struct PipelineError {
    pub stage: &'static str,
    #[source]
    pub source: crate::Error,
}

impl PipelineError {
    pub fn is_io(&self) -> bool {
        self.source.is_io()
    }
}

trait StageResult<T> {
    fn stage(self, stage: &'static str) -> Result<T, PipelineError>;
}

impl<T, E: Into<crate::Error>> StageResult<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError { stage, source: e.into() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub name: String,
    /// `ok` or `skipped: <reason>`.
    pub status: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Seeds {
    pub scenario: u64,
    pub fuzzy: u64,
    pub mean_fuzzy_sample: u64,
    pub acute: u64,
    pub chronic: u64,
    pub fuzzy_one_n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReversalSummary {
    pub total_sims: u64,
    pub sims_with_any_reversal: u64,
    pub rate: f64,
    pub first_order_total: u64,
    pub second_order_total: u64,
    pub sims_with_second_order: u64,
}

impl From<&ReversalReport> for ReversalSummary {
    fn from(r: &ReversalReport) -> Self {
        Self {
            total_sims: r.total_sims,
            sims_with_any_reversal: r.sims_with_any_reversal,
            rate: r.reversal_rate(),
            first_order_total: r.first_order_total(),
            second_order_total: r.second_order_total(),
            sims_with_second_order: r.sims_with_second_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnpDiagnostics {
    pub limit: LimitResult,
    pub effective_criteria_weights: Vec<f64>,
    /// Rows ordered class 1..5, one column per factor.
    pub class_weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub digest_algorithm: &'static str,
    pub config_digest: String,
    pub seeds: Seeds,
    pub factors: Vec<String>,
    pub ahp_weights: Vec<f64>,
    pub ahp_consistency: ConsistencyReport,
    pub nested_consistency: Vec<ConsistencyReport>,
    pub anp: AnpDiagnostics,
    pub reversals: BTreeMap<String, ReversalSummary>,
    pub case1_simulation: Option<usize>,
    pub case2_simulation: Option<usize>,
    pub stages: Vec<StageRecord>,
    /// Relative path to content digest.
    pub outputs: BTreeMap<String, String>,
    /// Digest of this manifest with stage timings zeroed.
    pub manifest_digest: String,
}

struct Run {
    outputs: BTreeMap<String, Vec<u8>>,
    stages: Vec<StageRecord>,
    clock: Instant,
}

impl Run {
    fn put(&mut self, path: impl Into<String>, bytes: Vec<u8>) {
        self.outputs.insert(path.into(), bytes);
    }

    fn grid(&mut self, path: impl Into<String>, g: &Grid) {
        self.put(path, raster::to_ascii(g).into_bytes());
    }

    fn finish_stage(&mut self, name: impl Into<String>, status: impl Into<String>) {
        let now = Instant::now();
        self.stages.push(StageRecord {
            name: name.into(),
            status: status.into(),
            seconds: now.duration_since(self.clock).as_secs_f64(),
        });
        self.clock = now;
    }
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Loads (or synthesizes) the six factor grids in configuration order.
pub fn load_factor_grids(config: &PipelineConfig) -> Result<Vec<Grid>, PipelineError> {
    let needs_synth = config.factors.iter().any(|f| f.source == GridSource::Synthetic);
    let scenario = if needs_synth {
        Some(raster::synth_scenario(config.seed, config.nrows, config.ncols).stage("scenario")?)
    } else {
        None
    };
    let mut grids = Vec::with_capacity(config.factors.len());
    for (i, f) in config.factors.iter().enumerate() {
        let g = match &f.source {
            GridSource::Synthetic => scenario.as_ref().expect("scenario built").grids()[i].clone(),
            GridSource::File(path) => raster::read_grid(path).stage("load")?,
        };
        grids.push(g);
    }
    Ok(grids)
}

pub fn classify_factors(config: &PipelineConfig, grids: &[Grid]) -> Result<Vec<ClassGrid>, PipelineError> {
    config
        .factors
        .iter()
        .zip(grids)
        .map(|(f, g)| match &f.classing {
            Classing::Breaks(b) => Ok(raster::classify(g, b)),
            Classing::Categories(m) => raster::classify_categorical(g, m),
        })
        .collect::<Result<Vec<_>, _>>()
        .stage("classify")
}

/// `k` distinct indices from `0..n`, partial Fisher-Yates on stream `(seed, 0)`.
pub fn sample_without_replacement(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::stream(seed, 0);
    let k = k.min(n);
    for i in 0..k {
        let j = i + ((rng.next_f64() * (n - i) as f64) as usize).min(n - i - 1);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

fn stretch_name(s: Stretch) -> &'static str {
    match s {
        Stretch::Global { .. } => "global",
        Stretch::LocalMinMax => "local",
        Stretch::Percentile5_95 => "p5_95",
    }
}

fn global_range(grids: &[(String, Grid)]) -> (f64, f64) {
    grids
        .iter()
        .flat_map(|(_, g)| g.valid_values())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn render_family(run: &mut Run, dir: &str, grids: &[(String, Grid)]) -> Result<(), PipelineError> {
    let (min, max) = global_range(grids);
    let ramp = Ramp::default();
    for (name, g) in grids {
        for stretch in [Stretch::Global { min, max }, Stretch::LocalMinMax, Stretch::Percentile5_95] {
            let img = raster::render(g, stretch, &ramp).stage("render")?;
            run.put(format!("{dir}/{name}_{}.ppm", stretch_name(stretch)), img.to_ppm());
        }
    }
    Ok(())
}

fn weights_overlay(classes: &[&ClassGrid], w: &PriorityVector, stage: &'static str) -> Result<Grid, PipelineError> {
    raster::weighted_overlay(classes, w).stage(stage)
}

fn share_label(n: f64) -> String {
    raster::format_value(n)
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<RunManifest, PipelineError> {
    let mut run = Run { outputs: BTreeMap::new(), stages: Vec::new(), clock: Instant::now() };
    let names = config.factor_names();

    let grids = load_factor_grids(config)?;
    raster::check_grids_aligned(&grids).stage("load")?;
    for (name, g) in names.iter().zip(&grids) {
        run.grid(format!("inputs/{name}.asc"), g);
    }
    run.finish_stage("load", "ok");

    let classes = classify_factors(config, &grids)?;
    let class_refs: Vec<&ClassGrid> = classes.iter().collect();
    for (name, c) in names.iter().zip(&classes) {
        run.grid(format!("classes/{name}.asc"), &c.to_grid());
    }
    run.finish_stage("classify", "ok");

    // AHP
    let ahp_w = config.comparison.priority_vector();
    let ahp_consistency = config.comparison.consistency().stage("ahp")?;
    let ahp = weights_overlay(&class_refs, &ahp_w, "ahp")?;
    let mut scores: Vec<(String, Grid)> = vec![("ahp".into(), ahp.clone())];
    run.finish_stage("ahp", "ok");

    // Nested AHP
    let nested_consistency = config
        .factors
        .iter()
        .map(|f| f.subcriteria.consistency())
        .collect::<Result<Vec<_>, _>>()
        .stage("nested")?;
    let nested = raster::nested_overlay(&class_refs, &ahp_w, &config.subweights).stage("nested")?;
    scores.push(("nested".into(), nested));
    run.finish_stage("nested", "ok");

    // ANP
    let stochastic = anp::column_stochasticize(&anp::assemble(&config.anp));
    let limit = anp::limit(&stochastic, anp::DEFAULT_TOLERANCE, anp::DEFAULT_MAX_ITER).stage("anp")?;
    let effective = anp::effective_criteria_weights(&config.anp.w21, &config.anp.w22).stage("anp")?;
    let class_weights = anp::anp_class_weights(&config.anp);
    let anp_grid = raster::nested_overlay(&class_refs, &effective, &class_weights).stage("anp")?;
    scores.push(("anp".into(), anp_grid));
    let anp_diag = AnpDiagnostics {
        limit,
        effective_criteria_weights: effective.to_vec(),
        class_weights: class_weights.class_rows(),
    };
    run.finish_stage("anp", "ok");

    // 1-N
    let base = config.one_n.base_weights.clone().unwrap_or_else(|| ahp_w.clone());
    let header = ahp.header;
    let acute = raster::stochastic_class_layer(header, config.one_n.acute_occurrence, config.one_n.acute_seed).stage("one_n")?;
    let chronic =
        raster::stochastic_class_layer(header, config.one_n.chronic_occurrence, config.one_n.chronic_seed).stage("one_n")?;
    run.grid("classes/acute.asc", &acute.to_grid());
    run.grid("classes/chronic.asc", &chronic.to_grid());
    for &n in &config.one_n.known_shares {
        let g = raster::one_n_overlay(&class_refs, &acute, &chronic, &base, n).stage("one_n")?;
        scores.push((format!("one_n_{}", share_label(n)), g));
    }
    run.finish_stage("one_n", "ok");

    // Fuzzy AHP
    let mut reversals = BTreeMap::new();
    let (mut case1_simulation, mut case2_simulation) = (None, None);
    let mut mean_fuzzy = None;
    if config.fuzzy.sim_count == 0 {
        run.finish_stage("fuzzy", "skipped: sim_count = 0");
        run.finish_stage("fuzzy_one_n", "skipped: sim_count = 0");
    } else {
        let batch = fuzzy::run_simulations(&config.comparison, &config.fuzzy);
        let baseline = ahp_w.rank_order();
        let report = fuzzy::count_reversals(&batch, &baseline).stage("fuzzy")?;
        run.put("fuzzy/reversals.csv", report.pairs_csv(&names).into_bytes());
        run.put("fuzzy/rate.csv", report.rate_csv().into_bytes());
        reversals.insert("fuzzy".to_string(), ReversalSummary::from(&report));

        let records = fuzzy::reversal_records(&batch, &baseline);
        let mut notes = Vec::new();
        if records.is_empty() {
            notes.push("mean_fuzzy skipped: no reversals");
        } else {
            let pick = sample_without_replacement(records.len(), config.mean_sample, config.mean_seed);
            let layers = pick
                .iter()
                .map(|&i| weights_overlay(&class_refs, &records[i].priorities, "mean_fuzzy"))
                .collect::<Result<Vec<_>, _>>()?;
            let g = raster::mean_overlay(&layers).stage("mean_fuzzy")?;
            scores.push(("mean_fuzzy".into(), g.clone()));
            mean_fuzzy = Some(g);
        }
        let case = |name: &str, rec: Result<&SimulationRecord, fuzzy::FuzzyError>, slot: &mut Option<usize>| {
            match rec {
                Ok(r) => {
                    *slot = Some(r.index);
                    Some((name.to_string(), r.priorities.clone()))
                }
                Err(_) => None,
            }
        };
        let c1 = case("case1", fuzzy::select_case1(&batch, &baseline), &mut case1_simulation);
        let c2 = case("case2", fuzzy::select_case2(&batch, &ahp_w), &mut case2_simulation);
        if c1.is_none() {
            notes.push("case1 skipped: no qualifying simulation");
        }
        if c2.is_none() {
            notes.push("case2 skipped: no qualifying simulation");
        }
        for (name, w) in c1.into_iter().chain(c2) {
            scores.push((name, weights_overlay(&class_refs, &w, "fuzzy")?));
        }
        run.finish_stage("fuzzy", if notes.is_empty() { "ok".to_string() } else { notes.join("; ") });

        let weights8 = one_n_weights(&base, crate::one_n::MIN_KNOWN_SHARE).stage("fuzzy_one_n")?;
        let spec = FuzzSpec { master_seed: config.one_n.fuzzy_seed, ..config.fuzzy };
        let report = fuzzy::fuzzy_one_n(&weights8, &spec, config.one_n.exclusion).stage("fuzzy_one_n")?;
        let mut names8 = names.clone();
        names8.extend(["acute".to_string(), "chronic".to_string()]);
        run.put("fuzzy/one_n_reversals.csv", report.pairs_csv(&names8).into_bytes());
        run.put("fuzzy/one_n_rate.csv", report.rate_csv().into_bytes());
        reversals.insert("fuzzy_one_n".to_string(), ReversalSummary::from(&report));
        run.finish_stage("fuzzy_one_n", "ok");
    }

    for (name, g) in &scores {
        run.grid(format!("scores/{name}.asc"), g);
    }

    // Comparison layers
    let mut diffs: Vec<(String, Grid)> = Vec::new();
    for (name, g) in scores.iter().skip(1) {
        diffs.push((name.clone(), raster::diff_layer(&ahp, g).stage("diff")?));
    }
    for (name, d) in &diffs {
        run.grid(format!("diff/{name}.asc"), d);
    }
    let score = |name: &str| scores.iter().find(|(n, _)| n == name).map(|(_, g)| g).expect("score present");
    let sd = raster::stddev_stack(&[&ahp, score("anp"), score("nested")]).stage("stddev")?;
    run.grid("diff/stddev_ahp_anp_nested.asc", &sd);
    run.finish_stage("diff", "ok");

    let base_z = raster::zscore(&ahp).stage("composite")?;
    let diff_of = |name: &str| diffs.iter().find(|(n, _)| n == name).map(|(_, g)| g);
    let mut layers: Vec<(Variant, &Grid)> = Vec::new();
    for v in Variant::ALL {
        if let Some(d) = diff_of(v.name()) {
            layers.push((v, d));
        }
    }
    let comp = raster::composite(&base_z, &layers, config.composite_threshold).stage("composite")?;
    for (label, layer) in [("all", comp.clone()), ("positive", comp.positive()), ("negative", comp.negative())] {
        run.grid(format!("composite/{label}.asc"), &layer.overlap_grid());
        run.put(format!("composite/{label}.ppm"), raster::render_composite(&layer).to_ppm());
    }
    run.grid("composite/base_z.asc", &base_z);
    run.finish_stage("composite", if mean_fuzzy.is_some() { "ok" } else { "ok (mean_fuzzy absent)" });

    for (family, grids) in [("scores", &scores), ("diff", &diffs)] {
        for (name, g) in grids {
            let bins = raster::histogram(g, config.histogram_bins).stage("histogram")?;
            run.put(format!("hist/{family}/{name}.csv"), raster::histogram_csv(&bins).into_bytes());
        }
    }
    run.finish_stage("histogram", "ok");

    render_family(&mut run, "images/scores", &scores)?;
    render_family(&mut run, "images/diff", &diffs)?;
    run.finish_stage("render", "ok");

    let out = &config.output_dir;
    let mut outputs = BTreeMap::new();
    for (path, bytes) in &run.outputs {
        let full = out.join(path);
        if let Some(dir) = full.parent() {
            fs::create_dir_all(dir).stage("write")?;
        }
        fs::write(&full, bytes).stage("write")?;
        outputs.insert(path.clone(), sha256(bytes));
    }
    run.finish_stage("write", "ok");

    let mut manifest = RunManifest {
        digest_algorithm: DIGEST_ALGORITHM,
        config_digest: config.digest.clone(),
        seeds: Seeds {
            scenario: config.seed,
            fuzzy: config.fuzzy.master_seed,
            mean_fuzzy_sample: config.mean_seed,
            acute: config.one_n.acute_seed,
            chronic: config.one_n.chronic_seed,
            fuzzy_one_n: config.one_n.fuzzy_seed,
        },
        factors: names,
        ahp_weights: ahp_w.to_vec(),
        ahp_consistency,
        nested_consistency,
        anp: anp_diag,
        reversals,
        case1_simulation,
        case2_simulation,
        stages: run.stages,
        outputs,
        manifest_digest: String::new(),
    };
    manifest.manifest_digest = manifest_digest(&manifest);
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(out.join("manifest.json"), json).stage("write")?;
    Ok(manifest)
}

/// Digest of the manifest with timings zeroed and the digest field blank.
pub fn manifest_digest(m: &RunManifest) -> String {
    let mut m = m.clone();
    m.manifest_digest.clear();
    for s in &mut m.stages {
        s.seconds = 0.0;
    }
    sha256(&serde_json::to_vec(&m).expect("manifest serializes"))
}

/// Output path of a score grid inside a run directory.
pub fn score_path(out: &Path, name: &str) -> PathBuf {
    out.join("scores").join(format!("{name}.asc"))
}
