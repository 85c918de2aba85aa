use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use vulnscore::anp;
use vulnscore::config::{self, ConfigError, Overrides, PipelineConfig};
use vulnscore::fuzzy::{self, FuzzSpec};
use vulnscore::one_n::{one_n_weights, MIN_KNOWN_SHARE};
use vulnscore::pipeline::{self, PipelineError};
use vulnscore::raster::{self, BreakSet, CategoryMap, ClassGrid, Grid, Orientation, Ramp, RasterError, Stretch, Variant};
use vulnscore::{ComparisonMatrix, PriorityVector};

/// Pollution-vulnerability scoring with AHP, nested AHP, ANP, fuzzy AHP and 1-N AHP.
#[derive(Parser)]
#[command(name = "vulnscore", version)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StretchArg {
    Global,
    Local,
    P5_95,
}

#[derive(Subcommand)]
enum Command {
    /// Priority vector and consistency of a comparison matrix.
    Weights {
        /// Matrix file: one row per line, comma or space separated. Defaults to the config matrix.
        matrix: Option<PathBuf>,
    },
    /// Classify a grid by four breaks or by a category map.
    Classify {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        breaks: Option<Vec<f64>>,
        #[arg(long)]
        lower_is_worse: bool,
        /// `code=class` pairs, e.g. `50=5,80=1`.
        #[arg(long, value_delimiter = ',')]
        categories: Option<Vec<String>>,
    },
    /// Weighted overlay of class grids.
    Overlay {
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        classes: Vec<PathBuf>,
        /// Weights; defaults to the config matrix's priority vector.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
    },
    /// Nested overlay with per-class subweights from the config.
    Nested {
        #[arg(long, value_delimiter = ',', required = true)]
        classes: Vec<PathBuf>,
    },
    /// Supermatrix limit and derived ANP weights; with --classes also scores.
    Anp {
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<PathBuf>>,
    },
    /// Fuzzy AHP Monte-Carlo rank reversals.
    Fuzzy {
        #[arg(long)]
        sims: Option<usize>,
    },
    /// 1-N overlay with stochastic acute and chronic layers.
    OneN {
        #[arg(long, value_delimiter = ',', required = true)]
        classes: Vec<PathBuf>,
        /// Known share N in [0.67, 1].
        #[arg(long)]
        share: f64,
    },
    /// Fuzzy 1-N rank reversals on the worst-case eight-factor weights.
    FuzzyOneN {
        #[arg(long)]
        sims: Option<usize>,
    },
    /// z(ahp) - z(variant).
    Diff { ahp: PathBuf, variant: PathBuf },
    /// Outlier composite over the AHP base.
    Composite {
        ahp: PathBuf,
        #[arg(long)]
        nested: Option<PathBuf>,
        #[arg(long)]
        anp: Option<PathBuf>,
        #[arg(long)]
        mean_fuzzy: Option<PathBuf>,
        #[arg(long, default_value_t = 2.0)]
        threshold: f64,
    },
    /// Render a grid to PPM.
    Render {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "local")]
        stretch: StretchArg,
        #[arg(long, allow_negative_numbers = true)]
        min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        max: Option<f64>,
    },
    /// Equal-width histogram as CSV.
    Hist {
        input: PathBuf,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Write a synthetic six-factor scenario.
    Synth {
        #[arg(long, default_value_t = 256)]
        rows: usize,
        #[arg(long, default_value_t = 256)]
        cols: usize,
    },
    /// Full pipeline.
    Run {
        #[arg(long)]
        sims: Option<usize>,
    },
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}

/// Parses `args` and executes; returns the process exit code (0 success,
/// 1 usage or validation error, 2 I/O error).
fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_io(&e) {
                2
            } else {
                1
            }
        }
    }
}

fn is_io(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.is::<std::io::Error>()
            || c.downcast_ref::<RasterError>().is_some_and(|r| matches!(r, RasterError::Io(_)))
            || c.downcast_ref::<vulnscore::Error>().is_some_and(|r| r.is_io())
            || c.downcast_ref::<PipelineError>().is_some_and(|r| r.is_io())
            || c.downcast_ref::<ConfigError>().is_some_and(|r| matches!(r, ConfigError::Io(_)))
    })
}

struct Ctx {
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn load(&self, sims: Option<usize>) -> Result<PipelineConfig> {
        let path = self.config.as_ref().context("--config is required for this command")?;
        let overrides = Overrides { seed: self.seed, output_dir: self.out.clone(), sim_count: sims };
        Ok(config::load_config_with(path, &overrides)?)
    }

    fn out(&self) -> Result<&Path> {
        self.out.as_deref().context("--out is required for this command")
    }

    fn out_dir(&self) -> Result<&Path> {
        let dir = self.out()?;
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }
}

fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().with_context(|| format!("line {}: {t:?} is not a number", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn read_classes(paths: &[PathBuf]) -> Result<Vec<ClassGrid>> {
    paths
        .iter()
        .map(|p| {
            let g = raster::read_grid(p).with_context(|| format!("reading {}", p.display()))?;
            ClassGrid::from_grid(&g).with_context(|| format!("{}", p.display()))
        })
        .collect()
}

fn read(path: &Path) -> Result<Grid> {
    raster::read_grid(path).with_context(|| format!("reading {}", path.display()))
}

fn write(grid: &Grid, path: &Path) -> Result<()> {
    raster::write_grid(grid, path).with_context(|| format!("writing {}", path.display()))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn print_weights(names: &[String], w: &[f64]) {
    for (i, x) in w.iter().enumerate() {
        let name = names.get(i).cloned().unwrap_or_else(|| format!("w{}", i + 1));
        println!("{name:<26} {x:.6}");
    }
}

fn execute(cli: Cli) -> Result<()> {
    let ctx = Ctx { config: cli.config, seed: cli.seed, out: cli.out };
    match cli.command {
        Command::Weights { matrix } => {
            let (m, names) = match matrix {
                Some(path) => (ComparisonMatrix::new(read_matrix(&path)?)?, Vec::new()),
                None => {
                    let c = ctx.load(None)?;
                    let names = c.factor_names();
                    (c.comparison, names)
                }
            };
            let w = m.priority_vector();
            print_weights(&names, &w);
            let r = m.consistency()?;
            println!("lambda_max {:.4}", r.lambda_max);
            println!("CI {:.4}", r.ci);
            println!("CR {:.4}", r.cr);
            println!("consistent {}", r.consistent);
        }
        Command::Classify { input, breaks, lower_is_worse, categories } => {
            if breaks.as_ref().is_some_and(|b| b.len() != 4) {
                bail!("--breaks takes 4 values");
            }
            let g = read(&input)?;
            let classes = match (breaks, categories) {
                (Some(b), None) => {
                    let o = if lower_is_worse { Orientation::LowerIsWorse } else { Orientation::HigherIsWorse };
                    raster::classify(&g, &BreakSet::new(&b, o)?)
                }
                (None, Some(pairs)) => {
                    let mut parsed = Vec::new();
                    for p in pairs {
                        let (code, class) = p.split_once('=').with_context(|| format!("{p:?} is not code=class"))?;
                        parsed.push((code.trim().parse()?, class.trim().parse()?));
                    }
                    raster::classify_categorical(&g, &CategoryMap::new(parsed)?)?
                }
                _ => bail!("give exactly one of --breaks or --categories"),
            };
            write(&classes.to_grid(), ctx.out()?)?;
        }
        Command::Overlay { classes, weights } => {
            let grids = read_classes(&classes)?;
            let w = match weights {
                Some(w) => PriorityVector::new(w)?.into_vec(),
                None => ctx.load(None)?.comparison.priority_vector().into_vec(),
            };
            let refs: Vec<&ClassGrid> = grids.iter().collect();
            write(&raster::weighted_overlay(&refs, &w)?, ctx.out()?)?;
        }
        Command::Nested { classes } => {
            let c = ctx.load(None)?;
            let grids = read_classes(&classes)?;
            let refs: Vec<&ClassGrid> = grids.iter().collect();
            let v = raster::nested_overlay(&refs, &c.comparison.priority_vector(), &c.subweights)?;
            write(&v, ctx.out()?)?;
        }
        Command::Anp { classes } => {
            let c = ctx.load(None)?;
            let s = anp::column_stochasticize(&anp::assemble(&c.anp));
            let limit = anp::limit(&s, anp::DEFAULT_TOLERANCE, anp::DEFAULT_MAX_ITER)?;
            let effective = anp::effective_criteria_weights(&c.anp.w21, &c.anp.w22)?;
            let cw = anp::anp_class_weights(&c.anp);
            println!("limit reached after {} squarings (meaningful: {})", limit.iterations, limit.meaningful);
            println!("alternative priorities (class 5 to 1):");
            for (k, p) in limit.alternative_priorities.iter().enumerate() {
                println!("  class {} {p:.6}", 5 - k);
            }
            println!("effective criteria weights:");
            print_weights(&c.factor_names(), &effective);
            println!("class weights (rows class 5 to 1):");
            for row in cw.class_rows().iter().rev() {
                println!("  {}", row.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" "));
            }
            if let Some(paths) = classes {
                let grids = read_classes(&paths)?;
                let refs: Vec<&ClassGrid> = grids.iter().collect();
                write(&raster::nested_overlay(&refs, &effective, &cw)?, ctx.out()?)?;
            }
        }
        Command::Fuzzy { sims } => {
            let c = ctx.load(sims)?;
            let batch = fuzzy::run_simulations(&c.comparison, &c.fuzzy);
            let baseline = c.comparison.priority_vector().rank_order();
            let report = fuzzy::count_reversals(&batch, &baseline)?;
            print_report(&report);
            if ctx.out.is_some() {
                let dir = ctx.out_dir()?;
                write_bytes(&dir.join("reversals.csv"), report.pairs_csv(&c.factor_names()).as_bytes())?;
                write_bytes(&dir.join("rate.csv"), report.rate_csv().as_bytes())?;
            }
        }
        Command::OneN { classes, share } => {
            let c = ctx.load(None)?;
            if !(MIN_KNOWN_SHARE..=1.0).contains(&share) {
                bail!("--share {share} outside [{MIN_KNOWN_SHARE}, 1]");
            }
            let grids = read_classes(&classes)?;
            let refs: Vec<&ClassGrid> = grids.iter().collect();
            let header = grids[0].header;
            let acute = raster::stochastic_class_layer(header, c.one_n.acute_occurrence, c.one_n.acute_seed)?;
            let chronic = raster::stochastic_class_layer(header, c.one_n.chronic_occurrence, c.one_n.chronic_seed)?;
            let base = c.one_n.base_weights.clone().unwrap_or_else(|| c.comparison.priority_vector());
            write(&raster::one_n_overlay(&refs, &acute, &chronic, &base, share)?, ctx.out()?)?;
        }
        Command::FuzzyOneN { sims } => {
            let c = ctx.load(sims)?;
            let base = c.one_n.base_weights.clone().unwrap_or_else(|| c.comparison.priority_vector());
            let w8 = one_n_weights(&base, MIN_KNOWN_SHARE)?;
            let spec = FuzzSpec { master_seed: c.one_n.fuzzy_seed, ..c.fuzzy };
            let report = fuzzy::fuzzy_one_n(&w8, &spec, c.one_n.exclusion)?;
            print_report(&report);
            if ctx.out.is_some() {
                let dir = ctx.out_dir()?;
                let mut names = c.factor_names();
                names.extend(["acute".to_string(), "chronic".to_string()]);
                write_bytes(&dir.join("one_n_reversals.csv"), report.pairs_csv(&names).as_bytes())?;
                write_bytes(&dir.join("one_n_rate.csv"), report.rate_csv().as_bytes())?;
            }
        }
        Command::Diff { ahp, variant } => {
            write(&raster::diff_layer(&read(&ahp)?, &read(&variant)?)?, ctx.out()?)?;
        }
        Command::Composite { ahp, nested, anp, mean_fuzzy, threshold } => {
            let base = raster::zscore(&read(&ahp)?)?;
            let mut diffs = Vec::new();
            for (v, p) in [(Variant::Nested, nested), (Variant::Anp, anp), (Variant::MeanFuzzy, mean_fuzzy)] {
                if let Some(p) = p {
                    diffs.push((v, read(&p)?));
                }
            }
            let refs: Vec<(Variant, &Grid)> = diffs.iter().map(|(v, g)| (*v, g)).collect();
            let comp = raster::composite(&base, &refs, threshold)?;
            let dir = ctx.out_dir()?;
            for (label, layer) in [("all", comp.clone()), ("positive", comp.positive()), ("negative", comp.negative())] {
                write(&layer.overlap_grid(), &dir.join(format!("{label}.asc")))?;
                write_bytes(&dir.join(format!("{label}.ppm")), &raster::render_composite(&layer).to_ppm())?;
            }
        }
        Command::Render { input, stretch, min, max } => {
            let g = read(&input)?;
            let stretch = match stretch {
                StretchArg::Global => Stretch::Global {
                    min: min.context("--stretch global needs --min")?,
                    max: max.context("--stretch global needs --max")?,
                },
                StretchArg::Local => Stretch::LocalMinMax,
                StretchArg::P5_95 => Stretch::Percentile5_95,
            };
            let img = raster::render(&g, stretch, &Ramp::default())?;
            write_bytes(ctx.out()?, &img.to_ppm())?;
        }
        Command::Hist { input, bins } => {
            let csv = raster::histogram_csv(&raster::histogram(&read(&input)?, bins)?);
            match &ctx.out {
                Some(p) => write_bytes(p, csv.as_bytes())?,
                None => print!("{csv}"),
            }
        }
        Command::Synth { rows, cols } => {
            let s = raster::synth_scenario(ctx.seed.unwrap_or(config::DEFAULT_SEED), rows, cols)?;
            let dir = ctx.out_dir()?;
            let names = ["population_density", "land_use", "rainfall", "drainage_density", "slope", "land_surface_temperature"];
            for (name, g) in names.iter().zip(s.grids()) {
                write(g, &dir.join(format!("{name}.asc")))?;
            }
        }
        Command::Run { sims } => {
            let c = ctx.load(sims)?;
            let m = pipeline::run_pipeline(&c)?;
            println!("wrote {} files to {}", m.outputs.len() + 1, c.output_dir.display());
            for s in &m.stages {
                println!("  {:<12} {:>8.3}s  {}", s.name, s.seconds, s.status);
            }
            for (k, r) in &m.reversals {
                println!("  {k}: {} of {} simulations reversed (rate {:.4})", r.sims_with_any_reversal, r.total_sims, r.rate);
            }
            println!("manifest digest {}", m.manifest_digest);
        }
    }
    Ok(())
}

fn print_report(r: &fuzzy::ReversalReport) {
    println!("simulations        {}", r.total_sims);
    println!("with reversal      {}", r.sims_with_any_reversal);
    println!("rate               {:.4}", r.reversal_rate());
    println!("first-order total  {}", r.first_order_total());
    println!("second-order total {}", r.second_order_total());
}
