//! Command-line front end: argument parsing, the `analyze`, `classify` and
//! `axioms` commands, and their JSON/CSV reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feature::ProbeSet;
use crate::groupoid::{make_groupoid, BinaryOp, Groupoid, GroupoidSummary};
use crate::ingest::{load_image, Dims, ImageSpace, RasterImage, Tile, TileSpec, Window};
use crate::pattern::{classify, generate_pattern, ClassVerdict, Pattern, PatternSet, DEFAULT_THRESHOLD};
use crate::proximity::{
    validate_axioms, AxiomReport, AxiomSystem, BrokenSymmetry, Descriptive, DescriptiveSpace, Location, Metric, Point,
    Proximity, Sampling, Spatial, EXHAUSTIVE_LIMIT,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_CLI_PRECISION: u32 = 6;

/// Exit status for success or a match.
pub const EXIT_OK: i32 = 0;
/// Exit status for an unmatched classification or a failed axiom.
pub const EXIT_NEGATIVE: i32 = 1;
/// Exit status for usage and I/O errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "proxgroup",
    version,
    about = "Proximal groupoid patterns in greyscale images"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Report tile groupoids, their regular elements and the patterns they generate.
    Analyze {
        image: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Decide whether CANDIDATE belongs to the class of REFERENCE.
    Classify {
        reference: PathBuf,
        candidate: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check the proximity axioms on randomly generated spaces.
    Axioms {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Points per generated space.
        #[arg(long, default_value_t = 6)]
        size: usize,
        /// Number of generated spaces.
        #[arg(long, default_value_t = 200)]
        spaces: usize,
        /// Random triples per space when not exhaustive.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Enumerate every subset triple.
        #[arg(long)]
        exhaustive: bool,
        /// Replace the spatial relation with an asymmetric one.
        #[arg(long, hide = true)]
        break_symmetry: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Tile size, WxH.
    #[arg(long, default_value = "8x8")]
    pub tile: Dims,
    /// Tile stride, WxH. Defaults to the tile size.
    #[arg(long)]
    pub stride: Option<Dims>,
    /// Decimal places kept by the intensity probe.
    #[arg(long, default_value_t = 2)]
    pub precision: u32,
    #[arg(long, default_value = "min", value_parser = ["min", "max", "first"])]
    pub op: String,
    #[arg(long, default_value_t = 0.0)]
    pub tolerance: f64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Analyze,
    Classify,
    Axioms,
}

/// Everything needed to reproduce a run. Embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub inputs: Vec<PathBuf>,
    pub tile: Dims,
    pub stride: Dims,
    pub precision: u32,
    pub op: String,
    pub tolerance: f64,
    pub threshold: f64,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub size: usize,
    pub spaces: usize,
    pub samples: usize,
    pub exhaustive: bool,
    pub break_symmetry: bool,
}

impl RunConfig {
    fn with_defaults(command: CommandKind, inputs: Vec<PathBuf>, output: OutputArgs) -> Self {
        let tile = Dims { width: 8, height: 8 };
        RunConfig {
            command,
            inputs,
            tile,
            stride: tile,
            precision: 2,
            op: "min".into(),
            tolerance: 0.0,
            threshold: DEFAULT_THRESHOLD,
            format: output.format,
            output: output.output,
            seed: 0,
            size: 6,
            spaces: 200,
            samples: 1000,
            exhaustive: false,
            break_symmetry: false,
        }
    }

    fn with_pipeline(mut self, p: PipelineArgs) -> Self {
        self.tile = p.tile;
        self.stride = p.stride.unwrap_or(p.tile);
        self.precision = p.precision;
        self.op = p.op;
        self.tolerance = p.tolerance;
        self.threshold = p.threshold;
        self
    }

    pub fn analyze(image: impl Into<PathBuf>) -> Self {
        Self::with_defaults(CommandKind::Analyze, vec![image.into()], default_output())
    }

    pub fn classify(reference: impl Into<PathBuf>, candidate: impl Into<PathBuf>) -> Self {
        Self::with_defaults(
            CommandKind::Classify,
            vec![reference.into(), candidate.into()],
            default_output(),
        )
    }

    pub fn axioms() -> Self {
        Self::with_defaults(CommandKind::Axioms, vec![], default_output())
    }

    pub fn tile_spec(&self) -> TileSpec {
        TileSpec::new(self.tile, self.stride)
    }

    pub fn validate(&self) -> Result<()> {
        if self.precision > MAX_CLI_PRECISION {
            return Err(Error::InvalidParameter(format!(
                "precision must be within 0..={MAX_CLI_PRECISION}"
            )));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(
                "tolerance must be a non-negative number".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter("threshold must lie in [0, 1]".into()));
        }
        if BinaryOp::by_name(&self.op).is_none() {
            return Err(Error::InvalidParameter(format!("unknown operation `{}`", self.op)));
        }
        let expected = match self.command {
            CommandKind::Analyze => 1,
            CommandKind::Classify => 2,
            CommandKind::Axioms => 0,
        };
        if self.inputs.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "expected {expected} input image(s), got {}",
                self.inputs.len()
            )));
        }
        if self.command == CommandKind::Axioms {
            if self.size == 0 {
                return Err(Error::InvalidParameter("--size must be positive".into()));
            }
            if self.exhaustive && self.size > EXHAUSTIVE_LIMIT {
                return Err(Error::InvalidParameter(format!(
                    "--exhaustive supports --size up to {EXHAUSTIVE_LIMIT}"
                )));
            }
        }
        Ok(())
    }
}

fn default_output() -> OutputArgs {
    OutputArgs {
        format: Format::Json,
        output: None,
    }
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        match cli.command {
            CliCommand::Analyze {
                image,
                pipeline,
                output,
            } => RunConfig::with_defaults(CommandKind::Analyze, vec![image], output).with_pipeline(pipeline),
            CliCommand::Classify {
                reference,
                candidate,
                pipeline,
                output,
            } => RunConfig::with_defaults(CommandKind::Classify, vec![reference, candidate], output)
                .with_pipeline(pipeline),
            CliCommand::Axioms {
                seed,
                size,
                spaces,
                samples,
                exhaustive,
                break_symmetry,
                output,
            } => RunConfig {
                seed,
                size,
                spaces,
                samples,
                exhaustive,
                break_symmetry,
                ..RunConfig::with_defaults(CommandKind::Axioms, vec![], output)
            },
        }
    }
}

/// A rendered report and the exit status it implies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub document: String,
    pub exit_code: i32,
}

/// Runs a validated configuration and renders its report.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    match config.command {
        CommandKind::Analyze => {
            let report = cmd_analyze(config)?;
            Ok(Outcome {
                document: render(config.format, &report, AnalyzeReport::csv)?,
                exit_code: EXIT_OK,
            })
        }
        CommandKind::Classify => {
            let report = cmd_classify(config)?;
            let exit_code = if report.verdict.is_match() {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            };
            Ok(Outcome {
                document: render(config.format, &report, ClassifyReport::csv)?,
                exit_code,
            })
        }
        CommandKind::Axioms => {
            let report = cmd_axioms(config)?;
            let exit_code = if report.passed { EXIT_OK } else { EXIT_NEGATIVE };
            Ok(Outcome {
                document: render(config.format, &report, AxiomsReport::csv)?,
                exit_code,
            })
        }
    }
}

fn render<T: Serialize>(format: Format, report: &T, csv: fn(&T) -> Result<String>) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            Ok(s)
        }
        Format::Csv => csv(report),
    }
}

fn csv_document<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn join(ids: &[usize]) -> String {
    ids.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

/// One image after tiling, with a groupoid and a pattern per tile.
struct AnalyzedImage {
    label: String,
    width: usize,
    height: usize,
    tiles: Vec<Tile>,
    groupoids: Vec<Groupoid>,
    patterns: Vec<Pattern>,
}

impl AnalyzedImage {
    fn tile_index(&self, pattern: &Pattern) -> Vec<usize> {
        let by_id: BTreeMap<_, _> = self.groupoids.iter().enumerate().map(|(i, g)| (g.id(), i)).collect();
        pattern.members().iter().map(|id| by_id[id]).collect()
    }
}

/// Tiles `image`, builds a groupoid per tile and a pattern for every tile
/// as generator, with all tiles as candidates.
fn analyze_image(label: &str, image: &RasterImage, config: &RunConfig) -> Result<AnalyzedImage> {
    let op = BinaryOp::by_name(&config.op)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown operation `{}`", config.op)))?;
    let space = ImageSpace::new(image, ProbeSet::intensity(config.precision)?, Metric::Discrete)?;
    let tiles = space.tile(&config.tile_spec())?;
    let groupoids = tiles
        .par_iter()
        .map(|t| make_groupoid(space.space(), &t.region, op.clone()))
        .collect::<Result<Vec<_>>>()?;
    let patterns = groupoids
        .iter()
        .map(|g| generate_pattern(g, &groupoids, config.tolerance))
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalyzedImage {
        label: label.to_string(),
        width: image.width(),
        height: image.height(),
        tiles,
        groupoids,
        patterns,
    })
}

fn load(path: &Path) -> Result<RasterImage> {
    load_image(path)
}

#[derive(Debug, Clone, Serialize)]
pub struct ImageInfo {
    pub path: String,
    pub width: usize,
    pub height: usize,
    pub tiles: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TileReport {
    pub index: usize,
    #[serde(flatten)]
    pub window: Window,
    pub groupoid: GroupoidSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct PatternReport {
    /// Tile index of the generator.
    pub generator: usize,
    /// Member tile indices, generator first.
    pub members: Vec<usize>,
}

/// Patterns grouped by their member set.
#[derive(Debug, Clone, Serialize)]
pub struct DistinctPattern {
    /// Sorted member tile indices.
    pub members: Vec<usize>,
    /// Tiles whose pattern has exactly this member set.
    pub generators: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub image: ImageInfo,
    pub tiles: Vec<TileReport>,
    pub patterns: Vec<PatternReport>,
    pub distinct_patterns: Vec<DistinctPattern>,
}

#[derive(Serialize)]
struct AnalyzeRow<'a> {
    index: usize,
    x: usize,
    y: usize,
    width: usize,
    height: usize,
    carrier_size: usize,
    regular_elements: usize,
    total: bool,
    pattern_size: usize,
    pattern_members: &'a str,
}

impl AnalyzeReport {
    pub fn csv(&self) -> Result<String> {
        let members: Vec<String> = self.patterns.iter().map(|p| join(&p.members)).collect();
        csv_document(
            self.tiles
                .iter()
                .zip(&self.patterns)
                .zip(&members)
                .map(|((t, p), m)| AnalyzeRow {
                    index: t.index,
                    x: t.window.x,
                    y: t.window.y,
                    width: t.window.width,
                    height: t.window.height,
                    carrier_size: t.groupoid.carrier_size,
                    regular_elements: t.groupoid.regular_elements,
                    total: t.groupoid.total,
                    pattern_size: p.members.len(),
                    pattern_members: m,
                }),
        )
    }
}

pub fn cmd_analyze(config: &RunConfig) -> Result<AnalyzeReport> {
    config.validate()?;
    let path = &config.inputs[0];
    let image = load(path)?;
    let analyzed = analyze_image(&path.display().to_string(), &image, config)?;

    let patterns: Vec<PatternReport> = analyzed
        .patterns
        .iter()
        .enumerate()
        .map(|(i, p)| PatternReport {
            generator: i,
            members: analyzed.tile_index(p),
        })
        .collect();
    let mut grouped: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for p in &patterns {
        let mut key = p.members.clone();
        key.sort_unstable();
        grouped.entry(key).or_default().push(p.generator);
    }
    let mut distinct_patterns: Vec<DistinctPattern> = grouped
        .into_iter()
        .map(|(members, generators)| DistinctPattern { members, generators })
        .collect();
    distinct_patterns.sort_by_key(|d| d.generators[0]);

    Ok(AnalyzeReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        image: ImageInfo {
            path: analyzed.label.clone(),
            width: analyzed.width,
            height: analyzed.height,
            tiles: analyzed.tiles.len(),
        },
        tiles: analyzed
            .tiles
            .iter()
            .zip(&analyzed.groupoids)
            .map(|(t, g)| TileReport {
                index: t.index,
                window: t.window,
                groupoid: g.summary(),
            })
            .collect(),
        patterns,
        distinct_patterns,
    })
}

/// Tile windows of the generators behind a classification.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessTiles {
    pub candidate: Window,
    pub reference: Window,
    pub candidate_members: Vec<usize>,
    pub reference_members: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub reference: ImageInfo,
    pub candidate: ImageInfo,
    pub verdict: ClassVerdict,
    pub witness_tiles: Option<WitnessTiles>,
}

#[derive(Serialize)]
struct ClassifyRow<'a> {
    image: &'a str,
    reference: &'a str,
    matched: bool,
    matched_elements: usize,
    total_elements: usize,
    fraction: f64,
    salient: bool,
    candidate_tile: Option<usize>,
    reference_tile: Option<usize>,
}

impl ClassifyReport {
    pub fn csv(&self) -> Result<String> {
        let v = &self.verdict;
        csv_document([ClassifyRow {
            image: &v.image,
            reference: &self.reference.path,
            matched: v.is_match(),
            matched_elements: v.best.matched,
            total_elements: v.best.total,
            fraction: v.best.fraction,
            salient: v.best.salient,
            candidate_tile: v.witness.map(|w| w.candidate),
            reference_tile: v.witness.map(|w| w.reference),
        }])
    }
}

pub fn cmd_classify(config: &RunConfig) -> Result<ClassifyReport> {
    config.validate()?;
    let (ref_path, cand_path) = (&config.inputs[0], &config.inputs[1]);
    let reference = analyze_image(&ref_path.display().to_string(), &load(ref_path)?, config)?;
    let candidate = analyze_image(&cand_path.display().to_string(), &load(cand_path)?, config)?;
    let to_set = |a: &AnalyzedImage| PatternSet {
        image: a.label.clone(),
        patterns: a.patterns.clone(),
    };
    let verdict = classify(
        &to_set(&candidate),
        &to_set(&reference),
        config.threshold,
        config.tolerance,
    )?;
    let witness_tiles = verdict.witness.map(|w| WitnessTiles {
        candidate: candidate.tiles[w.candidate].window,
        reference: reference.tiles[w.reference].window,
        candidate_members: candidate.tile_index(&candidate.patterns[w.candidate]),
        reference_members: reference.tile_index(&reference.patterns[w.reference]),
    });
    let info = |a: &AnalyzedImage| ImageInfo {
        path: a.label.clone(),
        width: a.width,
        height: a.height,
        tiles: a.tiles.len(),
    };
    Ok(ClassifyReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        reference: info(&reference),
        candidate: info(&candidate),
        verdict,
        witness_tiles,
    })
}

/// A random space of `size` points for axiom checking.
///
/// Intensities come from a four-value alphabet so descriptions collide. Half
/// of the spaces use the discrete metric; the rest use a pseudometric that
/// is zero within random clusters of equally described points, making
/// closures non-trivial while respecting descriptions.
pub fn random_space(rng: &mut impl Rng, size: usize) -> Result<DescriptiveSpace> {
    let levels: Vec<u8> = (0..size).map(|_| rng.gen_range(1u8..=4)).collect();
    let points = levels
        .iter()
        .enumerate()
        .map(|(i, &l)| Point::new(Location::Index(i), vec![f64::from(l) / 10.0]))
        .collect();
    let metric = if rng.gen_bool(0.5) {
        Metric::Discrete
    } else {
        let clusters: Vec<(u8, u8)> = levels.iter().map(|&l| (l, rng.gen_range(0..2))).collect();
        let table: Vec<f64> = (0..size * size)
            .map(|k| {
                if clusters[k / size] == clusters[k % size] {
                    0.0
                } else {
                    1.0
                }
            })
            .collect();
        Metric::Table(table.into())
    };
    DescriptiveSpace::new(points, ProbeSet::intensity(2)?, metric)
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomResult {
    #[serde(flatten)]
    pub report: AxiomReport,
    /// Index of the generated space holding the witness.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomsReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub mode: &'static str,
    pub spatial_relation: String,
    pub results: Vec<AxiomResult>,
    pub passed: bool,
}

#[derive(Serialize)]
struct AxiomRow {
    axiom: String,
    verdict: String,
    checked: u64,
    space: Option<usize>,
    witness_a: String,
    witness_b: String,
    witness_c: String,
}

impl AxiomsReport {
    pub fn csv(&self) -> Result<String> {
        csv_document(self.results.iter().map(|r| {
            let w = r.report.witness.as_ref();
            AxiomRow {
                axiom: r.report.axiom.to_string(),
                verdict: if r.report.passed() { "pass" } else { "fail" }.to_string(),
                checked: r.report.checked,
                space: r.space,
                witness_a: w.map(|w| join(&w.a)).unwrap_or_default(),
                witness_b: w.map(|w| join(&w.b)).unwrap_or_default(),
                witness_c: w.map(|w| join(&w.c)).unwrap_or_default(),
            }
        }))
    }
}

pub fn cmd_axioms(config: &RunConfig) -> Result<AxiomsReport> {
    config.validate()?;
    let exhaustive = config.exhaustive || config.size <= 6;
    let broken = BrokenSymmetry(Spatial);
    let spatial: &dyn Proximity = if config.break_symmetry { &broken } else { &Spatial };

    let per_space = (0..config.spaces)
        .into_par_iter()
        .map(|i| {
            let space_seed = config.seed.wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(space_seed);
            let space = random_space(&mut rng, config.size)?;
            let sampling = if exhaustive {
                Sampling::Exhaustive
            } else {
                Sampling::Random {
                    triples: config.samples,
                    seed: space_seed,
                }
            };
            let mut reports = validate_axioms(&space, AxiomSystem::Spatial, spatial, sampling)?;
            reports.extend(validate_axioms(
                &space,
                AxiomSystem::Descriptive,
                &Descriptive,
                sampling,
            )?);
            Ok(reports)
        })
        .collect::<Result<Vec<Vec<AxiomReport>>>>()?;

    let mut results: Vec<AxiomResult> = Vec::new();
    for (space, reports) in per_space.iter().enumerate() {
        if results.is_empty() {
            results = reports
                .iter()
                .map(|r| AxiomResult {
                    space: r.witness.as_ref().map(|_| space),
                    report: r.clone(),
                })
                .collect();
            continue;
        }
        for (acc, r) in results.iter_mut().zip(reports) {
            if acc.space.is_none() && r.witness.is_some() {
                acc.space = Some(space);
            }
            acc.report = acc.report.clone().merge(r);
        }
    }
    let passed = results.iter().all(|r| r.report.passed());
    Ok(AxiomsReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        mode: if exhaustive { "exhaustive" } else { "sampled" },
        spatial_relation: spatial.name().to_string(),
        results,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::encode_pgm;

    fn write_pgm(dir: &Path, name: &str, w: usize, h: usize, levels: &[u8]) -> PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, encode_pgm(w, h, levels)).unwrap();
        path
    }

    /// 4x4 image of four 2x2 tiles; tiles 0, 1 and 2 share grey level 211.
    fn four_tiles() -> Vec<u8> {
        #[rustfmt::skip]
        let levels = vec![
            211, 10,   211, 70,
            30,  50,   100, 120,
            211, 140,  230, 250,
            160, 180,  5,   60,
        ];
        levels
    }

    fn parse(args: &[&str]) -> RunConfig {
        RunConfig::from(Cli::try_parse_from(args).unwrap())
    }

    #[test]
    fn parse_defaults() {
        let c = parse(&["proxgroup", "analyze", "a.pgm"]);
        assert_eq!(c.tile, Dims { width: 8, height: 8 });
        assert_eq!(c.stride, c.tile);
        assert_eq!(
            (c.precision, c.op.as_str(), c.tolerance, c.threshold),
            (2, "min", 0.0, 0.75)
        );
        assert_eq!(c.format, Format::Json);

        let c = parse(&[
            "proxgroup",
            "classify",
            "x.pgm",
            "y.pgm",
            "--tile",
            "4x2",
            "--format",
            "csv",
        ]);
        assert_eq!(c.inputs.len(), 2);
        assert_eq!(c.stride, Dims { width: 4, height: 2 });
        assert_eq!(c.format, Format::Csv);

        assert!(Cli::try_parse_from(["proxgroup", "analyze", "a.pgm", "--op", "avg"]).is_err());
        assert!(Cli::try_parse_from(["proxgroup", "analyze", "a.pgm", "--tile", "0x3"]).is_err());
    }

    #[test]
    fn validation_ranges() {
        let mut c = RunConfig::analyze("a.pgm");
        c.precision = 7;
        assert!(c.validate().is_err());
        let mut c = RunConfig::analyze("a.pgm");
        c.threshold = 1.5;
        assert!(c.validate().is_err());
        let mut c = RunConfig::analyze("a.pgm");
        c.tolerance = -0.1;
        assert!(c.validate().is_err());
        let mut c = RunConfig::axioms();
        c.size = 9;
        c.exhaustive = true;
        assert!(c.validate().is_err());
    }

    #[test]
    fn analyze_reports_one_three_tile_pattern() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_pgm(dir.path(), "four.pgm", 4, 4, &four_tiles());
        let mut config = RunConfig::analyze(&path);
        config.tile = Dims { width: 2, height: 2 };
        config.stride = config.tile;
        let report = cmd_analyze(&config).unwrap();
        assert_eq!(report.tiles.len(), 4);
        assert_eq!(report.patterns[0].members, vec![0, 1, 2]);
        assert_eq!(report.patterns[3].members, vec![3]);
        let sizes: Vec<usize> = report.distinct_patterns.iter().map(|d| d.members.len()).collect();
        assert_eq!(sizes, vec![3, 1]);
        assert_eq!(report.distinct_patterns[0].generators, vec![0, 1, 2]);
        assert!(report
            .tiles
            .iter()
            .all(|t| t.groupoid.regular_elements == t.groupoid.carrier_size));

        let csv = report.csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "index,x,y,width,height,carrier_size,regular_elements,total,pattern_size,pattern_members"
        );
        assert_eq!(lines.next().unwrap(), "0,0,0,2,2,4,4,true,3,0;1;2");
    }

    #[test]
    fn analyze_constant_image() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_pgm(dir.path(), "flat.pgm", 6, 6, &[90; 36]);
        let mut config = RunConfig::analyze(&path);
        config.tile = Dims { width: 2, height: 3 };
        config.stride = config.tile;
        let report = cmd_analyze(&config).unwrap();
        assert_eq!(report.tiles.len(), 6);
        assert!(report.patterns.iter().all(|p| p.members.len() == 6));
    }

    #[test]
    fn analyze_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_pgm(dir.path(), "small.pgm", 2, 2, &[0; 4]);
        let out = run(&RunConfig::analyze(&path));
        assert!(matches!(out, Err(Error::Spec(_))));
        assert!(matches!(
            run(&RunConfig::analyze(dir.path().join("none.pgm"))),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn classify_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let x = write_pgm(dir.path(), "x.pgm", 4, 4, &four_tiles());
        let disjoint: Vec<u8> = (0..16).map(|i| 190 + i).collect();
        let z = write_pgm(dir.path(), "z.pgm", 4, 4, &disjoint);
        let config = |cand: &Path| {
            let mut c = RunConfig::classify(&x, cand);
            c.tile = Dims { width: 2, height: 2 };
            c.stride = c.tile;
            c
        };
        let same = run(&config(&x)).unwrap();
        assert_eq!(same.exit_code, EXIT_OK);
        let other = run(&config(&z)).unwrap();
        assert_eq!(other.exit_code, EXIT_NEGATIVE);

        let mut csv = config(&x);
        csv.format = Format::Csv;
        let doc = run(&csv).unwrap().document;
        assert!(doc.starts_with("image,reference,matched,matched_elements,total_elements,fraction,salient"));
        assert!(doc.lines().nth(1).unwrap().contains(",true,4,4,1.0,true,0,0"));
    }

    #[test]
    fn axioms_small_run_and_fault_injection() {
        let mut c = RunConfig::axioms();
        c.spaces = 5;
        c.size = 4;
        let ok = cmd_axioms(&c).unwrap();
        assert!(ok.passed);
        assert_eq!(ok.results.len(), 10);

        c.break_symmetry = true;
        let broken = cmd_axioms(&c).unwrap();
        assert!(!broken.passed);
        let p1 = &broken.results[1];
        assert_eq!(p1.report.axiom.to_string(), "P1");
        assert!(p1.report.witness.is_some() && p1.space.is_some());
        assert!(broken.results[5..].iter().all(|r| r.report.passed()));

        c.size = 10;
        c.samples = 50;
        c.break_symmetry = false;
        let sampled = cmd_axioms(&c).unwrap();
        assert_eq!(sampled.mode, "sampled");
        assert_eq!(sampled.results[0].report.checked, 250);
    }
}
