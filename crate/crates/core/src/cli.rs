//! Command-line front end: `detect`, `synth`, `eval` and `bench`.
//!
//! Exit codes: 0 when something was found (or the command succeeded),
//! 2 when `detect` found no ellipse, 1 on any error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{match_optima, OptimumMatch, TestFunction};
use crate::cab::{Cab, CabConfig, FnObjective};
use crate::detector::{detect, DetectError, Detection, DetectorConfig};
use crate::edge::{canny, CannyConfig, EdgeMap, GrayImage};
use crate::evaluation::{score_scene, BatchReport, EvalWeights, RunReport};
use crate::geometry::EllipseParams;
use crate::pnm::{self, RgbImage};
use crate::raster::rasterize;
use crate::synth::{render, Distractor, EllipseRecord, GroundTruth, SceneEllipse, SceneSpec};

pub const EXIT_FOUND: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NONE: i32 = 2;

const OVERLAY_RED: [u8; 3] = [255, 0, 0];

#[derive(Debug, Parser)]
#[command(
    name = "ellipse-cab",
    version,
    about = "Multiple-ellipse detection with a CAB optimizer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect ellipses in a PGM/PPM image or edge map.
    Detect(DetectArgs),
    /// Render a synthetic scene with ground truth.
    Synth(SynthArgs),
    /// Score seeded detection runs against ground truth.
    Eval(EvalArgs),
    /// Run the optimizer on built-in multimodal functions.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CabArgs {
    /// Population size N_p.
    #[arg(long, default_value_t = 30)]
    pub population: usize,
    /// Memory size B.
    #[arg(long, default_value_t = 12)]
    pub memory: usize,
    /// Probability H of moving relative to the historical memory.
    #[arg(long, default_value_t = 0.5)]
    pub prob_h: f64,
    /// Probability P of a random restart.
    #[arg(long, default_value_t = 0.1)]
    pub prob_p: f64,
    /// Generations NI.
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    /// Elite perturbation as a fraction of each range.
    #[arg(long, default_value_t = 0.01)]
    pub perturbation: f64,
}

impl CabArgs {
    fn config(&self, rho: Option<f64>) -> CabConfig {
        CabConfig {
            population_size: self.population,
            memory_size: self.memory,
            prob_h: self.prob_h,
            prob_p: self.prob_p,
            iterations: self.iterations,
            rho,
            perturbation_frac: self.perturbation,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DetectorArgs {
    #[command(flatten)]
    pub cab: CabArgs,
    /// Feasible minor semi-axis, lower end [default: 5].
    #[arg(long)]
    pub r_min_low: Option<f64>,
    /// Feasible minor semi-axis, upper end [default: min(width, height) / 2].
    #[arg(long)]
    pub r_min_high: Option<f64>,
    /// Feasible major semi-axis, lower end [default: 5].
    #[arg(long)]
    pub r_max_low: Option<f64>,
    /// Feasible major semi-axis, upper end [default: min(width, height) / 2].
    #[arg(long)]
    pub r_max_high: Option<f64>,
    /// Sensitivity s dividing the similarity threshold.
    #[arg(long, default_value_t = 2.0)]
    pub sensitivity: f64,
    /// Detections below best fitness / this value are dropped.
    #[arg(long, default_value_t = 10.0)]
    pub f_th_divisor: f64,
}

impl DetectorArgs {
    pub fn config(&self, width: usize, height: usize) -> DetectorConfig {
        let mut cfg = DetectorConfig::for_image(width, height);
        cfg.cab = self.cab.config(None);
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.r_min_range[0], self.r_min_low);
        set(&mut cfg.r_min_range[1], self.r_min_high);
        set(&mut cfg.r_max_range[0], self.r_max_low);
        set(&mut cfg.r_max_range[1], self.r_max_high);
        cfg.sensitivity = self.sensitivity;
        cfg.f_th_divisor = self.f_th_divisor;
        cfg
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// PGM or PPM input.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Treat the input as an edge map (pixels >= 128 are edges) and skip Canny.
    #[arg(long)]
    pub edge_map: bool,
    /// Canny Gaussian sigma.
    #[arg(long, default_value_t = 1.4)]
    pub sigma: f64,
    /// Canny low threshold, fraction of the largest gradient.
    #[arg(long, default_value_t = 0.1)]
    pub low: f64,
    /// Canny high threshold, fraction of the largest gradient.
    #[arg(long, default_value_t = 0.3)]
    pub high: f64,
}

impl InputArgs {
    fn canny_config(&self) -> CannyConfig {
        CannyConfig {
            gaussian_sigma: self.sigma,
            low_frac: self.low,
            high_frac: self.high,
        }
    }

    fn load(&self) -> Result<(GrayImage, EdgeMap), String> {
        let img = pnm::load_gray(&self.input).map_err(|e| e.to_string())?;
        let edges = if self.edge_map {
            EdgeMap::from_gray(&img)
        } else {
            let cfg = self.canny_config();
            cfg.validate().map_err(|e| e.to_string())?;
            canny(&img, &cfg).map_err(|e| e.to_string())?
        };
        Ok((img, edges))
    }
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Detection JSON destination; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// PPM with each detection's test set drawn in red over the input.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    /// Leave the runtime out of the JSON.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Scene spec JSON; flags below add to or override it.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Ellipse `x0,y0,r_max,r_min,theta_deg[,gap_start,gap_end]`, gap in radians.
    #[arg(long = "ellipse", allow_hyphen_values = true)]
    pub ellipses: Vec<String>,
    /// Rectangle `x0,y0,x1,y1`.
    #[arg(long = "rectangle", allow_hyphen_values = true)]
    pub rectangles: Vec<String>,
    /// Triangle `x1,y1,x2,y2,x3,y3`.
    #[arg(long = "triangle", allow_hyphen_values = true)]
    pub triangles: Vec<String>,
    /// Segment `x0,y0,x1,y1`.
    #[arg(long = "segment", allow_hyphen_values = true)]
    pub segments: Vec<String>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub noise_density: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Paint solid shapes and derive edges with Canny.
    #[arg(long)]
    pub filled: bool,
    /// Directory receiving `<prefix>.pgm`, `<prefix>_edges.pgm`, `<prefix>_truth.json`.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value = "scene")]
    pub prefix: String,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Image or edge map to run detection on.
    #[arg(long, short, required_unless_present = "detections")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub edge_map: bool,
    #[arg(long, default_value_t = 1.4)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub low: f64,
    #[arg(long, default_value_t = 0.3)]
    pub high: f64,
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Ground-truth JSON.
    #[arg(long)]
    pub truth: PathBuf,
    /// Score an existing detection JSON instead of running detection.
    #[arg(long, conflicts_with = "input")]
    pub detections: Option<PathBuf>,
    #[arg(long, default_value_t = 35)]
    pub runs: usize,
    /// First seed; run k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub p1: f64,
    #[arg(long, default_value_t = 0.1)]
    pub p2: f64,
    #[arg(long, default_value_t = 0.2)]
    pub p3: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Report runtimes as 0 so reports are reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = TestFunction::Bimodal)]
    pub function: TestFunction,
    #[command(flatten)]
    pub cab: CabArgs,
    /// Competition distance in normalized units [default: 1 / (10 D)].
    #[arg(long)]
    pub rho: Option<f64>,
    /// Largest normalized distance that counts as locating an optimum.
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
}

/// One detected ellipse as written to JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    #[serde(flatten)]
    pub ellipse: EllipseRecord,
    pub fitness: f64,
    pub n_s: usize,
}

impl DetectionRecord {
    pub fn from_detection(d: &Detection) -> Self {
        Self {
            ellipse: EllipseRecord::from_params(&d.ellipse),
            fitness: d.fitness,
            n_s: d.n_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: String,
    pub detector: DetectorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canny: Option<CannyConfig>,
}

/// Output of `detect`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub image: String,
    pub seed: u64,
    pub config: RunConfig,
    pub detections: Vec<DetectionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

impl DetectionReport {
    pub fn ellipses(&self) -> Vec<EllipseParams> {
        self.detections.iter().map(|d| d.ellipse.params()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRun {
    pub seed: u64,
    pub optima: Vec<OptimumMatch>,
    pub all_found: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub function: TestFunction,
    pub rho: f64,
    pub tolerance: f64,
    pub runs: Vec<BenchRun>,
    pub success_rate: f64,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn detect_or_empty(
    edges: &EdgeMap,
    cfg: &DetectorConfig,
    seed: u64,
) -> Result<Vec<Detection>, String> {
    match detect(edges, cfg, seed) {
        Ok(d) => Ok(d),
        Err(DetectError::TooFewEdgePixels { .. }) => Ok(Vec::new()),
        Err(e) => Err(e.to_string()),
    }
}

/// Gray input with each detection's test set in red.
pub fn overlay(img: &GrayImage, detections: &[Detection]) -> RgbImage {
    let mut rgb = RgbImage::from_gray(img);
    for d in detections {
        for &(x, y) in rasterize(&d.ellipse, img.width(), img.height()).points() {
            rgb.put(x, y, OVERLAY_RED);
        }
    }
    rgb
}

fn cmd_detect(args: &DetectArgs, out: &mut dyn Write) -> Result<i32, String> {
    let (img, edges) = args.input.load()?;
    let cfg = args.detector.config(img.width(), img.height());
    cfg.validate().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let detections = detect_or_empty(&edges, &cfg, args.seed)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let report = DetectionReport {
        image: args.input.input.display().to_string(),
        seed: args.seed,
        config: RunConfig {
            input: if args.input.edge_map {
                "edge_map"
            } else {
                "image"
            }
            .into(),
            detector: cfg,
            canny: (!args.input.edge_map).then(|| args.input.canny_config()),
        },
        detections: detections
            .iter()
            .map(DetectionRecord::from_detection)
            .collect(),
        runtime_ms: (!args.no_timing).then_some(runtime_ms),
    };
    emit(args.output.as_deref(), &to_json(&report), out)?;
    if let Some(path) = &args.overlay {
        pnm::save_ppm(path, &overlay(&img, &detections)).map_err(|e| e.to_string())?;
    }
    Ok(if detections.is_empty() {
        EXIT_NONE
    } else {
        EXIT_FOUND
    })
}

fn numbers(text: &str, counts: &[usize], what: &str) -> Result<Vec<f64>, String> {
    let values: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("{what} `{text}`: expected comma-separated numbers"))?;
    if !counts.contains(&values.len()) {
        return Err(format!(
            "{what} `{text}`: expected {counts:?} values, got {}",
            values.len()
        ));
    }
    Ok(values)
}

fn scene_spec(args: &SynthArgs) -> Result<SceneSpec, String> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => SceneSpec::default(),
    };
    for e in &args.ellipses {
        let v = numbers(e, &[5, 7], "--ellipse")?;
        spec.ellipses.push(SceneEllipse {
            ellipse: EllipseRecord {
                x0: v[0],
                y0: v[1],
                r_max: v[2],
                r_min: v[3],
                theta_deg: v[4],
            },
            occlusion: (v.len() == 7).then(|| [v[5], v[6]]),
        });
    }
    for r in &args.rectangles {
        let v = numbers(r, &[4], "--rectangle")?;
        spec.distractors.push(Distractor::Rectangle {
            from: [v[0], v[1]],
            to: [v[2], v[3]],
        });
    }
    for t in &args.triangles {
        let v = numbers(t, &[6], "--triangle")?;
        spec.distractors.push(Distractor::Triangle {
            vertices: [[v[0], v[1]], [v[2], v[3]], [v[4], v[5]]],
        });
    }
    for s in &args.segments {
        let v = numbers(s, &[4], "--segment")?;
        spec.distractors.push(Distractor::Segment {
            from: [v[0], v[1]],
            to: [v[2], v[3]],
        });
    }
    if let Some(w) = args.width {
        spec.width = w;
    }
    if let Some(h) = args.height {
        spec.height = h;
    }
    if let Some(d) = args.noise_density {
        spec.noise_density = d;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    spec.filled |= args.filled;
    Ok(spec)
}

fn cmd_synth(args: &SynthArgs) -> Result<i32, String> {
    let spec = scene_spec(args)?;
    let scene = render(&spec).map_err(|e| e.to_string())?;
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| format!("cannot create {}: {e}", args.out_dir.display()))?;
    let path = |suffix: &str| args.out_dir.join(format!("{}{suffix}", args.prefix));
    pnm::save_gray(path(".pgm"), &scene.image).map_err(|e| e.to_string())?;
    pnm::save_edge_map(path("_edges.pgm"), &scene.edges).map_err(|e| e.to_string())?;
    let truth = path("_truth.json");
    fs::write(&truth, scene.truth.to_json() + "\n")
        .map_err(|e| format!("cannot write {}: {e}", truth.display()))?;
    Ok(EXIT_FOUND)
}

fn load_truth(path: &Path) -> Result<Vec<EllipseParams>, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let truth = GroundTruth::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if truth.ellipses.is_empty() {
        return Err(format!("{}: ground truth is empty", path.display()));
    }
    Ok(truth.params())
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<i32, String> {
    let weights = EvalWeights {
        p1: args.p1,
        p2: args.p2,
        p3: args.p3,
    };
    weights.validate().map_err(|e| e.to_string())?;
    let truth = load_truth(&args.truth)?;
    let per_run = if let Some(path) = &args.detections {
        let text =
            fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let report: DetectionReport =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let score = score_scene(&truth, &report.ellipses(), &weights).map_err(|e| e.to_string())?;
        let runtime = if args.no_timing {
            0.0
        } else {
            report.runtime_ms.unwrap_or(0.0) / 1e3
        };
        vec![RunReport::new(report.seed, &score, runtime)]
    } else {
        if args.runs == 0 {
            return Err("--runs must be at least 1".into());
        }
        let input = InputArgs {
            input: args.input.clone().expect("clap requires --input"),
            edge_map: args.edge_map,
            sigma: args.sigma,
            low: args.low,
            high: args.high,
        };
        let (img, edges) = input.load()?;
        let cfg = args.detector.config(img.width(), img.height());
        cfg.validate().map_err(|e| e.to_string())?;
        (0..args.runs as u64)
            .into_par_iter()
            .map(|k| {
                let seed = args.seed + k;
                let start = Instant::now();
                let dets = detect_or_empty(&edges, &cfg, seed)?;
                let runtime = if args.no_timing {
                    0.0
                } else {
                    start.elapsed().as_secs_f64()
                };
                let found: Vec<EllipseParams> = dets.iter().map(|d| d.ellipse).collect();
                let score = score_scene(&truth, &found, &weights).map_err(|e| e.to_string())?;
                Ok(RunReport::new(seed, &score, runtime))
            })
            .collect::<Result<Vec<_>, String>>()?
    };
    let report = BatchReport::from_runs(per_run).map_err(|e| e.to_string())?;
    emit(args.output.as_deref(), &to_json(&report), out)?;
    Ok(EXIT_FOUND)
}

/// Runs the optimizer on one test function for `args.runs` consecutive seeds.
pub fn bench_report(args: &BenchArgs) -> Result<BenchReport, String> {
    let f = args.function;
    let bounds = f.bounds();
    let cfg = args.cab.config(args.rho);
    let objective = FnObjective::new(bounds.clone(), |x: &[f64]| f.evaluate(x));
    let cab = Cab::new(&bounds, &cfg, &objective).map_err(|e| e.to_string())?;
    let runs: Vec<BenchRun> = (0..args.runs as u64)
        .map(|k| {
            let seed = args.seed + k;
            let Ok(memory) = cab.run(&mut ChaCha8Rng::seed_from_u64(seed));
            let optima = match_optima(f, &memory, args.tolerance);
            BenchRun {
                seed,
                all_found: optima.iter().all(|o| o.found),
                optima,
            }
        })
        .collect();
    if runs.is_empty() {
        return Err("--runs must be at least 1".into());
    }
    let ok = runs.iter().filter(|r| r.all_found).count();
    Ok(BenchReport {
        function: f,
        rho: cab.rho(),
        tolerance: args.tolerance,
        success_rate: 100.0 * ok as f64 / runs.len() as f64,
        runs,
    })
}

fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<i32, String> {
    let report = bench_report(args)?;
    emit(None, &to_json(&report), out)?;
    Ok(EXIT_FOUND)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_ERROR
            } else {
                let _ = out.write_all(text.as_bytes());
                EXIT_FOUND
            };
        }
    };
    let result = match &cli.command {
        Command::Detect(a) => cmd_detect(a, out),
        Command::Synth(a) => cmd_synth(a),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Bench(a) => cmd_bench(a, out),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("ellipse-cab").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn bench_finds_both_bimodal_optima() {
        let (code, out, _) = run_args(&["bench", "--function", "bimodal", "--seed", "3"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["runs"][0]["all_found"], true);
        let (_, again, _) = run_args(&["bench", "--function", "bimodal", "--seed", "3"]);
        assert_eq!(out, again);
    }

    #[test]
    fn zero_iterations_rejected() {
        let (code, _, err) = run_args(&["bench", "--iterations", "0"]);
        assert_eq!(code, 1);
        assert!(err.contains("iterations"), "{err}");
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_args(&["detect"]).0, 1);
        assert_eq!(run_args(&["frobnicate"]).0, 1);
        assert_eq!(run_args(&["--help"]).0, 0);
    }

    #[test]
    fn missing_input_exits_one() {
        let (code, _, err) = run_args(&["detect", "--input", "/nonexistent/in.pgm"]);
        assert_eq!(code, 1);
        assert!(err.contains("/nonexistent/in.pgm"));
    }

    #[test]
    fn blank_image_exits_two_with_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("blank.pgm");
        pnm::save_gray(&path, &GrayImage::new(64, 48).unwrap()).unwrap();
        let (code, out, _) =
            run_args(&["detect", "--input", path.to_str().unwrap(), "--no-timing"]);
        assert_eq!(code, 2);
        let report: DetectionReport = serde_json::from_str(&out).unwrap();
        assert!(report.detections.is_empty());
        assert!(report.runtime_ms.is_none());
    }

    #[test]
    fn synth_spec_flags() {
        let args = SynthArgs {
            spec: None,
            ellipses: vec!["200,150,80,40,30,0,1.5".into()],
            rectangles: vec!["10,10,60,40".into()],
            triangles: vec![],
            segments: vec!["1,2,3".into()],
            width: None,
            height: None,
            noise_density: Some(0.1),
            seed: Some(4),
            filled: false,
            out_dir: PathBuf::from("."),
            prefix: "scene".into(),
        };
        assert!(scene_spec(&args).unwrap_err().contains("--segment"));
        let args = SynthArgs {
            segments: vec![],
            ..args
        };
        let spec = scene_spec(&args).unwrap();
        assert_eq!(spec.ellipses[0].occlusion, Some([0.0, 1.5]));
        assert_eq!(spec.distractors.len(), 1);
        assert_eq!((spec.noise_density, spec.seed), (0.1, 4));
    }

    #[test]
    fn synth_rejects_heavy_noise() {
        let dir = tempfile::tempdir().unwrap();
        let (code, _, err) = run_args(&[
            "synth",
            "--ellipse",
            "200,150,80,40,0",
            "--noise-density",
            "0.6",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 1);
        assert!(err.contains("noise_density"), "{err}");
    }
}
