//! Score a batch of seeded runs in parallel.

use ellipse_cab::detector::{detect, DetectorConfig};
use ellipse_cab::evaluation::{score_scene, BatchReport, EvalWeights, RunReport};
use ellipse_cab::geometry::EllipseParams;
use ellipse_cab::synth::{render, SceneSpec};
use rayon::prelude::*;
use std::time::Instant;

fn main() {
    let spec = SceneSpec {
        noise_density: 0.02,
        seed: 5,
        ..SceneSpec::default()
    }
    .with_ellipse(EllipseParams::new(
        110.0,
        150.0,
        80.0,
        40.0,
        20f64.to_radians(),
    ))
    .with_ellipse(EllipseParams::new(
        290.0,
        150.0,
        80.0,
        40.0,
        (-30f64).to_radians(),
    ));
    let scene = render(&spec).expect("valid scene");
    let truth = scene.truth.params();
    let cfg = DetectorConfig::for_image(spec.width, spec.height);
    let weights = EvalWeights::default();

    let runs: Vec<RunReport> = (0..35u64)
        .into_par_iter()
        .map(|seed| {
            let start = Instant::now();
            let found = detect(&scene.edges, &cfg, seed).unwrap_or_default();
            let dets: Vec<_> = found.iter().map(|d| d.ellipse).collect();
            let score = score_scene(&truth, &dets, &weights).unwrap();
            RunReport::new(seed, &score, start.elapsed().as_secs_f64())
        })
        .collect();
    let report = BatchReport::from_runs(runs).unwrap();
    println!(
        "SR {:.1}%  ME {:.4} ± {:.4}  runtime {:.3} s",
        report.sr, report.me_mean, report.me_std, report.runtime_mean_s
    );
}
