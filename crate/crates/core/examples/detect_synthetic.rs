//! Detect two ellipses in a synthetic edge map.

use ellipse_cab::detector::{detect, DetectorConfig};
use ellipse_cab::evaluation::{score_scene, EvalWeights};
use ellipse_cab::geometry::EllipseParams;
use ellipse_cab::synth::{render, SceneSpec};

fn main() {
    let spec = SceneSpec::default()
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
    let cfg = DetectorConfig::for_image(spec.width, spec.height);

    let found = detect(&scene.edges, &cfg, 1).expect("enough edge pixels");
    for d in &found {
        let e = d.ellipse;
        println!(
            "({:6.2}, {:6.2})  r = {:5.2} / {:5.2}  theta = {:6.2} deg  fitness {:.3}",
            e.x0,
            e.y0,
            e.r_max,
            e.r_min,
            e.theta.to_degrees(),
            d.fitness
        );
    }
    let dets: Vec<_> = found.iter().map(|d| d.ellipse).collect();
    let score = score_scene(&scene.truth.params(), &dets, &EvalWeights::default()).unwrap();
    println!("ME = {:.4}", score.me);
}
