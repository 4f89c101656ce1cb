//! An ellipse with a quarter of its outline missing is still found, with
//! fitness near the visible fraction.

use ellipse_cab::detector::{detect, DetectorConfig};
use ellipse_cab::synth::{render, EllipseRecord, SceneEllipse, SceneSpec};

fn main() {
    let spec = SceneSpec {
        ellipses: vec![SceneEllipse {
            ellipse: EllipseRecord {
                x0: 200.0,
                y0: 150.0,
                r_max: 80.0,
                r_min: 40.0,
                theta_deg: 15.0,
            },
            occlusion: Some([0.0, std::f64::consts::FRAC_PI_2]),
        }],
        ..SceneSpec::default()
    };
    let scene = render(&spec).expect("valid scene");
    let cfg = DetectorConfig::for_image(spec.width, spec.height);
    for seed in 0..5 {
        let found = detect(&scene.edges, &cfg, seed).expect("enough edge pixels");
        let best = &found[0];
        println!(
            "seed {seed}: {} detection(s), best fitness {:.3} at ({:.1}, {:.1})",
            found.len(),
            best.fitness,
            best.ellipse.x0,
            best.ellipse.y0
        );
    }
}
