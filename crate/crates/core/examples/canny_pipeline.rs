//! Filled shapes with noise, Canny edges, then detection. Writes PGM/PPM
//! files to the directory given as the first argument (default: `.`).

use std::path::PathBuf;

use ellipse_cab::cli::overlay;
use ellipse_cab::detector::{detect_image, DetectorConfig};
use ellipse_cab::edge::{canny, CannyConfig};
use ellipse_cab::geometry::EllipseParams;
use ellipse_cab::pnm;
use ellipse_cab::synth::{render, SceneSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let spec = SceneSpec {
        filled: true,
        noise_density: 0.02,
        seed: 5,
        ..SceneSpec::default()
    }
    .with_ellipse(EllipseParams::new(
        200.0,
        150.0,
        90.0,
        50.0,
        10f64.to_radians(),
    ));
    let scene = render(&spec)?;

    let canny_cfg = CannyConfig::default();
    let edges = canny(&scene.image, &canny_cfg)?;
    println!("{} edge pixels", edges.count());

    let cfg = DetectorConfig::for_image(spec.width, spec.height);
    let found = detect_image(&scene.image, &canny_cfg, &cfg, 3)?;
    for d in &found {
        println!("{:?} fitness {:.3}", d.ellipse, d.fitness);
    }

    pnm::save_gray(out.join("canny_input.pgm"), &scene.image)?;
    pnm::save_edge_map(out.join("canny_edges.pgm"), &edges)?;
    pnm::save_ppm(
        out.join("canny_overlay.ppm"),
        &overlay(&scene.image, &found),
    )?;
    Ok(())
}
