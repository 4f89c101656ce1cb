//! Recover an ellipse from five points on its boundary.

use ellipse_cab::geometry::{ellipse_through, EllipseParams};

fn main() {
    let truth = EllipseParams::new(200.0, 150.0, 60.0, 25.0, 35f64.to_radians());
    let ts = [0.1, 1.3, 2.2, 3.9, 5.1];
    let points = ts.map(|t| truth.point_at(t));
    for (t, (x, y)) in ts.iter().zip(points) {
        println!("t = {t:.1}  ({x:8.3}, {y:8.3})");
    }
    let fit = ellipse_through(points).expect("five points in general position");
    println!("truth: {truth:?}");
    println!("fit:   {fit:?}");

    let collinear = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0)];
    println!("collinear: {:?}", ellipse_through(collinear).unwrap_err());
}
