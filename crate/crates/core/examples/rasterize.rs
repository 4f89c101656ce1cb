//! Rasterize an ellipse and print it as ASCII art.

use ellipse_cab::geometry::EllipseParams;
use ellipse_cab::raster::rasterize;

fn main() {
    let (w, h) = (60, 30);
    let e = EllipseParams::new(30.0, 15.0, 25.0, 10.0, 20f64.to_radians());
    let set = rasterize(&e, w, h);
    let mut grid = vec![vec!['.'; w]; h];
    for &(x, y) in set.points() {
        grid[y as usize][x as usize] = '#';
    }
    for row in grid {
        println!("{}", row.into_iter().collect::<String>());
    }
    println!("{} pixels", set.len());
}
