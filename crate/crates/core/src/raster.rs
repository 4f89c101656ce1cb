//! Ellipse perimeter rasterization.
//!
//! [`mea_quadrant`] traces the first quadrant of an axis-aligned ellipse with
//! the two-region midpoint algorithm. Its decision variable is kept scaled
//! by 4 so every update is an integer addition.
//!
//! Candidate ellipses have real-valued centres, radii and an orientation.
//! [`rasterize`] applies the same midpoint selection (the pixel nearest the
//! curve at each scan position, scanning columns where the curve is flat
//! and rows where it is steep) to the exact rotated curve, then deduplicates
//! and clips to the image. For integer radii and centre with zero
//! orientation the two produce the same pixels.

use std::collections::HashSet;

use thiserror::Error;

use crate::geometry::EllipseParams;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RasterError {
    #[error("radii must be at least 1, got rx={rx}, ry={ry}")]
    NonPositiveRadius { rx: i64, ry: i64 },
}

/// Pixels on a candidate ellipse's perimeter that lie inside the image.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TestSet {
    points: Vec<(i64, i64)>,
}

impl TestSet {
    pub fn points(&self) -> &[(i64, i64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<(i64, i64)> {
        self.points
    }
}

/// First-quadrant boundary pixels of `x²/rx² + y²/ry² = 1`, ordered from
/// `(0, ry)` to `(rx, 0)`.
pub fn mea_quadrant(rx: i64, ry: i64) -> Result<Vec<(i64, i64)>, RasterError> {
    if rx < 1 || ry < 1 {
        return Err(RasterError::NonPositiveRadius { rx, ry });
    }
    let (rx2, ry2) = (rx * rx, ry * ry);
    let (mut x, mut y) = (0, ry);
    let (mut px, mut py) = (0, 2 * rx2 * y);
    let mut pts = vec![(x, y)];

    // Region 1: slope above -1, step in x.
    let mut p = 4 * ry2 - 4 * rx2 * ry + rx2;
    while px < py {
        x += 1;
        px += 2 * ry2;
        if p < 0 {
            p += 4 * (ry2 + px);
        } else {
            y -= 1;
            py -= 2 * rx2;
            p += 4 * (ry2 + px - py);
        }
        pts.push((x, y));
    }

    // Region 2: slope below -1, step in y.
    let mut p = ry2 * (2 * x + 1) * (2 * x + 1) + 4 * rx2 * (y - 1) * (y - 1) - 4 * rx2 * ry2;
    while y > 0 {
        y -= 1;
        py -= 2 * rx2;
        if p > 0 {
            p += 4 * (rx2 - py);
        } else {
            x += 1;
            px += 2 * ry2;
            p += 4 * (rx2 - py + px);
        }
        pts.push((x, y));
    }

    // Very flat ellipses can reach y = 0 inside region 1, short of the tip.
    while x < rx {
        x += 1;
        pts.push((x, 0));
    }
    Ok(pts)
}

/// Scan-position pixels of the exact ellipse `e`, restricted to the image.
///
/// Each integer column contributes the pixel nearest to each crossing when
/// the curve is flatter than 45° at that pixel, and each integer row does
/// the same along x where it is steeper. This is the selection the midpoint test
/// makes, evaluated on the rotated curve with real-valued parameters. Each
/// pixel carries the parametric angle of the crossing it came from.
fn scan_pixels(e: &EllipseParams, width: usize, height: usize) -> Vec<(f64, (i64, i64))> {
    let (a2, b2) = (e.r_max * e.r_max, e.r_min * e.r_min);
    let (s, c) = e.theta.sin_cos();
    let (x0, y0) = (e.x0, e.y0);
    let mut out = Vec::new();
    if !e.is_valid() {
        return out;
    }
    // F(dx, dy) = u²/a² + v²/b² - 1 with (u, v) the offset in the ellipse frame.
    let gradient = |dx: f64, dy: f64| {
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        (
            u * c / a2 - v * s / b2,
            u * s / a2 + v * c / b2,
            (v / e.r_min)
                .atan2(u / e.r_max)
                .rem_euclid(std::f64::consts::TAU),
        )
    };
    // Quadratic in the free offset `t` for a fixed offset `k` along the scan
    // axis. `swap` selects rows (t = dx) instead of columns (t = dy).
    let roots = |k: f64, swap: bool| -> Option<(f64, f64)> {
        let (ss, cc, sc) = (s * s, c * c, s * c);
        let (qa, qb, qc) = if swap {
            (
                cc / a2 + ss / b2,
                2.0 * k * sc * (1.0 / a2 - 1.0 / b2),
                k * k * (ss / a2 + cc / b2) - 1.0,
            )
        } else {
            (
                ss / a2 + cc / b2,
                2.0 * k * sc * (1.0 / a2 - 1.0 / b2),
                k * k * (cc / a2 + ss / b2) - 1.0,
            )
        };
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        Some(((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)))
    };

    let x_ext = (a2 * c * c + b2 * s * s).sqrt();
    let y_ext = (a2 * s * s + b2 * c * c).sqrt();
    let x_lo = ((x0 - x_ext).ceil() as i64).max(0);
    let x_hi = ((x0 + x_ext).floor() as i64).min(width as i64 - 1);
    for x in x_lo..=x_hi {
        let dx = x as f64 - x0;
        if let Some((t1, t2)) = roots(dx, false) {
            for dy in [t1, t2] {
                let py = (y0 + dy).round();
                let (gx, gy, _) = gradient(dx, py - y0);
                if gy.abs() >= gx.abs() {
                    out.push((gradient(dx, dy).2, (x, py as i64)));
                }
            }
        }
    }
    let y_lo = ((y0 - y_ext).ceil() as i64).max(0);
    let y_hi = ((y0 + y_ext).floor() as i64).min(height as i64 - 1);
    for y in y_lo..=y_hi {
        let dy = y as f64 - y0;
        if let Some((t1, t2)) = roots(dy, true) {
            for dx in [t1, t2] {
                let px = (x0 + dx).round();
                let (gx, gy, _) = gradient(px - x0, dy);
                if gx.abs() > gy.abs() {
                    out.push((gradient(dx, dy).2, (px as i64, y)));
                }
            }
        }
    }
    let (w, h) = (width as i64, height as i64);
    out.retain(|&(_, (x, y))| x >= 0 && y >= 0 && x < w && y < h);
    out
}

/// Rasterizes `e` into the test set for a `width` x `height` image. Points
/// are ordered by parametric angle, starting on the positive major axis.
pub fn rasterize(e: &EllipseParams, width: usize, height: usize) -> TestSet {
    let mut pixels = scan_pixels(e, width, height);
    pixels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut seen = HashSet::with_capacity(pixels.len());
    let points = pixels
        .into_iter()
        .map(|(_, p)| p)
        .filter(|&p| seen.insert(p))
        .collect();
    TestSet { points }
}

/// Number of test-set pixels of `e` and how many of them satisfy `hit`.
/// Same set as [`rasterize`], without ordering it.
pub fn count_hits(
    e: &EllipseParams,
    width: usize,
    height: usize,
    mut hit: impl FnMut(i64, i64) -> bool,
) -> (usize, usize) {
    let pixels = scan_pixels(e, width, height);
    let mut seen = HashSet::with_capacity(pixels.len());
    let (mut n, mut matched) = (0, 0);
    for (_, p) in pixels {
        if seen.insert(p) {
            n += 1;
            if hit(p.0, p.1) {
                matched += 1;
            }
        }
    }
    (n, matched)
}

/// Pixels of the segment from `a` to `b` inclusive (Bresenham).
pub fn line_points(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut pts = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        pts.push((x, y));
        if (x, y) == b {
            return pts;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}
