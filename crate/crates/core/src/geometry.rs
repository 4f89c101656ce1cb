//! Five-point conic fitting and ellipse parameter recovery.
//!
//! A conic through five points is written as
//! `a x² + 2h xy + b y² + 2g x + 2f y + 1 = 0`, i.e. the general conic
//! divided by its constant term. The five unknowns come from a 5x5 linear
//! system solved by Gaussian elimination with partial pivoting.
//!
//! Fitting happens in a local frame centred on the centroid of the five
//! points and scaled by their RMS spread. Coordinates near the origin keep
//! the system well conditioned, and the centroid of five points on an
//! ellipse is strictly inside it, so the constant term never vanishes for a
//! real ellipse.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate point configuration: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("conic is not an ellipse: {0}")]
    NotAnEllipse(&'static str),
}

/// Relative pivot size below which the 5x5 system is declared singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Conic coefficients of `a u² + 2h uv + b v² + 2g u + 2f v + 1 = 0`, where
/// `(u, v) = ((x, y) - origin) / scale` is the frame the conic was fitted in.
/// A conic built with [`ConicCoeffs::new`] lives in the pixel frame
/// (origin `(0, 0)`, scale 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicCoeffs {
    pub a: f64,
    pub h: f64,
    pub b: f64,
    pub g: f64,
    pub f: f64,
    origin: (f64, f64),
    scale: f64,
}

impl ConicCoeffs {
    pub fn new(a: f64, h: f64, b: f64, g: f64, f: f64) -> Self {
        Self::in_frame(a, h, b, g, f, (0.0, 0.0), 1.0)
    }

    pub fn in_frame(
        a: f64,
        h: f64,
        b: f64,
        g: f64,
        f: f64,
        origin: (f64, f64),
        scale: f64,
    ) -> Self {
        Self {
            a,
            h,
            b,
            g,
            f,
            origin,
            scale,
        }
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn to_frame(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin.0) / self.scale,
            (y - self.origin.1) / self.scale,
        )
    }

    /// Left-hand side of the conic equation at pixel point `(x, y)`.
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        let (u, v) = self.to_frame(x, y);
        self.a * u * u
            + 2.0 * self.h * u * v
            + self.b * v * v
            + 2.0 * self.g * u
            + 2.0 * self.f * v
            + 1.0
    }

    /// [`evaluate`](Self::evaluate) divided by the sum of the magnitudes of
    /// its terms.
    pub fn relative_residual(&self, x: f64, y: f64) -> f64 {
        let (u, v) = self.to_frame(x, y);
        let terms = [
            self.a * u * u,
            2.0 * self.h * u * v,
            self.b * v * v,
            2.0 * self.g * u,
            2.0 * self.f * v,
            1.0,
        ];
        let sum: f64 = terms.iter().sum();
        let mag: f64 = terms.iter().map(|t| t.abs()).sum();
        sum.abs() / mag
    }

    /// `ab - h²`; positive for ellipses.
    pub fn c(&self) -> f64 {
        self.a * self.b - self.h * self.h
    }

    /// `sqrt((a - b)² + 4h²)`.
    pub fn r(&self) -> f64 {
        (self.a - self.b).hypot(2.0 * self.h)
    }

    /// Determinant of `[[a, h, g], [h, b, f], [g, f, 1]]`.
    pub fn delta(&self) -> f64 {
        let (a, h, b, g, f) = (self.a, self.h, self.b, self.g, self.f);
        a * (b - f * f) - h * (h - f * g) + g * (h * f - b * g)
    }

    /// Re-expresses the conic in pixel coordinates. Fails when the conic
    /// passes through the pixel origin, where the constant term is zero.
    pub fn to_pixel_frame(&self) -> Result<ConicCoeffs, GeometryError> {
        let (ox, oy) = self.origin;
        let s = self.scale;
        // Substitute u = (x - ox)/s, v = (y - oy)/s and collect terms.
        let a = self.a / (s * s);
        let b = self.b / (s * s);
        let h = self.h / (s * s);
        let g = self.g / s - (self.a * ox + self.h * oy) / (s * s);
        let f = self.f / s - (self.h * ox + self.b * oy) / (s * s);
        let c = self.evaluate(0.0, 0.0);
        let mag = 1.0 + (a * ox * ox).abs() + (b * oy * oy).abs() + (2.0 * h * ox * oy).abs();
        if c.abs() <= PIVOT_TOLERANCE * mag {
            return Err(GeometryError::DegenerateConfiguration(
                "conic passes through the origin",
            ));
        }
        Ok(ConicCoeffs::new(a / c, h / c, b / c, g / c, f / c))
    }
}

/// Geometric ellipse: centre, semi-axes and the orientation of the major
/// axis, measured from the +x axis towards +y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub x0: f64,
    pub y0: f64,
    pub r_max: f64,
    pub r_min: f64,
    /// Radians in `[-π/2, π/2)`.
    pub theta: f64,
}

/// Wraps an axial angle into `[-π/2, π/2)`.
pub fn normalize_axial(theta: f64) -> f64 {
    let t = (theta + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
    if t >= FRAC_PI_2 {
        -FRAC_PI_2
    } else {
        t
    }
}

/// Smallest difference between two axial angles, in `[0, π/2]`.
pub fn axial_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

impl EllipseParams {
    /// Builds an ellipse, swapping the radii (and turning the orientation
    /// by a quarter turn) if `r_max < r_min`.
    pub fn new(x0: f64, y0: f64, r_max: f64, r_min: f64, theta: f64) -> Self {
        let (r_max, r_min, theta) = if r_max >= r_min {
            (r_max, r_min, theta)
        } else {
            (r_min, r_max, theta + FRAC_PI_2)
        };
        Self {
            x0,
            y0,
            r_max,
            r_min,
            theta: normalize_axial(theta),
        }
    }

    pub fn point_at(&self, t: f64) -> (f64, f64) {
        point_on_ellipse(self, t)
    }

    pub fn is_valid(&self) -> bool {
        [self.x0, self.y0, self.r_max, self.r_min, self.theta]
            .iter()
            .all(|v| v.is_finite())
            && self.r_max >= self.r_min
            && self.r_min > 0.0
    }

    /// Parametric angle of `(x, y)`: the `t` for which
    /// [`point_on_ellipse`] lands on the ray from the centre through the point.
    pub fn parametric_angle(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.x0, y - self.y0);
        let (s, c) = self.theta.sin_cos();
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        (v / self.r_min).atan2(u / self.r_max).rem_euclid(2.0 * PI)
    }

    /// The same ellipse as a conic in the pixel frame.
    pub fn to_conic(&self) -> ConicCoeffs {
        let (s, c) = self.theta.sin_cos();
        let (p, q) = (self.r_max * self.r_max, self.r_min * self.r_min);
        // Centred quadratic form, then translate and normalise the constant.
        let qa = c * c / p + s * s / q;
        let qb = s * s / p + c * c / q;
        let qh = c * s * (1.0 / p - 1.0 / q);
        let (x0, y0) = (self.x0, self.y0);
        let qg = -(qa * x0 + qh * y0);
        let qf = -(qh * x0 + qb * y0);
        let k = qa * x0 * x0 + 2.0 * qh * x0 * y0 + qb * y0 * y0 - 1.0;
        ConicCoeffs::new(qa / k, qh / k, qb / k, qg / k, qf / k)
    }
}

/// `center + rotation(theta) · (r_max cos t, r_min sin t)`.
pub fn point_on_ellipse(e: &EllipseParams, t: f64) -> (f64, f64) {
    let (st, ct) = t.sin_cos();
    let (u, v) = (e.r_max * ct, e.r_min * st);
    let (s, c) = e.theta.sin_cos();
    (e.x0 + c * u - s * v, e.y0 + s * u + c * v)
}

/// Solves the 5x5 system in place with partial pivoting.
fn solve5(mut m: [[f64; 6]; 5]) -> Result<[f64; 5], GeometryError> {
    let scale = m
        .iter()
        .flat_map(|row| row[..5].iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(GeometryError::DegenerateConfiguration("empty system"));
    }
    let tol = PIVOT_TOLERANCE * scale;
    for col in 0..5 {
        let pivot = (col..5)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("non-empty range");
        if m[pivot][col].abs() < tol {
            return Err(GeometryError::DegenerateConfiguration("singular system"));
        }
        m.swap(col, pivot);
        for row in col + 1..5 {
            let factor = m[row][col] / m[col][col];
            if factor != 0.0 {
                for k in col..6 {
                    m[row][k] -= factor * m[col][k];
                }
            }
        }
    }
    let mut x = [0.0; 5];
    for row in (0..5).rev() {
        let tail: f64 = (row + 1..5).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][5] - tail) / m[row][row];
    }
    Ok(x)
}

/// Fits the conic through five points.
pub fn fit_conic_five_points(points: [(f64, f64); 5]) -> Result<ConicCoeffs, GeometryError> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(GeometryError::DegenerateConfiguration("non-finite point"));
    }
    let cx = points.iter().map(|p| p.0).sum::<f64>() / 5.0;
    let cy = points.iter().map(|p| p.1).sum::<f64>() / 5.0;
    let spread = (points
        .iter()
        .map(|(x, y)| (x - cx).powi(2) + (y - cy).powi(2))
        .sum::<f64>()
        / 5.0)
        .sqrt();
    if spread == 0.0 {
        return Err(GeometryError::DegenerateConfiguration("coincident points"));
    }
    let mut m = [[0.0; 6]; 5];
    for (row, (x, y)) in m.iter_mut().zip(points) {
        let (u, v) = ((x - cx) / spread, (y - cy) / spread);
        *row = [u * u, 2.0 * u * v, v * v, 2.0 * u, 2.0 * v, -1.0];
    }
    let [a, h, b, g, f] = solve5(m)?;
    Ok(ConicCoeffs::in_frame(a, h, b, g, f, (cx, cy), spread))
}

/// Recovers centre, semi-axes and orientation from conic coefficients.
pub fn conic_to_ellipse(conic: &ConicCoeffs) -> Result<EllipseParams, GeometryError> {
    let ConicCoeffs { a, h, b, g, f, .. } = *conic;
    if ![a, h, b, g, f].iter().all(|v| v.is_finite()) {
        return Err(GeometryError::NotAnEllipse("non-finite coefficients"));
    }
    let c = conic.c();
    if !(c > 0.0) {
        return Err(GeometryError::NotAnEllipse("ab - h² is not positive"));
    }
    let cx = (h * f - b * g) / c;
    let cy = (g * h - a * f) / c;

    // Centred form: λ+ u'² + λ- v'² = k in the principal frame, with
    // λ+ λ- = C. The smaller-magnitude eigenvalue comes from the product to
    // avoid cancellation on elongated ellipses.
    let r = conic.r();
    let (lambda_plus, lambda_minus) = if a + b >= 0.0 {
        let lp = (a + b + r) / 2.0;
        (lp, c / lp)
    } else {
        let lm = (a + b - r) / 2.0;
        (c / lm, lm)
    };
    let k = -conic.delta() / c;
    let along = k / lambda_plus;
    let across = k / lambda_minus;
    if !(along > 0.0 && across > 0.0) || !along.is_finite() || !across.is_finite() {
        return Err(GeometryError::NotAnEllipse("imaginary or degenerate radii"));
    }
    // Direction of the λ+ eigenvector.
    let phi = 0.5 * (2.0 * h).atan2(a - b);
    let (r_along, r_across) = (along.sqrt(), across.sqrt());
    let (r_max, r_min, mut theta) = if r_along >= r_across {
        (r_along, r_across, phi)
    } else {
        (r_across, r_along, phi + FRAC_PI_2)
    };
    if r_max - r_min < 1e-9 * r_max {
        theta = 0.0;
    }
    let s = conic.scale;
    Ok(EllipseParams {
        x0: conic.origin.0 + s * cx,
        y0: conic.origin.1 + s * cy,
        r_max: s * r_max,
        r_min: s * r_min,
        theta: normalize_axial(theta),
    })
}

/// Fits and decodes in one step.
pub fn ellipse_through(points: [(f64, f64); 5]) -> Result<EllipseParams, GeometryError> {
    conic_to_ellipse(&fit_conic_five_points(points)?)
}
