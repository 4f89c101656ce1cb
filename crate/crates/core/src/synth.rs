//! Synthetic test scenes with known ground truth.
//!
//! Scenes are white one-pixel outlines of ellipses and distractor shapes on
//! black, so the edge map is known exactly. Ellipses may lose a parametric
//! arc (occlusion) and the whole scene may be contaminated with salt and
//! pepper noise. With `filled` set, shapes are painted solid instead and the
//! edge map comes from Canny.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edge::{canny, CannyConfig, EdgeMap, GrayImage, ImageError};
use crate::geometry::EllipseParams;
use crate::raster::{line_points, rasterize};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    InvalidSpec(String),
    #[error("{0} lies entirely outside the image")]
    OutsideImage(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("scene JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Ellipse record shared by scene specs, ground truth and detections.
/// Orientation is in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseRecord {
    pub x0: f64,
    pub y0: f64,
    pub r_max: f64,
    pub r_min: f64,
    pub theta_deg: f64,
}

impl EllipseRecord {
    pub fn params(&self) -> EllipseParams {
        EllipseParams::new(
            self.x0,
            self.y0,
            self.r_max,
            self.r_min,
            self.theta_deg.to_radians(),
        )
    }

    pub fn from_params(e: &EllipseParams) -> Self {
        Self {
            x0: e.x0,
            y0: e.y0,
            r_max: e.r_max,
            r_min: e.r_min,
            theta_deg: e.theta.to_degrees(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneEllipse {
    #[serde(flatten)]
    pub ellipse: EllipseRecord,
    /// Parametric arc `[t_start, t_end)` in radians left undrawn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occlusion: Option<[f64; 2]>,
}

/// Non-elliptical clutter, vertices in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Distractor {
    /// Axis-aligned, from one corner to the opposite one.
    Rectangle {
        from: [f64; 2],
        to: [f64; 2],
    },
    Triangle {
        vertices: [[f64; 2]; 3],
    },
    Segment {
        from: [f64; 2],
        to: [f64; 2],
    },
}

impl Distractor {
    fn vertices(&self) -> Vec<(i64, i64)> {
        let p = |v: [f64; 2]| (v[0].round() as i64, v[1].round() as i64);
        match *self {
            Distractor::Rectangle { from, to } => {
                vec![p(from), p([to[0], from[1]]), p(to), p([from[0], to[1]])]
            }
            Distractor::Triangle { vertices } => vertices.iter().map(|&v| p(v)).collect(),
            Distractor::Segment { from, to } => vec![p(from), p(to)],
        }
    }

    fn outline(&self) -> Vec<(i64, i64)> {
        let v = self.vertices();
        if v.len() == 2 {
            return line_points(v[0], v[1]);
        }
        (0..v.len())
            .flat_map(|i| line_points(v[i], v[(i + 1) % v.len()]))
            .collect()
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Distractor::Rectangle { from, to } => {
                from[0].min(to[0]) <= x
                    && x <= from[0].max(to[0])
                    && from[1].min(to[1]) <= y
                    && y <= from[1].max(to[1])
            }
            Distractor::Triangle {
                vertices: [a, b, c],
            } => {
                let side = |p: [f64; 2], q: [f64; 2]| {
                    (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0])
                };
                let (d1, d2, d3) = (side(a, b), side(b, c), side(c, a));
                let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
                let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
                !(neg && pos)
            }
            Distractor::Segment { .. } => false,
        }
    }
}

fn default_width() -> usize {
    400
}

fn default_height() -> usize {
    300
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_height")]
    pub height: usize,
    #[serde(default)]
    pub ellipses: Vec<SceneEllipse>,
    #[serde(default)]
    pub distractors: Vec<Distractor>,
    /// Salt and pepper density in `[0, 0.5)`.
    #[serde(default)]
    pub noise_density: f64,
    #[serde(default)]
    pub seed: u64,
    /// Paint solid shapes and take edges from Canny.
    #[serde(default)]
    pub filled: bool,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: default_width(),
            height: default_height(),
            ellipses: Vec::new(),
            distractors: Vec::new(),
            noise_density: 0.0,
            seed: 0,
            filled: false,
        }
    }
}

impl SceneSpec {
    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_ellipse(mut self, e: EllipseParams) -> Self {
        self.ellipses.push(SceneEllipse {
            ellipse: EllipseRecord::from_params(&e),
            occlusion: None,
        });
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!("image size {}x{}", self.width, self.height));
        }
        if !(0.0..0.5).contains(&self.noise_density) {
            return bad(format!(
                "noise_density must be in [0, 0.5), got {}",
                self.noise_density
            ));
        }
        for (i, s) in self.ellipses.iter().enumerate() {
            let e = &s.ellipse;
            let finite = [e.x0, e.y0, e.r_max, e.r_min, e.theta_deg]
                .iter()
                .all(|v| v.is_finite());
            if !finite || !(e.r_min > 0.0) || e.r_max < e.r_min {
                return bad(format!(
                    "ellipse {i} needs finite values and r_max >= r_min > 0"
                ));
            }
            if let Some([a, b]) = s.occlusion {
                if !(a.is_finite() && b.is_finite() && a <= b) {
                    return bad(format!(
                        "ellipse {i} occlusion must be an interval [start, end)"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Whether parametric angle `t` (in `[0, 2π)`) falls in the gap
/// `[start, end)`, taken modulo a full turn.
pub fn in_gap(t: f64, [start, end]: [f64; 2]) -> bool {
    if end - start >= 2.0 * PI {
        return true;
    }
    let rel = (t - start).rem_euclid(2.0 * PI);
    rel < end - start
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEllipse {
    pub id: usize,
    #[serde(flatten)]
    pub ellipse: EllipseRecord,
}

/// The ellipses of a scene, occluded ones included in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub ellipses: Vec<TruthEllipse>,
}

impl GroundTruth {
    pub fn params(&self) -> Vec<EllipseParams> {
        self.ellipses.iter().map(|t| t.ellipse.params()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// A rendered scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub image: GrayImage,
    pub edges: EdgeMap,
    pub truth: GroundTruth,
}

/// Pixels of the visible part of a scene ellipse, in parametric order.
pub fn ellipse_outline(s: &SceneEllipse, width: usize, height: usize) -> Vec<(i64, i64)> {
    let e = s.ellipse.params();
    let mut points = rasterize(&e, width, height).into_points();
    if let Some(gap) = s.occlusion {
        points.retain(|&(x, y)| !in_gap(e.parametric_angle(x as f64, y as f64), gap));
    }
    points
}

fn in_image(p: (i64, i64), w: usize, h: usize) -> bool {
    p.0 >= 0 && p.1 >= 0 && (p.0 as usize) < w && (p.1 as usize) < h
}

fn check_inside(spec: &SceneSpec) -> Result<(), SynthError> {
    let (w, h) = (spec.width, spec.height);
    for (i, s) in spec.ellipses.iter().enumerate() {
        if rasterize(&s.ellipse.params(), w, h).is_empty() {
            return Err(SynthError::OutsideImage(format!("ellipse {i}")));
        }
    }
    for (i, d) in spec.distractors.iter().enumerate() {
        let visible = d.outline().into_iter().any(|p| in_image(p, w, h));
        if !visible {
            return Err(SynthError::OutsideImage(format!("distractor {i}")));
        }
    }
    Ok(())
}

fn outline_scene(spec: &SceneSpec) -> EdgeMap {
    let (w, h) = (spec.width, spec.height);
    let mut edges = EdgeMap::new(w, h);
    for s in &spec.ellipses {
        for (x, y) in ellipse_outline(s, w, h) {
            edges.put(x, y, true);
        }
    }
    for d in &spec.distractors {
        for (x, y) in d.outline() {
            edges.put(x, y, true);
        }
    }
    edges
}

fn filled_scene(spec: &SceneSpec) -> GrayImage {
    let (w, h) = (spec.width, spec.height);
    let mut img = GrayImage::new(w, h).expect("validated size");
    let ellipses: Vec<EllipseParams> = spec.ellipses.iter().map(|s| s.ellipse.params()).collect();
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            let inside_ellipse = ellipses.iter().any(|e| {
                let (s, c) = e.theta.sin_cos();
                let (dx, dy) = (fx - e.x0, fy - e.y0);
                let u = (c * dx + s * dy) / e.r_max;
                let v = (-s * dx + c * dy) / e.r_min;
                u * u + v * v <= 1.0
            });
            if inside_ellipse || spec.distractors.iter().any(|d| d.contains(fx, fy)) {
                img.set(x, y, 255);
            }
        }
    }
    for d in &spec.distractors {
        if let Distractor::Segment { .. } = d {
            for (x, y) in d.outline() {
                img.put(x, y, 255);
            }
        }
    }
    img
}

/// Per-pixel noise pattern: `Some(true)` salt, `Some(false)` pepper.
fn noise_pattern<R: Rng + ?Sized>(len: usize, density: f64, rng: &mut R) -> Vec<Option<bool>> {
    (0..len)
        .map(|_| {
            let u = rng.gen::<f64>();
            if u < density / 2.0 {
                Some(true)
            } else if u < density {
                Some(false)
            } else {
                None
            }
        })
        .collect()
}

/// Rasters that salt and pepper noise can be applied to.
pub trait SaltPepper: Sized {
    fn apply_noise(&self, pattern: &[Option<bool>]) -> Self;
    fn pixel_count(&self) -> usize;
}

impl SaltPepper for GrayImage {
    fn apply_noise(&self, pattern: &[Option<bool>]) -> Self {
        let mut out = self.clone();
        for (v, n) in out.data_mut().iter_mut().zip(pattern) {
            if let Some(salt) = n {
                *v = if *salt { 255 } else { 0 };
            }
        }
        out
    }

    fn pixel_count(&self) -> usize {
        self.data().len()
    }
}

impl SaltPepper for EdgeMap {
    fn apply_noise(&self, pattern: &[Option<bool>]) -> Self {
        let mask = self
            .mask()
            .iter()
            .zip(pattern)
            .map(|(&v, n)| n.unwrap_or(v))
            .collect();
        EdgeMap::from_mask(self.width(), self.height(), mask).expect("same size")
    }

    fn pixel_count(&self) -> usize {
        self.mask().len()
    }
}

/// Sets each pixel to the maximum or the minimum, each with probability
/// `density / 2`.
pub fn add_salt_pepper<T: SaltPepper, R: Rng + ?Sized>(input: &T, density: f64, rng: &mut R) -> T {
    let pattern = noise_pattern(input.pixel_count(), density, rng);
    input.apply_noise(&pattern)
}

/// Renders `spec`. Outline scenes share one noise pattern between the image
/// and the edge map, so the edge map is always the thresholded image.
pub fn render(spec: &SceneSpec) -> Result<Scene, SynthError> {
    spec.validate()?;
    check_inside(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = GroundTruth {
        ellipses: spec
            .ellipses
            .iter()
            .enumerate()
            .map(|(id, s)| TruthEllipse {
                id,
                ellipse: s.ellipse,
            })
            .collect(),
    };
    let (image, edges) = if spec.filled {
        let clean = filled_scene(spec);
        let image = add_salt_pepper(&clean, spec.noise_density, &mut rng);
        let edges = canny(&image, &CannyConfig::default())?;
        (image, edges)
    } else {
        let clean = outline_scene(spec);
        let pattern = noise_pattern(clean.pixel_count(), spec.noise_density, &mut rng);
        let edges = clean.apply_noise(&pattern);
        (edges.to_gray(), edges)
    };
    Ok(Scene {
        image,
        edges,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::fitness;
    use proptest::prelude::*;

    fn one_ellipse() -> SceneSpec {
        SceneSpec::default().with_ellipse(EllipseParams::new(200.0, 150.0, 80.0, 40.0, 0.0))
    }

    #[test]
    fn clean_edge_map_is_the_raster() {
        let scene = render(&one_ellipse()).unwrap();
        let e = EllipseParams::new(200.0, 150.0, 80.0, 40.0, 0.0);
        let mut expected = EdgeMap::new(400, 300);
        for &(x, y) in rasterize(&e, 400, 300).points() {
            expected.put(x, y, true);
        }
        assert_eq!(scene.edges, expected);
        assert_eq!(EdgeMap::from_gray(&scene.image), scene.edges);
        assert!(scene.image.data().iter().all(|&v| v == 0 || v == 255));
    }

    #[test]
    fn occlusion_removes_exactly_the_gap() {
        let mut spec = one_ellipse();
        spec.ellipses[0].occlusion = Some([0.0, PI / 2.0]);
        let scene = render(&spec).unwrap();
        let e = spec.ellipses[0].ellipse.params();
        for &(x, y) in rasterize(&e, 400, 300).points() {
            let t = e.parametric_angle(x as f64, y as f64);
            assert_eq!(scene.edges.is_edge(x, y), !(0.0..PI / 2.0).contains(&t));
        }
        assert_eq!(scene.truth.ellipses.len(), 1);
        let f = fitness(&e, &scene.edges);
        assert!((f - 0.75).abs() < 0.02, "{f}");
    }

    #[test]
    fn gap_wraps_around() {
        assert!(in_gap(0.1, [-0.5, 0.5]));
        assert!(in_gap(2.0 * PI - 0.1, [-0.5, 0.5]));
        assert!(!in_gap(1.0, [-0.5, 0.5]));
        assert!(in_gap(3.0, [0.0, 7.0]));
    }

    #[test]
    fn ground_truth_lists_every_ellipse() {
        let spec = SceneSpec::default()
            .with_ellipse(EllipseParams::new(80.0, 80.0, 50.0, 30.0, 0.2))
            .with_ellipse(EllipseParams::new(300.0, 100.0, 60.0, 40.0, -0.4))
            .with_ellipse(EllipseParams::new(200.0, 220.0, 40.0, 40.0, 0.0));
        let scene = render(&spec).unwrap();
        assert_eq!(scene.truth.ellipses.len(), 3);
        let back = GroundTruth::from_json(&scene.truth.to_json()).unwrap();
        assert_eq!(back, scene.truth);
        for (t, s) in back.ellipses.iter().zip(&spec.ellipses) {
            assert_eq!(t.ellipse, s.ellipse);
        }
        for e in scene.truth.params() {
            assert!(fitness(&e, &scene.edges) >= 0.98);
        }
    }

    #[test]
    fn invalid_specs() {
        let mut spec = one_ellipse();
        spec.noise_density = 0.6;
        assert!(matches!(render(&spec), Err(SynthError::InvalidSpec(_))));
        let spec =
            SceneSpec::default().with_ellipse(EllipseParams::new(-500.0, -500.0, 20.0, 10.0, 0.0));
        assert!(matches!(render(&spec), Err(SynthError::OutsideImage(_))));
        let mut spec = SceneSpec::default();
        spec.distractors.push(Distractor::Segment {
            from: [-10.0, -10.0],
            to: [-50.0, -3.0],
        });
        assert!(matches!(render(&spec), Err(SynthError::OutsideImage(_))));
        assert!(SceneSpec::from_json(r#"{"noise_density": 0.7}"#).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec = SceneSpec::from_json(
            r#"{
                "ellipses": [{"x0": 200, "y0": 150, "r_max": 80, "r_min": 40, "theta_deg": 30,
                              "occlusion": [0, 1.5707963267948966]}],
                "distractors": [
                    {"shape": "rectangle", "from": [10, 10], "to": [60, 40]},
                    {"shape": "triangle", "vertices": [[300, 250], [380, 250], [340, 200]]},
                    {"shape": "segment", "from": [20, 280], "to": [150, 220]}
                ],
                "seed": 4
            }"#,
        )
        .unwrap();
        assert_eq!((spec.width, spec.height), (400, 300));
        assert_eq!(spec.distractors.len(), 3);
        let scene = render(&spec).unwrap();
        for (x, y) in [(10, 10), (60, 40), (340, 200), (20, 280), (150, 220)] {
            assert!(scene.edges.is_edge(x, y));
        }
    }

    #[test]
    fn filled_scene_edges_follow_the_outline() {
        let mut spec = one_ellipse();
        spec.filled = true;
        let scene = render(&spec).unwrap();
        assert_eq!(scene.image.get(200, 150), 255);
        assert_eq!(scene.image.get(10, 10), 0);
        let e = spec.ellipses[0].ellipse.params();
        assert!(scene.edges.count() > 300);
        let near = |x: i64, y: i64| {
            (-2..=2).any(|dx| (-2..=2).any(|dy| scene.edges.is_edge(x + dx, y + dy)))
        };
        let pts = rasterize(&e, 400, 300);
        let traced = pts.points().iter().filter(|&&(x, y)| near(x, y)).count();
        assert!(traced as f64 > 0.95 * pts.len() as f64);
    }

    #[test]
    fn zero_density_is_identity() {
        let scene = render(&one_ellipse()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(add_salt_pepper(&scene.image, 0.0, &mut rng), scene.image);
        assert_eq!(add_salt_pepper(&scene.edges, 0.0, &mut rng), scene.edges);
    }

    /// Binomial(n = 120000, p = 0.1): mean 12000, sd sqrt(n p (1 - p)).
    #[test]
    fn flipped_count_is_binomial() {
        let img = GrayImage::filled(400, 300, 128).unwrap();
        let noisy = add_salt_pepper(&img, 0.1, &mut ChaCha8Rng::seed_from_u64(77));
        let flipped = noisy.data().iter().filter(|&&v| v != 128).count() as f64;
        let sd = (120000.0f64 * 0.1 * 0.9).sqrt();
        assert!((flipped - 12000.0).abs() <= 3.0 * sd, "{flipped}");
        let salt = noisy.data().iter().filter(|&&v| v == 255).count() as f64;
        let sd_half = (120000.0f64 * 0.05 * 0.95).sqrt();
        assert!((salt - 6000.0).abs() <= 3.0 * sd_half, "{salt}");
    }

    #[test]
    fn render_is_deterministic() {
        let mut spec = one_ellipse();
        spec.noise_density = 0.05;
        spec.seed = 9;
        assert_eq!(render(&spec).unwrap(), render(&spec).unwrap());
        let a = add_salt_pepper(
            &render(&spec).unwrap().image,
            0.2,
            &mut ChaCha8Rng::seed_from_u64(3),
        );
        let b = add_salt_pepper(
            &render(&spec).unwrap().image,
            0.2,
            &mut ChaCha8Rng::seed_from_u64(3),
        );
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn clean_truth_scores_nearly_one(
            x0 in 120.0f64..280.0, y0 in 110.0f64..190.0,
            r_max in 10.0f64..100.0, q in 0.3f64..1.0, deg in -90.0f64..90.0,
        ) {
            let spec = SceneSpec {
                ellipses: vec![SceneEllipse {
                    ellipse: EllipseRecord { x0, y0, r_max, r_min: r_max * q, theta_deg: deg },
                    occlusion: None,
                }],
                ..SceneSpec::default()
            };
            let scene = render(&spec).unwrap();
            let e = scene.truth.ellipses[0].ellipse;
            prop_assert_eq!(e, spec.ellipses[0].ellipse);
            prop_assert!(fitness(&e.params(), &scene.edges) >= 0.98);
        }
    }
}
