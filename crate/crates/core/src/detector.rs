//! Multiple-ellipse detection on top of the CAB optimizer.
//!
//! A candidate is five continuous indices into the edge vector. Rounded, they
//! select five edge pixels; the ellipse through them is rasterized and its
//! fitness is the fraction of raster pixels that are edges. The optimizer's
//! historical memory, kept geometrically distinct by the distinctiveness
//! measure, becomes the list of detections.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cab::{Bounds, Cab, CabConfig, CabError, Objective, ScoredPosition};
use crate::edge::{canny, edge_vector, CannyConfig, EdgeMap, EdgePoints, GrayImage, ImageError};
use crate::geometry::{axial_difference, ellipse_through, EllipseParams, GeometryError};
use crate::raster::{count_hits, rasterize};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("edge map has {found} edge pixels, at least 5 are needed")]
    TooFewEdgePixels { found: usize },
    #[error("invalid detector configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Optimizer(#[from] CabError),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Why a genotype does not decode to a usable ellipse.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvalidCandidate {
    #[error("genotype selects fewer than 5 distinct edge points")]
    RepeatedIndex,
    #[error("genotype has {0} components, expected 5")]
    WrongLength(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("radii r_max={r_max:.2}, r_min={r_min:.2} outside the feasible ranges")]
    RadiusOutOfRange { r_max: f64, r_min: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub cab: CabConfig,
    /// Feasible `[low, high]` for the minor semi-axis, pixels.
    pub r_min_range: [f64; 2],
    /// Feasible `[low, high]` for the major semi-axis, pixels.
    pub r_max_range: [f64; 2],
    /// Divisor `s` of the similarity threshold.
    pub sensitivity: f64,
    /// Detections below `best fitness / f_th_divisor` are dropped.
    pub f_th_divisor: f64,
}

impl DetectorConfig {
    /// Defaults for a `width` x `height` image: both radii in
    /// `[5, min(width, height) / 2]`.
    pub fn for_image(width: usize, height: usize) -> Self {
        let high = width.min(height) as f64 / 2.0;
        Self {
            cab: CabConfig::default(),
            r_min_range: [5.0, high],
            r_max_range: [5.0, high],
            sensitivity: 2.0,
            f_th_divisor: 10.0,
        }
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        self.cab.validate()?;
        for (name, [lo, hi]) in [
            ("r_min_range", self.r_min_range),
            ("r_max_range", self.r_max_range),
        ] {
            if !(lo > 0.0 && lo < hi) {
                return Err(DetectError::InvalidConfig(format!(
                    "{name} must satisfy 0 < low < high, got [{lo}, {hi}]"
                )));
            }
        }
        if !(self.sensitivity > 0.0) {
            return Err(DetectError::InvalidConfig(format!(
                "sensitivity must be positive, got {}",
                self.sensitivity
            )));
        }
        if !(self.f_th_divisor > 0.0) {
            return Err(DetectError::InvalidConfig(format!(
                "f_th_divisor must be positive, got {}",
                self.f_th_divisor
            )));
        }
        Ok(())
    }

    fn radii_feasible(&self, e: &EllipseParams) -> bool {
        let within = |v: f64, [lo, hi]: [f64; 2]| lo <= v && v <= hi;
        within(e.r_min, self.r_min_range) && within(e.r_max, self.r_max_range)
    }
}

/// One detected ellipse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub ellipse: EllipseParams,
    /// Fraction of the test set found on edge pixels.
    pub fitness: f64,
    /// Test-set size.
    pub n_s: usize,
}

/// Rounds, clamps and looks up the five indices, then fits the ellipse
/// through the selected pixels.
pub fn decode(
    genotype: &[f64],
    points: &EdgePoints,
    cfg: &DetectorConfig,
) -> Result<EllipseParams, InvalidCandidate> {
    if genotype.len() != 5 {
        return Err(InvalidCandidate::WrongLength(genotype.len()));
    }
    let last = points.len().saturating_sub(1) as f64;
    let mut idx = [0usize; 5];
    for (slot, g) in idx.iter_mut().zip(genotype) {
        *slot = g.round().clamp(0.0, last) as usize;
    }
    let mut sorted = idx;
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(InvalidCandidate::RepeatedIndex);
    }
    let px = idx.map(|i| {
        let (x, y) = points.get(i);
        (x as f64, y as f64)
    });
    let e = ellipse_through(px)?;
    if !cfg.radii_feasible(&e) {
        return Err(InvalidCandidate::RadiusOutOfRange {
            r_max: e.r_max,
            r_min: e.r_min,
        });
    }
    Ok(e)
}

/// `(n_s, matched)` for `e` on `edges`.
pub fn match_counts(e: &EllipseParams, edges: &EdgeMap) -> (usize, usize) {
    count_hits(e, edges.width(), edges.height(), |x, y| edges.is_edge(x, y))
}

/// Matched fraction of the test set, `1 - J`; zero for an empty test set.
pub fn fitness(e: &EllipseParams, edges: &EdgeMap) -> f64 {
    let (n, matched) = match_counts(e, edges);
    if n == 0 {
        0.0
    } else {
        matched as f64 / n as f64
    }
}

/// L1 mismatch between two ellipses. The orientation term is axial and is
/// dropped when either ellipse is within a pixel of being a circle.
pub fn distinctiveness(a: &EllipseParams, b: &EllipseParams) -> f64 {
    let round = |e: &EllipseParams| e.r_max - e.r_min < 1.0;
    let angle = if round(a) || round(b) {
        0.0
    } else {
        axial_difference(a.theta, b.theta)
    };
    (a.x0 - b.x0).abs()
        + (a.y0 - b.y0).abs()
        + (a.r_min - b.r_min).abs()
        + (a.r_max - b.r_max).abs()
        + angle
}

/// `Th`: summed widths of the radius ranges divided by the sensitivity.
pub fn similarity_threshold(cfg: &DetectorConfig) -> f64 {
    let width = |[lo, hi]: [f64; 2]| (hi - lo).abs();
    (width(cfg.r_max_range) + width(cfg.r_min_range)) / cfg.sensitivity
}

/// Pixels within this Chebyshev distance of an accepted detection's test
/// set count as explained by it.
pub const CLAIM_RADIUS: i64 = 1;

/// Clears the edge pixels explained by `e`.
fn claim(residual: &mut EdgeMap, e: &EllipseParams) {
    let (w, h) = (residual.width(), residual.height());
    for &(x, y) in rasterize(e, w, h).points() {
        for dy in -CLAIM_RADIUS..=CLAIM_RADIUS {
            for dx in -CLAIM_RADIUS..=CLAIM_RADIUS {
                residual.put(x + dx, y + dy, false);
            }
        }
    }
}

/// Filters candidates sorted by descending fitness down to distinct
/// detections. The first is always kept. A later candidate needs
/// distinctiveness above `Th` to every kept detection, and its fitness
/// against the edge pixels not yet explained by kept detections must reach
/// `best / f_th_divisor`.
pub fn extract(candidates: &[Detection], cfg: &DetectorConfig, edges: &EdgeMap) -> Vec<Detection> {
    let Some(first) = candidates.first() else {
        return Vec::new();
    };
    let th = similarity_threshold(cfg);
    let cutoff = first.fitness / cfg.f_th_divisor;
    let mut residual = edges.clone();
    claim(&mut residual, &first.ellipse);
    let mut out = vec![*first];
    for c in &candidates[1..] {
        if c.fitness < cutoff
            || !out
                .iter()
                .all(|d| distinctiveness(&d.ellipse, &c.ellipse) > th)
        {
            continue;
        }
        if fitness(&c.ellipse, &residual) >= cutoff {
            claim(&mut residual, &c.ellipse);
            out.push(*c);
        }
    }
    out
}

/// Fitness and distance of genotypes over one edge map.
pub struct EllipseObjective<'a> {
    edges: &'a EdgeMap,
    points: EdgePoints,
    cfg: &'a DetectorConfig,
}

impl<'a> EllipseObjective<'a> {
    pub fn new(edges: &'a EdgeMap, cfg: &'a DetectorConfig) -> Result<Self, DetectError> {
        let points = edge_vector(edges);
        if points.len() < 5 {
            return Err(DetectError::TooFewEdgePixels {
                found: points.len(),
            });
        }
        Ok(Self { edges, points, cfg })
    }

    pub fn points(&self) -> &EdgePoints {
        &self.points
    }

    /// `[0, N_e - 1]` in each of the five dimensions.
    pub fn bounds(&self) -> Bounds {
        Bounds::uniform(5, 0.0, (self.points.len() - 1) as f64).expect("at least 5 edge points")
    }
}

impl Objective for EllipseObjective<'_> {
    /// `None` for genotypes that do not decode.
    type Payload = Option<Detection>;
    type Error = std::convert::Infallible;

    fn evaluate(&self, position: &[f64]) -> Result<(f64, Self::Payload), Self::Error> {
        let Ok(ellipse) = decode(position, &self.points, self.cfg) else {
            return Ok((0.0, None));
        };
        let (n_s, matched) = match_counts(&ellipse, self.edges);
        let fitness = if n_s == 0 {
            0.0
        } else {
            matched as f64 / n_s as f64
        };
        Ok((
            fitness,
            Some(Detection {
                ellipse,
                fitness,
                n_s,
            }),
        ))
    }

    /// Distinctiveness of the decoded ellipses. Two invalid candidates are
    /// at distance 0, so they compete by fitness alone; an invalid and a
    /// valid one are infinitely far apart, so neither displaces the other.
    fn distance(
        &self,
        a: &ScoredPosition<Self::Payload>,
        b: &ScoredPosition<Self::Payload>,
    ) -> f64 {
        match (&a.payload, &b.payload) {
            (Some(a), Some(b)) => distinctiveness(&a.ellipse, &b.ellipse),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        }
    }
}

/// Runs the optimizer on `edges` and returns the final historical memory as
/// detections candidates, by descending fitness. Invalid entries are dropped.
pub fn search(
    edges: &EdgeMap,
    cfg: &DetectorConfig,
    seed: u64,
) -> Result<Vec<Detection>, DetectError> {
    cfg.validate()?;
    let objective = EllipseObjective::new(edges, cfg)?;
    let bounds = objective.bounds();
    let cab_cfg = CabConfig {
        rho: Some(similarity_threshold(cfg)),
        ..cfg.cab.clone()
    };
    let cab = Cab::new(&bounds, &cab_cfg, &objective)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Ok(memory) = cab.run(&mut rng);
    Ok(memory.into_iter().filter_map(|m| m.payload).collect())
}

/// Detects ellipses in an edge map.
pub fn detect(
    edges: &EdgeMap,
    cfg: &DetectorConfig,
    seed: u64,
) -> Result<Vec<Detection>, DetectError> {
    Ok(extract(&search(edges, cfg, seed)?, cfg, edges))
}

/// Canny edge detection followed by [`detect`].
pub fn detect_image(
    img: &GrayImage,
    canny_cfg: &CannyConfig,
    cfg: &DetectorConfig,
    seed: u64,
) -> Result<Vec<Detection>, DetectError> {
    let edges = canny(img, canny_cfg)?;
    detect(&edges, cfg, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cfg() -> DetectorConfig {
        DetectorConfig::for_image(400, 300)
    }

    /// Paints the raster on a blank canvas and compares canvases pixel by
    /// pixel.
    fn oracle_fitness(e: &EllipseParams, edges: &EdgeMap) -> (usize, usize) {
        let (w, h) = (edges.width(), edges.height());
        let mut canvas = vec![false; w * h];
        for &(x, y) in rasterize(e, w, h).points() {
            canvas[y as usize * w + x as usize] = true;
        }
        let mut n = 0;
        let mut matched = 0;
        for y in 0..h {
            for x in 0..w {
                if canvas[y * w + x] {
                    n += 1;
                    if edges.get(x, y) {
                        matched += 1;
                    }
                }
            }
        }
        (n, matched)
    }

    fn drawn(e: &EllipseParams, w: usize, h: usize) -> EdgeMap {
        let mut m = EdgeMap::new(w, h);
        for &(x, y) in rasterize(e, w, h).points() {
            m.put(x, y, true);
        }
        m
    }

    #[test]
    fn threshold_examples() {
        let mut c = cfg();
        c.r_max_range = [10.0, 100.0];
        c.r_min_range = [5.0, 50.0];
        assert_eq!(similarity_threshold(&c), 67.5);
        c.sensitivity = 4.0;
        assert_eq!(similarity_threshold(&c), 33.75);
        c.r_max_range = [10.0, 10.0];
        c.r_min_range = [5.0, 5.0];
        assert_eq!(similarity_threshold(&c), 0.0);
        assert_eq!(similarity_threshold(&cfg()), 145.0);
    }

    #[test]
    fn distinctiveness_examples() {
        let a = EllipseParams::new(0.0, 0.0, 10.0, 5.0, 0.0);
        assert_eq!(distinctiveness(&a, &a), 0.0);
        let b = EllipseParams {
            x0: 3.0,
            y0: 4.0,
            ..a
        };
        assert_eq!(distinctiveness(&a, &b), 7.0);
        let b = EllipseParams::new(1.0, 1.0, 11.0, 6.0, 0.1);
        assert!((distinctiveness(&a, &b) - 4.1).abs() < 1e-12);
        let flipped = EllipseParams {
            theta: -PI / 2.0 - 0.05,
            ..a
        };
        let near = EllipseParams::new(0.0, 0.0, 10.0, 5.0, PI / 2.0 - 0.05);
        assert!(distinctiveness(&flipped, &near) < 1e-12);
        let circle = EllipseParams::new(0.0, 0.0, 10.0, 9.5, 1.0);
        assert!((distinctiveness(&circle, &a) - 4.5).abs() < 1e-12);
    }

    #[test]
    fn decode_rejects_repeated_indices() {
        let pts = EdgePoints::new(vec![
            (250, 150),
            (150, 150),
            (200, 180),
            (200, 120),
            (230, 174),
            (5, 5),
        ]);
        let got = decode(&[0.0, 1.2, 1.8, 3.4, 2.6], &pts, &cfg());
        assert_eq!(got, Err(InvalidCandidate::RepeatedIndex));
    }

    #[test]
    fn decode_exact_membership() {
        let e = EllipseParams::new(200.0, 150.0, 50.0, 30.0, 0.0);
        let pts = EdgePoints::new(vec![
            (250, 150),
            (150, 150),
            (200, 180),
            (200, 120),
            (230, 174),
        ]);
        let got = decode(&[0.0, 1.0, 2.0, 3.0, 4.0], &pts, &cfg()).unwrap();
        for (a, b) in [
            (got.x0, e.x0),
            (got.y0, e.y0),
            (got.r_max, e.r_max),
            (got.r_min, e.r_min),
        ] {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(axial_difference(got.theta, e.theta) < 1e-9);
    }

    #[test]
    fn decode_rejects_collinear_and_out_of_range() {
        let pts = EdgePoints::new((0..5).map(|i| (10 + i, 20 + 2 * i)).collect());
        assert!(matches!(
            decode(&[0.0, 1.0, 2.0, 3.0, 4.0], &pts, &cfg()),
            Err(InvalidCandidate::Geometry(_))
        ));
        let pts = EdgePoints::new(vec![
            (203, 150),
            (197, 150),
            (200, 152),
            (200, 148),
            (202, 151),
        ]);
        assert!(matches!(
            decode(&[0.0, 1.0, 2.0, 3.0, 4.0], &pts, &cfg()),
            Err(InvalidCandidate::RadiusOutOfRange { .. }) | Err(InvalidCandidate::Geometry(_))
        ));
    }

    #[test]
    fn fitness_extremes() {
        let e = EllipseParams::new(200.0, 150.0, 80.0, 40.0, 0.4);
        assert_eq!(fitness(&e, &drawn(&e, 400, 300)), 1.0);
        assert_eq!(fitness(&e, &EdgeMap::new(400, 300)), 0.0);
        let outside = EllipseParams::new(-500.0, -500.0, 20.0, 10.0, 0.0);
        assert_eq!(fitness(&outside, &EdgeMap::new(400, 300)), 0.0);
    }

    #[test]
    fn partial_match_fraction() {
        let (e, set) = (5..30)
            .flat_map(|a| {
                (3..=a).map(move |b| EllipseParams::new(50.0, 50.0, a as f64, b as f64, 0.0))
            })
            .map(|e| (e, rasterize(&e, 100, 100)))
            .find(|(_, s)| s.len() == 52)
            .expect("some small ellipse has 52 raster points");
        let mut edges = EdgeMap::new(100, 100);
        for &(x, y) in &set.points()[..35] {
            edges.put(x, y, true);
        }
        let j = 1.0 - fitness(&e, &edges);
        assert!((j - 0.327).abs() < 1e-3, "J = {j}");
    }

    #[test]
    fn extract_rules() {
        let c = cfg();
        let det = |x0: f64, fitness: f64| Detection {
            ellipse: EllipseParams::new(x0, 150.0, 80.0, 40.0, 0.0),
            fitness,
            n_s: 100,
        };
        let mut both = drawn(&det(100.0, 0.0).ellipse, 400, 300);
        for &(x, y) in rasterize(&det(300.0, 0.0).ellipse, 400, 300).points() {
            both.put(x, y, true);
        }
        assert_eq!(
            extract(&[det(100.0, 0.9), det(100.0, 0.8)], &c, &both).len(),
            1
        );
        assert_eq!(
            extract(&[det(100.0, 0.9), det(300.0, 0.5)], &c, &both).len(),
            2
        );
        assert_eq!(
            extract(&[det(100.0, 0.9), det(300.0, 0.05)], &c, &both).len(),
            1
        );
        assert!(extract(&[], &c, &both).is_empty());
    }

    #[test]
    fn extract_ignores_support_already_explained() {
        let c = cfg();
        let first = EllipseParams::new(200.0, 150.0, 80.0, 40.0, 0.0);
        let edges = drawn(&first, 400, 300);
        // Shares the right-hand end of `first` and nothing else.
        let second = EllipseParams::new(350.0, 150.0, 70.0, 30.0, 0.0);
        assert!(distinctiveness(&first, &second) > similarity_threshold(&c));
        assert!(fitness(&second, &edges) > 0.0);
        let cands = [
            Detection {
                ellipse: first,
                fitness: 1.0,
                n_s: 1,
            },
            Detection {
                ellipse: second,
                fitness: 0.5,
                n_s: 1,
            },
        ];
        assert_eq!(extract(&cands, &c, &edges).len(), 1);
    }

    #[test]
    fn too_few_edge_pixels() {
        let blank = EdgeMap::new(50, 50);
        assert!(matches!(
            detect(&blank, &cfg(), 1),
            Err(DetectError::TooFewEdgePixels { found: 0 })
        ));
        let mut four = EdgeMap::new(50, 50);
        for i in 0..4 {
            four.set(10 + i, 10, true);
        }
        assert!(matches!(
            detect(&four, &cfg(), 1),
            Err(DetectError::TooFewEdgePixels { found: 4 })
        ));
    }

    #[test]
    fn config_validation() {
        let mut c = cfg();
        c.r_min_range = [10.0, 5.0];
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.sensitivity = 0.0;
        assert!(c.validate().is_err());
        assert!(cfg().validate().is_ok());
    }

    #[test]
    fn finds_a_clean_ellipse() {
        let truth = EllipseParams::new(200.0, 150.0, 80.0, 40.0, 0.3);
        let edges = drawn(&truth, 400, 300);
        let dets = detect(&edges, &cfg(), 3).unwrap();
        assert_eq!(dets.len(), 1);
        let d = dets[0];
        assert!(d.fitness > 0.9, "{d:?}");
        assert!(distinctiveness(&d.ellipse, &truth) < 5.0, "{d:?}");
        assert_eq!(detect(&edges, &cfg(), 3).unwrap(), dets);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fitness_matches_canvas_oracle(
            x0 in -20.0f64..120.0, y0 in -20.0f64..100.0,
            a in 3.0f64..60.0, ratio in 0.2f64..1.0, theta in -1.6f64..1.6,
            seed in any::<u64>(),
        ) {
            let e = EllipseParams::new(x0, y0, a, a * ratio, theta);
            let (w, h) = (100usize, 80usize);
            let mask = (0..w * h)
                .map(|i| (seed ^ (i as u64).wrapping_mul(0x9E3779B97F4A7C15)).wrapping_mul(0xBF58476D1CE4E5B9) >> 62 == 0)
                .collect();
            let mut edges = EdgeMap::from_mask(w, h, mask).unwrap();
            for (i, &(x, y)) in rasterize(&e, w, h).points().iter().enumerate() {
                if i % 3 == 0 {
                    edges.put(x, y, true);
                }
            }
            let (n, m) = oracle_fitness(&e, &edges);
            prop_assert_eq!(match_counts(&e, &edges), (n, m));
            let f = fitness(&e, &edges);
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert_eq!(f, if n == 0 { 0.0 } else { m as f64 / n as f64 });
        }

        #[test]
        fn extract_output_is_distinct_and_above_cutoff(
            raw in prop::collection::vec((0.0f64..400.0, 0.0f64..300.0, 5.0f64..150.0, 0.0f64..1.0, 0.0f64..1.0), 1..15)
        ) {
            let c = cfg();
            let mut cands: Vec<Detection> = raw
                .iter()
                .map(|&(x, y, r, q, f)| Detection {
                    ellipse: EllipseParams::new(x, y, r, (r * q).max(5.0), 0.0),
                    fitness: f,
                    n_s: 10,
                })
                .collect();
            cands.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
            let mut edges = EdgeMap::new(400, 300);
            for d in &cands {
                for &(x, y) in rasterize(&d.ellipse, 400, 300).points() {
                    edges.put(x, y, true);
                }
            }
            let out = extract(&cands, &c, &edges);
            let th = similarity_threshold(&c);
            for (i, a) in out.iter().enumerate() {
                prop_assert!(a.fitness >= out[0].fitness / c.f_th_divisor);
                if i > 0 {
                    prop_assert!(out[i - 1].fitness >= a.fitness);
                }
                for b in &out[i + 1..] {
                    prop_assert!(distinctiveness(&a.ellipse, &b.ellipse) > th);
                }
            }
        }
    }
}
