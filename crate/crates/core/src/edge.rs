//! Grayscale images, binary edge maps and the Canny edge detector.
//!
//! The detector consumes edges as an ordered list of pixel coordinates
//! ([`EdgePoints`]). The order is a row-major scan so that a given image and
//! seed always produce the same candidate encoding.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ImageError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("pixel buffer holds {actual} values, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("image is {width}x{height}, canny needs at least 5x5")]
    TooSmall { width: usize, height: usize },
    #[error("invalid canny configuration: {0}")]
    InvalidConfig(String),
}

/// 8-bit luminance image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Result<Self, ImageError> {
        Self::filled(width, height, 0)
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        Ok(Self {
            width,
            height,
            data: vec![value; width * height],
        })
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(ImageError::BufferSize {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    /// Sets the pixel if `(x, y)` is inside the image; ignores it otherwise.
    pub fn put(&mut self, x: i64, y: i64, value: u8) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.set(x as usize, y as usize, value);
        }
    }
}

/// Binary edge raster, row-major. `true` marks an edge pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
        }
    }

    pub fn from_mask(width: usize, height: usize, mask: Vec<bool>) -> Result<Self, ImageError> {
        if mask.len() != width * height {
            return Err(ImageError::BufferSize {
                expected: width * height,
                actual: mask.len(),
            });
        }
        Ok(Self {
            width,
            height,
            mask,
        })
    }

    /// Thresholds a grayscale image: values `>= 128` are edges.
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            mask: img.data.iter().map(|&v| v >= 128).collect(),
        }
    }

    /// Renders the map as a `{0, 255}` grayscale image.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width.max(1),
            height: self.height.max(1),
            data: if self.mask.is_empty() {
                vec![0]
            } else {
                self.mask.iter().map(|&e| if e { 255 } else { 0 }).collect()
            },
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    /// Bounds-checked lookup; out-of-image coordinates are never edges.
    pub fn is_edge(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.mask[y as usize * self.width + x as usize]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.mask[y * self.width + x] = value;
    }

    pub fn put(&mut self, x: i64, y: i64, value: bool) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.set(x as usize, y as usize, value);
        }
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&e| e).count()
    }
}

/// Ordered edge-pixel coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgePoints {
    points: Vec<(i64, i64)>,
}

impl EdgePoints {
    pub fn new(points: Vec<(i64, i64)>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[(i64, i64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, index: usize) -> (i64, i64) {
        self.points[index]
    }
}

/// Flattens an edge map into its edge pixels, scanning rows top to bottom
/// and each row left to right.
pub fn edge_vector(edges: &EdgeMap) -> EdgePoints {
    let mut points = Vec::new();
    for y in 0..edges.height {
        let row = &edges.mask[y * edges.width..(y + 1) * edges.width];
        for (x, _) in row.iter().enumerate().filter(|(_, &e)| e) {
            points.push((x as i64, y as i64));
        }
    }
    EdgePoints { points }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CannyConfig {
    pub gaussian_sigma: f64,
    /// Hysteresis low threshold as a fraction of the maximum gradient magnitude.
    pub low_frac: f64,
    /// Hysteresis high threshold as a fraction of the maximum gradient magnitude.
    pub high_frac: f64,
}

impl Default for CannyConfig {
    fn default() -> Self {
        Self {
            gaussian_sigma: 1.4,
            low_frac: 0.1,
            high_frac: 0.3,
        }
    }
}

impl CannyConfig {
    pub fn validate(&self) -> Result<(), ImageError> {
        if !(self.gaussian_sigma > 0.0) || !self.gaussian_sigma.is_finite() {
            return Err(ImageError::InvalidConfig(format!(
                "gaussian_sigma must be positive, got {}",
                self.gaussian_sigma
            )));
        }
        if !(0.0 < self.low_frac && self.low_frac < self.high_frac && self.high_frac < 1.0) {
            return Err(ImageError::InvalidConfig(format!(
                "need 0 < low_frac < high_frac < 1, got {} and {}",
                self.low_frac, self.high_frac
            )));
        }
        Ok(())
    }
}

/// Gradient magnitude and direction of a blurred image.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
}

impl Gradients {
    pub fn max_magnitude(&self) -> f64 {
        self.magnitude.iter().copied().fold(0.0, f64::max)
    }
}

fn gaussian_kernel_5(sigma: f64) -> [f64; 5] {
    let mut k = [0.0; 5];
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - 2.0;
        *v = (-d * d / (2.0 * sigma * sigma)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.map(|v| v / sum)
}

fn clamp_index(i: i64, n: usize) -> usize {
    i.clamp(0, n as i64 - 1) as usize
}

/// Separable 5x5 Gaussian blur with replicated borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Vec<f64> {
    let (w, h) = (img.width, img.height);
    let k = gaussian_kernel_5(sigma);
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = (0..5)
                .map(|i| k[i] * img.get(clamp_index(x as i64 + i as i64 - 2, w), y) as f64)
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (0..5)
                .map(|i| k[i] * tmp[clamp_index(y as i64 + i as i64 - 2, h) * w + x])
                .sum();
        }
    }
    out
}

/// 3x3 Sobel gradients over a row-major buffer, replicated borders.
pub fn sobel(values: &[f64], width: usize, height: usize) -> Gradients {
    let at = |x: i64, y: i64| values[clamp_index(y, height) * width + clamp_index(x, width)];
    let mut gx = vec![0.0; width * height];
    let mut gy = vec![0.0; width * height];
    let mut magnitude = vec![0.0; width * height];
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            let dx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let dy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = y as usize * width + x as usize;
            gx[i] = dx;
            gy[i] = dy;
            magnitude[i] = dx.hypot(dy);
        }
    }
    Gradients {
        width,
        height,
        gx,
        gy,
        magnitude,
    }
}

/// Blur followed by Sobel, the gradient field canny thresholds against.
pub fn gradients(img: &GrayImage, sigma: f64) -> Gradients {
    let blurred = gaussian_blur(img, sigma);
    sobel(&blurred, img.width, img.height)
}

fn non_maximum_suppression(g: &Gradients) -> Vec<f64> {
    let (w, h) = (g.width, g.height);
    let mut out = vec![0.0; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let m = g.magnitude[i];
            if m == 0.0 {
                continue;
            }
            let mut angle = g.gy[i].atan2(g.gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            // Neighbours along the gradient direction (image y grows downward).
            let (a, b) = if !(22.5..157.5).contains(&angle) {
                (i - 1, i + 1)
            } else if angle < 67.5 {
                (i - w - 1, i + w + 1)
            } else if angle < 112.5 {
                (i - w, i + w)
            } else {
                (i - w + 1, i + w - 1)
            };
            // Ties along a plateau keep only the pixel on the negative side.
            if m >= g.magnitude[a] && m > g.magnitude[b] {
                out[i] = m;
            }
        }
    }
    out
}

fn hysteresis(thinned: &[f64], width: usize, height: usize, low: f64, high: f64) -> Vec<bool> {
    let mut out = vec![false; width * height];
    let mut queue = VecDeque::new();
    for (i, &m) in thinned.iter().enumerate() {
        if m >= high && !out[i] {
            out[i] = true;
            queue.push_back(i);
            while let Some(j) = queue.pop_front() {
                let (x, y) = ((j % width) as i64, (j / width) as i64);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                            continue;
                        }
                        let n = ny as usize * width + nx as usize;
                        if !out[n] && thinned[n] >= low {
                            out[n] = true;
                            queue.push_back(n);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Canny edge detection: Gaussian blur, Sobel gradients, non-maximum
/// suppression over four direction bins, then hysteresis with thresholds
/// expressed as fractions of the largest gradient magnitude.
pub fn canny(img: &GrayImage, cfg: &CannyConfig) -> Result<EdgeMap, ImageError> {
    cfg.validate()?;
    if img.width < 5 || img.height < 5 {
        return Err(ImageError::TooSmall {
            width: img.width,
            height: img.height,
        });
    }
    let g = gradients(img, cfg.gaussian_sigma);
    let max = g.max_magnitude();
    if max <= 0.0 {
        return Ok(EdgeMap::new(img.width, img.height));
    }
    let thinned = non_maximum_suppression(&g);
    let mask = hysteresis(
        &thinned,
        img.width,
        img.height,
        cfg.low_frac * max,
        cfg.high_frac * max,
    );
    Ok(EdgeMap {
        width: img.width,
        height: img.height,
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect_image() -> GrayImage {
        let mut img = GrayImage::new(200, 150).unwrap();
        for y in 40..100 {
            for x in 50..150 {
                img.set(x, y, 255);
            }
        }
        img
    }

    #[test]
    fn uniform_image_has_no_edges() {
        let img = GrayImage::filled(40, 30, 128).unwrap();
        let edges = canny(&img, &CannyConfig::default()).unwrap();
        assert_eq!(edges.count(), 0);
    }

    #[test]
    fn rectangle_edges_hug_the_outline() {
        let img = rect_image();
        let edges = canny(&img, &CannyConfig::default()).unwrap();
        // Filled pixels span [50,150) x [40,100); the boundary lines sit on
        // the half-pixel grid around them.
        let (x_lo, x_hi, y_lo, y_hi) = (49.5, 149.5, 39.5, 99.5);
        let dist_to_boundary = |x: f64, y: f64| -> f64 {
            let seg = |px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64| {
                let (dx, dy) = (bx - ax, by - ay);
                let t = (((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
                (px - ax - t * dx).hypot(py - ay - t * dy)
            };
            [
                seg(x, y, x_lo, y_lo, x_hi, y_lo),
                seg(x, y, x_hi, y_lo, x_hi, y_hi),
                seg(x, y, x_hi, y_hi, x_lo, y_hi),
                seg(x, y, x_lo, y_hi, x_lo, y_lo),
            ]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
        };
        let pts = edge_vector(&edges);
        assert!(!pts.is_empty());
        for &(x, y) in pts.points() {
            let d = dist_to_boundary(x as f64, y as f64);
            assert!(d <= 1.0, "edge pixel ({x},{y}) is {d} from the outline");
        }
        // Each side traced along most of its length.
        let covered = |hits: usize, len: usize| hits * 10 >= len * 8;
        let top = (50..150)
            .filter(|&x| edges.get(x, 39) || edges.get(x, 40))
            .count();
        let bottom = (50..150)
            .filter(|&x| edges.get(x, 99) || edges.get(x, 100))
            .count();
        let left = (40..100)
            .filter(|&y| edges.get(49, y) || edges.get(50, y))
            .count();
        let right = (40..100)
            .filter(|&y| edges.get(149, y) || edges.get(150, y))
            .count();
        assert!(covered(top, 100), "top {top}");
        assert!(covered(bottom, 100), "bottom {bottom}");
        assert!(covered(left, 60), "left {left}");
        assert!(covered(right, 60), "right {right}");
    }

    #[test]
    fn retained_pixels_exceed_low_threshold() {
        let img = rect_image();
        let cfg = CannyConfig::default();
        let edges = canny(&img, &cfg).unwrap();
        let g = gradients(&img, cfg.gaussian_sigma);
        let low = cfg.low_frac * g.max_magnitude();
        for (i, &e) in edges.mask().iter().enumerate() {
            if e {
                assert!(g.magnitude[i] >= low);
            }
        }
    }

    #[test]
    fn canny_rejects_tiny_images() {
        let img = GrayImage::new(4, 10).unwrap();
        assert_eq!(
            canny(&img, &CannyConfig::default()),
            Err(ImageError::TooSmall {
                width: 4,
                height: 10
            })
        );
    }

    #[test]
    fn canny_rejects_bad_thresholds() {
        let img = GrayImage::new(10, 10).unwrap();
        let cfg = CannyConfig {
            low_frac: 0.4,
            high_frac: 0.3,
            ..CannyConfig::default()
        };
        assert!(matches!(
            canny(&img, &cfg),
            Err(ImageError::InvalidConfig(_))
        ));
    }

    #[test]
    fn edge_vector_is_row_major() {
        let mut map = EdgeMap::new(5, 4);
        map.set(0, 2, true);
        map.set(3, 1, true);
        let pts = edge_vector(&map);
        assert_eq!(pts.points(), &[(3, 1), (0, 2)]);
    }

    #[test]
    fn edge_vector_of_empty_map_is_empty() {
        let pts = edge_vector(&EdgeMap::new(400, 300));
        assert!(pts.is_empty());
        assert_eq!(pts.len(), 0);
    }

    #[test]
    fn edge_vector_conserves_count() {
        let mut map = EdgeMap::new(400, 300);
        let mut k = 0;
        for i in (0..400 * 300).step_by(37) {
            map.set(i % 400, i / 400, true);
            k += 1;
        }
        assert_eq!(edge_vector(&map).len(), k);
    }

    #[test]
    fn gray_buffer_size_is_checked() {
        assert_eq!(
            GrayImage::from_raw(2, 2, vec![0; 3]),
            Err(ImageError::BufferSize {
                expected: 4,
                actual: 3
            })
        );
    }
}
