//! Multimodal test functions with known optima, for exercising the
//! optimizer on its own.

use serde::Serialize;

use crate::cab::{normalized_distance, Bounds, ScoredPosition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    /// Two Gaussian peaks at (0.25, 0.25) and (0.75, 0.75).
    Bimodal,
    /// Four Gaussian peaks at the corners of [0.2, 0.8]².
    FourPeaks,
    /// `sin⁶(5πx)` on [0, 1], five peaks at 0.1, 0.3, ..., 0.9.
    EqualMaxima,
}

fn gaussian(x: &[f64], c: &[f64], width: f64) -> f64 {
    let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
    (-d2 / width).exp()
}

impl TestFunction {
    pub fn bounds(&self) -> Bounds {
        match self {
            TestFunction::EqualMaxima => Bounds::uniform(1, 0.0, 1.0),
            _ => Bounds::uniform(2, 0.0, 1.0),
        }
        .expect("static bounds")
    }

    pub fn optima(&self) -> Vec<Vec<f64>> {
        match self {
            TestFunction::Bimodal => vec![vec![0.25, 0.25], vec![0.75, 0.75]],
            TestFunction::FourPeaks => vec![
                vec![0.2, 0.2],
                vec![0.2, 0.8],
                vec![0.8, 0.2],
                vec![0.8, 0.8],
            ],
            TestFunction::EqualMaxima => (0..5).map(|k| vec![0.1 + 0.2 * k as f64]).collect(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::EqualMaxima => (5.0 * std::f64::consts::PI * x[0]).sin().powi(6),
            _ => self
                .optima()
                .iter()
                .map(|c| gaussian(x, c, 0.02))
                .fold(0.0, f64::max),
        }
    }
}

/// Distance from one analytic optimum to the closest memory element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimumMatch {
    pub optimum: Vec<f64>,
    pub nearest: Option<Vec<f64>>,
    pub distance: f64,
    pub found: bool,
}

/// Pairs every analytic optimum with its nearest memory element, in
/// normalized coordinates.
pub fn match_optima<P>(
    f: TestFunction,
    memory: &[ScoredPosition<P>],
    tolerance: f64,
) -> Vec<OptimumMatch> {
    let bounds = f.bounds();
    f.optima()
        .into_iter()
        .map(|optimum| {
            let best = memory
                .iter()
                .map(|m| {
                    (
                        normalized_distance(&bounds, &optimum, &m.position),
                        &m.position,
                    )
                })
                .min_by(|a, b| a.0.total_cmp(&b.0));
            let (distance, nearest) = match best {
                Some((d, p)) => (d, Some(p.clone())),
                None => (f64::INFINITY, None),
            };
            OptimumMatch {
                optimum,
                nearest,
                distance,
                found: distance <= tolerance,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optima_are_maxima() {
        for f in [
            TestFunction::Bimodal,
            TestFunction::FourPeaks,
            TestFunction::EqualMaxima,
        ] {
            for o in f.optima() {
                let v = f.evaluate(&o);
                assert!((v - 1.0).abs() < 1e-3, "{f:?} {o:?} {v}");
                for d in [-0.01, 0.01] {
                    let mut p = o.clone();
                    p[0] += d;
                    assert!(f.evaluate(&p) < v);
                }
            }
        }
    }

    #[test]
    fn matching_reports_distance() {
        let memory = vec![ScoredPosition {
            position: vec![0.26, 0.25],
            fitness: 1.0,
            payload: (),
        }];
        let m = match_optima(TestFunction::Bimodal, &memory, 0.05);
        assert!(m[0].found && (m[0].distance - 0.01).abs() < 1e-12);
        assert!(!m[1].found);
    }
}
