//! Scoring detections against ground truth.
//!
//! `Es` compares one detected ellipse with one true ellipse; `ME` averages
//! it over a scene after a one-to-one matching, with fixed penalties for
//! missed and surplus detections. A run succeeds when `ME < 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{axial_difference, EllipseParams};

/// Contribution of an unmatched true ellipse, and of each surplus detection
/// times `NC`.
pub const MISS_PENALTY: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("ground truth is empty")]
    EmptyGroundTruth,
    #[error("no run reports")]
    NoReports,
    #[error("weights must be positive")]
    InvalidWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalWeights {
    /// Per pixel of centre offset.
    pub p1: f64,
    /// Per pixel of mean radius offset.
    pub p2: f64,
    /// Per degree of orientation offset.
    pub p3: f64,
}

impl Default for EvalWeights {
    fn default() -> Self {
        Self {
            p1: 0.05,
            p2: 0.1,
            p3: 0.2,
        }
    }
}

impl EvalWeights {
    pub fn validate(&self) -> Result<(), EvalError> {
        if [self.p1, self.p2, self.p3].iter().all(|w| *w > 0.0) {
            Ok(())
        } else {
            Err(EvalError::InvalidWeights)
        }
    }
}

fn near_circular(e: &EllipseParams) -> bool {
    e.r_min / e.r_max > 0.99
}

/// `Es` between two ellipses, orientation in degrees (axial).
pub fn error_score(truth: &EllipseParams, det: &EllipseParams, w: &EvalWeights) -> f64 {
    let centre = (truth.x0 - det.x0).abs() + (truth.y0 - det.y0).abs();
    let radii = ((truth.r_max - det.r_max).abs() + (truth.r_min - det.r_min).abs()) / 2.0;
    let angle = if near_circular(truth) && near_circular(det) {
        0.0
    } else {
        axial_difference(truth.theta, det.theta).to_degrees()
    };
    w.p1 * centre + w.p2 * radii + w.p3 * angle
}

/// Outcome of matching one scene's detections to its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneScore {
    /// `Es` per true ellipse, [`MISS_PENALTY`] when unmatched.
    pub per_ellipse: Vec<f64>,
    /// Detection index matched to each true ellipse.
    pub assignment: Vec<Option<usize>>,
    pub surplus: usize,
    pub me: f64,
}

/// Greedy one-to-one matching by ascending `Es` (ties: lower truth index,
/// then lower detection index), then `ME`.
pub fn score_scene(
    truths: &[EllipseParams],
    dets: &[EllipseParams],
    w: &EvalWeights,
) -> Result<SceneScore, EvalError> {
    if truths.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let mut pairs: Vec<(f64, usize, usize)> = truths
        .iter()
        .enumerate()
        .flat_map(|(i, t)| {
            dets.iter()
                .enumerate()
                .map(move |(j, d)| (error_score(t, d, w), i, j))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut assignment = vec![None; truths.len()];
    let mut per_ellipse = vec![MISS_PENALTY; truths.len()];
    let mut used = vec![false; dets.len()];
    for (es, i, j) in pairs {
        if assignment[i].is_none() && !used[j] {
            assignment[i] = Some(j);
            per_ellipse[i] = es;
            used[j] = true;
        }
    }
    let nc = truths.len() as f64;
    let surplus = dets.len().saturating_sub(truths.len());
    let me = per_ellipse.iter().sum::<f64>() / nc + surplus as f64 * MISS_PENALTY / nc;
    Ok(SceneScore {
        per_ellipse,
        assignment,
        surplus,
        me,
    })
}

/// `ME` of a scene.
pub fn multiple_error(
    truths: &[EllipseParams],
    dets: &[EllipseParams],
    w: &EvalWeights,
) -> Result<f64, EvalError> {
    score_scene(truths, dets, w).map(|s| s.me)
}

pub fn is_success(me: f64) -> bool {
    me < 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    #[serde(rename = "ME")]
    pub me: f64,
    pub success: bool,
    pub runtime_s: f64,
    pub per_ellipse: Vec<f64>,
}

impl RunReport {
    pub fn new(seed: u64, score: &SceneScore, runtime_s: f64) -> Self {
        Self {
            seed,
            me: score.me,
            success: is_success(score.me),
            runtime_s,
            per_ellipse: score.per_ellipse.clone(),
        }
    }
}

/// Percentage of successful runs.
pub fn success_rate(reports: &[RunReport]) -> Result<f64, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::NoReports);
    }
    let ok = reports.iter().filter(|r| r.success).count();
    Ok(100.0 * ok as f64 / reports.len() as f64)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Summary of a batch of seeded runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub per_run: Vec<RunReport>,
    #[serde(rename = "SR")]
    pub sr: f64,
    #[serde(rename = "ME_mean")]
    pub me_mean: f64,
    #[serde(rename = "ME_std")]
    pub me_std: f64,
    pub runtime_mean_s: f64,
    pub runtime_std_s: f64,
}

impl BatchReport {
    pub fn from_runs(per_run: Vec<RunReport>) -> Result<Self, EvalError> {
        let sr = success_rate(&per_run)?;
        let me: Vec<f64> = per_run.iter().map(|r| r.me).collect();
        let rt: Vec<f64> = per_run.iter().map(|r| r.runtime_s).collect();
        let (me_mean, me_std) = mean_std(&me);
        let (runtime_mean_s, runtime_std_s) = mean_std(&rt);
        Ok(Self {
            per_run,
            sr,
            me_mean,
            me_std,
            runtime_mean_s,
            runtime_std_s,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w() -> EvalWeights {
        EvalWeights::default()
    }

    fn e(x0: f64, y0: f64, a: f64, b: f64, deg: f64) -> EllipseParams {
        EllipseParams::new(x0, y0, a, b, deg.to_radians())
    }

    fn report(me: f64) -> RunReport {
        RunReport {
            seed: 0,
            me,
            success: is_success(me),
            runtime_s: 0.0,
            per_ellipse: vec![],
        }
    }

    #[test]
    fn error_score_examples() {
        let t = e(100.0, 100.0, 60.0, 30.0, 20.0);
        assert_eq!(error_score(&t, &t, &w()), 0.0);
        let d = e(110.0, 110.0, 70.0, 40.0, 25.0);
        assert!((error_score(&t, &d, &w()) - 3.0).abs() < 1e-9);
        let d = e(100.0, 100.0, 70.0, 40.0, 20.0);
        assert!((error_score(&t, &d, &w()) - 1.0).abs() < 1e-12);
        let d = e(100.0, 100.0, 60.0, 30.0, -178.0);
        assert!((error_score(&t, &d, &w()) - 0.2 * 18.0).abs() < 1e-9);
    }

    #[test]
    fn circles_ignore_orientation() {
        let a = e(50.0, 50.0, 40.0, 39.9, 0.0);
        let b = e(50.0, 50.0, 40.0, 39.9, 70.0);
        assert_eq!(error_score(&a, &b, &w()), 0.0);
    }

    #[test]
    fn multiple_error_examples() {
        let t1 = e(100.0, 100.0, 60.0, 30.0, 20.0);
        let t2 = e(300.0, 200.0, 50.0, 40.0, -10.0);
        assert_eq!(multiple_error(&[t1, t2], &[t2, t1], &w()).unwrap(), 0.0);
        let me = multiple_error(&[t1, t2], &[t1], &w()).unwrap();
        assert_eq!(me, 1.0);
        assert!(!is_success(me));
        let off = EllipseParams {
            x0: t1.x0 + 6.2,
            ..t1
        };
        assert!((multiple_error(&[t1], &[off], &w()).unwrap() - 0.31).abs() < 1e-12);
        assert_eq!(multiple_error(&[t1], &[t1, t1], &w()).unwrap(), 2.0);
        assert_eq!(
            multiple_error(&[], &[t1], &w()),
            Err(EvalError::EmptyGroundTruth)
        );
    }

    #[test]
    fn greedy_takes_the_cheapest_pair_first() {
        let t1 = e(100.0, 100.0, 60.0, 30.0, 0.0);
        let t2 = e(104.0, 100.0, 60.0, 30.0, 0.0);
        let d = e(103.0, 100.0, 60.0, 30.0, 0.0);
        let s = score_scene(&[t1, t2], &[d], &w()).unwrap();
        assert_eq!(s.assignment, vec![None, Some(0)]);
    }

    #[test]
    fn success_rate_examples() {
        let all: Vec<_> = (0..35).map(|_| report(0.3)).collect();
        assert_eq!(success_rate(&all).unwrap(), 100.0);
        let none: Vec<_> = (0..10).map(|_| report(1.5)).collect();
        assert_eq!(success_rate(&none).unwrap(), 0.0);
        let some: Vec<_> = (0..10)
            .map(|i| report(if i < 7 { 0.5 } else { 1.0 }))
            .collect();
        assert_eq!(success_rate(&some).unwrap(), 70.0);
        assert_eq!(success_rate(&[]), Err(EvalError::NoReports));
    }

    #[test]
    fn single_run_has_zero_spread() {
        let b = BatchReport::from_runs(vec![report(0.4)]).unwrap();
        assert_eq!(b.me_std, 0.0);
        assert_eq!(b.me_mean, 0.4);
        let json = serde_json::to_value(&b).unwrap();
        for key in ["per_run", "SR", "ME_mean", "ME_std"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!(json["per_run"][0].get("ME").is_some());
    }

    fn arb_ellipse() -> impl Strategy<Value = EllipseParams> {
        (
            0.0f64..400.0,
            0.0f64..300.0,
            5.0f64..150.0,
            0.1f64..1.0,
            -90.0f64..90.0,
        )
            .prop_map(|(x, y, a, q, deg)| e(x, y, a, a * q, deg))
    }

    proptest! {
        #[test]
        fn es_is_symmetric(a in arb_ellipse(), b in arb_ellipse()) {
            prop_assert!((error_score(&a, &b, &w()) - error_score(&b, &a, &w())).abs() < 1e-12);
            prop_assert_eq!(error_score(&a, &a, &w()), 0.0);
        }

        #[test]
        fn me_is_permutation_invariant(
            truths in prop::collection::vec(arb_ellipse(), 1..5),
            dets in prop::collection::vec(arb_ellipse(), 0..6),
            rot_t in 0usize..5, rot_d in 0usize..6,
        ) {
            let me = multiple_error(&truths, &dets, &w()).unwrap();
            let mut t2 = truths.clone();
            t2.rotate_left(rot_t % truths.len());
            t2.reverse();
            let mut d2 = dets.clone();
            if !d2.is_empty() {
                d2.rotate_left(rot_d % dets.len());
            }
            d2.reverse();
            let me2 = multiple_error(&t2, &d2, &w()).unwrap();
            prop_assert!((me - me2).abs() < 1e-9, "{} vs {}", me, me2);
        }

        #[test]
        fn duplicate_detection_increases_me(truths in prop::collection::vec(arb_ellipse(), 1..4)) {
            let me = multiple_error(&truths, &truths, &w()).unwrap();
            let mut dets = truths.clone();
            dets.push(truths[0]);
            prop_assert!(multiple_error(&truths, &dets, &w()).unwrap() > me);
        }

        #[test]
        fn success_rate_is_a_percentage(mes in prop::collection::vec(0.0f64..3.0, 1..40)) {
            let reports: Vec<_> = mes.iter().map(|&m| report(m)).collect();
            let sr = success_rate(&reports).unwrap();
            prop_assert!((0.0..=100.0).contains(&sr));
        }
    }
}
