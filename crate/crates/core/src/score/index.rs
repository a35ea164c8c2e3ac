use serde::{Deserialize, Serialize};

use super::{Baseline, MetricVector, ScoreError};

pub const METRIC_NAMES: [&str; 6] = ["D", "A", "F", "T", "M", "C"];

/// Task weights for (D, A, F, T, M, C). Always sums to 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u32; 6]", into = "[u32; 6]")]
pub struct ScoreWeights([u32; 6]);

impl ScoreWeights {
    pub fn new(row: [u32; 6]) -> Result<Self, ScoreError> {
        let sum: u32 = row.iter().sum();
        if sum != 10 {
            return Err(ScoreError::WeightSum { row, sum });
        }
        Ok(Self(row))
    }

    pub fn row(&self) -> [u32; 6] {
        self.0
    }
}

impl TryFrom<[u32; 6]> for ScoreWeights {
    type Error = ScoreError;

    fn try_from(row: [u32; 6]) -> Result<Self, ScoreError> {
        ScoreWeights::new(row)
    }
}

impl From<ScoreWeights> for [u32; 6] {
    fn from(w: ScoreWeights) -> Self {
        w.0
    }
}

/// Smoothing for expert metrics that are effectively zero: when the expert
/// value is below `eps[k]` the ratio becomes `(X + ε)/(X_exp + ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPolicy {
    pub enabled: bool,
    /// mm, rad, N, N·m, drops, fraction.
    pub eps: [f64; 6],
}

impl Default for EpsilonPolicy {
    fn default() -> Self {
        Self { enabled: true, eps: [0.05, 0.005, 0.005, 0.0005, 1.0, 0.01] }
    }
}

impl EpsilonPolicy {
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceScore {
    /// Weighted mean of subject/expert ratios; 1 is parity, lower is better.
    pub p: f64,
    /// `1/P`, higher is better.
    pub score: f64,
    /// Per-metric ratio, `None` where the weight is zero.
    pub ratios: [Option<f64>; 6],
    pub weights: ScoreWeights,
}

pub fn performance_index(
    subject: &MetricVector,
    expert: &Baseline,
    weights: &ScoreWeights,
    policy: &EpsilonPolicy,
) -> Result<PerformanceScore, ScoreError> {
    let xs = subject.as_array();
    let es = expert.expert.as_array();
    let mut ratios = [None; 6];
    let mut sum = 0.0;
    for k in 0..6 {
        let w = weights.0[k];
        if w == 0 {
            continue;
        }
        let ratio = if policy.enabled && es[k] < policy.eps[k] {
            (xs[k] + policy.eps[k]) / (es[k] + policy.eps[k])
        } else if es[k] == 0.0 {
            return Err(ScoreError::ZeroExpert { metric: METRIC_NAMES[k], weight: w });
        } else {
            xs[k] / es[k]
        };
        ratios[k] = Some(ratio);
        sum += f64::from(w) * ratio;
    }
    let p = sum / 10.0;
    Ok(PerformanceScore { p, score: 1.0 / p, ratios, weights: *weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PATH: [u32; 6] = [3, 2, 3, 1, 0, 1];

    fn mv(a: [f64; 6]) -> MetricVector {
        MetricVector { d: a[0], a: a[1], f: a[2], t: a[3], m: a[4] as u32, c: a[5] }
    }

    fn baseline(a: [f64; 6]) -> Baseline {
        Baseline { task_id: "path".into(), expert: mv(a), provenance: "test".into() }
    }

    #[test]
    fn weight_rows_must_sum_to_ten() {
        assert!(ScoreWeights::new(PATH).is_ok());
        let err = ScoreWeights::new([3, 2, 3, 1, 0, 0]).unwrap_err();
        assert!(matches!(err, ScoreError::WeightSum { sum: 9, .. }));
    }

    #[test]
    fn expert_parity_is_one() {
        let e = [2.0, 0.3, 0.8, 0.02, 1.0, 0.1];
        let s = performance_index(&mv(e), &baseline(e), &ScoreWeights::new(PATH).unwrap(), &EpsilonPolicy::default()).unwrap();
        assert_eq!(s.p, 1.0);
        assert_eq!(s.score, 1.0);
        assert_eq!(s.ratios[4], None);
    }

    #[test]
    fn doubled_distance_on_path() {
        let e = [2.0, 0.3, 0.8, 0.02, 0.0, 0.1];
        let mut sub = e;
        sub[0] *= 2.0;
        let s = performance_index(&mv(sub), &baseline(e), &ScoreWeights::new(PATH).unwrap(), &EpsilonPolicy::default()).unwrap();
        assert_eq!(s.p, 1.3);
        assert_eq!(s.ratios[0], Some(2.0));
    }

    #[test]
    fn zero_weights_are_ignored() {
        let rings = ScoreWeights::new([5, 0, 4, 0, 0, 1]).unwrap();
        let e = [2.0, 0.0, 0.8, 0.0, 0.0, 0.1];
        let sub = [2.0, 99.0, 0.8, 99.0, 7.0, 0.1];
        let s = performance_index(&mv(sub), &baseline(e), &rings, &EpsilonPolicy::disabled()).unwrap();
        assert_eq!(s.p, 1.0);
        assert_eq!(s.ratios[1], None);
    }

    #[test]
    fn zero_expert_drops_use_epsilon() {
        let exchange = ScoreWeights::new([2, 2, 2, 1, 2, 1]).unwrap();
        let e = [1.0, 0.1, 0.5, 0.01, 0.0, 0.2];
        let mut sub = e;
        sub[4] = 2.0;
        let s = performance_index(&mv(sub), &baseline(e), &exchange, &EpsilonPolicy::default()).unwrap();
        assert_eq!(s.ratios[4], Some((2.0 + 1.0) / (0.0 + 1.0)));

        let err = performance_index(&mv(sub), &baseline(e), &exchange, &EpsilonPolicy::disabled()).unwrap_err();
        assert!(matches!(err, ScoreError::ZeroExpert { metric: "M", weight: 2 }));
    }
}
