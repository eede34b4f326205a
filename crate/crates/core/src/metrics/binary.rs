use super::labels::Class3;
use super::MetricsError;
use serde::{Deserialize, Serialize};

/// Lesion presence accuracy. A rate is `None` when the truth has no cases of
/// the corresponding kind, and the Youden index is `None` unless both exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub youden: Option<f64>,
    pub true_positive: u64,
    pub false_negative: u64,
    pub true_negative: u64,
    pub false_positive: u64,
}

pub fn binary_metrics(pred: &[Class3], truth: &[Class3]) -> Result<BinaryMetrics, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    let (mut tp, mut fn_, mut tn, mut fp) = (0u64, 0u64, 0u64, 0u64);
    for (p, t) in pred.iter().zip(truth) {
        match (t.is_positive(), p.is_positive()) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
        }
    }
    let rate = |hit: u64, miss: u64| (hit + miss > 0).then(|| hit as f64 / (hit + miss) as f64);
    let sensitivity = rate(tp, fn_);
    let specificity = rate(tn, fp);
    let youden = match (sensitivity, specificity) {
        (Some(s), Some(p)) => Some(s + p - 1.0),
        _ => None,
    };
    Ok(BinaryMetrics {
        sensitivity,
        specificity,
        youden,
        true_positive: tp,
        false_negative: fn_,
        true_negative: tn,
        false_positive: fp,
    })
}

/// Counts indexed `[truth][pred]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionMatrix(pub [[u64; 3]; 3]);

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> [u64; 3] {
        [0, 1, 2].map(|t| self.0[t].iter().sum())
    }

    pub fn column_sums(&self) -> [u64; 3] {
        [0, 1, 2].map(|p| self.0.iter().map(|r| r[p]).sum())
    }
}

pub fn confusion_matrix(
    pred: &[Class3],
    truth: &[Class3],
) -> Result<ConfusionMatrix, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), truth.len()));
    }
    let mut m = [[0u64; 3]; 3];
    for (p, t) in pred.iter().zip(truth) {
        m[t.index()][p.index()] += 1;
    }
    Ok(ConfusionMatrix(m))
}
