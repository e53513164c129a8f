//! Edge-level classification metrics for predicted seams.

use serde::{Deserialize, Serialize};

use seamgnn_core::SeamLabels;

use crate::error::{Result, ToolkitError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
            fn_: self.fn_ + other.fn_,
        }
    }

    /// Rates in percent. TPR is `None` when the truth has no seams and FPR
    /// is `None` when it has no non-seams.
    pub fn rates(&self) -> Rates {
        let pct = |num: usize, den: usize| (den > 0).then(|| 100.0 * num as f64 / den as f64);
        Rates {
            fpr: pct(self.fp, self.fp + self.tn),
            tpr: pct(self.tp, self.tp + self.fn_),
            accuracy: pct(self.tp + self.tn, self.total()).unwrap_or(100.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub fpr: Option<f64>,
    pub tpr: Option<f64>,
    pub accuracy: f64,
}

pub fn confusion(pred: &SeamLabels, truth: &SeamLabels) -> Result<Confusion> {
    if pred.len() != truth.len() {
        return Err(ToolkitError::LengthMismatch {
            what: "predicted labels",
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    let mut c = Confusion::default();
    for (&p, &t) in pred.as_slice().iter().zip(truth.as_slice()) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// FPR, TPR and accuracy in percent.
pub fn metrics(pred: &SeamLabels, truth: &SeamLabels) -> Result<Rates> {
    Ok(confusion(pred, truth)?.rates())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(bits: &[u8]) -> SeamLabels {
        SeamLabels::from_bits(bits).unwrap()
    }

    #[test]
    fn perfect_prediction() {
        let t = labels(&[1, 0, 0, 1, 0]);
        let r = metrics(&t, &t).unwrap();
        assert_eq!(r.fpr, Some(0.0));
        assert_eq!(r.tpr, Some(100.0));
        assert_eq!(r.accuracy, 100.0);
    }

    #[test]
    fn all_positive_prediction_on_ten_percent_seams() {
        let mut bits = vec![0u8; 20];
        bits[3] = 1;
        bits[11] = 1;
        let r = metrics(&SeamLabels::ones(20), &labels(&bits)).unwrap();
        assert_eq!(r.tpr, Some(100.0));
        assert_eq!(r.fpr, Some(100.0));
        assert!((r.accuracy - 10.0).abs() < 1e-12);
    }

    #[test]
    fn tpr_undefined_without_seams() {
        let r = metrics(&labels(&[0, 1, 0]), &SeamLabels::zeros(3)).unwrap();
        assert_eq!(r.tpr, None);
        assert!((r.fpr.unwrap() - 100.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn counts_sum_to_edge_count() {
        let c = confusion(&labels(&[1, 1, 0, 0, 1]), &labels(&[1, 0, 1, 0, 0])).unwrap();
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (1, 2, 1, 1));
        assert_eq!(c.total(), 5);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            metrics(&SeamLabels::zeros(2), &SeamLabels::zeros(3)),
            Err(ToolkitError::LengthMismatch { .. })
        ));
    }
}
