use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts with anomalies (label 1) as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.fp + self.tn
    }

    /// Recall; 0 when there are no positives.
    pub fn tpr(&self) -> f64 {
        ratio(self.tp, self.positives())
    }

    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.negatives())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn f1(&self) -> f64 {
        f1(self.tp, self.fp, self.fn_)
    }

    pub fn g_measure(&self) -> f64 {
        g_measure(self.tp, self.fp, self.fn_)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn confusion(pred: &[u8], truth: &[u8]) -> Result<Confusion> {
    if pred.len() != truth.len() {
        return Err(Error::dims("confusion", truth.len(), pred.len()));
    }
    let mut c = Confusion::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (1, 1) => c.tp += 1,
            (1, 0) => c.fp += 1,
            (0, 1) => c.fn_ += 1,
            (0, 0) => c.tn += 1,
            _ => return Err(Error::InvalidLabel(format!("non-binary pair ({p}, {t})"))),
        }
    }
    Ok(c)
}

/// Harmonic mean of precision and recall; 0 when `tp == 0`.
pub fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

/// Geometric mean of precision and recall; 0 when `tp == 0`.
pub fn g_measure(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    (precision * recall).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_counts() {
        let c = confusion(&[1, 0, 1, 0], &[1, 1, 0, 0]).unwrap();
        assert_eq!(c, Confusion { tp: 1, fp: 1, fn_: 1, tn: 1 });

        let mut truth = vec![0u8; 90];
        truth.extend([1u8; 10]);
        let c = confusion(&[1u8; 100], &truth).unwrap();
        assert_eq!((c.tp, c.fp), (10, 90));

        let c = confusion(&truth, &truth).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));

        assert!(confusion(&[1], &[1, 0]).is_err());
        assert!(confusion(&[2], &[1]).is_err());
    }

    #[test]
    fn f1_and_g_hand_values() {
        // precision 4/5, recall 4/10
        assert!((f1(4, 1, 6) - 2.0 * 0.8 * 0.4 / 1.2).abs() < 1e-12);
        assert!((g_measure(4, 1, 6) - 0.32f64.sqrt()).abs() < 1e-12);
        assert_eq!(f1(1, 1, 1), 0.5);
        assert_eq!(g_measure(1, 1, 1), 0.5);
        assert_eq!(f1(0, 3, 4), 0.0);
        assert_eq!(g_measure(0, 0, 0), 0.0);
    }

    proptest! {
        #[test]
        fn bounded_and_equal_when_precision_equals_recall(tp in 0usize..500, fp in 0usize..500, fn_ in 0usize..500) {
            let f = f1(tp, fp, fn_);
            let g = g_measure(tp, fp, fn_);
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!((0.0..=1.0).contains(&g));
            prop_assert!(f <= g + 1e-12);
            if fp == fn_ {
                prop_assert!((f - g).abs() < 1e-12);
            }
        }
    }
}
