use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::ingest::EdgeLabel;

/// Counts with edge errors as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn merge(&self, o: &ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + o.tp,
            tn: self.tn + o.tn,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

pub fn confusion(
    predictions: &[EdgeLabel],
    labels: &[EdgeLabel],
) -> Result<ConfusionMatrix, EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (p, l) in predictions.iter().zip(labels) {
        match (p.is_error(), l.is_error()) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Which accuracy numerator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccuracyFormula {
    /// `(TP + TN) / total`.
    #[default]
    Standard,
    /// `(TP + FP) / total`, the predicted-positive rate. Kept only to audit
    /// numbers produced with that formula.
    AsPrinted,
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    accuracy_with(cm, AccuracyFormula::Standard)
}

pub fn accuracy_with(cm: &ConfusionMatrix, formula: AccuracyFormula) -> Result<f64, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let num = match formula {
        AccuracyFormula::Standard => cm.tp + cm.tn,
        AccuracyFormula::AsPrinted => cm.tp + cm.fp,
    };
    Ok(num as f64 / total as f64)
}

/// `2TP / (2TP + FP + FN)`. A fold with no positives and no errors scores
/// 1.0.
pub fn f_measure(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let denom = 2 * cm.tp + cm.fp + cm.fn_;
    if denom == 0 {
        return Ok(1.0);
    }
    Ok((2 * cm.tp) as f64 / denom as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::EdgeLabel::{Correct as C, Error as E};
    use proptest::prelude::*;

    #[test]
    fn simple_counts() {
        let cm = confusion(&[E, C, E], &[E, C, E]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 2, tn: 1, fp: 0, fn_: 0 });
        let cm = confusion(&[C, E, C], &[E, C, E]).unwrap();
        assert_eq!((cm.tp, cm.tn), (0, 0));
        assert!(matches!(confusion(&[E], &[]), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn formulas() {
        let cm = ConfusionMatrix { tp: 3, tn: 5, fp: 1, fn_: 1 };
        assert_eq!(accuracy(&cm).unwrap(), 0.8);
        assert_eq!(f_measure(&cm).unwrap(), 0.75);
        assert_eq!(accuracy_with(&cm, AccuracyFormula::AsPrinted).unwrap(), 0.4);
    }

    #[test]
    fn conventions() {
        let all_error = ConfusionMatrix { tp: 29, ..Default::default() };
        assert_eq!(accuracy(&all_error).unwrap(), 1.0);
        assert_eq!(f_measure(&all_error).unwrap(), 1.0);
        let all_neg = ConfusionMatrix { tn: 4, ..Default::default() };
        assert_eq!(accuracy(&all_neg).unwrap(), 1.0);
        assert_eq!(f_measure(&all_neg).unwrap(), 1.0);
        let missed = ConfusionMatrix { tn: 4, fn_: 2, ..Default::default() };
        assert_eq!(f_measure(&missed).unwrap(), 0.0);
        assert!(matches!(accuracy(&ConfusionMatrix::default()), Err(EvalError::EmptyMatrix)));
        assert!(matches!(f_measure(&ConfusionMatrix::default()), Err(EvalError::EmptyMatrix)));
    }

    fn labels() -> impl Strategy<Value = Vec<EdgeLabel>> {
        prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { E } else { C }), 1..60)
    }

    proptest! {
        #[test]
        fn bounded_and_f_is_one_iff_no_mistakes(p in labels(), seed in any::<u64>()) {
            let l: Vec<EdgeLabel> = p.iter().enumerate()
                .map(|(i, x)| if (seed >> (i % 64)) & 1 == 1 { *x } else if x.is_error() { C } else { E })
                .collect();
            let cm = confusion(&p, &l).unwrap();
            prop_assert_eq!(cm.total(), p.len());
            let a = accuracy(&cm).unwrap();
            let f = f_measure(&cm).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert_eq!(f == 1.0, cm.fp == 0 && cm.fn_ == 0);
        }
    }
}
