use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Model, Sample};
use crate::error::{Error, Result};

/// Classification quality. With two classes precision/recall/F1 refer to
/// class 1; with more they are macro averages over the classes present in
/// either the labels or the predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}",
            self.accuracy, self.precision, self.recall, self.f1
        )
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn confusion_metrics(predictions: &[usize], labels: &[usize], num_classes: usize) -> Metrics {
    assert_eq!(predictions.len(), labels.len());
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fn_ = vec![0usize; num_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p == l {
            tp[l] += 1;
        } else {
            fp[p] += 1;
            fn_[l] += 1;
        }
    }
    let correct: usize = tp.iter().sum();
    let accuracy = ratio(correct, labels.len());
    let per_class = |c: usize| {
        let p = ratio(tp[c], tp[c] + fp[c]);
        let r = ratio(tp[c], tp[c] + fn_[c]);
        (p, r, f1(p, r))
    };
    if num_classes == 2 {
        let (precision, recall, f1) = per_class(1);
        return Metrics {
            accuracy,
            precision,
            recall,
            f1,
        };
    }
    let present: Vec<usize> = (0..num_classes)
        .filter(|&c| tp[c] + fp[c] + fn_[c] > 0)
        .collect();
    let n = present.len().max(1) as f64;
    let (mut sp, mut sr, mut sf) = (0.0, 0.0, 0.0);
    for &c in &present {
        let (p, r, f) = per_class(c);
        sp += p;
        sr += r;
        sf += f;
    }
    Metrics {
        accuracy,
        precision: sp / n,
        recall: sr / n,
        f1: sf / n,
    }
}

pub fn evaluate(model: &Model, data: &[Sample]) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::InvalidConfig(
            "cannot evaluate on an empty dataset".into(),
        ));
    }
    let mut predictions = Vec::with_capacity(data.len());
    let mut labels = Vec::with_capacity(data.len());
    for s in data {
        predictions.push(model.predict(&s.image, s.pi.as_ref())?);
        labels.push(s.label);
    }
    Ok(confusion_metrics(
        &predictions,
        &labels,
        model.config().num_classes,
    ))
}
