use serde::Serialize;

use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Area under the ROC curve as the Mann-Whitney statistic
/// `(concordant + ties/2) / (n_pos · n_neg)`.
///
/// Returns `None` when `labels` lacks either class.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // walk tie groups in ascending score order; doubled counts stay integral
    let mut twice_u: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos_here, mut neg_here) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                pos_here += 1;
            } else {
                neg_here += 1;
            }
            j += 1;
        }
        twice_u += 2 * pos_here * neg_below + pos_here * neg_here;
        neg_below += neg_here;
        i = j;
    }
    Some(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    /// `2PR / (P + R)`, 0 when both are 0.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if self.tp == 0 || denom == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }

    pub fn support(&self) -> u64 {
        self.tp + self.fn_
    }
}

fn check_shapes(yhat: &Matrix, y: &Matrix) -> Result<()> {
    if yhat.shape() != y.shape() {
        return Err(Error::shape("metrics", yhat.shape(), y.shape()));
    }
    Ok(())
}

/// Per-label confusion counts with predictions binarized at `yhat >= threshold`.
pub fn confusion_per_label(yhat: &Matrix, y: &Matrix, threshold: f64) -> Result<Vec<Confusion>> {
    check_shapes(yhat, y)?;
    let mut out = vec![Confusion::default(); y.cols()];
    for i in 0..y.rows() {
        for (j, c) in out.iter_mut().enumerate() {
            let predicted = yhat.get(i, j) >= threshold;
            let actual = y.get(i, j) > 0.5;
            match (predicted, actual) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(out)
}

/// Mean F1 over labels with at least one positive; 0 when no label has support.
pub fn macro_f1(yhat: &Matrix, y: &Matrix, threshold: f64) -> Result<f64> {
    let per_label = confusion_per_label(yhat, y, threshold)?;
    let supported: Vec<f64> = per_label
        .iter()
        .filter(|c| c.support() > 0)
        .map(Confusion::f1)
        .collect();
    if supported.is_empty() {
        return Ok(0.0);
    }
    Ok(supported.iter().sum::<f64>() / supported.len() as f64)
}

pub fn micro_f1(yhat: &Matrix, y: &Matrix, threshold: f64) -> Result<f64> {
    let total = confusion_per_label(yhat, y, threshold)?
        .into_iter()
        .fold(Confusion::default(), |acc, c| Confusion {
            tp: acc.tp + c.tp,
            fp: acc.fp + c.fp,
            fn_: acc.fn_ + c.fn_,
        });
    Ok(total.f1())
}

fn column_auroc(yhat: &Matrix, y: &Matrix, j: usize) -> Option<f64> {
    let scores: Vec<f64> = (0..y.rows()).map(|i| yhat.get(i, j)).collect();
    let labels: Vec<bool> = (0..y.rows()).map(|i| y.get(i, j) > 0.5).collect();
    auroc(&scores, &labels)
}

/// Mean AUROC over labels where it is defined, and how many labels were skipped.
pub fn macro_auroc(yhat: &Matrix, y: &Matrix) -> Result<(Option<f64>, usize)> {
    check_shapes(yhat, y)?;
    let values: Vec<f64> = (0..y.cols()).filter_map(|j| column_auroc(yhat, y, j)).collect();
    let undefined = y.cols() - values.len();
    if values.is_empty() {
        return Ok((None, undefined));
    }
    Ok((Some(values.iter().sum::<f64>() / values.len() as f64), undefined))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelMetrics {
    pub label: String,
    /// `None` when the label has no positives.
    pub f1: Option<f64>,
    pub auroc: Option<f64>,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub threshold: f64,
    pub samples: usize,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub macro_auroc: Option<f64>,
    pub auroc_undefined_labels: usize,
    pub per_label: Vec<LabelMetrics>,
}

pub fn evaluate(yhat: &Matrix, y: &Matrix, labels: &[String], threshold: f64) -> Result<MetricsReport> {
    check_shapes(yhat, y)?;
    if labels.len() != y.cols() {
        return Err(Error::shape("evaluate labels", y.shape(), (1, labels.len())));
    }
    let confusion = confusion_per_label(yhat, y, threshold)?;
    let per_label = labels
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let c = confusion[j];
            LabelMetrics {
                label: name.clone(),
                f1: (c.support() > 0).then(|| c.f1()),
                auroc: column_auroc(yhat, y, j),
                support: c.support(),
            }
        })
        .collect();
    let (macro_auroc, auroc_undefined_labels) = macro_auroc(yhat, y)?;
    Ok(MetricsReport {
        threshold,
        samples: y.rows(),
        macro_f1: macro_f1(yhat, y, threshold)?,
        micro_f1: micro_f1(yhat, y, threshold)?,
        macro_auroc,
        auroc_undefined_labels,
        per_label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auroc_extremes() {
        let labels = [false, false, true, true];
        assert_eq!(auroc(&[0.1, 0.2, 0.8, 0.9], &labels), Some(1.0));
        assert_eq!(auroc(&[0.9, 0.8, 0.2, 0.1], &labels), Some(0.0));
        assert_eq!(auroc(&[0.5; 4], &labels), Some(0.5));
        assert_eq!(auroc(&[0.1, 0.2], &[true, true]), None);
        assert_eq!(auroc(&[], &[]), None);
    }

    #[test]
    fn macro_f1_hand_case() {
        // label 1: TP=1 FP=1 FN=1; label 2 perfect
        let y = Matrix::from_rows(&[[1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        let yhat = Matrix::from_rows(&[[0.9, 0.8], [0.1, 0.2], [0.7, 0.6], [0.2, 0.1]]).unwrap();
        let c = confusion_per_label(&yhat, &y, 0.5).unwrap();
        assert_eq!(c[0], Confusion { tp: 1, fp: 1, fn_: 1 });
        assert_eq!(c[0].f1(), 0.5);
        assert_eq!(c[1].f1(), 1.0);
        assert_eq!(macro_f1(&yhat, &y, 0.5).unwrap(), 0.75);
    }

    #[test]
    fn f1_edge_cases() {
        let y = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!(macro_f1(&y, &y, 0.5).unwrap(), 1.0);
        assert_eq!(macro_f1(&Matrix::zeros(2, 2), &y, 0.5).unwrap(), 0.0);
        // label 2 has no support and is excluded
        let yhat = Matrix::from_rows(&[[0.9, 0.9], [0.1, 0.1]]).unwrap();
        assert_eq!(macro_f1(&yhat, &y, 0.5).unwrap(), 1.0);
        assert_eq!(
            macro_f1(&Matrix::zeros(2, 2), &Matrix::zeros(2, 2), 0.5).unwrap(),
            0.0
        );
    }

    #[test]
    fn report_counts_undefined_auroc() {
        let y = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let yhat = Matrix::from_rows(&[[0.9, 0.3], [0.2, 0.4]]).unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let r = evaluate(&yhat, &y, &names, 0.5).unwrap();
        assert_eq!(r.macro_auroc, Some(1.0));
        assert_eq!(r.auroc_undefined_labels, 1);
        assert_eq!(r.per_label[1].f1, None);
        assert_eq!(r.per_label[0].support, 1);
    }
}
