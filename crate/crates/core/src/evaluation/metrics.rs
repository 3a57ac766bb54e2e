//! Confusion matrices and the metrics derived from them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square count matrix, rows = actual class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix { counts: vec![vec![0; n_classes]; n_classes] }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = counts.len();
        if counts.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("confusion matrix must be square"));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn from_predictions(actual: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        if actual.len() != predicted.len() {
            return Err(Error::invalid(format!(
                "{} actual labels but {} predictions",
                actual.len(),
                predicted.len()
            )));
        }
        let mut cm = ConfusionMatrix::new(n_classes);
        for (&a, &p) in actual.iter().zip(predicted) {
            if a >= n_classes || p >= n_classes {
                return Err(Error::invalid(format!("label out of range for {n_classes} classes")));
            }
            cm.counts[a][p] += 1;
        }
        Ok(cm)
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.n_classes() != self.n_classes() {
            return Err(Error::Dimension { expected: self.n_classes(), actual: other.n_classes() });
        }
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            r.iter_mut().zip(o).for_each(|(a, b)| *a += b);
        }
        Ok(())
    }

    /// trace / total.
    pub fn accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::invalid("accuracy of an empty confusion matrix"));
        }
        Ok(self.trace() as f64 / total as f64)
    }

    /// (precision, recall, F1) of one class; every 0/0 is 0.
    pub fn precision_recall_f1(&self, class: usize) -> (f64, f64, f64) {
        let tp = self.counts[class][class] as f64;
        let predicted: f64 = self.counts.iter().map(|r| r[class] as f64).sum();
        let actual: f64 = self.counts[class].iter().map(|&c| c as f64).sum();
        let p = ratio(tp, predicted);
        let r = ratio(tp, actual);
        (p, r, ratio(2.0 * p * r, p + r))
    }

    pub fn macro_f1(&self) -> f64 {
        let n = self.n_classes();
        if n == 0 {
            return 0.0;
        }
        (0..n).map(|c| self.precision_recall_f1(c).2).sum::<f64>() / n as f64
    }

    /// Recall per class, also reported as per-class accuracy.
    pub fn per_class_recall(&self) -> Vec<f64> {
        (0..self.n_classes()).map(|c| self.precision_recall_f1(c).1).collect()
    }

    pub fn to_csv(&self, names: &[String]) -> String {
        let mut s = String::from("actual\\predicted");
        for n in names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for (n, row) in names.iter().zip(&self.counts) {
            s.push_str(n);
            for c in row {
                s.push_str(&format!(",{c}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Metrics of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn from_confusion(cm: ConfusionMatrix) -> Result<Self> {
        let accuracy = cm.accuracy()?;
        let prf: Vec<_> = (0..cm.n_classes()).map(|c| cm.precision_recall_f1(c)).collect();
        Ok(MetricsReport {
            accuracy,
            macro_f1: cm.macro_f1(),
            precision: prf.iter().map(|x| x.0).collect(),
            recall: prf.iter().map(|x| x.1).collect(),
            f1: prf.iter().map(|x| x.2).collect(),
            confusion: cm,
        })
    }

    pub fn from_predictions(actual: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        Self::from_confusion(ConfusionMatrix::from_predictions(actual, predicted, n_classes)?)
    }

    /// Per-class table as CSV; `names` labels the rows.
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut s = String::from("class,precision,recall,f1\n");
        for (i, n) in names.iter().enumerate() {
            s.push_str(&format!("{n},{:.4},{:.4},{:.4}\n", self.precision[i], self.recall[i], self.f1[i]));
        }
        s.push_str(&format!("accuracy,,,{:.4}\nmacro_f1,,,{:.4}\n", self.accuracy, self.macro_f1));
        s
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} (+/- {:.2})", self.mean, self.std)
    }
}

/// Cross-validation outcome: per-fold reports, fold mean ± std, and pooled counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<MetricsReport>,
    pub accuracy: MeanStd,
    pub macro_f1: MeanStd,
    /// Metrics of the summed fold confusion matrices.
    pub pooled: MetricsReport,
}

impl CvReport {
    pub fn from_folds(folds: Vec<MetricsReport>) -> Result<Self> {
        let first = folds.first().ok_or_else(|| Error::invalid("no folds"))?;
        let mut cm = ConfusionMatrix::new(first.confusion.n_classes());
        for f in &folds {
            cm.add(&f.confusion)?;
        }
        Ok(CvReport {
            accuracy: MeanStd::of(&folds.iter().map(|f| f.accuracy).collect::<Vec<_>>()),
            macro_f1: MeanStd::of(&folds.iter().map(|f| f.macro_f1).collect::<Vec<_>>()),
            pooled: MetricsReport::from_confusion(cm)?,
            folds,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let cm = ConfusionMatrix::from_counts(vec![vec![3, 1], vec![1, 5]]).unwrap();
        assert_eq!(cm.precision_recall_f1(0), (0.75, 0.75, 0.75));
        assert!((cm.accuracy().unwrap() - 0.8).abs() < 1e-12);
        assert!(ConfusionMatrix::new(4).accuracy().is_err());
    }

    #[test]
    fn absent_class_scores_zero() {
        let cm = ConfusionMatrix::from_predictions(&[3, 3, 0], &[3, 3, 3], 4).unwrap();
        assert_eq!(cm.precision_recall_f1(1), (0.0, 0.0, 0.0));
        assert_eq!(cm.per_class_recall(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn majority_on_sdqc_counts() {
        // Everything predicted as the last class.
        let counts = [273u64, 300, 81, 2353];
        let cm = ConfusionMatrix::from_counts(
            counts.iter().map(|&c| vec![0, 0, 0, c]).collect(),
        )
        .unwrap();
        assert!((cm.accuracy().unwrap() - 0.7825).abs() < 1e-4);
        assert!((cm.macro_f1() - 0.2195).abs() < 1e-4);
        assert!((cm.precision_recall_f1(3).2 - 0.878).abs() < 1e-3);
    }

    #[test]
    fn mean_std_is_population() {
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std), (2.0, 1.0));
    }
}
