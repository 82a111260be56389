//! Oracle metrics. They need ground-truth labels, so they are only available
//! for synthetic data or data with known noise.

use crate::scheduler::epoch_stats;
use crate::{Error, Result};

/// Share of noisy instances whose prediction matches their (wrong) observed label.
pub fn memorization_ratio(predictions: &[usize], observed: &[usize], truth: &[usize]) -> Result<f64> {
    aligned(&[predictions.len(), observed.len(), truth.len()])?;
    let (mut noisy, mut fitted) = (0usize, 0usize);
    for ((&p, &o), &t) in predictions.iter().zip(observed).zip(truth) {
        if o != t {
            noisy += 1;
            fitted += usize::from(p == o);
        }
    }
    ratio(fitted, noisy, "memorization ratio with no noisy instances")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelQuality {
    /// Clean share of the retained set; `None` when nothing is retained.
    pub precision: Option<f64>,
    /// Retained share of the clean set; `None` when nothing is clean.
    pub recall: Option<f64>,
}

pub fn label_precision_recall(retained: &[bool], observed: &[usize], truth: &[usize]) -> Result<LabelQuality> {
    aligned(&[retained.len(), observed.len(), truth.len()])?;
    let (mut kept, mut clean, mut both) = (0usize, 0usize, 0usize);
    for ((&r, &o), &t) in retained.iter().zip(observed).zip(truth) {
        let is_clean = o == t;
        kept += usize::from(r);
        clean += usize::from(is_clean);
        both += usize::from(r && is_clean);
    }
    Ok(LabelQuality {
        precision: ratio(both, kept, "").ok(),
        recall: ratio(both, clean, "").ok(),
    })
}

pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    aligned(&[predictions.len(), labels.len()])?;
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    ratio(hits, labels.len(), "accuracy of an empty set")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginSummary {
    pub median: f64,
    pub variance: f64,
    pub q05: f64,
}

pub fn margin_summary(margins: &[f64]) -> Result<MarginSummary> {
    if margins.iter().any(|m| !m.is_finite()) {
        return Err(Error::Undefined("margin summary over non-finite margins"));
    }
    let stats = epoch_stats(margins).map_err(|_| Error::Undefined("margin summary needs 2 values"))?;
    Ok(MarginSummary {
        median: stats.median,
        variance: stats.variance,
        q05: quantile(margins, 0.05),
    })
}

/// Linear interpolation between order statistics at 1-based position
/// `1 + (n - 1) q`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetainedFractions {
    pub clean: Option<f64>,
    pub noisy: Option<f64>,
}

pub fn retained_fractions(retained: &[bool], noisy: &[bool]) -> Result<RetainedFractions> {
    aligned(&[retained.len(), noisy.len()])?;
    let (mut nc, mut kc, mut nn, mut kn) = (0, 0, 0, 0);
    for (&r, &is_noisy) in retained.iter().zip(noisy) {
        if is_noisy {
            nn += 1;
            kn += usize::from(r);
        } else {
            nc += 1;
            kc += usize::from(r);
        }
    }
    Ok(RetainedFractions {
        clean: ratio(kc, nc, "").ok(),
        noisy: ratio(kn, nn, "").ok(),
    })
}

/// One row of `epochs.csv`. Oracle fields are `None` when undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub lr: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
    pub mem_ratio: Option<f64>,
    pub retained_clean_frac: Option<f64>,
    pub retained_noisy_frac: Option<f64>,
    pub label_precision: Option<f64>,
    pub label_recall: Option<f64>,
    pub margin_median: Option<f64>,
    pub margin_var: Option<f64>,
    pub margin_q05: Option<f64>,
}

impl EpochReport {
    pub const CSV_HEADER: &'static str = "epoch,lr,train_acc,test_acc,mem_ratio,\
retained_clean_frac,retained_noisy_frac,label_precision,label_recall,\
margin_median,margin_var,margin_q05";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.epoch,
            self.lr,
            self.train_acc,
            opt(self.test_acc),
            opt(self.mem_ratio),
            opt(self.retained_clean_frac),
            opt(self.retained_noisy_frac),
            opt(self.label_precision),
            opt(self.label_recall),
            opt(self.margin_median),
            opt(self.margin_var),
            opt(self.margin_q05),
        )
    }
}

fn aligned(lens: &[usize]) -> Result<()> {
    if lens.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Shape(format!("misaligned inputs of lengths {lens:?}")));
    }
    Ok(())
}

fn ratio(num: usize, den: usize, what: &'static str) -> Result<f64> {
    if den == 0 {
        return Err(Error::Undefined(what));
    }
    Ok(num as f64 / den as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn memorization_examples() {
        // Four noisy instances (truth 0, observed 1); one predicted as 1.
        let truth = [0, 0, 0, 0, 1];
        let observed = [1, 1, 1, 1, 1];
        assert_eq!(memorization_ratio(&[1, 0, 0, 0, 1], &observed, &truth).unwrap(), 0.25);
        assert_eq!(memorization_ratio(&[0, 0, 0, 0, 1], &observed, &truth).unwrap(), 0.0);
        assert_eq!(memorization_ratio(&[1, 1, 1, 1, 0], &observed, &truth).unwrap(), 1.0);
        assert!(matches!(
            memorization_ratio(&[0], &[0], &[0]),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn precision_recall_examples() {
        let truth = vec![0usize; 10];
        let mut observed = truth.clone();
        observed[3] = 1;
        let q = label_precision_recall(&[true; 10], &observed, &truth).unwrap();
        assert_abs_diff_eq!(q.precision.unwrap(), 0.9);
        assert_eq!(q.recall, Some(1.0));

        let clean: Vec<bool> = (0..10).map(|i| i != 3).collect();
        let q = label_precision_recall(&clean, &observed, &truth).unwrap();
        assert_eq!((q.precision, q.recall), (Some(1.0), Some(1.0)));

        // 100 instances, 60 clean; retain 54 clean and 4 noisy.
        let truth = vec![0usize; 100];
        let observed: Vec<usize> = (0..100).map(|i| usize::from(i >= 60)).collect();
        let retained: Vec<bool> = (0..100).map(|i| i < 54 || (60..64).contains(&i)).collect();
        let q = label_precision_recall(&retained, &observed, &truth).unwrap();
        assert_abs_diff_eq!(q.precision.unwrap(), 54.0 / 58.0);
        assert_abs_diff_eq!(q.precision.unwrap(), 0.931, epsilon = 1e-3);
        assert_abs_diff_eq!(q.recall.unwrap(), 0.9);

        let q = label_precision_recall(&[false, false], &[0, 1], &[0, 0]).unwrap();
        assert_eq!(q.precision, None);
        assert_eq!(q.recall, Some(0.0));
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 2], &[1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 2]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 1, 1, 0], &[1, 1, 1, 1]).unwrap(), 0.75);
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn margin_summary_examples() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        let s = margin_summary(&v).unwrap();
        assert_eq!(s.median, 10.5);
        assert_abs_diff_eq!(s.q05, 1.95, epsilon = 1e-12);
        assert_eq!(margin_summary(&[3.0; 4]).unwrap().variance, 0.0);
        assert_eq!(margin_summary(&[0.0, 10.0]).unwrap().median, 5.0);
        assert!(margin_summary(&[1.0]).is_err());
        assert!(margin_summary(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn retained_fraction_examples() {
        let noisy = [false, false, true, true];
        let f = retained_fractions(&[true; 4], &noisy).unwrap();
        assert_eq!((f.clean, f.noisy), (Some(1.0), Some(1.0)));
        let f = retained_fractions(&[true, true, false, false], &noisy).unwrap();
        assert_eq!((f.clean, f.noisy), (Some(1.0), Some(0.0)));
        let f = retained_fractions(&[true, false, true, false], &noisy).unwrap();
        assert_eq!((f.clean, f.noisy), (Some(0.5), Some(0.5)));
        let f = retained_fractions(&[true], &[false]).unwrap();
        assert_eq!(f.noisy, None);
    }

    #[test]
    fn undefined_cells_are_empty() {
        let r = EpochReport {
            epoch: 3,
            lr: 0.1,
            train_acc: 0.5,
            test_acc: None,
            mem_ratio: Some(0.25),
            retained_clean_frac: None,
            retained_noisy_frac: None,
            label_precision: None,
            label_recall: None,
            margin_median: None,
            margin_var: None,
            margin_q05: None,
        };
        assert_eq!(r.csv_row(), "3,0.1,0.5,,0.25,,,,,,,");
        assert_eq!(EpochReport::CSV_HEADER.split(',').count(), 12);
    }
}
