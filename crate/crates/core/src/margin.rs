//! Classification margins and predictions.
//!
//! Binary tasks carry one logit `f` per instance and labels `y ∈ {-1, +1}`;
//! the margin is `y * f`. Multi-class tasks carry `k` logits and the margin is
//! the label logit minus the best competing logit. In both cases the margin is
//! positive exactly when the instance is correctly classified.
//!
//! Class indices map onto binary signs as `0 -> -1` and `1 -> +1`.

use crate::{Error, Result};

/// Sign label for a binary class index.
#[inline]
pub fn class_sign(class: usize) -> f64 {
    if class == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Class index for a binary sign label.
pub fn sign_class(sign: i8) -> Result<usize> {
    match sign {
        -1 => Ok(0),
        1 => Ok(1),
        other => Err(Error::Domain(format!("binary label must be ±1, got {other}"))),
    }
}

pub fn binary_margin(logit: f64, label: i8) -> Result<f64> {
    match label {
        -1 | 1 => Ok(f64::from(label) * logit),
        other => Err(Error::Domain(format!("binary label must be ±1, got {other}"))),
    }
}

/// `f_y - max_{j != y} f_j`.
pub fn multiclass_margin(logits: &[f64], label: usize) -> Result<f64> {
    if logits.len() < 2 {
        return Err(Error::Domain(format!(
            "multi-class margin needs at least 2 logits, got {}",
            logits.len()
        )));
    }
    if label >= logits.len() {
        return Err(Error::Domain(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    let runner_up = logits
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(logits[label] - runner_up)
}

/// Margin of one logit row against a class index, dispatching on row width.
pub fn row_margin(row: &[f64], class: usize) -> Result<f64> {
    match row.len() {
        1 => {
            if class > 1 {
                return Err(Error::Domain(format!(
                    "binary label must be class 0 or 1, got {class}"
                )));
            }
            Ok(class_sign(class) * row[0])
        }
        _ => multiclass_margin(row, class),
    }
}

/// Argmax with ties going to the lowest index. A single logit is read as a
/// binary score: class 1 (+1) when `f > 0`, otherwise class 0 (-1).
pub fn predict(logits: &[f64]) -> usize {
    assert!(!logits.is_empty(), "predict on empty logits");
    if logits.len() == 1 {
        return usize::from(logits[0] > 0.0);
    }
    let mut best = 0;
    for (j, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = j;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binary_examples() {
        assert_eq!(binary_margin(1.2, -1).unwrap(), -1.2);
        assert_eq!(binary_margin(0.0, 1).unwrap(), 0.0);
        assert_eq!(binary_margin(0.0, -1).unwrap(), 0.0);
        assert_eq!(binary_margin(-0.7, -1).unwrap(), 0.7);
        assert!(matches!(binary_margin(1.0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn multiclass_examples() {
        let l = [2.0, 0.5, -1.0];
        assert_eq!(multiclass_margin(&l, 0).unwrap(), 1.5);
        assert_eq!(multiclass_margin(&l, 2).unwrap(), -3.0);
        assert_eq!(multiclass_margin(&[1.0, 1.0], 0).unwrap(), 0.0);
        assert!(multiclass_margin(&l, 3).is_err());
    }

    #[test]
    fn predict_examples() {
        assert_eq!(predict(&[0.1, 0.9]), 1);
        assert_eq!(predict(&[0.5, 0.5]), 0);
        assert_eq!(predict(&[-0.3]), 0);
        assert_eq!(class_sign(predict(&[-0.3])), -1.0);
        assert_eq!(predict(&[0.0]), 0);
    }

    proptest! {
        #[test]
        fn margin_sign_matches_prediction(
            logits in prop::collection::vec(-5i32..5, 2..6),
            pick in 0usize..6,
        ) {
            // Small integers make exact ties common.
            let logits: Vec<f64> = logits.into_iter().map(f64::from).collect();
            let y = pick % logits.len();
            let m = multiclass_margin(&logits, y).unwrap();
            let unique_max = logits.iter().filter(|&&v| v == logits[y]).count() == 1;
            prop_assert_eq!(m > 0.0, predict(&logits) == y && unique_max);
            let best_other = logits.iter().enumerate().filter(|&(j, _)| j != y)
                .map(|(_, &v)| v).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(m == 0.0, logits[y] == best_other);
        }

        #[test]
        fn margin_shift_invariant(
            logits in prop::collection::vec(-10.0f64..10.0, 2..6),
            c in -100.0f64..100.0,
            pick in 0usize..6,
        ) {
            let y = pick % logits.len();
            let shifted: Vec<f64> = logits.iter().map(|v| v + c).collect();
            let a = multiclass_margin(&logits, y).unwrap();
            let b = multiclass_margin(&shifted, y).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn two_logit_margin_matches_binary(fneg in -10.0f64..10.0, fpos in -10.0f64..10.0) {
            // Class 0 is -1, class 1 is +1.
            let logits = [fneg, fpos];
            for (class, sign) in [(0usize, -1i8), (1, 1)] {
                let multi = multiclass_margin(&logits, class).unwrap();
                let bin = binary_margin(fpos - fneg, sign).unwrap();
                prop_assert!((multi - bin).abs() <= 1e-12);
            }
        }
    }
}
