//! Multiclass evaluation: confusion matrix, one-vs-rest rates, and the
//! scalar cost the parameter search minimizes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Confusion matrix with `matrix[truth][prediction]` counts.
///
/// `labels` and `preds` must be the same non-zero length with every entry
/// below `num_classes`.
pub fn confusion_matrix(
    labels: &[usize],
    preds: &[usize],
    num_classes: usize,
) -> Result<Vec<Vec<usize>>> {
    if num_classes == 0 {
        return Err(Error::parameter("need at least one class"));
    }
    if labels.len() != preds.len() {
        return Err(Error::data(format!(
            "{} labels but {} predictions",
            labels.len(),
            preds.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::data("cannot evaluate zero samples"));
    }
    let mut matrix = vec![vec![0usize; num_classes]; num_classes];
    for (&truth, &pred) in labels.iter().zip(preds) {
        if truth >= num_classes || pred >= num_classes {
            return Err(Error::data(format!(
                "class index out of range: truth {truth}, prediction {pred}, \
                 {num_classes} classes"
            )));
        }
        matrix[truth][pred] += 1;
    }
    Ok(matrix)
}

/// Evaluation summary over one prediction run.
///
/// Rates are one-vs-rest per class; macro values are unweighted means over
/// classes. `cost = (1 - f1_macro) + fpr_macro`, expressed in fractions,
/// so it lies in `[0, 2]` and is 0 exactly for perfect predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<T> {
    pub confusion: Vec<Vec<usize>>,
    pub fpr_per_class: Vec<T>,
    pub fpr_macro: T,
    pub f1_per_class: Vec<T>,
    pub f1_macro: T,
    pub cost: T,
}

/// Compute per-class and macro rates from truth/prediction pairs.
///
/// Undefined ratios (zero denominators) evaluate to 0 rather than failing:
/// a class that is never predicted simply contributes a zero F1.
pub fn evaluate<T: Real>(labels: &[usize], preds: &[usize], num_classes: usize) -> Result<EvalReport<T>> {
    let confusion = confusion_matrix(labels, preds, num_classes)?;
    let total = labels.len();

    let ratio = |num: usize, den: usize| -> T {
        if den == 0 {
            T::zero()
        } else {
            T::from_usize(num).expect("count fits scalar") / T::from_usize(den).expect("count fits scalar")
        }
    };

    let mut fpr_per_class = Vec::with_capacity(num_classes);
    let mut f1_per_class = Vec::with_capacity(num_classes);
    for c in 0..num_classes {
        let tp = confusion[c][c];
        let fnn: usize = (0..num_classes).filter(|&j| j != c).map(|j| confusion[c][j]).sum();
        let fp: usize = (0..num_classes).filter(|&j| j != c).map(|j| confusion[j][c]).sum();
        let tn = total - tp - fnn - fp;

        fpr_per_class.push(ratio(fp, fp + tn));

        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fnn);
        let f1 = if precision + recall == T::zero() {
            T::zero()
        } else {
            T::cast(2.0) * precision * recall / (precision + recall)
        };
        f1_per_class.push(f1);
    }

    let nc = T::from_usize(num_classes).expect("class count fits scalar");
    let fpr_macro = fpr_per_class.iter().copied().sum::<T>() / nc;
    let f1_macro = f1_per_class.iter().copied().sum::<T>() / nc;
    let cost = (T::one() - f1_macro) + fpr_macro;

    Ok(EvalReport {
        confusion,
        fpr_per_class,
        fpr_macro,
        f1_per_class,
        f1_macro,
        cost,
    })
}
