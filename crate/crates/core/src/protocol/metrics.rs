//! Session metrics: average accuracy, performance drop, and the
//! base/incremental decomposition.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::ClassId;

/// Correct and total test predictions for one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassTally {
    pub correct: usize,
    pub total: usize,
}

impl ClassTally {
    /// Percent correct; 0 for a class with no test examples.
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.total as f64
        }
    }
}

/// Percent accuracy pooled over `classes` (sample-weighted).
pub fn pooled_accuracy<'a>(
    tallies: &BTreeMap<ClassId, ClassTally>,
    classes: impl IntoIterator<Item = &'a ClassId>,
) -> Option<f64> {
    let (mut correct, mut total) = (0, 0);
    for c in classes {
        if let Some(t) = tallies.get(c) {
            correct += t.correct;
            total += t.total;
        }
    }
    (total > 0).then(|| 100.0 * correct as f64 / total as f64)
}

/// Arithmetic mean of per-session accuracies.
pub fn metric_avg(accuracies: &[f64]) -> Result<f64> {
    if accuracies.is_empty() {
        return Err(Error::Empty("session accuracies"));
    }
    Ok(accuracies.iter().sum::<f64>() / accuracies.len() as f64)
}

/// First-session accuracy minus last-session accuracy.
pub fn metric_pd(accuracies: &[f64]) -> Result<f64> {
    match (accuracies.first(), accuracies.last()) {
        (Some(first), Some(last)) => Ok(first - last),
        _ => Err(Error::Empty("session accuracies")),
    }
}

/// `2ab / (a + b)`, or 0 when `a + b = 0`.
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub base: f64,
    pub incremental: f64,
    pub harmonic_mean: f64,
}

/// Splits per-class results into base and incremental groups, each
/// sample-weighted.
pub fn metric_decomposition(
    tallies: &BTreeMap<ClassId, ClassTally>,
    base: &[ClassId],
    incremental: &[ClassId],
) -> Result<Decomposition> {
    let base_set: BTreeSet<_> = base.iter().collect();
    let shared: Vec<String> = incremental
        .iter()
        .filter(|c| base_set.contains(c))
        .map(ToString::to_string)
        .collect();
    if !shared.is_empty() {
        return Err(Error::invalid(format!(
            "base and incremental class sets overlap on {}",
            shared.join(", ")
        )));
    }
    let b = pooled_accuracy(tallies, base).unwrap_or(0.0);
    let i = pooled_accuracy(tallies, incremental).unwrap_or(0.0);
    Ok(Decomposition {
        base: b,
        incremental: i,
        harmonic_mean: harmonic_mean(b, i),
    })
}

/// Median of a nonempty sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("median input"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}
