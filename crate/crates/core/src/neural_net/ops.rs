use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{CcnError, Result};
use crate::scalar::Scalar;

/// Variances at or below this make a batch unusable for power normalization.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Per-dimension mean and standard deviation of an encoder output batch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats<T> {
    pub mean: Array1<T>,
    pub std: Array1<T>,
}

/// Column-wise mean/std (population variance, divisor m).
pub fn batch_stats<T: Scalar>(x: ArrayView2<'_, T>) -> Result<BatchStats<T>> {
    let m = x.nrows();
    if m < 2 {
        return Err(CcnError::InvalidInput(format!(
            "power normalization needs at least 2 rows, got {m}"
        )));
    }
    let inv_m = T::lit(1.0 / m as f64);
    let mean = x.sum_axis(Axis(0)) * inv_m;
    let mut std = Array1::zeros(x.ncols());
    for (d, col) in x.axis_iter(Axis(1)).enumerate() {
        let mu = mean[d];
        let var = col.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() * inv_m;
        if var.as_f64() <= VARIANCE_FLOOR {
            return Err(CcnError::DegenerateBatch { dim: d, variance: var.as_f64() });
        }
        std[d] = var.sqrt();
    }
    Ok(BatchStats { mean, std })
}

/// Applies (x − μ)/σ row by row with the given statistics.
pub fn apply_stats<T: Scalar>(x: ArrayView2<'_, T>, stats: &BatchStats<T>) -> Array2<T> {
    let mut out = x.to_owned();
    for mut row in out.rows_mut() {
        row -= &stats.mean;
        row /= &stats.std;
    }
    out
}

/// Normalizes each output dimension of the batch to zero mean and unit variance.
pub fn normalize_power<T: Scalar>(x: ArrayView2<'_, T>) -> Result<(Array2<T>, BatchStats<T>)> {
    let stats = batch_stats(x)?;
    Ok((apply_stats(x, &stats), stats))
}

/// Gradient of a loss through [`normalize_power`], with μ and σ depending on the batch.
///
/// `normalized` is the forward output and `upstream` the gradient with respect to it.
pub fn normalize_power_backward<T: Scalar>(
    normalized: ArrayView2<'_, T>,
    upstream: ArrayView2<'_, T>,
    stats: &BatchStats<T>,
) -> Array2<T> {
    let m = T::lit(normalized.nrows() as f64);
    let mean_up = upstream.sum_axis(Axis(0)) / m;
    let mean_up_y = (&upstream * &normalized).sum_axis(Axis(0)) / m;
    let mut out = upstream.to_owned();
    for (mut row, y_row) in out.rows_mut().into_iter().zip(normalized.rows()) {
        for d in 0..row.len() {
            row[d] = (row[d] - mean_up[d] - y_row[d] * mean_up_y[d]) / stats.std[d];
        }
    }
    out
}

/// Numerically stable softmax of one logit row.
pub fn softmax<T: Scalar>(z: ArrayView1<'_, T>) -> Array1<T> {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut e = z.mapv(|v| (v - max).exp());
    let s = e.sum();
    e /= s;
    e
}

/// Row-wise softmax of a logit matrix.
pub fn softmax_rows<T: Scalar>(z: ArrayView2<'_, T>) -> Array2<T> {
    let mut out = z.to_owned();
    for mut row in out.rows_mut() {
        let p = softmax(row.view());
        row.assign(&p);
    }
    out
}

/// log Σ exp(z_j), computed with max subtraction.
pub fn log_sum_exp<T: Scalar>(z: ArrayView1<'_, T>) -> T {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    max + z.iter().map(|&v| (v - max).exp()).sum::<T>().ln()
}

/// Mean categorical cross-entropy −(1/m) Σ log ŝ[i, j_i], from logits.
pub fn cross_entropy_from_logits<T: Scalar>(logits: ArrayView2<'_, T>, targets: &[usize]) -> T {
    assert_eq!(logits.nrows(), targets.len(), "batch size mismatch");
    let total: T = logits
        .rows()
        .into_iter()
        .zip(targets)
        .map(|(row, &j)| log_sum_exp(row) - row[j])
        .sum();
    total / T::lit(targets.len() as f64)
}

/// Mean cross-entropy from probability rows, −(1/m) Σ log ŝ[i, j_i].
pub fn cross_entropy_from_probs<T: Scalar>(probs: ArrayView2<'_, T>, targets: &[usize]) -> T {
    assert_eq!(probs.nrows(), targets.len(), "batch size mismatch");
    let total: T = probs.rows().into_iter().zip(targets).map(|(row, &j)| -row[j].ln()).sum();
    total / T::lit(targets.len() as f64)
}

/// Hard decision on one inner decoder output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolDecision {
    Symbol(usize),
    Erasure,
}

/// Argmax of `probs` (lowest index on ties); erased when its probability is ≤ τ.
///
/// τ = 0 is plain argmax decoding and never erases.
pub fn decide_symbol<T: Scalar>(probs: ArrayView1<'_, T>, threshold: f64) -> SymbolDecision {
    let (best, p) = argmax(probs);
    if threshold > 0.0 && p.as_f64() <= threshold {
        SymbolDecision::Erasure
    } else {
        SymbolDecision::Symbol(best)
    }
}

/// Index of the largest entry, first one on ties.
pub fn argmax<T: Scalar>(v: ArrayView1<'_, T>) -> (usize, T) {
    let mut best = 0;
    let mut best_v = v[0];
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > best_v {
            best = i;
            best_v = x;
        }
    }
    (best, best_v)
}

/// Argmax of a logit row together with its softmax probability.
pub fn top_symbol_from_logits<T: Scalar>(z: ArrayView1<'_, T>) -> (usize, f64) {
    let (best, zmax) = argmax(z);
    let denom: f64 = z.iter().map(|&v| (v - zmax).as_f64().exp()).sum();
    (best, 1.0 / denom)
}
