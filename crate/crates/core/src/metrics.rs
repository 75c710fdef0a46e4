//! Evaluation metrics: confusion counts for variable selection and the
//! standard point-forecast error measures.

use alloc::string::String;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Selection confusion counts against a known truth vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    /// False negatives (`fn` is a reserved word).
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

/// Point-forecast error measures. `r` and `r2` are absent when the actuals
/// are constant; `nrmse` is absent when the actuals have zero range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionMetrics {
    /// Mean error, mean(actual - predicted).
    pub me: f64,
    pub mae: f64,
    pub mse: f64,
    /// RMSE divided by the range of the actuals (a fraction; multiply by
    /// 100 for the percentage form).
    pub nrmse: Option<f64>,
    /// Pearson correlation between actual and predicted.
    pub r: Option<f64>,
    /// 1 - RSS/TSS with TSS centered at the mean of the actuals.
    pub r2: Option<f64>,
}

/// Classify `estimated` against the support of `truth`. An estimate counts
/// as nonzero when its magnitude exceeds `rel_threshold` times the smallest
/// nonzero magnitude in `truth`.
pub fn confusion(
    estimated: &[f64],
    truth: &[f64],
    rel_threshold: f64,
) -> Result<ConfusionCounts> {
    if estimated.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            got: estimated.len(),
        });
    }
    let min_nonzero = truth
        .iter()
        .filter(|&&v| v != 0.0)
        .map(|v| v.abs())
        .fold(f64::INFINITY, f64::min);
    if !min_nonzero.is_finite() {
        return Err(Error::InvalidConfig {
            reason: String::from("relative threshold needs at least one nonzero truth entry"),
        });
    }
    let threshold = rel_threshold * min_nonzero;
    let mut counts = ConfusionCounts {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
    };
    for (&est, &tru) in estimated.iter().zip(truth) {
        let est_on = est.abs() > threshold;
        let tru_on = tru != 0.0;
        match (est_on, tru_on) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, true) => counts.fn_ += 1,
            (false, false) => counts.tn += 1,
        }
    }
    Ok(counts)
}

/// ME, MAE, MSE, NRMSE, Pearson r and R-squared of `predicted` against
/// `actual`.
pub fn prediction_metrics(actual: &[f64], predicted: &[f64]) -> Result<PredictionMetrics> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: actual.len(),
            got: predicted.len(),
        });
    }
    let n = actual.len();
    if n == 0 {
        return Err(Error::InvalidConfig {
            reason: String::from("metrics need at least one observation"),
        });
    }
    let nf = n as f64;
    let mut me = 0.0;
    let mut mae = 0.0;
    let mut mse = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&a, &p) in actual.iter().zip(predicted) {
        let e = a - p;
        me += e;
        mae += e.abs();
        mse += e * e;
        lo = lo.min(a);
        hi = hi.max(a);
    }
    me /= nf;
    mae /= nf;
    mse /= nf;
    let nrmse = if hi > lo {
        Some(mse.sqrt() / (hi - lo))
    } else {
        None
    };

    let a_mean = actual.iter().sum::<f64>() / nf;
    let p_mean = predicted.iter().sum::<f64>() / nf;
    let mut tss = 0.0;
    let mut pss = 0.0;
    let mut cross = 0.0;
    for (&a, &p) in actual.iter().zip(predicted) {
        tss += (a - a_mean) * (a - a_mean);
        pss += (p - p_mean) * (p - p_mean);
        cross += (a - a_mean) * (p - p_mean);
    }
    let (r, r2) = if tss > 0.0 {
        let r = if pss > 0.0 {
            Some(cross / (tss.sqrt() * pss.sqrt()))
        } else {
            None
        };
        (r, Some(1.0 - mse * nf / tss))
    } else {
        (None, None)
    };
    Ok(PredictionMetrics {
        me,
        mae,
        mse,
        nrmse,
        r,
        r2,
    })
}

/// Mean confusion counts across replicates, in the order
/// (TP, FP, FN, TN, accuracy).
pub fn mean_confusion(rows: &[ConfusionCounts]) -> Option<[f64; 5]> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let mut out = [0.0f64; 5];
    for c in rows {
        out[0] += c.tp as f64;
        out[1] += c.fp as f64;
        out[2] += c.fn_ as f64;
        out[3] += c.tn as f64;
        out[4] += c.accuracy();
    }
    for v in &mut out {
        *v /= n;
    }
    Some(out)
}
