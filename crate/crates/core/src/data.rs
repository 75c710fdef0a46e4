//! Dataset handling: missing-value interpolation, lag expansion of
//! covariates, standardization, and response transformations.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// A time-aligned response series with its covariate matrix.
#[derive(Debug, Clone)]
pub struct TimeSeriesDataset {
    /// Optional per-row timestamps (kept as opaque labels).
    pub timestamps: Option<Vec<String>>,
    /// Response, length N.
    pub y: Vec<f64>,
    /// Covariates, N x p0.
    pub x: DMatrix<f64>,
    /// Unique names for the p0 covariate columns.
    pub feature_names: Vec<String>,
}

impl TimeSeriesDataset {
    pub fn new(
        timestamps: Option<Vec<String>>,
        y: Vec<f64>,
        x: DMatrix<f64>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch {
                expected: y.len(),
                got: x.nrows(),
            });
        }
        if let Some(ts) = &timestamps {
            if ts.len() != y.len() {
                return Err(Error::LengthMismatch {
                    expected: y.len(),
                    got: ts.len(),
                });
            }
        }
        if feature_names.len() != x.ncols() {
            return Err(Error::LengthMismatch {
                expected: x.ncols(),
                got: feature_names.len(),
            });
        }
        for (i, a) in feature_names.iter().enumerate() {
            if feature_names[i + 1..].contains(a) {
                return Err(Error::InvalidConfig {
                    reason: format!("duplicate feature name {a:?}"),
                });
            }
        }
        Ok(Self {
            timestamps,
            y,
            x,
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
}

/// Per-column centering and scaling statistics; `scale` maps a centered
/// column to squared-norm n.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingParams {
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_mean: f64,
    pub y_scale: f64,
}

/// Which column of the lag-expanded design a coefficient belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnLabel {
    pub feature: String,
    pub lag: usize,
}

impl ColumnLabel {
    pub fn display(&self) -> String {
        if self.lag == 0 {
            self.feature.clone()
        } else {
            format!("{}_lag{}", self.feature, self.lag)
        }
    }
}

/// Response and lag-expanded design, optionally standardized.
#[derive(Debug, Clone)]
pub struct LaggedRegressionProblem {
    /// Response, length n = N - r.
    pub y: DVector<f64>,
    /// Lag-expanded design, n x p.
    pub x: DMatrix<f64>,
    /// (feature, lag) label per column.
    pub column_labels: Vec<ColumnLabel>,
    /// Present once `standardized` has been applied.
    pub scaling: Option<ScalingParams>,
    /// Covariate lag count used to build the design.
    pub r: usize,
    /// Row timestamps carried over from the dataset (aligned to `y`).
    pub timestamps: Option<Vec<String>>,
}

/// Pointwise response transformation applied before modeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResponseTransform {
    #[default]
    Identity,
    /// y' = log(-y + 1); requires y <= 0.
    LogNeg,
}

/// Fill interior gaps by linear interpolation between the nearest present
/// neighbors. Leading or trailing gaps are an error; no extrapolation.
pub fn interpolate_missing(series: &[Option<f64>]) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Ok(Vec::new());
    }
    if series[0].is_none() {
        return Err(Error::GapAtBoundary { index: 0 });
    }
    if series[series.len() - 1].is_none() {
        return Err(Error::GapAtBoundary {
            index: series.len() - 1,
        });
    }
    let mut out = Vec::with_capacity(series.len());
    let mut i = 0;
    while i < series.len() {
        match series[i] {
            Some(v) => {
                out.push(v);
                i += 1;
            }
            None => {
                // series[i-1] is present; find the next present entry.
                let start = i - 1;
                let mut end = i;
                while series[end].is_none() {
                    end += 1;
                }
                let left = out[start];
                let right = series[end].unwrap();
                let span = (end - start) as f64;
                for k in i..end {
                    let t = (k - start) as f64 / span;
                    out.push(left + t * (right - left));
                }
                i = end;
            }
        }
    }
    Ok(out)
}

/// Lag-expand the covariates of `ds` with `r` lags.
///
/// With `include_contemporaneous` the lag window is {0, 1, ..., r-1}
/// (current-day values included); without it the window is {1, ..., r}.
/// Either way the first r rows, which lack a full lag window, are dropped,
/// so the problem has n = N - r rows. The degenerate case r = 0 with the
/// flag set returns the design unchanged.
pub fn build_lagged_design(
    ds: &TimeSeriesDataset,
    r: usize,
    include_contemporaneous: bool,
) -> Result<LaggedRegressionProblem> {
    let n_total = ds.n();
    if r >= n_total {
        return Err(Error::LagTooLarge { lag: r, n: n_total });
    }
    let lags: Vec<usize> = if include_contemporaneous {
        if r == 0 {
            alloc::vec![0]
        } else {
            (0..r).collect()
        }
    } else {
        (1..=r).collect()
    };
    let p0 = ds.x.ncols();
    let n = n_total - r;
    let p = p0 * lags.len();
    let mut x = DMatrix::zeros(n, p);
    let mut labels = Vec::with_capacity(p);
    for (li, &lag) in lags.iter().enumerate() {
        for j in 0..p0 {
            let col = li * p0 + j;
            labels.push(ColumnLabel {
                feature: ds.feature_names[j].clone(),
                lag,
            });
            for row in 0..n {
                x[(row, col)] = ds.x[(row + r - lag, j)];
            }
        }
    }
    let y = DVector::from_iterator(n, ds.y[r..].iter().copied());
    let timestamps = ds.timestamps.as_ref().map(|ts| ts[r..].to_vec());
    Ok(LaggedRegressionProblem {
        y,
        x,
        column_labels: labels,
        scaling: None,
        r,
        timestamps,
    })
}

fn column_stats(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let ss = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    // scale s such that (x - mean)/s has squared norm n
    (mean, (ss / n).sqrt())
}

impl LaggedRegressionProblem {
    /// Center and scale every column of X and y so each sums to 0 and has
    /// squared norm n. Errors on a constant column, naming it.
    pub fn standardized(&self) -> Result<(Self, ScalingParams)> {
        let n = self.y.len();
        let p = self.x.ncols();
        let mut x = self.x.clone();
        let mut x_mean = Vec::with_capacity(p);
        let mut x_scale = Vec::with_capacity(p);
        for j in 0..p {
            let col: Vec<f64> = (0..n).map(|i| x[(i, j)]).collect();
            let (mean, scale) = column_stats(&col);
            if scale <= 0.0 || !scale.is_finite() {
                return Err(Error::ConstantColumn {
                    name: self.column_labels[j].display(),
                });
            }
            for i in 0..n {
                x[(i, j)] = (x[(i, j)] - mean) / scale;
            }
            x_mean.push(mean);
            x_scale.push(scale);
        }
        let ycol: Vec<f64> = self.y.iter().copied().collect();
        let (y_mean, y_scale) = column_stats(&ycol);
        if y_scale <= 0.0 || !y_scale.is_finite() {
            return Err(Error::ConstantColumn {
                name: String::from("response"),
            });
        }
        let y = DVector::from_iterator(n, ycol.iter().map(|v| (v - y_mean) / y_scale));
        let scaling = ScalingParams {
            x_mean,
            x_scale,
            y_mean,
            y_scale,
        };
        Ok((
            Self {
                y,
                x,
                column_labels: self.column_labels.clone(),
                scaling: Some(scaling.clone()),
                r: self.r,
                timestamps: self.timestamps.clone(),
            },
            scaling,
        ))
    }
}

impl ScalingParams {
    /// Standardize a raw covariate row with these (frozen) statistics.
    pub fn apply_to_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.x_mean.iter().zip(&self.x_scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn destandardize_y(&self, y_std: f64) -> f64 {
        y_std * self.y_scale + self.y_mean
    }

    pub fn standardize_y(&self, y_raw: f64) -> f64 {
        (y_raw - self.y_mean) / self.y_scale
    }

    /// Map a coefficient on the standardized scale back to the raw scale.
    pub fn destandardize_coefficient(&self, j: usize, beta_std: f64) -> f64 {
        beta_std * self.y_scale / self.x_scale[j]
    }
}

/// Apply a response transformation elementwise.
pub fn transform_response(y: &[f64], kind: ResponseTransform) -> Result<Vec<f64>> {
    match kind {
        ResponseTransform::Identity => Ok(y.to_vec()),
        ResponseTransform::LogNeg => {
            let bad: Vec<usize> = y
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(|(i, _)| i)
                .collect();
            if !bad.is_empty() {
                return Err(Error::PositiveUnderLogNeg { indices: bad });
            }
            Ok(y.iter().map(|&v| (-v + 1.0).ln()).collect())
        }
    }
}

/// Invert [`transform_response`].
pub fn inverse_transform(y_t: &[f64], kind: ResponseTransform) -> Vec<f64> {
    match kind {
        ResponseTransform::Identity => y_t.to_vec(),
        ResponseTransform::LogNeg => y_t.iter().map(|&v| -(v.exp() - 1.0)).collect(),
    }
}
