//! Synthetic-data generation and the selection / prediction experiment
//! drivers.
//!
//! The generating process is y = X beta* + eps with i.i.d. standard-normal
//! covariate rows (optionally AR(1)-correlated across columns) and AR(q)
//! errors. Replicates derive their randomness from independent generator
//! streams, so the aggregate tables do not depend on evaluation order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::armodel::{simulate_ar_errors_with_rng, ArCoefficients};
use crate::data::{build_lagged_design, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::forecaster::{rolling_backtest, ForecastConfig, ForecastResult};
use crate::metrics::{confusion, mean_confusion, ConfusionCounts};
use crate::rng::stream_rng;
use crate::sampler::GibbsConfig;
use crate::twostage::{fit_two_stage, TwoStageOptions};

/// Relative magnitude threshold used when scoring estimates against the
/// known truth.
pub const CONFUSION_REL_THRESHOLD: f64 = 0.001;

/// A synthetic scenario: dimensions, true coefficients, noise level and
/// replication plan.
#[derive(Debug, Clone)]
pub struct SimScenario {
    pub n_obs: usize,
    pub p: usize,
    pub q: usize,
    pub beta_star: Vec<f64>,
    pub phi_star: Vec<f64>,
    pub sigma: f64,
    pub reps: usize,
    pub seed: u64,
    /// AR(1) correlation across covariate columns; 0 gives the identity
    /// covariance default.
    pub x_corr: f64,
}

/// The default sparse truth (3, -3, 1, -1, 0.5, 0, ...).
pub fn default_beta_star(p: usize) -> Vec<f64> {
    let mut b = vec![0.0; p];
    for (slot, v) in b.iter_mut().zip([3.0, -3.0, 1.0, -1.0, 0.5]) {
        *slot = v;
    }
    b
}

/// The default error-lag truth (0.9, -0.9, 0.5, -0.5, 0, ...).
pub fn default_phi_star(q: usize) -> Vec<f64> {
    let mut f = vec![0.0; q];
    for (slot, v) in f.iter_mut().zip([0.9, -0.9, 0.5, -0.5]) {
        *slot = v;
    }
    f
}

impl SimScenario {
    /// The benchmark regime: N=500, p=50, q=10 with the default truths.
    pub fn benchmark(sigma: f64, reps: usize, seed: u64) -> Self {
        Self {
            n_obs: 500,
            p: 50,
            q: 10,
            beta_star: default_beta_star(50),
            phi_star: default_phi_star(10),
            sigma,
            reps,
            seed,
            x_corr: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta_star.len() != self.p {
            return Err(Error::LengthMismatch {
                expected: self.p,
                got: self.beta_star.len(),
            });
        }
        if self.phi_star.len() > self.q {
            return Err(Error::LengthMismatch {
                expected: self.q,
                got: self.phi_star.len(),
            });
        }
        if !ArCoefficients::new(self.phi_star.clone()).is_stationary() {
            return Err(Error::NonStationary { modulus: 0.0 });
        }
        if self.n_obs == 0 || self.reps == 0 || self.sigma < 0.0 || self.x_corr.abs() >= 1.0 {
            return Err(Error::InvalidConfig {
                reason: String::from("need n_obs > 0, reps > 0, sigma >= 0, |x_corr| < 1"),
            });
        }
        Ok(())
    }
}

/// The truth used to score a replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTruth {
    pub beta_star: Vec<f64>,
    pub phi_star: Vec<f64>,
}

/// Per-replicate confusion rows.
#[derive(Debug, Clone, Copy)]
pub struct SelectionReplicate {
    pub beta: ConfusionCounts,
    pub phi: ConfusionCounts,
}

/// Mean (TP, FP, FN, TN, accuracy) rows over all replicates.
#[derive(Debug, Clone)]
pub struct SelectionTable {
    pub beta_row: [f64; 5],
    /// Absent when q = 0 (no error-lag stage).
    pub phi_row: Option<[f64; 5]>,
    pub replicates: Vec<SelectionReplicate>,
}

/// Generate one replicate dataset. Deterministic per (seed, rep_index);
/// each replicate draws from its own generator stream.
pub fn generate_synthetic(
    sc: &SimScenario,
    rep_index: usize,
) -> Result<(TimeSeriesDataset, SimTruth)> {
    sc.validate()?;
    let mut rng = stream_rng(sc.seed, rep_index as u64);
    let n = sc.n_obs;
    let p = sc.p;
    let mut x = DMatrix::zeros(n, p);
    let rho = sc.x_corr;
    let innov_scale = (1.0 - rho * rho).sqrt();
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            let v = if j == 0 || rho == 0.0 {
                z
            } else {
                rho * prev + innov_scale * z
            };
            x[(i, j)] = v;
            prev = v;
        }
    }
    let phi = ArCoefficients::new(sc.phi_star.clone());
    let eps = simulate_ar_errors_with_rng(&phi, sc.sigma, n, 200, &mut rng)?;
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let mut v = eps[i];
            for j in 0..p {
                v += x[(i, j)] * sc.beta_star[j];
            }
            v
        })
        .collect();
    let names: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    let ds = TimeSeriesDataset::new(None, y, x, names)?;
    Ok((
        ds,
        SimTruth {
            beta_star: sc.beta_star.clone(),
            phi_star: sc.phi_star.clone(),
        },
    ))
}

/// Fit one replicate on the full data (no rolling) and score both stages
/// against the truth. Exposed separately so drivers can parallelize across
/// replicates.
pub fn run_selection_replicate(
    sc: &SimScenario,
    rep_index: usize,
    iterations: usize,
    burn_in: usize,
) -> Result<SelectionReplicate> {
    let (ds, truth) = generate_synthetic(sc, rep_index)?;
    let problem = build_lagged_design(&ds, 0, true)?;
    let (std_problem, scaling) = problem.standardized()?;
    let cfg = GibbsConfig {
        iterations,
        burn_in,
        seed: sc.seed.wrapping_mul(0x100_0193).wrapping_add(rep_index as u64),
        screen: crate::posterior::ScreenConfig::default_for(sc.n_obs, sc.p),
    };
    let fit = fit_two_stage(&std_problem, sc.q, &cfg, &TwoStageOptions::default())?;

    // score beta on the original scale
    let beta_orig: Vec<f64> = (0..sc.p)
        .map(|j| scaling.destandardize_coefficient(j, fit.beta_hat[j]))
        .collect();
    let beta = confusion(&beta_orig, &truth.beta_star, CONFUSION_REL_THRESHOLD)?;
    // phi is scale-free: AR coefficients are invariant to rescaling y
    let phi = if sc.q > 0 {
        confusion(&fit.phi_hat.phi, &truth.phi_star, CONFUSION_REL_THRESHOLD)?
    } else {
        ConfusionCounts {
            tp: 0,
            fp: 0,
            fn_: 0,
            tn: 0,
        }
    };
    Ok(SelectionReplicate { beta, phi })
}

/// Run all replicates sequentially and average the confusion rows.
pub fn run_selection_experiment(
    sc: &SimScenario,
    iterations: usize,
    burn_in: usize,
) -> Result<SelectionTable> {
    sc.validate()?;
    let replicates: Result<Vec<SelectionReplicate>> = (0..sc.reps)
        .map(|rep| run_selection_replicate(sc, rep, iterations, burn_in))
        .collect();
    let replicates = replicates?;
    aggregate_selection(replicates, sc.q)
}

/// Average pre-computed replicate rows; used by parallel drivers.
pub fn aggregate_selection(
    replicates: Vec<SelectionReplicate>,
    q: usize,
) -> Result<SelectionTable> {
    let beta_rows: Vec<ConfusionCounts> = replicates.iter().map(|r| r.beta).collect();
    let beta_row = mean_confusion(&beta_rows).ok_or(Error::InvalidConfig {
        reason: String::from("no replicates to aggregate"),
    })?;
    let phi_row = if q > 0 {
        let rows: Vec<ConfusionCounts> = replicates.iter().map(|r| r.phi).collect();
        mean_confusion(&rows)
    } else {
        None
    };
    Ok(SelectionTable {
        beta_row,
        phi_row,
        replicates,
    })
}

/// Generate replicate 0 of the scenario, fit on the first `train_n`
/// observations and roll forward over the rest at horizon `h`.
pub fn run_prediction_experiment(
    sc: &SimScenario,
    train_n: usize,
    h: usize,
    refit_every: usize,
    iterations: usize,
    burn_in: usize,
    screen: Option<crate::posterior::ScreenConfig>,
) -> Result<ForecastResult> {
    let (ds, _) = generate_synthetic(sc, 0)?;
    let mut fc = ForecastConfig::default_for(h, 0, sc.q, sc.seed.wrapping_add(1));
    fc.initial_window = Some(train_n);
    fc.refit_every = refit_every;
    fc.iterations = iterations;
    fc.burn_in = burn_in;
    fc.screen = screen;
    rolling_backtest(&ds, &fc)
}
