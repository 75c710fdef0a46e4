//! Closed-form per-coefficient spike-and-slab posterior conditional on the
//! error-lag coefficients.
//!
//! Integrating the nuisance coefficients (ridge prior) and sigma^2
//! (inverse-gamma prior) out of the whitened likelihood leaves, for each
//! column j, a two-component mixture of non-standardized Student-t
//! densities. Everything is driven by three quadratic forms in the
//! shrinkage matrix M = A'(I - W(W'W + tau^-2 I)^-1 W')A with W = A X_{-j}:
//! s = x_j' M x_j, c = x_j' M y and y' M y. The mixture weights F_kj are
//! evaluated in log space; the textbook expression underflows for n in the
//! hundreds.

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::armodel::{build_a_matrix, check_stationarity, ArCoefficients};
use crate::error::{Error, Result};

/// Hyperparameters of the analytic screening path.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenConfig {
    /// Spike prior variance (tau_0n^beta)^2.
    pub tau0_sq: f64,
    /// Slab prior variance (tau_1n^beta)^2.
    pub tau1_sq: f64,
    /// Ridge variance tau_n^2 for the nuisance coefficients.
    pub tau_ridge_sq: f64,
    /// Prior inclusion probability q_jn^beta.
    pub q_incl: f64,
    /// Inverse-gamma shape for sigma^2.
    pub a: f64,
    /// Inverse-gamma rate for sigma^2.
    pub b: f64,
}

impl ScreenConfig {
    /// Defaults satisfying the rate conditions for selection consistency:
    /// tau0^2 = 1/(n p), tau1^2 = 1, tau_ridge^2 = 1/n, q = 1/p, a = b = 1.
    pub fn default_for(n: usize, p: usize) -> Self {
        let n = n.max(1) as f64;
        let p = p.max(1) as f64;
        Self {
            tau0_sq: 1.0 / (n * p),
            tau1_sq: 1.0,
            tau_ridge_sq: 1.0 / n,
            // 1/p, clamped so the degenerate p = 1 case keeps a proper prior
            q_incl: (1.0 / p).min(0.5),
            a: 1.0,
            b: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.tau0_sq > 0.0
            && self.tau1_sq > self.tau0_sq
            && self.tau_ridge_sq > 0.0
            && self.q_incl > 0.0
            && self.q_incl < 1.0
            && self.a > 0.0
            && self.b > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig {
                reason: alloc::string::String::from(
                    "need 0 < tau0^2 < tau1^2, tau_ridge^2 > 0, 0 < q_incl < 1, a > 0, b > 0",
                ),
            })
        }
    }

    /// Same scales with spike and slab collapsed to one component
    /// (tau0 = tau1); only meaningful in degenerate tests.
    pub fn with_equal_scales(mut self, tau_sq: f64) -> Self {
        self.tau0_sq = tau_sq;
        self.tau1_sq = tau_sq;
        self
    }
}

/// Analytic posterior summary for one coefficient.
#[derive(Debug, Clone)]
pub struct CoefficientPosterior {
    pub j: usize,
    /// Spike / slab posterior centers mu_0j, mu_1j.
    pub mu0: f64,
    pub mu1: f64,
    /// sigma^2-free factors 1/(s + tau_k^-2) of the xi_kj^2 variances.
    pub xi0_sq_scale: f64,
    pub xi1_sq_scale: f64,
    /// Student-t scale parameters psi_kj.
    pub psi0: f64,
    pub psi1: f64,
    /// Log mixture weights log F_kj.
    pub log_f0: f64,
    pub log_f1: f64,
    /// Pr(Z_j = 1 | y).
    pub incl_prob: f64,
    /// Likelihood maximizer x_j'My / x_j'Mx_j.
    pub beta_hat: f64,
    /// Student-t degrees of freedom nu = n + 2a.
    pub dof: f64,
}

/// The shrinkage matrix (I - H_j) = A'(I - W(W'W + tau^-2 I)^-1 W')A for
/// nuisance columns `x_minus_j`, computed through the p x p inner inverse.
pub fn shrinkage_matrix(
    x_minus_j: &DMatrix<f64>,
    phi: &ArCoefficients,
    tau_ridge_sq: f64,
) -> Result<DMatrix<f64>> {
    let report = check_stationarity(&phi.phi);
    if !report.stationary {
        let modulus = report.root_moduli.first().copied().unwrap_or(0.0);
        return Err(Error::NonStationary { modulus });
    }
    let n = x_minus_j.nrows();
    let a = build_a_matrix(phi, n);
    let a_dense = a.to_dense();
    let p = x_minus_j.ncols();
    let inner = if p == 0 {
        DMatrix::identity(n, n)
    } else {
        let w = a.whiten_matrix(x_minus_j)?;
        let mut gram = w.transpose() * &w;
        for i in 0..p {
            gram[(i, i)] += 1.0 / tau_ridge_sq;
        }
        let gram_inv = gram.try_inverse().ok_or(Error::NonFinite {
            context: "shrinkage inner inverse",
        })?;
        DMatrix::identity(n, n) - &w * gram_inv * w.transpose()
    };
    let m = a_dense.transpose() * inner * a_dense;
    // enforce exact symmetry; the product is symmetric up to rounding
    Ok((&m + m.transpose()) * 0.5)
}

/// The likelihood maximizer beta_hat_j = x_j'My / x_j'Mx_j.
pub fn beta_hat(x_j: &DVector<f64>, m: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let mx = m * x_j;
    let denom = x_j.dot(&mx);
    if denom.abs() < 1e-12 {
        return Err(Error::DegenerateDenominator { value: denom });
    }
    Ok(y.dot(&mx) / denom)
}

/// Full analytic posterior for column j of the standardized design.
pub fn coefficient_posterior(
    j: usize,
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    phi: &ArCoefficients,
    cfg: &ScreenConfig,
) -> Result<CoefficientPosterior> {
    let n = x.nrows();
    let x_minus_j = x.clone().remove_column(j);
    let m = shrinkage_matrix(&x_minus_j, phi, cfg.tau_ridge_sq)?;
    let x_j = x.column(j).into_owned();
    let mx = &m * &x_j;
    let s = x_j.dot(&mx);
    let c = y.dot(&mx);
    let ymy = y.dot(&(&m * y));

    let nu = n as f64 + 2.0 * cfg.a;
    let mut centers = [0.0f64; 2];
    let mut xi_scales = [0.0f64; 2];
    let mut psis = [0.0f64; 2];
    let mut log_fs = [0.0f64; 2];
    for (k, &tau_sq) in [cfg.tau0_sq, cfg.tau1_sq].iter().enumerate() {
        let prec = 1.0 / tau_sq;
        let denom = s + prec;
        let arg = cfg.b + 0.5 * ymy - 0.5 * c * c / denom;
        if arg <= 0.0 {
            return Err(Error::NegativeLogArgument { value: arg });
        }
        centers[k] = c / denom;
        xi_scales[k] = 1.0 / denom;
        psis[k] = arg / (nu * denom);
        log_fs[k] = 0.5 * (prec.ln() - denom.ln()) - (n as f64 / 2.0 + cfg.a) * arg.ln();
    }
    let incl_prob = inclusion_odds(log_fs[0], log_fs[1], cfg.q_incl);
    Ok(CoefficientPosterior {
        j,
        mu0: centers[0],
        mu1: centers[1],
        xi0_sq_scale: xi_scales[0],
        xi1_sq_scale: xi_scales[1],
        psi0: psis[0],
        psi1: psis[1],
        log_f0: log_fs[0],
        log_f1: log_fs[1],
        incl_prob,
        beta_hat: if s.abs() < 1e-12 { 0.0 } else { c / s },
        dof: nu,
    })
}

/// q F1 / (q F1 + (1-q) F0) evaluated stably from log weights.
pub fn inclusion_odds(log_f0: f64, log_f1: f64, q_incl: f64) -> f64 {
    if q_incl <= 0.0 {
        return 0.0;
    }
    if q_incl >= 1.0 {
        return 1.0;
    }
    let log_odds = q_incl.ln() - (1.0 - q_incl).ln() + log_f1 - log_f0;
    if log_odds >= 0.0 {
        1.0 / (1.0 + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (1.0 + e)
    }
}

/// Extreme eigenvalues of a symmetric matrix; rejects asymmetry beyond 1e-8.
pub fn eigen_diagnostic(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    let mut deviation = 0.0f64;
    for i in 0..m.nrows() {
        for k in (i + 1)..m.ncols() {
            deviation = deviation.max((m[(i, k)] - m[(k, i)]).abs());
        }
    }
    if deviation > 1e-8 {
        return Err(Error::Asymmetric { deviation });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eigen = sym.symmetric_eigen();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in eigen.eigenvalues.iter() {
        min = min.min(v);
        max = max.max(v);
    }
    Ok((min, max))
}
