//! Two-stage estimation: Stage 1 selects covariate columns by spike-and-slab
//! regression; Stage 2 selects error lags by regressing the Stage-1
//! residuals on their own lags. Thresholding the posterior inclusion
//! probabilities yields the active sets and point estimates.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::armodel::{build_a_matrix, build_residual_lag_matrix, ArCoefficients};
use crate::data::LaggedRegressionProblem;
use crate::error::{Error, Result};
use crate::posterior::ScreenConfig;
use crate::sampler::{gibbs_spike_slab, summarize, GibbsConfig, PosteriorSummary};

/// Optional knobs for the two-stage fit. Defaults follow the procedure as
/// published: inclusion thresholds 1/p and 1/q, no refinement pass.
#[derive(Debug, Clone, Default)]
pub struct TwoStageOptions {
    /// Stage-1 inclusion threshold; default 1/p.
    pub beta_threshold: Option<f64>,
    /// Stage-2 inclusion threshold; default 1/q.
    pub phi_threshold: Option<f64>,
    /// Single refinement pass: whiten by A(phi_hat) and rerun Stage 1.
    pub refine: bool,
}

/// Joint output of both stages.
#[derive(Debug, Clone)]
pub struct TwoStageFit {
    /// Selected covariate-column indices T^beta.
    pub t_beta: Vec<usize>,
    /// Selected error-lag indices (0-based: l means lag l+1) T^phi.
    pub t_phi: Vec<usize>,
    /// Length-p point estimate, 0 outside `t_beta`.
    pub beta_hat: Vec<f64>,
    /// Error-lag estimate, 0 outside `t_phi`.
    pub phi_hat: ArCoefficients,
    /// In-sample residuals y - X beta_hat.
    pub residuals: Vec<f64>,
    pub stage1: PosteriorSummary,
    pub stage2: PosteriorSummary,
}

/// Stage-1 output bundle.
#[derive(Debug, Clone)]
pub struct Stage1Fit {
    pub summary: PosteriorSummary,
    pub t_beta: Vec<usize>,
    pub beta_hat: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Stage-2 output bundle.
#[derive(Debug, Clone)]
pub struct Stage2Fit {
    pub summary: PosteriorSummary,
    pub t_phi: Vec<usize>,
    pub phi_hat: ArCoefficients,
}

fn threshold_select(incl_prob: &[f64], threshold: f64) -> Vec<usize> {
    incl_prob
        .iter()
        .enumerate()
        .filter(|(_, &pr)| pr > threshold)
        .map(|(j, _)| j)
        .collect()
}

fn residuals_of(y: &DVector<f64>, x: &DMatrix<f64>, beta_hat: &[f64]) -> Vec<f64> {
    let beta = DVector::from_column_slice(beta_hat);
    let fitted = x * beta;
    y.iter().zip(fitted.iter()).map(|(a, f)| a - f).collect()
}

/// Stage 1: spike-and-slab regression of y on the lag-expanded design.
/// Selects columns with inclusion probability above the threshold (default
/// 1/p) and sets their estimates to the conditional-on-inclusion posterior
/// mean.
pub fn fit_stage1(
    problem: &LaggedRegressionProblem,
    cfg: &GibbsConfig,
    threshold: Option<f64>,
) -> Result<Stage1Fit> {
    let p = problem.x.ncols();
    let thr = threshold.unwrap_or(1.0 / p as f64);
    let draws = gibbs_spike_slab(&problem.y, &problem.x, cfg)?;
    let summary = summarize(&draws)?;
    let t_beta = threshold_select(&summary.incl_prob, thr);
    let mut beta_hat = vec![0.0f64; p];
    for &j in &t_beta {
        beta_hat[j] = summary.beta_mean_given_incl[j];
    }
    let residuals = residuals_of(&problem.y, &problem.x, &beta_hat);
    Ok(Stage1Fit {
        summary,
        t_beta,
        beta_hat,
        residuals,
    })
}

/// Stage 2: spike-and-slab regression of the residuals on their own lag
/// matrix E. Columns (and the response) are rescaled to squared norm n
/// without centering; estimates are mapped back to the residual scale.
pub fn fit_stage2(residuals: &[f64], q: usize, cfg: &GibbsConfig) -> Result<Stage2Fit> {
    fit_stage2_with_threshold(residuals, q, cfg, None)
}

pub fn fit_stage2_with_threshold(
    residuals: &[f64],
    q: usize,
    cfg: &GibbsConfig,
    threshold: Option<f64>,
) -> Result<Stage2Fit> {
    let n = residuals.len();
    if q == 0 {
        let sigma_sq_mean = residuals.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64;
        return Ok(Stage2Fit {
            summary: PosteriorSummary {
                incl_prob: Vec::new(),
                beta_mean: Vec::new(),
                beta_mean_given_incl: Vec::new(),
                sigma_sq_mean,
            },
            t_phi: Vec::new(),
            phi_hat: ArCoefficients::default(),
        });
    }
    if q >= n {
        return Err(Error::LagTooLarge { lag: q, n });
    }
    let thr = threshold.unwrap_or(1.0 / q as f64);
    let e = build_residual_lag_matrix(residuals, q)?;

    // scale-only standardization: AR structure has no intercept, so the
    // columns are not centered
    let nf = n as f64;
    let s_resid = (residuals.iter().map(|v| v * v).sum::<f64>() / nf).sqrt();
    if s_resid <= 0.0 {
        return Err(Error::ConstantColumn {
            name: alloc::string::String::from("residuals"),
        });
    }
    let y_std = DVector::from_iterator(n, residuals.iter().map(|v| v / s_resid));
    let mut e_std = e.clone();
    let mut col_scale = vec![0.0f64; q];
    for l in 0..q {
        let ss = e.column(l).norm_squared();
        if ss <= 0.0 {
            return Err(Error::ConstantColumn {
                name: alloc::format!("residual_lag{}", l + 1),
            });
        }
        let s = (ss / nf).sqrt();
        col_scale[l] = s;
        for i in 0..n {
            e_std[(i, l)] /= s;
        }
    }

    // Stage 2 sizes its own priors for q columns; the chain gets its own
    // seed so the two stages draw from unrelated streams.
    let mut stage_cfg = cfg.clone();
    stage_cfg.screen = ScreenConfig::default_for(n, q);
    stage_cfg.screen.a = cfg.screen.a;
    stage_cfg.screen.b = cfg.screen.b;
    stage_cfg.seed = cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15);

    let draws = gibbs_spike_slab(&y_std, &e_std, &stage_cfg)?;
    let summary = summarize(&draws)?;
    let t_phi = threshold_select(&summary.incl_prob, thr);
    let mut phi = vec![0.0f64; q];
    for &l in &t_phi {
        phi[l] = summary.beta_mean_given_incl[l] * s_resid / col_scale[l];
    }
    Ok(Stage2Fit {
        summary,
        t_phi,
        phi_hat: ArCoefficients::new(phi),
    })
}

/// Run Stage 1 then Stage 2. Errors if the estimated error-lag polynomial
/// is non-stationary; reduce q or tighten the spike prior in that case.
pub fn fit_two_stage(
    problem: &LaggedRegressionProblem,
    q: usize,
    cfg: &GibbsConfig,
    opts: &TwoStageOptions,
) -> Result<TwoStageFit> {
    let mut stage1 = fit_stage1(problem, cfg, opts.beta_threshold)?;
    let mut stage2 =
        fit_stage2_with_threshold(&stage1.residuals, q, cfg, opts.phi_threshold)?;
    if !stage2.phi_hat.is_stationary() {
        return Err(Error::NonStationaryEstimate);
    }

    if opts.refine && !stage2.phi_hat.phi.is_empty() {
        // one GLS pass: whiten response and design by A(phi_hat), reselect
        let a = build_a_matrix(&stage2.phi_hat, problem.x.nrows());
        let y_w = DVector::from_vec(a.whiten(problem.y.as_slice())?);
        let x_w = a.whiten_matrix(&problem.x)?;
        let whitened = LaggedRegressionProblem {
            y: y_w,
            x: x_w,
            column_labels: problem.column_labels.clone(),
            scaling: problem.scaling.clone(),
            r: problem.r,
            timestamps: problem.timestamps.clone(),
        };
        let refined = fit_stage1(&whitened, cfg, opts.beta_threshold)?;
        // residuals are always reported on the unwhitened data
        stage1 = Stage1Fit {
            residuals: residuals_of(&problem.y, &problem.x, &refined.beta_hat),
            ..refined
        };
        stage2 = fit_stage2_with_threshold(&stage1.residuals, q, cfg, opts.phi_threshold)?;
        if !stage2.phi_hat.is_stationary() {
            return Err(Error::NonStationaryEstimate);
        }
    }

    Ok(TwoStageFit {
        t_beta: stage1.t_beta,
        t_phi: stage2.t_phi,
        beta_hat: stage1.beta_hat,
        phi_hat: stage2.phi_hat,
        residuals: stage1.residuals,
        stage1: stage1.summary,
        stage2: stage2.summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::armodel::simulate_ar_errors;
    use crate::data::{build_lagged_design, TimeSeriesDataset};
    use crate::rng::stream_rng;
    use alloc::format;
    use alloc::string::String;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_dataset(n: usize, p: usize, seed: u64) -> TimeSeriesDataset {
        let mut rng = stream_rng(seed, 0);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = vec![0.0; n];
        let names: Vec<String> = (0..p).map(|j| format!("x{}", j + 1)).collect();
        TimeSeriesDataset::new(None, y, x, names).unwrap()
    }

    fn standardized_problem(
        ds: &TimeSeriesDataset,
    ) -> (LaggedRegressionProblem, crate::data::ScalingParams) {
        let problem = build_lagged_design(ds, 0, true).unwrap();
        problem.standardized().unwrap()
    }

    #[test]
    fn noiseless_recovery_includes_true_support() {
        let n = 150;
        let p = 15;
        let mut ds = gaussian_dataset(n, p, 1);
        let beta_star = [3.0, -3.0, 1.0, -1.0, 0.5];
        for i in 0..n {
            let mut v = 0.0;
            for (j, b) in beta_star.iter().enumerate() {
                v += b * ds.x[(i, j)];
            }
            ds.y[i] = v;
        }
        let (problem, _) = standardized_problem(&ds);
        let cfg = GibbsConfig::default_for(n, p, 7);
        let fit = fit_stage1(&problem, &cfg, None).unwrap();
        for j in 0..5 {
            assert!(fit.t_beta.contains(&j), "missing true column {j}");
        }
        let max_resid = fit.residuals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max_resid < 0.1, "residual {max_resid}");
    }

    #[test]
    fn pure_noise_selects_little() {
        let n = 300;
        let p = 30;
        let mut sizes: Vec<usize> = (0..20u64)
            .map(|seed| {
                let mut ds = gaussian_dataset(n, p, 100 + seed);
                let mut rng = stream_rng(200 + seed, 0);
                for v in ds.y.iter_mut() {
                    *v = rng.sample::<f64, _>(StandardNormal);
                }
                let (problem, _) = standardized_problem(&ds);
                let cfg = GibbsConfig::default_for(n, p, 300 + seed);
                fit_stage1(&problem, &cfg, None).unwrap().t_beta.len()
            })
            .collect();
        sizes.sort_unstable();
        let median = sizes[sizes.len() / 2];
        assert!(median <= 2, "median |t_beta| = {median}, sizes {sizes:?}");
    }

    #[test]
    fn residual_identity_is_exact() {
        let n = 80;
        let p = 6;
        let mut ds = gaussian_dataset(n, p, 9);
        let mut rng = stream_rng(10, 0);
        for i in 0..n {
            ds.y[i] = 2.0 * ds.x[(i, 0)] + rng.sample::<f64, _>(StandardNormal);
        }
        let (problem, _) = standardized_problem(&ds);
        let cfg = GibbsConfig::default_for(n, p, 11);
        let fit = fit_stage1(&problem, &cfg, None).unwrap();
        let beta = DVector::from_column_slice(&fit.beta_hat);
        let expect = &problem.y - &problem.x * beta;
        for (a, b) in fit.residuals.iter().zip(expect.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn white_noise_residuals_select_no_lags() {
        let n = 300;
        let q = 8;
        let mut empty = 0;
        for seed in 0..20u64 {
            let mut rng = stream_rng(400 + seed, 0);
            let resid: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let cfg = GibbsConfig::default_for(n, q, 500 + seed);
            let fit = fit_stage2(&resid, q, &cfg).unwrap();
            if fit.t_phi.is_empty() {
                empty += 1;
            }
        }
        assert!(empty >= 10, "only {empty}/20 runs selected no lags");
    }

    #[test]
    fn ar_residuals_recover_true_lags() {
        let n = 500;
        let q = 10;
        let phi_star = ArCoefficients::new(vec![0.9, -0.9, 0.5, -0.5]);
        let resid = simulate_ar_errors(&phi_star, 1.0, n, 77, 200).unwrap();
        let cfg = GibbsConfig::default_for(n, q, 78);
        let fit = fit_stage2(&resid, q, &cfg).unwrap();
        for l in 0..4 {
            assert!(fit.t_phi.contains(&l), "missing lag {}", l + 1);
            assert_abs_diff_eq!(fit.phi_hat.phi[l], phi_star.phi[l], epsilon = 0.25);
        }
        let false_lags = fit.t_phi.iter().filter(|&&l| l >= 4).count();
        assert!(false_lags <= 1, "{false_lags} spurious lags");
    }

    #[test]
    fn stage2_q_zero_is_empty() {
        let resid = [0.3, -0.2, 0.5, 0.1];
        let cfg = GibbsConfig::default_for(4, 1, 0);
        let fit = fit_stage2(&resid, 0, &cfg).unwrap();
        assert!(fit.t_phi.is_empty());
        assert!(fit.phi_hat.phi.is_empty());
        assert!(fit.summary.incl_prob.is_empty());
    }

    #[test]
    fn stage2_rejects_q_at_least_n() {
        let resid = [0.3, -0.2, 0.5];
        let cfg = GibbsConfig::default_for(3, 3, 0);
        assert!(matches!(
            fit_stage2(&resid, 3, &cfg),
            Err(Error::LagTooLarge { .. })
        ));
    }

    #[test]
    fn two_stage_on_ar_process() {
        let n = 400;
        let p = 10;
        let q = 6;
        let mut ds = gaussian_dataset(n, p, 21);
        let eps = simulate_ar_errors(&ArCoefficients::new(vec![0.6]), 1.0, n, 22, 200).unwrap();
        for i in 0..n {
            ds.y[i] = 3.0 * ds.x[(i, 0)] - 2.0 * ds.x[(i, 1)] + eps[i];
        }
        let (problem, _) = standardized_problem(&ds);
        let cfg = GibbsConfig::default_for(n, p, 23);
        let fit = fit_two_stage(&problem, q, &cfg, &TwoStageOptions::default()).unwrap();
        assert!(fit.t_beta.contains(&0));
        assert!(fit.t_beta.contains(&1));
        assert!(fit.t_phi.contains(&0), "lag 1 not selected: {:?}", fit.t_phi);
        assert_abs_diff_eq!(fit.phi_hat.phi[0], 0.6, epsilon = 0.2);
        assert!(fit.phi_hat.is_stationary());
        // support invariants
        for (j, &b) in fit.beta_hat.iter().enumerate() {
            assert_eq!(b != 0.0, fit.t_beta.contains(&j));
        }
    }

    #[test]
    fn white_noise_process_gives_empty_t_phi() {
        let n = 300;
        let p = 8;
        let mut ds = gaussian_dataset(n, p, 31);
        let mut rng = stream_rng(32, 0);
        for i in 0..n {
            ds.y[i] = 2.0 * ds.x[(i, 0)] + rng.sample::<f64, _>(StandardNormal);
        }
        let (problem, _) = standardized_problem(&ds);
        let cfg = GibbsConfig::default_for(n, p, 33);
        let fit = fit_two_stage(&problem, 5, &cfg, &TwoStageOptions::default()).unwrap();
        assert!(fit.t_phi.len() <= 1, "t_phi = {:?}", fit.t_phi);
    }

    #[test]
    fn explosive_residuals_error_out() {
        // residuals growing geometrically estimate phi_1 > 1
        let n = 200;
        let resid: Vec<f64> = (0..n).map(|t| 1.02f64.powi(t as i32)).collect();
        let cfg = GibbsConfig::default_for(n, 1, 41);
        let mut ds = gaussian_dataset(n, 2, 42);
        ds.y = resid;
        let (problem, _) = standardized_problem(&ds);
        // q = 1 makes the default 1/q threshold degenerate; set it explicitly
        let opts = TwoStageOptions {
            phi_threshold: Some(0.5),
            ..TwoStageOptions::default()
        };
        assert!(matches!(
            fit_two_stage(&problem, 1, &cfg, &opts),
            Err(Error::NonStationaryEstimate)
        ));
    }

    #[test]
    fn raising_threshold_shrinks_selection() {
        let n = 200;
        let p = 12;
        let mut ds = gaussian_dataset(n, p, 51);
        let mut rng = stream_rng(52, 0);
        for i in 0..n {
            ds.y[i] = 2.0 * ds.x[(i, 0)] + 0.7 * ds.x[(i, 1)]
                + rng.sample::<f64, _>(StandardNormal);
        }
        let (problem, _) = standardized_problem(&ds);
        let cfg = GibbsConfig::default_for(n, p, 53);
        let mut last: Option<Vec<usize>> = None;
        for thr in [0.05, 0.2, 0.5, 0.9] {
            let fit = fit_stage1(&problem, &cfg, Some(thr)).unwrap();
            if let Some(prev) = &last {
                assert!(fit.t_beta.iter().all(|j| prev.contains(j)));
            }
            last = Some(fit.t_beta);
        }
    }

    #[test]
    fn same_seed_same_selection() {
        let n = 150;
        let p = 8;
        let mut ds = gaussian_dataset(n, p, 61);
        let mut rng = stream_rng(62, 0);
        for i in 0..n {
            ds.y[i] = ds.x[(i, 2)] + rng.sample::<f64, _>(StandardNormal);
        }
        let (problem, _) = standardized_problem(&ds);
        let cfg = GibbsConfig::default_for(n, p, 63);
        let a = fit_two_stage(&problem, 3, &cfg, &TwoStageOptions::default()).unwrap();
        let b = fit_two_stage(&problem, 3, &cfg, &TwoStageOptions::default()).unwrap();
        assert_eq!(a.t_beta, b.t_beta);
        assert_eq!(a.t_phi, b.t_phi);
        assert_eq!(a.beta_hat, b.beta_hat);
        assert_eq!(a.phi_hat, b.phi_hat);
    }

    #[test]
    fn refinement_pass_keeps_contracts() {
        let n = 300;
        let p = 8;
        let mut ds = gaussian_dataset(n, p, 71);
        let eps = simulate_ar_errors(&ArCoefficients::new(vec![0.7]), 1.0, n, 72, 200).unwrap();
        for i in 0..n {
            ds.y[i] = 3.0 * ds.x[(i, 0)] + eps[i];
        }
        let (problem, _) = standardized_problem(&ds);
        let cfg = GibbsConfig::default_for(n, p, 73);
        let opts = TwoStageOptions {
            refine: true,
            ..TwoStageOptions::default()
        };
        let fit = fit_two_stage(&problem, 4, &cfg, &opts).unwrap();
        assert!(fit.t_beta.contains(&0));
        // residual identity must hold on the unwhitened data
        let beta = DVector::from_column_slice(&fit.beta_hat);
        let expect = &problem.y - &problem.x * beta;
        for (a, b) in fit.residuals.iter().zip(expect.iter()) {
            assert_eq!(a, b);
        }
    }
}
