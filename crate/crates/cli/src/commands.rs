//! The three subcommands: simulate, fit, backtest.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::json;

use ssarx_core::data::{build_lagged_design, transform_response, ResponseTransform};
use ssarx_core::forecaster::{rolling_backtest, ForecastConfig, ForecastResult};
use ssarx_core::metrics::prediction_metrics;
use ssarx_core::sampler::GibbsConfig;
use ssarx_core::simharness::{
    aggregate_selection, default_beta_star, default_phi_star, run_selection_replicate,
    SelectionReplicate, SimScenario,
};
use ssarx_core::twostage::{fit_two_stage, TwoStageFit, TwoStageOptions};
use ssarx_core::Error as CoreError;

use crate::csvio::{fmt6, load_dataset, round6};
use crate::errors::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::{BacktestArgs, FitArgs, SimulateArgs};

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs, threads: usize) -> CliResult<()> {
    let start = Instant::now();
    let sc = SimScenario {
        n_obs: args.n,
        p: args.p,
        q: args.q,
        beta_star: default_beta_star(args.p),
        phi_star: default_phi_star(args.q),
        sigma: args.sigma,
        reps: args.reps,
        seed: args.seed,
        x_corr: args.x_corr,
    };
    sc.validate()?;

    let replicates = run_replicates(&sc, args.iters, args.burn_in, threads)?;
    let table = aggregate_selection(replicates, sc.q)?;

    ensure_dir(&args.out_dir)?;
    write_selection_row(
        &args.out_dir.join("selection_beta.csv"),
        &sc,
        &table.beta_row,
    )?;
    if let Some(phi_row) = &table.phi_row {
        write_selection_row(&args.out_dir.join("selection_phi.csv"), &sc, phi_row)?;
    }

    let mut manifest = RunManifest::new(
        "simulate",
        args.seed,
        json!({
            "n": args.n, "p": args.p, "q": args.q, "sigma": args.sigma,
            "reps": args.reps, "seed": args.seed, "x_corr": args.x_corr,
            "iters": args.iters, "burn_in": args.burn_in,
        }),
    );
    manifest.timing_seconds = start.elapsed().as_secs_f64();
    manifest.write(&args.out_dir.join("manifest.json"))?;
    println!(
        "selection table written to {} ({} replicates)",
        args.out_dir.display(),
        sc.reps
    );
    Ok(())
}

fn run_replicates(
    sc: &SimScenario,
    iters: usize,
    burn_in: usize,
    threads: usize,
) -> CliResult<Vec<SelectionReplicate>> {
    let workers = threads.clamp(1, sc.reps);
    let mut indexed: Vec<(usize, Result<SelectionReplicate, CoreError>)> = if workers == 1 {
        (0..sc.reps)
            .map(|rep| (rep, run_selection_replicate(sc, rep, iters, burn_in)))
            .collect()
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let sc = &*sc;
                    scope.spawn(move || {
                        (w..sc.reps)
                            .step_by(workers)
                            .map(|rep| (rep, run_selection_replicate(sc, rep, iters, burn_in)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("worker panicked"))
                .collect()
        })
    };
    indexed.sort_by_key(|(rep, _)| *rep);
    indexed
        .into_iter()
        .map(|(_, r)| r.map_err(CliError::from))
        .collect()
}

fn write_selection_row(path: &Path, sc: &SimScenario, row: &[f64; 5]) -> CliResult<()> {
    let mut out = String::from("n,p,q,sigma,reps,tp,fp,fn,tn,accuracy\n");
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        sc.n_obs,
        sc.p,
        sc.q,
        fmt6(sc.sigma),
        sc.reps,
        fmt6(row[0]),
        fmt6(row[1]),
        fmt6(row[2]),
        fmt6(row[3]),
        fmt6(row[4]),
    ));
    fs::write(path, out)?;
    Ok(())
}

fn core_transform(t: crate::Transform) -> ResponseTransform {
    match t {
        crate::Transform::Identity => ResponseTransform::Identity,
        crate::Transform::LogNeg => ResponseTransform::LogNeg,
    }
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let start = Instant::now();
    let ds = load_dataset(&args.common.data, &args.common.target)?;
    let transform = core_transform(args.common.transform);
    let y_t = transform_response(&ds.y, transform)?;
    let ds_t = ssarx_core::data::TimeSeriesDataset {
        timestamps: ds.timestamps.clone(),
        y: y_t,
        x: ds.x.clone(),
        feature_names: ds.feature_names.clone(),
    };
    let problem = build_lagged_design(&ds_t, args.common.lags, !args.common.exclude_current)?;
    let (std_problem, scaling) = problem.standardized()?;
    let n = std_problem.y.len();
    let p = std_problem.x.ncols();
    let cfg = GibbsConfig {
        iterations: args.common.iters,
        burn_in: args.common.burn_in,
        seed: args.common.seed,
        screen: ssarx_core::posterior::ScreenConfig::default_for(n, p),
    };
    let fit = fit_two_stage(&std_problem, args.common.error_lags, &cfg, &TwoStageOptions::default())?;

    let report = fit_report(&fit, &std_problem, &scaling, args, n, p);
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    fs::write(
        &args.out,
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Data(e.to_string()))? + "\n",
    )?;

    let mut manifest = RunManifest::new(
        "fit",
        args.common.seed,
        json!({
            "data": args.common.data.display().to_string(),
            "target": args.common.target,
            "lags": args.common.lags,
            "error_lags": args.common.error_lags,
            "exclude_current": args.common.exclude_current,
            "transform": format!("{:?}", args.common.transform),
            "iters": args.common.iters,
            "burn_in": args.common.burn_in,
            "seed": args.common.seed,
        }),
    );
    manifest.digest_input(&args.common.data)?;
    manifest.timing_seconds = start.elapsed().as_secs_f64();
    manifest.write(&manifest_path(&args.out))?;
    println!("fit report written to {}", args.out.display());
    Ok(())
}

fn manifest_path(out: &Path) -> std::path::PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| String::from("out"));
    out.with_file_name(format!("{stem}.manifest.json"))
}

fn fit_report(
    fit: &TwoStageFit,
    problem: &ssarx_core::data::LaggedRegressionProblem,
    scaling: &ssarx_core::data::ScalingParams,
    args: &FitArgs,
    n: usize,
    p: usize,
) -> serde_json::Value {
    let mut columns = Vec::with_capacity(p);
    let mut intercept = scaling.y_mean;
    for j in 0..p {
        let coef = scaling.destandardize_coefficient(j, fit.beta_hat[j]);
        intercept -= coef * scaling.x_mean[j];
        columns.push(json!({
            "column": problem.column_labels[j].display(),
            "inclusion_probability": round6(fit.stage1.incl_prob[j]),
            "coefficient": round6(coef),
            "selected": fit.t_beta.contains(&j),
        }));
    }
    let error_lags: Vec<serde_json::Value> = (0..fit.stage2.incl_prob.len())
        .map(|l| {
            json!({
                "lag": l + 1,
                "inclusion_probability": round6(fit.stage2.incl_prob[l]),
                "phi": round6(fit.phi_hat.phi.get(l).copied().unwrap_or(0.0)),
                "selected": fit.t_phi.contains(&l),
            })
        })
        .collect();
    let resid_sd = {
        let nf = fit.residuals.len().max(1) as f64;
        (fit.residuals.iter().map(|v| v * v).sum::<f64>() / nf).sqrt() * scaling.y_scale
    };
    json!({
        "target": args.common.target,
        "rows_used": n,
        "design_columns": p,
        "lags": args.common.lags,
        "error_lags_max": args.common.error_lags,
        "transform": format!("{:?}", args.common.transform),
        "intercept": round6(intercept),
        "columns": columns,
        "error_lags": error_lags,
        "residual_sd": round6(resid_sd),
        "sigma_sq_mean_standardized": round6(fit.stage1.sigma_sq_mean),
    })
}

pub fn cmd_backtest(args: &BacktestArgs) -> CliResult<()> {
    let start = Instant::now();
    let ds = load_dataset(&args.common.data, &args.common.target)?;
    let transform = core_transform(args.common.transform);
    let mut fc = ForecastConfig::default_for(
        args.horizon,
        args.common.lags,
        args.common.error_lags,
        args.common.seed,
    );
    fc.initial_window = args.initial_window;
    fc.refit_every = args.refit_every;
    fc.include_contemporaneous = !args.common.exclude_current;
    fc.iterations = args.common.iters;
    fc.burn_in = args.common.burn_in;
    fc.transform = transform;
    let result = rolling_backtest(&ds, &fc)?;

    ensure_dir(&args.out_dir)?;
    write_predictions(&args.out_dir.join("predictions.csv"), &result)?;
    write_metrics(&args.out_dir.join("metrics.csv"), &result)?;
    if transform == ResponseTransform::LogNeg {
        write_transformed_metrics(&args.out_dir.join("metrics_transformed.csv"), &result)?;
    }

    let mut manifest = RunManifest::new(
        "backtest",
        args.common.seed,
        json!({
            "data": args.common.data.display().to_string(),
            "target": args.common.target,
            "lags": args.common.lags,
            "error_lags": args.common.error_lags,
            "exclude_current": args.common.exclude_current,
            "transform": format!("{:?}", args.common.transform),
            "iters": args.common.iters,
            "burn_in": args.common.burn_in,
            "seed": args.common.seed,
            "horizon": args.horizon,
            "initial_window": args.initial_window,
            "refit_every": args.refit_every,
        }),
    );
    manifest.digest_input(&args.common.data)?;
    manifest.timing_seconds = start.elapsed().as_secs_f64();
    manifest.write(&args.out_dir.join("manifest.json"))?;
    println!(
        "backtest outputs written to {} ({} records)",
        args.out_dir.display(),
        result.records.len()
    );
    Ok(())
}

fn write_predictions(path: &Path, result: &ForecastResult) -> CliResult<()> {
    let mut out = String::from("origin,horizon,timestamp,actual,predicted\n");
    for r in &result.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.origin,
            r.horizon,
            r.timestamp.as_deref().unwrap_or(""),
            fmt6(r.actual),
            fmt6(r.predicted),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

fn metric_row(h: usize, m: &ssarx_core::metrics::PredictionMetrics) -> String {
    format!(
        "{},{},{},{},{},{},{}\n",
        h,
        fmt6(m.me),
        fmt6(m.mae),
        fmt6(m.mse),
        m.nrmse.map(|v| fmt6(100.0 * v)).unwrap_or_default(),
        m.r.map(fmt6).unwrap_or_default(),
        m.r2.map(fmt6).unwrap_or_default(),
    )
}

const METRICS_HEADER: &str = "horizon,me,mae,mse,nrmse_pct,r,r2\n";

fn write_metrics(path: &Path, result: &ForecastResult) -> CliResult<()> {
    let mut out = String::from(METRICS_HEADER);
    for (h, m) in &result.per_horizon {
        out.push_str(&metric_row(*h, m));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Metrics on the transformed scale: both series are pushed back through
/// log(-y + 1). Predictions always satisfy -pred + 1 > 0 by construction.
fn write_transformed_metrics(path: &Path, result: &ForecastResult) -> CliResult<()> {
    let mut out = String::from(METRICS_HEADER);
    let max_h = result.per_horizon.len();
    for h in 1..=max_h {
        let actual: Vec<f64> = result
            .records
            .iter()
            .filter(|r| r.horizon == h)
            .map(|r| (-r.actual + 1.0).ln())
            .collect();
        let predicted: Vec<f64> = result
            .records
            .iter()
            .filter(|r| r.horizon == h)
            .map(|r| (-r.predicted + 1.0).ln())
            .collect();
        let m = prediction_metrics(&actual, &predicted)?;
        out.push_str(&metric_row(h, &m));
    }
    fs::write(path, out)?;
    Ok(())
}
