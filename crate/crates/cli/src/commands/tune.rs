//! The `tune` subcommand: find the baseline number of simulations for a
//! standard (unwhitened, unshrunk) run, then the shrinkage levels that
//! sustain 50%/80%/90% reductions of it, and the simulation count needed
//! under complete shrinkage.

use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::json;

use wbsl_core::sampler::{estimate_whitening_at, tune_gamma, tune_n};
use wbsl_core::stream::Stream;
use wbsl_core::synthlik::ShrinkageSpec;

use crate::config::Loaded;
use crate::output::{self, TuneRow};

pub fn run(loaded: &Loaded, threads: usize) -> Result<()> {
    let start = Instant::now();
    let config = &loaded.config;
    let model = loaded.model.as_ref();
    let tuning = &config.tuning;
    output::ensure_dir(&loaded.out_dir)?;

    let root = Stream::root(loaded.seed);
    let whitening = match config.whitening.method() {
        Some(method) => Some(
            estimate_whitening_at(model, &config.theta0, config.n_cov, method, root.child(0))
                .context("whitening estimation failed")?
                .matrix,
        ),
        None => None,
    };

    let mut rows: Vec<TuneRow> = Vec::new();

    // Baseline: the standard run, no whitening and no shrinkage.
    let baseline = tune_n(
        model,
        &loaded.s_obs,
        &config.theta0,
        &ShrinkageSpec::None,
        None,
        tuning.target,
        tuning.replicates,
        tuning.cap,
        root.child(1),
    )
    .context("baseline tuning failed")?;
    rows.push(TuneRow {
        label: "baseline".to_string(),
        n: baseline.n,
        gamma: 1.0,
        sd: baseline.sd,
        mean_loglik: baseline.mean_loglik,
        at_floor: false,
    });
    log::info!("baseline n = {} (sd {:.3})", baseline.n, baseline.sd);

    // Reduced simulation budgets: tune the shrinkage level that restores
    // the target variability at each reduced n.
    for (idx, reduction) in tuning.reductions.iter().enumerate() {
        if !(0.0..1.0).contains(reduction) {
            anyhow::bail!("reduction factors must lie in [0, 1), got {reduction}");
        }
        let n_reduced = (((baseline.n as f64) * (1.0 - reduction)).round() as usize).max(2);
        let tuned = tune_gamma(
            model,
            &loaded.s_obs,
            &config.theta0,
            n_reduced,
            whitening.as_ref(),
            tuning.target,
            tuning.replicates,
            root.child(2 + idx as u64),
        )
        .with_context(|| format!("gamma tuning failed at n = {n_reduced}"))?;
        rows.push(TuneRow {
            label: format!("reduce-{}", (reduction * 100.0).round() as u32),
            n: n_reduced,
            gamma: tuned.gamma,
            sd: tuned.sd,
            mean_loglik: tuned.mean_loglik,
            at_floor: tuned.at_floor,
        });
        log::info!(
            "n = {} ({}% reduction): gamma = {:.3} (sd {:.3})",
            n_reduced,
            (reduction * 100.0).round(),
            tuned.gamma,
            tuned.sd
        );
    }

    // Complete shrinkage: re-tune n under a diagonal covariance estimate.
    if tuning.include_gamma0 {
        let tuned = tune_n(
            model,
            &loaded.s_obs,
            &config.theta0,
            &ShrinkageSpec::Warton { gamma: 0.0 },
            whitening.as_ref(),
            tuning.target,
            tuning.replicates,
            tuning.cap,
            root.child(2 + tuning.reductions.len() as u64),
        )
        .context("complete-shrinkage tuning failed")?;
        rows.push(TuneRow {
            label: "gamma0".to_string(),
            n: tuned.n,
            gamma: 0.0,
            sd: tuned.sd,
            mean_loglik: tuned.mean_loglik,
            at_floor: false,
        });
        log::info!("gamma = 0: n = {} (sd {:.3})", tuned.n, tuned.sd);
    }

    let report_path = loaded.out_dir.join("tuning.csv");
    output::write_tuning_csv(&report_path, &rows)?;

    let mut metadata = crate::commands::base_metadata(loaded, "tune", threads)?;
    crate::commands::sample::merge(
        &mut metadata,
        json!({
            "tuning_file": "tuning.csv",
            "target": [tuning.target.0, tuning.target.1],
            "replicates": tuning.replicates,
            "rows": rows
                .iter()
                .map(|r| json!({
                    "label": r.label,
                    "n": r.n,
                    "gamma": r.gamma,
                    "sd": r.sd,
                    "at_floor": r.at_floor,
                }))
                .collect::<Vec<_>>(),
            "wall_time_seconds": start.elapsed().as_secs_f64(),
        }),
    );
    output::write_metadata(&loaded.out_dir, &metadata)?;

    for r in &rows {
        println!(
            "tune: {:<10} n = {:<8} gamma = {:.3}  sd = {:.3}{}",
            r.label,
            r.n,
            r.gamma,
            r.sd,
            if r.at_floor { "  (hit the gamma = 0 floor)" } else { "" }
        );
    }
    Ok(())
}
