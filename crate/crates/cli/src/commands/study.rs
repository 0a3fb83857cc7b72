//! The `study` subcommand family: total-variation comparison of two saved
//! chains, the variance-scaling study, the whitening-deviation study, and
//! the sensitivity sweep over whitening-estimation points.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::Rng;
use serde_json::json;

use wbsl_core::diagnostics::{
    chain_tv, sensitivity_sweep, variance_study, whitening_deviation_study, SweepSettings,
};
use wbsl_core::stream::Stream;
use wbsl_core::whitening::WhiteningMethod;

use crate::config::Loaded;
use crate::output;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyKind {
    Tv,
    Variance,
    Deviation,
    Sensitivity,
}

impl StudyKind {
    fn name(self) -> &'static str {
        match self {
            StudyKind::Tv => "tv",
            StudyKind::Variance => "variance",
            StudyKind::Deviation => "deviation",
            StudyKind::Sensitivity => "sensitivity",
        }
    }
}

pub fn run(loaded: &Loaded, kind: StudyKind, threads: usize) -> Result<()> {
    let start = Instant::now();
    output::ensure_dir(&loaded.out_dir)?;
    let study = loaded
        .config
        .study
        .as_ref()
        .with_context(|| format!("config has no \"study\" block for `study {}`", kind.name()))?;

    let mut metadata =
        crate::commands::base_metadata(loaded, &format!("study {}", kind.name()), threads)?;
    let extra = match kind {
        StudyKind::Tv => {
            let spec = study
                .tv
                .as_ref()
                .context("config has no study.tv block")?;
            let a = output::chain_file_draws(&spec.chain_a, spec.burn_in)?;
            let b = output::chain_file_draws(&spec.chain_b, spec.burn_in)?;
            let pairs = chain_tv(&a, &b).context("total-variation estimation failed")?;
            let path = loaded.out_dir.join("tv.csv");
            output::write_tv_csv(&path, &pairs)?;
            for p in &pairs {
                println!("study tv: pair ({}, {}) -> {:.4}", p.i, p.j, p.tv);
            }
            json!({
                "tv_file": "tv.csv",
                "pairs": pairs
                    .iter()
                    .map(|p| json!({ "i": p.i, "j": p.j, "tv": p.tv }))
                    .collect::<Vec<_>>(),
            })
        }
        StudyKind::Variance => {
            let spec = study
                .variance
                .as_ref()
                .context("config has no study.variance block")?;
            let rows = variance_study(
                &spec.theta,
                &spec.d_list,
                spec.n_rule.rule(),
                spec.replicates,
                Stream::root(loaded.seed).child(1),
            )
            .context("variance study failed")?;
            let path = loaded.out_dir.join("variance.csv");
            output::write_variance_csv(&path, &rows)?;
            for r in &rows {
                println!(
                    "study variance: d = {:<4} n = {:<6} var_full = {:.4}  var_diag = {:.4}",
                    r.d, r.n, r.var_full, r.var_diag
                );
            }
            json!({
                "variance_file": "variance.csv",
                "cells": rows.len(),
            })
        }
        StudyKind::Deviation => {
            let spec = study
                .deviation
                .as_ref()
                .context("config has no study.deviation block")?;
            let model = loaded.model.as_ref();
            if spec.theta_true.len() != model.param_count()
                || spec.halfwidth.len() != model.param_count()
            {
                bail!(
                    "theta_true and halfwidth must have {} entries",
                    model.param_count()
                );
            }
            if !model.prior().contains(&spec.theta_true) {
                bail!("theta_true {:?} is outside the prior support", spec.theta_true);
            }
            // Deterministic draws from a uniform box around theta_true,
            // redrawn until they land in the prior support.
            let mut rng = Stream::root(loaded.seed).child(1).rng();
            let mut draws = Vec::with_capacity(spec.draws);
            let mut attempts = 0usize;
            while draws.len() < spec.draws {
                attempts += 1;
                if attempts > spec.draws * 1000 {
                    bail!("cannot find {} draws inside the prior support", spec.draws);
                }
                let candidate: Vec<f64> = spec
                    .theta_true
                    .iter()
                    .zip(&spec.halfwidth)
                    .map(|(c, h)| c + h * (2.0 * rng.random::<f64>() - 1.0))
                    .collect();
                if model.prior().contains(&candidate) {
                    draws.push(candidate);
                }
            }

            let mut per_method = Vec::new();
            let mut summary = Vec::new();
            for method in WhiteningMethod::ALL {
                let rows = whitening_deviation_study(model, &spec.theta_true, method, &draws)
                    .context("deviation study failed")?;
                let m = rows.len() as f64;
                let mean_total = rows.iter().map(|r| r.l1_total).sum::<f64>() / m;
                let mean_offdiag = rows.iter().map(|r| r.l1_offdiag).sum::<f64>() / m;
                println!(
                    "study deviation: {:<9} mean L1 (off-diagonal) = {:.4}",
                    method.as_str(),
                    mean_offdiag
                );
                summary.push((method.as_str().to_string(), mean_total, mean_offdiag));
                per_method.push((method.as_str().to_string(), rows));
            }
            output::write_deviation_csv(&loaded.out_dir.join("deviation.csv"), &per_method)?;
            output::write_deviation_summary_csv(
                &loaded.out_dir.join("deviation_summary.csv"),
                &summary,
            )?;
            json!({
                "deviation_file": "deviation.csv",
                "summary_file": "deviation_summary.csv",
                "draws": spec.draws,
                "summary": summary
                    .iter()
                    .map(|(m, t, o)| json!({
                        "method": m,
                        "mean_l1_total": t,
                        "mean_l1_offdiag": o,
                    }))
                    .collect::<Vec<_>>(),
            })
        }
        StudyKind::Sensitivity => {
            let spec = study
                .sensitivity
                .as_ref()
                .context("config has no study.sensitivity block")?;
            let config = &loaded.config;
            let method = config
                .whitening
                .method()
                .context("the sensitivity study requires a whitening method, not \"none\"")?;
            let settings = SweepSettings {
                method,
                n_cov: config.n_cov,
                n_draws: config.n,
                shrinkage: config.shrinkage,
                iterations: config.iterations,
                burn_in: config.burn_in,
                proposal: loaded.proposal.clone(),
                reference_start: config.theta0.clone(),
                seed: loaded.seed,
            };
            let rows = sensitivity_sweep(
                loaded.model.as_ref(),
                &loaded.s_obs,
                &spec.theta0_list,
                &settings,
            )
            .context("sensitivity sweep failed")?;
            let path = loaded.out_dir.join("sensitivity.csv");
            output::write_sensitivity_csv(&path, &rows)?;
            for (idx, r) in rows.iter().enumerate() {
                println!(
                    "study sensitivity: cell {idx} theta0 = {:?} -> mean TV {:.4}",
                    r.theta0,
                    r.mean_tv()
                );
            }
            json!({
                "sensitivity_file": "sensitivity.csv",
                "cells": rows.len(),
            })
        }
    };
    crate::commands::sample::merge(&mut metadata, extra);
    crate::commands::sample::merge(
        &mut metadata,
        json!({ "wall_time_seconds": start.elapsed().as_secs_f64() }),
    );
    output::write_metadata(&loaded.out_dir, &metadata)?;
    Ok(())
}
