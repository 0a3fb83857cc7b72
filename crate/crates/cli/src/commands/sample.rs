//! The `sample` subcommand: estimate the whitening transform at θ⁰ (when
//! requested), run the synthetic-likelihood chain, and persist the chain,
//! the transform, and the run manifest.

use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::json;

use wbsl_core::sampler::{estimate_whitening_at, initial_mean_at, run_chain, SamplerConfig};
use wbsl_core::stream::Stream;

use crate::config::Loaded;
use crate::output;

pub fn run(loaded: &Loaded, threads: usize) -> Result<()> {
    let start = Instant::now();
    let config = &loaded.config;
    let model = loaded.model.as_ref();
    output::ensure_dir(&loaded.out_dir)?;

    // Stream layout: child 0 of the master root is the covariance-
    // estimation phase (matching the sampler's initialization block);
    // children 1.. are the chain's iterations.
    let estimation_stream = Stream::root(loaded.seed).child(0);

    let (whitening, initial_mean, whitening_file) = match config.whitening.method() {
        Some(method) => {
            let est = estimate_whitening_at(
                model,
                &config.theta0,
                config.n_cov,
                method,
                estimation_stream,
            )
            .context("whitening estimation failed")?;
            let path = loaded.out_dir.join("whitening.json");
            std::fs::write(&path, est.matrix.to_json())
                .with_context(|| format!("cannot write {}", path.display()))?;
            (Some(est.matrix), Some(est.whitened_mean), Some(path))
        }
        None => {
            // Standard runs keep the same initialization: identity
            // covariance around the mean of an n_cov batch at θ⁰.
            let mean = initial_mean_at(model, &config.theta0, config.n_cov, estimation_stream)
                .context("initial-state estimation failed")?;
            (None, Some(mean), None)
        }
    };

    let sampler_config = SamplerConfig {
        iterations: config.iterations,
        burn_in: config.burn_in,
        n_draws: config.n,
        shrinkage: config.shrinkage,
        whitening,
        initial_mean,
        theta0: config.theta0.clone(),
        seed: loaded.seed,
    };
    let out = run_chain(model, &loaded.s_obs, &sampler_config, &loaded.proposal)
        .context("chain run failed")?;

    let chain_path = loaded.out_dir.join("chain.csv");
    output::write_chain_csv(&chain_path, model.parameter_names(), &out.records)?;

    let mut metadata = crate::commands::base_metadata(loaded, "sample", threads)?;
    let mut extra = json!({
        "chain_file": chain_path.file_name().unwrap().to_str(),
        "acceptance_rate": out.acceptance_rate,
        "simulation_calls": out.simulation_calls,
        "records": out.records.len(),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    if let Some(name) = whitening_file
        .as_ref()
        .and_then(|p| p.file_name())
        .and_then(|n| n.to_str())
    {
        extra["whitening_file"] = json!(name);
    }
    merge(&mut metadata, extra);
    output::write_metadata(&loaded.out_dir, &metadata)?;

    log::info!(
        "chain of {} records written to {} (acceptance rate {:.3})",
        out.records.len(),
        chain_path.display(),
        out.acceptance_rate
    );
    println!(
        "sample: {} records, acceptance rate {:.3}, {} simulator calls -> {}",
        out.records.len(),
        out.acceptance_rate,
        out.simulation_calls,
        chain_path.display()
    );
    Ok(())
}

pub(crate) fn merge(base: &mut serde_json::Value, extra: serde_json::Value) {
    if let (Some(base_map), serde_json::Value::Object(extra_map)) = (base.as_object_mut(), extra) {
        for (k, v) in extra_map {
            base_map.insert(k, v);
        }
    }
}
