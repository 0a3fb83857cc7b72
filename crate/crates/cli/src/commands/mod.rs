pub mod sample;
pub mod study;
pub mod tune;

use anyhow::Result;
use serde_json::json;

use crate::config::Loaded;

/// Manifest fields shared by every subcommand: enough to rerun the exact
/// experiment (config echo, effective seed, artifact versions).
pub fn base_metadata(loaded: &Loaded, command: &str, threads: usize) -> Result<serde_json::Value> {
    Ok(json!({
        "command": command,
        "config": serde_json::to_value(&loaded.config)?,
        "config_sha256": loaded.config_sha256,
        "seed": loaded.seed,
        "threads": threads,
        "model": loaded.model.name(),
        "whitening_method": loaded.config.whitening.label(),
        "versions": {
            "wbsl-cli": env!("CARGO_PKG_VERSION"),
        },
    }))
}
