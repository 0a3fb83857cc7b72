//! Persistence: chain CSV files, tuning and study tables, and the JSON
//! manifest each run leaves behind. All floats are written with 17
//! significant digits so files round-trip bit-exactly, and all CSV files
//! use `,` delimiters and `\n` line endings.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use wbsl_core::diagnostics::{DeviationRow, PairTv, SweepRow, VarianceStudyResult};
use wbsl_core::fmt::format_f64;
use wbsl_core::sampler::ChainRecord;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

/// Write the chain: header `iter,<parameter names...>,loglik,accepted`,
/// one record per line, acceptance as 0/1.
pub fn write_chain_csv(
    path: &Path,
    param_names: &[&str],
    records: &[ChainRecord],
) -> Result<()> {
    let mut out = String::with_capacity(records.len() * 64);
    out.push_str("iter");
    for name in param_names {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",loglik,accepted\n");
    for r in records {
        out.push_str(&r.iteration.to_string());
        for v in &r.theta {
            out.push(',');
            out.push_str(&format_f64(*v));
        }
        out.push(',');
        out.push_str(&format_f64(r.loglik));
        out.push(',');
        out.push(if r.accepted { '1' } else { '0' });
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Read a chain CSV back: parameter names from the header plus the records.
pub fn read_chain_csv(path: &Path) -> Result<(Vec<String>, Vec<ChainRecord>)> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read chain file {}", path.display()))?;
    let mut lines = text.lines();
    let header = match lines.next() {
        Some(h) => h,
        None => bail!("chain file {} is empty", path.display()),
    };
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 4 || columns[0] != "iter" || columns[columns.len() - 2] != "loglik"
        || columns[columns.len() - 1] != "accepted"
    {
        bail!("chain file {} has an unexpected header {header:?}", path.display());
    }
    let names: Vec<String> =
        columns[1..columns.len() - 2].iter().map(|s| s.to_string()).collect();
    let p = names.len();
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != p + 3 {
            bail!(
                "chain file {} line {} has {} fields, expected {}",
                path.display(),
                idx + 2,
                fields.len(),
                p + 3
            );
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().with_context(|| {
                format!("chain file {} line {}: bad {what} {s:?}", path.display(), idx + 2)
            })
        };
        let iteration: usize = fields[0].parse().with_context(|| {
            format!("chain file {} line {}: bad iteration", path.display(), idx + 2)
        })?;
        let mut theta = Vec::with_capacity(p);
        for f in &fields[1..=p] {
            theta.push(parse(f, "parameter")?);
        }
        let loglik = parse(fields[p + 1], "loglik")?;
        let accepted = match fields[p + 2] {
            "0" => false,
            "1" => true,
            other => bail!(
                "chain file {} line {}: bad accepted flag {other:?}",
                path.display(),
                idx + 2
            ),
        };
        records.push(ChainRecord { iteration, theta, loglik, accepted });
    }
    Ok((names, records))
}

/// Draws (θ only) past the warm-up, for density estimation.
pub fn chain_file_draws(path: &Path, burn_in: usize) -> Result<Vec<Vec<f64>>> {
    let (_, records) = read_chain_csv(path)?;
    Ok(records
        .into_iter()
        .filter(|r| r.iteration > burn_in)
        .map(|r| r.theta)
        .collect())
}

/// One row of the tuning report.
#[derive(Clone, Debug)]
pub struct TuneRow {
    /// "baseline", "reduce-50", "reduce-80", "reduce-90", or "gamma0".
    pub label: String,
    pub n: usize,
    pub gamma: f64,
    pub sd: f64,
    pub mean_loglik: f64,
    pub at_floor: bool,
}

pub fn write_tuning_csv(path: &Path, rows: &[TuneRow]) -> Result<()> {
    let mut out = String::from("label,n,gamma,sd,mean_loglik,at_floor\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.label,
            r.n,
            format_f64(r.gamma),
            format_f64(r.sd),
            format_f64(r.mean_loglik),
            u8::from(r.at_floor)
        ));
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_tv_csv(path: &Path, pairs: &[PairTv]) -> Result<()> {
    let mut out = String::from("i,j,tv\n");
    for p in pairs {
        out.push_str(&format!("{},{},{}\n", p.i, p.j, format_f64(p.tv)));
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_variance_csv(path: &Path, rows: &[VarianceStudyResult]) -> Result<()> {
    let mut out = String::from("d,n,var_full,var_diag,replicates\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.d,
            r.n,
            format_f64(r.var_full),
            format_f64(r.var_diag),
            r.replicates
        ));
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Per-draw deviation rows for one whitening method.
pub fn write_deviation_csv(path: &Path, per_method: &[(String, Vec<DeviationRow>)]) -> Result<()> {
    let mut out = String::from("method,draw,theta,l1_total,l1_offdiag\n");
    for (method, rows) in per_method {
        for (idx, r) in rows.iter().enumerate() {
            let theta = r
                .theta
                .iter()
                .map(|v| format_f64(*v))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!(
                "{method},{idx},{theta},{},{}\n",
                format_f64(r.l1_total),
                format_f64(r.l1_offdiag)
            ));
        }
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_deviation_summary_csv(
    path: &Path,
    rows: &[(String, f64, f64)],
) -> Result<()> {
    let mut out = String::from("method,mean_l1_total,mean_l1_offdiag\n");
    for (method, total, offdiag) in rows {
        out.push_str(&format!(
            "{method},{},{}\n",
            format_f64(*total),
            format_f64(*offdiag)
        ));
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_sensitivity_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut out = String::from("cell,theta0,acceptance_rate,mean_tv,pair_tvs\n");
    for (idx, r) in rows.iter().enumerate() {
        let theta0 = r
            .theta0
            .iter()
            .map(|v| format_f64(*v))
            .collect::<Vec<_>>()
            .join(";");
        let pairs = r
            .tv
            .iter()
            .map(|p| format!("{}:{}:{}", p.i, p.j, format_f64(p.tv)))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{idx},{theta0},{},{},{pairs}\n",
            format_f64(r.acceptance_rate),
            format_f64(r.mean_tv())
        ));
    }
    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

/// Write the run manifest (metadata.json): the config echo, provenance
/// hashes, effective settings, and result statistics.
pub fn write_metadata(dir: &Path, value: &serde_json::Value) -> Result<PathBuf> {
    let path = dir.join("metadata.json");
    let text = serde_json::to_string_pretty(value).context("cannot serialize metadata")?;
    fs::write(&path, text + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}
