//! Subcommand bodies, kept free of argument parsing so they can be tested.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use shifttest::densities::scm::presets;
use shifttest::densities::ScmSpec;
use shifttest::engine::{choose_m_heuristic, HeuristicConfig, MChoice, RunConfig};
use shifttest::level_bounds::{finite_level_bound, max_m_for_level};
use shifttest::{estimate_second_moment, Dataset, RandomStream, TestResult};

/// Byte offset of a 1-based `(line, column)` position in `text`.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (start + column.saturating_sub(1)).min(text.len())
}

/// Parses JSON, reporting failures with their byte offset.
pub fn parse_json<T: DeserializeOwned>(text: &str, source: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        let offset = byte_offset(text, e.line(), e.column());
        anyhow::anyhow!(
            "{source}: {e} (byte offset {offset})"
        )
    })
}

/// Reads a run configuration and the data set it names, which is resolved
/// relative to the configuration file unless `data` overrides it.
pub fn load_run(config: &Path, data: Option<&Path>) -> Result<(RunConfig, Dataset)> {
    let text = fs::read_to_string(config)
        .with_context(|| format!("reading config {}", config.display()))?;
    let cfg: RunConfig = parse_json(&text, &config.display().to_string())?;
    let path: PathBuf = match (data, &cfg.data) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => {
            let p = Path::new(p);
            if p.is_relative() {
                config.parent().unwrap_or(Path::new(".")).join(p)
            } else {
                p.to_path_buf()
            }
        }
        (None, None) => bail!("{}: field `data` is required", config.display()),
    };
    let dataset = Dataset::read_csv_path(&path)
        .with_context(|| format!("reading data {}", path.display()))?;
    Ok((cfg, dataset))
}

pub fn cmd_test(config: &Path, data: Option<&Path>, seed: Option<u64>) -> Result<TestResult> {
    let (mut cfg, dataset) = load_run(config, data)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg.execute(&dataset)?)
}

/// Level bound at a given `m`, or the largest `m` meeting `alpha_psi`.
pub fn cmd_bound(n: usize, m: Option<usize>, k: f64, alpha_phi: f64, alpha_psi: Option<f64>) -> Result<Value> {
    if let Some(m) = m {
        let b = finite_level_bound(n, m, k, alpha_phi)?;
        return Ok(serde_json::to_value(b)?);
    }
    let alpha_psi = alpha_psi.context("give either --m or --alpha-psi")?;
    let r = max_m_for_level(n, k, alpha_phi, alpha_psi)?;
    let mut out = json!({
        "n": n,
        "k": k,
        "alpha_phi": alpha_phi,
        "alpha_psi": alpha_psi,
        "max_m": r.m,
        "scanned_to": r.scanned_to,
        "stopped_early": r.stopped_early,
    });
    if alpha_psi < alpha_phi {
        out["message"] = json!(format!(
            "alpha_psi = {alpha_psi} is below alpha_phi = {alpha_phi}; the bound is never smaller than alpha_phi, so no m qualifies"
        ));
    } else if r.m.is_none() {
        out["message"] = json!("no resample size keeps the bound within alpha_psi");
    }
    Ok(out)
}

/// Resample sizes suggested for a run configuration: the finite-sample
/// bound always, and the target heuristic when the config configures it.
pub fn cmd_choose_m(config: &Path, data: Option<&Path>, seed: Option<u64>) -> Result<Value> {
    let (cfg, dataset) = load_run(config, data)?;
    let seed = seed.unwrap_or(cfg.seed);
    let n = dataset.n_rows();
    let weights = cfg.shift.weights(&dataset)?;
    let k = estimate_second_moment(&weights)?;
    let alpha_psi = cfg.alpha_psi.unwrap_or(2.0 * cfg.alpha);
    let bound = max_m_for_level(n, k, cfg.alpha, alpha_psi)?;
    let mut out = json!({
        "n": n,
        "sqrt": (n as f64).sqrt() as usize,
        "finite_bound": {
            "k": k,
            "alpha_phi": cfg.alpha,
            "alpha_psi": alpha_psi,
            "max_m": bound.m,
            "scanned_to": bound.scanned_to,
            "stopped_early": bound.stopped_early,
        },
    });
    if let Some(spec) = &cfg.heuristic {
        let h = HeuristicConfig::from(spec);
        // same stream as the heuristic inside `test`
        let choice = choose_m_heuristic(&dataset, &weights, &h, &cfg.plan, RandomStream::new(seed, 0).substream(1))?;
        out["heuristic"] = json!({
            "m": choice.m,
            "capped": choice.capped,
            "threshold": choice.threshold,
            "trace": choice.trace,
            "warnings": choice.warnings,
        });
    } else if cfg.m == MChoice::Heuristic {
        bail!("{}: m = \"heuristic\" needs a `heuristic` section", config.display());
    }
    Ok(out)
}

/// A bundled model by name, or an SCM read from a JSON file.
pub fn load_scm(model: &str, theta: f64, tau: u32) -> Result<ScmSpec> {
    Ok(match model {
        "linear_ci" => presets::linear_ci(theta),
        "mixture_ci" => presets::mixture_ci(theta, tau),
        "verma_gaussian" => presets::verma_gaussian(theta),
        "verma_nonlinear" => presets::verma_nonlinear(theta),
        "ipw_chain" => presets::ipw_chain(),
        path => {
            let text = fs::read_to_string(path).with_context(|| {
                format!("`{path}` is neither a bundled model nor a readable SCM file")
            })?;
            parse_json(&text, path)?
        }
    })
}
