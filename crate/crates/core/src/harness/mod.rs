//! Configuration, orchestration, manifests and reports.

mod checks;
mod config;
mod presets;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{CheckSpec, ExperimentConfig, Grids, SpdeSettings};
pub use presets::{preset_config, Preset};

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: String,
    pub model: String,
    pub stage: u8,
    pub status: Status,
    pub slack: Option<f64>,
    /// half-width of the confidence band used by Monte Carlo checks
    pub ci: Option<f64>,
    pub detail: String,
    pub metrics: serde_json::Value,
    pub wall_clock_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
    pub all_pass: bool,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn exit_code(&self) -> i32 {
        if self.all_pass {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(MANIFEST_FILE), self.to_json()?.as_bytes())
    }
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Config(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn model_name(config: &ExperimentConfig) -> String {
    serde_json::to_value(&config.potential.kind)
        .ok()
        .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_string))
        .unwrap_or_else(|| "custom".into())
}

/// Runs the configured checks in stage order, recording errors per check,
/// and writes artifacts and the manifest when an output directory is set.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    config.validate()?;
    let start = Instant::now();
    let ctx = checks::Context::new(config);
    let model = model_name(config);
    let mut order: Vec<&CheckSpec> = config.checks.iter().collect();
    order.sort_by_key(|c| c.stage());
    let mut outcomes = Vec::with_capacity(order.len());
    for check in order {
        let t0 = Instant::now();
        let (status, slack, ci, detail, metrics) = match checks::execute(check, &ctx) {
            Ok(v) => {
                if let (Some(dir), Some((name, body))) = (&config.output_dir, &v.csv) {
                    write_atomic(&dir.join(name), body.as_bytes())?;
                }
                let status = if v.pass { Status::Pass } else { Status::Fail };
                (status, v.slack, v.ci, checks::describe(v.pass, v.slack), v.metrics)
            }
            Err(e) => (Status::Error, None, None, format!("error: {e}"), serde_json::Value::Null),
        };
        outcomes.push(CheckOutcome {
            check: check.name().to_string(),
            model: model.clone(),
            stage: check.stage(),
            status,
            slack,
            ci,
            detail,
            metrics,
            wall_clock_s: if config.record_timing { t0.elapsed().as_secs_f64() } else { 0.0 },
        });
    }
    let manifest = RunManifest {
        name: config.name.clone(),
        tool_version: TOOL_VERSION.to_string(),
        config_hash: config.hash()?,
        seed: config.seed,
        all_pass: outcomes.iter().all(|o| o.status == Status::Pass),
        checks: outcomes,
        wall_clock_s: if config.record_timing { start.elapsed().as_secs_f64() } else { 0.0 },
    };
    if let Some(dir) = &config.output_dir {
        write_atomic(&dir.join("config.json"), config.to_json()?.as_bytes())?;
        manifest.write(dir)?;
    }
    Ok(manifest)
}

/// The curated suite of a model family.
pub fn verify_suite(preset: Preset) -> Result<RunManifest> {
    run(&preset_config(preset))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Text,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3e}"))
}

pub fn emit_report(manifest: &RunManifest, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => manifest.to_json(),
        ReportFormat::Text => {
            let mut s = format!(
                "# {} (stoquant {})\n# config {}  seed {}\n{:<22} {:<16} {:<6} {:>11} {:>11}  {}\n",
                manifest.name,
                manifest.tool_version,
                manifest.config_hash,
                manifest.seed,
                "check",
                "model",
                "status",
                "slack",
                "ci",
                "detail"
            );
            for c in &manifest.checks {
                let status = match c.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::Error => "ERROR",
                };
                s.push_str(&format!(
                    "{:<22} {:<16} {:<6} {:>11} {:>11}  {}\n",
                    c.check,
                    c.model,
                    status,
                    fmt_opt(c.slack),
                    fmt_opt(c.ci),
                    c.detail
                ));
            }
            Ok(s)
        }
    }
}
