//! Shared plumbing: error categories, range parsing, float formatting and
//! the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use dpistab_core::Error as CoreError;
use serde::Serialize;

/// Failures split by exit code: usage errors exit 2, numeric failures 3.
#[derive(Debug)]
pub enum AppError {
    Usage(String),
    Numeric(String),
}

impl AppError {
    pub fn usage(msg: impl Into<String>) -> Self {
        AppError::Usage(msg.into())
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::ScanRange(_) | CoreError::SingularStep { .. } => {
                AppError::Numeric(e.to_string())
            }
            _ => AppError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Numeric(format!("io: {e}"))
    }
}

pub type AppResult<T> = Result<T, AppError>;

/// Parse `start:stop:step` (endpoints inclusive within half a step) or a
/// single value.
pub fn parse_range(spec: &str) -> AppResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> AppResult<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| AppError::usage(format!("invalid number {s:?} in range {spec:?}")))
    };
    match parts.as_slice() {
        [single] => Ok(vec![num(single)?]),
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan() || step <= 0.0 {
                return Err(AppError::usage(format!("step must be positive in {spec:?}")));
            }
            if stop < start {
                return Err(AppError::usage(format!("empty range {spec:?}")));
            }
            let mut values = Vec::new();
            let mut k = 0u64;
            loop {
                let v = start + k as f64 * step;
                if v > stop + 0.5 * step {
                    break;
                }
                values.push(v);
                k += 1;
            }
            Ok(values)
        }
        _ => Err(AppError::usage(format!(
            "range {spec:?} must be a number or start:stop:step"
        ))),
    }
}

/// Floats in data files carry 17 significant digits so they round-trip.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Record of one invocation, written as manifest.json next to the outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub tool_version: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }
}

/// Write one data file under the output directory and record it in the
/// manifest.
pub fn emit(dir: &Path, manifest: &mut RunManifest, name: &str, contents: &str) -> AppResult<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    manifest.outputs.push(name.to_string());
    Ok(())
}

/// Finalize the manifest file itself.
pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> AppResult<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| AppError::Numeric(format!("manifest serialization: {e}")))?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

/// Default iteration budget: DPISTAB_MAX_ITER when set, otherwise 100000.
pub fn default_max_iter() -> AppResult<usize> {
    match std::env::var("DPISTAB_MAX_ITER") {
        Ok(v) => v
            .parse::<usize>()
            .map_err(|_| AppError::usage(format!("DPISTAB_MAX_ITER={v:?} is not a count"))),
        Err(_) => Ok(100_000),
    }
}
