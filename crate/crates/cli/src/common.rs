//! Shared helpers: config-file handling, event input, truth resolution,
//! deterministic file output.

use std::fs;
use std::path::{Path, PathBuf};

use hawkes_rkhs::events::{load_events, EventFormat};
use hawkes_rkhs::model::Criterion;
use hawkes_rkhs::simulate::GroundTruthModel;
use hawkes_rkhs::{builtin_kernels, Error, EventData, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Load an optional JSON config file; unknown keys are rejected.
pub fn load_config<C: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<C> {
    match path {
        None => Ok(C::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::config(format!("config file {}: {e}", p.display())))
        }
    }
}

/// Flags win over config-file values, which win over the default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn pick_opt<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

/// Resolve `--format` strings.
pub fn parse_format_name(name: &str) -> Result<&'static str> {
    match name {
        "csv" => Ok("csv"),
        "json" => Ok("json"),
        other => Err(Error::config(format!("unknown format '{other}' (expected csv or json)"))),
    }
}

pub fn parse_criterion(name: &str) -> Result<Criterion> {
    match name {
        "mle" => Ok(Criterion::Mle),
        "ls" => Ok(Criterion::Ls),
        other => Err(Error::config(format!("unknown criterion '{other}' (expected mle or ls)"))),
    }
}

/// Load events honoring the format flags. CSV requires a horizon.
pub fn read_events(
    path: &Path,
    format: &str,
    horizon: Option<f64>,
    dims: Option<usize>,
    header: bool,
) -> Result<EventData> {
    let fmt = match parse_format_name(format)? {
        "json" => EventFormat::Json,
        _ => {
            let horizon = horizon.ok_or_else(|| {
                Error::config("--horizon is required for CSV event input".to_string())
            })?;
            EventFormat::Csv { horizon, dims, header }
        }
    };
    load_events(path, fmt)
}

/// Resolve a ground-truth model: a builtin name or a JSON curve-spec file.
pub fn resolve_truth(name: &str) -> Result<GroundTruthModel> {
    if name == "paper3d" {
        return builtin_kernels(name);
    }
    let path = Path::new(name);
    if path.exists() {
        return GroundTruthModel::from_spec_file(path);
    }
    Err(Error::config(format!(
        "unknown ground-truth model '{name}' (available: paper3d, or a path to a JSON spec file)"
    )))
}

/// Comma-separated float list.
pub fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("invalid number '{s}' in list")))
        })
        .collect()
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::config(format!("invalid integer '{s}' in list")))
        })
        .collect()
}

/// Write pretty JSON with a trailing newline, creating parent directories.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}
