use std::path::Path;

use qid_core::Sample;
use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

/// One real value per line. Blank lines are skipped; anything else that does
/// not parse is an error naming its 1-based line.
pub fn read_sample(path: &Path) -> CliResult<Sample> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ => {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    content: s.to_string(),
                })
            }
        }
    }
    Ok(Sample::new(values)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    std::fs::write(path, text).map_err(CliError::io(path))
}
