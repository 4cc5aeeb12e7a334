//! File formats and configuration.
//!
//! Every table this crate writes starts with a `# tourney-format-version: 1`
//! comment line followed by a comma-separated header. The reports input file
//! has no version line: its first line is the header
//! `informant,ego,alter,outcome`.

mod config;
mod reports;
mod tables;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{ClampSpec, PriorSpec, RunConfig, RunConfigFile, SimulationConfigFile};
pub use reports::{load_reports, parse_reports, write_reports, Outcome, ReportData};
pub use tables::{
    parse_draws, parse_graph, write_draws, write_graph, write_marginals, write_rates, write_rhat,
    write_summary_json, write_truth_rates, DrawsFile, FORMAT_VERSION,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("line {line}: {reason} (record: {record})")]
    Record {
        line: u64,
        record: String,
        reason: String,
    },

    #[error("invalid header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },

    #[error("{0}")]
    Format(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] crate::Error),
}

impl IoError {
    /// `true` for failures of the file system rather than of the content.
    pub fn is_os_error(&self) -> bool {
        matches!(self, IoError::Io { .. })
    }
}

pub type IoResult<T> = std::result::Result<T, IoError>;

pub fn read_text(path: &Path) -> IoResult<String> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> IoResult<()> {
    let io_err = |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}

/// Writes several files into `dir`, creating it if needed. All contents are
/// rendered before the first write.
pub fn write_outputs(dir: &Path, files: &[(&str, String)]) -> IoResult<()> {
    fs::create_dir_all(dir).map_err(|source| IoError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for (name, contents) in files {
        write_atomic(&dir.join(name), contents)?;
    }
    Ok(())
}
