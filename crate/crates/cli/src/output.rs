use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use cmt_core::config::ConfigDoc;
use cmt_core::ErrorClass;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cmt_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn class(&self) -> ErrorClass {
        match self {
            CliError::Core(e) => e.class(),
            CliError::Io { .. } | CliError::Usage(_) => ErrorClass::Config,
            CliError::NotConverged(_) => ErrorClass::NonConvergence,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Output directory with atomic file writes and a manifest of what was written.
pub struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Writes to a temporary sibling and renames it into place.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let res = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            fs::rename(&tmp, &target)
        })();
        if let Err(e) = res {
            let _ = fs::remove_file(&tmp);
            return Err(CliError::io(&target, e));
        }
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.txt`. Only the `timestamp` line varies between
    /// identical runs.
    pub fn finish(mut self, run: &RunInfo, resolved: &ConfigDoc, summary: &[(String, String)]) -> CliResult<()> {
        let mut m = String::new();
        m.push_str(&format!("tool = cmt-lab {}\n", env!("CARGO_PKG_VERSION")));
        m.push_str(&format!("subcommand = {}\n", run.subcommand));
        m.push_str(&format!("preset = {}\n", run.preset.as_deref().unwrap_or("")));
        m.push_str(&format!("config = {}\n", run.config.as_deref().unwrap_or("")));
        m.push_str(&format!(
            "execution = {}\n",
            if run.parallel { "parallel" } else { "sequential" }
        ));
        m.push_str(&format!("timestamp = {}\n", unix_time()));
        m.push_str(&format!("files = {}\n", self.files.join(", ")));
        if !summary.is_empty() {
            m.push_str("\n[summary]\n");
            for (k, v) in summary {
                m.push_str(&format!("{k} = {v}\n"));
            }
        }
        for s in &resolved.sections {
            if s.name.is_empty() || s.entries.is_empty() {
                continue;
            }
            m.push_str(&format!("\n[config.{}]\n", s.name));
            for e in &s.entries {
                m.push_str(&format!("{} = {}\n", e.key, e.value));
            }
        }
        self.write("manifest.txt", m.as_bytes())
    }
}

pub struct RunInfo {
    pub subcommand: &'static str,
    pub preset: Option<String>,
    pub config: Option<String>,
    pub parallel: bool,
}

fn unix_time() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
