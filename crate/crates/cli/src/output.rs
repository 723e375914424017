use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Values written on the leading `#` line of every CSV.
#[derive(Clone, Debug)]
pub struct Meta {
    pub config_hash: String,
    pub seed: u64,
}

impl Meta {
    pub fn line(&self) -> String {
        format!(
            "# obstacle-lab {} config_sha256={} seed={}",
            env!("CARGO_PKG_VERSION"),
            self.config_hash,
            self.seed
        )
    }

    /// Metadata line, header and rows, LF-terminated.
    pub fn csv(&self, header: &str, rows: &[String]) -> String {
        let mut out = format!("{}\n{header}\n", self.line());
        for r in rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path)?;
        Ok(OutDir(path.to_path_buf()))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    /// Writes through a temporary file in the same directory and renames it
    /// into place.
    pub fn write(&self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let target = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp{}", std::process::id()));
        fs::write(&tmp, contents)?;
        fs::rename(&tmp, &target)?;
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.14e}")
}
