use std::path::{Path, PathBuf};

use diffract_core::analysis::Verdict;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::Command;

pub const MANIFEST_FILE: &str = "manifest.json";

/// One per run, written to `<out>/manifest.json`. `params` holds the full
/// command with every default filled in; `diffract rerun` replays it.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub params: Command,
    pub seeds: Vec<u64>,
    /// The `--threads` cap, if one was given.
    pub threads: Option<usize>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rerun_of: Option<PathBuf>,
    /// RFC 3339 start time.
    pub started_at: String,
    pub duration_seconds: f64,
    pub exit_code: i32,
    pub verdict: Option<Verdict>,
    pub summary: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> diffract_core::Result<RunManifest> {
        diffract_core::io::read_json(path)
    }

    pub fn write(&self, dir: &Path) -> diffract_core::Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        diffract_core::io::write_json(&path, self)?;
        Ok(path)
    }
}
