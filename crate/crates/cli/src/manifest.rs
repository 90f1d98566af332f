//! Run manifest: the only output that carries a timestamp.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{io_error, CliResult};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub configs: Vec<PathBuf>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub version: &'static str,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: Option<u64>, threads: usize) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            configs: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
            threads,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))
    }
}

/// Output sink for one run: creates files under `dir` and lists them.
pub struct Outputs<'a> {
    pub dir: &'a Path,
    pub manifest: RunManifest,
}

impl<'a> Outputs<'a> {
    pub fn new(dir: &'a Path, manifest: RunManifest) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self { dir, manifest })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io_error(&path, e))?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_vec_pretty(value).expect("report serializes");
        text.push(b'\n');
        self.write(name, &text)
    }

    pub fn finish(self) -> CliResult<()> {
        self.manifest.write(self.dir)
    }
}
