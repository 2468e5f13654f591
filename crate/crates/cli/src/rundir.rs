use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::CliResult;

pub const MANIFEST: &str = "manifest.json";

/// An output directory that records every artifact written into it and
/// closes with a manifest. Timestamps appear only in the manifest.
pub struct RunDir {
    path: PathBuf,
    command: String,
    started: u64,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    started_unix: u64,
    finished_unix: u64,
    files: &'a [String],
    details: serde_json::Value,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunDir {
    pub fn create(path: &Path, command: &str) -> CliResult<Self> {
        fs::create_dir_all(path).map_err(|e| dialsent_core::Error::io(path, e))?;
        Ok(Self {
            path: path.to_owned(),
            command: command.to_owned(),
            started: now(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> CliResult {
        let target = self.path.join(name);
        fs::write(&target, contents).map_err(|e| dialsent_core::Error::io(&target, e))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_owned());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult {
        let mut text = serde_json::to_string_pretty(value).map_err(dialsent_core::Error::from)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn finish(mut self, details: serde_json::Value) -> CliResult {
        self.files.sort();
        let manifest = Manifest {
            tool: "dialsent",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            started_unix: self.started,
            finished_unix: now(),
            files: &self.files,
            details,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(dialsent_core::Error::from)?;
        text.push('\n');
        let target = self.path.join(MANIFEST);
        fs::write(&target, text).map_err(|e| dialsent_core::Error::io(&target, e))?;
        Ok(())
    }
}
