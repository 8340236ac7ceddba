use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{io_err, Result};
use crate::formats::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileHash {
    pub name: String,
    pub sha256: String,
}

impl FileHash {
    /// Hash of an input file, recorded under its base name so manifests do not
    /// depend on where the run happened.
    pub fn of_input(path: &Path, sha256: String) -> Self {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Self { name, sha256 }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    inputs: &'a [FileHash],
    outputs: &'a [FileHash],
}

/// Output directory that remembers the hash of everything written to it and
/// closes with a `run.json` manifest.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<FileHash>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(io_err(&path))?;
        self.written.push(FileHash {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn write_csv<S: Serialize>(&mut self, name: &str, rows: &[S]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| csv::Error::from(e.into_error()))?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn finish(
        mut self,
        command: &str,
        config: &RunConfig,
        inputs: &[FileHash],
    ) -> Result<PathBuf> {
        let outputs = std::mem::take(&mut self.written);
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            inputs,
            outputs: &outputs,
        };
        self.write_json("run.json", &manifest)
    }
}
