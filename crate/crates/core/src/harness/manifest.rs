//! Run manifest: records what a run produced so it can be verified and
//! reproduced from (config, master seed) alone.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::Result;

/// Written once per run as `manifest.txt` in the output directory.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub artifact_version: String,
    /// (file name, sha256 hex) for every emitted output.
    pub files: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(config_hash: String, master_seed: u64) -> Self {
        RunManifest {
            config_hash,
            master_seed,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            files: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "config_hash = {}", self.config_hash);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(s, "artifact_version = {}", self.artifact_version);
        for (name, digest) in &self.files {
            let _ = writeln!(s, "file {digest}  {name}");
        }
        s
    }
}

/// Writes run outputs into a directory, checksumming each file into the
/// manifest. Every CSV starts with a comment line carrying the config hash
/// and master seed.
pub struct RunWriter {
    dir: PathBuf,
    manifest: RunManifest,
}

impl RunWriter {
    pub fn new(dir: &Path, config_hash: String, master_seed: u64) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            manifest: RunManifest::new(config_hash, master_seed),
        })
    }

    /// Header comment prepended to every CSV output.
    pub fn csv_header(&self) -> String {
        format!(
            "# config_hash={} master_seed={}\n",
            self.manifest.config_hash, self.manifest.master_seed
        )
    }

    /// Write `body` (already headerless CSV or any payload) under `name`,
    /// prefixing CSVs with the run header.
    pub fn write_csv(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let contents = format!("{}{}", self.csv_header(), body);
        self.write_raw(name, contents.as_bytes())
    }

    pub fn write_raw(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        self.manifest
            .files
            .push((name.to_string(), hex::encode(Sha256::digest(contents))));
        Ok(path)
    }

    /// Finish the run: write `manifest.txt` and return the manifest.
    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.files.sort();
        let path = self.dir.join("manifest.txt");
        std::fs::write(&path, self.manifest.render())?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_written_files_with_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = RunWriter::new(dir.path(), "abc123".into(), 7).unwrap();
        w.write_csv("stats.csv", "a,b\n1,2\n").unwrap();
        let manifest = w.finish().unwrap();
        assert_eq!(manifest.files.len(), 1);
        assert_eq!(manifest.files[0].0, "stats.csv");

        let on_disk = std::fs::read_to_string(dir.path().join("stats.csv")).unwrap();
        assert!(on_disk.starts_with("# config_hash=abc123 master_seed=7\n"));
        let digest = hex::encode(Sha256::digest(on_disk.as_bytes()));
        assert_eq!(manifest.files[0].1, digest);

        let rendered = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert!(rendered.contains("config_hash = abc123"));
        assert!(rendered.contains(&digest));
    }
}
