//! Per-run manifests: what was run, with which configuration and seed, and
//! the digests of what it read and wrote.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the subcommand, as given.
    pub args: Vec<String>,
    pub config_path: PathBuf,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub started_at: String,
    pub finished_at: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> std::io::Result<FileDigest> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    let mut bytes = 0u64;
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: hex::encode(hasher.finalize()),
        bytes,
    })
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn begin(command: &str, args: Vec<String>, config_path: &Path, config_bytes: &[u8], seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args,
            config_path: config_path.to_path_buf(),
            config_sha256: sha256_bytes(config_bytes),
            seed,
            started_at: now_rfc3339(),
            finished_at: String::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Digests every path and stamps the finish time.
    pub fn finish(mut self, inputs: &[PathBuf], outputs: &[PathBuf]) -> std::io::Result<Self> {
        self.inputs = inputs.iter().map(|p| digest_file(p)).collect::<Result<_, _>>()?;
        self.outputs = outputs.iter().map(|p| digest_file(p)).collect::<Result<_, _>>()?;
        self.finished_at = now_rfc3339();
        Ok(self)
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(path, text)
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digests_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("a.txt");
        std::fs::write(&f, "abc").unwrap();
        let d = digest_file(&f).unwrap();
        assert_eq!(d.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(d.bytes, 3);

        let m = RunManifest::begin("ingest", vec!["--seed".into(), "1".into()], Path::new("c.toml"), b"seed = 1", Some(1))
            .finish(&[f.clone()], &[f])
            .unwrap();
        let p = dir.path().join("m/manifest.json");
        m.write(&p).unwrap();
        assert_eq!(RunManifest::read(&p).unwrap(), m);
        assert_eq!(m.config_sha256, sha256_bytes(b"seed = 1"));
        assert!(m.started_at.ends_with('Z'));
    }
}
