use std::fs;
use std::path::{Path, PathBuf};

use dynwm::Result;
use sha2::{Digest, Sha256};

/// What every emitted file records about how it was produced.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: &'static str,
    pub config_sha256: String,
    pub master_seed: u64,
    pub paper_design: bool,
}

impl Provenance {
    pub fn new(command: &'static str, resolved_config: &str, master_seed: u64, paper_design: bool) -> Self {
        Self {
            command,
            config_sha256: hex::encode(Sha256::digest(resolved_config.as_bytes())),
            master_seed,
            paper_design,
        }
    }

    /// `#` comment rows; valid at the top of both CSV and TOML files.
    pub fn header(&self) -> String {
        let mut h = format!(
            "# dynwm {}\n# command: {}\n# config_sha256: {}\n# master_seed: {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.config_sha256,
            self.master_seed
        );
        if self.paper_design {
            h.push_str("# design: reference\n");
        }
        h
    }
}

pub struct OutputDir {
    dir: PathBuf,
    provenance: Provenance,
}

impl OutputDir {
    pub fn create(dir: &Path, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            provenance,
        })
    }

    /// Writes `body` under the provenance header and returns the file path.
    pub fn write(&self, name: &str, body: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut bytes = self.provenance.header().into_bytes();
        bytes.extend_from_slice(body);
        fs::write(&path, bytes)?;
        Ok(path)
    }

    /// Like [`write`](Self::write) for content produced by a writer callback.
    pub fn write_with<F>(&self, name: &str, fill: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut body = Vec::new();
        fill(&mut body)?;
        self.write(name, &body)
    }
}
