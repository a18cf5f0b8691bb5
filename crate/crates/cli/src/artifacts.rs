//! Output directory handling: atomic writes and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use irlink_core::{Error, ExperimentConfig, Result, VERSION};

pub const MANIFEST: &str = "manifest.txt";

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Output directory; every file goes through [`OutDir::write`].
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    /// Writes `name` via a temporary sibling and a rename.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let tmp = self.root.join(format!(".{name}.tmp"));
        let dst = self.root.join(name);
        let mut f = fs::File::create(&tmp).map_err(|e| io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| io(&tmp, e))?;
        f.sync_all().map_err(|e| io(&tmp, e))?;
        fs::rename(&tmp, &dst).map_err(|e| io(&dst, e))
    }

    /// Like [`OutDir::write`] for producers that need a path.
    pub fn write_with(&self, name: &str, produce: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let tmp = self.root.join(format!(".{name}.tmp"));
        let dst = self.root.join(name);
        produce(&tmp)?;
        fs::rename(&tmp, &dst).map_err(|e| io(&dst, e))
    }

    /// The manifest is itself a valid config file: comments carry the tool
    /// version, command and artifact list.
    pub fn write_manifest(&self, verb: &str, cfg: &ExperimentConfig, artifacts: &[&str]) -> Result<()> {
        let mut text = format!("# irlink {VERSION}\n# command: {verb}\n");
        for a in artifacts {
            text.push_str(&format!("# artifact: {a}\n"));
        }
        text.push_str(&cfg.render());
        self.write(MANIFEST, text.as_bytes())
    }
}
