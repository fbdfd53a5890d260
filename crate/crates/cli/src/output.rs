use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cgl_core::Trajectory;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Output directory that remembers what it wrote. Every file is written to a
/// temporary name and renamed into place.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileRecord>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io(&tmp))?;
    f.write_all(bytes).map_err(io(&tmp))?;
    f.sync_all().map_err(io(&tmp))?;
    fs::rename(&tmp, path).map_err(io(path))
}

impl OutputDir {
    /// Creates `root` and removes a manifest left by an earlier run.
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(io(root))?;
        let manifest = root.join(MANIFEST);
        if manifest.exists() {
            fs::remove_file(&manifest).map_err(io(&manifest))?;
        }
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.root.join(name), bytes)?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileRecord {
            name: name.to_string(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes the manifest, which must be the last file of a run.
    pub fn finish<T: Serialize>(self, manifest: &T) -> Result<PathBuf, CliError> {
        let path = self.root.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(manifest)?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

/// Round-trip decimal formatting (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Per-sample diagnostics as CSV with columns `t,l2_sq,phi,psi_q,residual`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,l2_sq,phi,psi_q,residual\n");
    for (t, d) in traj.times.iter().zip(&traj.diagnostics) {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            num(*t),
            num(d.l2_sq),
            num(d.phi),
            num(d.psi_q),
            num(d.residual)
        ));
    }
    out
}
