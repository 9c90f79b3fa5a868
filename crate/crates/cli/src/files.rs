//! Directory layouts shared between subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use gbrnmf_core::io::{read_matrix, write_matrix};
use gbrnmf_core::{Model, NonnegMatrix};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::failure::Failure;

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Metadata written next to fitted factors.
#[derive(Debug, Serialize, serde::Deserialize)]
pub struct FitManifest {
    pub schema: u32,
    pub solver: String,
    pub termination: String,
    pub iterations: usize,
    pub final_objective: f64,
    pub seed: u64,
    pub restarts: usize,
    pub q: usize,
    pub g: usize,
    pub k: usize,
}

pub struct ModelDir(pub PathBuf);

impl ModelDir {
    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn write_factors(&self, w: &NonnegMatrix, a: &NonnegMatrix, s: &NonnegMatrix) -> Result<(), Failure> {
        write_matrix(self.path("w.csv"), w)?;
        write_matrix(self.path("a.csv"), a)?;
        write_matrix(self.path("s.csv"), s)?;
        Ok(())
    }

    /// Loads `w.csv`, `a.csv`, `s.csv`, masked according to `report.json`
    /// when present.
    pub fn load(&self) -> Result<Model, Failure> {
        let w = read_matrix(self.path("w.csv"), false)?;
        let a = read_matrix(self.path("a.csv"), false)?;
        let s = read_matrix(self.path("s.csv"), false)?;
        let report = self.path("report.json");
        let (g, k) = if report.exists() {
            let m: FitManifest = read_json(&report)?;
            (m.g, m.k)
        } else {
            (0, 0)
        };
        Ok(Model::with_layout(w, a, s, g, k)?)
    }
}
