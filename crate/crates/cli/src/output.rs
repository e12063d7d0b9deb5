//! Artifact files. Every file starts with the tool version and the config hash; nothing
//! time-dependent is written, so equal inputs give byte-identical files.

use crate::CliError;
use hjlab::GridFunction;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const TOOL: &str = "hjlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(config_hash: String) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            config_hash,
        }
    }

    pub fn header_line(&self) -> String {
        format!("{} {} config_hash={}", self.tool, self.version, self.config_hash)
    }
}

#[derive(Serialize)]
struct Wrapped<'a, T> {
    provenance: &'a Provenance,
    report: &'a T,
}

pub struct Artifacts {
    dir: PathBuf,
    provenance: Provenance,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn create(dir: &Path, provenance: Provenance) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            provenance,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write(&mut self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, report: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(&Wrapped {
            provenance: &self.provenance,
            report,
        })
        .map_err(|e| CliError::Config(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }

    /// A comma-separated table behind a `#` provenance line.
    pub fn csv<R, I>(&mut self, name: &str, columns: &[&str], rows: I) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut text = format!("# {}\n{}\n", self.provenance.header_line(), columns.join(","));
        for row in rows {
            let cells: Vec<String> = row.into_iter().collect();
            let _ = writeln!(text, "{}", cells.join(","));
        }
        self.write(name, &text)
    }

    /// `(t, value)` curve.
    pub fn curve(&mut self, name: &str, value: &str, points: &[(f64, f64)]) -> Result<PathBuf, CliError> {
        self.csv(name, &["t", value], points.iter().map(|(t, v)| [t.to_string(), v.to_string()]))
    }

    pub fn grid_function(&mut self, name: &str, f: &GridFunction) -> Result<PathBuf, CliError> {
        let text = f.to_csv(&[self.provenance.header_line()]);
        self.write(name, &text)
    }
}

/// Optional value as a CSV cell.
pub fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}
