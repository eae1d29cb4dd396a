//! File formats owned by the command-line tool.

use std::path::{Path, PathBuf};

use grasslearn::manifold::GrassmannPoint;
use grasslearn::numerics::io;
use grasslearn::{Error, Matrix, Result};
use serde::{Deserialize, Serialize};

/// Subspaces stored as JSON, optionally labeled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceFile {
    pub points: Vec<GrassmannPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn read_subspaces(path: &Path) -> Result<SubspaceFile> {
    let f: SubspaceFile = read_json(path)?;
    if f.points.is_empty() {
        return Err(Error::Parse {
            path: path.to_owned(),
            message: "no points".into(),
        });
    }
    if let Some(l) = &f.labels {
        if l.len() != f.points.len() {
            return Err(Error::Parse {
                path: path.to_owned(),
                message: format!("{} points but {} labels", f.points.len(), l.len()),
            });
        }
    }
    Ok(f)
}

/// Output directory that collects every file written by one run.
pub struct OutDir {
    dir: Option<PathBuf>,
    written: Vec<String>,
}

impl OutDir {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self {
            dir: dir.map(Path::to_owned),
            written: Vec::new(),
        })
    }

    pub fn required(dir: &Path) -> Result<Self> {
        Self::new(Some(dir))
    }

    fn target(&mut self, name: &str) -> Option<PathBuf> {
        let path = self.dir.as_ref()?.join(name);
        self.written.push(path.display().to_string());
        Some(path)
    }

    pub fn matrix(&mut self, name: &str, m: &Matrix) -> Result<()> {
        match self.target(name) {
            Some(p) => io::write_matrix(p, m),
            None => Ok(()),
        }
    }

    pub fn labels(&mut self, name: &str, labels: &[usize]) -> Result<()> {
        match self.target(name) {
            Some(p) => io::write_labels(p, labels),
            None => Ok(()),
        }
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        match self.target(name) {
            Some(p) => write_json(&p, value),
            None => Ok(()),
        }
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

pub fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
