//! Append-only per-category log of previously scored videos, the history
//! behind unpopularity alerts.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::error::{AppError, Result};

/// One file per category under `dir`, one score per line. Writes are
/// serialized through a lock; reads see every completed append.
#[derive(Debug)]
pub struct ScoreLog {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl ScoreLog {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
        Ok(ScoreLog {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    /// Category names are hex-encoded so any string maps to a safe, distinct file name.
    fn path(&self, category: &str) -> PathBuf {
        self.dir.join(format!("{}.log", hex::encode(category.as_bytes())))
    }

    pub fn history(&self, category: &str) -> Result<Vec<f64>> {
        read_scores(&self.path(category))
    }

    /// Every logged `(category, score)`, grouped by category in name order.
    pub fn pooled(&self) -> Result<Vec<(String, f64)>> {
        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        let entries = std::fs::read_dir(&self.dir).map_err(|e| AppError::io(&self.dir, e))?;
        let mut categories: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                let stem = name.strip_suffix(".log")?;
                String::from_utf8(hex::decode(stem).ok()?).ok()
            })
            .collect();
        categories.sort();
        let mut out = Vec::new();
        for c in categories {
            let scores = read_scores(&self.path(&c))?;
            out.extend(scores.into_iter().map(|s| (c.clone(), s)));
        }
        Ok(out)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn append(&self, category: &str, score: f64) -> Result<()> {
        if !score.is_finite() {
            return Err(AppError::Config(format!("refusing to log non-finite score {score}")));
        }
        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        let path = self.path(category);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| AppError::io(&path, e))?;
        writeln!(f, "{score:?}").map_err(|e| AppError::io(&path, e))
    }
}

fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(AppError::io(path, e)),
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| AppError::Format(format!("{} line {}: {l:?} is not a score", path.display(), i + 1)))
        })
        .collect()
}
