//! Content-named proof dependencies pooled across projects.
//!
//! One file `<content name>.deps` per theorem conjunct; each line is one
//! proof, its dependency content names separated by spaces.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::cache::{CacheError, FileLock, DEFAULT_LOCK_TIMEOUT};
use super::KnowledgeError;

pub type Proof = BTreeSet<String>;

#[derive(Clone, Debug)]
pub struct CommonStore {
    dir: PathBuf,
}

impl CommonStore {
    pub fn new(dir: impl Into<PathBuf>) -> CommonStore {
        CommonStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, content: &str) -> PathBuf {
        self.dir.join(format!("{}.deps", content))
    }

    pub fn proofs(&self, content: &str) -> io::Result<Vec<Proof>> {
        match fs::read_to_string(self.path(content)) {
            Ok(text) => Ok(text.lines().map(|l| l.split_whitespace().map(str::to_string).collect()).collect()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(e),
        }
    }

    pub fn contains(&self, content: &str) -> bool {
        self.path(content).exists()
    }

    /// Append proofs not yet recorded, under the store-wide lock. Returns
    /// how many were new.
    pub fn add(&self, proofs: &BTreeMap<String, Vec<Proof>>) -> Result<usize, KnowledgeError> {
        fs::create_dir_all(&self.dir)?;
        let _lock = FileLock::acquire(&self.dir.join(".lock"), true, DEFAULT_LOCK_TIMEOUT).map_err(|e| match e {
            CacheError::Io(e) => KnowledgeError::Io(e),
            e => KnowledgeError::Locked(e.to_string()),
        })?;
        let mut added = 0;
        for (content, ps) in proofs {
            let mut known = self.proofs(content)?;
            let mut f = None;
            for p in ps {
                if known.contains(p) {
                    continue;
                }
                let file = match &mut f {
                    Some(file) => file,
                    None => f.insert(OpenOptions::new().create(true).append(true).open(self.path(content))?),
                };
                let line: Vec<&str> = p.iter().map(String::as_str).collect();
                writeln!(file, "{}", line.join(" "))?;
                known.push(p.clone());
                added += 1;
            }
        }
        Ok(added)
    }

    /// Number of content names with at least one proof.
    pub fn len(&self) -> io::Result<usize> {
        match fs::read_dir(&self.dir) {
            Ok(rd) => {
                Ok(rd.filter_map(Result::ok).filter(|e| e.file_name().to_string_lossy().ends_with(".deps")).count())
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(0),
            Err(e) => Err(e),
        }
    }

    pub fn is_empty(&self) -> io::Result<bool> {
        Ok(self.len()? == 0)
    }
}
