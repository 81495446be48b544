//! File-system response cache: one entry file per normalized query, guarded
//! by a per-entry `flock`ed lock file.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::os::fd::AsRawFd;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use md5::{Digest, Md5};

pub const DEFAULT_LOCK_TIMEOUT: Duration = Duration::from_secs(2);
const RETRY: Duration = Duration::from_millis(5);

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("timed out waiting for cache lock {0}")]
    LockTimeout(PathBuf),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Held `flock` on a lock file; released on drop.
pub struct FileLock {
    file: File,
}

impl FileLock {
    /// Try to take the lock until `timeout` elapses.
    pub fn acquire(path: &Path, exclusive: bool, timeout: Duration) -> Result<FileLock, CacheError> {
        let file = OpenOptions::new().create(true).truncate(false).write(true).open(path)?;
        let op = if exclusive { libc::LOCK_EX } else { libc::LOCK_SH } | libc::LOCK_NB;
        let start = Instant::now();
        loop {
            // SAFETY: the descriptor is owned by `file`, which outlives the call.
            if unsafe { libc::flock(file.as_raw_fd(), op) } == 0 {
                return Ok(FileLock { file });
            }
            let err = io::Error::last_os_error();
            if err.raw_os_error() != Some(libc::EWOULDBLOCK) && err.kind() != io::ErrorKind::Interrupted {
                return Err(err.into());
            }
            if start.elapsed() >= timeout {
                return Err(CacheError::LockTimeout(path.to_path_buf()));
            }
            thread::sleep(RETRY);
        }
    }
}

impl Drop for FileLock {
    fn drop(&mut self) {
        // SAFETY: see `acquire`.
        unsafe {
            libc::flock(self.file.as_raw_fd(), libc::LOCK_UN);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoreOutcome {
    Written,
    /// Another writer got there first; its entry is kept.
    AlreadyPresent,
}

#[derive(Clone, Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    pub lock_timeout: Duration,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> ResponseCache {
        ResponseCache { dir: dir.into(), lock_timeout: DEFAULT_LOCK_TIMEOUT }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// MD5 over project id and normalized query.
    pub fn key(project: &str, normalized_query: &str) -> String {
        let mut h = Md5::new();
        h.update(project.as_bytes());
        h.update([0u8]);
        h.update(normalized_query.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{}.entry", key))
    }

    fn lock_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{}.lock", key))
    }

    /// Recorded lines of an entry, or `None` on a miss.
    pub fn lookup(&self, key: &str) -> Result<Option<Vec<String>>, CacheError> {
        let path = self.entry_path(key);
        if !path.exists() {
            return Ok(None);
        }
        let _lock = FileLock::acquire(&self.lock_path(key), false, self.lock_timeout)?;
        match fs::read_to_string(&path) {
            Ok(text) => Ok(Some(text.lines().map(str::to_string).collect())),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Record `lines` under `key` unless an entry already exists.
    pub fn store(&self, key: &str, lines: &[String]) -> Result<StoreOutcome, CacheError> {
        fs::create_dir_all(&self.dir)?;
        let _lock = FileLock::acquire(&self.lock_path(key), true, self.lock_timeout)?;
        let path = self.entry_path(key);
        if path.exists() {
            return Ok(StoreOutcome::AlreadyPresent);
        }
        let tmp = self.dir.join(format!("{}.tmp{}", key, std::process::id()));
        {
            let mut f = File::create(&tmp)?;
            for l in lines {
                f.write_all(l.as_bytes())?;
                f.write_all(b"\n")?;
            }
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(StoreOutcome::Written)
    }

    /// Keys of all present entries.
    pub fn entries(&self) -> io::Result<Vec<String>> {
        let mut keys = Vec::new();
        let rd = match fs::read_dir(&self.dir) {
            Ok(rd) => rd,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(keys),
            Err(e) => return Err(e),
        };
        for e in rd {
            let name = e?.file_name().to_string_lossy().into_owned();
            if let Some(k) = name.strip_suffix(".entry") {
                keys.push(k.to_string());
            }
        }
        keys.sort();
        Ok(keys)
    }

    /// Remove every entry; returns how many were removed.
    pub fn clear(&self) -> io::Result<usize> {
        let keys = self.entries()?;
        for k in &keys {
            fs::remove_file(self.entry_path(k))?;
        }
        Ok(keys.len())
    }
}
