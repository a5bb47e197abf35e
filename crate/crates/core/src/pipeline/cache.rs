use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Environment variable naming the stage cache directory.
pub const CACHE_ENV: &str = "CONLEY_CACHE_DIR";

/// Per-stage results on disk, keyed by the config hash. Unreadable or stale
/// entries are ignored and recomputed.
#[derive(Clone, Debug)]
pub struct StageCache {
    dir: PathBuf,
}

impl StageCache {
    pub fn new(dir: impl Into<PathBuf>) -> StageCache {
        StageCache { dir: dir.into() }
    }

    pub fn from_env() -> Option<StageCache> {
        std::env::var_os(CACHE_ENV)
            .filter(|v| !v.is_empty())
            .map(StageCache::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str, stage: &str) -> PathBuf {
        self.dir.join(format!("{key}-{stage}.json"))
    }

    pub fn load<T: DeserializeOwned>(&self, key: &str, stage: &str) -> Option<T> {
        let text = fs::read_to_string(self.path(key, stage)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Best effort: a failed write only costs a recomputation later.
    pub fn store<T: Serialize>(&self, key: &str, stage: &str, value: &T) {
        if fs::create_dir_all(&self.dir).is_err() {
            return;
        }
        let Ok(text) = serde_json::to_string(value) else { return };
        let tmp = self.path(key, &format!("{stage}.tmp"));
        if fs::write(&tmp, text).is_ok() {
            let _ = fs::rename(&tmp, self.path(key, stage));
        }
    }
}
