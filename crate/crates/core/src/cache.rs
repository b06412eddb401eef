//! Content-addressed JSON cache for expensive results.
//!
//! Each entry lives in `<dir>/<key>.json`, where the key is the SHA-256 of the
//! canonical JSON of `(format version, subject, parameters)`. Entries carry no
//! timestamps, so a hit is byte-identical to a fresh computation with the same
//! parameters. Writes go to a temporary file that is renamed into place.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Environment variable overriding the cache directory.
pub const CACHE_ENV: &str = "STABLE_CONES_CACHE";

/// Bumped whenever a cached payload changes meaning.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    version: u32,
    tool: String,
    subject: String,
    key: String,
    params: Value,
    payload: Value,
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// `$STABLE_CONES_CACHE` if set, otherwise `default`.
    pub fn from_env(default: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Self::new(d),
            _ => Self::new(default),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key<P: Serialize>(subject: &str, params: &P) -> Result<String> {
        // serde_json maps are ordered, so this is canonical
        let canonical = serde_json::to_string(&serde_json::json!({
            "version": FORMAT_VERSION,
            "subject": subject,
            "params": serde_json::to_value(params)?,
        }))?;
        Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// The cached payload, or `None` when absent, unreadable or written by an
    /// incompatible format version.
    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Option<T> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        let entry: Entry = serde_json::from_str(&text).ok()?;
        if entry.version != FORMAT_VERSION || entry.key != key {
            return None;
        }
        serde_json::from_value(entry.payload).ok()
    }

    pub fn put<P: Serialize, T: Serialize>(&self, subject: &str, params: &P, payload: &T) -> Result<String> {
        let key = Self::key(subject, params)?;
        let entry = Entry {
            version: FORMAT_VERSION,
            tool: env!("CARGO_PKG_VERSION").to_string(),
            subject: subject.to_string(),
            key: key.clone(),
            params: serde_json::to_value(params)?,
            payload: serde_json::to_value(payload)?,
        };
        fs::create_dir_all(&self.dir)?;
        let target = self.path(&key);
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(serde_json::to_string_pretty(&entry)?.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)?;
        Ok(key)
    }

    /// Cached payload for `(subject, params)` or the result of `compute`,
    /// which is then stored. The flag reports a hit.
    pub fn get_or_compute<P, T, F>(&self, subject: &str, params: &P, compute: F) -> Result<(T, bool)>
    where
        P: Serialize,
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let key = Self::key(subject, params)?;
        if let Some(v) = self.get(&key) {
            return Ok((v, true));
        }
        let v = compute()?;
        self.put(subject, params, &v)?;
        Ok((v, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_depend_on_subject_and_params() {
        let a = Cache::key("aperture", &(3, 0.5)).unwrap();
        assert_eq!(a, Cache::key("aperture", &(3, 0.5)).unwrap());
        assert_ne!(a, Cache::key("aperture", &(3, 0.6)).unwrap());
        assert_ne!(a, Cache::key("table", &(3, 0.5)).unwrap());
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn round_trip_and_hit_flag() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let mut calls = 0;
        let (v, hit) = cache
            .get_or_compute("x", &1u8, || {
                calls += 1;
                Ok(vec![1.5f64, 2.0])
            })
            .unwrap();
        assert!(!hit);
        let key = Cache::key("x", &1u8).unwrap();
        let first = fs::read(cache.path(&key)).unwrap();
        let (w, hit): (Vec<f64>, bool) = cache.get_or_compute("x", &1u8, || unreachable!()).unwrap();
        assert!(hit);
        assert_eq!(v, w);
        assert_eq!(calls, 1);
        cache.put("x", &1u8, &v).unwrap();
        assert_eq!(first, fs::read(cache.path(&key)).unwrap());
    }

    #[test]
    fn stale_versions_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let key = cache.put("x", &0u8, &42u32).unwrap();
        let path = cache.path(&key);
        let text = fs::read_to_string(&path).unwrap().replace("\"version\": 1", "\"version\": 0");
        fs::write(&path, text).unwrap();
        assert_eq!(cache.get::<u32>(&key), None);
        fs::write(&path, "not json").unwrap();
        assert_eq!(cache.get::<u32>(&key), None);
    }

    #[test]
    fn floats_survive_the_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let v = vec![0.47402861447573597f64, 1.0 / 3.0, 1e-300, f64::MAX];
        let key = cache.put("f", &0u8, &v).unwrap();
        assert_eq!(cache.get::<Vec<f64>>(&key).unwrap(), v);
    }
}
