//! On-disk JSON caches shared by the sampling, validation and embedding
//! phases. Writes go to a temp file in the target directory and are renamed
//! into place, so readers never see partial files and concurrent writers of
//! identical content are harmless.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Maps an arbitrary identifier onto a single safe path component.
pub fn path_component(raw: &str) -> String {
    let cleaned: String = raw
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    match cleaned.as_str() {
        "" | "." | ".." => format!("_{cleaned}"),
        _ => cleaned,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_json_atomic<T: Serialize + ?Sized>(path: &Path, value: &T) -> io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes_atomic(path, &bytes)
}

pub fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Reads a cached JSON value. A missing file is `Ok(None)`; a corrupt one is
/// treated as missing so an interrupted run recomputes it.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> io::Result<Option<T>> {
    match fs::read(path) {
        Ok(bytes) => match serde_json::from_slice(&bytes) {
            Ok(v) => Ok(Some(v)),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                Ok(None)
            }
        },
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

/// Root of the cache tree (`samples/`, `outcomes/`, `embeddings/`).
#[derive(Debug, Clone)]
pub struct CacheDir {
    root: PathBuf,
}

impl CacheDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn samples(&self) -> PathBuf {
        self.root.join("samples")
    }

    pub fn outcomes(&self) -> PathBuf {
        self.root.join("outcomes")
    }

    pub fn embeddings(&self) -> PathBuf {
        self.root.join("embeddings")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_components_are_flat() {
        assert_eq!(path_component("JxPath-20"), "JxPath-20");
        assert_eq!(path_component("a/b"), "a_b");
        assert_eq!(path_component(".."), "_..");
        assert_eq!(path_component(""), "_");
    }

    #[test]
    fn atomic_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x/y.json");
        write_json_atomic(&path, &vec![1, 2, 3]).unwrap();
        let back: Option<Vec<i32>> = read_json(&path).unwrap();
        assert_eq!(back, Some(vec![1, 2, 3]));
        let missing: Option<Vec<i32>> = read_json(&dir.path().join("nope.json")).unwrap();
        assert_eq!(missing, None);
        fs::write(&path, b"{trunc").unwrap();
        let corrupt: Option<Vec<i32>> = read_json(&path).unwrap();
        assert_eq!(corrupt, None);
    }
}
