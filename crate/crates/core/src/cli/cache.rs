use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bloch::Stack1D;
use crate::error::{Error, Result};
use crate::qed_mass::{CutoffConfig, MassCoefficients};

/// Bumped whenever cached content would change for the same inputs.
pub const CACHE_VERSION: u32 = 1;

/// Content hash of everything that determines a mass computation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey(String);

#[derive(Serialize)]
struct KeyInput<'a> {
    version: u32,
    stack: &'a Stack1D,
    cutoff: &'a CutoffConfig,
}

impl CacheKey {
    /// The resolved stack is hashed, so a table is keyed by its samples, not its path.
    pub fn new(stack: &Stack1D, cutoff: &CutoffConfig) -> Self {
        let input = KeyInput {
            version: CACHE_VERSION,
            stack,
            cutoff,
        };
        let json = serde_json::to_vec(&input).expect("key input serializes");
        let digest = Sha256::digest(&json);
        CacheKey(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Cached results of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub mass: MassCoefficients,
    pub bands_csv: String,
}

#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Cache { root: root.into() }
    }

    /// `PCION_CACHE_DIR`, else `$XDG_CACHE_HOME/pcion`, else `~/.cache/pcion`.
    pub fn from_env() -> Self {
        let root = std::env::var_os("PCION_CACHE_DIR")
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("XDG_CACHE_HOME").map(|d| PathBuf::from(d).join("pcion")))
            .or_else(|| std::env::var_os("HOME").map(|d| PathBuf::from(d).join(".cache").join("pcion")))
            .unwrap_or_else(|| std::env::temp_dir().join("pcion-cache"));
        Cache::new(root)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, key: &CacheKey) -> PathBuf {
        self.root.join(key.as_str())
    }

    /// A missing or unreadable entry is a miss.
    pub fn load(&self, key: &CacheKey) -> Option<CacheEntry> {
        let dir = self.dir(key);
        let mass = std::fs::read_to_string(dir.join("mass.json")).ok()?;
        let bands_csv = std::fs::read_to_string(dir.join("bands.csv")).ok()?;
        let mass = serde_json::from_str(&mass).ok()?;
        Some(CacheEntry { mass, bands_csv })
    }

    /// Writes each file under a temporary name and renames it into place.
    pub fn store(&self, key: &CacheKey, entry: &CacheEntry) -> Result<()> {
        let dir = self.dir(key);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mass = serde_json::to_string(&entry.mass).map_err(|e| Error::Config(e.to_string()))?;
        // bands first: `load` needs both files, and mass.json lands last
        atomic_write(&dir.join("bands.csv"), entry.bands_csv.as_bytes())?;
        atomic_write(&dir.join("mass.json"), mass.as_bytes())
    }
}

/// Write-then-rename so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
