//! Reference values with the oracle that produced them.
//!
//! The store shipped with the tool is compiled in; `SPHERE_OEP_GOLDEN`
//! points to a replacement file.

use serde::{Deserialize, Serialize};
use sphere_oep::NonlinearityDesc;

use crate::{CliError, CliResult};

pub const GOLDEN_ENV: &str = "SPHERE_OEP_GOLDEN";
const BUILTIN: &str = include_str!("../golden.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenKey {
    pub f: NonlinearityDesc,
    #[serde(rename = "M")]
    pub max_value: f64,
    /// Model height, absent for quantities that depend on `M` only.
    #[serde(rename = "R")]
    pub height: Option<f64>,
    pub quantity: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenEntry {
    #[serde(flatten)]
    pub key: GoldenKey,
    pub value: f64,
    pub tolerance: f64,
    pub oracle: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoldenStore {
    entries: Vec<GoldenEntry>,
}

impl GoldenStore {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled golden store parses")
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let store: Self = serde_json::from_str(text)?;
        store.validate()?;
        Ok(store)
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The file named by `SPHERE_OEP_GOLDEN` if set, else the bundled store.
    pub fn from_env() -> CliResult<Self> {
        match std::env::var_os(GOLDEN_ENV) {
            Some(p) => Self::load(std::path::Path::new(&p)),
            None => Ok(Self::builtin()),
        }
    }

    fn validate(&self) -> CliResult<()> {
        for e in &self.entries {
            if e.oracle.trim().is_empty() {
                return Err(CliError(format!("golden value {} has no oracle description", e.key.quantity)));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[GoldenEntry] {
        &self.entries
    }

    /// Exact-key lookup.
    pub fn get(&self, key: &GoldenKey) -> Option<&GoldenEntry> {
        self.entries.iter().find(|e| e.key == *key)
    }

    pub fn insert(&mut self, entry: GoldenEntry) -> CliResult<()> {
        if entry.oracle.trim().is_empty() {
            return Err(CliError("golden value without oracle description".into()));
        }
        match self.entries.iter_mut().find(|e| e.key == entry.key) {
            Some(old) => *old = entry,
            None => self.entries.push(entry),
        }
        Ok(())
    }
}
