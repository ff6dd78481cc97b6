//! On-disk table cache, enabled by pointing `HARDY_KERNELS_CACHE` at a
//! directory. Entries are keyed by a hash of everything that determines the
//! table.

use std::path::PathBuf;

use hardy_kernels_core::table::KernelTable;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::format::{read_table, write_table};

pub const CACHE_ENV: &str = "HARDY_KERNELS_CACHE";

pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

pub fn cache_key(inputs: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(inputs).expect("cache keys serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Returns the cached table for `inputs`, building and storing it on a miss.
pub fn cached_table(inputs: &impl Serialize, build: impl FnOnce() -> Result<KernelTable>) -> Result<KernelTable> {
    let Some(dir) = cache_dir() else { return build() };
    let path = dir.join(format!("{}.hkt", cache_key(inputs)));
    if path.exists() {
        return read_table(&path);
    }
    let table = build()?;
    std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    write_table(&table, &path)?;
    Ok(table)
}
