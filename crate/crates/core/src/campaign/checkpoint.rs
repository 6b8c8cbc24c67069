use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

use super::simulate::QueryTallies;
use crate::error::Result;

/// Subdirectory of the output directory holding partial tallies.
pub const CHECKPOINT_DIR: &str = ".checkpoints";

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    fingerprint: String,
    completed: u64,
    tallies: QueryTallies,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Identifies everything that determines a query's tallies.
pub(super) fn fingerprint(parts: &str) -> String {
    format!("{:016x}", fnv1a(parts.as_bytes()))
}

pub(super) fn path(dir: &Path, fingerprint: &str) -> PathBuf {
    dir.join(format!("query-{fingerprint}.json"))
}

/// Tallies and completed trial count from a matching checkpoint, if any.
pub(super) fn load(dir: &Path, fingerprint: &str) -> Option<(u64, QueryTallies)> {
    let text = fs::read_to_string(path(dir, fingerprint)).ok()?;
    let cp: Checkpoint = serde_json::from_str(&text).ok()?;
    (cp.fingerprint == fingerprint).then_some((cp.completed, cp.tallies))
}

pub(super) fn save(dir: &Path, fingerprint: &str, completed: u64, tallies: &QueryTallies) -> Result<()> {
    fs::create_dir_all(dir)?;
    let cp = Checkpoint { fingerprint: fingerprint.into(), completed, tallies: tallies.clone() };
    let target = path(dir, fingerprint);
    let tmp = target.with_extension("tmp");
    fs::write(&tmp, serde_json::to_vec(&cp)?)?;
    fs::rename(tmp, target)?;
    Ok(())
}

pub(super) fn clear(dir: &Path) -> Result<()> {
    if dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    Ok(())
}
