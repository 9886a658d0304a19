//! Seeded sampling. Each sampler derives its own ChaCha stream from the run
//! seed and a fixed label, so adding a sampler never shifts another's draws.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Vertex;

/// Inspection mode of a checker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

impl Mode {
    /// Text recorded in reports: `exhaustive` or `seeded:<seed>`.
    pub fn tag(&self) -> String {
        match self {
            Mode::Exhaustive => "exhaustive".to_string(),
            Mode::Sampled { seed, .. } => format!("seeded:{seed}"),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exhaustive => write!(f, "exhaustive"),
            Mode::Sampled { count, .. } => write!(f, "sample({count})"),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("invalid mode {0:?}: expected `exhaustive` or `sample(<count>)`")]
pub struct ModeParseError(pub String);

impl Mode {
    /// Parses `exhaustive` or `sample(<count>)` / `sample:<count>`.
    pub fn parse(text: &str, seed: u64) -> Result<Mode, ModeParseError> {
        let t = text.trim();
        if t == "exhaustive" {
            return Ok(Mode::Exhaustive);
        }
        let inner = t
            .strip_prefix("sample(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| t.strip_prefix("sample:"));
        match inner.map(usize::from_str) {
            Some(Ok(count)) if count > 0 => Ok(Mode::Sampled { count, seed }),
            _ => Err(ModeParseError(text.to_string())),
        }
    }
}

/// FNV-1a, used only to separate sampler streams.
fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Deterministic generator for `(seed, label)`.
pub fn rng_for(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ label_hash(label).rotate_left(17))
}

/// Up to `k` distinct elements of `pool`, in pool order. Returns the whole pool
/// when it is no larger than `k`.
pub fn choose(pool: &[Vertex], k: usize, seed: u64, label: &str) -> Vec<Vertex> {
    if pool.len() <= k {
        return pool.to_vec();
    }
    let mut rng = rng_for(seed, label);
    let mut idx = sample(&mut rng, pool.len(), k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| pool[i]).collect()
}
