use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::Global;

/// How a run ended when it did not succeed.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Check(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Check(_) => 3,
            Failure::Internal(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation error: {m}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<uscx_core::Error> for Failure {
    fn from(e: uscx_core::Error) -> Self {
        use uscx_core::Error::*;
        match e {
            StoppingRuleStarved(_) | Io(_) => Failure::Internal(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(format!("{e:#}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

pub type Outcome<T = ()> = std::result::Result<T, Failure>;

pub fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

/// The command's config block, or its defaults when no file is given.
pub fn load<T: DeserializeOwned + Default>(g: &Global) -> Outcome<T> {
    match &g.config {
        None => Ok(T::default()),
        Some(path) => parse_file(path),
    }
}

fn parse_file<T: DeserializeOwned>(path: &Path) -> Outcome<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Flag, then config, then `USCX_SEED`.
pub fn resolve_seed(g: &Global, from_config: Option<u64>) -> Outcome<u64> {
    if let Some(s) = g.seed.or(from_config) {
        return Ok(s);
    }
    match std::env::var("USCX_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| invalid(format!("USCX_SEED is not a u64: `{v}`"))),
        Err(_) => Err(invalid("no seed: pass --seed, set it in the config or set USCX_SEED")),
    }
}
