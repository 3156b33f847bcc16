//! Resolved-config echoing: every artifact embeds the exact configuration
//! that produced it, plus the tool version, so any run can be reproduced
//! bit-for-bit from its own outputs.

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use skelattack_core::motion::io::write_atomic;

pub fn tool_version() -> String {
    format!("skelattack v{}", env!("CARGO_PKG_VERSION"))
}

/// Wrapper embedded in every JSON artifact.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest<C> {
    pub tool_version: String,
    pub command: String,
    pub config: C,
}

impl<C: Serialize> Manifest<C> {
    pub fn new(command: &str, config: C) -> Self {
        Self { tool_version: tool_version(), command: command.into(), config }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Load a config file for `--config`. Accepts either a bare config object or
/// a previously written manifest (whose `config` field is taken).
pub fn load_config_file<C: DeserializeOwned>(path: &Path) -> Result<C> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(manifest) = serde_json::from_slice::<Manifest<C>>(&bytes) {
        return Ok(manifest.config);
    }
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// CSV artifacts carry the config echo as a `#` comment header line.
pub fn csv_config_line<C: Serialize>(command: &str, config: &C) -> Result<String> {
    Ok(format!(
        "# {} {} config={}",
        tool_version(),
        command,
        serde_json::to_string(config)?
    ))
}
