use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Stage};
use crate::output::OutputDir;
use crate::Command;

pub const SIDECAR_NAME: &str = "run.json";

/// What produced a set of outputs: the full command with its arguments and
/// the library version. Keys serialize in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tool: String,
    pub version: String,
    pub command: Command,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            tool: "phasemotion".into(),
            version: phasemotion::VERSION.into(),
            command,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, out: &mut OutputDir) -> CliResult<()> {
        let path = out.file(SIDECAR_NAME);
        phasemotion::frame_io::write_atomic(&path, self.to_json().as_bytes())
            .stage("write run.json")
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).stage("read run config")?;
        let config: Self = serde_json::from_str(&text).stage("parse run config")?;
        if matches!(config.command, Command::Replay(_)) {
            return Err(CliError::new(
                "parse run config",
                "a run config cannot replay another",
            ));
        }
        Ok(config)
    }
}
