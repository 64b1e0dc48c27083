use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::srm::MonitorState;

const STATE_VERSION: u32 = 1;

/// Monitor states keyed by experiment, then segment (`all` for the aggregate).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersistedMonitorState {
    pub version: u32,
    pub experiments: BTreeMap<String, BTreeMap<String, MonitorState>>,
}

impl PersistedMonitorState {
    pub fn new() -> Self {
        Self {
            version: STATE_VERSION,
            experiments: BTreeMap::new(),
        }
    }

    /// A missing file is an empty state. A file that does not parse is an error.
    pub fn load(path: &Path) -> Result<Self> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(e) => return Err(Error::io(path, e)),
        };
        Self::from_json(&text).map_err(|e| Error::Validation(format!(
            "state file {}: {e}",
            path.display()
        )))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let state: Self = serde_json::from_str(text)?;
        if state.version != STATE_VERSION {
            return Err(Error::Validation(format!(
                "unsupported state version {}",
                state.version
            )));
        }
        Ok(state)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Write to a sibling temp file, then rename over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("state");
        let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
        let write = || -> std::io::Result<()> {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(self.to_json().map_err(std::io::Error::other)?.as_bytes())?;
            f.sync_all()?;
            std::fs::rename(&tmp, path)
        };
        write().map_err(|e| {
            let _ = std::fs::remove_file(&tmp);
            Error::io(path, e)
        })
    }

    pub fn get(&self, experiment: &str, segment: &str) -> MonitorState {
        self.experiments
            .get(experiment)
            .and_then(|m| m.get(segment))
            .copied()
            .unwrap_or_default()
    }

    pub fn set(&mut self, experiment: &str, segment: &str, state: MonitorState) {
        self.experiments
            .entry(experiment.to_string())
            .or_default()
            .insert(segment.to_string(), state);
    }
}
