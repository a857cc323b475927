use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::io::{self, IoError};

/// Who produced an output, from what, and with which parameters. Contains
/// no timestamps, so identical runs produce identical provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Input name to hex SHA-256 of its content.
    pub inputs: BTreeMap<String, String>,
    pub params: BTreeMap<String, Value>,
}

impl Provenance {
    pub fn new(command: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            inputs: BTreeMap::new(),
            params: BTreeMap::new(),
        }
    }

    pub fn input(mut self, name: &str, content: &[u8]) -> Self {
        self.inputs.insert(name.into(), io::digest(content));
        self
    }

    pub fn param(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.params.insert(name.into(), value.into());
        self
    }

    /// `<output>.provenance.json` next to a JSONL output.
    pub fn sidecar_path(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".provenance.json");
        PathBuf::from(name)
    }

    pub fn write_sidecar(&self, output: &Path) -> Result<(), IoError> {
        let mut f = io::create_file(&Self::sidecar_path(output))?;
        serde_json::to_writer_pretty(&mut f, self)?;
        std::io::Write::write_all(&mut f, b"\n")?;
        Ok(())
    }
}
