use std::path::{Path, PathBuf};

use marchenko_kit::io::Table;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};
use crate::{Command, Failure};

/// SHA-256 over the canonical JSON of the command, the config without
/// its paths, and the input file contents. Canonical means
/// `serde_json::Value` with its sorted maps, so key order in the config
/// file does not matter.
pub fn config_hash(command: &Command, config: &RunConfig, input: Option<&[u8]>) -> String {
    let mut config = serde_json::to_value(config).expect("config serialises");
    if let Some(io) = config.get_mut("io").and_then(Value::as_object_mut) {
        io.remove("input");
        io.remove("output_dir");
    }
    let input = input.map(|bytes| hex::encode(Sha256::digest(bytes)));
    let canonical = json!({
        "command": serde_json::to_value(command).expect("command serialises"),
        "config": config,
        "input_sha256": input,
    });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    body: T,
}

pub struct Output {
    dir: PathBuf,
    format: Format,
    hash: String,
}

impl Output {
    pub fn new(dir: &Path, format: Format, hash: String) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::input(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Output { dir: dir.to_path_buf(), format, hash })
    }

    pub fn header(&self) -> String {
        format!("marchenko-kit config_hash={}", self.hash)
    }

    fn write(&self, name: &str, contents: String) -> Result<(), Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
        println!("{}", path.display());
        Ok(())
    }

    /// `<stem>.csv` or `<stem>.json` depending on the configured format.
    pub fn table(&self, stem: &str, table: &Table) -> Result<(), Failure> {
        match self.format {
            Format::Csv => self.write(&format!("{stem}.csv"), table.to_csv(&self.header())),
            Format::Json => self.json(&format!("{stem}.json"), table),
        }
    }

    /// A JSON object whose first key is `config_hash`.
    pub fn json<T: Serialize>(&self, name: &str, body: T) -> Result<(), Failure> {
        let stamped = Stamped { config_hash: &self.hash, body };
        let mut text = serde_json::to_string_pretty(&stamped).map_err(|e| Failure::numerical(e.to_string()))?;
        text.push('\n');
        self.write(name, text)
    }
}
