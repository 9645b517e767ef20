use std::fs;
use std::path::{Path, PathBuf};

use oscswap_core::report::{round_json, Table};
use serde_json::{json, Map, Value};

use crate::args::{Format, OutputArgs};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes result files, each carrying the program version and the full
/// run configuration.
pub struct Sink {
    dir: PathBuf,
    format: Format,
    command: &'static str,
    config: Value,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(command: &'static str, config: Value, output: &OutputArgs) -> Result<Self, CliError> {
        fs::create_dir_all(&output.out).map_err(|e| CliError::Io(format!("{}: {e}", output.out.display())))?;
        let mut config = config;
        round_json(&mut config);
        Ok(Self {
            dir: output.out.clone(),
            format: output.format,
            command,
            config,
            written: Vec::new(),
        })
    }

    fn header(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("program".into(), json!("oscswap"));
        m.insert("version".into(), json!(VERSION));
        m.insert("command".into(), json!(self.command));
        m.insert("config".into(), self.config.clone());
        m
    }

    fn preamble(&self) -> String {
        format!("oscswap {VERSION} {}\nconfig: {}", self.command, self.config)
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    /// `<stem>.csv` and/or `<stem>.json` (records under `"rows"`), per the format.
    pub fn table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        self.csv(stem, table)?;
        self.json(stem, json!({ "rows": table.to_json_records() }))
    }

    /// `<stem>.csv` when CSV output is selected.
    pub fn csv(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        if self.format.csv() {
            let text = table.to_csv(Some(&self.preamble()))?;
            self.write(&format!("{stem}.csv"), &text)?;
        }
        Ok(())
    }

    /// `<stem>.json` when JSON output is selected.
    pub fn json(&mut self, stem: &str, body: Value) -> Result<(), CliError> {
        if self.format.json() {
            self.json_always(stem, body)?;
        }
        Ok(())
    }

    /// `<stem>.json` regardless of the format; `body`'s fields follow the header.
    pub fn json_always(&mut self, stem: &str, mut body: Value) -> Result<(), CliError> {
        round_json(&mut body);
        let mut doc = self.header();
        match body {
            Value::Object(fields) => doc.extend(fields),
            other => {
                doc.insert("result".into(), other);
            }
        }
        let text = serde_json::to_string_pretty(&Value::Object(doc)).map_err(|e| CliError::Io(e.to_string()))?;
        self.write(&format!("{stem}.json"), &(text + "\n"))
    }

    pub fn written(&self) -> impl Iterator<Item = &Path> {
        self.written.iter().map(PathBuf::as_path)
    }
}
