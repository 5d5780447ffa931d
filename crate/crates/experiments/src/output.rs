use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::error::Result;

/// The two artifacts every experiment produces.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    /// Contents of `rows.csv`, header included.
    pub rows: String,
    /// Contents of `summary.json`.
    pub summary: Value,
}

impl Output {
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("rows.csv"), &self.rows)?;
        let mut summary = serde_json::to_string_pretty(&self.summary)?;
        summary.push('\n');
        fs::write(dir.join("summary.json"), summary)?;
        Ok(())
    }
}

/// Builds a CSV body with a fixed header.
pub(crate) struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Table> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Table { writer })
    }

    pub fn push<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(self) -> Result<String> {
        let bytes = self.writer.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}

/// JSON number, or `null` when not finite.
pub(crate) fn json_num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}
