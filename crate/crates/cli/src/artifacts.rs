//! Output directory handling: every data file is hashed into `manifest.json`
//! and points back at it.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Serialize)]
struct Entry {
    file: String,
    sha256: String,
}

pub struct Artifacts {
    dir: PathBuf,
    pub format: Format,
    written: Vec<Entry>,
}

impl Artifacts {
    pub fn new(dir: &Path, format: Format) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            format,
            written: Vec::new(),
        })
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(Entry {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// Writes CSV text behind a `# manifest:` comment line.
    pub fn write_csv(&mut self, name: &str, body: &str) -> Result<()> {
        let text = format!("# manifest: {MANIFEST}\n{body}");
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes a JSON object with a `manifest` field added.
    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut value = serde_json::to_value(value)?;
        match &mut value {
            Value::Object(map) => {
                map.insert("manifest".into(), Value::String(MANIFEST.into()));
            }
            other => {
                value = json!({ "manifest": MANIFEST, "data": other.take() });
            }
        }
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes tabular rows as `<stem>.csv` or `<stem>.json` depending on
    /// the output format. Rows must serialize to flat JSON objects.
    pub fn write_table(&mut self, stem: &str, rows: &[Value]) -> Result<String> {
        match self.format {
            Format::Json => {
                let name = format!("{stem}.json");
                self.write_json(&name, &json!({ "rows": rows }))?;
                Ok(name)
            }
            Format::Csv => {
                let name = format!("{stem}.csv");
                self.write_csv(&name, &rows_to_csv(rows))?;
                Ok(name)
            }
        }
    }

    /// Writes `manifest.json`. `fields` must be deterministic in the inputs.
    pub fn finish(self, mut fields: Map<String, Value>) -> Result<PathBuf> {
        fields.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        fields.insert("artifacts".into(), serde_json::to_value(&self.written)?);
        let mut text = serde_json::to_string_pretty(&Value::Object(fields))?;
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Header from the keys of the first row, which serde_json keeps sorted.
pub fn rows_to_csv(rows: &[Value]) -> String {
    let Some(Value::Object(first)) = rows.first() else {
        return String::new();
    };
    let keys: Vec<&String> = first.keys().collect();
    let mut out = keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = keys.iter().map(|k| cell(&row[k.as_str()])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_use_sorted_keys() {
        let rows = vec![json!({"b": 1, "a": "x"}), json!({"b": 2.5, "a": null})];
        assert_eq!(rows_to_csv(&rows), "a,b\nx,1\n,2.5\n");
    }

    #[test]
    fn files_point_at_the_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(dir.path(), Format::Csv).unwrap();
        a.write_csv("f.csv", "s1,value\n0.0,1\n").unwrap();
        a.write_json("r.json", &json!({"x": 1})).unwrap();
        a.finish(Map::new()).unwrap();
        let csv = fs::read_to_string(dir.path().join("f.csv")).unwrap();
        assert!(csv.starts_with("# manifest: manifest.json\n"));
        let r: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
        assert_eq!(r["manifest"], "manifest.json");
        let m: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(m["artifacts"].as_array().unwrap().len(), 2);
    }
}
