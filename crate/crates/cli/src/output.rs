use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const HASH_KEY: &str = "configHash";

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub config_hash: String,
    pub config: Value,
    pub version: String,
    /// File name to SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
    /// Seconds per subcommand, last run only.
    pub timings: BTreeMap<String, f64>,
}

/// An output directory bound to one config hash.
pub struct OutputDir {
    dir: PathBuf,
    hash: String,
    manifest: Manifest,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl OutputDir {
    /// Opens `dir`, refusing it when its manifest records another config.
    pub fn open(dir: &Path, cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let hash = cfg.hash();
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let path = dir.join(MANIFEST);
        let mut manifest = match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice::<Manifest>(&bytes)
                .map_err(|e| CliError::Refused(format!("{} is unreadable: {e}", path.display())))?,
            Err(_) => Manifest::default(),
        };
        if !manifest.config_hash.is_empty() && manifest.config_hash != hash {
            return Err(CliError::Refused(format!(
                "{} holds results for config {}, not {hash}; choose another --out",
                dir.display(),
                manifest.config_hash
            )));
        }
        manifest.config_hash = hash.clone();
        manifest.config = serde_json::to_value(cfg).expect("config serialises");
        manifest.version = env!("CARGO_PKG_VERSION").into();
        Ok(Self { dir: dir.to_path_buf(), hash, manifest })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        self.manifest.files.insert(name.into(), sha256_hex(bytes));
        Ok(())
    }

    /// Writes `value` as an object with the config hash added at the top level.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut v = serde_json::to_value(value).expect("report serialises");
        let obj = v.as_object_mut().expect("reports are objects");
        obj.insert(HASH_KEY.into(), Value::String(self.hash.clone()));
        let mut text = serde_json::to_string_pretty(&v).expect("report serialises");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes a CSV whose first line is `# configHash=...`.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut buf = format!("# {HASH_KEY}={}\n", self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let fail = |e: csv::Error| CliError::Io(format!("{name}: {e}"));
            w.write_record(header).map_err(fail)?;
            for r in rows {
                w.write_record(r).map_err(fail)?;
            }
            w.flush().map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        }
        self.write(name, &buf)
    }

    /// Reads a JSON section written for this config; `None` when absent.
    pub fn read_section(&self, name: &str) -> Result<Option<Value>, CliError> {
        let path = self.path(name);
        let Ok(bytes) = fs::read(&path) else {
            return Ok(None);
        };
        let mut v: Value = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Refused(format!("{} is not valid JSON: {e}", path.display())))?;
        let found = v.get(HASH_KEY).and_then(Value::as_str).unwrap_or("none").to_string();
        if found != self.hash {
            return Err(CliError::Refused(format!(
                "{} was produced by config {found}, not {}; refusing to merge",
                path.display(),
                self.hash
            )));
        }
        v.as_object_mut().unwrap().remove(HASH_KEY);
        Ok(Some(v))
    }

    /// Reads a CSV written for this config, without its hash line.
    pub fn read_csv(&self, name: &str) -> Result<Option<String>, CliError> {
        let path = self.path(name);
        let Ok(text) = fs::read_to_string(&path) else {
            return Ok(None);
        };
        let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
        if first != format!("# {HASH_KEY}={}", self.hash) {
            return Err(CliError::Refused(format!(
                "{} was produced by another config; refusing to merge",
                path.display()
            )));
        }
        Ok(Some(rest.to_string()))
    }

    pub fn finish(mut self, command: &str, seconds: f64) -> Result<(), CliError> {
        self.manifest.timings.insert(command.into(), seconds);
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serialises");
        text.push('\n');
        let path = self.path(MANIFEST);
        fs::write(&path, text).map_err(|e| io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    fn scratch(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("kawa-output-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn foreign_manifest_is_refused() {
        let d = scratch("refuse");
        let a = preset("preset-4x3").unwrap();
        let mut out = OutputDir::open(&d, &a).unwrap();
        out.write_json("x.json", &serde_json::json!({"k": 1})).unwrap();
        out.finish("test", 0.0).unwrap();
        assert!(OutputDir::open(&d, &a).is_ok());
        let b = preset("preset-4x4").unwrap();
        assert!(matches!(OutputDir::open(&d, &b), Err(CliError::Refused(_))));
        fs::remove_dir_all(&d).unwrap();
    }

    #[test]
    fn sections_round_trip_without_hash() {
        let d = scratch("section");
        let mut out = OutputDir::open(&d, &preset("preset-4x3").unwrap()).unwrap();
        out.write_json("s.json", &serde_json::json!({"k": [1, 2]})).unwrap();
        out.write_csv("t.csv", &["a", "b"], &[vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(out.read_section("s.json").unwrap().unwrap(), serde_json::json!({"k": [1, 2]}));
        assert_eq!(out.read_csv("t.csv").unwrap().unwrap(), "a,b\n1,2\n");
        assert!(out.read_section("missing.json").unwrap().is_none());
        fs::write(d.join("s.json"), r#"{"configHash": "0", "k": 1}"#).unwrap();
        assert!(out.read_section("s.json").is_err());
        fs::remove_dir_all(&d).unwrap();
    }
}
