//! Hash-stamped artifact writers and the run manifest.
//!
//! Every file carries the config hash: a `#` line in CSV, a `%` line in
//! Matrix Market, a `config_hash` key in JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Full double precision, locale independent.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One checked contract of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contract {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

pub struct Artifacts {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
    contracts: Vec<Contract>,
}

impl Artifacts {
    pub fn create(dir: &Path, hash: String) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), hash, files: Vec::new(), contracts: Vec::new() })
    }

    pub fn contract(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.contracts.push(Contract { name: name.into(), pass, detail: detail.into() });
    }

    pub fn all_pass(&self) -> bool {
        self.contracts.iter().all(|c| c.pass)
    }

    pub fn contracts(&self) -> &[Contract] {
        &self.contracts
    }

    fn put(&mut self, name: &str, body: &str) -> std::io::Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> std::io::Result<()> {
        let mut body = format!("# config_hash={}\n{}\n", self.hash, header.join(","));
        for r in rows {
            body.push_str(&r.join(","));
            body.push('\n');
        }
        self.put(name, &body)
    }

    /// Prefixes already formatted CSV with the hash line.
    pub fn csv_text(&mut self, name: &str, text: &str) -> std::io::Result<()> {
        let body = format!("# config_hash={}\n{text}", self.hash);
        self.put(name, &body)
    }

    /// Objects get a `config_hash` key; other values are wrapped under `data`.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let v = serde_json::to_value(value).map_err(std::io::Error::other)?;
        let body = stamp(v, &self.hash);
        self.put(name, &(serde_json::to_string_pretty(&body).map_err(std::io::Error::other)? + "\n"))
    }

    /// Writes text whose first line is kept in place (Matrix Market banner)
    /// with the hash on the line after it.
    pub fn with_banner(&mut self, name: &str, text: &str, comment: &str) -> std::io::Result<()> {
        let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
        let body = format!("{first}\n{comment} config_hash={}\n{rest}", self.hash);
        self.put(name, &body)
    }

    /// Records the run; nothing in it depends on the thread count.
    pub fn finish(mut self, command: &str, seed: u64) -> std::io::Result<bool> {
        let pass = self.all_pass();
        let mut files = self.files.clone();
        files.sort();
        let manifest = json!({
            "command": command,
            "seed": seed,
            "versions": {
                "schrokato": schrokato::VERSION,
                "schrokato-cli": env!("CARGO_PKG_VERSION"),
            },
            "files": files,
            "contracts": self.contracts,
            "status": if pass { "pass" } else { "violated" },
        });
        let body = stamp(manifest, &self.hash);
        self.put("manifest.json", &(serde_json::to_string_pretty(&body).map_err(std::io::Error::other)? + "\n"))?;
        Ok(pass)
    }
}

fn stamp(v: Value, hash: &str) -> Value {
    let mut out = Map::new();
    out.insert("config_hash".into(), Value::String(hash.to_string()));
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                out.insert(k, x);
            }
        }
        other => {
            out.insert("data".into(), other);
        }
    }
    Value::Object(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn numbers_round_trip() {
        let x = 0.1 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
    }
}
