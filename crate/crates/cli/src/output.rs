//! Run directories: versioned JSON reports, CSV tables, SVG plots and a
//! manifest listing all of them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;

use crate::config::Config;
use crate::svg::Plot;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    config: BTreeMap<String, String>,
    result: &'a T,
}

#[derive(Debug, Serialize, serde::Deserialize, PartialEq)]
pub struct Manifest {
    pub id: String,
    pub timestamp: String,
    pub config_hash: String,
    pub version: String,
    pub files: Vec<String>,
}

pub struct RunDir {
    dir: PathBuf,
    id: String,
    cfg: Config,
    files: Vec<String>,
}

impl RunDir {
    /// `<out>/<command>-<first 12 hex digits of the config hash>`.
    pub fn create(cfg: &Config) -> Result<Self> {
        let id = format!("{}-{}", cfg.command, &cfg.hash()[..12]);
        let dir = Path::new(cfg.out_dir()).join(&id);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut run = RunDir {
            dir,
            id,
            cfg: cfg.clone(),
            files: Vec::new(),
        };
        run.write("config.txt", cfg.to_string().as_bytes())?;
        Ok(run)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, result: &T) -> Result<()> {
        let report = Report {
            schema_version: SCHEMA_VERSION,
            command: &self.cfg.command,
            config: self.cfg.experiment(),
            result,
        };
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().context("flushing csv")?;
        self.write(name, &bytes)
    }

    pub fn svg(&mut self, name: &str, plot: &Plot) -> Result<()> {
        self.write(name, plot.render().as_bytes())
    }

    /// Write `manifest.json` listing every other file.
    pub fn finish(self) -> Result<PathBuf> {
        let manifest = Manifest {
            id: self.id.clone(),
            timestamp: timestamp(),
            config_hash: self.cfg.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            files: self.files.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(self.dir)
    }
}

/// `SOURCE_DATE_EPOCH` when set, otherwise the current time.
fn timestamp() -> String {
    let when = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|s| DateTime::<Utc>::from_timestamp(s, 0))
        .unwrap_or_else(Utc::now);
    when.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Shortest round-trip text for a float, in exponent form when small or large.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// As [`num`], empty for `None`.
pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, -0.25, 2.1937978604264734e-6, 2e-21, 1e300, 12345.678, f64::INFINITY] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(num(2e-21), "2e-21");
        assert_eq!(num(0.5), "0.5");
        assert_eq!(opt_num(None), "");
    }
}
