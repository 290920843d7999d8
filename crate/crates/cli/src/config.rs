//! Flat `key = value` configuration. Every key is also a `--key` flag;
//! flags override the file, which overrides the defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

pub struct Key {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
    /// Boolean keys may be given as bare flags.
    pub switch: bool,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default: Some(default),
        help,
        switch: false,
    }
}

const fn opt(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default: None,
        help,
        switch: false,
    }
}

const fn switch(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default: Some("false"),
        help,
        switch: true,
    }
}

/// Keys accepted by every command. `out` is not part of the experiment and
/// is excluded from the hash.
pub const COMMON: &[Key] = &[
    opt("out", "output directory; $HEATLAB_OUT overrides the file, this flag overrides both"),
    key("seed", "0", "reserved for grid jitter; unused by the computations"),
    key("series-tol", "1e-12", "relative tail tolerance of the kernel series"),
    key("k-max-cap", "512", "largest series index"),
    key("crossover", "1", "images for t <= crossover * a^2, eigenfunctions above"),
];

pub const KERNEL: &[Key] = &[
    key("domain", "interval:0.5", "interval:A, tabulated on [0, 2A]"),
    opt("interval", "shorthand for domain=interval:A"),
    key("y", "0.2", "source point in [0, 2A] coordinates"),
    key("t", "0.02", "time"),
    key("points", "201", "grid points including both ends"),
    switch("plot", "also write an SVG plot"),
];

pub const SWEEP: &[Key] = &[
    key("kind", "short-time-nd", "short-time-1d, short-time-nd, all-time-1d, all-time-nd, center, semigroup"),
    key("domain", "interval:0.5", "interval:A or box:A1,A2,..."),
    opt("interval", "shorthand for domain=interval:A"),
    opt("box", "shorthand for domain=box:A1,A2,..."),
    key("points-per-axis", "9", "interior nodes per axis"),
    key("n-times", "25", "log-spaced times"),
    key("t-lo", "1e-4", "smallest time in units of h^2"),
    key("t-hi", "10", "largest time in units of h^2"),
];

pub const PROP_BALL: &[Key] = &[
    key("domain", "interval:1", "interval:A (n = 1) or ball:A (n = 3)"),
    key("alpha", "0.5", "singularity exponent"),
    key("radius", "0.5", "support radius R of the datum"),
    key("phis", "4,8,16,32,64", "thresholds, strictly increasing"),
    key("n-times", "24", "log-spaced times per region check"),
    key("t-lo-frac", "1e-6", "smallest sampled time as a fraction of tau"),
    key("rel-tol", "1e-6", "bisection tolerance"),
    switch("plot", "also write an SVG plot"),
];

pub const BLOWUP: &[Key] = &[
    key("n", "1", "dimension (1 or 3)"),
    key("q", "1", "integrability exponent of the data"),
    key("p", "6", "power of the source u^p"),
    opt("source", "power:P, bad-osgood, zero or table:s/v;...; overrides p"),
    key("alpha", "0.9", "singularity exponent"),
    key("radius", "0.5", "support radius R of the datum"),
    key("domain-radius", "1", "radius of the domain"),
    key("caps", "10,100,1000,10000", "cap ladder, strictly increasing"),
    key("cells", "512", "radial cells"),
    key("grading", "3", "mesh grading exponent"),
    key("dt", "1e-6", "largest time step"),
    key("t-probe", "auto", "probe time; auto = 1e-3 eps^2 / n"),
    switch("plot", "also write an SVG plot"),
];

pub const OSGOOD: &[Key] = &[
    key("terms", "50", "number of series terms"),
    key("x0", "phi2", "initial value of the ODE witness (a number or phiK)"),
    key("t-end", "10", "ODE horizon"),
    key("gammas", "0,1,5,10,100", "exponents for the growth probe"),
];

pub const VERIFY: &[Key] = &[
    key("criteria", "1,2,3,4,5,6,7,8,9", "criteria to run"),
    key("points-per-axis", "9", "sweep nodes per axis"),
    key("n-times", "25", "sweep times"),
    key("sim-cells", "512", "cells for the cap ladder"),
    key("sim-dt", "1e-6", "time step for the cap ladder"),
    key("mild-cells", "128", "coarse cells for the mild residual"),
    key("mild-dt", "1e-4", "coarse time step for the mild residual"),
];

/// Resolved parameters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub command: String,
    values: BTreeMap<String, String>,
}

impl Config {
    /// Merge defaults, an optional file and explicit flags.
    pub fn resolve(
        command: &str,
        keys: &[&[Key]],
        file: Option<&Path>,
        flags: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let known: Vec<&Key> = keys.iter().flat_map(|k| k.iter()).collect();
        let mut values = BTreeMap::new();
        for k in &known {
            if let Some(d) = k.default {
                values.insert(k.name.to_string(), d.to_string());
            }
        }
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            for (k, v) in parse_file(&text)? {
                if !known.iter().any(|kk| kk.name == k) {
                    bail!("unknown key '{k}' for {command}");
                }
                values.insert(k, v);
            }
        }
        if let Ok(dir) = std::env::var("HEATLAB_OUT") {
            values.insert("out".into(), dir);
        }
        for (k, v) in flags {
            values.insert(k.clone(), v.clone());
        }
        // Shorthands fold into `domain`.
        for short in ["interval", "box"] {
            if let Some(v) = values.remove(short) {
                values.insert("domain".into(), format!("{short}:{v}"));
            }
        }
        Ok(Config {
            command: command.into(),
            values,
        })
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| anyhow!("missing value for '{key}'"))
    }

    pub fn opt(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.get(key)?;
        v.trim().parse().map_err(|_| anyhow!("{key} = '{v}' is not a number"))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        v.trim().parse().map_err(|_| anyhow!("{key} = '{v}' is not a nonnegative integer"))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key)?.trim() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => bail!("{key} = '{v}' is not a boolean"),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let v = self.get(key)?;
        v.split(',')
            .map(|s| s.trim().parse().map_err(|_| anyhow!("{key}: '{s}' is not a number")))
            .collect()
    }

    pub fn out_dir(&self) -> &str {
        self.opt("out").unwrap_or("heatlab-out")
    }

    /// Parameters that define the experiment, without the output location.
    pub fn experiment(&self) -> BTreeMap<String, String> {
        let mut m = self.values.clone();
        m.remove("out");
        m.insert("command".into(), self.command.clone());
        m
    }

    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_string().as_bytes()))
    }
}

/// Canonical file form: `command` first, then keys in order.
impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {}", self.command)?;
        for (k, v) in &self.values {
            if k != "out" {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}

pub fn parse_file(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value", no + 1))?;
        let k = k.trim().replace('_', "-");
        if k.is_empty() {
            bail!("line {}: empty key", no + 1);
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trips() {
        let mut flags = BTreeMap::new();
        flags.insert("p".to_string(), "2".to_string());
        let cfg = Config::resolve("blowup", &[COMMON, BLOWUP], None, &flags).unwrap();
        let text = cfg.to_string();
        let dir = std::env::temp_dir().join(format!("heatlab-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, &text).unwrap();
        let again = Config::resolve("blowup", &[COMMON, BLOWUP], Some(&path), &BTreeMap::new()).unwrap();
        std::fs::remove_dir_all(&dir).ok();
        assert_eq!(again.experiment(), cfg.experiment());
        assert_eq!(again.hash(), cfg.hash());
        assert_eq!(again.f64("p").unwrap(), 2.0);
    }

    #[test]
    fn flags_override_and_shorthands() {
        let mut flags = BTreeMap::new();
        flags.insert("box".to_string(), "1,1".to_string());
        let cfg = Config::resolve("bounds-sweep", &[COMMON, SWEEP], None, &flags).unwrap();
        assert_eq!(cfg.get("domain").unwrap(), "box:1,1");
        assert!(cfg.opt("box").is_none());
    }

    #[test]
    fn bad_lines_are_rejected() {
        assert!(parse_file("alpha 0.5").is_err());
        assert_eq!(parse_file("# c\nt_end = 3\n").unwrap(), vec![("t-end".into(), "3".into())]);
    }

    #[test]
    fn hash_ignores_output_location() {
        let mut a = BTreeMap::new();
        a.insert("out".to_string(), "/tmp/a".to_string());
        let mut b = BTreeMap::new();
        b.insert("out".to_string(), "/tmp/b".to_string());
        let ca = Config::resolve("osgood", &[COMMON, OSGOOD], None, &a).unwrap();
        let cb = Config::resolve("osgood", &[COMMON, OSGOOD], None, &b).unwrap();
        assert_eq!(ca.hash(), cb.hash());
        assert_ne!(ca.out_dir(), cb.out_dir());
    }
}
