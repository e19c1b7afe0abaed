//! Experiment settings from command-line flags and an optional `key = value`
//! file. Flags win over the file, the file wins over defaults.

use std::collections::BTreeMap;
use std::path::Path;

use clap::{Arg, ArgMatches, Command};
use heislab::percolation::Lattice;
use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Copy, Debug)]
pub struct KeySpec {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

pub const fn key(name: &'static str, default: Option<&'static str>, help: &'static str) -> KeySpec {
    KeySpec { name, default, help }
}

/// Keys accepted by every experiment.
pub const COMMON_KEYS: &[KeySpec] = &[
    key("seed", Some("1"), "base seed for random streams"),
    key("out", Some("csv"), "output format: csv or json"),
    key("out-path", None, "output file (default: standard output)"),
    key("summary-path", None, "also write the JSON summary here (csv output only)"),
    key("threads", Some("0"), "worker threads (0 = all cores)"),
    key("status-path", Some("heislab-status.json"), "file recording the last status of each claim"),
    key("manifest", None, "claims manifest (default: the built-in one)"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Csv,
    Json,
}

/// Resolved settings for one run, as strings keyed by option name.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Settings {
    pub experiment: String,
    pub values: BTreeMap<String, String>,
}

pub fn add_keys(mut cmd: Command, keys: &[KeySpec]) -> Command {
    for k in keys {
        let mut help = k.help.to_string();
        if let Some(d) = k.default {
            help.push_str(&format!(" [default: {d}]"));
        }
        cmd = cmd.arg(Arg::new(k.name).long(k.name).value_name("VALUE").help(help));
    }
    cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .help("key = value file with any of the options above"),
    )
}

/// Parses a `key = value` file. Blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::Config(format!("config line {}: duplicate key {k:?}", i + 1)));
        }
    }
    Ok(out)
}

impl Settings {
    pub fn resolve(experiment: &str, keys: &[KeySpec], matches: &ArgMatches) -> Result<Settings, CliError> {
        let all: Vec<&KeySpec> = keys.iter().chain(COMMON_KEYS).collect();
        let mut values = BTreeMap::new();
        for k in &all {
            if let Some(d) = k.default {
                values.insert(k.name.to_string(), d.to_string());
            }
        }
        if let Some(path) = matches.get_one::<String>("config") {
            let text = std::fs::read_to_string(Path::new(path))
                .map_err(|e| CliError::Config(format!("cannot read config {path}: {e}")))?;
            for (k, v) in parse_config_file(&text)? {
                if k == "experiment" {
                    if v != experiment {
                        return Err(CliError::Config(format!(
                            "config is for experiment {v:?}, not {experiment:?}"
                        )));
                    }
                    continue;
                }
                if !all.iter().any(|s| s.name == k) {
                    return Err(CliError::Config(format!("unknown key {k:?} for {experiment}")));
                }
                values.insert(k, v);
            }
        }
        for k in &all {
            if let Some(v) = matches.get_one::<String>(k.name) {
                values.insert(k.name.to_string(), v.clone());
            }
        }
        Ok(Settings {
            experiment: experiment.to_string(),
            values,
        })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key)
            .ok_or_else(|| CliError::Config(format!("missing required option --{key}")))
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.required(key)?;
        v.parse()
            .map_err(|_| CliError::Config(format!("--{key}: cannot parse {v:?}")))
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        let v = self.required(key)?;
        let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if items.is_empty() {
            return Err(CliError::Config(format!("--{key} must not be empty")));
        }
        items
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|_| CliError::Config(format!("--{key}: cannot parse {s:?}")))
            })
            .collect()
    }

    pub fn probability(&self, key: &str) -> Result<f64, CliError> {
        let p: f64 = self.parse(key)?;
        if p > 0.0 && p <= 1.0 {
            Ok(p)
        } else {
            Err(CliError::Config(format!("--{key} must lie in (0, 1], got {p}")))
        }
    }

    pub fn lattice(&self, key: &str) -> Result<Lattice, CliError> {
        self.required(key)?
            .parse()
            .map_err(|e: heislab::Error| CliError::Config(format!("--{key}: {e}")))
    }

    pub fn format(&self) -> Result<OutFormat, CliError> {
        match self.required("out")? {
            "csv" => Ok(OutFormat::Csv),
            "json" => Ok(OutFormat::Json),
            other => Err(CliError::Config(format!("--out must be csv or json, got {other:?}"))),
        }
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.parse("seed")
    }

    pub fn threads(&self) -> Result<usize, CliError> {
        self.parse("threads")
    }
}

/// Checks `lo <= v <= hi` for every entry, naming the option on failure.
pub fn in_range<T: PartialOrd + std::fmt::Display + Copy>(key: &str, vs: &[T], lo: T, hi: T) -> Result<(), CliError> {
    match vs.iter().find(|&&v| v < lo || v > hi) {
        Some(v) => Err(CliError::Config(format!("--{key}: {v} is outside {lo}..={hi}"))),
        None => Ok(()),
    }
}

/// Like [`in_range`] for the upper end, but reported as a resource cap.
pub fn under_cap(what: &'static str, vs: &[u64], cap: u64) -> Result<(), CliError> {
    match vs.iter().find(|&&v| v > cap) {
        Some(&v) => Err(CliError::Library(heislab::Error::CapExceeded {
            what,
            requested: v,
            cap,
        })),
        None => Ok(()),
    }
}

pub fn strictly_increasing<T: PartialOrd>(key: &str, vs: &[T]) -> Result<(), CliError> {
    if vs.windows(2).all(|w| w[0] < w[1]) {
        Ok(())
    } else {
        Err(CliError::Config(format!("--{key} must be strictly increasing")))
    }
}
