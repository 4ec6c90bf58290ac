//! Flat `key = value` files for representation specs and report runs.
//!
//! Spec keys: `p`, `level`, `curve` (five comma-separated Weierstrass
//! coefficients) or `trace_table` (path), `surjective` (true/false).
//! Run configs take the spec keys plus `x_max`, `sieve_bound`,
//! `checkpoints` (comma-separated), `output`, `format` (json/csv), `seed`,
//! `threads` and `level_cap`. Integers accept `1e4` and `10_000`. `#` starts
//! a comment; relative paths resolve against the file's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frobenius::{CurveSpec, TraceTable};
use crate::omega::{ResidualRepSpec, TraceSource};

/// Parses `123`, `10_000`, `1e6` or `25e3`.
pub fn parse_count(s: &str) -> Result<u64> {
    let t: String = s.trim().chars().filter(|&c| c != '_').collect();
    let parsed = match t.split_once(['e', 'E']) {
        Some((m, e)) => {
            let m: u64 = m
                .parse()
                .map_err(|_| Error::Config(format!("bad integer '{s}'")))?;
            let e: u32 = e
                .parse()
                .map_err(|_| Error::Config(format!("bad exponent in '{s}'")))?;
            10u64.checked_pow(e).and_then(|x| x.checked_mul(m))
        }
        None => t.parse().ok(),
    };
    parsed.ok_or_else(|| Error::Config(format!("'{s}' is not a non-negative integer")))
}

pub fn parse_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(parse_count)
        .collect()
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("'{other}' is not a boolean"))),
    }
}

fn read_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: format!("expected key = value, got '{line}'"),
        })?;
        let key = k.trim().to_string();
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("key '{key}' repeated"),
            });
        }
    }
    Ok(out)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceConfig {
    Curve(CurveSpec),
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecConfig {
    pub p: u64,
    pub level: u64,
    pub source: SourceConfig,
    pub surjective: bool,
}

const SPEC_KEYS: [&str; 5] = ["p", "level", "curve", "trace_table", "surjective"];

impl SpecConfig {
    fn from_pairs(pairs: &BTreeMap<String, String>, base: &Path) -> Result<Self> {
        let get = |k: &str| {
            pairs
                .get(k)
                .ok_or_else(|| Error::Config(format!("missing key '{k}'")))
        };
        let p = parse_count(get("p")?)?;
        let level = parse_count(get("level")?)?;
        let source = match (pairs.get("curve"), pairs.get("trace_table")) {
            (Some(c), None) => SourceConfig::Curve(CurveSpec::parse(c)?),
            (None, Some(t)) => SourceConfig::Table(base.join(t)),
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either 'curve' or 'trace_table', not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "one of 'curve' or 'trace_table' is required".into(),
                ))
            }
        };
        let surjective = pairs
            .get("surjective")
            .map(|s| parse_bool(s))
            .transpose()?
            .unwrap_or(false);
        Ok(SpecConfig {
            p,
            level,
            source,
            surjective,
        })
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let pairs = read_pairs(text)?;
        if let Some(k) = pairs.keys().find(|k| !SPEC_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown spec key '{k}'")));
        }
        Self::from_pairs(&pairs, base)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_file(path)?, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn build(&self) -> Result<ResidualRepSpec> {
        let source = match &self.source {
            SourceConfig::Curve(c) => TraceSource::Curve(*c),
            SourceConfig::Table(path) => TraceSource::Table(TraceTable::load(path, Some(self.p))?),
        };
        ResidualRepSpec::new(self.p, self.level, source, self.surjective)
    }

    /// Short provenance string for reports.
    pub fn describe_source(&self) -> String {
        match &self.source {
            SourceConfig::Curve(c) => {
                let [a1, a2, a3, a4, a6] = c.coefficients();
                format!("curve [{a1},{a2},{a3},{a4},{a6}]")
            }
            SourceConfig::Table(p) => format!(
                "trace table {}",
                p.file_name()
                    .map(|f| f.to_string_lossy().into_owned())
                    .unwrap_or_default()
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

/// Default cap on census levels listed in a report.
pub const DEFAULT_LEVEL_CAP: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub spec: SpecConfig,
    pub x_max: u64,
    /// Bound for the Omega summary; defaults to `x_max / level`.
    pub sieve_bound: Option<u64>,
    /// Census checkpoints in `Y = X / N`; defaults to powers of ten below
    /// `Y` and `Y` itself.
    pub checkpoints: Option<Vec<u64>>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub seed: u64,
    pub threads: Option<usize>,
    pub level_cap: u64,
}

const RUN_KEYS: [&str; 8] = [
    "x_max",
    "sieve_bound",
    "checkpoints",
    "output",
    "format",
    "seed",
    "threads",
    "level_cap",
];

impl RunConfig {
    pub fn new(spec: SpecConfig, x_max: u64) -> Self {
        RunConfig {
            spec,
            x_max,
            sieve_bound: None,
            checkpoints: None,
            output: None,
            format: OutputFormat::Json,
            seed: 0,
            threads: None,
            level_cap: DEFAULT_LEVEL_CAP,
        }
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let pairs = read_pairs(text)?;
        if let Some(k) = pairs
            .keys()
            .find(|k| !SPEC_KEYS.contains(&k.as_str()) && !RUN_KEYS.contains(&k.as_str()))
        {
            return Err(Error::Config(format!("unknown config key '{k}'")));
        }
        let spec = SpecConfig::from_pairs(&pairs, base)?;
        let x_max = parse_count(
            pairs
                .get("x_max")
                .ok_or_else(|| Error::Config("missing key 'x_max'".into()))?,
        )?;
        let mut cfg = RunConfig::new(spec, x_max);
        cfg.sieve_bound = pairs
            .get("sieve_bound")
            .map(|s| parse_count(s))
            .transpose()?;
        cfg.checkpoints = pairs
            .get("checkpoints")
            .map(|s| parse_list(s))
            .transpose()?;
        cfg.output = pairs.get("output").map(|o| base.join(o));
        if let Some(f) = pairs.get("format") {
            cfg.format = f.parse()?;
        }
        if let Some(s) = pairs.get("seed") {
            cfg.seed = parse_count(s)?;
        }
        cfg.threads = pairs
            .get("threads")
            .map(|s| parse_count(s).map(|t| t as usize))
            .transpose()?;
        if let Some(c) = pairs.get("level_cap") {
            cfg.level_cap = parse_count(c)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_file(path)?, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_max == 0 {
            return Err(Error::Config("x_max must be positive".into()));
        }
        if self.sieve_bound == Some(0) {
            return Err(Error::Config("sieve_bound must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        if let Some(c) = &self.checkpoints {
            if c.is_empty() || c[0] == 0 || !c.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Config(
                    "checkpoints must be positive and strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }
}
