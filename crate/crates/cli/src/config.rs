//! Experiment configuration: a flat `key=value` format, an equivalent TOML
//! format, and the validated [`ExperimentConfig`].
//!
//! Parsing is fail-closed. Unknown or repeated keys are errors, as are keys
//! the chosen experiment does not use.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thinlaw_core::catalog::{self, NamedSpec};
use thinlaw_core::convergence::standard_regions;
use thinlaw_core::functionals::{dictionary_subset, standard_dictionary};
use thinlaw_core::{
    GridDensity, IntegerDistribution, IntensityMeasure, NamedRegion, NamedTestFunction, NeymanScott,
    PointPattern, ProcessSpec, Region, Window,
};

pub const KEYS: [&str; 13] = [
    "experiment", "seed", "dist", "spec", "window", "n", "samples", "mode", "p", "regions", "dictionary",
    "out", "workers",
];

pub const REQUIRED: [&str; 2] = ["experiment", "seed"];

pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<&'static str>),
    #[error("unknown key `{0}` (known keys: {known})", known = KEYS.join(", "))]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    Duplicate(String),
    #[error("key `{key}` is not used by the {experiment} experiment")]
    NotApplicable { key: String, experiment: Experiment },
    #[error("malformed entry `{0}`, expected key=value")]
    Malformed(String),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("invalid TOML: {0}")]
    Toml(String),
}

impl ConfigError {
    fn invalid(field: &str, message: impl fmt::Display) -> Self {
        Self::Invalid { field: field.into(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    LargeNumbers,
    ThinNumbers,
    ThinProcesses,
    VerifyProperties,
}

impl Experiment {
    pub const ALL: [Experiment; 4] =
        [Self::LargeNumbers, Self::ThinNumbers, Self::ThinProcesses, Self::VerifyProperties];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LargeNumbers => "large-numbers",
            Self::ThinNumbers => "thin-numbers",
            Self::ThinProcesses => "thin-processes",
            Self::VerifyProperties => "verify-properties",
        }
    }

    fn accepts(self, key: &str) -> bool {
        let extra: &[&str] = match self {
            Self::LargeNumbers => &["dist", "n", "samples"],
            Self::ThinNumbers => &["dist", "n", "samples", "mode"],
            Self::ThinProcesses => &["spec", "window", "n", "samples", "regions", "dictionary"],
            Self::VerifyProperties => &["dist", "spec", "window", "samples", "p", "dictionary"],
        };
        ["experiment", "seed", "out", "workers"].contains(&key) || extra.contains(&key)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|e| e.as_str() == s).ok_or_else(|| {
            ConfigError::invalid("experiment", format!("`{s}` is not one of large-numbers, thin-numbers, thin-processes, verify-properties"))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Exact,
    MonteCarlo,
}

/// Unvalidated key/value pairs from one source.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Whitespace-separated `key=value` tokens; `#` starts a comment.
    pub fn parse_flat(text: &str) -> Result<Self, ConfigError> {
        let mut raw = Self::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for token in line.split_whitespace() {
                raw.insert_token(token)?;
            }
        }
        Ok(raw)
    }

    pub fn parse_toml(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Toml(e.message().to_string()))?;
        let mut raw = Self::new();
        for (key, value) in table {
            let sep = if key == "regions" { ";" } else { "," };
            let text = toml_scalar(&key, &value, sep)?;
            raw.insert(&key, text)?;
        }
        Ok(raw)
    }

    pub fn insert_token(&mut self, token: &str) -> Result<(), ConfigError> {
        match token.split_once('=') {
            Some((k, v)) if !k.is_empty() => self.insert(k, v.to_string()),
            _ => Err(ConfigError::Malformed(token.to_string())),
        }
    }

    pub fn insert(&mut self, key: &str, value: String) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        if self.entries.insert(key.to_string(), value).is_some() {
            return Err(ConfigError::Duplicate(key.to_string()));
        }
        Ok(())
    }

    /// Entries of `other` replace those of `self`.
    pub fn overlay(mut self, other: RawConfig) -> RawConfig {
        self.entries.extend(other.entries);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
    }
}

fn toml_scalar(key: &str, value: &toml::Value, sep: &str) -> Result<String, ConfigError> {
    Ok(match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items
            .iter()
            .map(|v| match v {
                toml::Value::Array(_) | toml::Value::Table(_) => Err(ConfigError::invalid(key, "nested arrays are not supported")),
                other => toml_scalar(key, other, sep),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(sep),
        _ => return Err(ConfigError::invalid(key, "tables are not supported")),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    /// Integer law for the number experiments; `None` in verify-properties
    /// means the whole catalog.
    pub dist: Option<IntegerDistribution>,
    /// Process for thin-processes; `None` in verify-properties means the
    /// whole catalog.
    pub spec: Option<NamedSpecOwned>,
    pub window: Window,
    pub n_list: Vec<u64>,
    pub samples: usize,
    pub mode: ModeKind,
    pub p_list: Vec<f64>,
    pub regions: Vec<NamedRegion>,
    pub dictionary: Vec<NamedTestFunction>,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

/// A process together with the text it was parsed from.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedSpecOwned {
    pub name: String,
    pub spec: ProcessSpec,
}

/// Parses the flat format.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    ExperimentConfig::from_raw(&RawConfig::parse_flat(text)?)
}

pub fn parse_config_toml(text: &str) -> Result<ExperimentConfig, ConfigError> {
    ExperimentConfig::from_raw(&RawConfig::parse_toml(text)?)
}

fn parse_list<T: FromStr>(field: &str, text: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| ConfigError::invalid(field, format!("`{s}`: {e}"))))
        .collect()
}

fn parse_one<T: FromStr>(field: &str, text: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    text.trim().parse::<T>().map_err(|e| ConfigError::invalid(field, format!("`{text}`: {e}")))
}

fn dyadic(upto: u64) -> Vec<u64> {
    std::iter::successors(Some(1u64), |n| Some(n * 2)).take_while(|n| *n <= upto).collect()
}

/// Process grammar: a catalog name, `poisson:LAMBDA`, `binomial:M`,
/// `neyman-scott:KAPPA:MEAN_CHILDREN:RADIUS` or `atoms:X,Y;X,Y;...`. The
/// parametric forms live on `window`, catalog entries on the unit square.
pub fn parse_spec(text: &str, window: &Window) -> Result<ProcessSpec, String> {
    if let Some(spec) = catalog::process_by_name(text) {
        if window != &Window::unit(2).expect("dimension 2") {
            return Err(format!("catalog process `{text}` lives on the unit square, not {window}"));
        }
        return Ok(spec);
    }
    let (kind, args) = text.split_once(':').ok_or_else(|| {
        let names: Vec<&str> = catalog::process_catalog().iter().map(|s| s.name).collect();
        format!("`{text}` is neither a catalog process ({}, light_clusters) nor kind:params", names.join(", "))
    })?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    let spec = match kind {
        "poisson" => ProcessSpec::Poisson(IntensityMeasure::constant(num(args)?, window.clone()).map_err(|e| e.to_string())?),
        "binomial" => ProcessSpec::Binomial {
            m: args.trim().parse().map_err(|e| format!("`{args}`: {e}"))?,
            density: GridDensity::uniform(window.clone(), 1.0 / window.volume()).map_err(|e| e.to_string())?,
        },
        "neyman-scott" => {
            let parts: Vec<&str> = args.split(':').collect();
            let [kappa, children, radius] = parts[..] else {
                return Err(format!("neyman-scott takes KAPPA:MEAN_CHILDREN:RADIUS, got `{args}`"));
            };
            ProcessSpec::NeymanScott(NeymanScott {
                kappa: num(kappa)?,
                mean_children: num(children)?,
                radius: num(radius)?,
                window: window.clone(),
            })
        }
        "atoms" => {
            let points = args
                .split(';')
                .map(|p| p.split(',').map(num).collect::<Result<Vec<f64>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            ProcessSpec::FixedAtoms(PointPattern::from_points(window.dim(), points).map_err(|e| e.to_string())?)
        }
        other => return Err(format!("unknown process kind `{other}`")),
    };
    spec.validate().map_err(|e| e.to_string())?;
    if let ProcessSpec::FixedAtoms(p) = &spec {
        if let Some(x) = p.points().find(|x| !window.contains(x)) {
            return Err(format!("atom {x:?} lies outside {window}"));
        }
    }
    Ok(spec)
}

fn parse_regions(text: &str, window: &Window) -> Result<Vec<NamedRegion>, ConfigError> {
    let standard = standard_regions(window);
    text.split(';')
        .map(|item| {
            let item = item.trim();
            let named = match standard.iter().find(|r| r.name == item) {
                Some(r) => r.clone(),
                None => {
                    let region: Region = item.parse().map_err(|e| {
                        ConfigError::invalid("regions", format!("`{item}` is neither left_half, center, corner nor a box: {e}"))
                    })?;
                    NamedRegion::new(region.to_string(), region)
                }
            };
            if !named.region.is_within(window.as_region()) {
                return Err(ConfigError::invalid("regions", format!("{} is not inside {window}", named.region)));
            }
            Ok(named)
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let missing: Vec<&'static str> = REQUIRED.into_iter().filter(|k| raw.get(k).is_none()).collect();
        if !missing.is_empty() {
            return Err(ConfigError::Missing(missing));
        }
        let experiment: Experiment = raw.get("experiment").expect("checked").parse()?;
        if let Some(key) = raw.entries.keys().find(|k| !experiment.accepts(k)) {
            return Err(ConfigError::NotApplicable { key: key.clone(), experiment });
        }
        let seed: u64 = parse_one("seed", raw.get("seed").expect("checked"))?;

        let dist = raw
            .get("dist")
            .map(|d| parse_one::<IntegerDistribution>("dist", d))
            .transpose()?;
        if dist.is_none() && matches!(experiment, Experiment::LargeNumbers | Experiment::ThinNumbers) {
            return Err(ConfigError::Missing(vec!["dist"]));
        }

        let window = match raw.get("window") {
            Some(w) => parse_one::<Window>("window", w)?,
            None => Window::unit(2).expect("dimension 2"),
        };
        let spec = raw
            .get("spec")
            .map(|s| {
                parse_spec(s, &window)
                    .map(|spec| NamedSpecOwned { name: s.to_string(), spec })
                    .map_err(|m| ConfigError::invalid("spec", m))
            })
            .transpose()?;
        if spec.is_none() && experiment == Experiment::ThinProcesses {
            return Err(ConfigError::Missing(vec!["spec"]));
        }
        if spec.is_none() && experiment == Experiment::VerifyProperties && raw.get("window").is_some() {
            return Err(ConfigError::invalid("window", "the catalog lives on the unit square; give a spec to use another window"));
        }

        let n_list = match raw.get("n") {
            Some(text) => parse_list::<u64>("n", text)?,
            None => match experiment {
                Experiment::LargeNumbers => vec![10, 100, 1000],
                Experiment::ThinNumbers => dyadic(1024),
                _ => dyadic(32),
            },
        };
        if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::invalid("n", "must be a non-empty, strictly ascending list of positive counts"));
        }

        let samples = match raw.get("samples") {
            Some(s) => parse_one::<usize>("samples", s)?,
            None => DEFAULT_SAMPLES,
        };
        if samples < 1000 {
            return Err(ConfigError::invalid("samples", format!("need at least 1000, got {samples}")));
        }

        let mode = match raw.get("mode") {
            None | Some("exact") => ModeKind::Exact,
            Some("mc") => ModeKind::MonteCarlo,
            Some(other) => return Err(ConfigError::invalid("mode", format!("`{other}` is not exact or mc"))),
        };
        if experiment == Experiment::ThinNumbers && mode == ModeKind::Exact {
            if let Some(d) = &dist {
                if d.support_max().is_none() {
                    return Err(ConfigError::invalid("mode", format!("exact mode needs a finite-support dist, got {d}")));
                }
            }
        }

        let p_list = match raw.get("p") {
            Some(text) => parse_list::<f64>("p", text)?,
            None => vec![0.1, 0.5, 0.9],
        };
        if p_list.is_empty() || p_list.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return Err(ConfigError::invalid("p", "every p must lie in (0, 1]"));
        }

        let spec_dim = spec.as_ref().map_or(2, |s| s.spec.dim());
        if spec_dim != window.dim() {
            return Err(ConfigError::invalid("window", format!("spec has dimension {spec_dim}, window {}", window.dim())));
        }
        let regions = match raw.get("regions") {
            Some(text) => parse_regions(text, &window)?,
            None => standard_regions(&window),
        };
        let dictionary = match raw.get("dictionary") {
            None | Some("all") => standard_dictionary(&window),
            Some(text) => {
                let ids: Vec<String> = text.split(',').map(|s| s.trim().to_string()).collect();
                dictionary_subset(&window, &ids).map_err(|e| ConfigError::invalid("dictionary", e))?
            }
        };

        let out = PathBuf::from(raw.get("out").unwrap_or(experiment.as_str()));
        let workers = raw
            .get("workers")
            .map(|w| parse_one::<usize>("workers", w))
            .transpose()?;
        if workers == Some(0) {
            return Err(ConfigError::invalid("workers", "must be at least 1"));
        }

        Ok(Self { experiment, seed, dist, spec, window, n_list, samples, mode, p_list, regions, dictionary, out, workers })
    }

    /// Processes to run: the configured one or the whole catalog.
    pub fn specs(&self) -> Vec<NamedSpecOwned> {
        match &self.spec {
            Some(s) => vec![s.clone()],
            None => catalog::process_catalog()
                .into_iter()
                .map(|NamedSpec { name, spec }| NamedSpecOwned { name: name.into(), spec })
                .collect(),
        }
    }

    /// Integer laws to run: the configured one or the whole catalog.
    pub fn dists(&self) -> Vec<IntegerDistribution> {
        match &self.dist {
            Some(d) => vec![d.clone()],
            None => catalog::distribution_catalog(),
        }
    }
}
