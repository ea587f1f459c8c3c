//! Experiment configuration: a flat key/value file (TOML syntax) whose keys
//! mirror the CLI flags, resolved against per-experiment defaults.
//!
//! ```toml
//! coin = "kempe"
//! theta-grid = "0:5:90"      # degrees; also a number or an array
//! omega-grid = [45, 90]
//! q = [0.5, 0.6, "inf"]
//! sigma2 = 0
//! steps = 1000
//! ensemble = 50
//! seed = 42
//! window-fraction = 0.5
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{Observable, WalkConfig};
use crate::sampler::EntropicIndex;
use crate::state::orthey_phase;

/// Base seed used when none is given.
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.5;
/// Trace-distance decay is fitted on the last decade of the run.
pub const TRACE_DISTANCE_WINDOW_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Time-averaged entropy over a (θ, Ω) or (θ, β) grid.
    Surface,
    /// Time-averaged entropy as a function of q.
    EntropyVsQ,
    /// Mean diffusion exponent as a function of q.
    DiffusionVsQ,
    /// Per-step observable series (entropy, coherence, IPR, variance).
    Series,
    /// Successive-state trace distance and its decay exponents.
    TraceDistance,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Surface => "surface",
            Self::EntropyVsQ => "entropy-vs-q",
            Self::DiffusionVsQ => "diffusion-vs-q",
            Self::Series => "series",
            Self::TraceDistance => "trace-distance",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Self::Surface,
            Self::EntropyVsQ,
            Self::DiffusionVsQ,
            Self::Series,
            Self::TraceDistance,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::Parse(format!("unknown experiment kind `{s}`")))
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoinKind {
    /// `[[cos θ, i sin θ], [i sin θ, cos θ]]`.
    Kempe,
    /// General coin at θ = 45°, β = γ = 0.
    Hadamard,
    /// General U(2) coin over the θ and β grids with fixed γ.
    General,
}

impl FromStr for CoinKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kempe" => Ok(Self::Kempe),
            "hadamard" => Ok(Self::Hadamard),
            "general" => Ok(Self::General),
            _ => Err(Error::Parse(format!(
                "unknown coin `{s}` (expected kempe, hadamard or general)"
            ))),
        }
    }
}

/// How the Bloch phase of the initial coin state is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseRelation {
    /// Use the `phi` value as given (half-phase convention).
    Bloch,
    /// Relative phase `arccos(−cot Ω)` for every Ω on the grid.
    Orthey,
}

impl FromStr for PhaseRelation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bloch" => Ok(Self::Bloch),
            "orthey" => Ok(Self::Orthey),
            _ => Err(Error::Parse(format!(
                "unknown phase relation `{s}` (expected bloch or orthey)"
            ))),
        }
    }
}

/// Fully resolved experiment description. Angles are in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub coin: CoinKind,
    pub theta_grid: Vec<f64>,
    pub omega_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub gamma: f64,
    pub phi: f64,
    pub phase_relation: PhaseRelation,
    pub q_grid: Vec<EntropicIndex>,
    pub sigma2_grid: Vec<f64>,
    pub steps: usize,
    pub ensemble: usize,
    pub seed: u64,
    pub window_fraction: f64,
    pub observables: Vec<Observable>,
    pub out: Option<PathBuf>,
}

/// Unresolved settings from a config file and/or command-line flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub kind: Option<ExperimentKind>,
    pub coin: Option<CoinKind>,
    pub theta_grid: Option<Vec<f64>>,
    pub omega_grid: Option<Vec<f64>>,
    pub beta_grid: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub phi: Option<f64>,
    pub phase_relation: Option<PhaseRelation>,
    pub q: Option<Vec<EntropicIndex>>,
    pub sigma2: Option<Vec<f64>>,
    pub steps: Option<usize>,
    pub ensemble: Option<usize>,
    pub seed: Option<u64>,
    pub window_fraction: Option<f64>,
    pub observables: Option<Vec<Observable>>,
    pub out: Option<PathBuf>,
}

fn key_err(key: &str, message: impl Into<String>) -> Error {
    Error::Key {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Parses a grid written as `start:step:stop` (inclusive) or a comma list.
pub fn parse_grid(text: &str) -> std::result::Result<Vec<f64>, String> {
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        let [start, step, stop] = parts[..] else {
            return Err(format!("range `{text}` must look like start:step:stop"));
        };
        if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(format!(
                "range `{text}` is empty or has a non-positive step"
            ));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + step * i as f64).collect());
    }
    text.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| format!("`{}`: {e}", p.trim()))
        })
        .collect()
}

/// Parses a comma-separated list of q values (`inf` allowed).
pub fn parse_q_list(text: &str) -> std::result::Result<Vec<EntropicIndex>, String> {
    text.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.parse::<EntropicIndex>().map_err(|e| e.to_string()))
        .collect()
}

fn number(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(key_err(
            key,
            format!("expected a number, got {} `{other}`", other.type_str()),
        )),
    }
}

fn grid(key: &str, v: &toml::Value) -> Result<Vec<f64>> {
    match v {
        toml::Value::String(s) => parse_grid(s).map_err(|e| key_err(key, e)),
        toml::Value::Array(items) => items.iter().map(|i| number(key, i)).collect(),
        other => number(key, other).map(|x| vec![x]),
    }
}

fn q_grid(key: &str, v: &toml::Value) -> Result<Vec<EntropicIndex>> {
    let one = |v: &toml::Value| -> Result<EntropicIndex> {
        match v {
            toml::Value::String(s) => s.parse().map_err(|e: Error| key_err(key, e.to_string())),
            other => {
                EntropicIndex::new(number(key, other)?).map_err(|e| key_err(key, e.to_string()))
            }
        }
    };
    match v {
        toml::Value::Array(items) => items.iter().map(one).collect(),
        toml::Value::String(s) if s.contains(',') => parse_q_list(s).map_err(|e| key_err(key, e)),
        other => one(other).map(|q| vec![q]),
    }
}

fn unsigned(key: &str, v: &toml::Value) -> Result<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        other => Err(key_err(
            key,
            format!(
                "expected a non-negative integer, got {} `{other}`",
                other.type_str()
            ),
        )),
    }
}

fn string<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| {
        key_err(
            key,
            format!("expected a string, got {} `{v}`", v.type_str()),
        )
    })
}

fn parsed<T: FromStr<Err = Error>>(key: &str, v: &toml::Value) -> Result<T> {
    string(key, v)?
        .parse()
        .map_err(|e: Error| key_err(key, e.to_string()))
}

impl RawConfig {
    /// Parses config text. Unknown keys and ill-typed values are reported
    /// with the offending key.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let mut raw = RawConfig::default();
        for (key, v) in &table {
            let k = key.as_str();
            match k {
                "kind" => raw.kind = Some(parsed(k, v)?),
                "coin" => raw.coin = Some(parsed(k, v)?),
                "theta-grid" => raw.theta_grid = Some(grid(k, v)?),
                "omega-grid" => raw.omega_grid = Some(grid(k, v)?),
                "beta-grid" => raw.beta_grid = Some(grid(k, v)?),
                "gamma" => raw.gamma = Some(number(k, v)?),
                "phi" => raw.phi = Some(number(k, v)?),
                "phase-relation" => raw.phase_relation = Some(parsed(k, v)?),
                "q" => raw.q = Some(q_grid(k, v)?),
                "sigma2" => raw.sigma2 = Some(grid(k, v)?),
                "steps" => raw.steps = Some(unsigned(k, v)? as usize),
                "ensemble" => raw.ensemble = Some(unsigned(k, v)? as usize),
                "seed" => raw.seed = Some(unsigned(k, v)?),
                "window-fraction" => raw.window_fraction = Some(number(k, v)?),
                "observables" => {
                    let names: Vec<&str> = match v {
                        toml::Value::Array(items) => {
                            items.iter().map(|i| string(k, i)).collect::<Result<_>>()?
                        }
                        other => string(k, other)?.split(',').collect(),
                    };
                    raw.observables = Some(
                        names
                            .iter()
                            .map(|n| n.parse().map_err(|e: Error| key_err(k, e.to_string())))
                            .collect::<Result<_>>()?,
                    );
                }
                "out" => raw.out = Some(PathBuf::from(string(k, v)?)),
                _ => return Err(key_err(k, "unknown key")),
            }
        }
        Ok(raw)
    }

    /// Fields set in `other` replace the ones in `self`.
    pub fn merged_with(self, other: RawConfig) -> RawConfig {
        RawConfig {
            kind: other.kind.or(self.kind),
            coin: other.coin.or(self.coin),
            theta_grid: other.theta_grid.or(self.theta_grid),
            omega_grid: other.omega_grid.or(self.omega_grid),
            beta_grid: other.beta_grid.or(self.beta_grid),
            gamma: other.gamma.or(self.gamma),
            phi: other.phi.or(self.phi),
            phase_relation: other.phase_relation.or(self.phase_relation),
            q: other.q.or(self.q),
            sigma2: other.sigma2.or(self.sigma2),
            steps: other.steps.or(self.steps),
            ensemble: other.ensemble.or(self.ensemble),
            seed: other.seed.or(self.seed),
            window_fraction: other.window_fraction.or(self.window_fraction),
            observables: other.observables.or(self.observables),
            out: other.out.or(self.out),
        }
    }

    /// Applies the defaults for `kind` and validates the result.
    pub fn resolve(self, kind: ExperimentKind) -> Result<ExperimentSpec> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(key_err(
                    "kind",
                    format!("config is for `{k}`, not `{kind}`"),
                ));
            }
        }
        let coin = self.coin.unwrap_or(CoinKind::Kempe);
        let full_sweep = || parse_grid("0:5:90").expect("static grid");
        let surface = kind == ExperimentKind::Surface;

        let theta_grid = self.theta_grid.unwrap_or_else(|| {
            if surface && coin != CoinKind::Hadamard {
                full_sweep()
            } else {
                vec![45.0]
            }
        });
        let omega_grid = self.omega_grid.unwrap_or_else(|| {
            if surface && coin != CoinKind::General {
                full_sweep()
            } else {
                vec![90.0]
            }
        });
        let beta_grid = match (self.beta_grid, coin) {
            (Some(g), CoinKind::General) => g,
            (Some(g), _) if g == [0.0] => g,
            (Some(_), _) => return Err(key_err("beta-grid", "only applies to coin = general")),
            (None, CoinKind::General) if surface => full_sweep(),
            (None, _) => vec![0.0],
        };
        let default_q = || -> Vec<EntropicIndex> {
            let mut qs: Vec<EntropicIndex> = (5..=19)
                .map(|k| EntropicIndex::Finite(k as f64 / 10.0))
                .collect();
            qs.push(EntropicIndex::Infinite);
            qs
        };
        let q_grid = self.q.unwrap_or_else(|| match kind {
            ExperimentKind::Surface => vec![EntropicIndex::Infinite],
            ExperimentKind::EntropyVsQ | ExperimentKind::DiffusionVsQ => default_q(),
            ExperimentKind::Series => vec![EntropicIndex::Finite(0.5)],
            ExperimentKind::TraceDistance => vec![
                EntropicIndex::Finite(0.5),
                EntropicIndex::Finite(0.6),
                EntropicIndex::Finite(1.0),
                EntropicIndex::Infinite,
            ],
        });
        let sigma2_grid = self.sigma2.unwrap_or_else(|| match kind {
            ExperimentKind::TraceDistance => vec![0.0, 10.0, 100.0],
            _ => vec![0.0],
        });
        let observables = self.observables.unwrap_or_else(|| match kind {
            ExperimentKind::DiffusionVsQ => vec![Observable::Variance],
            ExperimentKind::TraceDistance => vec![Observable::TraceDistance],
            _ => vec![Observable::Entropy],
        });

        let spec = ExperimentSpec {
            kind,
            coin,
            theta_grid,
            omega_grid,
            beta_grid,
            gamma: self.gamma.unwrap_or(0.0),
            phi: self.phi.unwrap_or(0.0),
            phase_relation: self.phase_relation.unwrap_or(PhaseRelation::Bloch),
            q_grid,
            sigma2_grid,
            steps: self.steps.unwrap_or(WalkConfig::DEFAULT_STEPS),
            ensemble: self.ensemble.unwrap_or(WalkConfig::DEFAULT_ENSEMBLE),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            window_fraction: self.window_fraction.unwrap_or(match kind {
                ExperimentKind::TraceDistance => TRACE_DISTANCE_WINDOW_FRACTION,
                _ => DEFAULT_WINDOW_FRACTION,
            }),
            observables,
            out: self.out,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ExperimentSpec {
    /// Checks ranges and kind-specific requirements.
    pub fn validate(&self) -> Result<()> {
        let nonempty = |key: &str, len: usize| {
            if len == 0 {
                Err(key_err(key, "grid must not be empty"))
            } else {
                Ok(())
            }
        };
        let within = |key: &str, grid: &[f64], lo: f64, hi: f64| -> Result<()> {
            nonempty(key, grid.len())?;
            match grid.iter().find(|v| !(**v >= lo && **v <= hi)) {
                Some(v) => Err(key_err(key, format!("{v} is outside [{lo}, {hi}]"))),
                None => Ok(()),
            }
        };
        within("theta-grid", &self.theta_grid, 0.0, 90.0)?;
        within("omega-grid", &self.omega_grid, 0.0, 180.0)?;
        within("beta-grid", &self.beta_grid, -360.0, 360.0)?;
        within("sigma2", &self.sigma2_grid, 0.0, f64::MAX)?;
        nonempty("q", self.q_grid.len())?;
        nonempty("observables", self.observables.len())?;
        if self.coin == CoinKind::Hadamard && self.theta_grid != [45.0] {
            return Err(key_err("theta-grid", "the Hadamard coin fixes θ = 45°"));
        }
        if !self.gamma.is_finite() {
            return Err(key_err("gamma", "must be finite"));
        }
        if !self.phi.is_finite() {
            return Err(key_err("phi", "must be finite"));
        }
        if self.steps == 0 {
            return Err(key_err("steps", "must be at least 1"));
        }
        if self.ensemble == 0 {
            return Err(key_err("ensemble", "must be at least 1"));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction < 1.0) {
            return Err(key_err(
                "window-fraction",
                format!("{} is outside (0, 1)", self.window_fraction),
            ));
        }
        if self.phase_relation == PhaseRelation::Orthey {
            for &omega in &self.omega_grid {
                orthey_phase(omega.to_radians())
                    .map_err(|e| key_err("omega-grid", format!("{omega}°: {e}")))?;
            }
        }
        Ok(())
    }
}

/// Reads and parses a config file.
pub fn parse_config(path: &Path) -> Result<RawConfig> {
    let text = std::fs::read_to_string(path)?;
    RawConfig::from_toml_str(&text)
}
