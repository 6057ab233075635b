use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use skewsop::{Beta, Potential};
use thiserror::Error;

pub const SCHEMA_VERSION: &str = "1";
/// Scalar indices kept beyond the 2(N + 2d) an N-window with its deformations needs.
pub const GUARD: usize = 4;
/// Digits of the extended working precision.
pub const MAX_DIGITS: u32 = 32;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Potential(#[from] skewsop::Error),
}

fn field(name: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: name.into(), message: message.into() }
}

/// The file format: every number is a decimal string.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub version: String,
    /// u_1, …, u_2d of V(x) = Σ u_k x^k / k
    pub potential: Vec<String>,
    pub beta: String,
    #[serde(rename = "N")]
    pub n: String,
    pub n_scalar: String,
    #[serde(default)]
    pub precision: Option<String>,
    /// invariant id → tolerance, replacing the built-in one
    #[serde(default)]
    pub tolerances: BTreeMap<String, String>,
    #[serde(default)]
    pub grid: Option<RawGrid>,
    #[serde(default)]
    pub x: Option<Vec<String>>,
    /// imaginary part added to x for the fundamental solutions
    #[serde(default)]
    pub imag: Option<String>,
    /// deformation index K
    #[serde(default, rename = "K")]
    pub k: Option<String>,
    #[serde(default)]
    pub seed: Option<String>,
    #[serde(default)]
    pub samples: Option<String>,
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub lo: String,
    pub hi: String,
    pub points: String,
}

/// Command-line values that replace config fields.
#[derive(Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub precision: Option<String>,
    pub seed: Option<String>,
    pub beta: Option<String>,
    pub n: Option<String>,
    pub x: Option<String>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub potential: Potential,
    pub beta: Beta,
    pub n: usize,
    pub n_scalar: usize,
    pub digits: u32,
    pub tolerances: BTreeMap<String, f64>,
    pub grid: Vec<f64>,
    pub xs: Vec<f64>,
    pub imag: f64,
    pub k: u32,
    pub seed: u64,
    pub samples: usize,
    pub out: PathBuf,
}

fn real(name: &str, s: &str) -> Result<f64, ConfigError> {
    let v: f64 = s.trim().parse().map_err(|_| field(name, format!("`{s}` is not a decimal number")))?;
    if !v.is_finite() {
        return Err(field(name, format!("`{s}` is not finite")));
    }
    Ok(v)
}

fn integer<T: std::str::FromStr>(name: &str, s: &str) -> Result<T, ConfigError> {
    s.trim().parse().map_err(|_| field(name, format!("`{s}` is not a non-negative integer")))
}

impl RunConfig {
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        let raw: RawConfig = serde_json::from_str(&text)?;
        Self::from_raw(raw, ov)
    }

    pub fn from_raw(mut raw: RawConfig, ov: &Overrides) -> Result<Self, ConfigError> {
        if raw.version != SCHEMA_VERSION {
            return Err(field("version", format!("unsupported schema `{}` (expected `{SCHEMA_VERSION}`)", raw.version)));
        }
        if let Some(v) = &ov.beta {
            raw.beta = v.clone();
        }
        if let Some(v) = &ov.n {
            raw.n = v.clone();
        }
        if let Some(v) = &ov.precision {
            raw.precision = Some(v.clone());
        }
        if let Some(v) = &ov.seed {
            raw.seed = Some(v.clone());
        }
        if let Some(v) = &ov.x {
            raw.x = Some(v.split(',').map(|s| s.trim().to_string()).collect());
        }

        let coeffs = raw
            .potential
            .iter()
            .enumerate()
            .map(|(i, s)| real(&format!("potential[{i}]"), s))
            .collect::<Result<Vec<_>, _>>()?;
        let potential = Potential::new(coeffs)?;
        let d = potential.d();

        let beta = Beta::from_int(integer("beta", &raw.beta)?).map_err(|_| field("beta", "must be 1 or 4"))?;
        let n: usize = integer("N", &raw.n)?;
        if n < d {
            return Err(field("N", format!("N = {n} is below the potential's d = {d}")));
        }
        let n_scalar: usize = integer("n_scalar", &raw.n_scalar)?;
        let need = 2 * (n + 2 * d) + GUARD;
        if n_scalar < need {
            return Err(field("n_scalar", format!("{n_scalar} < 2(N + 2d) + {GUARD} = {need}")));
        }
        if !n_scalar.is_multiple_of(2) {
            return Err(field("n_scalar", "must be even"));
        }

        let digits: u32 = match &raw.precision {
            Some(s) => integer("precision", s)?,
            None => MAX_DIGITS,
        };
        if !(1..=MAX_DIGITS).contains(&digits) {
            return Err(field("precision", format!("{digits} digits is outside 1..={MAX_DIGITS}")));
        }

        let mut tolerances = BTreeMap::new();
        for (id, s) in &raw.tolerances {
            let t = real(&format!("tolerances.{id}"), s)?;
            if t <= 0.0 {
                return Err(field(&format!("tolerances.{id}"), "must be positive"));
            }
            tolerances.insert(id.clone(), t);
        }

        let grid = match &raw.grid {
            Some(g) => {
                let (lo, hi) = (real("grid.lo", &g.lo)?, real("grid.hi", &g.hi)?);
                let points: usize = integer("grid.points", &g.points)?;
                if lo >= hi {
                    return Err(field("grid", "lo must be below hi"));
                }
                if points < 2 {
                    return Err(field("grid.points", "need at least 2 points"));
                }
                (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
            }
            None => (0..61).map(|i| -3.0 + 0.1 * i as f64).collect(),
        };

        let xs = match &raw.x {
            Some(v) if v.is_empty() => return Err(field("x", "list is empty")),
            Some(v) => v.iter().enumerate().map(|(i, s)| real(&format!("x[{i}]"), s)).collect::<Result<Vec<_>, _>>()?,
            None => vec![-0.7, 0.35, 1.1],
        };
        let imag = match &raw.imag {
            Some(s) => real("imag", s)?,
            None => 0.5,
        };
        if imag.abs() < skewsop::fundamental::MIN_IM {
            return Err(field("imag", format!("|imag| must be at least {}", skewsop::fundamental::MIN_IM)));
        }
        let k: u32 = match &raw.k {
            Some(s) => integer("K", s)?,
            None => 2 * d as u32,
        };
        if k == 0 || k as usize > 2 * d {
            return Err(field("K", format!("must be in 1..={}", 2 * d)));
        }
        let seed: u64 = match &raw.seed {
            Some(s) => integer("seed", s)?,
            None => 0x5eed,
        };
        let samples: usize = match &raw.samples {
            Some(s) => integer("samples", s)?,
            None => 100_000,
        };
        if samples < 10_000 {
            return Err(field("samples", "at least 10000 samples are required"));
        }
        let out = ov.out.clone().or_else(|| raw.out.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));

        Ok(RunConfig { potential, beta, n, n_scalar, digits, tolerances, grid, xs, imag, k, seed, samples, out })
    }
}
