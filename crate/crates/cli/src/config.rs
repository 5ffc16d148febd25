//! Run configuration shared by all subcommands.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pkahler_core::{AmbientPoint, Profile, ProfileTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileChoice {
    Linear,
    Quadratic,
    Table(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Auto,
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: ProfileChoice,
    pub k: f64,
    pub seed: u64,
    pub samples: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Per-invariant tolerance overrides for `check`.
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: ProfileChoice::Linear,
            k: 1.0,
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            out: None,
            format: OutputFormat::Auto,
            tolerances: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn build_profile(&self) -> Result<Profile, CliError> {
        match &self.profile {
            ProfileChoice::Linear => Profile::linear(self.k).map_err(|e| CliError::Usage(e.to_string())),
            ProfileChoice::Quadratic => Profile::quadratic(self.k).map_err(|e| CliError::Usage(e.to_string())),
            ProfileChoice::Table(path) => ProfileTable::from_path(path)
                .map(Profile::from_table)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
        }
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Draws points with `x ∈ [−2, 2]`, `y ∈ [0.3, 3]`, `u, v ∈ [−1.5, 1.5]`.
pub fn sample_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<AmbientPoint> {
    (0..n)
        .map(|_| AmbientPoint {
            x: rng.gen_range(-2.0..2.0),
            y: rng.gen_range(0.3..3.0),
            u: rng.gen_range(-1.5..1.5),
            v: rng.gen_range(-1.5..1.5),
        })
        .collect()
}

/// A uniform grid `start:stop:n` (both ends included; `n = 1` gives `start`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, n: usize) -> Self {
        Self { start, stop, n }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.start];
        }
        (0..self.n)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.n - 1) as f64)
            .collect()
    }
}

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(format!("grid '{s}' is not of the form start:stop:n"));
        };
        let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("grid '{s}': {e}"));
        let n: usize = n.trim().parse().map_err(|e| format!("grid '{s}': {e}"))?;
        let (start, stop) = (parse(a)?, parse(b)?);
        if n == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(format!("grid '{s}' is empty or not finite"));
        }
        Ok(Self { start, stop, n })
    }
}

/// Parses `x,y,u,v`.
pub fn parse_point(s: &str) -> Result<AmbientPoint, String> {
    let c = parse_floats::<4>(s)?;
    AmbientPoint::new(c[0], c[1], c[2], c[3]).map_err(|e| e.to_string())
}

pub fn parse_floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{s}': {e}")))
        .collect::<Result<_, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("'{s}': expected {N} comma-separated numbers, got {}", v.len()))
}

/// Parses `name=value`.
pub fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("tolerance '{s}' is not of the form name=value"))?;
    let value: f64 = value.trim().parse().map_err(|e| format!("tolerance '{s}': {e}"))?;
    if !(value >= 0.0) {
        return Err(format!("tolerance '{s}' must be nonnegative"));
    }
    Ok((name.trim().to_string(), value))
}
