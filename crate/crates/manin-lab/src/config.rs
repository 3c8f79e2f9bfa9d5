//! JSON instance configuration — the single input format shared by the CLI
//! subcommands and by [`crate::assemble::end_to_end_report`].
//!
//! A config names a fan Σ(n, r, m), a bidegree-(d₁, d₂) form (explicit
//! monomials or a seeded random draw), the open set, enumeration caps, a
//! geometric B-grid, and the density-stage parameters.  Every tolerance and
//! seed is explicit in the file (or filled from a documented default), so a
//! rerun from the same config is reproducible byte for byte.

use crate::counting::{CountCaps, OpenSet};
use crate::forms::{BidegreeForm, FormError};
use crate::toric::{FanError, KleinschmidtFan};
use num::bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    // #[from] wires source(); the messages stay bare so error chains
    // don't print the cause twice
    #[error("cannot read config")]
    Io(#[from] std::io::Error),
    #[error("config parse")]
    Parse(#[from] serde_json::Error),
    #[error("fan")]
    Fan(#[from] FanError),
    #[error("form")]
    Form(#[from] FormError),
    #[error("unknown open-set id `{0}` (known: all, grad-xy, specialize-nonzero)")]
    OpenSet(String),
    #[error("B grid: {0}")]
    Grid(String),
    #[error("density stage: {0}")]
    Density(String),
}

/// One monomial of the form, as written in JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialSpec {
    /// exponent per Cox variable, in block order x₀..x_r, y_{r+1}..y_m,
    /// z_{m+1}..z_{n+1}
    pub exponents: Vec<u32>,
    pub coeff: i64,
}

/// How the form is produced: an explicit monomial list, or a seeded uniform
/// draw over the full bidegree monomial basis with coefficients in
/// [−bound, bound].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormSpec {
    Monomials(Vec<MonomialSpec>),
    Random { seed: u64, bound: u64 },
}

/// Enumeration caps.  `x_cap` truncates the |x| range where an exact count
/// would otherwise be infinite; `memory_mb` is an advisory bound checked
/// before histogram-shaped requests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsSpec {
    #[serde(default)]
    pub x_cap: Option<u64>,
    #[serde(default)]
    pub memory_mb: Option<u64>,
}

/// Geometric height grid: `points` values from `b_min` to `b_max`
/// inclusive, rounded to integers; must come out strictly increasing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub b_min: u64,
    pub b_max: u64,
    pub points: usize,
}

/// Parameters of the density stages: primes p ≤ p_max at level N_max for
/// the p-adic tables, slab width and sample budget for the archimedean
/// estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    #[serde(default = "default_p_max")]
    pub p_max: u64,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_p_max() -> u64 {
    7
}
fn default_n_max() -> u32 {
    2
}
fn default_eps() -> f64 {
    1e-3
}
fn default_samples() -> u64 {
    200_000
}
fn default_seed() -> u64 {
    1
}
fn default_openset() -> String {
    "all".to_string()
}

impl Default for DensitySpec {
    fn default() -> Self {
        DensitySpec {
            p_max: default_p_max(),
            n_max: default_n_max(),
            eps: default_eps(),
            samples: default_samples(),
            seed: default_seed(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub d1: u32,
    pub d2: u32,
    pub form: FormSpec,
    #[serde(default = "default_openset")]
    pub openset_id: String,
    #[serde(default)]
    pub caps: CapsSpec,
    pub b_grid: GridSpec,
    #[serde(default)]
    pub density: DensitySpec,
}

impl InstanceConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: InstanceConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        KleinschmidtFan::build(self.n, self.r, self.m)?;
        OpenSet::parse(&self.openset_id)
            .map_err(|_| ConfigError::OpenSet(self.openset_id.clone()))?;
        let g = &self.b_grid;
        if g.points == 0 {
            return Err(ConfigError::Grid("needs at least one point".into()));
        }
        if g.b_min < 1 {
            return Err(ConfigError::Grid("B_min must be ≥ 1".into()));
        }
        if g.points == 1 && g.b_min != g.b_max {
            return Err(ConfigError::Grid(
                "a single-point grid needs B_min = B_max".into(),
            ));
        }
        if g.points > 1 && g.b_max <= g.b_min {
            return Err(ConfigError::Grid(format!(
                "B_max = {} must exceed B_min = {}",
                g.b_max, g.b_min
            )));
        }
        let vals = self.b_grid_values();
        if vals.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Grid(format!(
                "rounded grid is not strictly increasing ({vals:?}); widen the range or drop points",
            )));
        }
        let d = &self.density;
        if d.p_max < 2 {
            return Err(ConfigError::Density("p_max must be ≥ 2".into()));
        }
        if d.n_max < 1 {
            return Err(ConfigError::Density("N_max must be ≥ 1".into()));
        }
        if !(d.eps > 0.0) {
            return Err(ConfigError::Density("eps must be positive".into()));
        }
        if d.samples < 1000 {
            return Err(ConfigError::Density("samples must be ≥ 1000".into()));
        }
        Ok(())
    }

    pub fn fan(&self) -> Result<KleinschmidtFan, ConfigError> {
        Ok(KleinschmidtFan::build(self.n, self.r, self.m)?)
    }

    pub fn build_form(&self) -> Result<BidegreeForm, ConfigError> {
        let fan = self.fan()?;
        match &self.form {
            FormSpec::Monomials(list) => {
                let terms = list
                    .iter()
                    .map(|t| (t.exponents.clone(), BigInt::from(t.coeff)))
                    .collect();
                Ok(BidegreeForm::new(&fan, self.d1, self.d2, terms)?)
            }
            FormSpec::Random { seed, bound } => {
                Ok(BidegreeForm::random(&fan, self.d1, self.d2, *bound, *seed)?)
            }
        }
    }

    pub fn openset(&self) -> Result<OpenSet, ConfigError> {
        OpenSet::parse(&self.openset_id).map_err(|_| ConfigError::OpenSet(self.openset_id.clone()))
    }

    pub fn count_caps(&self, workers: usize) -> CountCaps {
        CountCaps {
            x_cap: self.caps.x_cap,
            workers,
        }
    }

    /// The geometric grid, rounded to integers.  Endpoints land exactly on
    /// `b_min` and `b_max`; `validate` has already rejected grids whose
    /// rounding collides.
    pub fn b_grid_values(&self) -> Vec<u64> {
        let g = &self.b_grid;
        if g.points <= 1 {
            return vec![g.b_min];
        }
        let (a, b) = (g.b_min as f64, g.b_max as f64);
        let k = (g.points - 1) as f64;
        (0..g.points)
            .map(|i| (a * (b / a).powf(i as f64 / k)).round() as u64)
            .collect()
    }
}
