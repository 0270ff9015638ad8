//! JSON model files.
//!
//! ```json
//! {
//!   "grid": { "xmin": -60, "xmax": 60, "h": 0.05 },
//!   "branching": { "type": "constant", "pmfs": [[0, 0.5, 0.5]] },
//!   "displacement": { "family": "independent",
//!                     "marginal": { "type": "gaussian", "mean": 0, "sd": 1 } }
//! }
//! ```
//!
//! Offspring pmfs list `p_0, p_1, ...` or `{"geometric": q}`. A displacement
//! block is either one level, used for every generation, or
//! `{"type": "periodic" | "explicit", "levels": [...]}`. Within a level,
//! `marginal`, `noise`, `shift` and `coordinates` may be given once or as a
//! map from `k` to a value (set `"per_k": true`).

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::branching::{make_branching_schedule, BranchingLaw, PmfSpec};
use super::displacement::{
    DisplacementLaw, DisplacementLevel, EquicorrelatedGaussian, JointLaw, ProductMixture,
};
use super::schedule::{Schedule, ScheduleKind};
use crate::error::{Error, Result};
use crate::grid::{Grid, Pmf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub h: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            xmin: Grid::DEFAULT_XMIN,
            xmax: Grid::DEFAULT_XMAX,
            h: Grid::DEFAULT_H,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchingSpec {
    #[serde(rename = "type", default)]
    pub kind: ScheduleKind,
    pub pmfs: Vec<PmfSpec>,
}

/// A one-dimensional law, rasterized onto the model grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Point {
        at: f64,
    },
    Discrete {
        points: Vec<f64>,
        weights: Vec<f64>,
    },
    Gaussian {
        mean: f64,
        sd: f64,
    },
    Exponential {
        rate: f64,
        #[serde(default)]
        offset: f64,
    },
    Lomax {
        alpha: f64,
        scale: f64,
        #[serde(default)]
        offset: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
}

impl DistSpec {
    pub fn to_pmf(&self, grid: &Grid) -> Result<Pmf> {
        match self {
            Self::Point { at } => Pmf::point(grid, *at),
            Self::Discrete { points, weights } => Pmf::discrete(grid, points, weights),
            Self::Gaussian { mean, sd } => Pmf::gaussian(grid, *mean, *sd),
            Self::Exponential { rate, offset } => Pmf::exponential(grid, *rate, *offset),
            Self::Lomax {
                alpha,
                scale,
                offset,
            } => Pmf::lomax(grid, *alpha, *scale, *offset),
            Self::Uniform { lo, hi } => Pmf::uniform(grid, *lo, *hi),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerSpec {
    EquicorrelatedGaussian { mean: f64, sd: f64, rho: f64 },
}

/// A value given once for all `k`, or per `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerK<T> {
    One(T),
    // String keys: untagged enums cannot parse integer map keys.
    Each(BTreeMap<String, T>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilySpec {
    Independent,
    CommonShift,
    Product,
    #[serde(alias = "monte_carlo")]
    Mc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub family: FamilySpec,
    #[serde(default)]
    pub per_k: bool,
    #[serde(default, alias = "noise", skip_serializing_if = "Option::is_none")]
    pub marginal: Option<PerK<DistSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<PerK<DistSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<PerK<Vec<DistSpec>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DisplacementSpec {
    Scheduled {
        #[serde(rename = "type")]
        kind: ScheduleKind,
        levels: Vec<LevelSpec>,
    },
    Level(LevelSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub grid: GridSpec,
    pub branching: BranchingSpec,
    pub displacement: DisplacementSpec,
}

/// A validated model: grid, offspring laws and displacement laws.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub grid: Grid,
    pub branching: BranchingLaw,
    pub displacement: DisplacementLaw,
}

impl Model {
    pub fn from_config(config: ModelConfig) -> Result<Self> {
        let grid = Grid::new(config.grid.xmin, config.grid.xmax, config.grid.h)?;
        let spec = Schedule::from_parts(config.branching.kind, config.branching.pmfs.clone())
            .ok_or_else(|| {
                Error::Config(
                    "branching: a constant schedule takes exactly one pmf, others at least one"
                        .into(),
                )
            })?;
        let branching = make_branching_schedule(&spec)?;
        let (kind, levels) = match &config.displacement {
            DisplacementSpec::Scheduled { kind, levels } => (*kind, levels.clone()),
            DisplacementSpec::Level(l) => (ScheduleKind::Constant, vec![l.clone()]),
        };
        let levels = levels
            .iter()
            .map(|l| build_level(&grid, l))
            .collect::<Result<Vec<_>>>()?;
        let schedule = Schedule::from_parts(kind, levels).ok_or_else(|| {
            Error::Config("displacement: a constant schedule takes exactly one level".into())
        })?;
        let displacement = DisplacementLaw::new(grid, schedule)?;
        Ok(Self {
            config,
            grid,
            branching,
            displacement,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ModelConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("model file: {e}")))?;
        Self::from_config(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

fn per_k_map<T: Clone>(
    value: &PerK<T>,
    per_k: bool,
    what: &str,
) -> Result<(Option<T>, BTreeMap<usize, T>)> {
    match (value, per_k) {
        (PerK::One(v), false) => Ok((Some(v.clone()), BTreeMap::new())),
        (PerK::Each(m), true) => Ok((None, parse_keys(m, what)?)),
        (PerK::One(_), true) => Err(Error::Config(format!(
            "`{what}` must map k to a value when per_k is set"
        ))),
        (PerK::Each(_), false) => Err(Error::Config(format!(
            "`{what}` is given per k; set \"per_k\": true"
        ))),
    }
}

fn parse_keys<T: Clone>(m: &BTreeMap<String, T>, what: &str) -> Result<BTreeMap<usize, T>> {
    m.iter()
        .map(|(k, v)| {
            k.trim()
                .parse::<usize>()
                .map(|k| (k, v.clone()))
                .map_err(|_| {
                    Error::Config(format!("`{what}`: key {k:?} is not an offspring count"))
                })
        })
        .collect()
}

fn require<'a, T>(v: &'a Option<T>, what: &str, family: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::Config(format!("family `{family}` needs `{what}`")))
}

fn build_level(grid: &Grid, spec: &LevelSpec) -> Result<DisplacementLevel> {
    match spec.family {
        FamilySpec::Independent => {
            let (one, each) = per_k_map(
                require(&spec.marginal, "marginal", "independent")?,
                spec.per_k,
                "marginal",
            )?;
            let law =
                |d: &DistSpec| -> Result<JointLaw> { Ok(JointLaw::independent(d.to_pmf(grid)?)) };
            DisplacementLevel::new(
                one.as_ref().map(law).transpose()?,
                each.iter()
                    .map(|(&k, d)| Ok((k, law(d)?)))
                    .collect::<Result<_>>()?,
            )
        }
        FamilySpec::CommonShift => {
            let (noise_one, noise_each) = per_k_map(
                require(&spec.marginal, "noise", "common_shift")?,
                spec.per_k,
                "noise",
            )?;
            let (shift_one, shift_each) = per_k_map(
                require(&spec.shift, "shift", "common_shift")?,
                spec.per_k,
                "shift",
            )?;
            let default = match (noise_one, shift_one) {
                (Some(z), Some(y)) => {
                    Some(JointLaw::common_shift(y.to_pmf(grid)?, z.to_pmf(grid)?))
                }
                _ => None,
            };
            let mut per_k = BTreeMap::new();
            for (k, z) in &noise_each {
                let y = shift_each.get(k).ok_or_else(|| {
                    Error::Config(format!("common_shift: no shift given for k = {k}"))
                })?;
                per_k.insert(*k, JointLaw::common_shift(y.to_pmf(grid)?, z.to_pmf(grid)?));
            }
            DisplacementLevel::new(default, per_k)
        }
        FamilySpec::Product => {
            let coords = require(&spec.coordinates, "coordinates", "product")?;
            let lists: Vec<&Vec<DistSpec>> = match coords {
                PerK::One(v) => vec![v],
                PerK::Each(m) => m.values().collect(),
            };
            let mut per_k = BTreeMap::new();
            for list in lists {
                let pmfs = list
                    .iter()
                    .map(|d| d.to_pmf(grid))
                    .collect::<Result<Vec<_>>>()?;
                let pm = ProductMixture::product(pmfs)?;
                per_k.insert(pm.k(), JointLaw::ProductMixture(pm));
            }
            DisplacementLevel::new(None, per_k)
        }
        FamilySpec::Mc => {
            let sampler = match require(&spec.sampler, "sampler", "mc")? {
                SamplerSpec::EquicorrelatedGaussian { mean, sd, rho } => {
                    EquicorrelatedGaussian::new(grid, *mean, *sd, *rho)?
                }
            };
            DisplacementLevel::uniform(JointLaw::MonteCarlo(Arc::new(sampler)))
        }
    }
}
