use serde::{Deserialize, Serialize};

use super::schedule::Schedule;
use crate::error::{Error, Result};
use crate::grid::PROB_TOL;

/// Unbounded offspring laws are cut at the smallest `K` whose tail mass is
/// below this, then renormalized.
pub const OFFSPRING_TRUNCATION: f64 = 1e-10;

/// Gap kept between the observed moment bounds and the declared `m0`/`m1`.
pub const SAFETY_MARGIN: f64 = 1e-6;

/// Offspring law of one generation, `probs[k - 1] = p_k` for `k >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OffspringPmf {
    probs: Vec<f64>,
    truncation: f64,
}

/// Descriptor of one generation's offspring law in a model file.
///
/// `Weights` lists `p_0, p_1, p_2, ...` starting at `k = 0`, so that a
/// positive `p_0` can be rejected explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PmfSpec {
    Weights(Vec<f64>),
    Geometric { geometric: f64 },
}

impl OffspringPmf {
    /// From `p_0, p_1, ...`; `generation` is only used in error messages.
    pub fn from_weights(weights: &[f64], generation: usize) -> Result<Self> {
        let bad = |detail: String| Error::NonProbability {
            context: format!("offspring law of generation {generation}"),
            detail,
        };
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(bad(format!("weight {w} is negative or non-finite")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(bad(format!("weights sum to {total}")));
        }
        match weights.first() {
            None => return Err(bad("empty weight list".into())),
            Some(&p0) if p0 > 0.0 => {
                return Err(Error::ZeroOffspring {
                    generation,
                    mass: p0,
                })
            }
            _ => {}
        }
        let mut probs = weights[1..].to_vec();
        while probs.last() == Some(&0.0) {
            probs.pop();
        }
        Ok(Self {
            probs,
            truncation: 0.0,
        })
    }

    /// `p_1, p_2, ...` directly.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        let mut w = Vec::with_capacity(probs.len() + 1);
        w.push(0.0);
        w.extend_from_slice(probs);
        Self::from_weights(&w, 0)
    }

    /// `P(K = k) = (1 - q) q^(k-1)`, truncated at [`OFFSPRING_TRUNCATION`].
    pub fn geometric(q: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::NonProbability {
                context: "geometric offspring law".into(),
                detail: format!("q = {q} outside [0, 1)"),
            });
        }
        let mut probs = Vec::new();
        let mut tail = 1.0;
        let mut k = 1;
        while tail >= OFFSPRING_TRUNCATION {
            probs.push((1.0 - q) * q.powi(k - 1));
            tail = q.powi(k);
            k += 1;
        }
        let kept: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= kept);
        Ok(Self {
            probs,
            truncation: tail,
        })
    }

    pub fn from_spec(spec: &PmfSpec, generation: usize) -> Result<Self> {
        match spec {
            PmfSpec::Weights(w) => Self::from_weights(w, generation),
            PmfSpec::Geometric { geometric } => Self::geometric(*geometric),
        }
    }

    pub fn p(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.probs.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    /// `(k, p_k)` for every `k` with `p_k > 0`.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, p)| (i + 1, *p))
    }

    pub fn max_k(&self) -> usize {
        self.probs.len()
    }

    pub fn mean(&self) -> f64 {
        self.support().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.support().map(|(k, p)| (k * k) as f64 * p).sum()
    }

    /// Tail mass removed by truncation (0 for finite laws).
    pub fn truncation(&self) -> f64 {
        self.truncation
    }
}

/// Time-indexed offspring laws `{p_{n,k}}` with declared moment bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchingLaw {
    schedule: Schedule<OffspringPmf>,
    k_max: Option<usize>,
    declared_m0: f64,
    declared_m1: f64,
    truncation_error: f64,
}

impl BranchingLaw {
    pub fn new(schedule: Schedule<OffspringPmf>, unbounded: bool) -> Self {
        let items = schedule.items();
        let inf_mean = items
            .iter()
            .map(OffspringPmf::mean)
            .fold(f64::INFINITY, f64::min);
        let sup_second = items
            .iter()
            .map(OffspringPmf::second_moment)
            .fold(0.0, f64::max);
        let declared_m0 = if inf_mean > 1.0 {
            inf_mean - SAFETY_MARGIN.min((inf_mean - 1.0) / 2.0)
        } else {
            inf_mean
        };
        let k_max = (!unbounded).then(|| items.iter().map(OffspringPmf::max_k).max().unwrap_or(1));
        let truncation_error = items
            .iter()
            .map(OffspringPmf::truncation)
            .fold(0.0, f64::max);
        Self {
            schedule,
            k_max,
            declared_m0,
            declared_m1: sup_second + SAFETY_MARGIN,
            truncation_error,
        }
    }

    pub fn constant(pmf: OffspringPmf) -> Self {
        Self::new(Schedule::Constant(pmf), false)
    }

    pub fn schedule(&self) -> &Schedule<OffspringPmf> {
        &self.schedule
    }

    pub fn at(&self, n: usize) -> Result<&OffspringPmf> {
        self.schedule
            .at(n)
            .ok_or(Error::NotScheduled { n, k: None })
    }

    /// Declared `k0`, or `None` when some generation was truncated from an
    /// unbounded law.
    pub fn k_max(&self) -> Option<usize> {
        self.k_max
    }

    pub fn declared_m0(&self) -> f64 {
        self.declared_m0
    }

    pub fn declared_m1(&self) -> f64 {
        self.declared_m1
    }

    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    /// `inf_n sum_k k p_{n,k}` over the scheduled generations.
    pub fn inf_mean(&self) -> f64 {
        self.schedule
            .items()
            .iter()
            .map(OffspringPmf::mean)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `k` with positive mass among the given generations.
    pub fn max_support(&self) -> usize {
        self.schedule
            .items()
            .iter()
            .filter_map(|p| p.support().map(|(k, _)| k).max())
            .max()
            .unwrap_or(1)
    }
}

/// Validate a schedule of offspring descriptors into a [`BranchingLaw`].
pub fn make_branching_schedule(spec: &Schedule<PmfSpec>) -> Result<BranchingLaw> {
    let schedule = spec.try_map(|n, s| OffspringPmf::from_spec(s, n))?;
    let unbounded = spec
        .items()
        .iter()
        .any(|s| matches!(s, PmfSpec::Geometric { .. }));
    Ok(BranchingLaw::new(schedule, unbounded))
}
