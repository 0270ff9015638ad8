//! One backward step `F̄^{m+1} -> F̄^m` of the exact recursion and of the
//! two bounding recursions.
//!
//! Everything is computed in tail space: for `k` children the exact step
//! needs `1 - E prod_i (1 - u(x - X_i))`, evaluated as
//! `-expm1(sum_i ln1p(-t_i))` so that tails far below machine epsilon keep
//! their relative accuracy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::qfun::{q1, qm};
use super::tail::{Normalization, TailCurve};
use crate::error::Result;
use crate::grid::Pmf;
use crate::laws::{BranchingLaw, DisplacementLaw, JointLaw, JointSampler, OffspringPmf};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    /// Displacement-vector draws per `k` for sampled joint laws.
    pub mc_budget: usize,
    pub mc_seed: u64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            mc_budget: 4096,
            mc_seed: 0x6762_7277,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StepInfo {
    pub normalization: Normalization,
    /// Largest pointwise standard error of the Monte Carlo integration
    /// (0 when every joint law is structured).
    pub mc_stderr: f64,
    pub approximate: bool,
    /// Offspring tail mass dropped by truncation, added to the error budget.
    pub truncation_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// `sum_k p_k g_k * Q_{i,k}(u)`.
    Generic,
    /// `g * Q_{m,(i)}(u)`, available when all `g_{m,k}` coincide.
    Factored,
}

/// Convolutions `g * u` shared across `k` within one step.
struct ConvCache<'a> {
    u: &'a [f64],
    entries: Vec<(*const Pmf, Vec<f64>)>,
}

impl<'a> ConvCache<'a> {
    fn new(u: &'a [f64]) -> Self {
        Self {
            u,
            entries: Vec::new(),
        }
    }

    fn get(&mut self, g: &Pmf) -> &[f64] {
        let key = g as *const Pmf;
        let idx = match self.entries.iter().position(|(p, _)| *p == key) {
            Some(i) => i,
            None => {
                let mut t = g.convolve_values(self.u, 1.0, 0.0);
                t.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
                self.entries.push((key, t));
                self.entries.len() - 1
            }
        };
        &self.entries[idx].1
    }
}

fn finish(
    m: usize,
    raw: Vec<f64>,
    u: &TailCurve,
    mut info: StepInfo,
) -> Result<(TailCurve, StepInfo)> {
    let (curve, fix) = TailCurve::normalized(*u.grid(), raw);
    curve.check_edges(m)?;
    info.normalization = fix;
    Ok((curve, info))
}

/// `F̄^m(x) = 1 - sum_k p_{m,k} E prod_{i<=k} (1 - u(x - X_i))`.
pub fn step_exact(
    m: usize,
    u: &TailCurve,
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
    opts: &StepOptions,
) -> Result<(TailCurve, StepInfo)> {
    let pmf = branching.at(m)?;
    let len = u.len();
    let mut out = vec![0.0; len];
    let mut cache = ConvCache::new(u.values());
    let mut info = StepInfo {
        truncation_error: branching.truncation_error(),
        ..StepInfo::default()
    };
    for (k, p) in pmf.support() {
        let tail_k: Vec<f64> = match displacement.joint(m, k)? {
            JointLaw::Independent { marginal } => {
                cache.get(marginal).iter().map(|&t| q1(k, t)).collect()
            }
            JointLaw::CommonShift { shift, noise, .. } => {
                let s: Vec<f64> = cache.get(noise).iter().map(|&t| q1(k, t)).collect();
                shift.convolve_values(&s, 1.0, 0.0)
            }
            JointLaw::ProductMixture(pm) => {
                let logs: Vec<Vec<f64>> = pm
                    .atoms()
                    .iter()
                    .map(|a| cache.get(a).iter().map(|&t| (-t).ln_1p()).collect())
                    .collect();
                let mut acc = vec![0.0; len];
                for (key, &w) in pm.components() {
                    for (i, a) in acc.iter_mut().enumerate() {
                        let s: f64 = key.iter().map(|&c| logs[c][i]).sum();
                        *a += w * -s.exp_m1();
                    }
                }
                acc
            }
            JointLaw::MonteCarlo(sampler) => {
                let sub = seed::mix(seed::mix(opts.mc_seed, m as u64), k as u64);
                let (t, se) = mc_tail(sampler.as_ref(), k, u, opts.mc_budget, sub);
                info.mc_stderr = info.mc_stderr.max(p * se);
                info.approximate = true;
                t
            }
        };
        for (o, t) in out.iter_mut().zip(tail_k) {
            *o += p * t;
        }
    }
    finish(m, out, u, info)
}

/// Monte Carlo estimate of `1 - E prod_i (1 - u(x_j - X_i))` at every grid
/// point, with the largest pointwise standard error.
fn mc_tail(
    sampler: &dyn JointSampler,
    k: usize,
    u: &TailCurve,
    budget: usize,
    seed: u64,
) -> (Vec<f64>, f64) {
    let grid = u.grid();
    let len = u.len();
    let log_surv: Vec<f64> = u.values().iter().map(|&v| (-v).ln_1p()).collect();
    let log_surv_at = |i: i64| -> f64 {
        if i < 0 {
            f64::NEG_INFINITY
        } else {
            log_surv.get(i as usize).copied().unwrap_or(0.0)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ys = Vec::with_capacity(k);
    let (mut sum, mut sum_sq) = (vec![0.0; len], vec![0.0; len]);
    for _ in 0..budget {
        ys.clear();
        sampler.sample(k, &mut rng, &mut ys);
        // u(x_j - y) sits at index j + floor(-y / h)
        let steps: Vec<i64> = ys
            .iter()
            .map(|&y| (-y / grid.h() + 1e-9).floor() as i64)
            .collect();
        for j in 0..len {
            let s: f64 = steps.iter().map(|&d| log_surv_at(j as i64 + d)).sum();
            let v = -s.exp_m1();
            sum[j] += v;
            sum_sq[j] += v * v;
        }
    }
    let n = budget.max(1) as f64;
    let mut max_se: f64 = 0.0;
    let mean = sum
        .iter()
        .zip(&sum_sq)
        .map(|(&s, &q)| {
            let mu = s / n;
            let var = (q / n - mu * mu).max(0.0);
            max_se = max_se.max((var / n).sqrt());
            mu
        })
        .collect();
    (mean, max_se)
}

/// The marginal shared by every `k` of generation `m`, if there is one.
fn common_marginal<'a>(
    m: usize,
    pmf: &OffspringPmf,
    displacement: &'a DisplacementLaw,
) -> Result<Option<&'a Pmf>> {
    let mut first: Option<&Pmf> = None;
    for (k, _) in pmf.support() {
        let g = displacement.marginal(m, k)?;
        match first {
            None => first = Some(g),
            Some(f) if std::ptr::eq(f, g) || f == g => {}
            Some(_) => return Ok(None),
        }
    }
    Ok(first)
}

/// Un-normalized bound values in the requested form; `None` if the
/// factored form is requested but the marginals differ across `k`.
pub fn bound_values(
    bound: Bound,
    form: BoundForm,
    m: usize,
    u: &TailCurve,
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
) -> Result<Option<Vec<f64>>> {
    let pmf = branching.at(m)?;
    let u = u.values();
    match form {
        BoundForm::Factored => {
            let Some(g) = common_marginal(m, pmf, displacement)? else {
                return Ok(None);
            };
            let (vals, fill): (Vec<f64>, f64) = match bound {
                Bound::Lower => (u.iter().map(|&v| qm(pmf, v)).collect(), qm(pmf, 1.0)),
                Bound::Upper => {
                    let mean = pmf.mean();
                    (u.iter().map(|&v| mean * v).collect(), mean)
                }
            };
            Ok(Some(g.convolve_values(&vals, fill, 0.0)))
        }
        BoundForm::Generic => {
            let mut out = vec![0.0; u.len()];
            for (k, p) in pmf.support() {
                let g = displacement.marginal(m, k)?;
                let (vals, fill): (Vec<f64>, f64) = match bound {
                    Bound::Lower => (u.iter().map(|&v| q1(k, v)).collect(), 1.0),
                    Bound::Upper => (u.iter().map(|&v| k as f64 * v).collect(), k as f64),
                };
                for (o, c) in out.iter_mut().zip(g.convolve_values(&vals, fill, 0.0)) {
                    *o += p * c;
                }
            }
            Ok(Some(out))
        }
    }
}

fn step_bound(
    bound: Bound,
    m: usize,
    u: &TailCurve,
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
) -> Result<(TailCurve, StepInfo)> {
    let raw = match bound_values(bound, BoundForm::Factored, m, u, branching, displacement)? {
        Some(v) => v,
        None => bound_values(bound, BoundForm::Generic, m, u, branching, displacement)?
            .expect("generic form always exists"),
    };
    let info = StepInfo {
        truncation_error: branching.truncation_error(),
        ..StepInfo::default()
    };
    finish(m, raw, u, info)
}

/// `sum_k p_{m,k} g_{m,k} * Q_{1,k}(u)`, a lower bound for the exact step.
pub fn step_lower(
    m: usize,
    u: &TailCurve,
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
) -> Result<(TailCurve, StepInfo)> {
    step_bound(Bound::Lower, m, u, branching, displacement)
}

/// `sum_k p_{m,k} g_{m,k} * (k u)`, clamped at 1: an upper bound for the
/// exact step.
pub fn step_upper(
    m: usize,
    u: &TailCurve,
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
) -> Result<(TailCurve, StepInfo)> {
    step_bound(Bound::Upper, m, u, branching, displacement)
}
