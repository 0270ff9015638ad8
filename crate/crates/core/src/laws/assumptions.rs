//! Decide whether a model instance satisfies the branching, marginal-tail
//! and joint-tail assumptions.
//!
//! "For all n" is only checkable for finitely many generations: the checks
//! visit the periodic closure of the two schedules, or the explicit prefix
//! up to the run horizon. Only pairs `(n, k)` with `p_{n,k} > 0` are
//! quantified over.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::branching::BranchingLaw;
use super::displacement::{DisplacementLaw, JointLaw};
use super::schedule::generations_to_check;
use crate::error::{Error, Result};
use crate::grid::{CdfTable, Pmf};
use crate::report::{ext, AssumptionReport, Check};

/// Threshold above which tail mass at the right grid edge counts as
/// unresolved.
pub const EDGE_MASS_TOL: f64 = 1e-12;

/// Relative slack on the tail-ratio comparison.
pub const RATIO_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchingVariant {
    /// Bounded support and mean bounded away from 1.
    Bounded,
    /// Possibly unbounded support with a second-moment bound.
    IdenticalMarginal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointTailVariant {
    /// `G(B, ..., B) >= 1 - eta` and `G([-B, inf)^k) >= 1 - eta`.
    Gt,
    /// `G(B, ..., B) >= 1 - eta` and `P(X > -B) >= 1 - eta` on the marginal.
    GtPrime,
}

pub fn check_branching_assumptions(
    law: &BranchingLaw,
    variant: BranchingVariant,
) -> AssumptionReport {
    let mut report = AssumptionReport::new();
    let items = law.schedule().items();
    let (argmin, inf_mean) =
        items
            .iter()
            .map(|p| p.mean())
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, m)| if m < acc.1 { (i, m) } else { acc },
            );
    let m0 = law.declared_m0();
    let mean_ok = inf_mean > m0 && m0 > 1.0;

    match variant {
        BranchingVariant::Bounded => {
            let k0 = law.k_max();
            report.push(Check::new(
                "B1",
                k0.is_some(),
                if k0.is_some() { 0.0 } else { -1.0 },
                json!({ "k0": k0, "truncation_error": law.truncation_error() }),
            ));
            report.push(Check::new(
                "B2",
                mean_ok,
                inf_mean - 1.0,
                json!({ "inf_mean": inf_mean, "generation": argmin, "m0": m0,
                        "safety_margin": inf_mean - m0 }),
            ));
        }
        BranchingVariant::IdenticalMarginal => {
            let (arg2, sup_second) = items
                .iter()
                .map(|p| p.second_moment())
                .enumerate()
                .fold((0, 0.0), |acc, (i, s)| if s > acc.1 { (i, s) } else { acc });
            let m1 = law.declared_m1();
            let second_ok = sup_second < m1;
            report.push(Check::new(
                "B1'",
                mean_ok && second_ok,
                (inf_mean - 1.0).min(m1 - sup_second),
                json!({ "inf_mean": inf_mean, "mean_generation": argmin, "m0": m0,
                        "sup_second_moment": sup_second, "second_moment_generation": arg2,
                        "m1": m1, "truncation_error": law.truncation_error() }),
            ));
        }
    }
    report
}

/// `(n, k, joint)` for every generation to check and every `k` with `p_{n,k} > 0`.
pub fn scheduled_pairs<'a>(
    branching: &BranchingLaw,
    displacement: &'a DisplacementLaw,
    horizon: Option<usize>,
) -> Result<Vec<(usize, usize, &'a JointLaw)>> {
    let gens = generations_to_check(branching.schedule(), displacement.schedule(), horizon);
    let mut out = Vec::new();
    for n in gens {
        for (k, _) in branching.at(n)?.support() {
            out.push((n, k, displacement.joint(n, k)?));
        }
    }
    Ok(out)
}

fn distinct_marginals<'a>(pairs: &[(usize, usize, &'a JointLaw)]) -> Vec<(usize, usize, &'a Pmf)> {
    let mut out: Vec<(usize, usize, &Pmf)> = Vec::new();
    for &(n, k, law) in pairs {
        let g = law.marginal();
        if !out.iter().any(|(_, _, h)| std::ptr::eq(*h, g) || *h == g) {
            out.push((n, k, g));
        }
    }
    out
}

/// Marginal-tail assumptions: the location condition with its `x0` shift
/// and the exponential right-tail decay with rate `a` past `onset`.
pub fn check_marginal_assumptions(
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
    eps0: f64,
    a: f64,
    onset: f64,
    horizon: Option<usize>,
) -> Result<AssumptionReport> {
    let grid = displacement.grid();
    let pairs = scheduled_pairs(branching, displacement, horizon)?;
    let marginals = distinct_marginals(&pairs);
    let mut report = AssumptionReport::new();

    let m0 = branching.declared_m0();
    let eps_cap = if m0 > 1.0 {
        (0.25 * m0.ln()).min(1.0)
    } else {
        0.0
    };
    report.push(Check::new(
        "MT1.eps0",
        eps0 > 0.0 && eps0 < eps_cap,
        eps_cap - eps0,
        json!({ "eps0": eps0, "cap": eps_cap, "m0": m0 }),
    ));

    // Largest x0 with P(X >= x0) >= 1 - eps0 for every marginal.
    let mut x0 = i64::MAX;
    let mut worst = (0, 0);
    for &(n, k, g) in &marginals {
        let t = g.table();
        let mut d = g.min_offset();
        while d < g.max_offset() && t.sf_left(d + 1) >= 1.0 - eps0 {
            d += 1;
        }
        if d < x0 {
            x0 = d;
            worst = (n, k);
        }
    }
    let margin = marginals
        .iter()
        .map(|(_, _, g)| g.sf_left(x0) - (1.0 - eps0))
        .fold(f64::INFINITY, f64::min);
    report.push(Check::new(
        "MT1",
        margin >= 0.0,
        margin,
        json!({ "x0": grid.x_of_offset(x0), "shift_steps": -x0, "shift": -grid.x_of_offset(x0),
                "binding": { "n": worst.0, "k": worst.1 } }),
    ));

    let mut worst_ratio = f64::NEG_INFINITY;
    let mut witness = json!(null);
    // Window lengths are grid multiples strictly greater than the onset.
    let first_window = (onset / grid.h() + 1e-9).floor() as i64 + 1;
    for &(n, k, g) in &marginals {
        let edge = g.edge_mass_right(grid);
        if edge > EDGE_MASS_TOL {
            return Err(Error::GridTooNarrow { n, k, mass: edge });
        }
        let t = g.table();
        let top = g.max_offset();
        let log_sf: Vec<f64> = (0..=top.max(0)).map(|d| t.sf(d).ln()).collect();
        for j in first_window..=top.max(0) {
            let decay = a * grid.x_of_offset(j);
            for d in 0..=(top - j) {
                let (num, den) = (log_sf[(d + j) as usize], log_sf[d as usize]);
                if num == f64::NEG_INFINITY {
                    break;
                }
                let ratio = (num - den + decay).exp();
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    witness = json!({ "n": n, "k": k, "x": grid.x_of_offset(d), "M": grid.x_of_offset(j),
                                      "tail_x": den.exp(), "tail_x_plus_M": num.exp() });
                }
            }
        }
    }
    let pass = worst_ratio <= 1.0 + RATIO_TOL;
    report.push(Check::new(
        "MT2",
        pass,
        if worst_ratio.is_finite() {
            1.0 - worst_ratio
        } else {
            1.0
        },
        json!({ "a": a, "M0": onset, "max_ratio": ext(worst_ratio.max(0.0)), "worst": witness }),
    ));
    Ok(report)
}

/// Every scheduled level uses one marginal for all `k`.
pub fn check_identical_marginals(displacement: &DisplacementLaw) -> Check {
    let pass = displacement.identical_marginals();
    Check::new("MT0'", pass, if pass { 0.0 } else { -1.0 }, json!({}))
}

/// `(P(all X_i <= b h), P(all X_i >= -b h))` for the joint law with `k`
/// coordinates; under `GtPrime` the second entry is the marginal
/// `P(X > -b h)` instead.
pub fn joint_tail_at(
    law: &JointLaw,
    k: usize,
    b: i64,
    variant: JointTailVariant,
) -> Result<(f64, f64)> {
    let tables = JointTables::new(law)?;
    Ok(tables.at(k, b, variant))
}

enum JointTables {
    Independent(CdfTable),
    CommonShift {
        shift: Vec<(i64, f64)>,
        shift_lost: (f64, f64),
        noise: CdfTable,
        marginal: CdfTable,
    },
    Product {
        atoms: Vec<CdfTable>,
        components: Vec<(Vec<usize>, f64)>,
        marginal: CdfTable,
    },
}

impl JointTables {
    fn new(law: &JointLaw) -> Result<Self> {
        Ok(match law {
            JointLaw::Independent { marginal } => Self::Independent(marginal.table()),
            JointLaw::CommonShift {
                shift,
                noise,
                marginal,
            } => Self::CommonShift {
                shift: {
                    let kept = 1.0 - shift.lost_left() - shift.lost_right();
                    shift.atoms().map(|(d, w)| (d, kept * w)).collect()
                },
                shift_lost: (shift.lost_left(), shift.lost_right()),
                noise: noise.table(),
                marginal: marginal.table(),
            },
            JointLaw::ProductMixture(p) => Self::Product {
                atoms: p.atoms().iter().map(Pmf::table).collect(),
                components: p
                    .components()
                    .iter()
                    .map(|(c, w)| (c.clone(), *w))
                    .collect(),
                marginal: p.marginal().table(),
            },
            JointLaw::MonteCarlo(s) => {
                return Err(Error::UnsupportedFamily(format!(
                    "joint tail of the sampled law `{}` has no grid formula",
                    s.name()
                )))
            }
        })
    }

    fn at(&self, k: usize, b: i64, variant: JointTailVariant) -> (f64, f64) {
        let ki = k as i32;
        let (upper, lower) = match self {
            Self::Independent(t) => (t.cdf(b).powi(ki), t.sf_left(-b).powi(ki)),
            // A shift lost off the grid counts as all-below or all-above.
            Self::CommonShift {
                shift,
                shift_lost,
                noise,
                ..
            } => shift.iter().fold(*shift_lost, |(u, l), &(s, w)| {
                (
                    u + w * noise.cdf(b - s).powi(ki),
                    l + w * noise.sf_left(-b - s).powi(ki),
                )
            }),
            Self::Product {
                atoms, components, ..
            } => components.iter().fold((0.0, 0.0), |(u, l), (c, w)| {
                let pu: f64 = c.iter().map(|&i| atoms[i].cdf(b)).product();
                let pl: f64 = c.iter().map(|&i| atoms[i].sf_left(-b)).product();
                (u + w * pu, l + w * pl)
            }),
        };
        let lower = match variant {
            JointTailVariant::Gt => lower,
            JointTailVariant::GtPrime => self.marginal().sf(-b),
        };
        (upper, lower)
    }

    fn marginal(&self) -> &CdfTable {
        match self {
            Self::Independent(t) => t,
            Self::CommonShift { marginal, .. } | Self::Product { marginal, .. } => marginal,
        }
    }
}

/// Result of the search for the smallest certifying `B`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointTailFit {
    /// `B` in grid steps, or `None` if no `B` within the grid span works.
    pub b_steps: Option<i64>,
    pub b: Option<f64>,
    /// Smallest of the two probabilities over all checked `(n, k)` at the
    /// reported `B` (at the largest tried `B` on failure).
    pub worst_probability: f64,
    pub worst_n: usize,
    pub worst_k: usize,
    /// Unbounded offspring laws were checked only up to `k_cap`.
    pub partial: bool,
    pub k_cap: usize,
}

pub fn fit_joint_tail(
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
    eta1: f64,
    variant: JointTailVariant,
    horizon: Option<usize>,
) -> Result<JointTailFit> {
    let grid = displacement.grid();
    let pairs = scheduled_pairs(branching, displacement, horizon)?;
    let mut cache: Vec<(&JointLaw, JointTables)> = Vec::new();
    let mut lookups = Vec::with_capacity(pairs.len());
    for &(n, k, law) in &pairs {
        let idx = match cache.iter().position(|(l, _)| std::ptr::eq(*l, law)) {
            Some(i) => i,
            None => {
                cache.push((law, JointTables::new(law)?));
                cache.len() - 1
            }
        };
        lookups.push((n, k, idx));
    }
    let worst_at = |b: i64| {
        lookups
            .iter()
            .map(|&(n, k, i)| {
                let (u, l) = cache[i].1.at(k, b, variant);
                (u.min(l), n, k)
            })
            .fold(
                (f64::INFINITY, 0, 0),
                |acc, x| if x.0 < acc.0 { x } else { acc },
            )
    };
    let ok = |b: i64| worst_at(b).0 >= 1.0 - eta1;

    let span = grid.len() as i64;
    let (b_steps, probe) = if ok(1) {
        (Some(1), 1)
    } else if !ok(span) {
        (None, span)
    } else {
        // ok(lo) false, ok(hi) true; both probabilities are non-decreasing in b.
        let (mut lo, mut hi) = (1, span);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (Some(hi), hi)
    };
    let (worst_probability, worst_n, worst_k) = worst_at(probe);
    Ok(JointTailFit {
        b_steps,
        b: b_steps.map(|s| grid.x_of_offset(s)),
        worst_probability,
        worst_n,
        worst_k,
        partial: branching.k_max().is_none(),
        k_cap: branching.max_support(),
    })
}

/// Smallest grid `B > 0` certifying the joint-tail assumption for every
/// checked `(n, k)`.
pub fn check_joint_tail(
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
    eta1: f64,
    variant: JointTailVariant,
    horizon: Option<usize>,
) -> Result<AssumptionReport> {
    let fit = fit_joint_tail(branching, displacement, eta1, variant, horizon)?;
    let name = match variant {
        JointTailVariant::Gt => "GT",
        JointTailVariant::GtPrime => "GT'",
    };
    let mut report = AssumptionReport::new();
    report.push(Check::new(
        name,
        fit.b_steps.is_some(),
        fit.worst_probability - (1.0 - eta1),
        json!({ "eta1": eta1, "B": fit.b, "B_steps": fit.b_steps, "n": fit.worst_n, "k": fit.worst_k,
                "worst_probability": fit.worst_probability, "partial": fit.partial, "k_cap": fit.k_cap }),
    ));
    Ok(report)
}
