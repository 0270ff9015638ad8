use rayon::prelude::*;
use serde::Serialize;

use super::sampler::TreeSampler;
use crate::error::{Error, Result};
use crate::laws::{BranchingLaw, DisplacementLaw};
use crate::recurse::TailCurve;
use crate::seed;

/// Sorted replicate maxima.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalCdf {
    samples: Vec<f64>,
    seed: u64,
    n: usize,
    m: usize,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>, seed: u64, m: usize, n: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Precondition(
                "an empirical distribution needs at least one sample".into(),
            ));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self {
            samples,
            seed,
            n,
            m,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn reps(&self) -> usize {
        self.samples.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn horizon(&self) -> usize {
        self.n
    }

    pub fn start(&self) -> usize {
        self.m
    }

    /// `#{samples <= x} / R`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.reps() as f64
    }

    /// `#{samples < x} / R`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s < x) as f64 / self.reps() as f64
    }

    /// Lower empirical quantile: the order statistic of rank `ceil(p R)`
    /// (at least 1).
    pub fn quantile(&self, p: f64) -> f64 {
        let r = self.reps() as f64;
        // Forgive float noise such as 0.95 * 1e5 = 95000.00000000001.
        let rank = ((p * r) - 1e-9).ceil().clamp(1.0, r) as usize;
        self.samples[rank - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// `sup_x |F_R(x) - (1 - u(x))|` and a point attaining it. Both sides
    /// are right-continuous step functions, so the supremum is found among
    /// the grid points and the samples, from the right and from the left.
    pub fn ks_distance(&self, curve: &TailCurve) -> (f64, f64) {
        let grid = curve.grid();
        let mut best = (0.0, f64::NAN);
        let mut visit = |x: f64, curve_right: f64, curve_left: f64| {
            let right = (self.cdf(x) - curve_right).abs();
            let left = (self.cdf_left(x) - curve_left).abs();
            let d = right.max(left);
            if d > best.0 {
                best = (d, x);
            }
        };
        for (i, x) in grid.xs().enumerate() {
            let left = if i == 0 { 0.0 } else { curve.cdf(i - 1) };
            visit(x, curve.cdf(i), left);
        }
        let mut prev = f64::NAN;
        for &s in &self.samples {
            if s == prev {
                continue;
            }
            prev = s;
            let c = 1.0 - curve.at(s);
            // Off-grid samples sit inside a flat step of the curve.
            let on_grid = grid.offset_of(s).is_ok();
            let left = if on_grid {
                1.0 - curve.at(s - 0.5 * grid.h())
            } else {
                c
            };
            visit(s, c, left);
        }
        best
    }
}

/// `R` independent replicates; replicate `r` is seeded with
/// `seed::mix(seed, r)`, so the result does not depend on thread count.
pub fn empirical_cdf(
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
    m: usize,
    n: usize,
    reps: usize,
    seed: u64,
    node_cap: usize,
) -> Result<EmpiricalCdf> {
    if reps == 0 {
        return Err(Error::Precondition("need at least one replicate".into()));
    }
    let sampler = TreeSampler::new(branching, displacement, m, n, node_cap)?;
    let samples = (0..reps as u64)
        .into_par_iter()
        .map(|r| sampler.sample(seed::mix(seed, r)))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalCdf::from_samples(samples, seed, m, n)
}
