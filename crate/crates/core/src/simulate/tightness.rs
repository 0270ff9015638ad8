use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ecdf::empirical_cdf;
use crate::error::{Error, Result};
use crate::laws::{BranchingLaw, DisplacementLaw};

/// Quantiles of `M_n - Med(M_n)` at one horizon. `q_lo` and `q_hi` are
/// already recentered, so `q_lo <= 0 <= q_hi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub n: usize,
    pub median: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    pub width: f64,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightnessTable {
    pub delta: f64,
    pub rows: Vec<TightnessRow>,
}

impl TightnessTable {
    pub fn widths(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.width).collect()
    }

    pub fn row(&self, n: usize) -> Option<&TightnessRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    pub fn max_width(&self) -> f64 {
        self.rows.iter().map(|r| r.width).fold(0.0, f64::max)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "n,median,q_lo,q_hi,width,reps,seed")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.n, r.median, r.q_lo, r.q_hi, r.width, r.reps, r.seed
            )?;
        }
        Ok(())
    }
}

/// Recentered `delta` and `1 - delta` quantiles of the maximum at each
/// horizon, each estimated from `reps` replicates started at generation 0.
/// Every horizon reuses the same base seed.
pub fn tightness_report(
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
    horizons: &[usize],
    reps: usize,
    delta: f64,
    seed: u64,
    node_cap: usize,
) -> Result<TightnessTable> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Precondition(format!(
            "delta must lie in (0, 1/2), got {delta}"
        )));
    }
    let rows = horizons
        .iter()
        .map(|&n| {
            let e = empirical_cdf(branching, displacement, 0, n, reps, seed, node_cap)?;
            let median = e.median();
            let q_lo = e.quantile(delta) - median;
            let q_hi = e.quantile(1.0 - delta) - median;
            Ok(TightnessRow {
                n,
                median,
                q_lo,
                q_hi,
                width: q_hi - q_lo,
                reps,
                seed,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TightnessTable { delta, rows })
}
