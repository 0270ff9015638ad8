use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Slack allowed on `[0, 1]` membership and monotonicity of stored values.
pub const CURVE_TOL: f64 = 1e-12;

/// Boundary tolerance: a curve must be within this of 1 at `x_min` and of
/// 0 at `x_max`, or mass has leaked off the grid.
pub const EDGE_TOL: f64 = 1e-9;

/// A right-continuous non-increasing step function `u(x) = P(max > x)` on
/// the grid, extended by 1 to the left and 0 to the right.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailCurve {
    #[serde(skip)]
    grid: Grid,
    values: Vec<f64>,
}

/// Corrections applied while normalizing a freshly computed curve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Normalization {
    /// Largest distance moved by clamping into `[0, 1]`.
    pub clamp: f64,
    /// Largest increase made by the right-to-left running max.
    pub monotone: f64,
}

impl TailCurve {
    /// Validates values in `[0, 1]` and non-increasing, within [`CURVE_TOL`].
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "curve has {} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values
            .iter()
            .find(|v| !(-CURVE_TOL..=1.0 + CURVE_TOL).contains(*v))
        {
            return Err(Error::DomainError(format!("tail value {v} outside [0, 1]")));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0] + CURVE_TOL) {
            return Err(Error::DomainError(format!(
                "tail curve increases at x = {}",
                grid.x(i + 1)
            )));
        }
        Ok(Self { grid, values })
    }

    /// Clamp into `[0, 1]`, then enforce monotonicity by a running max from
    /// the right. Returns the curve and the size of both corrections.
    pub fn normalized(grid: Grid, mut values: Vec<f64>) -> (Self, Normalization) {
        let mut fix = Normalization::default();
        for v in values.iter_mut() {
            let c = v.clamp(0.0, 1.0);
            fix.clamp = fix.clamp.max((c - *v).abs());
            *v = c;
        }
        for i in (0..values.len().saturating_sub(1)).rev() {
            if values[i] < values[i + 1] {
                fix.monotone = fix.monotone.max(values[i + 1] - values[i]);
                values[i] = values[i + 1];
            }
        }
        (Self { grid, values }, fix)
    }

    /// `1_{x < 0}`: the tail of the maximum after zero steps.
    pub fn base(grid: Grid) -> Self {
        let values = (0..grid.len())
            .map(|i| if i < grid.zero() { 1.0 } else { 0.0 })
            .collect();
        Self { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at grid index `i`, extended by 1 / 0 outside the grid.
    pub fn at_index(&self, i: i64) -> f64 {
        if i < 0 {
            1.0
        } else {
            self.values.get(i as usize).copied().unwrap_or(0.0)
        }
    }

    /// Value at an arbitrary real `x` (the step containing `x`).
    pub fn at(&self, x: f64) -> f64 {
        self.at_index(self.grid.floor_index(x))
    }

    /// `P(max <= x_i)`.
    pub fn cdf(&self, i: usize) -> f64 {
        1.0 - self.values[i]
    }

    /// Smallest grid `x` with `u(x) <= 1/2`, i.e. the median of the maximum.
    /// One step past `x_max` if the curve never gets there on the grid.
    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Smallest grid `x` with `P(max <= x) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let i = self.values.partition_point(|&u| 1.0 - u < p);
        self.grid.x(0) + i as f64 * self.grid.h()
    }

    /// `x -> u(x - s h)`: translate the curve right by `s` grid steps.
    pub fn shifted(&self, s: i64) -> Self {
        let values = (0..self.len() as i64)
            .map(|i| self.at_index(i - s))
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Reject curves whose mass reached either grid edge.
    pub fn check_edges(&self, m: usize) -> Result<()> {
        let (first, last) = (self.values[0], self.values[self.len() - 1]);
        if first < 1.0 - EDGE_TOL {
            return Err(Error::GridOverflow {
                m,
                edge: "left",
                value: first,
            });
        }
        if last > EDGE_TOL {
            return Err(Error::GridOverflow {
                m,
                edge: "right",
                value: last,
            });
        }
        Ok(())
    }

    /// Largest `self - other` and its grid index.
    pub fn max_excess_over(&self, other: &TailCurve) -> (f64, usize) {
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (a, b))| (a - b, i))
            .fold(
                (f64::NEG_INFINITY, 0),
                |acc, x| if x.0 > acc.0 { x } else { acc },
            )
    }
}

/// `F̄_n^n = 1_{x < 0}`. The horizon only labels the curve; its shape does
/// not depend on it.
pub fn base_tail(grid: Grid) -> TailCurve {
    TailCurve::base(grid)
}
