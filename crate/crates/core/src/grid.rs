//! The shared uniform grid and grid-aligned probability mass functions.
//!
//! Every marginal, shift law and tail curve lives on one grid
//! `x_i = (i - zero) * h`, `i = 0..len`, with `x_zero = 0` exactly. A
//! displacement law is stored as a sparse pmf over integer *offsets* `d`
//! (the atom sits at `d * h`), which makes convolution with a tail curve an
//! exact index shift.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Tolerance on weight sums for anything that claims to be a pmf.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    xmin: f64,
    xmax: f64,
    h: f64,
    len: usize,
    zero: usize,
}

impl Grid {
    pub const DEFAULT_XMIN: f64 = -60.0;
    pub const DEFAULT_XMAX: f64 = 60.0;
    pub const DEFAULT_H: f64 = 0.05;

    pub fn new(xmin: f64, xmax: f64, h: f64) -> Result<Self> {
        if !(xmin.is_finite() && xmax.is_finite() && h.is_finite()) || h <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "need finite bounds and h > 0, got [{xmin}, {xmax}] h = {h}"
            )));
        }
        if !(xmin <= 0.0 && 0.0 <= xmax && xmin < xmax) {
            return Err(Error::InvalidGrid(format!(
                "range [{xmin}, {xmax}] must contain 0"
            )));
        }
        let zero = aligned_steps(-xmin, h).ok_or_else(|| {
            Error::InvalidGrid(format!("xmin = {xmin} is not a multiple of h = {h}"))
        })?;
        let above = aligned_steps(xmax, h).ok_or_else(|| {
            Error::InvalidGrid(format!("xmax = {xmax} is not a multiple of h = {h}"))
        })?;
        let len = zero + above + 1;
        if len < 3 {
            return Err(Error::InvalidGrid("grid needs at least 3 points".into()));
        }
        Ok(Self {
            xmin,
            xmax,
            h,
            len,
            zero,
        })
    }

    pub fn xmin(&self) -> f64 {
        self.xmin
    }

    pub fn xmax(&self) -> f64 {
        self.xmax
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Index of the grid point `x = 0`.
    pub fn zero(&self) -> usize {
        self.zero
    }

    /// Coordinate of grid point `i`; `x(zero)` is exactly 0.
    pub fn x(&self, i: usize) -> f64 {
        self.x_of_offset(i as i64 - self.zero as i64)
    }

    pub fn x_of_offset(&self, d: i64) -> f64 {
        d as f64 * self.h
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.x(i))
    }

    pub fn min_offset(&self) -> i64 {
        -(self.zero as i64)
    }

    pub fn max_offset(&self) -> i64 {
        (self.len - 1 - self.zero) as i64
    }

    /// Offset of a grid-aligned real `y`; errors if `y` is off the lattice.
    pub fn offset_of(&self, y: f64) -> Result<i64> {
        let r = (y / self.h).round();
        if !y.is_finite() || (r * self.h - y).abs() > 1e-6 * self.h {
            return Err(Error::InvalidGrid(format!(
                "{y} is not a multiple of the grid step {}",
                self.h
            )));
        }
        Ok(r as i64)
    }

    /// Number of grid steps covering a non-negative length, rounded up.
    pub fn steps_ceil(&self, len: f64) -> i64 {
        let r = len / self.h;
        let near = r.round();
        if (r - near).abs() < 1e-9 {
            near as i64
        } else {
            r.ceil() as i64
        }
    }

    /// Index (possibly outside `0..len`) of the grid cell `[x_i, x_{i+1})`
    /// containing `x`.
    pub fn floor_index(&self, x: f64) -> i64 {
        (x / self.h + 1e-9).floor() as i64 + self.zero as i64
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self::new(Self::DEFAULT_XMIN, Self::DEFAULT_XMAX, Self::DEFAULT_H)
            .expect("default grid is valid")
    }
}

fn aligned_steps(len: f64, h: f64) -> Option<usize> {
    let r = (len / h).round();
    ((r * h - len).abs() <= 1e-9 * len.abs().max(1.0)).then_some(r as usize)
}

/// A probability mass function over grid offsets.
///
/// Atoms are kept sorted by offset and strictly positive. `lost_left` and
/// `lost_right` record mass that fell outside the grid when a continuous
/// law was rasterized (before renormalization).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pmf {
    offsets: Vec<i64>,
    weights: Vec<f64>,
    lost_left: f64,
    lost_right: f64,
}

impl Pmf {
    fn from_sorted(offsets: Vec<i64>, weights: Vec<f64>) -> Self {
        Self {
            offsets,
            weights,
            lost_left: 0.0,
            lost_right: 0.0,
        }
    }

    /// Build from (offset, weight) atoms; duplicate offsets are merged and
    /// zero weights dropped. Weights must sum to 1 within [`PROB_TOL`].
    pub fn from_atoms(atoms: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        let mut atoms: Vec<(i64, f64)> = atoms.into_iter().collect();
        for &(_, w) in &atoms {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NonProbability {
                    context: "displacement pmf".into(),
                    detail: format!("weight {w} is negative or non-finite"),
                });
            }
        }
        atoms.sort_by_key(|a| a.0);
        let mut offsets = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (d, w) in atoms {
            if w == 0.0 {
                continue;
            }
            if offsets.last() == Some(&d) {
                *weights.last_mut().unwrap() += w;
            } else {
                offsets.push(d);
                weights.push(w);
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::NonProbability {
                context: "displacement pmf".into(),
                detail: format!("weights sum to {total}"),
            });
        }
        Ok(Self::from_sorted(offsets, weights))
    }

    pub fn point(grid: &Grid, at: f64) -> Result<Self> {
        let pmf = Self::from_sorted(vec![grid.offset_of(at)?], vec![1.0]);
        pmf.check_on_grid(grid)?;
        Ok(pmf)
    }

    pub fn discrete(grid: &Grid, points: &[f64], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::NonProbability {
                context: "discrete displacement".into(),
                detail: "points and weights must be non-empty and of equal length".into(),
            });
        }
        let atoms = points
            .iter()
            .map(|&p| grid.offset_of(p))
            .collect::<Result<Vec<_>>>()?;
        let pmf = Self::from_atoms(atoms.into_iter().zip(weights.iter().copied()))?;
        pmf.check_on_grid(grid)?;
        Ok(pmf)
    }

    /// Rasterize a continuous law by cell-mass integration: the atom at
    /// `x_d` receives the mass of `[x_d - h/2, x_d + h/2)`. Mass beyond the
    /// grid is recorded in `lost_*` and the remainder renormalized.
    pub fn rasterize(
        grid: &Grid,
        cdf: impl Fn(f64) -> f64,
        sf: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let half = 0.5 * grid.h();
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        for d in grid.min_offset()..=grid.max_offset() {
            let x = grid.x_of_offset(d);
            let (lo, hi) = (x - half, x + half);
            // Difference whichever side of the law is small, for relative accuracy in both tails.
            let w = if cdf(x) <= 0.5 {
                cdf(hi) - cdf(lo)
            } else {
                sf(lo) - sf(hi)
            };
            if w > 0.0 {
                offsets.push(d);
                weights.push(w);
            }
        }
        let lost_left = cdf(grid.xmin() - half);
        let lost_right = sf(grid.xmax() + half);
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::NonProbability {
                context: "rasterized law".into(),
                detail: "no mass falls on the grid".into(),
            });
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            offsets,
            weights,
            lost_left,
            lost_right,
        })
    }

    pub fn gaussian(grid: &Grid, mean: f64, sd: f64) -> Result<Self> {
        let normal = Normal::new(mean, sd)
            .map_err(|e| Error::Config(format!("gaussian(mean = {mean}, sd = {sd}): {e}")))?;
        Self::rasterize(grid, |x| normal.cdf(x), |x| normal.sf(x))
    }

    /// `offset + Exp(rate)`.
    pub fn exponential(grid: &Grid, rate: f64, offset: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::Config(format!(
                "exponential rate must be > 0, got {rate}"
            )));
        }
        Self::rasterize(
            grid,
            |x| {
                if x <= offset {
                    0.0
                } else {
                    -(-rate * (x - offset)).exp_m1()
                }
            },
            |x| {
                if x <= offset {
                    1.0
                } else {
                    (-rate * (x - offset)).exp()
                }
            },
        )
    }

    /// `offset + Lomax(alpha, scale)`: survival `(1 + (x - offset)/scale)^(-alpha)`.
    pub fn lomax(grid: &Grid, alpha: f64, scale: f64, offset: f64) -> Result<Self> {
        if !(alpha > 0.0 && scale > 0.0) {
            return Err(Error::Config(format!(
                "lomax needs alpha, scale > 0, got {alpha}, {scale}"
            )));
        }
        let sf = move |x: f64| {
            if x <= offset {
                1.0
            } else {
                (1.0 + (x - offset) / scale).powf(-alpha)
            }
        };
        Self::rasterize(grid, move |x| 1.0 - sf(x), sf)
    }

    pub fn uniform(grid: &Grid, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Config(format!(
                "uniform needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        let cdf = move |x: f64| ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        Self::rasterize(grid, cdf, move |x| 1.0 - cdf(x))
    }

    fn check_on_grid(&self, grid: &Grid) -> Result<()> {
        let (lo, hi) = (self.offsets[0], *self.offsets.last().unwrap());
        if lo < grid.min_offset() || hi > grid.max_offset() {
            return Err(Error::InvalidGrid(format!(
                "pmf support [{}, {}] leaves the grid",
                grid.x_of_offset(lo),
                grid.x_of_offset(hi)
            )));
        }
        Ok(())
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl DoubleEndedIterator<Item = (i64, f64)> + ExactSizeIterator + '_ {
        self.offsets
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    pub fn lost_left(&self) -> f64 {
        self.lost_left
    }

    pub fn lost_right(&self) -> f64 {
        self.lost_right
    }

    pub fn min_offset(&self) -> i64 {
        self.offsets[0]
    }

    pub fn max_offset(&self) -> i64 {
        *self.offsets.last().unwrap()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn mean(&self, grid: &Grid) -> f64 {
        self.atoms().map(|(d, w)| w * grid.x_of_offset(d)).sum()
    }

    /// `P(Y <= d h)`.
    pub fn cdf(&self, d: i64) -> f64 {
        self.atoms().filter(|a| a.0 <= d).map(|a| a.1).sum()
    }

    /// `P(Y > d h)`, summed from the right so small tails keep their precision.
    pub fn sf(&self, d: i64) -> f64 {
        self.atoms()
            .rev()
            .take_while(|a| a.0 > d)
            .map(|a| a.1)
            .sum()
    }

    /// `P(Y >= d h)`, the left limit of the survival function at `d h`.
    pub fn sf_left(&self, d: i64) -> f64 {
        self.sf(d - 1)
    }

    /// Mass at or beyond the right grid edge, including rasterization loss.
    pub fn edge_mass_right(&self, grid: &Grid) -> f64 {
        let top = self
            .atoms()
            .rev()
            .take_while(|a| a.0 >= grid.max_offset())
            .map(|a| a.1)
            .sum::<f64>();
        top + self.lost_right
    }

    /// Dense distribution-function table over the support, for repeated
    /// lookups.
    pub fn table(&self) -> CdfTable {
        let lo = self.min_offset();
        let n = (self.max_offset() - lo + 1) as usize;
        let mut dense = vec![0.0; n];
        for (d, w) in self.atoms() {
            dense[(d - lo) as usize] = w;
        }
        let mut cdf = dense.clone();
        for i in 1..n {
            cdf[i] += cdf[i - 1];
        }
        let mut sf = vec![0.0; n];
        for i in (0..n - 1).rev() {
            sf[i] = sf[i + 1] + dense[i + 1];
        }
        // Undo the renormalization so mass lost off the grid is counted.
        let kept = 1.0 - self.lost_left - self.lost_right;
        if self.lost_left > 0.0 || self.lost_right > 0.0 {
            cdf.iter_mut().for_each(|c| *c = self.lost_left + kept * *c);
            sf.iter_mut().for_each(|s| *s = self.lost_right + kept * *s);
        }
        CdfTable {
            lo,
            cdf,
            sf,
            below: self.lost_left,
            above: self.lost_right,
        }
    }

    pub fn shifted(&self, by: i64) -> Self {
        Self {
            offsets: self.offsets.iter().map(|d| d + by).collect(),
            ..self.clone()
        }
    }

    /// Law of the sum of independent draws from `self` and `other`.
    pub fn convolve(&self, other: &Pmf) -> Pmf {
        let lo = self.min_offset() + other.min_offset();
        let hi = self.max_offset() + other.max_offset();
        let mut dense = vec![0.0; (hi - lo + 1) as usize];
        for (a, wa) in self.atoms() {
            for (b, wb) in other.atoms() {
                dense[(a + b - lo) as usize] += wa * wb;
            }
        }
        let (offsets, weights) = dense
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w > 0.0)
            .map(|(i, w)| (lo + i as i64, w))
            .unzip();
        Pmf {
            offsets,
            weights,
            lost_left: self.lost_left + other.lost_left,
            lost_right: self.lost_right + other.lost_right,
        }
    }

    /// Finite mixture `sum_i w_i P_i`; weights must sum to 1.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a Pmf)>) -> Result<Pmf> {
        let mut merged: std::collections::BTreeMap<i64, f64> = Default::default();
        let (mut lost_left, mut lost_right) = (0.0, 0.0);
        for (w, p) in parts {
            for (d, pw) in p.atoms() {
                *merged.entry(d).or_default() += w * pw;
            }
            lost_left += w * p.lost_left;
            lost_right += w * p.lost_right;
        }
        let mut pmf = Pmf::from_atoms(merged)?;
        pmf.lost_left = lost_left;
        pmf.lost_right = lost_right;
        Ok(pmf)
    }

    /// `(g * f)(x_i) = sum_j g_j f(x_i - y_j)` over a grid function `f`
    /// extended by `left_fill` left of the grid and `right_fill` to the right.
    pub fn convolve_values(&self, values: &[f64], left_fill: f64, right_fill: f64) -> Vec<f64> {
        let g = values.len() as i64;
        let mut out = vec![0.0; values.len()];
        for (d, w) in self.atoms() {
            // out[i] reads values[i - d]; in range iff d <= i < g + d.
            let lo = d.clamp(0, g) as usize;
            let hi = (g + d).clamp(0, g) as usize;
            if left_fill != 0.0 {
                let v = w * left_fill;
                out[..lo].iter_mut().for_each(|o| *o += v);
            }
            let src = (lo as i64 - d) as usize;
            for (o, &f) in out[lo..hi].iter_mut().zip(&values[src..src + (hi - lo)]) {
                *o += w * f;
            }
            if right_fill != 0.0 {
                let v = w * right_fill;
                out[hi..].iter_mut().for_each(|o| *o += v);
            }
        }
        out
    }
}

/// `P(Y <= d h)` and `P(Y > d h)` tabulated over the support of a [`Pmf`],
/// counting rasterization loss as mass beyond the respective grid edge.
#[derive(Clone, Debug)]
pub struct CdfTable {
    lo: i64,
    cdf: Vec<f64>,
    sf: Vec<f64>,
    below: f64,
    above: f64,
}

impl CdfTable {
    pub fn cdf(&self, d: i64) -> f64 {
        if d < self.lo {
            self.below
        } else {
            self.cdf
                .get((d - self.lo) as usize)
                .copied()
                .unwrap_or(1.0 - self.above)
        }
    }

    pub fn sf(&self, d: i64) -> f64 {
        if d < self.lo {
            1.0 - self.below
        } else {
            self.sf
                .get((d - self.lo) as usize)
                .copied()
                .unwrap_or(self.above)
        }
    }

    /// `P(Y >= d h)`.
    pub fn sf_left(&self, d: i64) -> f64 {
        self.sf(d - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_places_zero_exactly() {
        let g = Grid::default();
        assert_eq!(g.len(), 2401);
        assert_eq!(g.x(g.zero()), 0.0);
        assert_eq!(g.x(g.zero() + 20), 1.0);
        assert_eq!(g.x(0), -60.0);
        assert_eq!(g.x(g.len() - 1), 60.0);
    }

    #[test]
    fn misaligned_grid_is_rejected() {
        assert!(Grid::new(-1.03, 1.0, 0.05).is_err());
        assert!(Grid::new(1.0, 2.0, 0.05).is_err());
        assert!(Grid::new(-1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn offsets_round_trip() {
        let g = Grid::default();
        assert_eq!(g.offset_of(1.0).unwrap(), 20);
        assert_eq!(g.offset_of(-0.35).unwrap(), -7);
        assert!(g.offset_of(0.01).is_err());
    }

    #[test]
    fn point_mass_convolution_shifts() {
        let g = Grid::default();
        let y = Pmf::point(&g, 1.0).unwrap();
        let z = Pmf::point(&g, 2.0).unwrap();
        let s = y.convolve(&z);
        assert_eq!(s, Pmf::point(&g, 3.0).unwrap());
    }

    #[test]
    fn gaussian_mass_and_mean() {
        let g = Grid::default();
        let p = Pmf::gaussian(&g, 0.5, 1.0).unwrap();
        assert!((p.total() - 1.0).abs() < PROB_TOL);
        assert!((p.mean(&g) - 0.5).abs() < 1e-12);
        assert!(p.lost_left() < 1e-300 && p.lost_right() < 1e-300);
    }

    #[test]
    fn exponential_tail_ratio_is_exact() {
        let g = Grid::default();
        let p = Pmf::exponential(&g, 1.0, 0.0).unwrap();
        // cells centred at grid points: P(Y > x_i) = exp(-(x_i + h/2)) for x_i >= 0
        for d in [0_i64, 10, 40, 200] {
            let x = g.x_of_offset(d);
            let expect = (-(x + 0.025)).exp();
            assert!((p.sf(d) / expect - 1.0).abs() < 1e-12, "d = {d}");
        }
    }

    #[test]
    fn convolve_values_uses_fills() {
        let g = Grid::new(-2.0, 2.0, 1.0).unwrap();
        let shift_right = Pmf::point(&g, 1.0).unwrap();
        let vals = [0.9, 0.7, 0.5, 0.3, 0.1];
        let out = shift_right.convolve_values(&vals, 1.0, 0.0);
        assert_eq!(out, vec![1.0, 0.9, 0.7, 0.5, 0.3]);
        let shift_left = Pmf::point(&g, -2.0).unwrap();
        let out = shift_left.convolve_values(&vals, 1.0, 0.0);
        assert_eq!(out, vec![0.5, 0.3, 0.1, 0.0, 0.0]);
    }

    #[test]
    fn table_matches_direct_sums() {
        let g = Grid::default();
        let p = Pmf::discrete(&g, &[-1.0, 0.0, 2.0], &[0.2, 0.3, 0.5]).unwrap();
        let t = p.table();
        for d in -30..50 {
            assert!((t.cdf(d) - p.cdf(d)).abs() < 1e-15);
            assert!((t.sf(d) - p.sf(d)).abs() < 1e-15);
            assert!((t.sf_left(d) - p.sf_left(d)).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_weights_are_rejected() {
        let g = Grid::default();
        assert!(matches!(
            Pmf::discrete(&g, &[0.0, 1.0], &[0.5, 0.6]),
            Err(Error::NonProbability { .. })
        ));
        assert!(Pmf::discrete(&g, &[0.0, 1.0], &[-0.5, 1.5]).is_err());
    }
}
