//! Joint sibling-displacement laws `G_{n,k}`.
//!
//! Structured families keep the exact recursion computable on the grid:
//!
//! * `Independent` - the `k` coordinates are iid with the stored marginal;
//! * `CommonShift` - `X_i = Y + Z_i` with one shared `Y` and iid `Z_i`;
//! * `ProductMixture` - a finite mixture of product laws with explicit
//!   per-coordinate factors (fixed `k`), which is what [`symmetrize`] acts on.
//!
//! `MonteCarlo` wraps an arbitrary sampler; it is only usable by the
//! simulator and by the Monte Carlo integration path of the recursion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;
use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::schedule::Schedule;
use crate::error::{Error, Result};
use crate::grid::{Grid, Pmf, PROB_TOL};

/// Largest `k` for which explicit joints can be symmetrized.
pub const MAX_EXPLICIT_K: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Independent,
    CommonShift,
    ProductMixture,
    MonteCarlo,
}

/// A sampler for joint laws without a grid-computable recursion.
pub trait JointSampler: Send + Sync + Debug {
    fn name(&self) -> &str;
    /// Append one draw of `(X_1, ..., X_k)` to `out`.
    fn sample(&self, k: usize, rng: &mut dyn RngCore, out: &mut Vec<f64>);
    /// The common coordinate marginal, rasterized on the model grid.
    fn marginal(&self) -> &Pmf;
}

/// `X_i = mean + sd (sqrt(rho) W + sqrt(1 - rho) V_i)` with `W, V_i` iid
/// standard normal: an exchangeable Gaussian vector with correlation `rho`.
#[derive(Debug)]
pub struct EquicorrelatedGaussian {
    mean: f64,
    sd: f64,
    rho: f64,
    marginal: Pmf,
}

impl EquicorrelatedGaussian {
    pub fn new(grid: &Grid, mean: f64, sd: f64, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Config(format!(
                "correlation must lie in [0, 1], got {rho}"
            )));
        }
        Ok(Self {
            mean,
            sd,
            rho,
            marginal: Pmf::gaussian(grid, mean, sd)?,
        })
    }
}

impl JointSampler for EquicorrelatedGaussian {
    fn name(&self) -> &str {
        "equicorrelated_gaussian"
    }

    fn sample(&self, k: usize, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        let common: f64 = StandardNormal.sample(rng);
        let (a, b) = (self.rho.sqrt(), (1.0 - self.rho).sqrt());
        for _ in 0..k {
            let own: f64 = StandardNormal.sample(rng);
            out.push(self.mean + self.sd * (a * common + b * own));
        }
    }

    fn marginal(&self) -> &Pmf {
        &self.marginal
    }
}

#[derive(Debug)]
struct ShiftedSampler {
    inner: Arc<dyn JointSampler>,
    by: f64,
    marginal: Pmf,
}

impl JointSampler for ShiftedSampler {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn sample(&self, k: usize, rng: &mut dyn RngCore, out: &mut Vec<f64>) {
        let start = out.len();
        self.inner.sample(k, rng, out);
        out[start..].iter_mut().for_each(|x| *x += self.by);
    }

    fn marginal(&self) -> &Pmf {
        &self.marginal
    }
}

/// `sum_c w_c (H_{c_1} x ... x H_{c_k})`: a finite mixture of product laws.
/// Each component is keyed by the tuple of atom indices of its factors.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductMixture {
    k: usize,
    atoms: Vec<Pmf>,
    components: BTreeMap<Vec<usize>, f64>,
    coordinate_marginals: Vec<Pmf>,
    marginal: Pmf,
}

impl ProductMixture {
    /// Product of (possibly distinct) coordinate laws.
    pub fn product(coordinates: Vec<Pmf>) -> Result<Self> {
        let mut atoms: Vec<Pmf> = Vec::new();
        let mut key = Vec::with_capacity(coordinates.len());
        for c in coordinates {
            let idx = match atoms.iter().position(|a| *a == c) {
                Some(i) => i,
                None => {
                    atoms.push(c);
                    atoms.len() - 1
                }
            };
            key.push(idx);
        }
        Self::new(atoms, BTreeMap::from([(key, 1.0)]))
    }

    pub fn new(atoms: Vec<Pmf>, components: BTreeMap<Vec<usize>, f64>) -> Result<Self> {
        let k = components.keys().next().map(Vec::len).unwrap_or(0);
        if k == 0 {
            return Err(Error::Config(
                "product mixture needs at least one coordinate".into(),
            ));
        }
        let mut total = 0.0;
        for (key, &w) in &components {
            if key.len() != k || key.iter().any(|&a| a >= atoms.len()) {
                return Err(Error::Config(format!(
                    "malformed product component {key:?}"
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::NonProbability {
                    context: "product mixture".into(),
                    detail: format!("component weight {w}"),
                });
            }
            total += w;
        }
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::NonProbability {
                context: "product mixture".into(),
                detail: format!("component weights sum to {total}"),
            });
        }
        let coordinate_marginals = (0..k)
            .map(|i| Pmf::mixture(components.iter().map(|(key, &w)| (w, &atoms[key[i]]))))
            .collect::<Result<Vec<_>>>()?;
        let marginal = Pmf::mixture(coordinate_marginals.iter().map(|p| (1.0 / k as f64, p)))?;
        Ok(Self {
            k,
            atoms,
            components,
            coordinate_marginals,
            marginal,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn atoms(&self) -> &[Pmf] {
        &self.atoms
    }

    pub fn components(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.components
    }

    pub fn coordinate_marginal(&self, i: usize) -> &Pmf {
        &self.coordinate_marginals[i]
    }

    /// Mean of the coordinate marginals; equals every coordinate marginal
    /// once the law is exchangeable.
    pub fn marginal(&self) -> &Pmf {
        &self.marginal
    }

    fn orbit(key: &[usize]) -> BTreeSet<Vec<usize>> {
        permutations(key.len())
            .into_iter()
            .map(|perm| perm.iter().map(|&i| key[i]).collect())
            .collect()
    }

    /// Every permutation orbit is present with bitwise-equal weights.
    pub fn is_exchangeable(&self) -> bool {
        self.components.iter().all(|(key, w)| {
            Self::orbit(key)
                .iter()
                .all(|t| self.components.get(t) == Some(w))
        })
    }

    /// The permutation average `(1/k!) sum_pi G(x_pi(1), ..., x_pi(k))`.
    ///
    /// Orbits that are already exchangeable are kept verbatim, and each new
    /// orbit weight is summed in key order, so the map is exactly idempotent.
    pub fn symmetrize(&self) -> Result<Self> {
        if self.k > MAX_EXPLICIT_K {
            return Err(Error::KTooLarge(self.k));
        }
        let mut out: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        for key in self.components.keys() {
            if seen.contains(key) {
                continue;
            }
            let orbit = Self::orbit(key);
            let weights: Vec<Option<f64>> = orbit
                .iter()
                .map(|t| self.components.get(t).copied())
                .collect();
            let exchangeable = weights.iter().all(|w| *w == weights[0]);
            let each = if exchangeable {
                weights[0].expect("orbit contains the key itself")
            } else {
                weights.iter().flatten().sum::<f64>() / orbit.len() as f64
            };
            for t in &orbit {
                out.insert(t.clone(), each);
            }
            seen.extend(orbit);
        }
        Self::new(self.atoms.clone(), out)
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

#[derive(Clone, Debug)]
pub enum JointLaw {
    Independent {
        marginal: Pmf,
    },
    CommonShift {
        shift: Pmf,
        noise: Pmf,
        marginal: Pmf,
    },
    ProductMixture(ProductMixture),
    MonteCarlo(Arc<dyn JointSampler>),
}

impl PartialEq for JointLaw {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Independent { marginal: a }, Self::Independent { marginal: b }) => a == b,
            (
                Self::CommonShift {
                    shift: s1,
                    noise: z1,
                    ..
                },
                Self::CommonShift {
                    shift: s2,
                    noise: z2,
                    ..
                },
            ) => s1 == s2 && z1 == z2,
            (Self::ProductMixture(a), Self::ProductMixture(b)) => a == b,
            (Self::MonteCarlo(a), Self::MonteCarlo(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl JointLaw {
    pub fn independent(marginal: Pmf) -> Self {
        Self::Independent { marginal }
    }

    pub fn common_shift(shift: Pmf, noise: Pmf) -> Self {
        let marginal = shift.convolve(&noise);
        Self::CommonShift {
            shift,
            noise,
            marginal,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Independent { .. } => Family::Independent,
            Self::CommonShift { .. } => Family::CommonShift,
            Self::ProductMixture(_) => Family::ProductMixture,
            Self::MonteCarlo(_) => Family::MonteCarlo,
        }
    }

    pub fn is_structured(&self) -> bool {
        !matches!(self, Self::MonteCarlo(_))
    }

    /// The coordinate marginal `g_{n,k}` (coordinate average for
    /// non-exchangeable product mixtures).
    pub fn marginal(&self) -> &Pmf {
        match self {
            Self::Independent { marginal } | Self::CommonShift { marginal, .. } => marginal,
            Self::ProductMixture(p) => p.marginal(),
            Self::MonteCarlo(s) => s.marginal(),
        }
    }

    /// Some families only make sense for one `k`.
    pub fn fixed_k(&self) -> Option<usize> {
        match self {
            Self::ProductMixture(p) => Some(p.k()),
            _ => None,
        }
    }

    fn shifted(&self, by: i64, grid: &Grid) -> Self {
        match self {
            Self::Independent { marginal } => Self::independent(marginal.shifted(by)),
            Self::CommonShift { shift, noise, .. } => {
                Self::common_shift(shift.shifted(by), noise.clone())
            }
            Self::ProductMixture(p) => Self::ProductMixture(
                ProductMixture::new(
                    p.atoms.iter().map(|a| a.shifted(by)).collect(),
                    p.components.clone(),
                )
                .expect("shifting preserves validity"),
            ),
            Self::MonteCarlo(s) => Self::MonteCarlo(Arc::new(ShiftedSampler {
                inner: s.clone(),
                by: grid.x_of_offset(by),
                marginal: s.marginal().shifted(by),
            })),
        }
    }
}

/// Joint laws of one generation: a default for every `k` plus overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementLevel {
    default: Option<JointLaw>,
    per_k: BTreeMap<usize, JointLaw>,
}

impl DisplacementLevel {
    pub fn uniform(law: JointLaw) -> Result<Self> {
        Self::new(Some(law), BTreeMap::new())
    }

    pub fn new(default: Option<JointLaw>, per_k: BTreeMap<usize, JointLaw>) -> Result<Self> {
        if let Some(d) = &default {
            if d.fixed_k().is_some() {
                return Err(Error::Config(
                    "an explicit product joint fixes k and cannot be the default for all k".into(),
                ));
            }
        }
        for (&k, law) in &per_k {
            if k == 0 {
                return Err(Error::Config("per-k laws are indexed from k = 1".into()));
            }
            if let Some(fk) = law.fixed_k() {
                if fk != k {
                    return Err(Error::Config(format!(
                        "joint with {fk} coordinates listed under k = {k}"
                    )));
                }
            }
        }
        if default.is_none() && per_k.is_empty() {
            return Err(Error::Config("displacement level defines no law".into()));
        }
        Ok(Self { default, per_k })
    }

    pub fn joint(&self, k: usize) -> Option<&JointLaw> {
        self.per_k.get(&k).or(self.default.as_ref())
    }

    fn laws(&self) -> impl Iterator<Item = &JointLaw> {
        self.default.iter().chain(self.per_k.values())
    }

    fn map(&self, f: impl Fn(&JointLaw) -> Result<JointLaw>) -> Result<Self> {
        Self::new(
            self.default.as_ref().map(&f).transpose()?,
            self.per_k
                .iter()
                .map(|(&k, l)| f(l).map(|l| (k, l)))
                .collect::<Result<_>>()?,
        )
    }
}

/// Time-indexed joint displacement laws on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementLaw {
    grid: Grid,
    schedule: Schedule<DisplacementLevel>,
}

impl DisplacementLaw {
    pub fn new(grid: Grid, schedule: Schedule<DisplacementLevel>) -> Result<Self> {
        for level in schedule.items() {
            for law in level.laws() {
                let check = |p: &Pmf| -> Result<()> {
                    if p.min_offset() < grid.min_offset() || p.max_offset() > grid.max_offset() {
                        return Err(Error::InvalidGrid(
                            "displacement support leaves the grid".into(),
                        ));
                    }
                    Ok(())
                };
                check(law.marginal())?;
            }
        }
        Ok(Self { grid, schedule })
    }

    /// The same joint law for every generation and every `k`.
    pub fn constant(grid: Grid, law: JointLaw) -> Result<Self> {
        Self::new(grid, Schedule::Constant(DisplacementLevel::uniform(law)?))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn schedule(&self) -> &Schedule<DisplacementLevel> {
        &self.schedule
    }

    pub fn level(&self, n: usize) -> Result<&DisplacementLevel> {
        self.schedule
            .at(n)
            .ok_or(Error::NotScheduled { n, k: None })
    }

    pub fn joint(&self, n: usize, k: usize) -> Result<&JointLaw> {
        self.level(n)?
            .joint(k)
            .ok_or(Error::NotScheduled { n, k: Some(k) })
    }

    /// `g_{n,k}`; for the common-shift family this is the shift pmf
    /// convolved with the noise pmf.
    pub fn marginal(&self, n: usize, k: usize) -> Result<&Pmf> {
        self.joint(n, k).map(JointLaw::marginal)
    }

    pub fn family(&self, n: usize, k: usize) -> Result<Family> {
        self.joint(n, k).map(JointLaw::family)
    }

    pub fn has_monte_carlo(&self) -> bool {
        self.schedule
            .items()
            .iter()
            .any(|lvl| lvl.laws().any(|l| !l.is_structured()))
    }

    /// Whether `g_{n,k}` is the same pmf for every `k` at every level.
    pub fn identical_marginals(&self) -> bool {
        self.schedule.items().iter().all(|lvl| {
            let mut laws = lvl.laws();
            let first = laws.next().map(JointLaw::marginal);
            laws.all(|l| Some(l.marginal()) == first)
        })
    }

    /// Permutation-average every explicit joint; other families are
    /// already exchangeable and pass through unchanged.
    pub fn symmetrize(&self) -> Result<Self> {
        let schedule = self.schedule.try_map(|_, lvl| {
            lvl.map(|law| match law {
                JointLaw::ProductMixture(p) => Ok(JointLaw::ProductMixture(p.symmetrize()?)),
                other => Ok(other.clone()),
            })
        })?;
        Self::new(self.grid, schedule)
    }

    /// Translate every displacement by `by` grid steps, e.g. to apply the
    /// shift returned by the marginal-tail checker.
    pub fn shifted(&self, by: i64) -> Result<Self> {
        let grid = self.grid;
        let schedule = self
            .schedule
            .try_map(|_, lvl| lvl.map(|law| Ok(law.shifted(by, &grid))))?;
        Self::new(grid, schedule)
    }
}

/// Free-function form of [`DisplacementLaw::symmetrize`].
pub fn symmetrize(joint: &DisplacementLaw) -> Result<DisplacementLaw> {
    joint.symmetrize()
}
