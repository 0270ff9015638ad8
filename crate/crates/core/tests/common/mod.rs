//! Oracles and model builders shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use gbrw_core::grid::{Grid, Pmf};
use gbrw_core::laws::{BranchingLaw, DisplacementLaw, JointLaw, OffspringPmf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Law of the maximal displacement (in grid offsets) of the walk started at
/// generation `m` and stopped at `n`, by enumerating every offspring count,
/// every displacement vector and every combination of subtree maxima.
/// Only point-mass families are supported.
pub fn enumerate_max(
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
    m: usize,
    n: usize,
) -> BTreeMap<i64, f64> {
    if m == n {
        return BTreeMap::from([(0, 1.0)]);
    }
    let below = enumerate_max(branching, displacement, m + 1, n);
    let below: Vec<(i64, f64)> = below.into_iter().collect();
    let mut out = BTreeMap::new();
    for (k, pk) in branching.at(m).unwrap().support() {
        for (ys, py) in displacement_vectors(displacement.joint(m, k).unwrap(), k) {
            for (maxes, pm) in tuples(&below, k) {
                let top = ys.iter().zip(&maxes).map(|(y, s)| y + s).max().unwrap();
                *out.entry(top).or_insert(0.0) += pk * py * pm;
            }
        }
    }
    out
}

/// Every outcome of a `k`-vector drawn from `law`, with its probability.
pub fn displacement_vectors(law: &JointLaw, k: usize) -> Vec<(Vec<i64>, f64)> {
    match law {
        JointLaw::Independent { marginal } => {
            let atoms: Vec<(i64, f64)> = marginal.atoms().collect();
            tuples(&atoms, k)
        }
        JointLaw::CommonShift { shift, noise, .. } => {
            let noise: Vec<(i64, f64)> = noise.atoms().collect();
            let mut out = Vec::new();
            for (s, ps) in shift.atoms() {
                for (zs, pz) in tuples(&noise, k) {
                    out.push((zs.iter().map(|z| z + s).collect(), ps * pz));
                }
            }
            out
        }
        JointLaw::ProductMixture(pm) => {
            let mut out = Vec::new();
            for (key, w) in pm.components() {
                let mut partial: Vec<(Vec<i64>, f64)> = vec![(Vec::new(), *w)];
                for &a in key {
                    partial = partial
                        .into_iter()
                        .flat_map(|(v, p)| {
                            pm.atoms()[a].atoms().map(move |(d, q)| {
                                let mut v = v.clone();
                                v.push(d);
                                (v, p * q)
                            })
                        })
                        .collect();
                }
                out.extend(partial);
            }
            out
        }
        JointLaw::MonteCarlo(_) => panic!("enumeration needs a structured family"),
    }
}

/// All `k`-tuples of `atoms` with product weights.
pub fn tuples(atoms: &[(i64, f64)], k: usize) -> Vec<(Vec<i64>, f64)> {
    let mut out: Vec<(Vec<i64>, f64)> = vec![(Vec::new(), 1.0)];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|(v, p)| {
                atoms.iter().map(move |&(d, q)| {
                    let mut v = v.clone();
                    v.push(d);
                    (v, p * q)
                })
            })
            .collect();
    }
    out
}

/// `P(max > x_i)` at every grid point from a law over offsets.
pub fn tail_from_law(grid: &Grid, law: &BTreeMap<i64, f64>) -> Vec<f64> {
    let zero = grid.zero() as i64;
    (0..grid.len() as i64)
        .map(|i| law.range(i - zero + 1..).map(|(_, p)| p).sum())
        .collect()
}

/// Distribution function of a plain random walk after `n` steps, by
/// repeated convolution of offset laws.
pub fn walk_law(step: &Pmf, n: usize) -> BTreeMap<i64, f64> {
    let mut law = BTreeMap::from([(0i64, 1.0)]);
    for _ in 0..n {
        let mut next = BTreeMap::new();
        for (&s, &p) in &law {
            for (d, q) in step.atoms() {
                *next.entry(s + d).or_insert(0.0) += p * q;
            }
        }
        law = next;
    }
    law
}

/// Lower quantile (smallest `x` with `F(x) >= p`) of a law over offsets.
pub fn law_quantile(law: &BTreeMap<i64, f64>, p: f64) -> i64 {
    let mut acc = 0.0;
    for (&d, &q) in law {
        acc += q;
        if acc >= p - 1e-12 {
            return d;
        }
    }
    *law.keys().next_back().unwrap()
}

/// Half-width of the two-sided DKW band at confidence `1 - alpha`.
pub fn dkw(reps: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * reps as f64)).sqrt()
}

/// `probs` lists `p_1, p_2, ...`.
pub fn constant(probs: &[f64], grid: Grid, joint: JointLaw) -> (BranchingLaw, DisplacementLaw) {
    (
        BranchingLaw::constant(OffspringPmf::from_probs(probs).unwrap()),
        DisplacementLaw::constant(grid, joint).unwrap(),
    )
}

/// A random point-mass law on `{-2h, ..., 2h}` with up to three atoms.
pub fn random_atoms(rng: &mut impl Rng, grid: &Grid, max_atoms: usize) -> Pmf {
    let count = rng.random_range(1..=max_atoms);
    let mut atoms = Vec::new();
    for _ in 0..count {
        atoms.push((
            rng.random_range(-2i64..=2),
            rng.random_range(1u32..=4) as f64,
        ));
    }
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    let pmf = Pmf::from_atoms(atoms.into_iter().map(|(d, w)| (d, w / total))).unwrap();
    assert!(pmf.max_offset() <= grid.max_offset());
    pmf
}

/// A random structured model with `k0 <= 3`: point-mass or discretized
/// Gaussian marginals, independent or common-shift siblings.
pub fn random_structured(seed: u64, grid: Grid) -> (BranchingLaw, DisplacementLaw, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k0 = rng.random_range(1..=3usize);
    let mut probs: Vec<f64> = (0..k0).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let marginal = |rng: &mut ChaCha8Rng| -> (Pmf, String) {
        if rng.random_bool(0.5) {
            let points: Vec<f64> = (0..rng.random_range(1..=3))
                .map(|_| grid.h() * rng.random_range(-10i64..=10) as f64)
                .collect();
            let weights: Vec<f64> = points.iter().map(|_| rng.random_range(0.5..2.0)).collect();
            let total: f64 = weights.iter().sum();
            let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
            (
                Pmf::discrete(&grid, &points, &weights).unwrap(),
                format!("points{points:?}"),
            )
        } else {
            let mean = rng.random_range(-0.5..0.5);
            let sd = rng.random_range(0.2..1.0);
            // rasterized on a narrow window so that shift + noise stays on the grid
            let window = Grid::new(-8.0, 8.0, grid.h()).unwrap();
            (
                Pmf::gaussian(&window, mean, sd).unwrap(),
                format!("gaussian({mean:.3},{sd:.3})"),
            )
        }
    };
    let (joint, label) = if rng.random_bool(0.5) {
        let (g, l) = marginal(&mut rng);
        (JointLaw::independent(g), format!("independent {l}"))
    } else {
        let (s, ls) = marginal(&mut rng);
        let (z, lz) = marginal(&mut rng);
        (
            JointLaw::common_shift(s, z),
            format!("common_shift shift={ls} noise={lz}"),
        )
    };
    let (b, d) = constant(&probs, grid, joint);
    (b, d, format!("k0={k0} p={probs:.3?} {label}"))
}

/// A random non-increasing step curve on `grid`: 1 up to a random start,
/// then plateaus of random length whose levels fall either barely (ratio
/// below `1 + flat / 2`) or steeply, then 0 once the level is negligible or
/// the grid runs out. Lengths are drawn up to `3 * plateau` grid steps.
pub fn random_staircase(seed: u64, grid: Grid, plateau: usize, flat: f64) -> gbrw_core::TailCurve {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = grid.len();
    let mut values = vec![0.0; len];
    let mut i = rng.random_range(0..=20usize).min(len);
    values[..i].fill(1.0);
    let mut level: f64 = 1.0;
    let stop = len.saturating_sub(10);
    while i < stop {
        level = if rng.random_bool(0.5) {
            level / (1.0 + rng.random_range(0.0..flat / 2.0))
        } else {
            level * (-rng.random_range(0.0..40.0f64)).exp()
        };
        if level < 1e-250 {
            break;
        }
        let run = rng.random_range(1..=3 * plateau).min(stop - i);
        values[i..i + run].fill(level);
        i += run;
    }
    gbrw_core::TailCurve::new(grid, values).unwrap()
}

/// A desk-scale model together with the marginal-tail inputs it satisfies.
pub struct DeskModel {
    pub name: &'static str,
    pub branching: BranchingLaw,
    pub displacement: DisplacementLaw,
    pub eps0: f64,
    pub a: f64,
    pub big_m0: f64,
}

impl DeskModel {
    pub fn k0(&self) -> usize {
        self.branching.k_max().unwrap()
    }

    pub fn inputs(&self) -> gbrw_core::lyapunov::ParamInputs {
        gbrw_core::lyapunov::ParamInputs::new(
            self.k0(),
            self.branching.declared_m0(),
            self.eps0,
            self.a,
            self.big_m0,
            self.displacement.grid().h(),
        )
        .with_mean(self.branching.inf_mean())
    }
}

/// Five supercritical models with bounded offspring that meet the branching,
/// marginal and joint-tail assumptions on `grid`.
pub fn desk_models(grid: Grid) -> Vec<DeskModel> {
    let g = &grid;
    let model = |name, probs: &[f64], joint, eps0, a| {
        let (branching, displacement) = constant(probs, grid, joint);
        DeskModel {
            name,
            branching,
            displacement,
            eps0,
            a,
            big_m0: 1.0,
        }
    };
    vec![
        model(
            "binary fair steps",
            &[0.0, 1.0],
            JointLaw::independent(Pmf::discrete(g, &[-1.0, 1.0], &[0.5, 0.5]).unwrap()),
            0.05,
            1.0,
        ),
        model(
            "one or two children, gaussian",
            &[0.5, 0.5],
            JointLaw::independent(Pmf::gaussian(g, 0.0, 1.0).unwrap()),
            0.05,
            1.0,
        ),
        model(
            "up to three children, uniform",
            &[0.3, 0.4, 0.3],
            JointLaw::independent(Pmf::uniform(g, -1.0, 1.0).unwrap()),
            0.05,
            1.0,
        ),
        model(
            "binary common shift",
            &[0.0, 1.0],
            JointLaw::common_shift(
                Pmf::gaussian(g, 0.0, 0.5).unwrap(),
                Pmf::discrete(g, &[-0.5, 0.5], &[0.5, 0.5]).unwrap(),
            ),
            0.05,
            1.0,
        ),
        model(
            "one or two children, exponential",
            &[0.4, 0.6],
            JointLaw::independent(Pmf::exponential(g, 2.0, -0.5).unwrap()),
            0.05,
            1.0,
        ),
    ]
}

/// `probs` offspring with independent fair `±1` steps.
pub fn fair_steps(probs: &[f64], grid: Grid) -> (BranchingLaw, DisplacementLaw) {
    let step = Pmf::discrete(&grid, &[-1.0, 1.0], &[0.5, 0.5]).unwrap();
    constant(probs, grid, JointLaw::independent(step))
}
