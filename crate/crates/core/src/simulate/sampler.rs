//! Depth-first sampling of the maximal displacement.

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::grid::{Grid, Pmf};
use crate::laws::{BranchingLaw, DisplacementLaw, JointLaw, JointSampler};

/// Default cap on visited nodes per replicate.
pub const DEFAULT_NODE_CAP: usize = 1_000_000;

/// Draws from a finite law over values of type `T`.
#[derive(Clone, Debug)]
enum Finite<T> {
    One(T),
    Many(Vec<T>, WeightedAliasIndex<f64>),
}

impl<T: Copy> Finite<T> {
    fn new(values: Vec<T>, weights: Vec<f64>) -> Result<Self> {
        if values.len() == 1 {
            return Ok(Self::One(values[0]));
        }
        let alias = WeightedAliasIndex::new(weights)
            .map_err(|e| Error::Config(format!("cannot build sampler: {e}")))?;
        Ok(Self::Many(values, alias))
    }

    #[inline]
    fn draw(&self, rng: &mut impl Rng) -> T {
        match self {
            Self::One(v) => *v,
            Self::Many(vals, alias) => vals[alias.sample(rng)],
        }
    }
}

fn atom_sampler(p: &Pmf) -> Result<Finite<i64>> {
    Finite::new(p.offsets().to_vec(), p.weights().to_vec())
}

#[derive(Debug)]
enum Displacer {
    Independent(Finite<i64>),
    CommonShift {
        shift: Finite<i64>,
        noise: Finite<i64>,
    },
    Product {
        components: Finite<usize>,
        keys: Vec<Vec<usize>>,
        atoms: Vec<Finite<i64>>,
    },
    Sampled(Arc<dyn JointSampler>),
}

impl Displacer {
    fn new(law: &JointLaw) -> Result<Self> {
        Ok(match law {
            JointLaw::Independent { marginal } => Self::Independent(atom_sampler(marginal)?),
            JointLaw::CommonShift { shift, noise, .. } => Self::CommonShift {
                shift: atom_sampler(shift)?,
                noise: atom_sampler(noise)?,
            },
            JointLaw::ProductMixture(pm) => {
                let (keys, weights): (Vec<Vec<usize>>, Vec<f64>) =
                    pm.components().iter().map(|(k, w)| (k.clone(), *w)).unzip();
                Self::Product {
                    components: Finite::new((0..keys.len()).collect(), weights)?,
                    keys,
                    atoms: pm.atoms().iter().map(atom_sampler).collect::<Result<_>>()?,
                }
            }
            JointLaw::MonteCarlo(s) => Self::Sampled(s.clone()),
        })
    }

    /// Largest grid offset a single displacement can take; `None` when the
    /// law is only known through a sampler.
    fn max_offset(&self) -> Option<i64> {
        let top = |f: &Finite<i64>| match f {
            Finite::One(v) => *v,
            Finite::Many(vals, _) => *vals.iter().max().expect("non-empty support"),
        };
        match self {
            Self::Independent(g) => Some(top(g)),
            Self::CommonShift { shift, noise } => Some(top(shift) + top(noise)),
            Self::Product { atoms, .. } => atoms.iter().map(top).max(),
            Self::Sampled(_) => None,
        }
    }

    /// Push `k` displacements as `(grid offset, off-grid remainder)`.
    fn draw(
        &self,
        k: usize,
        rng: &mut ChaCha8Rng,
        h: f64,
        buf: &mut Vec<f64>,
        out: &mut Vec<(i64, f64)>,
    ) {
        match self {
            Self::Independent(g) => out.extend((0..k).map(|_| (g.draw(rng), 0.0))),
            Self::CommonShift { shift, noise } => {
                let y = shift.draw(rng);
                out.extend((0..k).map(|_| (y + noise.draw(rng), 0.0)));
            }
            Self::Product {
                components,
                keys,
                atoms,
            } => {
                let key = &keys[components.draw(rng)];
                out.extend(key.iter().map(|&a| (atoms[a].draw(rng), 0.0)));
            }
            Self::Sampled(s) => {
                buf.clear();
                s.sample(k, rng as &mut dyn RngCore, buf);
                out.extend(buf.iter().map(|&x| {
                    let d = (x / h).floor();
                    (d as i64, x - d * h)
                }));
            }
        }
    }
}

/// Per-generation offspring and displacement samplers for generations
/// `m..n`, shared read-only by every replicate.
#[derive(Debug)]
pub struct TreeSampler {
    grid: Grid,
    m: usize,
    depth: usize,
    offspring: Vec<Finite<usize>>,
    /// `displacers[d][k]` for generation `m + d`.
    displacers: Vec<Vec<Option<Displacer>>>,
    /// `reach[d]`: the most a particle at depth `d` can still climb, in
    /// grid steps; `None` if unbounded.
    reach: Vec<Option<i64>>,
    node_cap: usize,
}

impl TreeSampler {
    pub fn new(
        branching: &BranchingLaw,
        displacement: &DisplacementLaw,
        m: usize,
        n: usize,
        node_cap: usize,
    ) -> Result<Self> {
        if m > n {
            return Err(Error::Precondition(format!(
                "start generation m = {m} exceeds horizon n = {n}"
            )));
        }
        let mut offspring = Vec::with_capacity(n - m);
        let mut displacers = Vec::with_capacity(n - m);
        for gen in m..n {
            let pmf = branching.at(gen)?;
            let (ks, ps): (Vec<usize>, Vec<f64>) = pmf.support().unzip();
            let mut per_k: Vec<Option<Displacer>> = (0..=pmf.max_k()).map(|_| None).collect();
            for &k in &ks {
                per_k[k] = Some(Displacer::new(displacement.joint(gen, k)?)?);
            }
            offspring.push(Finite::new(ks, ps)?);
            displacers.push(per_k);
        }
        let mut reach = vec![Some(0i64); n - m + 1];
        for d in (0..n - m).rev() {
            let step = displacers[d]
                .iter()
                .flatten()
                .map(Displacer::max_offset)
                .try_fold(i64::MIN, |acc, x| x.map(|x| acc.max(x)));
            reach[d] = reach[d + 1].zip(step).map(|(a, b)| a + b);
        }
        Ok(Self {
            grid: *displacement.grid(),
            m,
            depth: n - m,
            offspring,
            displacers,
            reach,
            node_cap,
        })
    }

    pub fn start(&self) -> usize {
        self.m
    }

    /// One draw of the maximal displacement after `n - m` generations.
    ///
    /// The traversal is depth-first, visits children in decreasing order of
    /// displacement and skips subtrees that cannot beat the best leaf found
    /// so far. Skipping only changes which random numbers later subtrees
    /// consume, never the law of the maximum.
    pub fn sample(&self, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = self.grid.h();
        if self.depth == 0 {
            return Ok(0.0);
        }
        let mut stack: Vec<(usize, i64, f64)> = vec![(0, 0, 0.0)];
        let mut visited = 0usize;
        let mut best = f64::NEG_INFINITY;
        let mut best_off = i64::MIN;
        let (mut buf, mut kids) = (Vec::new(), Vec::new());
        while let Some((d, off, rem)) = stack.pop() {
            if let Some(r) = self.reach[d] {
                if off + r <= best_off {
                    continue;
                }
            }
            visited += 1;
            if visited > self.node_cap {
                return Err(Error::PopulationCapExceeded { cap: self.node_cap });
            }
            if d == self.depth {
                let x = self.grid.x_of_offset(off) + rem;
                if x > best {
                    best = x;
                    best_off = if rem == 0.0 { off } else { i64::MIN };
                }
                continue;
            }
            let k = self.offspring[d].draw(&mut rng);
            kids.clear();
            self.displacers[d][k]
                .as_ref()
                .expect("every supported k has a displacer")
                .draw(k, &mut rng, h, &mut buf, &mut kids);
            // Popped last, so the highest child is explored first.
            kids.sort_unstable_by(|a, b| {
                (a.0, a.1)
                    .partial_cmp(&(b.0, b.1))
                    .expect("finite displacements")
            });
            for &(dd, dr) in kids.iter() {
                let r = rem + dr;
                let carry = (r / h).floor();
                stack.push((d + 1, off + dd + carry as i64, r - carry * h));
            }
        }
        Ok(best)
    }
}

/// One sample of the maximal displacement of the walk started at
/// generation `m` and observed at generation `n`.
pub fn sample_max(
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
    m: usize,
    n: usize,
    seed: u64,
    node_cap: usize,
) -> Result<f64> {
    TreeSampler::new(branching, displacement, m, n, node_cap)?.sample(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{EquicorrelatedGaussian, OffspringPmf};

    fn laws(probs: &[f64], g: Pmf) -> (BranchingLaw, DisplacementLaw) {
        (
            BranchingLaw::constant(OffspringPmf::from_probs(probs).unwrap()),
            DisplacementLaw::constant(Grid::default(), JointLaw::independent(g)).unwrap(),
        )
    }

    #[test]
    fn deterministic_binary_tree() {
        let (b, d) = laws(&[0.0, 1.0], Pmf::point(&Grid::default(), 1.0).unwrap());
        assert_eq!(sample_max(&b, &d, 0, 7, 3, DEFAULT_NODE_CAP).unwrap(), 7.0);
    }

    #[test]
    fn single_path_adds_up() {
        let (b, d) = laws(&[1.0], Pmf::point(&Grid::default(), 0.35).unwrap());
        let x = sample_max(&b, &d, 0, 9, 11, DEFAULT_NODE_CAP).unwrap();
        assert!((x - 9.0 * 0.35).abs() < 1e-12);
    }

    #[test]
    fn zero_steps_give_zero() {
        let (b, d) = laws(&[0.0, 1.0], Pmf::point(&Grid::default(), 1.0).unwrap());
        assert_eq!(sample_max(&b, &d, 4, 4, 0, 10).unwrap(), 0.0);
        assert!(matches!(
            sample_max(&b, &d, 5, 4, 0, 10),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn fair_steps_stay_in_range() {
        let g = Grid::default();
        let (b, d) = laws(
            &[0.0, 1.0],
            Pmf::discrete(&g, &[-1.0, 1.0], &[0.5, 0.5]).unwrap(),
        );
        for seed in 0..200 {
            let x = sample_max(&b, &d, 0, 3, seed, DEFAULT_NODE_CAP).unwrap();
            assert!([-3.0, -1.0, 1.0, 3.0].contains(&x));
        }
    }

    #[test]
    fn skipping_subtrees_keeps_the_maximum() {
        // a deep deterministic tree would need 2^21 nodes without skipping
        let (b, d) = laws(&[0.0, 1.0], Pmf::point(&Grid::default(), 1.0).unwrap());
        assert_eq!(sample_max(&b, &d, 0, 20, 5, 100).unwrap(), 20.0);
    }

    #[test]
    fn population_cap_is_enforced() {
        // sampled laws have no known reach, so nothing is skipped and a
        // binary tree of depth 10 visits all 2047 nodes
        let g = Grid::default();
        let joint = JointLaw::MonteCarlo(Arc::new(
            EquicorrelatedGaussian::new(&g, 0.0, 1.0, 0.0).unwrap(),
        ));
        let b = BranchingLaw::constant(OffspringPmf::from_probs(&[0.0, 1.0]).unwrap());
        let d = DisplacementLaw::constant(g, joint).unwrap();
        assert!(sample_max(&b, &d, 0, 10, 0, 2047).is_ok());
        assert!(matches!(
            sample_max(&b, &d, 0, 10, 0, 2046),
            Err(Error::PopulationCapExceeded { cap: 2046 })
        ));
    }
}
