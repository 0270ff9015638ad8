//! Model builders shared by the benchmarks.

use gbrw_core::laws::{BranchingLaw, DisplacementLaw, JointLaw, OffspringPmf};
use gbrw_core::{Grid, Pmf};

pub struct Fixture {
    pub name: &'static str,
    pub branching: BranchingLaw,
    pub displacement: DisplacementLaw,
}

fn fixture(name: &'static str, probs: &[f64], grid: Grid, joint: JointLaw) -> Fixture {
    Fixture {
        name,
        branching: BranchingLaw::constant(OffspringPmf::from_probs(probs).expect("valid pmf")),
        displacement: DisplacementLaw::constant(grid, joint).expect("law fits the grid"),
    }
}

/// Binary branching with fair `±1` steps on a unit grid.
pub fn binary_fair() -> Fixture {
    let grid = Grid::new(-30.0, 30.0, 1.0).unwrap();
    let step = Pmf::discrete(&grid, &[-1.0, 1.0], &[0.5, 0.5]).unwrap();
    fixture(
        "binary_fair",
        &[0.0, 1.0],
        grid,
        JointLaw::independent(step),
    )
}

/// One to three children with Gaussian steps on a fine grid.
pub fn gaussian_fine() -> Fixture {
    let grid = Grid::new(-40.0, 60.0, 0.05).unwrap();
    let step = Pmf::gaussian(&grid, 0.0, 1.0).unwrap();
    fixture(
        "gaussian_fine",
        &[0.3, 0.4, 0.3],
        grid,
        JointLaw::independent(step),
    )
}

/// Binary branching with a shared Gaussian shift and `±0.5` noise.
pub fn common_shift() -> Fixture {
    let grid = Grid::new(-40.0, 60.0, 0.1).unwrap();
    let window = Grid::new(-8.0, 8.0, 0.1).unwrap();
    let shift = Pmf::gaussian(&window, 0.0, 0.5).unwrap();
    let noise = Pmf::discrete(&grid, &[-0.5, 0.5], &[0.5, 0.5]).unwrap();
    fixture(
        "common_shift",
        &[0.0, 1.0],
        grid,
        JointLaw::common_shift(shift, noise),
    )
}

/// Binary branching with uniform steps on `[-1, 1]`.
pub fn binary_uniform() -> Fixture {
    let grid = Grid::new(-30.0, 30.0, 0.05).unwrap();
    let step = Pmf::uniform(&grid, -1.0, 1.0).unwrap();
    fixture(
        "binary_uniform",
        &[0.0, 1.0],
        grid,
        JointLaw::independent(step),
    )
}
