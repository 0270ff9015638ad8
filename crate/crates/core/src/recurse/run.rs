use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::qfun::qm;
use super::step::{step_exact, step_lower, step_upper, StepInfo, StepOptions};
use super::tail::{base_tail, TailCurve};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::laws::{BranchingLaw, DisplacementLaw};
use crate::report::{Check, RunReport};

/// Numerical slack on the sandwich inequalities for structured families.
pub const SANDWICH_TOL: f64 = 1e-9;

/// Which recursions to iterate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modes {
    pub lower: bool,
    pub exact: bool,
    pub upper: bool,
}

impl Modes {
    pub const ALL: Modes = Modes {
        lower: true,
        exact: true,
        upper: true,
    };
    pub const EXACT: Modes = Modes {
        lower: false,
        exact: true,
        upper: false,
    };
}

impl FromStr for Modes {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut modes = Modes::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "lower" => modes.lower = true,
                "exact" => modes.exact = true,
                "upper" => modes.upper = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown mode `{other}` (expected lower, exact, upper)"
                    )))
                }
            }
        }
        if modes == Modes::default() {
            return Err(Error::Config("no recursion mode selected".into()));
        }
        Ok(modes)
    }
}

/// Curves of generation `m` for a horizon `n`.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub m: usize,
    pub lower: Option<TailCurve>,
    pub exact: Option<TailCurve>,
    pub upper: Option<TailCurve>,
    pub lower_info: StepInfo,
    pub exact_info: StepInfo,
    pub upper_info: StepInfo,
}

/// `F̄_n^m` and its two bounds for `m = n, n-1, ..., 0`, stored by `m`.
#[derive(Clone, Debug, Serialize)]
pub struct SandwichRun {
    pub n: usize,
    pub grid: Grid,
    pub modes: Modes,
    pub rows: Vec<Row>,
}

impl SandwichRun {
    pub fn row(&self, m: usize) -> &Row {
        &self.rows[m]
    }

    pub fn exact(&self, m: usize) -> Result<&TailCurve> {
        self.rows
            .get(m)
            .and_then(|r| r.exact.as_ref())
            .ok_or(Error::MissingMode("exact"))
    }

    pub fn exact_curves(&self) -> Result<Vec<&TailCurve>> {
        (0..=self.n).map(|m| self.exact(m)).collect()
    }

    /// Any exact step went through Monte Carlo integration.
    pub fn approximate(&self) -> bool {
        self.rows.iter().any(|r| r.exact_info.approximate)
    }

    pub fn max_mc_stderr(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.exact_info.mc_stderr)
            .fold(0.0, f64::max)
    }

    /// Largest re-monotonization correction over every stored step.
    pub fn max_monotone_correction(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| [r.lower_info, r.exact_info, r.upper_info])
            .map(|i| i.normalization.monotone)
            .fold(0.0, f64::max)
    }

    /// CSV with columns `m,x,lower,exact,upper`; absent modes are empty.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "m,x,lower,exact,upper")?;
        let cell = |c: &Option<TailCurve>, i: usize| {
            c.as_ref()
                .map(|c| c.values()[i].to_string())
                .unwrap_or_default()
        };
        for row in &self.rows {
            for (i, x) in self.grid.xs().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    row.m,
                    x,
                    cell(&row.lower, i),
                    cell(&row.exact, i),
                    cell(&row.upper, i)
                )?;
            }
        }
        Ok(())
    }
}

/// Iterate the requested recursions from `F̄_n^n = 1_{x<0}` down to `m = 0`.
/// Each chain feeds on its own previous curve.
pub fn run(
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
    n: usize,
    modes: Modes,
    opts: &StepOptions,
) -> Result<SandwichRun> {
    let grid = *displacement.grid();
    let base = base_tail(grid);
    let start = |on: bool| on.then(|| base.clone());
    let mut rows = vec![Row {
        m: n,
        lower: start(modes.lower),
        exact: start(modes.exact),
        upper: start(modes.upper),
        lower_info: StepInfo::default(),
        exact_info: StepInfo::default(),
        upper_info: StepInfo::default(),
    }];
    for m in (0..n).rev() {
        let prev = rows.last().expect("rows start non-empty");
        let split =
            |r: Option<Result<(TailCurve, StepInfo)>>| -> Result<(Option<TailCurve>, StepInfo)> {
                match r.transpose()? {
                    Some((c, i)) => Ok((Some(c), i)),
                    None => Ok((None, StepInfo::default())),
                }
            };
        let (lower, lower_info) = split(
            prev.lower
                .as_ref()
                .map(|u| step_lower(m, u, branching, displacement)),
        )?;
        let (exact, exact_info) = split(
            prev.exact
                .as_ref()
                .map(|u| step_exact(m, u, branching, displacement, opts)),
        )?;
        let (upper, upper_info) = split(
            prev.upper
                .as_ref()
                .map(|u| step_upper(m, u, branching, displacement)),
        )?;
        rows.push(Row {
            m,
            lower,
            exact,
            upper,
            lower_info,
            exact_info,
            upper_info,
        });
    }
    rows.reverse();
    Ok(SandwichRun {
        n,
        grid,
        modes,
        rows,
    })
}

/// Largest violations of `lower <= exact <= upper` over all `(m, x)`.
pub fn check_sandwich(data: &SandwichRun) -> Result<RunReport> {
    if !data.modes.exact {
        return Err(Error::MissingMode("exact"));
    }
    let tol = if data.approximate() {
        SANDWICH_TOL + 3.0 * data.max_mc_stderr()
    } else {
        SANDWICH_TOL
    };
    let mut report = RunReport::new();
    let mut side = |name: &str, pick: fn(&Row) -> Option<(&TailCurve, &TailCurve)>| {
        let mut worst = (f64::NEG_INFINITY, 0, 0);
        for row in &data.rows {
            if let Some((hi, lo)) = pick(row) {
                let (v, i) = hi.max_excess_over(lo);
                if v > worst.0 {
                    worst = (v, row.m, i);
                }
            }
        }
        let (v, m, i) = worst;
        let v = v.max(0.0);
        report.push(Check::new(
            name,
            v <= tol,
            -v,
            json!({ "max_violation": v, "m": m, "x": data.grid.x(i), "tolerance": tol,
                    "approximate": data.approximate() }),
        ));
    };
    if data.modes.lower {
        side("sandwich.lower", |r| {
            Some((r.lower.as_ref()?, r.exact.as_ref()?))
        });
    }
    if data.modes.upper {
        side("sandwich.upper", |r| {
            Some((r.exact.as_ref()?, r.upper.as_ref()?))
        });
    }
    Ok(report)
}

/// `Q_m(F̄^{m+1})(x + B) - eta1 <= F̄^m(x) <= Q_m(F̄^{m+1})(x - B) + eta1`
/// at every grid `x` and every `m < n`. `B` is rounded up to the grid.
pub fn pointwise_bounds_check(
    data: &SandwichRun,
    branching: &BranchingLaw,
    b: f64,
    eta1: f64,
) -> Result<RunReport> {
    let curves = data.exact_curves()?;
    let s = data.grid.steps_ceil(b.max(0.0));
    let mut lower = (f64::INFINITY, 0, 0);
    let mut upper = (f64::INFINITY, 0, 0);
    for m in 0..data.n {
        let pmf = branching.at(m)?;
        let (here, next) = (curves[m], curves[m + 1]);
        for i in 0..here.len() {
            let f = here.values()[i];
            let lo = f - (qm(pmf, next.at_index(i as i64 + s)) - eta1);
            let hi = qm(pmf, next.at_index(i as i64 - s)) + eta1 - f;
            if lo < lower.0 {
                lower = (lo, m, i);
            }
            if hi < upper.0 {
                upper = (hi, m, i);
            }
        }
    }
    let mut report = RunReport::new();
    for (name, (margin, m, i)) in [("pwbounds.lower", lower), ("pwbounds.upper", upper)] {
        let margin = if margin.is_finite() { margin } else { 0.0 };
        report.push(Check::new(
            name,
            margin >= -SANDWICH_TOL,
            margin,
            json!({ "m": m, "x": data.grid.x(i), "B": data.grid.x_of_offset(s), "eta1": eta1 }),
        ));
    }
    Ok(report)
}
