//! Checks of the Lyapunov bound and of the right-tail decay on the curves
//! of a recursion run.

use serde_json::json;

use super::functional::{lyapunov_big_l, m_steps, PositivePart};
use super::params::LyapunovParams;
use crate::error::Result;
use crate::recurse::SandwichRun;
use crate::report::{ext, Check, RunReport};

/// `L(F̄_n^m)` for every `m <= n`; passes iff the largest value is at most
/// `C`.
pub fn verify_bounded(
    run: &SandwichRun,
    params: &LyapunovParams,
    part: PositivePart,
) -> Result<RunReport> {
    let curves = run.exact_curves()?;
    let values: Vec<_> = curves
        .iter()
        .map(|u| lyapunov_big_l(u, params, part))
        .collect();
    let (m, worst) = values
        .iter()
        .enumerate()
        .fold((0, values[0]), |acc, (m, v)| {
            if v.value > acc.1.value {
                (m, *v)
            } else {
                acc
            }
        });
    let x = worst.argmax.map(|i| run.grid.x(i));
    let mut report = RunReport::new();
    report.push(Check::new(
        "lyapunov_bounded",
        worst.value <= params.c,
        params.c - worst.value,
        json!({
            "max_L": ext(worst.value),
            "m": m,
            "x": x,
            "C": params.c,
            "L_by_m": values.iter().map(|v| ext(v.value)).collect::<Vec<_>>(),
            "finite_rows": values.iter().filter(|v| v.value.is_finite()).count(),
        }),
    ));
    Ok(report)
}

/// `2^-j` for `j = 3..=20`.
pub fn default_delta1_candidates() -> Vec<f64> {
    (3..=20).map(|j| 0.5f64.powi(j)).collect()
}

/// For each candidate `delta1`, the implication
/// `F̄(x) <= delta1  =>  F̄(x - M) >= (1 + eps1/2) F̄(x)` at every grid `x`
/// with `F̄(x) in (0, delta1]` and every `m <= n`. Passes with the largest
/// candidate that holds everywhere.
pub fn right_tail_check(
    run: &SandwichRun,
    params: &LyapunovParams,
    candidates: &[f64],
) -> Result<RunReport> {
    let curves = run.exact_curves()?;
    let factor = 1.0 + params.eps1 / 2.0;
    // Smallest tail value that violates the implication, over all rows:
    // a candidate passes iff it is below that value.
    let mut first_bad = (f64::INFINITY, 0usize, f64::NAN);
    for (m, u) in curves.iter().enumerate() {
        let shift = m_steps(u, params);
        for (i, &v) in u.values().iter().enumerate() {
            if v <= 0.0 {
                continue;
            }
            if u.at_index(i as i64 - shift) < factor * v && v < first_bad.0 {
                first_bad = (v, m, u.grid().x(i));
            }
        }
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let passing: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|&d| d < first_bad.0)
        .collect();
    let best = passing.first().copied();
    let checked = best.map_or(0, |d| {
        curves
            .iter()
            .flat_map(|u| u.values())
            .filter(|&&v| v > 0.0 && v <= d)
            .count()
    });
    let (bad_value, bad_m, bad_x) = first_bad;
    let mut report = RunReport::new();
    report.push(Check::new(
        "right_tail",
        best.is_some(),
        best.map_or(-1.0, |d| d),
        json!({
            "delta1": best,
            "passing": passing,
            "candidates": sorted,
            "smallest_violating_tail": ext(bad_value),
            "witness_m": bad_value.is_finite().then_some(bad_m),
            "witness_x": bad_value.is_finite().then_some(bad_x),
            "factor": factor,
            "checked_points": checked,
            "vacuous": best.is_some() && checked == 0,
        }),
    ));
    Ok(report)
}
