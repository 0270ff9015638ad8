//! Flatness bookkeeping for a pair `(u, v)` with `L(v) > C`, and the
//! one-step implication `L(v) > C => L(u) > C`.

use serde::Serialize;
use serde_json::json;

use super::functional::{lyapunov_big_l, m_steps, LValue, PositivePart};
use super::params::LyapunovParams;
use crate::error::{Error, Result};
use crate::laws::{BranchingLaw, DisplacementLaw};
use crate::recurse::{bound_values, Bound, BoundForm, TailCurve};
use crate::report::{ext, Check, RunReport};

/// Quantities attached to the flat point `x1` of `v` and the first
/// non-flat place of `u` to its left. Distances `y0`, `q`, `r` are measured
/// leftwards from `x1`; `q` and `r` may be `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlatnessDiagnostics {
    pub x1: f64,
    pub x2: f64,
    pub l_v: f64,
    pub eps: f64,
    pub f0: f64,
    pub delta: f64,
    pub eps_1: f64,
    pub eps_2: f64,
    pub eps_3: f64,
    pub y0: f64,
    pub q: f64,
    pub r: f64,
    /// Whether `r` came from `q` rather than `y0`.
    pub r_from_q: bool,
    /// `u(x2 - y) >= 4 k0 u(x1 - y)` at every grid `y in (r, r + M/2]`;
    /// `None` when `r = y0`.
    pub r_steep: Option<bool>,
}

struct Frame<'a> {
    u: &'a TailCurve,
    i1: i64,
    shift: i64,
    h: f64,
}

impl Frame<'_> {
    /// `u(x1 - y)` and `u(x2 - y)`; `y` need not be a grid multiple.
    fn pair(&self, y: f64) -> (f64, f64) {
        let x1 = self.u.grid().x(self.i1 as usize);
        (self.u.at(x1 - y), self.u.at(x1 - self.big_m() - y))
    }

    fn big_m(&self) -> f64 {
        self.shift as f64 * self.h
    }

    /// Left limit of `u` at `x1 - y`, for grid `y`.
    fn left_limit(&self, y_steps: i64) -> f64 {
        self.u.at_index(self.i1 - y_steps - 1)
    }
}

/// Flatness quantities of `v` at its maximizing point, read against `u`.
/// Every infimum and left limit is taken over grid points.
pub fn flatness_diagnostics(
    v: &TailCurve,
    u: &TailCurve,
    params: &LyapunovParams,
    part: PositivePart,
) -> Result<FlatnessDiagnostics> {
    if v.grid() != u.grid() {
        return Err(Error::InvalidGrid("u and v live on different grids".into()));
    }
    let LValue { value: l_v, argmax } = lyapunov_big_l(v, params, part);
    let i1 = match argmax {
        Some(i) if l_v > params.c => i as i64,
        _ => return Err(Error::PremiseUnmet { l_v, cap: params.c }),
    };
    let grid = *v.grid();
    let h = grid.h();
    let shift = m_steps(v, params);
    let f0 = v.at_index(i1);
    let eps = v.at_index(i1 - shift) / f0 - 1.0;
    let delta = params.kappa * (params.eps1 - eps);
    let k0 = params.k0 as f64;
    let y0 = (2.0 * k0 / (delta * f0)).ln() / params.a;

    let frame = Frame { u, i1, shift, h };
    let big_m = frame.big_m();
    // grid y = j h with j >= ceil(M / (2h)); beyond the left edge both
    // values are 1 and the condition fails for good
    let j_start = (shift + 1) / 2;
    let j_end = i1 + shift + 1;
    let ratio_q = (4.0 * k0).powi(2);
    let q_steps = (j_start..=j_end.max(j_start)).find(|&j| {
        let (a, b) = (u.at_index(i1 - j), u.at_index(i1 - shift - j));
        b > ratio_q * a
    });

    let (q, r, r_from_q) = match q_steps {
        None => (f64::INFINITY, y0, false),
        Some(j) => {
            let q = j as f64 * h;
            let (far, _) = frame.pair(q + big_m / 2.0);
            let cand = if frame.left_limit(j + shift) >= 4.0 * k0 * far {
                q
            } else {
                q - big_m / 2.0
            };
            if cand < y0 {
                (q, cand, true)
            } else {
                (q, y0, false)
            }
        }
    };

    let r_steep = r_from_q.then(|| {
        let lo = (r / h).floor() as i64 + 1;
        let hi = ((r + big_m / 2.0) / h + 1e-9).floor() as i64;
        (lo..=hi).all(|j| {
            let (a, b) = frame.pair(j as f64 * h);
            b >= 4.0 * k0 * a
        })
    });

    Ok(FlatnessDiagnostics {
        x1: grid.x(i1 as usize),
        x2: grid.x(i1 as usize) - big_m,
        l_v,
        eps,
        f0,
        delta,
        eps_1: eps + delta,
        eps_2: eps + 2.0 * delta,
        eps_3: eps + 3.0 * delta,
        y0,
        q,
        r,
        r_from_q,
        r_steep,
    })
}

/// `v = sum_k p_{m,k} g_{m,k} * Q_{1,k}(u)`, built on `u`'s grid.
pub fn lower_image(
    u: &TailCurve,
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
    m: usize,
) -> Result<TailCurve> {
    let raw = bound_values(
        Bound::Lower,
        BoundForm::Generic,
        m,
        u,
        branching,
        displacement,
    )?
    .expect("generic form always exists");
    Ok(TailCurve::normalized(*u.grid(), raw).0)
}

/// Build `v` from `u` by the lower map of generation `m` and test
/// `L(v) > C => L(u) > C`.
pub fn chain_check(
    u: &TailCurve,
    branching: &BranchingLaw,
    displacement: &DisplacementLaw,
    m: usize,
    params: &LyapunovParams,
    part: PositivePart,
) -> Result<RunReport> {
    let v = lower_image(u, branching, displacement, m)?;
    let lv = lyapunov_big_l(&v, params, part);
    let lu = lyapunov_big_l(u, params, part);
    let premise = lv.value > params.c;
    let holds = !premise || lu.value > params.c;
    let mut report = RunReport::new();
    report.push(Check::new(
        "chain",
        holds,
        if premise {
            lu.value - params.c
        } else {
            params.c - lv.value
        },
        json!({
            "L_v": ext(lv.value),
            "L_u": ext(lu.value),
            "x_v": lv.x(&v),
            "x_u": lu.x(u),
            "premise": premise,
            "C": params.c,
        }),
    ));
    Ok(report)
}
