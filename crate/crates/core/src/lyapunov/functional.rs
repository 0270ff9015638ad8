//! `l(u; x) = log(1/u(x)) + log_b((1 + eps1 - u(x-M)/u(x))_+)` and its
//! supremum `L(u)` over `{x : u(x) in (0, 1/2]}`.

use serde::{Deserialize, Serialize};

use super::params::LyapunovParams;
use crate::error::{Error, Result};
use crate::recurse::TailCurve;

/// Where the positive part in `l` is applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositivePart {
    /// `log_b(max(arg, 0))` with `log 0 = -inf`.
    #[default]
    Argument,
    /// `max(log_b(arg), 0)`, reading a non-positive argument as `-inf`
    /// before the clamp.
    Output,
}

/// `L(u)` and where it is attained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LValue {
    pub value: f64,
    /// Grid index of the maximizer; `None` when the sup set is empty.
    pub argmax: Option<usize>,
}

impl LValue {
    pub fn x(&self, u: &TailCurve) -> Option<f64> {
        self.argmax.map(|i| u.grid().x(i))
    }
}

/// Grid steps spanned by `M`.
pub(crate) fn m_steps(u: &TailCurve, params: &LyapunovParams) -> i64 {
    (params.big_m / u.grid().h()).round() as i64
}

fn l_at(u: &TailCurve, i: usize, shift: i64, params: &LyapunovParams, part: PositivePart) -> f64 {
    let here = u.values()[i];
    let ratio = u.at_index(i as i64 - shift) / here;
    let arg = 1.0 + params.eps1 - ratio;
    let log_b = if arg > 0.0 {
        arg.ln() / params.b.ln()
    } else {
        f64::NEG_INFINITY
    };
    let second = match part {
        PositivePart::Argument => log_b,
        PositivePart::Output => log_b.max(0.0),
    };
    -here.ln() + second
}

/// `l(u; x_i)`. Fails when `u(x_i) = 0`.
pub fn lyapunov_l(
    u: &TailCurve,
    i: usize,
    params: &LyapunovParams,
    part: PositivePart,
) -> Result<f64> {
    let here = *u
        .values()
        .get(i)
        .ok_or_else(|| Error::DomainError(format!("grid index {i} out of range")))?;
    if here <= 0.0 {
        return Err(Error::DomainError(format!(
            "u(x) = 0 at x = {}",
            u.grid().x(i)
        )));
    }
    Ok(l_at(u, i, m_steps(u, params), params, part))
}

/// `sup l(u; x)` over grid points with `u(x) in (0, 1/2]`; `-inf` if there
/// are none. Ties keep the leftmost maximizer.
pub fn lyapunov_big_l(u: &TailCurve, params: &LyapunovParams, part: PositivePart) -> LValue {
    let shift = m_steps(u, params);
    let mut best = LValue {
        value: f64::NEG_INFINITY,
        argmax: None,
    };
    for (i, &v) in u.values().iter().enumerate() {
        if v > 0.0 && v <= 0.5 {
            let l = l_at(u, i, shift, params, part);
            if best.argmax.is_none() || l > best.value {
                best = LValue {
                    value: l,
                    argmax: Some(i),
                };
            }
        }
    }
    best
}
