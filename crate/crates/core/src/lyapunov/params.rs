//! The parameter bundle of the Lyapunov functional and a search that
//! satisfies the six compatibility constraints.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::report::{ext, Check, Report};

/// Gap `inf_n sum_k k p_{n,k} - m0` assumed when no offspring mean is
/// supplied.
pub const DEFAULT_MEAN_GAP: f64 = 1e-12;

const EPS1_START: f64 = 1.0 / 128.0;
const EPS1_FLOOR: f64 = 1e-8;
const B_EXCESS_START: f64 = 0.5;
const B_EXCESS_FLOOR: f64 = 1e-10;
const M_CEILING: f64 = 1e7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovParams {
    pub eps0: f64,
    pub eps1: f64,
    pub b: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub kappa: f64,
    pub a: f64,
    #[serde(rename = "M0")]
    pub big_m0: f64,
    pub k0: usize,
    pub m0: f64,
    pub c1: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl LyapunovParams {
    /// A fixed bundle for tests and documentation; not guaranteed to
    /// satisfy the constraints.
    pub fn example() -> Self {
        Self {
            eps0: 0.05,
            eps1: 0.005,
            b: 1.01,
            big_m: 128.0,
            kappa: 0.005,
            a: 1.0,
            big_m0: 1.0,
            k0: 2,
            m0: 1.9,
            c1: 1.0,
            c: std::f64::consts::LN_2,
        }
    }
}

/// The fixed inputs to [`choose_params`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamInputs {
    pub k0: usize,
    pub m0: f64,
    pub eps0: f64,
    pub a: f64,
    #[serde(rename = "M0")]
    pub big_m0: f64,
    pub c1: f64,
    /// Grid step; `M` is rounded up to a multiple of it.
    pub h: f64,
    /// `inf_n sum_k k p_{n,k}`, if known.
    pub inf_mean: Option<f64>,
}

impl ParamInputs {
    /// `c1` defaults to [`c1_for`](super::c1_for)`(k0)`.
    pub fn new(k0: usize, m0: f64, eps0: f64, a: f64, big_m0: f64, h: f64) -> Self {
        Self {
            k0,
            m0,
            eps0,
            a,
            big_m0,
            c1: super::c1_for(k0),
            h,
            inf_mean: None,
        }
    }

    pub fn with_c1(mut self, c1: f64) -> Self {
        self.c1 = c1;
        self
    }

    pub fn with_mean(mut self, inf_mean: f64) -> Self {
        self.inf_mean = Some(inf_mean);
        self
    }

    fn mean_gap(&self) -> f64 {
        self.inf_mean.map_or(DEFAULT_MEAN_GAP, |m| m - self.m0)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Precondition(msg));
        if self.k0 < 1 {
            return bad("k0 must be at least 1".into());
        }
        if !(self.m0 > 1.0) {
            return bad(format!("m0 must exceed 1, got {}", self.m0));
        }
        let cap = (0.25 * self.m0.ln()).min(1.0);
        if !(self.eps0 >= 0.0 && self.eps0 < cap) {
            return bad(format!(
                "eps0 must lie in [0, min(log(m0)/4, 1)) = [0, {cap}), got {}",
                self.eps0
            ));
        }
        if !(self.a > 0.0 && self.big_m0 > 0.0 && self.h > 0.0) {
            return bad("a, M0 and the grid step must be positive".into());
        }
        if !(self.c1 >= 1.0) {
            return bad(format!("c1 must be at least 1, got {}", self.c1));
        }
        if let Some(mean) = self.inf_mean {
            if !(mean > self.m0) {
                return bad(format!(
                    "offspring mean {mean} does not exceed m0 = {}",
                    self.m0
                ));
            }
        }
        Ok(())
    }
}

/// Each constraint as `(name, pass, margin, lhs, rhs)`.
struct Row(&'static str, bool, f64, f64, f64);

fn rows(p: &LyapunovParams, mean_gap: f64, h: f64) -> Vec<Row> {
    let lb = p.b.ln();
    let log4k0 = (4.0 * p.k0 as f64).ln();
    let mut out = Vec::new();

    let steps = p.big_m / h;
    let on_grid = (steps - steps.round()).abs() <= 1e-9 * steps.max(1.0);
    let ranges = p.eps1 > 0.0
        && p.eps1 < 0.01
        && p.kappa > 0.0
        && p.kappa < 0.01
        && p.b > 1.0
        && p.big_m > 100.0
        && on_grid
        && p.c == std::f64::consts::LN_2;
    out.push(Row(
        "ranges",
        ranges,
        if ranges { 0.0 } else { -1.0 },
        f64::NAN,
        f64::NAN,
    ));

    // M > 4 M0 and (4 k0)^4 e^{-aM/2} <= 1/100, in logs
    let lhs = 4.0 * log4k0 - p.a * p.big_m / 2.0;
    let rhs = 0.01f64.ln();
    let margin = (rhs - lhs).min(p.big_m - 4.0 * p.big_m0);
    out.push(Row(
        "M1",
        p.big_m > 4.0 * p.big_m0 && lhs <= rhs,
        margin,
        lhs,
        rhs,
    ));

    // 8 (2k0)^{5/2} eps1^{1/(2 log b) - 3/2} / ((1 - eps0) kappa^{3/2}) < 1/(2 c1), in logs
    let lhs = 8f64.ln() + 2.5 * (2.0 * p.k0 as f64).ln() + (0.5 / lb - 1.5) * p.eps1.ln()
        - (1.0 - p.eps0).ln()
        - 1.5 * p.kappa.ln();
    let rhs = -(2.0 * p.c1).ln();
    out.push(Row("b1", lhs < rhs, rhs - lhs, lhs, rhs));

    // c1 (1 + eps1)/(1 - eps0) eps1^{1/log b} <= mean - m0
    let lhs = p.c1 * (1.0 + p.eps1) / (1.0 - p.eps0) * (p.eps1.ln() / lb).exp();
    out.push(Row("b2", lhs <= mean_gap, mean_gap - lhs, lhs, mean_gap));

    // log(m0)/2 >= 2 (eps1 + eps0) + 6 kappa / log b
    let lhs = p.m0.ln() / 2.0;
    let rhs = 2.0 * (p.eps1 + p.eps0) + 6.0 * p.kappa / lb;
    out.push(Row("eps1_kappa", lhs >= rhs, lhs - rhs, lhs, rhs));

    // a M / (16 log b) >= 2 (eps1 + eps0 + log(4 k0)) - log(kappa) / log b
    let lhs = p.a * p.big_m / (16.0 * lb);
    let rhs = 2.0 * (p.eps1 + p.eps0 + log4k0) - p.kappa.ln() / lb;
    out.push(Row("M2", lhs >= rhs, lhs - rhs, lhs, rhs));

    // a / (16 log b) >= 2 log(4 k0) / M
    let lhs = p.a / (16.0 * lb);
    let rhs = 2.0 * log4k0 / p.big_m;
    out.push(Row("b4", lhs >= rhs, lhs - rhs, lhs, rhs));
    out
}

/// Substitute `p` into every constraint. `inf_mean` feeds the right side
/// of `b2`; without it a gap of [`DEFAULT_MEAN_GAP`] is assumed.
pub fn check_constraints(p: &LyapunovParams, inf_mean: Option<f64>, h: f64) -> Report {
    let gap = inf_mean.map_or(DEFAULT_MEAN_GAP, |m| m - p.m0);
    let mut report = Report::new();
    for Row(name, pass, margin, lhs, rhs) in rows(p, gap, h) {
        report.push(Check::new(
            name,
            pass,
            margin,
            json!({ "lhs": ext(lhs), "rhs": ext(rhs), "mean_gap": gap, "assumed_gap": inf_mean.is_none() }),
        ));
    }
    report
}

fn first_failure(
    p: &LyapunovParams,
    gap: f64,
    h: f64,
    names: &[&str],
) -> Option<(&'static str, f64, f64)> {
    rows(p, gap, h)
        .into_iter()
        .find(|r| names.contains(&r.0) && !r.1)
        .map(|r| (r.0, r.3, r.4))
}

fn infeasible(stage: &str, failure: Option<(&'static str, f64, f64)>, at: String) -> Error {
    let (constraint, lhs, rhs) = failure.unwrap_or(("ranges", f64::NAN, f64::NAN));
    Error::Infeasible {
        constraint: constraint.to_string(),
        detail: format!("{stage} search exhausted at {at}; lhs = {lhs}, rhs = {rhs}"),
    }
}

/// Pick `(eps1, kappa)`, then `b`, then `M`, each by geometric search:
/// `eps1 = beta` halve from 1/128 until `eps1_kappa` holds; `b - 1` halves
/// from 1/2 until `kappa = beta log b < 1/100`, `b1`, `b2` and `b4` hold at
/// the smallest admissible `M`; `M` starts at the first grid multiple above
/// `max(100, 4 M0)` and doubles until `M1`, `M2` and `b4` hold.
pub fn choose_params(inputs: &ParamInputs) -> Result<LyapunovParams> {
    inputs.validate()?;
    let gap = inputs.mean_gap();
    let h = inputs.h;
    let m_start = ((100f64.max(4.0 * inputs.big_m0) / h).floor() + 1.0) * h;
    let mut p = LyapunovParams {
        eps0: inputs.eps0,
        eps1: EPS1_START,
        b: 1.0 + B_EXCESS_START,
        big_m: m_start,
        kappa: 0.0,
        a: inputs.a,
        big_m0: inputs.big_m0,
        k0: inputs.k0,
        m0: inputs.m0,
        c1: inputs.c1,
        c: std::f64::consts::LN_2,
    };

    let budget = inputs.m0.ln() / 2.0 - 2.0 * inputs.eps0;
    let mut beta = EPS1_START;
    while 2.0 * p.eps1 + 6.0 * beta > budget {
        p.eps1 /= 2.0;
        beta /= 2.0;
        if p.eps1 < EPS1_FLOOR {
            p.kappa = beta * p.b.ln();
            return Err(infeasible(
                "eps1",
                first_failure(&p, gap, h, &["eps1_kappa"]),
                format!("eps1 = {}", p.eps1),
            ));
        }
    }

    let b_stage = ["eps1_kappa", "b1", "b2", "b4"];
    let mut t = B_EXCESS_START;
    loop {
        p.b = 1.0 + t;
        p.kappa = beta * p.b.ln();
        if p.kappa < 0.01 && first_failure(&p, gap, h, &b_stage).is_none() {
            break;
        }
        t /= 2.0;
        if t < B_EXCESS_FLOOR {
            return Err(infeasible(
                "b",
                first_failure(&p, gap, h, &b_stage),
                format!("b - 1 = {}", p.b - 1.0),
            ));
        }
    }

    let m_stage = ["M1", "M2", "b4"];
    while first_failure(&p, gap, h, &m_stage).is_some() {
        p.big_m *= 2.0;
        if p.big_m > M_CEILING {
            return Err(infeasible(
                "M",
                first_failure(&p, gap, h, &m_stage),
                format!("M = {}", p.big_m),
            ));
        }
    }

    match rows(&p, gap, h).into_iter().find(|r| !r.1) {
        None => Ok(p),
        Some(r) => Err(Error::Infeasible {
            constraint: r.0.to_string(),
            detail: format!("final re-check failed: lhs = {}, rhs = {}", r.3, r.4),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_inputs_validate() {
        let inputs = ParamInputs::new(2, 1.9, 0.05, 1.0, 1.0, 0.05);
        let p = choose_params(&inputs).unwrap();
        let report = check_constraints(&p, None, 0.05);
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.checks.len(), 7);
        assert!(p.big_m > 100.0 && p.b > 1.0);
        assert_eq!(choose_params(&inputs).unwrap(), p);
    }

    #[test]
    fn boundary_eps0_is_rejected() {
        let inputs = ParamInputs::new(2, 1.9, 0.25 * 1.9f64.ln(), 1.0, 1.0, 0.05);
        assert!(matches!(
            choose_params(&inputs),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            choose_params(&ParamInputs::new(2, 1.0, 0.0, 1.0, 1.0, 0.05)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn barely_supercritical_is_infeasible() {
        let inputs = ParamInputs::new(2, 1.0 + 1e-9, 1e-10, 1.0, 1.0, 0.05);
        match choose_params(&inputs) {
            Err(Error::Infeasible { constraint, .. }) => assert_eq!(constraint, "eps1_kappa"),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn serialized_keys() {
        let v = serde_json::to_value(LyapunovParams::example()).unwrap();
        for key in [
            "eps0", "eps1", "b", "M", "kappa", "a", "M0", "k0", "m0", "c1", "C",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
