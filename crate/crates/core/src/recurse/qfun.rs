//! The one-step maps `Q_{1,k}(u) = 1 - (1-u)^k`, `Q_{2,k}(u) = k u` and
//! their offspring-weighted averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::OffspringPmf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QKind {
    Q1k,
    Q2k,
    /// `sum_k p_k (1 - (1-u)^k)`.
    Qm,
    /// Same map as `Qm`, named for the identical-marginal setting.
    Qm1,
    /// `sum_k p_k k u`.
    Qm2,
}

#[derive(Clone, Copy, Debug)]
pub enum QArg<'a> {
    K(usize),
    Pmf(&'a OffspringPmf),
}

/// `1 - (1-u)^k`, accurate for tiny `u`.
#[inline]
pub fn q1(k: usize, u: f64) -> f64 {
    match k {
        0 => 0.0,
        1 => u,
        _ => -((k as f64) * (-u).ln_1p()).exp_m1(),
    }
}

#[inline]
pub fn q2(k: usize, u: f64) -> f64 {
    k as f64 * u
}

pub fn qm(pmf: &OffspringPmf, u: f64) -> f64 {
    pmf.support().map(|(k, p)| p * q1(k, u)).sum()
}

pub fn qm2(pmf: &OffspringPmf, u: f64) -> f64 {
    pmf.mean() * u
}

pub fn q_transform(kind: QKind, arg: QArg<'_>, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::DomainError(format!(
            "Q maps act on [0, 1], got u = {u}"
        )));
    }
    match (kind, arg) {
        (QKind::Q1k, QArg::K(k)) => Ok(q1(k, u)),
        (QKind::Q2k, QArg::K(k)) => Ok(q2(k, u)),
        (QKind::Qm | QKind::Qm1, QArg::Pmf(p)) => Ok(qm(p, u)),
        (QKind::Qm2, QArg::Pmf(p)) => Ok(qm2(p, u)),
        (kind, _) => Err(Error::DomainError(format!(
            "{kind:?} takes {}",
            if matches!(kind, QKind::Q1k | QKind::Q2k) {
                "an offspring count"
            } else {
                "an offspring pmf"
            }
        ))),
    }
}
