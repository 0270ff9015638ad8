//! Brute-force checks of the elementary inequalities satisfied by the
//! `Q` maps.

use serde_json::json;

use crate::laws::OffspringPmf;
use crate::recurse::{q1, qm};
use crate::report::{Check, RunReport};

/// Points of the `u`-grid in `[0, 1]`: `u_i = i / Q_GRID`.
pub const Q_GRID: u32 = 10_000;

/// Beyond this `k` the exact integer check would overflow `i128`.
const EXACT_K_MAX: usize = 8;

/// `max(1, k0 (k0 - 1) / 2)`.
pub fn c1_for(k0: usize) -> f64 {
    (k0 * k0.saturating_sub(1) / 2).max(1) as f64
}

/// `m1 / 2`.
pub fn c2_for(m1: f64) -> f64 {
    m1 / 2.0
}

/// What [`check_q_bounds`] examines.
#[derive(Clone, Copy, Debug)]
pub enum QBoundSubject<'a> {
    /// Every `Q_{1,k}`, `1 <= k <= k0`, with `c1 = c1_for(k0)`.
    Bounded { k0: usize },
    /// `Q_{m,(1)}` and `Q_{m,(2)}` of one pmf with `c2 = m1 / 2`.
    Pmf { pmf: &'a OffspringPmf, m1: f64 },
}

#[derive(Clone, Copy)]
struct Worst {
    margin: f64,
    k: usize,
    u: f64,
}

impl Worst {
    fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            k: 0,
            u: f64::NAN,
        }
    }

    fn see(&mut self, margin: f64, k: usize, u: f64) {
        if margin < self.margin {
            *self = Self { margin, k, u };
        }
    }
}

/// Exact sign of `Q_{1,k}(u) - u`, `Q_{1,k}(u) - (k u - c1 u^2)` and
/// `k u - Q_{1,k}(u)` at `u = i / n`, all scaled by `n^k`.
fn exact_signs(k: usize, i: u32, c1: i128) -> [bool; 3] {
    let n = Q_GRID as i128;
    let (i, k32) = (i as i128, k as u32);
    let q = n.pow(k32) - (n - i).pow(k32);
    let u = i * n.pow(k32 - 1);
    let ku = k as i128 * u;
    let quad = if k >= 2 {
        c1 * i * i * n.pow(k32 - 2)
    } else {
        0
    };
    // for k = 1 the lower bound u - c1 u^2 <= u is immediate
    [q >= u, k == 1 || q >= ku - quad, ku >= q]
}

/// Verify the `Q` inequalities on the `u`-grid, reporting for each the
/// smallest margin and where it occurs.
pub fn check_q_bounds(subject: QBoundSubject<'_>) -> RunReport {
    let mut report = RunReport::new();
    match subject {
        QBoundSubject::Bounded { k0 } => {
            let c1 = c1_for(k0);
            let exact = k0 <= EXACT_K_MAX;
            let mut worst = [Worst::new(); 3];
            let mut ok = [true; 3];
            for k in 1..=k0.max(1) {
                for i in 0..=Q_GRID {
                    let u = i as f64 / Q_GRID as f64;
                    let q = q1(k, u);
                    let margins = [q - u, q - (k as f64 * u - c1 * u * u), k as f64 * u - q];
                    let signs = if exact {
                        exact_signs(k, i, c1 as i128)
                    } else {
                        margins.map(|m| m >= -1e-12)
                    };
                    for j in 0..3 {
                        worst[j].see(margins[j], k, u);
                        ok[j] &= signs[j];
                    }
                }
            }
            let names = ["Q1_ge_u", "Q1_ge_ku_minus_c1u2", "Q1_le_ku"];
            for j in 0..3 {
                let w = worst[j];
                report.push(Check::new(
                    names[j],
                    ok[j],
                    w.margin,
                    json!({ "k": w.k, "u": w.u, "k0": k0, "c1": c1, "exact": exact }),
                ));
            }
        }
        QBoundSubject::Pmf { pmf, m1 } => {
            let c2 = c2_for(m1);
            let mean = pmf.mean();
            let second = pmf.second_moment();
            report.push(Check::new(
                "second_moment_lt_m1",
                second < m1,
                m1 - second,
                json!({ "second_moment": second, "m1": m1 }),
            ));
            let mut worst = [Worst::new(); 4];
            for i in 0..=Q_GRID {
                let u = i as f64 / Q_GRID as f64;
                let (a, b) = (qm(pmf, u), mean * u);
                let tol = 1e-13 * u;
                worst[1].see(a - (b - c2 * u * u) + tol, 0, u);
                worst[2].see(b - a + tol, 0, u);
                worst[3].see(m1.sqrt() * u - b + tol, 0, u);
                if i > 0 && i < Q_GRID {
                    worst[0].see(a - u, 0, u);
                }
            }
            let names = [
                "Qm1_gt_u",
                "Qm1_ge_Qm2_minus_c2u2",
                "Qm1_le_Qm2",
                "Qm2_le_sqrt_m1_u",
            ];
            for j in 0..4 {
                let w = worst[j];
                let pass = if j == 0 {
                    w.margin > 0.0
                } else {
                    w.margin >= 0.0
                };
                report.push(Check::new(
                    names[j],
                    pass,
                    w.margin,
                    json!({ "u": w.u, "c2": c2, "m1": m1, "mean": mean }),
                ));
            }
        }
    }
    report
}

/// `g_delta(eps) = (1 - (1-delta)^k0)/(k0 delta) ((1+eps)/(delta+eps))^(k0-1) eps`.
pub fn g_delta(k0: usize, delta: f64, eps: f64) -> f64 {
    let k = k0 as f64;
    let lead = -(k * (-delta).ln_1p()).exp_m1() / (k * delta);
    lead * ((1.0 + eps) / (delta + eps)).powi(k0 as i32 - 1) * eps
}

/// `c_delta = 1 + (m0 - 1) delta / k0` and the first-order growth property
/// `Q(x) > c_delta x` on `(0, 1 - delta]`, plus the flatness-transfer
/// property driven by `g_delta` on `[delta, 1]`. Ranges with no grid point
/// pass vacuously and are flagged.
pub fn check_t1_t2(pmf: &OffspringPmf, m0: f64, delta: f64, eps: f64) -> RunReport {
    let k0 = pmf.max_k();
    let c_delta = 1.0 + (m0 - 1.0) * delta / k0 as f64;
    let g = g_delta(k0, delta, eps);
    let n = Q_GRID;
    let mut report = RunReport::new();

    let mut t1 = Worst::new();
    let mut t1_points = 0usize;
    for i in 1..=n {
        let x = i as f64 / n as f64;
        if x > 1.0 - delta {
            break;
        }
        t1_points += 1;
        let q = qm(pmf, x);
        t1.see(q - c_delta * x, 0, x);
    }
    report.push(Check::new(
        "T1",
        t1_points == 0 || t1.margin > 0.0,
        if t1_points == 0 { 0.0 } else { t1.margin },
        json!({ "c_delta": c_delta, "x": t1.u, "points": t1_points, "vacuous": t1_points == 0,
                "m0": m0, "k0": k0, "delta": delta }),
    ));

    let mut t2 = Worst::new();
    let mut t2_points = 0usize;
    let cap = (1.0 - delta) / (1.0 + eps);
    for i in 0..=n {
        let x = i as f64 / n as f64;
        let y = (1.0 + g) * x;
        if x < delta || y > 1.0 {
            continue;
        }
        let qy = qm(pmf, y);
        if qy > cap {
            continue;
        }
        t2_points += 1;
        // relative slack absorbs rounding in the two evaluations
        t2.see(qy - (1.0 + eps) * qm(pmf, x) + 1e-12 * qy, 0, x);
    }
    report.push(Check::new(
        "T2",
        t2_points == 0 || t2.margin >= 0.0,
        if t2_points == 0 { 0.0 } else { t2.margin },
        json!({ "g_delta": g, "x": t2.u, "points": t2_points, "vacuous": t2_points == 0,
                "delta": delta, "eps": eps }),
    ));
    report
}
