//! Acceptance gate: every criterion at its stated tolerance and time budget,
//! one PASS/FAIL line each. Exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gbrw_core::grid::Grid;
use gbrw_core::laws::{
    check_branching_assumptions, check_joint_tail, check_marginal_assumptions, fit_joint_tail,
    BranchingLaw, BranchingVariant, DisplacementLaw, DisplacementLevel, JointLaw, JointTailVariant,
    Model, OffspringPmf, ProductMixture, Schedule, ScheduleKind,
};
use gbrw_core::lyapunov::{
    chain_check, check_q_bounds, check_t1_t2, choose_params, default_delta1_candidates,
    right_tail_check, verify_bounded, ParamInputs, PositivePart, QBoundSubject,
};
use gbrw_core::recurse::{check_sandwich, pointwise_bounds_check, run, Modes, StepOptions};
use gbrw_core::simulate::{empirical_cdf, tightness_report, DEFAULT_NODE_CAP};
use gbrw_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn sandwich() -> Result<Outcome> {
    let grid = Grid::new(-40.0, 40.0, 0.1)?;
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for seed in 1..=20 {
        let (b, d, label) = common::random_structured(seed, grid);
        let report = check_sandwich(&run(&b, &d, 12, Modes::ALL, &StepOptions::default())?)?;
        for c in &report.checks {
            worst = worst.max(-c.margin);
        }
        if !report.passed() {
            failed.push(label);
        }
    }
    outcome(
        failed.is_empty() && worst <= 1e-9,
        format!("20 configs, n = 12, max violation {worst:.2e} (tol 1e-9), failing {failed:?}"),
    )
}

fn point_model(rng: &mut ChaCha8Rng, grid: Grid) -> (BranchingLaw, DisplacementLaw) {
    let k0 = rng.random_range(1..=2usize);
    let mut probs: Vec<f64> = (0..k0).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let joint = if rng.random_bool(0.5) {
        JointLaw::independent(common::random_atoms(rng, &grid, 3))
    } else {
        JointLaw::common_shift(
            common::random_atoms(rng, &grid, 2),
            common::random_atoms(rng, &grid, 2),
        )
    };
    common::constant(&probs, grid, joint)
}

fn mixture_model(grid: Grid) -> Result<(BranchingLaw, DisplacementLaw)> {
    let atoms = vec![
        gbrw_core::Pmf::from_atoms([(-1, 0.5), (1, 0.5)])?,
        gbrw_core::Pmf::from_atoms([(2, 0.7), (-2, 0.3)])?,
    ];
    let components = BTreeMap::from([(vec![0, 1], 0.25), (vec![1, 0], 0.35), (vec![1, 1], 0.4)]);
    let joint = JointLaw::ProductMixture(ProductMixture::new(atoms, components)?);
    let level = DisplacementLevel::new(None, BTreeMap::from([(2, joint)]))?;
    let branching = BranchingLaw::constant(OffspringPmf::from_probs(&[0.0, 1.0])?);
    let schedule = Schedule::from_parts(ScheduleKind::Constant, vec![level]).expect("one level");
    Ok((branching, DisplacementLaw::new(grid, schedule)?))
}

fn enumeration() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut configs = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut models = Vec::new();
    for h in [1.0, 0.5] {
        let grid = Grid::new(-20.0, 20.0, h)?;
        for _ in 0..10 {
            models.push((grid, point_model(&mut rng, grid)));
        }
        models.push((grid, mixture_model(grid)?));
    }
    for (grid, (b, d)) in &models {
        for n in 1..=4 {
            configs += 1;
            let r = run(b, d, n, Modes::EXACT, &StepOptions::default())?;
            for m in 0..=n {
                let want = common::tail_from_law(grid, &common::enumerate_max(b, d, m, n));
                let got = r.exact(m)?.values();
                worst = got
                    .iter()
                    .zip(&want)
                    .map(|(x, y)| (x - y).abs())
                    .fold(worst, f64::max);
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("{configs} (config, n) pairs, n <= 4, max |diff| {worst:.2e} (tol 1e-12)"),
    )
}

fn simulator_agreement() -> Result<Outcome> {
    let grid = Grid::new(-15.0, 15.0, 1.0)?;
    let (b, d) = common::fair_steps(&[0.0, 1.0], grid);
    let exact = run(&b, &d, 10, Modes::EXACT, &StepOptions::default())?;
    let ecdf = empirical_cdf(&b, &d, 0, 10, 100_000, 42, DEFAULT_NODE_CAP)?;
    let (ks, x) = ecdf.ks_distance(exact.exact(0)?);
    outcome(
        ks <= 0.0051,
        format!(
            "KS {ks:.5} at x = {x} (band 0.0051, DKW 99% {:.5})",
            common::dkw(100_000, 0.01)
        ),
    )
}

fn lyapunov_suite() -> Result<(Outcome, Outcome)> {
    let grid = Grid::new(-30.0, 150.0, 0.5)?;
    let n = 15;
    let mut bounded = Vec::new();
    let mut tails = Vec::new();
    let mut finite_rows = 0;
    let mut all_ok = (true, true);
    for model in common::desk_models(grid) {
        let mut assumptions =
            check_branching_assumptions(&model.branching, BranchingVariant::Bounded);
        assumptions.extend(check_marginal_assumptions(
            &model.branching,
            &model.displacement,
            model.eps0,
            model.a,
            model.big_m0,
            Some(n),
        )?);
        assumptions.extend(check_joint_tail(
            &model.branching,
            &model.displacement,
            0.05,
            JointTailVariant::Gt,
            Some(n),
        )?);
        let params = choose_params(&model.inputs())?;
        let r = run(
            &model.branching,
            &model.displacement,
            n,
            Modes::EXACT,
            &StepOptions::default(),
        )?;
        let b = verify_bounded(&r, &params, PositivePart::Argument)?;
        let t = right_tail_check(&r, &params, &default_delta1_candidates())?;
        let bc = b.get("lyapunov_bounded").expect("named check");
        let tc = t.get("right_tail").expect("named check");
        finite_rows += bc.witness["finite_rows"].as_u64().unwrap_or(0);
        all_ok.0 &= assumptions.passed() && b.passed();
        all_ok.1 &= assumptions.passed() && t.passed();
        bounded.push(
            bc.witness["max_L"]
                .to_string()
                .trim_matches('"')
                .to_string(),
        );
        tails.push(
            tc.witness["delta1"]
                .as_f64()
                .map_or("none".into(), |d| format!("2^{}", d.log2())),
        );
    }
    Ok((
        Outcome {
            pass: all_ok.0,
            detail: format!("5 configs, n = 15, max L per config {bounded:?} (cap ln 2), finite rows {finite_rows}"),
        },
        Outcome {
            pass: all_ok.1,
            detail: format!("delta1 per config {tails:?} (need >= 2^-20)"),
        },
    ))
}

fn q_margins() -> Result<Outcome> {
    let mut negative = Vec::new();
    let mut checks = 0;
    let mut see = |label: String, report: gbrw_core::RunReport| {
        checks += report.checks.len();
        negative.extend(report.failures().map(|c| format!("{label}:{}", c.check)));
    };
    for k0 in 1..=5 {
        see(
            format!("k0={k0}"),
            check_q_bounds(QBoundSubject::Bounded { k0 }),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut pmfs = 0;
    while pmfs < 100 {
        let k = rng.random_range(2..=5usize);
        let w: Vec<f64> = (0..k)
            .map(|_| {
                if rng.random_bool(0.8) {
                    rng.random_range(0.0..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if w[1..].iter().sum::<f64>() < 0.01 * total {
            continue;
        }
        let pmf = OffspringPmf::from_probs(&w.iter().map(|x| x / total).collect::<Vec<_>>())?;
        pmfs += 1;
        see(
            format!("pmf{pmfs}"),
            check_q_bounds(QBoundSubject::Pmf {
                pmf: &pmf,
                m1: pmf.second_moment() + 0.1,
            }),
        );
        let m0 = BranchingLaw::constant(pmf.clone()).declared_m0();
        for delta in [0.1, 0.3] {
            for eps in [0.01, 0.1] {
                see(
                    format!("pmf{pmfs} d={delta} e={eps}"),
                    check_t1_t2(&pmf, m0, delta, eps),
                );
            }
        }
    }
    outcome(
        negative.is_empty(),
        format!(
            "{checks} checks (k0 <= 5 and 100 pmfs), negative margins: {}",
            negative.len()
        ),
    )
}

fn chain() -> Result<Outcome> {
    let grid = Grid::new(-10.0, 3000.0, 1.0)?;
    let (b, d) = common::fair_steps(&[0.5, 0.5], grid);
    let inputs = ParamInputs::new(2, b.declared_m0(), 0.01, 1.0, 1.0, 1.0).with_mean(b.inf_mean());
    let params = choose_params(&inputs)?;
    let mut premises = 0;
    let mut counterexamples = Vec::new();
    for seed in 0..500 {
        let u = common::random_staircase(seed, grid, params.big_m as usize, params.eps1);
        let report = chain_check(&u, &b, &d, 0, &params, PositivePart::Argument)?;
        let c = report.get("chain").expect("named check");
        premises += c.witness["premise"].as_bool().unwrap_or(false) as usize;
        if !c.pass {
            counterexamples.push(seed);
        }
    }
    outcome(
        counterexamples.is_empty() && premises > 0,
        format!(
            "500 staircases, premise met {premises} times, counterexamples {counterexamples:?}"
        ),
    )
}

fn pointwise() -> Result<Outcome> {
    let grid = Grid::new(-30.0, 150.0, 0.5)?;
    let mut worst = f64::INFINITY;
    let mut bs = Vec::new();
    let mut pass = true;
    for model in common::desk_models(grid) {
        let fit = fit_joint_tail(
            &model.branching,
            &model.displacement,
            0.05,
            JointTailVariant::Gt,
            Some(12),
        )?;
        let Some(b) = fit.b else {
            pass = false;
            continue;
        };
        bs.push(b);
        let r = run(
            &model.branching,
            &model.displacement,
            12,
            Modes::EXACT,
            &StepOptions::default(),
        )?;
        let report = pointwise_bounds_check(&r, &model.branching, b, 0.05)?;
        pass &= report.passed();
        worst = report.checks.iter().map(|c| c.margin).fold(worst, f64::min);
    }
    outcome(
        pass && worst >= -1e-9,
        format!("5 configs, n = 12, B {bs:?}, min margin {worst:.3e} (need >= -1e-9)"),
    )
}

fn pilot_widths() -> Vec<(usize, f64)> {
    let text = std::fs::read_to_string(fixture("tightness_pilot.csv")).expect("pilot fixture");
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[4].parse().unwrap())
        })
        .collect()
}

fn tightness() -> Result<Outcome> {
    let horizons = [5, 10, 15, 20];
    let pilot = pilot_widths();
    let threshold = 1.5 * pilot[0].1;
    let pilot_max = pilot.iter().map(|p| p.1).fold(0.0, f64::max);

    let binary = Model::load(fixture("binary_uniform.json"))?;
    let table = tightness_report(
        &binary.branching,
        &binary.displacement,
        &horizons,
        100_000,
        0.05,
        42,
        DEFAULT_NODE_CAP,
    )?;
    let widths = table.widths();
    let max = table.max_width();
    let own = max <= 1.5 * widths[0];

    let single = Model::load(fixture("single_path_uniform.json"))?;
    let walk = tightness_report(
        &single.branching,
        &single.displacement,
        &horizons,
        100_000,
        0.05,
        42,
        DEFAULT_NODE_CAP,
    )?;
    let ratio = walk.widths()[3] / walk.widths()[0];
    let step = single.displacement.marginal(0, 1)?;
    let h = single.grid.h();
    let oracle_width = |n| {
        let law = common::walk_law(step, n);
        (common::law_quantile(&law, 0.95) - common::law_quantile(&law, 0.05)) as f64 * h
    };
    let oracle_ratio = oracle_width(20) / oracle_width(5);

    outcome(
        max <= threshold && pilot_max <= threshold && own && ratio >= 1.7 && oracle_ratio >= 1.7,
        format!(
            "binary widths {widths:?} max {max:.3} (pinned threshold {threshold:.3}, pilot max {pilot_max:.3}); \
             single-path width(20)/width(5) {ratio:.3}, convolution oracle {oracle_ratio:.3} (need >= 1.7)"
        ),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, u64, fn() -> Result<Outcome>);
    let criteria: [Criterion; 7] = [
        ("criterion 1 sandwich", 120, sandwich),
        ("criterion 2 enumeration oracle", 10, enumeration),
        (
            "criterion 3 simulator vs recursion",
            60,
            simulator_agreement,
        ),
        ("criterion 6 q-bound margins", 30, q_margins),
        ("criterion 7 chain implication", 60, chain),
        ("criterion 8 pointwise bounds", 60, pointwise),
        ("criterion 9 tightness", 300, tightness),
    ];
    let mut lines = Vec::new();
    let mut report = |name: &str,
                      budget: Duration,
                      elapsed: Duration,
                      r: std::result::Result<Outcome, String>| {
        let (pass, detail) = match r {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = elapsed <= budget;
        let pass = pass && in_time;
        let tag = if pass { "PASS" } else { "FAIL" };
        let time = format!("{:.1}s of {}s", elapsed.as_secs_f64(), budget.as_secs());
        lines.push((
            name.to_string(),
            pass,
            format!("[{tag}] {name}: {detail} [{time}]"),
        ));
    };

    for (name, secs, f) in &criteria[..3] {
        let t = Instant::now();
        let r = f().map_err(|e| e.to_string());
        report(name, Duration::from_secs(*secs), t.elapsed(), r);
    }
    let t = Instant::now();
    let (four, five) = match lyapunov_suite() {
        Ok((a, b)) => (Ok(a), Ok(b)),
        Err(e) => (Err(e.to_string()), Err(e.to_string())),
    };
    let elapsed = t.elapsed();
    report(
        "criterion 4 lyapunov bounded",
        Duration::from_secs(120),
        elapsed,
        four,
    );
    report(
        "criterion 5 right-tail certificate",
        Duration::from_secs(120),
        elapsed,
        five,
    );
    for (name, secs, f) in &criteria[3..] {
        let t = Instant::now();
        let r = f().map_err(|e| e.to_string());
        report(name, Duration::from_secs(*secs), t.elapsed(), r);
    }

    lines.sort_by_key(|l| l.0.clone());
    for (_, _, line) in &lines {
        println!("{line}");
    }
    let failed = lines.iter().filter(|l| !l.1).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        lines.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
