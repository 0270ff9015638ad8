use gbrw_core::laws::{
    check_branching_assumptions, check_identical_marginals, check_joint_tail,
    check_marginal_assumptions, fit_joint_tail, BranchingVariant, JointTailVariant, Model,
};
use gbrw_core::lyapunov::{
    choose_params, default_delta1_candidates, right_tail_check, verify_bounded, LyapunovParams,
    ParamInputs, PositivePart,
};
use gbrw_core::recurse::{check_sandwich, pointwise_bounds_check, run, Modes, StepOptions};
use gbrw_core::simulate::{empirical_cdf, tightness_report};
use gbrw_core::{AssumptionReport, Report};
use serde_json::{json, Value};

use crate::output::{emit, emit_json, envelope, CliResult};
use crate::{
    AssumptionsArgs, BranchingArg, LyapunovArgs, MarginalArgs, ParamsArgs, PartArg, PwboundsArgs,
    RecurseArgs, ReportArgs, SimulateArgs, TailVariantArg,
};

impl From<PartArg> for PositivePart {
    fn from(p: PartArg) -> Self {
        match p {
            PartArg::Argument => PositivePart::Argument,
            PartArg::Output => PositivePart::Output,
        }
    }
}

impl From<TailVariantArg> for JointTailVariant {
    fn from(v: TailVariantArg) -> Self {
        match v {
            TailVariantArg::Gt => JointTailVariant::Gt,
            TailVariantArg::GtPrime => JointTailVariant::GtPrime,
        }
    }
}

impl From<BranchingArg> for BranchingVariant {
    fn from(v: BranchingArg) -> Self {
        match v {
            BranchingArg::Bounded => BranchingVariant::Bounded,
            BranchingArg::IdenticalMarginal => BranchingVariant::IdenticalMarginal,
        }
    }
}

pub fn simulate(args: &SimulateArgs) -> CliResult<bool> {
    let model = Model::load(&args.common.config)?;
    let table = tightness_report(
        &model.branching,
        &model.displacement,
        &args.horizons,
        args.reps,
        args.delta,
        args.seed,
        args.node_cap,
    )?;
    emit(args.common.out.as_deref(), |w| table.write_csv(w))?;
    if let Some(path) = &args.report {
        let body = json!({ "table": table });
        emit_json(
            Some(path),
            &envelope("simulate", Some(&model), args, true, body),
        )?;
    }
    Ok(true)
}

pub fn recurse(args: &RecurseArgs) -> CliResult<bool> {
    let model = Model::load(&args.common.config)?;
    let modes: Modes = args.modes.parse()?;
    let opts = StepOptions {
        mc_budget: args.mc_budget,
        mc_seed: args.mc_seed,
    };
    let data = run(&model.branching, &model.displacement, args.n, modes, &opts)?;
    emit(args.common.out.as_deref(), |w| data.write_csv(w))?;
    let sandwich = if modes.exact && (modes.lower || modes.upper) {
        Some(check_sandwich(&data)?)
    } else {
        None
    };
    let pass = sandwich.as_ref().map_or(true, Report::passed);
    if let Some(path) = &args.report {
        let body = json!({
            "sandwich": sandwich,
            "approximate": data.approximate(),
            "max_mc_stderr": data.max_mc_stderr(),
            "max_monotone_correction": data.max_monotone_correction(),
        });
        emit_json(
            Some(path),
            &envelope("recurse", Some(&model), args, pass, body),
        )?;
    }
    Ok(pass)
}

fn marginal_report(
    model: &Model,
    m: &MarginalArgs,
    horizon: Option<usize>,
) -> CliResult<AssumptionReport> {
    Ok(check_marginal_assumptions(
        &model.branching,
        &model.displacement,
        m.eps0,
        m.a,
        m.big_m0,
        horizon,
    )?)
}

/// Parameter bundle for a model, or the reason there is none.
fn model_params(
    model: &Model,
    m: &MarginalArgs,
    m0: Option<f64>,
) -> Result<LyapunovParams, String> {
    let k0 = model
        .branching
        .k_max()
        .ok_or("offspring law has unbounded support; k0 is undefined")?;
    let m0 = m0.unwrap_or_else(|| model.branching.declared_m0());
    let inputs = ParamInputs::new(k0, m0, m.eps0, m.a, m.big_m0, model.grid.h())
        .with_mean(model.branching.inf_mean());
    choose_params(&inputs).map_err(|e| e.to_string())
}

struct LyapunovSection {
    pass: bool,
    body: Value,
}

fn lyapunov_section(
    model: &Model,
    n: usize,
    m: &MarginalArgs,
    m0: Option<f64>,
    part: PositivePart,
) -> CliResult<LyapunovSection> {
    let mut assumptions = check_branching_assumptions(&model.branching, BranchingVariant::Bounded);
    assumptions.extend(marginal_report(model, m, Some(n))?);
    let params = model_params(model, m, m0);
    let (bounded, tail) = match &params {
        Ok(p) => {
            let data = run(
                &model.branching,
                &model.displacement,
                n,
                Modes::EXACT,
                &StepOptions::default(),
            )?;
            (
                Some(verify_bounded(&data, p, part)?),
                Some(right_tail_check(&data, p, &default_delta1_candidates())?),
            )
        }
        Err(_) => (None, None),
    };
    let pass = assumptions.passed()
        && bounded.as_ref().is_some_and(Report::passed)
        && tail.as_ref().is_some_and(Report::passed);
    let unmet: Vec<&str> = assumptions.failures().map(|c| c.check.as_str()).collect();
    let body = json!({
        "assumptions": assumptions,
        "unmet_assumptions": unmet,
        "params": params.as_ref().ok(),
        "params_error": params.as_ref().err(),
        "bounded": bounded,
        "right_tail": tail,
    });
    Ok(LyapunovSection { pass, body })
}

pub fn verify_lyapunov(args: &LyapunovArgs) -> CliResult<bool> {
    let model = Model::load(&args.common.config)?;
    let s = lyapunov_section(
        &model,
        args.n,
        &args.marginal,
        args.m0,
        args.positive_part.into(),
    )?;
    emit_json(
        args.common.out.as_deref(),
        &envelope("verify lyapunov", Some(&model), args, s.pass, s.body),
    )?;
    Ok(s.pass)
}

fn pwbounds_section(
    model: &Model,
    n: usize,
    eta1: f64,
    variant: JointTailVariant,
) -> CliResult<(bool, Value)> {
    let fit = fit_joint_tail(
        &model.branching,
        &model.displacement,
        eta1,
        variant,
        Some(n),
    )?;
    let checks = match fit.b {
        Some(b) => {
            let data = run(
                &model.branching,
                &model.displacement,
                n,
                Modes::EXACT,
                &StepOptions::default(),
            )?;
            Some(pointwise_bounds_check(&data, &model.branching, b, eta1)?)
        }
        None => None,
    };
    let pass = checks.as_ref().is_some_and(Report::passed);
    Ok((pass, json!({ "joint_tail_fit": fit, "pwbounds": checks })))
}

pub fn verify_pwbounds(args: &PwboundsArgs) -> CliResult<bool> {
    let model = Model::load(&args.common.config)?;
    let (pass, body) = pwbounds_section(&model, args.n, args.eta1, args.variant.into())?;
    emit_json(
        args.common.out.as_deref(),
        &envelope("verify pwbounds", Some(&model), args, pass, body),
    )?;
    Ok(pass)
}

pub fn verify_assumptions(args: &AssumptionsArgs) -> CliResult<bool> {
    let model = Model::load(&args.common.config)?;
    let variant: BranchingVariant = args.branching.into();
    let mut report = check_branching_assumptions(&model.branching, variant);
    if variant == BranchingVariant::IdenticalMarginal {
        report.push(check_identical_marginals(&model.displacement));
    }
    report.extend(marginal_report(&model, &args.marginal, args.horizon)?);
    report.extend(check_joint_tail(
        &model.branching,
        &model.displacement,
        args.eta1,
        args.variant.into(),
        args.horizon,
    )?);
    let pass = report.passed();
    let body = json!({ "assumptions": report });
    emit_json(
        args.common.out.as_deref(),
        &envelope("verify assumptions", Some(&model), args, pass, body),
    )?;
    Ok(pass)
}

pub fn params(args: &ParamsArgs) -> CliResult<bool> {
    let m = &args.marginal;
    let mut inputs = ParamInputs::new(args.k0, args.m0, m.eps0, m.a, m.big_m0, args.h);
    if let Some(c1) = args.c1 {
        inputs = inputs.with_c1(c1);
    }
    if let Some(mean) = args.mean {
        inputs = inputs.with_mean(mean);
    }
    let bundle = choose_params(&inputs)?;
    emit_json(
        None,
        &serde_json::to_value(bundle).map_err(gbrw_core::Error::from)?,
    )?;
    Ok(true)
}

pub fn report(args: &ReportArgs) -> CliResult<bool> {
    let model = Model::load(&args.common.config)?;
    let (b, d) = (&model.branching, &model.displacement);

    let data = run(b, d, args.n, Modes::ALL, &StepOptions::default())?;
    let sandwich = check_sandwich(&data)?;

    let mut assumptions = check_branching_assumptions(b, BranchingVariant::Bounded);
    assumptions.extend(marginal_report(&model, &args.marginal, Some(args.n))?);
    assumptions.extend(check_joint_tail(
        b,
        d,
        args.eta1,
        JointTailVariant::Gt,
        Some(args.n),
    )?);

    let lyapunov = lyapunov_section(&model, args.n, &args.marginal, None, PositivePart::Argument)?;
    let (pw_pass, pwbounds) = pwbounds_section(&model, args.n, args.eta1, JointTailVariant::Gt)?;

    // simulator against the exact curve, judged by the 99% DKW band
    let ecdf = empirical_cdf(b, d, 0, args.n, args.reps, args.seed, args.node_cap)?;
    let (ks, ks_x) = ecdf.ks_distance(data.exact(0)?);
    let band = ((2.0f64 / 0.01).ln() / (2.0 * args.reps as f64)).sqrt();
    let agreement_pass = ks <= band;

    let table = tightness_report(
        b,
        d,
        &args.horizons,
        args.reps,
        args.delta,
        args.seed,
        args.node_cap,
    )?;

    let pass =
        sandwich.passed() && assumptions.passed() && lyapunov.pass && pw_pass && agreement_pass;
    let body = json!({
        "sandwich": { "pass": sandwich.passed(), "report": sandwich },
        "assumptions": { "pass": assumptions.passed(), "report": assumptions },
        "lyapunov": { "pass": lyapunov.pass, "report": lyapunov.body },
        "pwbounds": { "pass": pw_pass, "report": pwbounds },
        "simulation": {
            "pass": agreement_pass,
            "ks": ks, "ks_x": ks_x, "dkw_band_99": band,
            "tightness": table,
            "max_width_ratio": table.max_width() / table.rows.first().map_or(f64::NAN, |r| r.width),
        },
    });
    emit_json(
        args.common.out.as_deref(),
        &envelope("report", Some(&model), args, pass, body),
    )?;
    Ok(pass)
}
