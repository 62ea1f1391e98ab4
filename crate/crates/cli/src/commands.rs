//! One handler per subcommand. Handlers read inputs, call into the core and
//! hand back an [`Output`]; `execute` owns configuration and writing.

use hofa_core::analysis::{
    boundary_function, flagged_average, fourier_transform, gowers_norm, linear_correlation, linear_form_average, table_to_csv, Payload,
};
use hofa_core::factors::{decompose, DecomposeOptions};
use hofa_core::field::{enumeration_budget, set_enumeration_budget};
use hofa_core::linear_forms::{are_isomorphic, are_isomorphic_flagged, complexity_report, connected_components, cs_complexity, flagged_product, FlaggedProductJson};
use hofa_core::polynomials::{rank_of_set, rank_with, RankMethod};
use hofa_core::testers::{
    concentration_experiment, distributional_lift, exact_acceptance, extract_linear_form_profile, interior_experiment, run_tester,
    symmetrize_tester, t_star, uniformity_test, HypothesisGate, TesterRun,
};
use hofa_core::{Error, Estimate, FunctionTable, Mode};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::input::{table_document, Inputs};
use crate::report::{self, Output, Report, RunConfig, Tolerance};
use crate::*;

pub fn execute(global: &Global, command: Command) -> Result<(), CliError> {
    let config = configure(global)?;
    let out = dispatch(global, config, command)?;
    report::write(&report::render(&out, global.format), global.out.as_deref())
}

fn env_number<T: std::str::FromStr>(name: &str) -> Result<Option<T>, CliError> {
    match std::env::var(name) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::validation(format!("{name}={v:?} is not a valid number"))),
        Err(_) => Ok(None),
    }
}

fn configure(global: &Global) -> Result<RunConfig, CliError> {
    if let Some(budget) = global.budget.map(Some).unwrap_or(env_number::<u64>(ENV_BUDGET)?) {
        set_enumeration_budget(budget);
    }
    let threads = global.threads.map(Some).unwrap_or(env_number::<usize>(ENV_THREADS)?);
    if threads == Some(0) {
        return Err(CliError::validation("thread count must be at least 1"));
    }
    if global.mc == Some(0) {
        return Err(CliError::validation("--mc needs at least one sample"));
    }
    Ok(RunConfig {
        seed: global.seed,
        budget: enumeration_budget(),
        threads: start_pool(threads)?,
        mc_samples: global.mc,
        exact_only: global.exact,
        format: global.format,
    })
}

#[cfg(feature = "parallel")]
fn start_pool(threads: Option<usize>) -> Result<usize, CliError> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::validation(format!("cannot start {t} worker threads: {e}")))?;
    }
    Ok(rayon::current_num_threads())
}

#[cfg(not(feature = "parallel"))]
fn start_pool(_threads: Option<usize>) -> Result<usize, CliError> {
    Ok(1)
}

/// Runs `op` exactly; on a budget overrun falls back to `--mc` samples when given.
fn with_fallback<T>(global: &Global, op: impl Fn(Mode) -> hofa_core::Result<Estimate<T>>) -> Result<Estimate<T>, CliError> {
    match op(Mode::Exact) {
        Err(Error::BudgetExceeded { .. }) if global.mc.is_some() && !global.exact => Ok(op(Mode::mc(global.mc.unwrap(), global.seed))?),
        other => Ok(other?),
    }
}

fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

struct Ctx<'a> {
    global: &'a Global,
    config: RunConfig,
    inputs: Inputs,
}

impl Ctx<'_> {
    fn finish(self, command: &str, mode: Option<Mode>, tolerance: Tolerance, result: Value, csv_table: Option<String>) -> Output {
        Output { report: Report::new(command, self.config, self.inputs.hashes, mode, tolerance, result), csv_table }
    }
}

fn dispatch(global: &Global, config: RunConfig, command: Command) -> Result<Output, CliError> {
    let mut cx = Ctx { global, config, inputs: Inputs::default() };
    match command {
        Command::Gowers(a) => gowers(cx, a),
        Command::Average(a) => average(cx, a),
        Command::System(a) => system(cx, a),
        Command::Fourier(a) => fourier(cx, a),
        Command::Decompose(a) => run_decompose(cx, a),
        Command::Rank(a) => rank(cx, a),
        Command::Test(t) => match t {
            TestCommand::Uniformity(a) => test_uniformity(cx, a),
            TestCommand::Generic(a) => test_generic(cx, a),
            TestCommand::Symmetrize(a) => test_symmetrize(cx, a),
            TestCommand::Profile(a) => test_profile(cx, a),
        },
        Command::Interior(a) => interior(cx, a),
        Command::Distributional(a) => {
            let f = cx.inputs.table("table", &a.table)?;
            distributional(&mut cx, f, a).map(|(mode, tol, result)| cx.finish("distributional", Some(mode), tol, result, None))
        }
    }
}

fn gowers(mut cx: Ctx, a: GowersArgs) -> Result<Output, CliError> {
    let f = cx.inputs.table("table", &a.table)?;
    let est = with_fallback(cx.global, |m| gowers_norm(&f, a.k, m))?;
    let result = json!({ "p": f.p(), "n": f.n(), "k": a.k, "norm": est.value, "std_error": est.std_error });
    Ok(cx.finish("gowers", Some(est.mode), Tolerance::of(&est), result, None))
}

fn average(mut cx: Ctx, a: AverageArgs) -> Result<Output, CliError> {
    let spec = cx.inputs.system("system", &a.system)?;
    let sys = spec.system()?;
    if a.flagged || a.boundary {
        let Some(path) = &a.table else {
            return Err(CliError::validation("--flagged and --boundary read a single --table"));
        };
        let f = cx.inputs.table("table", path)?;
        let (what, g) = if a.flagged { ("flagged_average", flagged_average(&f, &spec.flagged()?)?) } else { ("boundary_function", boundary_function(&f, &sys)?) };
        let csv = table_to_csv(&g);
        let result = json!({ "kind": what, "table": to_value(&table_document(&g)) });
        return Ok(cx.finish("average", Some(Mode::Exact), Tolerance::exact(), result, Some(csv)));
    }
    let est = match (&a.table, a.per_form.is_empty(), &a.beta) {
        (Some(path), true, beta) => {
            let f = cx.inputs.table("table", path)?;
            match beta {
                Some(beta) => with_fallback(cx.global, |m| linear_form_average(&sys, Payload::Coefficients(&f, beta), m))?,
                None => with_fallback(cx.global, |m| linear_form_average(&sys, Payload::Plain(&f), m))?,
            }
        }
        (None, false, None) => {
            let tables = a.per_form.iter().enumerate().map(|(i, p)| cx.inputs.table(&format!("per_form/{i}"), p)).collect::<Result<Vec<FunctionTable>, _>>()?;
            with_fallback(cx.global, |m| linear_form_average(&sys, Payload::PerForm(&tables), m))?
        }
        (None, false, Some(_)) => return Err(CliError::validation("--beta applies to a single --table")),
        _ => return Err(CliError::validation("give --table or --per-form")),
    };
    let result = json!({ "value": complex(est.value), "abs": est.value.norm(), "std_error": est.std_error, "m": sys.m(), "k": sys.k() });
    Ok(cx.finish("average", Some(est.mode), Tolerance::of(&est), result, None))
}

fn system(mut cx: Ctx, a: SystemArgs) -> Result<Output, CliError> {
    let spec = cx.inputs.system("system", &a.system)?;
    let sys = spec.system()?;
    let everything = !(a.cs_complexity || a.true_complexity || a.components || a.isomorphic_to.is_some() || a.product_with.is_some());
    let mut result = json!({ "p": sys.p(), "k": sys.k(), "m": sys.m(), "homogeneous": sys.is_homogeneous() });
    if a.cs_complexity || everything {
        result["cs_complexity"] = to_value(&cs_complexity(&sys)?);
    }
    if a.true_complexity || everything {
        let r = complexity_report(&sys)?;
        result["true_complexity"] = to_value(&r.true_complexity);
        result["tensor_dependency"] = to_value(&r.tensor_dependency);
        result["hypothesis_note"] = to_value(&r.hypothesis_note);
    }
    if a.components || everything {
        result["components"] = to_value(&connected_components(&sys)?);
    }
    if let Some(path) = &a.isomorphic_to {
        let other = cx.inputs.system("isomorphic_to", path)?;
        let outcome = match (&spec.flag, &other.flag) {
            (Some(fa), Some(fb)) => are_isomorphic_flagged(&sys, fa, &other.system()?, fb)?,
            _ => are_isomorphic(&sys, &other.system()?)?,
        };
        result["isomorphism"] = to_value(&outcome);
    }
    if let Some(path) = &a.product_with {
        let other = cx.inputs.flagged_system("product_with", path)?;
        result["flagged_product"] = to_value(&FlaggedProductJson::from(&flagged_product(&spec.flagged()?, &other)?));
    }
    Ok(cx.finish("system", None, Tolerance::exact(), result, None))
}

fn fourier(mut cx: Ctx, a: TableArg) -> Result<Output, CliError> {
    let f = cx.inputs.table("table", &a.table)?;
    let spec = fourier_transform(&f);
    let (max_abs, argmax) = spec.max_abs();
    let result = json!({
        "p": f.p(),
        "n": f.n(),
        "energy": spec.energy(),
        "fourth_moment": spec.fourth_moment(),
        "max_abs": max_abs,
        "argmax": f.space().vector(argmax).coords,
        "linear_correlation": linear_correlation(&f),
        "coefficients": spec.coeffs().iter().map(|&z| complex(z)).collect::<Vec<_>>(),
    });
    let csv = spec.to_csv();
    Ok(cx.finish("fourier", Some(Mode::Exact), Tolerance::exact(), result, Some(csv)))
}

fn run_decompose(mut cx: Ctx, a: DecomposeArgs) -> Result<Output, CliError> {
    let f = cx.inputs.table("table", &a.table)?;
    let dec = decompose(&f, a.degree, a.delta, None, DecomposeOptions { homogeneous: a.homogeneous, max_rounds: a.max_rounds })?;
    let result = json!({
        "degree": a.degree,
        "delta": a.delta,
        "report": to_value(&dec.report),
        "factor": to_value(&dec.factor.to_json()),
        "atoms": dec.factor.atom_count(),
        "structured": to_value(&table_document(&dec.structured)),
    });
    Ok(cx.finish("decompose", Some(Mode::Exact), Tolerance::exact(), result, None))
}

fn rank(mut cx: Ctx, a: RankArgs) -> Result<Output, CliError> {
    let polys = a.polys.iter().enumerate().map(|(i, p)| cx.inputs.polynomial(&format!("poly/{i}"), p)).collect::<Result<Vec<_>, _>>()?;
    let method = match a.method {
        RankMethodArg::Auto => RankMethod::Auto,
        RankMethodArg::Exhaustive => RankMethod::Exhaustive,
        RankMethodArg::Quadratic => RankMethod::QuadraticClosedForm,
    };
    let report = match polys.as_slice() {
        [one] => rank_with(one, a.r_max, method)?,
        many if matches!(a.method, RankMethodArg::Auto) => rank_of_set(many, a.r_max)?,
        _ => return Err(CliError::validation("--method applies to a single --poly")),
    };
    let result = json!({ "r_max": a.r_max, "rank": report.value(), "report": to_value(&report) });
    Ok(cx.finish("rank", Some(Mode::Exact), Tolerance::exact(), result, None))
}

fn test_uniformity(mut cx: Ctx, a: UniformityArgs) -> Result<Output, CliError> {
    let f = cx.inputs.table("table", &a.table)?;
    let seed = cx.config.seed;
    let r = uniformity_test(&f, a.degree, a.samples, seed, a.threshold)?;
    let tol = Tolerance::of(&r.estimate);
    Ok(cx.finish("test uniformity", Some(r.estimate.mode), tol, to_value(&r), None))
}

/// Exact acceptance when `--exact` is given, else `trials` sampled trials.
fn acceptance(cx: &Ctx, spec: &hofa_core::testers::TesterSpec, f: &FunctionTable, trials: u64, seed: u64) -> Result<TesterRun, CliError> {
    if cx.global.exact {
        Ok(exact_acceptance(spec, f)?)
    } else {
        Ok(run_tester(spec, f, trials, seed)?)
    }
}

fn load_tester(cx: &mut Ctx, tester: &std::path::Path, symmetrize: u32) -> Result<hofa_core::testers::TesterSpec, CliError> {
    let mut spec = cx.inputs.tester("tester", tester)?;
    for _ in 0..symmetrize {
        spec = symmetrize_tester(&spec);
    }
    Ok(spec)
}

fn test_generic(mut cx: Ctx, a: GenericArgs) -> Result<Output, CliError> {
    let spec = load_tester(&mut cx, &a.tester, a.symmetrize)?;
    let f = cx.inputs.table("table", &a.table)?;
    let run = acceptance(&cx, &spec, &f, a.trials, cx.config.seed)?;
    let result = json!({
        "acceptance": run.acceptance.value,
        "std_error": run.acceptance.std_error,
        "verdict": to_value(&run.verdict),
        "theta_minus": spec.theta_minus,
        "theta_plus": spec.theta_plus,
        "symmetrizations": spec.symmetrizations(),
    });
    let tol = Tolerance::of(&run.acceptance);
    Ok(cx.finish("test generic", Some(run.acceptance.mode), tol, result, None))
}

fn test_symmetrize(mut cx: Ctx, a: GenericArgs) -> Result<Output, CliError> {
    let base = load_tester(&mut cx, &a.tester, a.symmetrize)?;
    let sym = symmetrize_tester(&base);
    let f = cx.inputs.table("table", &a.table)?;
    let seed = cx.config.seed;
    let r0 = acceptance(&cx, &base, &f, a.trials, seed)?;
    let r1 = acceptance(&cx, &sym, &f, a.trials, seed)?;
    let sigma = r0.acceptance.std_error.unwrap_or(0.0).hypot(r1.acceptance.std_error.unwrap_or(0.0));
    let diff = r1.acceptance.value - r0.acceptance.value;
    let result = json!({
        "base": { "acceptance": r0.acceptance.value, "std_error": r0.acceptance.std_error, "verdict": to_value(&r0.verdict) },
        "symmetrized": { "acceptance": r1.acceptance.value, "std_error": r1.acceptance.std_error, "verdict": to_value(&r1.verdict) },
        "difference": diff,
        "sigma": sigma,
        "within_3_sigma": diff.abs() <= 3.0 * sigma,
    });
    let tol = Tolerance::of(&r1.acceptance);
    Ok(cx.finish("test symmetrize", Some(r1.acceptance.mode), tol, result, None))
}

fn test_profile(mut cx: Ctx, a: ProfileArgs) -> Result<Output, CliError> {
    let spec = load_tester(&mut cx, &a.tester, 0)?;
    let profile = extract_linear_form_profile(&spec)?;
    let mut result = json!({ "profile": to_value(&profile) });
    if let Some(path) = &a.table {
        let f = cx.inputs.table("table", path)?;
        let predicted = profile.evaluate(&f)?;
        let exact = exact_acceptance(&symmetrize_tester(&spec), &f)?.acceptance.value;
        result["evaluation"] = json!({
            "predicted": complex(predicted),
            "exact_symmetrized_acceptance": exact,
            "difference": (predicted - exact).norm(),
            "within_correction": (predicted - exact).norm() <= profile.correction + report::ROUNDOFF,
        });
    }
    Ok(cx.finish("test profile", Some(Mode::Exact), Tolerance::exact(), result, None))
}

fn interior(mut cx: Ctx, a: InteriorArgs) -> Result<Output, CliError> {
    let systems = a.systems.iter().enumerate().map(|(i, p)| cx.inputs.linear_system(&format!("system/{i}"), p)).collect::<Result<Vec<_>, _>>()?;
    let p = systems[0].p();
    if systems.iter().any(|s| s.p() != p) {
        return Err(CliError::validation("all systems must share the field"));
    }
    let gate = match a.gate {
        GateArg::Enforce => HypothesisGate::Enforce,
        GateArg::Report => HypothesisGate::Report,
    };
    let r = interior_experiment(&systems, p, a.n, a.trials, cx.config.seed, gate)?;
    Ok(cx.finish("interior", Some(Mode::Exact), Tolerance::Seeded, to_value(&r), None))
}

fn distributional(cx: &mut Ctx, f: FunctionTable, a: DistributionalArgs) -> Result<(Mode, Tolerance, Value), CliError> {
    let sys = cx.inputs.linear_system("system", &a.system)?;
    let gamma = distributional_lift(&f)?;
    let t = with_fallback(cx.global, |m| t_star(&gamma, &sys, &a.beta, m))?;
    let conc = concentration_experiment(&gamma, &sys, &a.beta, a.seeds, cx.config.seed, a.threshold)?;
    let result = json!({
        "t_star": complex(t.value),
        "std_error": t.std_error,
        "concentration": to_value(&conc),
    });
    Ok((t.mode, Tolerance::of(&t), result))
}
