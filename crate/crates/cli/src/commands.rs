//! One function per subcommand. Each returns the process exit code on the
//! success path so partial sweep failures can surface as code 1 after the
//! table is written.

use std::path::PathBuf;

use fowler_core::classifier::{classify_trajectory, DirectionResult};
use fowler_core::fowler::profile_from_necksize;
use fowler_core::integrator::{integrate_guarded, IntegratorConfig};
use fowler_core::jacobi::{eigenvalue_table, floquet_classify, Component, ModeClass};
use fowler_core::model::{limit_rhs_flat, scalar_hamiltonian, CylState, Dimension, Direction};
use fowler_core::perturbed::{asymptotic_fit, run_perturbed, validate_potential, PotentialSpec};
use fowler_core::pohozaev::{p_invariant, SignClass};
use rayon::prelude::*;
use serde_json::json;

use crate::output::{emit, fmt_f64, render_json, write_file, Csv};
use crate::scenario::Scenario;
use crate::{CliError, Format};

pub fn config(rel_tol: f64, abs_tol: f64) -> Result<IntegratorConfig, CliError> {
    IntegratorConfig::new(rel_tol, abs_tol).map_err(CliError::from_core)
}

fn dimension(n: u32) -> Result<Dimension, CliError> {
    Dimension::new(n).map_err(CliError::from_core)
}

fn require_csv(format: Format, command: &str) -> Result<(), CliError> {
    if format != Format::Csv {
        return Err(CliError::Validation {
            code: "FORMAT_UNSUPPORTED".into(),
            message: format!("{command} emits CSV only"),
        });
    }
    Ok(())
}

pub struct ProfileParams {
    pub n: u32,
    pub eps: f64,
    pub periods: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub fn profile(p: ProfileParams) -> Result<i32, CliError> {
    require_csv(p.format, "profile")?;
    if !(p.periods > 0.0) {
        return Err(CliError::Validation {
            code: "BAD_PARAM".into(),
            message: "periods must be positive".into(),
        });
    }
    let n = dimension(p.n)?;
    let cfg = config(p.rel_tol, p.abs_tol)?;
    let prof = profile_from_necksize(n, p.eps, &cfg).map_err(CliError::from_core)?;
    let t_max = p.periods.min(fowler_core::fowler::PROFILE_PERIODS) * prof.period;
    let mut csv = Csv::new("t,v,w,H_scalar");
    for (t, y) in prof.samples.times().iter().zip(prof.samples.states()) {
        if *t > t_max {
            break;
        }
        csv.push_row(&[
            fmt_f64(*t),
            fmt_f64(y[0]),
            fmt_f64(y[1]),
            fmt_f64(scalar_hamiltonian(n, y[0], y[1])),
        ]);
    }
    emit(&p.out, &csv.render())?;
    Ok(0)
}

pub struct FloquetParams {
    pub n: u32,
    pub eps: f64,
    pub jmax: u32,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub fn floquet(p: FloquetParams) -> Result<i32, CliError> {
    if p.format != Format::Json {
        return Err(CliError::Validation {
            code: "FORMAT_UNSUPPORTED".into(),
            message: "floquet emits JSON only".into(),
        });
    }
    let n = dimension(p.n)?;
    let cfg = config(p.rel_tol, p.abs_tol)?;
    let prof = profile_from_necksize(n, p.eps, &cfg).map_err(CliError::from_core)?;
    let mut entries = Vec::new();
    for mode in eigenvalue_table(n, p.jmax) {
        let (tan, nor) = floquet_classify(&prof, mode, &cfg).map_err(CliError::from_core)?;
        for rep in [tan, nor] {
            let m = &rep.monodromy;
            entries.push(json!({
                "j": rep.mode.j,
                "lambda": rep.mode.lambda_k,
                "component": match rep.component {
                    Component::Tangential => "tangential",
                    Component::Normal => "normal",
                },
                "trace": m.trace(),
                "det": m.det(),
                "multipliers": [
                    [m.multipliers[0].re, m.multipliers[0].im],
                    [m.multipliers[1].re, m.multipliers[1].im],
                ],
                "class": mode_class_name(rep.classification),
            }));
        }
    }
    emit(&p.out, &render_json(&serde_json::Value::Array(entries)))?;
    Ok(0)
}

fn mode_class_name(class: ModeClass) -> &'static str {
    match class {
        ModeClass::Periodic => "periodic",
        ModeClass::Linear => "linear",
        ModeClass::ExponentialDichotomy => "exponential_dichotomy",
    }
}

fn sign_class_name(class: SignClass) -> &'static str {
    match class {
        SignClass::Negative => "negative",
        SignClass::Zero => "zero",
        SignClass::Positive => "positive",
    }
}

pub struct PohozaevParams {
    pub n: u32,
    pub eps: f64,
    pub lambda: [f64; 2],
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub fn pohozaev(p: PohozaevParams) -> Result<i32, CliError> {
    let n = dimension(p.n)?;
    let cfg = config(p.rel_tol, p.abs_tol)?;
    let lam = Direction::new(p.lambda[0], p.lambda[1])
        .map_err(CliError::from_core)?
        .lambda();
    let ic = CylState::new(0.0, [p.eps * lam[0], p.eps * lam[1]], [0.0, 0.0]);
    let run = run_perturbed(n, &ic, &PotentialSpec::zero(), p.t_end, &cfg)
        .map_err(CliError::from_core)?;
    let report = p_invariant(&run).map_err(CliError::from_core)?;
    match p.format {
        Format::Csv => {
            let mut csv = Csv::new("r,P");
            for (t, pv) in &report.values {
                csv.push_row(&[fmt_f64((-t).exp()), fmt_f64(*pv)]);
            }
            emit(&p.out, &csv.render())?;
        }
        Format::Json => {
            let values: Vec<serde_json::Value> = report
                .values
                .iter()
                .map(|(t, pv)| json!({"r": (-t).exp(), "P": pv}))
                .collect();
            let doc = json!({
                "values": values,
                "limit_estimate": report.limit_estimate,
                "cauchy_spread": report.cauchy_spread,
                "sign_class": sign_class_name(report.sign_class),
            });
            emit(&p.out, &render_json(&doc))?;
        }
    }
    Ok(0)
}

pub struct ClassifyParams {
    pub n: u32,
    pub v: [f64; 2],
    pub w: [f64; 2],
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub fn classify(p: ClassifyParams) -> Result<i32, CliError> {
    if p.format != Format::Json {
        return Err(CliError::Validation {
            code: "FORMAT_UNSUPPORTED".into(),
            message: "classify emits JSON only".into(),
        });
    }
    let n = dimension(p.n)?;
    let cfg = config(p.rel_tol, p.abs_tol)?;
    let y0 = [p.v[0], p.v[1], p.w[0], p.w[1]];
    let (traj, truncated) = integrate_guarded(
        |_t, y, dy| limit_rhs_flat(n, y, dy),
        &y0,
        (0.0, p.t_end),
        &cfg,
        |_, y| y[0].abs().max(y[1].abs()) > fowler_core::perturbed::V_MAX,
    )
    .map_err(CliError::from_core)?;
    let report = classify_trajectory(&traj).map_err(CliError::from_core)?;
    let (direction, max_deviation) = match &report.direction {
        DirectionResult::Ray(d) => (
            json!([d.lambda()[0], d.lambda()[1]]),
            serde_json::Value::Null,
        ),
        DirectionResult::NotOnRay { max_deviation } => {
            (serde_json::Value::Null, json!(max_deviation))
        }
    };
    let doc = json!({
        "wronskian_mean": report.wronskian_mean,
        "wronskian_spread": report.wronskian_spread,
        "direction": direction,
        "max_deviation": max_deviation,
        "eta": report.eta,
        "bounds": [report.bounds.0, report.bounds.1],
        "truncated": truncated,
    });
    emit(&p.out, &render_json(&doc))?;
    Ok(0)
}

pub struct PerturbedParams {
    pub scenario: PathBuf,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub fit_out: Option<PathBuf>,
}

pub fn perturbed(p: PerturbedParams) -> Result<i32, CliError> {
    let scenario = Scenario::load(&p.scenario)?;
    if scenario.experiment != "perturbed" {
        return Err(CliError::Validation {
            code: "WRONG_EXPERIMENT".into(),
            message: format!(
                "scenario declares experiment {:?}, expected \"perturbed\"",
                scenario.experiment
            ),
        });
    }
    let n = scenario.dimension()?;
    let spec = scenario.potential_spec();
    let validation = validate_potential(n, &spec);
    if let Some(first) = validation.violations.first() {
        return Err(CliError::Validation {
            code: first.code().into(),
            message: validation
                .violations
                .iter()
                .map(|v| v.message().to_string())
                .collect::<Vec<_>>()
                .join("; "),
        });
    }
    let rel = p.rel_tol.or(scenario.rel_tol).unwrap_or(1e-10);
    let abs = p.abs_tol.or(scenario.abs_tol).unwrap_or(1e-12);
    let cfg = config(rel, abs)?;
    let ic = scenario.initial_state(n)?;
    let t_end = scenario.t_end.ok_or_else(|| CliError::Validation {
        code: "MISSING_T_END".into(),
        message: "perturbed scenario needs \"t_end\"".into(),
    })?;
    let run = run_perturbed(n, &ic, &spec, t_end, &cfg).map_err(CliError::from_core)?;

    let mut csv = Csv::new("t,v1,v2,w1,w2,Psi,w_avg");
    for ((t, y), ((_, psi), (_, w_avg))) in run
        .trajectory
        .times()
        .iter()
        .zip(run.trajectory.states())
        .zip(run.psi.iter().zip(&run.w_avg))
    {
        csv.push_row(&[
            fmt_f64(*t),
            fmt_f64(y[0]),
            fmt_f64(y[1]),
            fmt_f64(y[2]),
            fmt_f64(y[3]),
            fmt_f64(*psi),
            fmt_f64(*w_avg),
        ]);
    }
    emit(&p.out, &csv.render())?;

    if let Some(fit_params) = &scenario.fit {
        let fit = asymptotic_fit(&run, fit_params.window_count, fit_params.window_length)
            .map_err(CliError::from_core)?;
        let windows: Vec<serde_json::Value> = fit
            .window_errors
            .iter()
            .map(|(tau, err)| json!({"tau": tau, "err": err}))
            .collect();
        let doc = json!({
            "eps_star": fit.eps_star,
            "T_star": fit.t_star,
            "lambda_star": [fit.lambda_star.lambda()[0], fit.lambda_star.lambda()[1]],
            "alpha": fit.alpha,
            "exact_model": fit.exact_model,
            "burn_in_index": fit.burn_in_index,
            "decreasing_streak": fit.decreasing_streak,
            "windows": windows,
        });
        match &p.fit_out {
            Some(path) => write_file(path, &render_json(&doc))?,
            None => emit(&None, &render_json(&doc))?,
        }
    }
    Ok(0)
}

pub struct SweepParams {
    pub scenario: PathBuf,
    pub jobs: Option<usize>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub fn sweep(p: SweepParams) -> Result<i32, CliError> {
    require_csv(p.format, "sweep")?;
    let scenario = Scenario::load(&p.scenario)?;
    if scenario.experiment != "sweep" {
        return Err(CliError::Validation {
            code: "WRONG_EXPERIMENT".into(),
            message: format!(
                "scenario declares experiment {:?}, expected \"sweep\"",
                scenario.experiment
            ),
        });
    }
    let n = scenario.dimension()?;
    let kind = scenario.kind.clone().ok_or_else(|| CliError::Validation {
        code: "MISSING_KIND".into(),
        message: "sweep scenario needs \"kind\": \"pohozaev\" or \"period\"".into(),
    })?;
    if kind != "pohozaev" && kind != "period" {
        return Err(CliError::Validation {
            code: "BAD_KIND".into(),
            message: format!("unknown sweep kind {kind:?}"),
        });
    }
    let grid = scenario
        .grid
        .as_ref()
        .ok_or_else(|| CliError::Validation {
            code: "EMPTY_GRID".into(),
            message: "sweep scenario needs a \"grid\" block".into(),
        })?
        .points()?;
    let rel = p.rel_tol.or(scenario.rel_tol).unwrap_or(1e-10);
    let abs = p.abs_tol.or(scenario.abs_tol).unwrap_or(1e-12);
    let cfg = config(rel, abs)?;
    let t_end = scenario.t_end.unwrap_or(30.0);

    // each grid point is an isolated pure computation; rows are collected
    // in grid order no matter how many workers run
    let row_of = |eps: f64| -> (f64, Result<f64, fowler_core::Error>) {
        let value = match kind.as_str() {
            "pohozaev" => profile_from_necksize(n, eps, &cfg).and_then(|_| {
                let lam = 0.5f64.sqrt();
                let ic = CylState::new(0.0, [eps * lam, eps * lam], [0.0, 0.0]);
                let run = run_perturbed(n, &ic, &PotentialSpec::zero(), t_end, &cfg)?;
                Ok(p_invariant(&run)?.limit_estimate)
            }),
            _ => profile_from_necksize(n, eps, &cfg).map(|prof| prof.period),
        };
        (eps, value)
    };
    let rows: Vec<(f64, Result<f64, fowler_core::Error>)> = match p.jobs {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| CliError::Io {
                    message: format!("thread pool: {e}"),
                })?;
            pool.install(|| grid.par_iter().map(|&eps| row_of(eps)).collect())
        }
        None => grid.par_iter().map(|&eps| row_of(eps)).collect(),
    };

    let header = if kind == "pohozaev" {
        "eps,P_invariant,status"
    } else {
        "eps,period,status"
    };
    let mut csv = Csv::new(header);
    let mut failures = 0usize;
    for (eps, value) in rows {
        match value {
            Ok(v) => csv.push_row(&[fmt_f64(eps), fmt_f64(v), "ok".into()]),
            Err(e) => {
                failures += 1;
                csv.push_row(&[fmt_f64(eps), String::new(), CliError::core_code(&e).into()]);
            }
        }
    }
    emit(&p.out, &csv.render())?;
    Ok(if failures > 0 { 1 } else { 0 })
}
