use impulse_ctmdp::bellman::{
    extract_policy, solve_with, SolveReport, ValueFunction, DEFAULT_MAX_ITER, DEFAULT_TOL_SET,
};
use impulse_ctmdp::epidemic::{
    analytic_value, build_epidemic_model, carrier_continuation, read_params, solve_carrier_equation, state_label,
    sweep, CarrierValue, EpidemicParams, HdPolicy, HdViolation,
};
use impulse_ctmdp::model::{read_model, validate_model};
use impulse_ctmdp::simulator::{replication_rng, CostEstimate, DynkinResult, EpochRow, Horizon, Simulator};
use impulse_ctmdp::{Ctmdp, Error as CoreError, Mode, StateId, StationaryPolicy};
use serde::Serialize;

use crate::artifacts::Artifacts;
use crate::config::RunConfig;
use crate::error::CliError;

/// A finished run: the metadata record (also printed to stdout) plus the
/// files to write.
pub struct Output {
    pub metadata: Vec<u8>,
    pub artifacts: Artifacts,
}

#[derive(Serialize)]
struct Record<'a, T: Serialize> {
    status: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn finish<T: Serialize>(cfg: &RunConfig, name: &str, body: T, mut artifacts: Artifacts) -> Result<Output, CliError> {
    let record = Record {
        status: "complete",
        command: cfg.command,
        config: cfg,
        body,
    };
    let mut metadata = serde_json::to_vec_pretty(&record).map_err(|e| CliError::Serialize(e.to_string()))?;
    metadata.push(b'\n');
    artifacts.json(name, &record)?;
    Ok(Output { metadata, artifacts })
}

fn hd_policy(cfg: &RunConfig) -> HdPolicy {
    if cfg.strict_hd {
        HdPolicy::Enforce
    } else {
        HdPolicy::Audit
    }
}

fn load_params(cfg: &RunConfig) -> Result<EpidemicParams, CliError> {
    let path = cfg.params.as_ref().expect("checked by RunConfig");
    let mut params = read_params(path)?;
    if let Some(c_max) = cfg.c_max {
        params.c_max = c_max;
    }
    params.validate()?;
    if cfg.strict_hd {
        if let Some(v) = params.hd_violation() {
            return Err(CoreError::NotMonotone {
                c: v.c,
                coefficient: v.coefficient,
            }
            .into());
        }
    }
    Ok(params)
}

struct Loaded {
    model: Ctmdp,
    initial: Option<StateId>,
    hd_violation: Option<HdViolation>,
}

fn load_model(cfg: &RunConfig) -> Result<Loaded, CliError> {
    if let Some(path) = &cfg.model {
        let raw = read_model(path)?;
        return Ok(Loaded {
            model: Ctmdp::new(raw)?,
            initial: None,
            hd_violation: None,
        });
    }
    let params = load_params(cfg)?;
    let epidemic = build_epidemic_model(&params, hd_policy(cfg))?;
    Ok(Loaded {
        initial: Some(epidemic.initial_state()),
        hd_violation: epidemic.hd_violation,
        model: epidemic.ctmdp,
    })
}

fn initial_state(cfg: &RunConfig, loaded: &Loaded) -> Result<StateId, CliError> {
    match &cfg.x0 {
        Some(label) => loaded
            .model
            .states()
            .id(label)
            .ok_or_else(|| CliError::Usage(format!("--x0: unknown state `{label}`"))),
        None => loaded
            .initial
            .ok_or_else(|| CliError::Usage(format!("{} on a model file needs --x0", cfg.command))),
    }
}

fn solve_model(cfg: &RunConfig, model: &Ctmdp) -> Result<(SolveReport, StationaryPolicy), CliError> {
    let report = solve_with(model, cfg.tol, DEFAULT_MAX_ITER)?;
    let policy = extract_policy(model, &report.value, DEFAULT_TOL_SET)?;
    Ok((report, policy))
}

#[derive(Serialize)]
struct ValidateBody {
    valid: bool,
    n_states: usize,
    hd_violation: Option<HdViolation>,
}

pub fn validate(cfg: &RunConfig) -> Result<Output, CliError> {
    let body = if let Some(path) = &cfg.model {
        let raw = read_model(path)?;
        let report = validate_model(&raw);
        if !report.is_valid() {
            return Err(CoreError::Validation(report).into());
        }
        ValidateBody {
            valid: true,
            n_states: raw.states.len(),
            hd_violation: None,
        }
    } else {
        let loaded = load_model(cfg)?;
        ValidateBody {
            valid: true,
            n_states: loaded.model.n_states(),
            hd_violation: loaded.hd_violation,
        }
    };
    finish(cfg, "validation.json", body, Artifacts::default())
}

#[derive(Serialize)]
struct ValueRow<'a> {
    state: &'a str,
    value: f64,
    mode: Mode,
    gradual_action: &'a str,
    impulsive_action: &'a str,
}

fn value_rows<'a>(model: &'a Ctmdp, v: &ValueFunction, policy: &StationaryPolicy) -> Vec<ValueRow<'a>> {
    (0..model.n_states())
        .map(|x| ValueRow {
            state: model.states().label(x),
            value: v[x],
            mode: policy.mode[x],
            gradual_action: &model.gradual(x)[policy.phi_g[x]].label,
            impulsive_action: policy.phi_i[x].map_or("", |a| &model.impulsive(x)[a].label),
        })
        .collect()
}

#[derive(Serialize)]
struct SolveBody {
    n_states: usize,
    n_impulsive: usize,
    k: f64,
    eta: f64,
    iterations_above: usize,
    iterations_below: usize,
    residual: f64,
    gap: f64,
    hd_violation: Option<HdViolation>,
}

pub fn solve(cfg: &RunConfig) -> Result<Output, CliError> {
    let loaded = load_model(cfg)?;
    let m = &loaded.model;
    let (report, policy) = solve_model(cfg, m)?;
    let mut artifacts = Artifacts::default();
    artifacts.csv("value.csv", value_rows(m, &report.value, &policy))?;
    let body = SolveBody {
        n_states: m.n_states(),
        n_impulsive: policy.impulsive_states().count(),
        k: m.k(),
        eta: m.eta(),
        iterations_above: report.iterations_above,
        iterations_below: report.iterations_below,
        residual: report.residual,
        gap: report.gap,
        hd_violation: loaded.hd_violation,
    };
    finish(cfg, "solve.json", body, artifacts)
}

#[derive(Serialize)]
struct TrajectoryRow<'a> {
    replication: usize,
    epoch: usize,
    time: f64,
    pre_state: &'a str,
    target: &'a str,
    chain_length: usize,
    chain_cost: f64,
    post_state: &'a str,
}

impl<'a> TrajectoryRow<'a> {
    fn new(replication: usize, e: EpochRow<'a>) -> Self {
        Self {
            replication,
            epoch: e.epoch,
            time: e.time,
            pre_state: e.pre_state,
            target: e.target,
            chain_length: e.chain_length,
            chain_cost: e.chain_cost,
            post_state: e.post_state,
        }
    }
}

#[derive(Serialize)]
struct SimulateBody<'a> {
    x0: &'a str,
    value_at_x0: f64,
    deltas_total: f64,
    estimate: CostEstimate,
}

pub fn simulate(cfg: &RunConfig) -> Result<Output, CliError> {
    let loaded = load_model(cfg)?;
    let m = &loaded.model;
    let x0 = initial_state(cfg, &loaded)?;
    let (report, policy) = solve_model(cfg, m)?;
    let sim = Simulator::new(m, &policy, cfg.tail_tol)?;
    let estimate = sim.estimate_cost(x0, cfg.reps, cfg.seed, &cfg.deltas)?;

    let mut rows = Vec::new();
    for r in 0..cfg.trajectories.min(cfg.reps) {
        let tr = sim.run(x0, &mut replication_rng(cfg.seed, r as u64), Horizon::Tail, &cfg.deltas)?;
        rows.extend(tr.rows(m).into_iter().map(|e| TrajectoryRow::new(r, e)));
    }
    let mut artifacts = Artifacts::default();
    artifacts.csv("trajectories.csv", rows)?;
    let body = SimulateBody {
        x0: m.states().label(x0),
        value_at_x0: report.value[x0],
        deltas_total: cfg.deltas.iter().sum(),
        estimate,
    };
    finish(cfg, "estimate.json", body, artifacts)
}

#[derive(Serialize)]
struct CarrierRow {
    c: usize,
    v: f64,
    continuation: f64,
    decision: &'static str,
    /// `c ≤ C_max/2`, away from the truncation boundary.
    safe_zone: bool,
}

#[derive(Serialize)]
struct GenericCheck {
    n_states: usize,
    residual: f64,
    gap: f64,
    /// Largest `|V - (s v(c) + i/(η+κ_r))|` over states with `c ≤ C_max/2`.
    max_separability_error: f64,
    /// Whether the solved partition is `{s ≥ 1, c ≥ c*}` on `c ≤ C_max/2`.
    partition_matches_threshold: bool,
}

#[derive(Serialize)]
struct EpidemicBody {
    c_star: Option<usize>,
    c_star_infinite: bool,
    lambda_star: f64,
    contraction_modulus: f64,
    iterations: usize,
    residual: f64,
    x0: String,
    value_at_x0: f64,
    hd_violation: Option<HdViolation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generic: Option<GenericCheck>,
}

fn generic_check(cfg: &RunConfig, params: &EpidemicParams, cv: &CarrierValue) -> Result<GenericCheck, CliError> {
    let epidemic = build_epidemic_model(params, hd_policy(cfg))?;
    let (report, policy) = solve_model(cfg, &epidemic.ctmdp)?;
    let mut max_err = 0.0f64;
    let mut matches = true;
    for x in 0..epidemic.n_states() {
        let (s, c, i) = epidemic.coords(x);
        if c > params.c_max / 2 {
            continue;
        }
        max_err = max_err.max((report.value[x] - analytic_value(params, cv, s, c, i)?).abs());
        let expected = s >= 1 && cv.c_star.is_some_and(|cs| c >= cs);
        matches &= policy.is_impulsive(x) == expected;
    }
    Ok(GenericCheck {
        n_states: epidemic.n_states(),
        residual: report.residual,
        gap: report.gap,
        max_separability_error: max_err,
        partition_matches_threshold: matches,
    })
}

pub fn epidemic_solve(cfg: &RunConfig) -> Result<Output, CliError> {
    let params = load_params(cfg)?;
    let cv = solve_carrier_equation(&params, cfg.tol)?;
    let rows: Vec<CarrierRow> = (0..=params.c_max)
        .map(|c| {
            let continuation = carrier_continuation(&params, &cv.v, c);
            CarrierRow {
                c,
                v: cv.v[c],
                continuation,
                decision: if continuation > params.lambda {
                    "immunize"
                } else {
                    "wait"
                },
                safe_zone: c <= params.c_max / 2,
            }
        })
        .collect();
    let generic = if cfg.generic {
        Some(generic_check(cfg, &params, &cv)?)
    } else {
        None
    };
    let mut artifacts = Artifacts::default();
    artifacts.csv("carrier.csv", rows)?;
    let body = EpidemicBody {
        c_star: cv.c_star,
        c_star_infinite: cv.c_star.is_none(),
        lambda_star: cv.lambda_star,
        contraction_modulus: cv.d,
        iterations: cv.iterations,
        residual: cv.residual,
        x0: state_label(params.s, params.c0, params.i),
        value_at_x0: analytic_value(&params, &cv, params.s, params.c0, params.i)?,
        hd_violation: params.hd_violation(),
        generic,
    };
    finish(cfg, "epidemic.json", body, artifacts)
}

#[derive(Serialize)]
struct SweepCsvRow {
    lambda: f64,
    /// `inf` for an infinite threshold.
    c_star: String,
    lambda_star: f64,
    residual: f64,
}

#[derive(Serialize)]
struct SweepBody {
    lambda_star: f64,
    n_lambdas: usize,
    finite_thresholds: usize,
}

pub fn epidemic_sweep(cfg: &RunConfig) -> Result<Output, CliError> {
    let params = load_params(cfg)?;
    let rows = sweep(&params, &cfg.lambdas, cfg.tol)?;
    let body = SweepBody {
        lambda_star: impulse_ctmdp::epidemic::lambda_star(&params),
        n_lambdas: rows.len(),
        finite_thresholds: rows.iter().filter(|r| r.c_star.is_some()).count(),
    };
    let mut artifacts = Artifacts::default();
    artifacts.csv(
        "sweep.csv",
        rows.into_iter().map(|r| SweepCsvRow {
            lambda: r.lambda,
            c_star: r.c_star.map_or_else(|| "inf".to_owned(), |c| c.to_string()),
            lambda_star: r.lambda_star,
            residual: r.residual,
        }),
    )?;
    finish(cfg, "sweep.json", body, artifacts)
}

#[derive(Serialize)]
struct DynkinBody<'a> {
    x0: &'a str,
    result: DynkinResult,
    consistent_at_3_se: bool,
}

pub fn dynkin_check(cfg: &RunConfig) -> Result<Output, CliError> {
    let loaded = load_model(cfg)?;
    let m = &loaded.model;
    let x0 = initial_state(cfg, &loaded)?;
    let (report, policy) = solve_model(cfg, m)?;
    let sim = Simulator::new(m, &policy, cfg.tail_tol)?;
    let result = sim.dynkin_check(&report.value, x0, cfg.t, cfg.reps, cfg.seed)?;
    let body = DynkinBody {
        x0: m.states().label(x0),
        consistent_at_3_se: result.consistent(3.0),
        result,
    };
    finish(cfg, "dynkin.json", body, Artifacts::default())
}
