//! Workloads shared by the benchmarks and the acceptance suite.

use impulse_ctmdp::bellman::{extract_policy, solve, ValueFunction, DEFAULT_TOL_SET};
use impulse_ctmdp::epidemic::{build_epidemic_model, reference_params, EpidemicModel, HdPolicy};
use impulse_ctmdp::StationaryPolicy;

/// The reference epidemic instance at immunization cost `lambda`, solved
/// generically to `tol`.
pub struct SolvedEpidemic {
    pub model: EpidemicModel,
    pub value: ValueFunction,
    pub policy: StationaryPolicy,
}

pub fn solved_epidemic(lambda: f64, tol: f64) -> SolvedEpidemic {
    let model = build_epidemic_model(&reference_params(lambda), HdPolicy::Audit).expect("reference instance builds");
    let value = solve(&model.ctmdp, tol).expect("reference instance solves").value;
    let policy = extract_policy(&model.ctmdp, &value, DEFAULT_TOL_SET).expect("optimal policy extracts");
    SolvedEpidemic { model, value, policy }
}
