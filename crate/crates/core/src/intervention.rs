//! Chains of impulses applied at a single time instant.
//!
//! Under a stationary policy a chain starts at an impulsive state, applies
//! `phi_i` and samples the impulse kernel until it reaches a gradual state.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::bellman::ValueFunction;
use crate::error::{Error, Result};
use crate::model::{Ctmdp, SparseRow, StateId};
use crate::policy::StationaryPolicy;

/// A realized chain: the impulsive states visited, the impulse used at each,
/// and the gradual state where it lands.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionChain {
    /// `(state, impulsive catalog index)` in order of application.
    pub steps: Vec<(StateId, usize)>,
    pub landing: StateId,
    pub total_cost: f64,
}

/// One CSV row of a chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRow<'a> {
    pub step: usize,
    pub state: &'a str,
    pub action: &'a str,
    pub cost: f64,
}

impl InterventionChain {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Rows `(step, state, action, cost)` with labels resolved against `model`.
    pub fn rows<'a>(&self, model: &'a Ctmdp) -> Vec<ChainRow<'a>> {
        self.steps
            .iter()
            .enumerate()
            .map(|(step, &(x, a))| {
                let action = &model.impulsive(x)[a];
                ChainRow {
                    step,
                    state: model.states().label(x),
                    action: &action.label,
                    cost: action.cost,
                }
            })
            .collect()
    }
}

/// Maximum chain length before a chain is declared improper:
/// `ceil(2K/(η c̲))·10 + 100`.
pub fn chain_guard(model: &Ctmdp) -> usize {
    let expected = (2.0 * model.k() / (model.eta() * model.c_lower())).ceil();
    (expected as usize).saturating_mul(10).saturating_add(100)
}

/// Draws an index from a probability row. Rounding slack falls on the last
/// entry.
pub(crate) fn sample_row<R: Rng + ?Sized>(row: &[(StateId, f64)], rng: &mut R) -> StateId {
    let total: f64 = row.iter().map(|&(_, p)| p).sum();
    let mut u = rng.random::<f64>() * total;
    for &(y, p) in row {
        if u < p {
            return y;
        }
        u -= p;
    }
    row.last().expect("rows are nonempty").0
}

fn impulse_of(policy: &StationaryPolicy, model: &Ctmdp, x: StateId) -> Result<usize> {
    policy.phi_i[x].ok_or_else(|| Error::InfeasiblePolicy {
        state: model.states().label(x).to_owned(),
        reason: "impulsive state without an impulse".into(),
    })
}

/// Samples the chain started at the impulsive state `x`.
///
/// Fails with [`Error::ImproperChain`] once the chain exceeds
/// [`chain_guard`] steps, and with [`Error::Domain`] if `x` is gradual.
pub fn sample_chain<R: Rng + ?Sized>(
    model: &Ctmdp,
    policy: &StationaryPolicy,
    x: StateId,
    rng: &mut R,
) -> Result<InterventionChain> {
    if !policy.is_impulsive(x) {
        return Err(Error::Domain(format!(
            "chain requested at gradual state {}",
            model.states().label(x)
        )));
    }
    let guard = chain_guard(model);
    let mut steps = Vec::new();
    let mut total_cost = 0.0;
    let mut current = x;
    while policy.is_impulsive(current) {
        if steps.len() >= guard {
            return Err(Error::ImproperChain {
                state: model.states().label(x).to_owned(),
                reason: format!("chain did not land within {guard} impulses"),
            });
        }
        let a = impulse_of(policy, model, current)?;
        let action = &model.impulsive(current)[a];
        steps.push((current, a));
        total_cost += action.cost;
        current = sample_row(&action.row, rng);
    }
    Ok(InterventionChain {
        steps,
        landing: current,
        total_cost,
    })
}

/// Expected chain cost and landing distribution for every state.
///
/// On gradual states `expected_cost` is 0 and the landing row is the point
/// mass at the state itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainAnalysis {
    pub expected_cost: Vec<f64>,
    pub landing: Vec<SparseRow>,
    pub sweeps: usize,
}

impl ChainAnalysis {
    /// Largest expected chain cost, 0 without impulsive states.
    pub fn max_expected_cost(&self) -> f64 {
        self.expected_cost.iter().copied().fold(0.0, f64::max)
    }

    /// `W(x) + Σ_z L(x, z) f(z)`, i.e. `f` pushed through the chain at `x`.
    pub fn through_chain(&self, x: StateId, f: &ValueFunction) -> f64 {
        self.expected_cost[x] + f.integrate(&self.landing[x])
    }
}

/// Solves `W(x) = c^i(x, phi_i(x)) + Σ_{z ∈ X^i} Q(z | x, phi_i(x)) W(z)` on
/// the impulsive states by fixed-point iteration from 0, accumulating the
/// landing kernel alongside.
///
/// Stops once both the cost step and the unlanded mass are below `tol`.
/// After `10·chain_guard` sweeps without that, the state with the most
/// unlanded mass is reported as [`Error::ImproperChain`].
pub fn analyze_chains(model: &Ctmdp, policy: &StationaryPolicy, tol: f64) -> Result<ChainAnalysis> {
    policy.check_feasible(model)?;
    let n = model.n_states();
    let impulsive: Vec<StateId> = policy.impulsive_states().collect();
    let mut w = vec![0.0; n];
    let mut landing: Vec<BTreeMap<StateId, f64>> = (0..n)
        .map(|x| {
            if policy.is_impulsive(x) {
                BTreeMap::new()
            } else {
                BTreeMap::from([(x, 1.0)])
            }
        })
        .collect();

    let max_sweeps = chain_guard(model).saturating_mul(10);
    let mut sweeps = 0;
    loop {
        let mut step = 0.0f64;
        let mut deficit = 0.0f64;
        let mut witness = None;
        let updates: Vec<(StateId, f64, BTreeMap<StateId, f64>)> = impulsive
            .iter()
            .map(|&x| {
                let a = policy.phi_i[x].expect("checked feasible");
                let action = &model.impulsive(x)[a];
                let mut wx = action.cost;
                let mut lx = BTreeMap::new();
                for &(z, q) in &action.row {
                    if policy.is_impulsive(z) {
                        wx += q * w[z];
                    }
                    for (&y, &p) in &landing[z] {
                        *lx.entry(y).or_insert(0.0) += q * p;
                    }
                }
                (x, wx, lx)
            })
            .collect();
        for (x, wx, lx) in updates {
            step = step.max((wx - w[x]).abs());
            let missing = 1.0 - lx.values().sum::<f64>();
            if missing > deficit {
                deficit = missing;
                witness = Some(x);
            }
            w[x] = wx;
            landing[x] = lx;
        }
        sweeps += 1;
        if step < tol && deficit < tol {
            break;
        }
        if sweeps >= max_sweeps {
            let x = witness.or(impulsive.first().copied()).unwrap_or(0);
            return Err(Error::ImproperChain {
                state: model.states().label(x).to_owned(),
                reason: format!(
                    "chain analysis did not settle after {sweeps} sweeps (unlanded mass {deficit:.3e}, cost step {step:.3e})"
                ),
            });
        }
    }

    Ok(ChainAnalysis {
        expected_cost: w,
        landing: landing.into_iter().map(|l| l.into_iter().collect()).collect(),
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::impulsive_cycle;
    use crate::model::ModelBuilder;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// States a, b, c, d; every state may wait, impulses given as
    /// `(from, cost, row)`.
    fn chain_model(impulses: &[(StateId, f64, SparseRow)]) -> (Ctmdp, StationaryPolicy) {
        let mut b = ModelBuilder::new(["a", "b", "c", "d"]).unwrap();
        for x in 0..4 {
            b.gradual(x, "wait", 0.0, vec![]);
        }
        let mut policy = StationaryPolicy::all_gradual(4);
        for (x, cost, row) in impulses {
            b.impulsive(*x, "kick", *cost, row.clone());
            policy.set_impulsive(*x, 0);
        }
        b.constants(1.0, 1.0, 1.0, 0.1);
        (b.compile().unwrap(), policy)
    }

    #[test]
    fn single_deterministic_step() {
        let (m, p) = chain_model(&[(0, 0.3, vec![(1, 1.0)])]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let chain = sample_chain(&m, &p, 0, &mut rng).unwrap();
        assert_eq!(chain.steps, vec![(0, 0)]);
        assert_eq!(chain.landing, 1);
        assert_eq!(chain.total_cost, 0.3);

        let an = analyze_chains(&m, &p, 1e-12).unwrap();
        assert_eq!(an.expected_cost, vec![0.3, 0.0, 0.0, 0.0]);
        assert_eq!(an.landing[0], vec![(1, 1.0)]);
        assert_eq!(an.landing[2], vec![(2, 1.0)]);
    }

    #[test]
    fn gradual_start_is_rejected() {
        let (m, p) = chain_model(&[(0, 0.3, vec![(1, 1.0)])]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(sample_chain(&m, &p, 1, &mut rng), Err(Error::Domain(_))));
    }

    #[test]
    fn two_step_chain_sums_costs() {
        let (m, p) = chain_model(&[(0, 0.3, vec![(1, 1.0)]), (1, 0.5, vec![(2, 1.0)])]);
        let an = analyze_chains(&m, &p, 1e-12).unwrap();
        assert_abs_diff_eq!(an.expected_cost[0], 0.8, epsilon = 1e-15);
        assert_eq!(an.landing[0], vec![(2, 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let chain = sample_chain(&m, &p, 0, &mut rng).unwrap();
        assert_eq!(chain.len(), 2);
        assert_eq!(chain.landing, 2);
    }

    #[test]
    fn self_loop_half_doubles_cost() {
        let (m, p) = chain_model(&[(0, 0.25, vec![(0, 0.5), (3, 0.5)])]);
        let an = analyze_chains(&m, &p, 1e-13).unwrap();
        assert_abs_diff_eq!(an.expected_cost[0], 0.5, epsilon = 1e-12);
        assert_eq!(an.landing[0].len(), 1);
        assert_abs_diff_eq!(an.landing[0][0].1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bernoulli_landing_frequency() {
        let (m, p) = chain_model(&[(0, 0.3, vec![(1, 0.5), (2, 0.5)])]);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let mut hits = 0;
        for _ in 0..n {
            let c = sample_chain(&m, &p, 0, &mut rng).unwrap();
            assert_eq!(c.len(), 1);
            hits += usize::from(c.landing == 1);
        }
        let freq = hits as f64 / n as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((freq - 0.5).abs() <= 3.0 * sigma, "frequency {freq}");
    }

    #[test]
    fn cycle_is_improper() {
        let (m, p) = impulsive_cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_chain(&m, &p, 0, &mut rng),
            Err(Error::ImproperChain { .. })
        ));
        match analyze_chains(&m, &p, 1e-10) {
            Err(Error::ImproperChain { state, .. }) => assert!(state == "x" || state == "y"),
            other => panic!("expected improper chain, got {other:?}"),
        }
    }

    #[test]
    fn guard_formula() {
        let (m, _) = chain_model(&[]);
        // K = 1, η = 1, c̲ = 0.1.
        assert_eq!(chain_guard(&m), 20 * 10 + 100);
    }

    #[test]
    fn rows_resolve_labels() {
        let (m, p) = chain_model(&[(0, 0.3, vec![(1, 1.0)]), (1, 0.5, vec![(2, 1.0)])]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let chain = sample_chain(&m, &p, 0, &mut rng).unwrap();
        let rows = chain.rows(&m);
        assert_eq!(
            rows[1],
            ChainRow {
                step: 1,
                state: "b",
                action: "kick",
                cost: 0.5
            }
        );
    }
}
