//! Uniformized Bellman operator, monotone value iteration, policy
//! extraction and fixed-policy evaluation.
//!
//! For a bounded `F` the operator is
//!
//! ```text
//! 𝔅F(x) = min_a∈A^g(x) { K/(K+η) ∫F dP̃(·|x,a) + C^g(x,a)/(K+η) }
//!       ∧ min_a∈A^i(x) { ∫F dQ(·|x,a) + c^i(x,a) }
//! ```
//!
//! The gradual branch is a contraction with modulus `K/(K+η)`; the impulsive
//! branch has modulus one, so convergence is monotone but not geometric in
//! general. Iterating from `±K/η` gives a non-increasing (resp.
//! non-decreasing) sequence that brackets the unique bounded fixed point.

use std::ops::Index;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Ctmdp, StateId};
use crate::policy::{Mode, StationaryPolicy};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;
/// Slack in the `X^g` membership test; ties go to the gradual side.
pub const DEFAULT_TOL_SET: f64 = 1e-8;

/// State count above which operator sweeps run in parallel.
const PAR_THRESHOLD: usize = 2048;

/// A real function on the states of a model.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValueFunction(pub Vec<f64>);

impl ValueFunction {
    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        sup_distance(&self.0, &other.0)
    }

    /// `self ≤ other` at every state.
    pub fn le(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `∫ self d(row)` for a sparse row.
    pub fn integrate(&self, row: &[(StateId, f64)]) -> f64 {
        row.iter().map(|&(y, p)| p * self.0[y]).sum()
    }
}

impl Index<StateId> for ValueFunction {
    type Output = f64;

    fn index(&self, x: StateId) -> &f64 {
        &self.0[x]
    }
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Minimum and first minimizer of each branch of `𝔅F(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branches {
    pub gradual: f64,
    pub gradual_arg: usize,
    /// `None` when no impulse is admissible at the state.
    pub impulsive: Option<(f64, usize)>,
}

impl Branches {
    pub fn value(&self) -> f64 {
        match self.impulsive {
            Some((v, _)) => self.gradual.min(v),
            None => self.gradual,
        }
    }
}

/// First index attaining the minimum (ties keep the lowest index).
fn argmin(values: impl Iterator<Item = f64>) -> Option<(f64, usize)> {
    values.enumerate().fold(None, |best, (i, v)| match best {
        Some((b, _)) if v >= b => best,
        _ => Some((v, i)),
    })
}

/// Evaluates both branches of the operator at one state.
pub fn branches(model: &Ctmdp, f: &ValueFunction, x: StateId) -> Branches {
    let k = model.k();
    let denom = k + model.eta();
    let (gradual, gradual_arg) = argmin(
        model
            .gradual(x)
            .iter()
            .map(|a| k / denom * f.integrate(&a.uniformized) + a.cost / denom),
    )
    .expect("validated models have a gradual action at every state");
    let impulsive = argmin(model.impulsive(x).iter().map(|a| f.integrate(&a.row) + a.cost));
    Branches {
        gradual,
        gradual_arg,
        impulsive,
    }
}

fn sweep<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(StateId) -> T + Sync + Send,
{
    if n >= PAR_THRESHOLD {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// One application of the Bellman operator.
pub fn bellman_apply(model: &Ctmdp, f: &ValueFunction) -> ValueFunction {
    ValueFunction(sweep(model.n_states(), |x| branches(model, f, x).value()))
}

/// Starting point of the monotone iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `V_0 = K/η`; iterates are non-increasing.
    FromAbove,
    /// `V_0 = −K/η`; iterates are non-decreasing.
    FromBelow,
}

/// Stateful value iteration `V_{i+1} = 𝔅V_i`.
#[derive(Debug, Clone)]
pub struct ValueIteration<'a> {
    model: &'a Ctmdp,
    direction: Direction,
    current: ValueFunction,
    iterations: usize,
}

impl<'a> ValueIteration<'a> {
    pub fn new(model: &'a Ctmdp, direction: Direction) -> Self {
        let bound = model.value_bound();
        let start = match direction {
            Direction::FromAbove => bound,
            Direction::FromBelow => -bound,
        };
        Self {
            model,
            direction,
            current: ValueFunction::constant(model.n_states(), start),
            iterations: 0,
        }
    }

    pub fn current(&self) -> &ValueFunction {
        &self.current
    }

    pub fn into_current(self) -> ValueFunction {
        self.current
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Advances one step and returns the sup-norm of the change.
    pub fn step(&mut self) -> f64 {
        let next = bellman_apply(self.model, &self.current);
        let slack = 1e-12 * (1.0 + self.model.value_bound());
        debug_assert!(
            next.0.iter().zip(&self.current.0).all(|(n, c)| match self.direction {
                Direction::FromAbove => *n <= c + slack,
                Direction::FromBelow => *n >= c - slack,
            }),
            "value iteration lost monotonicity at iteration {}",
            self.iterations + 1
        );
        let step = next.sup_distance(&self.current);
        self.current = next;
        self.iterations += 1;
        step
    }
}

/// Iterates from `±K/η` until the sup-norm step drops below `tol`.
pub fn value_iterate(model: &Ctmdp, direction: Direction, tol: f64, max_iter: usize) -> Result<(ValueFunction, usize)> {
    if tol.is_nan() || tol <= 0.0 || max_iter == 0 {
        return Err(Error::Domain(format!(
            "value iteration needs tol > 0 and max_iter >= 1 (got {tol}, {max_iter})"
        )));
    }
    let mut it = ValueIteration::new(model, direction);
    loop {
        let step = it.step();
        if step < tol {
            let n = it.iterations();
            return Ok((it.into_current(), n));
        }
        if it.iterations() >= max_iter {
            return Err(Error::NonConvergence {
                iterations: it.iterations(),
                step,
                last: Box::new(it.into_current().0),
            });
        }
    }
}

/// `sup_x |𝔅V(x) − V(x)|`; zero exactly at the fixed point.
pub fn bellman_residual(model: &Ctmdp, v: &ValueFunction) -> f64 {
    bellman_apply(model, v).sup_distance(v)
}

/// Reads the strategy off a (near) fixed point.
///
/// A state is gradual iff the gradual branch is within `tol_set` of `V(x)`.
pub fn extract_policy(model: &Ctmdp, v: &ValueFunction, tol_set: f64) -> Result<StationaryPolicy> {
    let n = model.n_states();
    let mut policy = StationaryPolicy::all_gradual(n);
    for x in 0..n {
        let b = branches(model, v, x);
        if b.gradual <= v[x] + tol_set {
            policy.phi_g[x] = b.gradual_arg;
            continue;
        }
        match b.impulsive {
            Some((_, a)) => policy.set_impulsive(x, a),
            None => {
                return Err(Error::Inconsistent(format!(
                    "state `{}` fails the gradual test (branch {} > V = {}) but has no impulse",
                    model.states().label(x),
                    b.gradual,
                    v[x]
                )))
            }
        }
    }
    Ok(policy)
}

/// Value of a fixed stationary policy.
///
/// Solves `V(x) = K/(K+η) ∫V dP̃(·|x,φ^g(x)) + C^g/(K+η)` on gradual states and
/// `V(x) = c^i(x,φ^i(x)) + ∫V dQ(·|x,φ^i(x))` on impulsive ones by Jacobi
/// iteration from zero. An impulsive cycle never converges.
pub fn evaluate_policy(model: &Ctmdp, policy: &StationaryPolicy, tol: f64, max_iter: usize) -> Result<ValueFunction> {
    policy.check_feasible(model)?;
    let k = model.k();
    let denom = k + model.eta();
    let mut v = ValueFunction::zeros(model.n_states());
    for iteration in 1..=max_iter {
        let next = ValueFunction(sweep(model.n_states(), |x| match policy.mode[x] {
            Mode::Gradual => {
                let a = &model.gradual(x)[policy.phi_g[x]];
                k / denom * v.integrate(&a.uniformized) + a.cost / denom
            }
            Mode::Impulsive => {
                let a = &model.impulsive(x)[policy.phi_i[x].expect("checked feasible")];
                a.cost + v.integrate(&a.row)
            }
        }));
        let step = next.sup_distance(&v);
        v = next;
        if step < tol {
            return Ok(v);
        }
        if iteration == max_iter {
            return Err(Error::NonConvergence {
                iterations: iteration,
                step,
                last: Box::new(v.0),
            });
        }
    }
    Err(Error::Domain("evaluate_policy needs max_iter >= 1".into()))
}

/// Outcome of [`solve`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    /// The limit of the iteration from below.
    pub value: ValueFunction,
    pub iterations_above: usize,
    pub iterations_below: usize,
    /// `sup |𝔅V − V|` of the returned value.
    pub residual: f64,
    /// Sup-distance between the two iteration limits.
    pub gap: f64,
}

/// Runs value iteration from both sides; the two limits witness uniqueness.
pub fn solve(model: &Ctmdp, tol: f64) -> Result<SolveReport> {
    solve_with(model, tol, DEFAULT_MAX_ITER)
}

pub fn solve_with(model: &Ctmdp, tol: f64, max_iter: usize) -> Result<SolveReport> {
    let (above, below) = rayon::join(
        || value_iterate(model, Direction::FromAbove, tol, max_iter),
        || value_iterate(model, Direction::FromBelow, tol, max_iter),
    );
    let (above, iterations_above) = above?;
    let (below, iterations_below) = below?;
    let gap = above.sup_distance(&below);
    let residual = bellman_residual(model, &below);
    Ok(SolveReport {
        value: below,
        iterations_above,
        iterations_below,
        residual,
        gap,
    })
}
