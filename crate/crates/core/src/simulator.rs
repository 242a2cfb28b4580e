//! Monte Carlo simulation of the controlled jump process under a stationary
//! policy.
//!
//! Interventions happen at time 0 and right after natural jumps: whenever the
//! process enters an impulsive state, an intervention chain is applied until
//! it lands in a gradual state. With a nonempty `deltas` schedule the chain's
//! impulses are instead spread out in time, and the first natural jump that
//! interrupts a wait switches the remainder of the trajectory to gradual
//! control only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bellman::ValueFunction;
use crate::error::{Error, Result};
use crate::intervention::{analyze_chains, chain_guard, sample_row, ChainAnalysis, InterventionChain};
use crate::model::{Ctmdp, StateId};
use crate::policy::StationaryPolicy;

pub const DEFAULT_TAIL_TOL: f64 = 1e-8;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;
/// Tolerance of the chain analysis run by [`Simulator::new`].
pub const CHAIN_TOL: f64 = 1e-12;
/// Absolute slack added to `3·se` in [`DynkinResult::consistent`], scaled by
/// `max(1, sup |W|)`. Without it a zero-variance check would demand exact
/// floating-point agreement.
pub const DYNKIN_FLOOR: f64 = 1e-12;

/// The rng of replication `rep` under master seed `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// One decision epoch: time 0 or a natural jump.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub time: f64,
    /// State before the jump; the initial state at epoch 0.
    pub pre_state: StateId,
    /// State the natural jump led to; the initial state at epoch 0.
    pub target: StateId,
    /// The chain applied at `target`, possibly cut short by a natural jump
    /// when impulses are spaced out.
    pub chain: Option<InterventionChain>,
    /// Where the process sits after the epoch.
    pub post_state: StateId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub epochs: Vec<Epoch>,
    pub discounted_gradual_cost: f64,
    pub discounted_impulse_cost: f64,
    /// Time sampling stopped at. `None` if the process was absorbed and the
    /// remaining cost was added in closed form.
    pub truncation_time: Option<f64>,
    /// Time from which only gradual control was applied, when a spaced chain
    /// was interrupted.
    pub gradual_only_from: Option<f64>,
}

/// CSV row of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRow<'a> {
    pub epoch: usize,
    pub time: f64,
    pub pre_state: &'a str,
    pub target: &'a str,
    pub chain_length: usize,
    pub chain_cost: f64,
    pub post_state: &'a str,
}

impl Trajectory {
    pub fn total_cost(&self) -> f64 {
        self.discounted_gradual_cost + self.discounted_impulse_cost
    }

    pub fn natural_jumps(&self) -> usize {
        self.epochs.len().saturating_sub(1)
    }

    /// Number of natural jumps in `[0, t]`.
    pub fn natural_jumps_until(&self, t: f64) -> usize {
        self.epochs.iter().skip(1).take_while(|e| e.time <= t).count()
    }

    pub fn rows<'a>(&self, model: &'a Ctmdp) -> Vec<EpochRow<'a>> {
        let label = |x| model.states().label(x);
        self.epochs
            .iter()
            .enumerate()
            .map(|(epoch, e)| EpochRow {
                epoch,
                time: e.time,
                pre_state: label(e.pre_state),
                target: label(e.target),
                chain_length: e.chain.as_ref().map_or(0, InterventionChain::len),
                chain_cost: e.chain.as_ref().map_or(0.0, |c| c.total_cost),
                post_state: label(e.post_state),
            })
            .collect()
    }
}

/// When to stop sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Stop once the discounted bound on all remaining cost drops below the
    /// simulator's `tail_tol`.
    Tail,
    /// Stop at a fixed time; costs accrue on `[0, t]` only.
    Until(f64),
}

/// Summary of where replications stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationStats {
    pub truncated: usize,
    pub absorbed: usize,
    pub mean_time: f64,
    pub max_time: f64,
    pub max_epochs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_replications: usize,
    pub confidence_level: f64,
    pub seed: u64,
    pub tail_tol: f64,
    pub truncation: TruncationStats,
}

impl CostEstimate {
    /// Normal-approximation interval at `confidence_level`.
    pub fn confidence_interval(&self) -> (f64, f64) {
        let z = Normal::standard().inverse_cdf(0.5 + self.confidence_level / 2.0);
        (self.mean - z * self.std_error, self.mean + z * self.std_error)
    }
}

/// Both sides of the discounted Dynkin formula estimated on the same
/// trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynkinResult {
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
    /// Standard error of the paired difference.
    pub std_error: f64,
    pub n_replications: usize,
    pub t: f64,
    /// `max(1, sup |W|)`, the scale of the floating-point floor.
    pub scale: f64,
}

impl DynkinResult {
    /// `|diff| ≤ k·se` up to the floating-point floor.
    pub fn consistent(&self, k: f64) -> bool {
        self.diff.abs() <= k * self.std_error + DYNKIN_FLOOR * self.scale
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

struct Walk {
    t: f64,
    gradual: f64,
    impulse: f64,
    next_delta: usize,
    gradual_only_from: Option<f64>,
}

enum ChainOutcome {
    Landed(InterventionChain),
    /// A natural jump to `target` ended a wait at `state`.
    Interrupted {
        chain: InterventionChain,
        state: StateId,
        target: StateId,
    },
    /// The horizon ended a wait at `state`.
    Horizon {
        chain: InterventionChain,
        state: StateId,
    },
}

/// A model and policy prepared for simulation.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    model: &'a Ctmdp,
    policy: &'a StationaryPolicy,
    chains: ChainAnalysis,
    tail_tol: f64,
    tail_bound: f64,
    guard: usize,
}

impl<'a> Simulator<'a> {
    /// Checks the policy and analyzes its chains; improper policies are
    /// rejected here rather than mid-trajectory.
    pub fn new(model: &'a Ctmdp, policy: &'a StationaryPolicy, tail_tol: f64) -> Result<Self> {
        if !(tail_tol > 0.0 && tail_tol.is_finite()) {
            return Err(Error::Domain(format!(
                "tail tolerance must be positive, got {tail_tol}"
            )));
        }
        let chains = analyze_chains(model, policy, CHAIN_TOL)?;
        let k_eta = model.value_bound();
        let tail_bound = 3.0 * k_eta + chains.max_expected_cost();
        Ok(Self {
            model,
            policy,
            tail_bound,
            chains,
            tail_tol,
            guard: chain_guard(model),
        })
    }

    pub fn chains(&self) -> &ChainAnalysis {
        &self.chains
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    fn disc(&self, t: f64) -> f64 {
        (-self.model.eta() * t).exp()
    }

    /// Discounted gradual cost of sitting at `x` on `[from, to]`; `to` may be
    /// infinite.
    fn accrue(&self, x: StateId, from: f64, to: f64) -> f64 {
        let eta = self.model.eta();
        let cost = self.model.gradual(x)[self.policy.phi_g[x]].cost;
        cost * self.disc(from) * -(-eta * (to - from)).exp_m1() / eta
    }

    /// Time to the next natural jump from `x`, infinite without jumps.
    fn sojourn<R: Rng + ?Sized>(&self, x: StateId, rng: &mut R) -> f64 {
        let rate = self.model.gradual(x)[self.policy.phi_g[x]].total_rate;
        if rate > 0.0 {
            Exp::new(rate).expect("positive rate").sample(rng)
        } else {
            f64::INFINITY
        }
    }

    fn jump<R: Rng + ?Sized>(&self, x: StateId, rng: &mut R) -> StateId {
        sample_row(&self.model.gradual(x)[self.policy.phi_g[x]].rates, rng)
    }

    fn apply_chain<R: Rng + ?Sized>(
        &self,
        walk: &mut Walk,
        start: StateId,
        rng: &mut R,
        deltas: &[f64],
        end: f64,
    ) -> Result<ChainOutcome> {
        let mut steps = Vec::new();
        let mut total_cost = 0.0;
        let mut cur = start;
        while self.policy.is_impulsive(cur) {
            let partial = |steps: Vec<_>, total_cost| InterventionChain {
                steps,
                landing: cur,
                total_cost,
            };
            if steps.len() >= self.guard {
                return Err(Error::ImproperChain {
                    state: self.model.states().label(start).to_owned(),
                    reason: format!("chain did not land within {} impulses", self.guard),
                });
            }
            let delta = deltas.get(walk.next_delta).copied().unwrap_or(0.0);
            walk.next_delta += 1;
            if delta > 0.0 {
                let tau = self.sojourn(cur, rng);
                if tau < delta && walk.t + tau < end {
                    walk.gradual += self.accrue(cur, walk.t, walk.t + tau);
                    walk.t += tau;
                    walk.gradual_only_from = Some(walk.t);
                    let target = self.jump(cur, rng);
                    return Ok(ChainOutcome::Interrupted {
                        chain: partial(steps, total_cost),
                        state: cur,
                        target,
                    });
                }
                if walk.t + delta >= end {
                    walk.gradual += self.accrue(cur, walk.t, end);
                    walk.t = end;
                    return Ok(ChainOutcome::Horizon {
                        chain: partial(steps, total_cost),
                        state: cur,
                    });
                }
                walk.gradual += self.accrue(cur, walk.t, walk.t + delta);
                walk.t += delta;
            }
            let a = self.policy.phi_i[cur].expect("feasible policy");
            let action = &self.model.impulsive(cur)[a];
            walk.impulse += self.disc(walk.t) * action.cost;
            total_cost += action.cost;
            steps.push((cur, a));
            cur = sample_row(&action.row, rng);
        }
        Ok(ChainOutcome::Landed(InterventionChain {
            steps,
            landing: cur,
            total_cost,
        }))
    }

    /// Samples one trajectory from `x0`.
    ///
    /// `deltas[k]` is the wait before the `k`-th impulse of the trajectory,
    /// counted across all chains; missing entries are 0, so an empty slice
    /// gives instantaneous chains.
    pub fn run<R: Rng + ?Sized>(
        &self,
        x0: StateId,
        rng: &mut R,
        horizon: Horizon,
        deltas: &[f64],
    ) -> Result<Trajectory> {
        if x0 >= self.model.n_states() {
            return Err(Error::Domain(format!("initial state #{x0} out of range")));
        }
        if let Some(d) = deltas.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::Domain(format!("waits must be finite and nonnegative, got {d}")));
        }
        let end = match horizon {
            Horizon::Tail => f64::INFINITY,
            Horizon::Until(t) if t > 0.0 && t.is_finite() => t,
            Horizon::Until(t) => return Err(Error::Domain(format!("horizon must be positive, got {t}"))),
        };
        let mut walk = Walk {
            t: 0.0,
            gradual: 0.0,
            impulse: 0.0,
            next_delta: 0,
            gradual_only_from: None,
        };
        let mut epochs = Vec::new();
        let (mut pre, mut target) = (x0, x0);
        let truncation_time = loop {
            let time = walk.t;
            let epoch = |chain, post_state| Epoch {
                time,
                pre_state: pre,
                target,
                chain,
                post_state,
            };
            let x = if walk.gradual_only_from.is_none() && self.policy.is_impulsive(target) {
                match self.apply_chain(&mut walk, target, rng, deltas, end)? {
                    ChainOutcome::Landed(chain) => {
                        let post = chain.landing;
                        epochs.push(epoch(Some(chain), post));
                        post
                    }
                    ChainOutcome::Interrupted {
                        chain,
                        state,
                        target: next,
                    } => {
                        epochs.push(epoch(Some(chain), state));
                        pre = state;
                        target = next;
                        continue;
                    }
                    ChainOutcome::Horizon { chain, state } => {
                        epochs.push(epoch(Some(chain), state));
                        break Some(end);
                    }
                }
            } else {
                epochs.push(epoch(None, target));
                target
            };

            if horizon == Horizon::Tail && self.disc(walk.t) * self.tail_bound < self.tail_tol {
                break Some(walk.t);
            }
            let tau = self.sojourn(x, rng);
            if walk.t + tau >= end {
                walk.gradual += self.accrue(x, walk.t, end);
                break end.is_finite().then_some(end);
            }
            walk.gradual += self.accrue(x, walk.t, walk.t + tau);
            walk.t += tau;
            pre = x;
            target = self.jump(x, rng);
        };
        Ok(Trajectory {
            epochs,
            discounted_gradual_cost: walk.gradual,
            discounted_impulse_cost: walk.impulse,
            truncation_time,
            gradual_only_from: walk.gradual_only_from,
        })
    }

    /// Trajectory with instantaneous chains, stopped by the tail bound.
    pub fn simulate<R: Rng + ?Sized>(&self, x0: StateId, rng: &mut R) -> Result<Trajectory> {
        self.run(x0, rng, Horizon::Tail, &[])
    }

    /// Trajectory with impulses spaced by `deltas`, stopped by the tail bound.
    pub fn simulate_spaced<R: Rng + ?Sized>(&self, x0: StateId, rng: &mut R, deltas: &[f64]) -> Result<Trajectory> {
        self.run(x0, rng, Horizon::Tail, deltas)
    }

    /// Runs `n_reps` replications in parallel, replication `r` on
    /// [`replication_rng`]`(seed, r)`. Results are in replication order.
    pub fn replicate<T, F>(&self, n_reps: usize, seed: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&Self, &mut ChaCha8Rng) -> Result<T> + Sync,
    {
        (0..n_reps)
            .into_par_iter()
            .map(|r| f(self, &mut replication_rng(seed, r as u64)))
            .collect()
    }

    /// Mean discounted cost from `x0` over `n_reps ≥ 2` replications.
    pub fn estimate_cost(&self, x0: StateId, n_reps: usize, seed: u64, deltas: &[f64]) -> Result<CostEstimate> {
        if n_reps < 2 {
            return Err(Error::Domain(format!("need at least 2 replications, got {n_reps}")));
        }
        let reps = self.replicate(n_reps, seed, |sim, rng| {
            let tr = sim.run(x0, rng, Horizon::Tail, deltas)?;
            Ok((tr.total_cost(), tr.truncation_time, tr.epochs.len()))
        })?;
        let costs: Vec<f64> = reps.iter().map(|r| r.0).collect();
        let (mean, std_error) = mean_and_se(&costs);
        let times: Vec<f64> = reps.iter().filter_map(|r| r.1).collect();
        let truncation = TruncationStats {
            truncated: times.len(),
            absorbed: n_reps - times.len(),
            mean_time: if times.is_empty() {
                0.0
            } else {
                times.iter().sum::<f64>() / times.len() as f64
            },
            max_time: times.iter().copied().fold(0.0, f64::max),
            max_epochs: reps.iter().map(|r| r.2).max().unwrap_or(0),
        };
        Ok(CostEstimate {
            mean,
            std_error,
            n_replications: n_reps,
            confidence_level: DEFAULT_CONFIDENCE,
            seed,
            tail_tol: self.tail_tol,
            truncation,
        })
    }

    /// The integrand `-ηW(x) + Σ_y q̄(y|x,a) W̄(y) - W(x) q̄(X|x,a)` at every
    /// state, with `a = phi_g(x)` and `W̄(y)` the expected value of `W` where
    /// the chain from `y` lands.
    fn dynkin_integrand(&self, w: &ValueFunction) -> Vec<f64> {
        let landed: Vec<f64> = self.chains.landing.iter().map(|row| w.integrate(row)).collect();
        (0..self.model.n_states())
            .map(|x| {
                let action = &self.model.gradual(x)[self.policy.phi_g[x]];
                let inflow: f64 = action.rates.iter().map(|&(y, q)| q * landed[y]).sum();
                -self.model.eta() * w[x] + inflow - w[x] * action.total_rate
            })
            .collect()
    }

    /// Estimates `E[e^{-ηt} W(ξ_t)]` and `W(post_0) + E ∫_0^t e^{-ηs} g(ξ_s) ds`
    /// on the same `n_reps` trajectories from `x0`, chains instantaneous.
    pub fn dynkin_check(
        &self,
        w: &ValueFunction,
        x0: StateId,
        t: f64,
        n_reps: usize,
        seed: u64,
    ) -> Result<DynkinResult> {
        if w.len() != self.model.n_states() {
            return Err(Error::Domain(format!(
                "W has {} entries, model has {} states",
                w.len(),
                self.model.n_states()
            )));
        }
        if n_reps < 2 {
            return Err(Error::Domain(format!("need at least 2 replications, got {n_reps}")));
        }
        let g = self.dynkin_integrand(w);
        let eta = self.model.eta();
        let pairs = self.replicate(n_reps, seed, |sim, rng| {
            let tr = sim.run(x0, rng, Horizon::Until(t), &[])?;
            let last = tr.epochs.last().expect("epoch 0 exists").post_state;
            let lhs = sim.disc(t) * w[last];
            let mut rhs = w[tr.epochs[0].post_state];
            for (k, e) in tr.epochs.iter().enumerate() {
                let until = tr.epochs.get(k + 1).map_or(t, |next| next.time);
                rhs += g[e.post_state] * sim.disc(e.time) * -(-eta * (until - e.time)).exp_m1() / eta;
            }
            Ok((lhs, rhs))
        })?;
        let n = n_reps as f64;
        let lhs = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let rhs = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let diffs: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
        let (diff, std_error) = mean_and_se(&diffs);
        Ok(DynkinResult {
            lhs,
            rhs,
            diff,
            std_error,
            n_replications: n_reps,
            t,
            scale: w.sup_norm().max(1.0),
        })
    }
}

/// One trajectory with instantaneous chains. Prefer [`Simulator`] when
/// sampling repeatedly: this analyzes the policy's chains on every call.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    model: &Ctmdp,
    policy: &StationaryPolicy,
    x0: StateId,
    rng: &mut R,
    tail_tol: f64,
) -> Result<Trajectory> {
    Simulator::new(model, policy, tail_tol)?.simulate(x0, rng)
}

/// One trajectory with impulses spaced by `deltas`.
pub fn simulate_spaced<R: Rng + ?Sized>(
    model: &Ctmdp,
    policy: &StationaryPolicy,
    x0: StateId,
    rng: &mut R,
    deltas: &[f64],
    tail_tol: f64,
) -> Result<Trajectory> {
    Simulator::new(model, policy, tail_tol)?.simulate_spaced(x0, rng, deltas)
}

pub fn estimate_cost(
    model: &Ctmdp,
    policy: &StationaryPolicy,
    x0: StateId,
    n_reps: usize,
    seed: u64,
    tail_tol: f64,
) -> Result<CostEstimate> {
    Simulator::new(model, policy, tail_tol)?.estimate_cost(x0, n_reps, seed, &[])
}

pub fn dynkin_check(
    model: &Ctmdp,
    policy: &StationaryPolicy,
    w: &ValueFunction,
    x0: StateId,
    t: f64,
    n_reps: usize,
    seed: u64,
) -> Result<DynkinResult> {
    Simulator::new(model, policy, DEFAULT_TAIL_TOL)?.dynkin_check(w, x0, t, n_reps, seed)
}
