//! Small models with closed-form answers.

use crate::model::{Ctmdp, ModelBuilder};
use crate::policy::StationaryPolicy;

/// Two states `{0, 1}`: state 1 jumps to the absorbing state 0 at rate `mu`
/// and costs 1 per unit time; state 0 costs nothing. With `impulse = Some(λ)`
/// state 1 may also be sent to 0 instantly at cost λ.
///
/// `V(1) = 1/(η+μ)` without the impulse and `min{1/(η+μ), λ}` with it.
pub fn two_state(eta: f64, mu: f64, impulse: Option<f64>) -> Ctmdp {
    let mut b = ModelBuilder::new(["0", "1"]).expect("distinct labels");
    b.gradual(0, "wait", 0.0, vec![]).gradual(1, "wait", 1.0, vec![(0, mu)]);
    if let Some(lambda) = impulse {
        b.impulsive(1, "treat", lambda, vec![(0, 1.0)]);
    }
    b.constants(eta, mu, 1.0, impulse.unwrap_or(1.0));
    b.compile().expect("two-state model is valid")
}

/// `n` states, one costless action with no jumps, no impulses.
pub fn zero_cost(n: usize) -> Ctmdp {
    let mut b = ModelBuilder::new((0..n).map(|i| i.to_string())).expect("distinct labels");
    for x in 0..n {
        b.gradual(x, "wait", 0.0, vec![]);
    }
    b.constants(1.0, 1.0, 1.0, 1.0);
    b.compile().expect("zero-cost model is valid")
}

/// States `x`, `y`, `z` where impulses send `x → y` and `y → x`, each at
/// cost 1, together with a policy that uses both: its chains never land.
pub fn impulsive_cycle() -> (Ctmdp, StationaryPolicy) {
    let mut b = ModelBuilder::new(["x", "y", "z"]).expect("distinct labels");
    for s in 0..3 {
        b.gradual(s, "wait", 0.0, vec![]);
    }
    b.impulsive(0, "hop", 1.0, vec![(1, 1.0)])
        .impulsive(1, "hop", 1.0, vec![(0, 1.0)])
        .constants(1.0, 1.0, 1.0, 1.0);
    let model = b.compile().expect("cycle model is valid");
    let mut policy = StationaryPolicy::all_gradual(3);
    policy.set_impulsive(0, 0);
    policy.set_impulsive(1, 0);
    (model, policy)
}
