use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Ctmdp, StateId};

/// Which control is applied at a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Wait under a gradual action (the state is in `X^g`).
    Gradual,
    /// Intervene immediately (the state is in `X^i`).
    Impulsive,
}

/// A stationary strategy: partition into `X^g`/`X^i` plus action maps.
///
/// Actions are catalog indices. `phi_g` is total; on impulsive states it is
/// never applied by the optimal strategy but is still a feasible choice.
/// `phi_i[x]` is `Some` exactly on impulsive states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationaryPolicy {
    pub mode: Vec<Mode>,
    pub phi_g: Vec<usize>,
    pub phi_i: Vec<Option<usize>>,
}

impl StationaryPolicy {
    /// Gradual everywhere, first catalog action.
    pub fn all_gradual(n_states: usize) -> Self {
        Self {
            mode: vec![Mode::Gradual; n_states],
            phi_g: vec![0; n_states],
            phi_i: vec![None; n_states],
        }
    }

    pub fn len(&self) -> usize {
        self.mode.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mode.is_empty()
    }

    pub fn is_impulsive(&self, x: StateId) -> bool {
        self.mode[x] == Mode::Impulsive
    }

    /// Marks `x` impulsive with catalog action `a`.
    pub fn set_impulsive(&mut self, x: StateId, a: usize) {
        self.mode[x] = Mode::Impulsive;
        self.phi_i[x] = Some(a);
    }

    pub fn impulsive_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.mode
            .iter()
            .enumerate()
            .filter(|(_, m)| **m == Mode::Impulsive)
            .map(|(x, _)| x)
    }

    /// Checks that every chosen action exists in the model's catalog.
    pub fn check_feasible(&self, model: &Ctmdp) -> Result<()> {
        let n = model.n_states();
        if self.mode.len() != n || self.phi_g.len() != n || self.phi_i.len() != n {
            return Err(Error::InfeasiblePolicy {
                state: String::new(),
                reason: format!("policy covers {} states, model has {n}", self.mode.len()),
            });
        }
        let bad = |x: StateId, reason: String| Error::InfeasiblePolicy {
            state: model.states().label(x).to_owned(),
            reason,
        };
        for x in 0..n {
            if self.phi_g[x] >= model.gradual(x).len() {
                return Err(bad(x, format!("gradual action #{} not in catalog", self.phi_g[x])));
            }
            match (self.mode[x], self.phi_i[x]) {
                (Mode::Impulsive, Some(a)) if a < model.impulsive(x).len() => {}
                (Mode::Impulsive, Some(a)) => return Err(bad(x, format!("impulsive action #{a} not in catalog"))),
                (Mode::Impulsive, None) => return Err(bad(x, "impulsive state without an impulse".into())),
                (Mode::Gradual, Some(_)) => return Err(bad(x, "impulse chosen at a gradual state".into())),
                (Mode::Gradual, None) => {}
            }
        }
        Ok(())
    }
}
