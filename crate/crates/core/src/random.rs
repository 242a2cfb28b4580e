//! Seeded random models for property checks and benchmarks.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Ctmdp, ModelBuilder, SparseRow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomModelConfig {
    pub n_states: usize,
    /// At least one gradual action per state, at most this many.
    pub max_gradual: usize,
    pub max_impulsive: usize,
    /// Probability that a state admits impulses at all.
    pub impulse_prob: f64,
    /// Maximum support size of each rate or impulse row.
    pub max_targets: usize,
}

impl Default for RandomModelConfig {
    fn default() -> Self {
        Self {
            n_states: 20,
            max_gradual: 2,
            max_impulsive: 2,
            impulse_prob: 0.5,
            max_targets: 3,
        }
    }
}

fn random_row(rng: &mut ChaCha8Rng, n: usize, exclude: Option<usize>, max_targets: usize) -> SparseRow {
    let pool: Vec<usize> = (0..n).filter(|&y| Some(y) != exclude).collect();
    if pool.is_empty() || max_targets == 0 {
        return Vec::new();
    }
    let size = rng.random_range(1..=max_targets.min(pool.len()));
    let mut row: SparseRow = sample(rng, pool.len(), size)
        .into_iter()
        .map(|i| (pool[i], rng.random_range(0.05..1.0)))
        .collect();
    row.sort_by_key(|&(y, _)| y);
    row
}

/// Draws a valid model. Constants: `η ∈ [0.5, 2)`, `K_rate ∈ [0.5, 3)`,
/// `K_cost = 1`, `c_lower ∈ [0.05, 0.5)`.
pub fn random_model(seed: u64, cfg: &RandomModelConfig) -> Ctmdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.n_states.max(1);
    let eta = rng.random_range(0.5..2.0);
    let k_rate = rng.random_range(0.5..3.0);
    let k_cost = 1.0;
    let c_lower = rng.random_range(0.05..0.5);

    let mut b = ModelBuilder::new((0..n).map(|i| format!("x{i}"))).expect("distinct labels");
    for x in 0..n {
        for a in 0..rng.random_range(1..=cfg.max_gradual.max(1)) {
            let mut row = random_row(&mut rng, n, Some(x), cfg.max_targets);
            let total: f64 = row.iter().map(|&(_, r)| r).sum();
            if total > 0.0 {
                let scale = rng.random_range(0.0..=1.0) * k_rate / total;
                row.iter_mut().for_each(|(_, r)| *r *= scale);
            }
            let cost = rng.random_range(-k_cost..=k_cost);
            b.gradual(x, &format!("g{a}"), cost, row);
        }
        if cfg.max_impulsive > 0 && rng.random_bool(cfg.impulse_prob.clamp(0.0, 1.0)) {
            for a in 0..rng.random_range(1..=cfg.max_impulsive) {
                let mut row = random_row(&mut rng, n, None, cfg.max_targets);
                let total: f64 = row.iter().map(|&(_, p)| p).sum();
                row.iter_mut().for_each(|(_, p)| *p /= total);
                let cost = c_lower + rng.random_range(0.0..2.0);
                b.impulsive(x, &format!("i{a}"), cost, row);
            }
        }
    }
    b.constants(eta, k_rate, k_cost, c_lower);
    b.compile().expect("random models satisfy the model contract")
}
