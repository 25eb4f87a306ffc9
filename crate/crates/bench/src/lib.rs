//! Fixtures shared by the criterion benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsallis_core::{build_gridworld, GridWorldSpec, TabularMdp};

/// Seeded reward vectors with entries in `[-5, 5]`.
pub fn reward_vectors(count: usize, len: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..len).map(|_| rng.random_range(-5.0..=5.0)).collect())
        .collect()
}

pub fn default_gridworld() -> TabularMdp {
    build_gridworld(&GridWorldSpec::default_scenario()).expect("default scenario is valid")
}

pub fn random_mdp(n_states: usize, n_actions: usize, seed: u64) -> TabularMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TabularMdp::random(&mut rng, n_states, n_actions, 0.9).expect("random mdp is valid")
}
