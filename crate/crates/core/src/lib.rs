//! Solvers for Markov decision processes regularized by Tsallis entropy.
//!
//! The entropic index `q > 0` interpolates between the Shannon-regularized
//! (soft) MDP at `q = 1`, the sparse MDP at `q = 2` and the standard MDP as
//! `q -> infinity`. The crate provides:
//!
//! * [`qmath`]: `exp_q`, `ln_q` and the Tsallis entropy,
//! * [`qmax`]: the q-maximum operator and its maximizing policy,
//! * [`mdp`]: tabular MDPs, policy evaluation and state-action visitation,
//! * [`solvers`]: Tsallis policy iteration and value iteration,
//! * [`experiments`]: bandit, q-max bound and gridworld sweeps.

pub mod error;
pub mod experiments;
pub mod mdp;
pub mod qmath;
pub mod qmax;
pub mod solvers;

pub use error::{Error, Result};
pub use experiments::{
    bandit_sweep, build_gridworld, theorem1_experiment, theorem6_experiment, GridWorldSpec,
    MoveSet, SweepResult,
};
pub use mdp::{
    compute_visitation, discounted_return, discounted_tsallis_entropy, evaluate_policy,
    policy_from_visitation, QFunction, StationaryPolicy, TabularMdp, VFunction, Visitation,
};
pub use qmath::{exp_q, ln_q, tsallis_entropy, DiscreteDistribution, EntropicIndex};
pub use qmax::{q_max, q_max_with_coefficient, solve_q_potential, QMaxResult};
pub use solvers::{
    policy_improvement, tbe_operator, tbo_operator, tsallis_policy_iteration,
    tsallis_value_iteration, verify_tbo, SolveReport, SolverConfig,
};
