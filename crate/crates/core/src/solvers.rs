//! Tsallis policy iteration (TPI) and Tsallis value iteration (TVI).
//!
//! Both solvers work on the `alpha = 1` problem with rewards divided by
//! `alpha` and rescale the resulting values, so a single code path handles
//! every entropy coefficient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{
    entropy_bonus, evaluate_policy_from, soft_state_values, QFunction, StationaryPolicy,
    TabularMdp, VFunction,
};
use crate::qmath::{DiscreteDistribution, EntropicIndex};
use crate::qmax::q_max_with_coefficient;

/// Stopping rules for the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Sup-norm residual on Q that stops value iteration.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Residual for the inner policy evaluation of TPI.
    pub evaluation_tolerance: f64,
    /// TPI stops once the policy moves less than this.
    pub policy_tolerance: f64,
    /// TPI also stops once Q moves less than this.
    pub q_change_tolerance: f64,
    pub max_policy_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-10,
            max_iterations: 100_000,
            evaluation_tolerance: 1e-10,
            policy_tolerance: 1e-8,
            q_change_tolerance: 1e-8,
            max_policy_iterations: 1_000,
        }
    }
}

/// Output of [`tsallis_policy_iteration`] or [`tsallis_value_iteration`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub q_function: QFunction,
    pub v_function: VFunction,
    pub policy: StationaryPolicy,
    /// Sup-norm change per iteration (Q for TVI, policy for TPI).
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// Largest violation of the Tsallis-Bellman optimality equations.
    pub tbo_residual: f64,
    /// `sum_s d(s) V^{pi_k}(s)` for each evaluated policy (TPI only).
    pub objective_history: Vec<f64>,
    pub warnings: Vec<String>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "entropy coefficient must be > 0, got {alpha}"
        )));
    }
    Ok(())
}

/// One application of the Tsallis Bellman expectation operator:
/// `[T F](s,a) = E_{s'}[r + gamma E_{a'~pi}[F(s',a') - alpha ln_q pi(a'|s')]]`.
pub fn tbe_operator(
    mdp: &TabularMdp,
    f: &QFunction,
    pi: &StationaryPolicy,
    q: EntropicIndex,
    alpha: f64,
) -> Result<QFunction> {
    mdp.check_q(f)?;
    mdp.check_policy(pi)?;
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("entropy coefficient {alpha}")));
    }
    let bonus = entropy_bonus(pi, q, alpha);
    Ok(mdp.backup(&soft_state_values(f, pi, &bonus)))
}

/// Per-state q-maximum of `f` with coefficient `alpha`: values and maximizers.
pub fn soft_greedy(
    f: &QFunction,
    q: EntropicIndex,
    alpha: f64,
) -> Result<(VFunction, StationaryPolicy, Vec<String>)> {
    let mut values = Vec::with_capacity(f.n_states());
    let mut rows = Vec::with_capacity(f.n_states());
    let mut warnings = Vec::new();
    for s in 0..f.n_states() {
        let res = q_max_with_coefficient(f.row(s), q, alpha)?;
        if res.has_discrepancy() {
            warnings.push(format!(
                "state {s}: q-max value formulas disagree by {:e}",
                res.discrepancy()
            ));
        }
        values.push(res.value);
        rows.push(res.policy);
    }
    Ok((VFunction(values), StationaryPolicy::new(rows)?, warnings))
}

/// Improved policy: per state, the maximizer of `E_pi[Q] + alpha S_q(pi)`.
pub fn policy_improvement(
    mdp: &TabularMdp,
    q_function: &QFunction,
    q: EntropicIndex,
    alpha: f64,
) -> Result<StationaryPolicy> {
    mdp.check_q(q_function)?;
    check_alpha(alpha)?;
    Ok(soft_greedy(q_function, q, alpha)?.1)
}

/// One application of the Tsallis-Bellman optimality operator:
/// `[T F](s,a) = E_{s'}[r + gamma q-max_{a'} F(s',a')]`.
pub fn tbo_operator(
    mdp: &TabularMdp,
    f: &QFunction,
    q: EntropicIndex,
    alpha: f64,
) -> Result<QFunction> {
    mdp.check_q(f)?;
    check_alpha(alpha)?;
    let (v, _, _) = soft_greedy(f, q, alpha)?;
    Ok(mdp.backup(v.values()))
}

/// Tsallis policy iteration from the uniform policy.
///
/// Alternates policy evaluation (warm-started from the previous Q) and
/// policy improvement until the policy or Q stops moving.
pub fn tsallis_policy_iteration(
    mdp: &TabularMdp,
    q: EntropicIndex,
    alpha: f64,
    config: &SolverConfig,
) -> Result<SolveReport> {
    check_alpha(alpha)?;
    let scaled = mdp.with_scaled_rewards(1.0 / alpha);
    let (ns, na) = (mdp.n_states(), mdp.n_actions());

    let mut policy = StationaryPolicy::uniform(ns, na);
    let mut q_table = QFunction::zeros(ns, na);
    let mut residuals = Vec::new();
    let mut objective_history = Vec::new();
    let mut warnings = Vec::new();

    for it in 1..=config.max_policy_iterations {
        let eval = evaluate_policy_from(
            &scaled,
            &policy,
            q,
            1.0,
            &q_table,
            config.evaluation_tolerance / alpha,
            config.max_iterations,
        )?;
        objective_history.push(alpha * eval.v.expected_under(mdp.initial()));
        let (_, improved, w) = soft_greedy(&eval.q, q, 1.0)?;
        warnings.extend(w);

        let policy_change = improved.sup_distance(&policy);
        let q_change = alpha * eval.q.sup_distance(&q_table);
        residuals.push(policy_change);
        let v = eval.v;
        q_table = eval.q;
        policy = improved;

        if policy_change < config.policy_tolerance || (it > 1 && q_change < config.q_change_tolerance) {
            let mut report = SolveReport {
                q_function: q_table.scaled(alpha),
                v_function: VFunction(v.values().iter().map(|x| x * alpha).collect()),
                policy,
                residuals,
                iterations: it,
                tbo_residual: f64::NAN,
                objective_history,
                warnings,
            };
            report.tbo_residual = verify_tbo(mdp, &report, q, alpha)?;
            return Ok(report);
        }
    }
    Err(Error::NonConvergence {
        what: "tsallis policy iteration",
        iterations: config.max_policy_iterations,
        residual: residuals.last().copied().unwrap_or(f64::INFINITY),
    })
}

/// Tsallis value iteration from `F = 0`.
pub fn tsallis_value_iteration(
    mdp: &TabularMdp,
    q: EntropicIndex,
    alpha: f64,
    config: &SolverConfig,
) -> Result<SolveReport> {
    value_iteration_impl(mdp, q, alpha, config, config.max_iterations, true)
}

/// Runs exactly `iterations` TVI sweeps (or fewer if converged) without
/// failing on the cap. Useful for inspecting partially converged tables.
pub fn tsallis_value_iteration_truncated(
    mdp: &TabularMdp,
    q: EntropicIndex,
    alpha: f64,
    config: &SolverConfig,
    iterations: usize,
) -> Result<SolveReport> {
    value_iteration_impl(mdp, q, alpha, config, iterations, false)
}

fn value_iteration_impl(
    mdp: &TabularMdp,
    q: EntropicIndex,
    alpha: f64,
    config: &SolverConfig,
    cap: usize,
    fail_on_cap: bool,
) -> Result<SolveReport> {
    check_alpha(alpha)?;
    let scaled = mdp.with_scaled_rewards(1.0 / alpha);
    let mut f = QFunction::zeros(mdp.n_states(), mdp.n_actions());
    let mut residuals = Vec::new();
    let mut converged = false;

    for _ in 0..cap {
        let next = tbo_operator(&scaled, &f, q, 1.0)?;
        let residual = alpha * next.sup_distance(&f);
        residuals.push(residual);
        f = next;
        if residual < config.tolerance {
            converged = true;
            break;
        }
    }
    if !converged && fail_on_cap {
        return Err(Error::NonConvergence {
            what: "tsallis value iteration",
            iterations: cap,
            residual: residuals.last().copied().unwrap_or(f64::INFINITY),
        });
    }

    let (v, policy, warnings) = soft_greedy(&f, q, 1.0)?;
    let mut report = SolveReport {
        q_function: f.scaled(alpha),
        v_function: VFunction(v.values().iter().map(|x| x * alpha).collect()),
        policy,
        iterations: residuals.len(),
        residuals,
        tbo_residual: f64::NAN,
        objective_history: Vec::new(),
        warnings,
    };
    report.tbo_residual = verify_tbo(mdp, &report, q, alpha)?;
    Ok(report)
}

/// Largest violation of the three optimality equations by a report:
/// `Q = E[r + gamma V]`, `V = alpha q-max(Q / alpha)` and
/// `pi = exp_q(Q/(q alpha) - psi)`.
pub fn verify_tbo(
    mdp: &TabularMdp,
    report: &SolveReport,
    q: EntropicIndex,
    alpha: f64,
) -> Result<f64> {
    mdp.check_q(&report.q_function)?;
    mdp.check_policy(&report.policy)?;
    if report.v_function.values().len() != mdp.n_states() {
        return Err(Error::Shape("value table does not match the mdp".into()));
    }
    check_alpha(alpha)?;
    let backed_up = mdp.backup(report.v_function.values());
    let mut worst = backed_up.sup_distance(&report.q_function);
    let (v, policy, _) = soft_greedy(&report.q_function, q, alpha)?;
    worst = worst.max(v.sup_distance(&report.v_function));
    worst = worst.max(policy.sup_distance(&report.policy));
    Ok(worst)
}

/// Result of standard (entropy-free) value iteration.
#[derive(Debug, Clone)]
pub struct GreedySolution {
    pub q_function: QFunction,
    pub v_function: VFunction,
    /// Greedy deterministic policy; ties go to the lowest action index.
    pub policy: StationaryPolicy,
    pub iterations: usize,
}

/// Standard Bellman-optimality value iteration, the `q -> infinity` limit.
pub fn standard_value_iteration(mdp: &TabularMdp, config: &SolverConfig) -> Result<GreedySolution> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut v = vec![0.0; ns];
    for it in 1..=config.max_iterations {
        let q_table = mdp.backup(&v);
        let next: Vec<f64> = (0..ns)
            .map(|s| q_table.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let residual = crate::mdp::sup_distance(&next, &v);
        v = next;
        if residual < config.tolerance {
            let q_table = mdp.backup(&v);
            let actions: Vec<usize> = (0..ns)
                .map(|s| {
                    let row = q_table.row(s);
                    let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    row.iter().position(|&x| x == best).unwrap_or(0)
                })
                .collect();
            return Ok(GreedySolution {
                q_function: q_table,
                v_function: VFunction(v),
                policy: StationaryPolicy::deterministic(na, &actions),
                iterations: it,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "standard value iteration",
        iterations: config.max_iterations,
        residual: f64::NAN,
    })
}

/// The optimal Tsallis policy row for a single state-action value row.
pub fn optimal_row(q_row: &[f64], q: EntropicIndex, alpha: f64) -> Result<DiscreteDistribution> {
    Ok(q_max_with_coefficient(q_row, q, alpha)?.policy)
}
