//! Tabular MDPs, stationary policies, Tsallis policy evaluation and
//! state-action visitation.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{
    entropy_term, ln_q_positive, tsallis_entropy, DiscreteDistribution, EntropicIndex,
};

const ROW_SUM_TOL: f64 = 1e-9;

/// Default sup-norm residual for iterative policy evaluation.
pub const EVALUATION_TOL: f64 = 1e-10;
pub const EVALUATION_MAX_ITERS: usize = 100_000;

/// A finite MDP `{S, A, d, P, gamma, r}` with rewards `r(s, a, s')`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// `P[s][a][s']`, flattened.
    transition: Vec<f64>,
    /// `r[s][a][s']`, flattened.
    reward: Vec<f64>,
    /// `E_{s'}[r(s, a, s')]`, flattened over `(s, a)`.
    expected_reward: Vec<f64>,
    discount: f64,
    initial: DiscreteDistribution,
}

impl TabularMdp {
    /// Builds an MDP from flat `[s][a][s']` tensors.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp("state and action sets must be nonempty".into()));
        }
        let len = n_states * n_actions * n_states;
        if transition.len() != len {
            return Err(Error::InvalidMdp(format!(
                "transition has {} entries, expected {len}",
                transition.len()
            )));
        }
        if reward.len() != len {
            return Err(Error::InvalidMdp(format!(
                "reward has {} entries, expected {len}",
                reward.len()
            )));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(Error::InvalidMdp(format!(
                "discount must lie strictly inside (0, 1), got {discount}"
            )));
        }
        for s in 0..n_states {
            for a in 0..n_actions {
                let start = (s * n_actions + a) * n_states;
                let row = &transition[start..start + n_states];
                if let Some((t, p)) = row.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
                    return Err(Error::InvalidMdp(format!(
                        "transition[{s}][{a}][{t}] is {p}, expected a probability"
                    )));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidMdp(format!(
                        "transition[{s}][{a}] sums to {total}, expected 1"
                    )));
                }
                if let Some(t) = reward[start..start + n_states].iter().position(|r| !r.is_finite()) {
                    return Err(Error::InvalidMdp(format!("reward[{s}][{a}][{t}] is not finite")));
                }
            }
        }
        if initial.len() != n_states {
            return Err(Error::InvalidMdp(format!(
                "initial distribution has {} entries, expected {n_states}",
                initial.len()
            )));
        }
        let initial = DiscreteDistribution::new(initial)
            .map_err(|e| Error::InvalidMdp(format!("initial: {e}")))?;

        let expected_reward = (0..n_states * n_actions)
            .map(|sa| {
                let start = sa * n_states;
                transition[start..start + n_states]
                    .iter()
                    .zip(&reward[start..start + n_states])
                    .map(|(p, r)| p * r)
                    .sum()
            })
            .collect();

        Ok(TabularMdp {
            n_states,
            n_actions,
            transition,
            reward,
            expected_reward,
            discount,
            initial,
        })
    }

    /// Draws a random MDP with dense transitions and rewards in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        n_states: usize,
        n_actions: usize,
        discount: f64,
    ) -> Result<Self> {
        let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
        for _ in 0..n_states * n_actions {
            let weights: Vec<f64> = (0..n_states).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = weights.iter().sum();
            transition.extend(weights.iter().map(|w| w / total));
        }
        let reward = (0..n_states * n_actions * n_states)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        let init: Vec<f64> = (0..n_states).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = init.iter().sum();
        TabularMdp::new(
            n_states,
            n_actions,
            transition,
            reward,
            discount,
            init.iter().map(|w| w / total).collect(),
        )
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn initial(&self) -> &DiscreteDistribution {
        &self.initial
    }

    /// `P(. | s, a)`.
    #[inline]
    pub fn next_state_probs(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.reward[(s * self.n_actions + a) * self.n_states + next]
    }

    /// `E_{s' ~ P(.|s,a)}[r(s, a, s')]`.
    #[inline]
    pub fn expected_reward(&self, s: usize, a: usize) -> f64 {
        self.expected_reward[s * self.n_actions + a]
    }

    /// Same dynamics with every reward multiplied by `factor`.
    pub fn with_scaled_rewards(&self, factor: f64) -> TabularMdp {
        TabularMdp {
            reward: self.reward.iter().map(|r| r * factor).collect(),
            expected_reward: self.expected_reward.iter().map(|r| r * factor).collect(),
            ..self.clone()
        }
    }

    /// `r(s,a) + gamma * sum_{s'} P(s'|s,a) v(s')` for every pair.
    pub fn backup(&self, v: &[f64]) -> QFunction {
        debug_assert_eq!(v.len(), self.n_states);
        let mut values = Vec::with_capacity(self.n_states * self.n_actions);
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let future: f64 = self.next_state_probs(s, a).iter().zip(v).map(|(p, x)| p * x).sum();
                values.push(self.expected_reward(s, a) + self.discount * future);
            }
        }
        QFunction { n_states: self.n_states, n_actions: self.n_actions, values }
    }

    /// Policy-averaged dynamics `M[s][s'] = sum_a pi(a|s) P(s'|s,a)` and rewards.
    fn policy_dynamics(&self, pi: &StationaryPolicy) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.n_states;
        let mut m = DMatrix::zeros(n, n);
        let mut r = DVector::zeros(n);
        for s in 0..n {
            for (a, &p) in pi.row(s).probs().iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                r[s] += p * self.expected_reward(s, a);
                for (t, &pt) in self.next_state_probs(s, a).iter().enumerate() {
                    m[(s, t)] += p * pt;
                }
            }
        }
        (m, r)
    }

    pub fn check_policy(&self, pi: &StationaryPolicy) -> Result<()> {
        if pi.n_states() != self.n_states || pi.n_actions() != self.n_actions {
            return Err(Error::Shape(format!(
                "policy is {}x{}, mdp is {}x{}",
                pi.n_states(),
                pi.n_actions(),
                self.n_states,
                self.n_actions
            )));
        }
        Ok(())
    }

    pub fn check_q(&self, f: &QFunction) -> Result<()> {
        if f.n_states != self.n_states || f.n_actions != self.n_actions {
            return Err(Error::Shape(format!(
                "table is {}x{}, mdp is {}x{}",
                f.n_states, f.n_actions, self.n_states, self.n_actions
            )));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: MdpFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&MdpFile::from(self)).expect("mdp serializes")
    }
}

/// Reward tensor as stored on disk: either `r[s][a][s']` or `r[s][a]`,
/// the latter broadcast over next states.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RewardTable {
    Full(Vec<Vec<Vec<f64>>>),
    StateAction(Vec<Vec<f64>>),
}

/// JSON schema of an MDP file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward: RewardTable,
    pub discount: f64,
    pub initial: Vec<f64>,
}

impl TryFrom<MdpFile> for TabularMdp {
    type Error = Error;

    fn try_from(file: MdpFile) -> Result<Self> {
        let (ns, na) = (file.n_states, file.n_actions);
        if file.transition.len() != ns {
            return Err(Error::InvalidMdp(format!(
                "transition has {} state blocks, expected {ns}",
                file.transition.len()
            )));
        }
        let mut transition = Vec::with_capacity(ns * na * ns);
        for (s, block) in file.transition.iter().enumerate() {
            if block.len() != na {
                return Err(Error::InvalidMdp(format!(
                    "transition[{s}] has {} actions, expected {na}",
                    block.len()
                )));
            }
            for (a, row) in block.iter().enumerate() {
                if row.len() != ns {
                    return Err(Error::InvalidMdp(format!(
                        "transition[{s}][{a}] has {} entries, expected {ns}",
                        row.len()
                    )));
                }
                transition.extend_from_slice(row);
            }
        }
        let reward = match file.reward {
            RewardTable::Full(r) => {
                let mut flat = Vec::with_capacity(ns * na * ns);
                if r.len() != ns {
                    return Err(Error::InvalidMdp(format!("reward has {} state blocks, expected {ns}", r.len())));
                }
                for (s, block) in r.iter().enumerate() {
                    if block.len() != na {
                        return Err(Error::InvalidMdp(format!("reward[{s}] has {} actions, expected {na}", block.len())));
                    }
                    for (a, row) in block.iter().enumerate() {
                        if row.len() != ns {
                            return Err(Error::InvalidMdp(format!(
                                "reward[{s}][{a}] has {} entries, expected {ns}",
                                row.len()
                            )));
                        }
                        flat.extend_from_slice(row);
                    }
                }
                flat
            }
            RewardTable::StateAction(r) => {
                let mut flat = Vec::with_capacity(ns * na * ns);
                if r.len() != ns {
                    return Err(Error::InvalidMdp(format!("reward has {} rows, expected {ns}", r.len())));
                }
                for (s, row) in r.iter().enumerate() {
                    if row.len() != na {
                        return Err(Error::InvalidMdp(format!("reward[{s}] has {} actions, expected {na}", row.len())));
                    }
                    for &x in row {
                        flat.extend(std::iter::repeat_n(x, ns));
                    }
                }
                flat
            }
        };
        TabularMdp::new(ns, na, transition, reward, file.discount, file.initial)
    }
}

impl From<&TabularMdp> for MdpFile {
    fn from(mdp: &TabularMdp) -> Self {
        let (ns, na) = (mdp.n_states, mdp.n_actions);
        let nest = |flat: &[f64]| -> Vec<Vec<Vec<f64>>> {
            (0..ns)
                .map(|s| {
                    (0..na)
                        .map(|a| {
                            let start = (s * na + a) * ns;
                            flat[start..start + ns].to_vec()
                        })
                        .collect()
                })
                .collect()
        };
        MdpFile {
            n_states: ns,
            n_actions: na,
            transition: nest(&mdp.transition),
            reward: RewardTable::Full(nest(&mdp.reward)),
            discount: mdp.discount,
            initial: mdp.initial.probs().to_vec(),
        }
    }
}

/// One action distribution per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPolicy {
    rows: Vec<DiscreteDistribution>,
}

impl StationaryPolicy {
    pub fn new(rows: Vec<DiscreteDistribution>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Shape("policy needs at least one state".into()));
        };
        let na = first.len();
        if let Some(s) = rows.iter().position(|r| r.len() != na) {
            return Err(Error::Shape(format!(
                "policy row {s} has {} actions, expected {na}",
                rows[s].len()
            )));
        }
        Ok(StationaryPolicy { rows })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        StationaryPolicy { rows: vec![DiscreteDistribution::uniform(n_actions); n_states] }
    }

    /// Deterministic policy choosing `actions[s]` in state `s`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Self {
        StationaryPolicy {
            rows: actions
                .iter()
                .map(|&a| DiscreteDistribution::point_mass(n_actions, a))
                .collect(),
        }
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.rows[0].len()
    }

    #[inline]
    pub fn row(&self, s: usize) -> &DiscreteDistribution {
        &self.rows[s]
    }

    pub fn rows(&self) -> &[DiscreteDistribution] {
        &self.rows
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.rows[s].probs()[a]
    }

    /// Largest absolute difference in any action probability.
    pub fn sup_distance(&self, other: &StationaryPolicy) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(x, y)| x.probs().iter().zip(y.probs()).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

/// Dense table over state-action pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QFunction {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QFunction {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self::constant(n_states, n_actions, 0.0)
    }

    pub fn constant(n_states: usize, n_actions: usize, c: f64) -> Self {
        QFunction { n_states, n_actions, values: vec![c; n_states * n_actions] }
    }

    /// Wraps a row-major `[s][a]` table.
    pub fn from_vec(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_actions {
            return Err(Error::Shape(format!(
                "table has {} entries, expected {}",
                values.len(),
                n_states * n_actions
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("table entries must be finite".into()));
        }
        Ok(QFunction { n_states, n_actions, values })
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shifted(&self, c: f64) -> QFunction {
        QFunction { values: self.values.iter().map(|v| v + c).collect(), ..self.clone() }
    }

    pub fn scaled(&self, factor: f64) -> QFunction {
        QFunction { values: self.values.iter().map(|v| v * factor).collect(), ..self.clone() }
    }

    pub fn sup_distance(&self, other: &QFunction) -> f64 {
        sup_distance(&self.values, &other.values)
    }
}

/// Dense table over states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VFunction(pub Vec<f64>);

impl VFunction {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn sup_distance(&self, other: &VFunction) -> f64 {
        sup_distance(&self.0, &other.0)
    }

    /// `sum_s d(s) V(s)`.
    pub fn expected_under(&self, d: &DiscreteDistribution) -> f64 {
        d.expectation(&self.0)
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Discounted state-action occupancy `rho(s,a) = E[sum_t gamma^t 1(s_t=s, a_t=a)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visitation {
    n_states: usize,
    n_actions: usize,
    rho: Vec<f64>,
}

impl Visitation {
    pub fn from_vec(n_states: usize, n_actions: usize, rho: Vec<f64>) -> Result<Self> {
        if rho.len() != n_states * n_actions {
            return Err(Error::Shape(format!(
                "visitation has {} entries, expected {}",
                rho.len(),
                n_states * n_actions
            )));
        }
        if rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidParameter("visitation must be finite and nonnegative".into()));
        }
        Ok(Visitation { n_states, n_actions, rho })
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.rho[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.rho[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// `rho(s) = sum_a rho(s, a)`.
    pub fn state_mass(&self, s: usize) -> f64 {
        self.row(s).iter().sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.rho.iter().sum()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Largest violation of `rho(s) = d(s) + gamma sum_{s',a'} P(s|s',a') rho(s',a')`.
    pub fn flow_violation(&self, mdp: &TabularMdp) -> f64 {
        let mut inflow = mdp.initial().probs().to_vec();
        for sp in 0..self.n_states {
            for ap in 0..self.n_actions {
                let w = mdp.discount() * self.get(sp, ap);
                for (s, p) in mdp.next_state_probs(sp, ap).iter().enumerate() {
                    inflow[s] += w * p;
                }
            }
        }
        (0..self.n_states)
            .map(|s| (self.state_mass(s) - inflow[s]).abs())
            .fold(0.0, f64::max)
    }

    /// `-sum_{s,a} rho(s,a) ln_q(rho(s,a) / rho(s))`.
    pub fn tsallis_entropy(&self, q: EntropicIndex) -> f64 {
        let mut total = 0.0;
        for s in 0..self.n_states {
            let mass = self.state_mass(s);
            if mass <= 0.0 {
                continue;
            }
            for &r in self.row(s) {
                if r > 0.0 {
                    total -= r * ln_q_positive(r / mass, q);
                }
            }
        }
        total
    }
}

/// Result of an iterative policy evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub v: VFunction,
    pub q: QFunction,
    pub iterations: usize,
    pub residual: f64,
}

/// Per-state entropy bonus `alpha * S_q(pi(.|s))`.
pub(crate) fn entropy_bonus(pi: &StationaryPolicy, q: EntropicIndex, alpha: f64) -> Vec<f64> {
    pi.rows()
        .iter()
        .map(|row| {
            if alpha == 0.0 {
                0.0
            } else {
                alpha * row.probs().iter().map(|&p| entropy_term(p, q)).sum::<f64>()
            }
        })
        .collect()
}

/// `V_F(s) = E_{a~pi}[F(s,a) - alpha ln_q pi(a|s)]`.
pub(crate) fn soft_state_values(f: &QFunction, pi: &StationaryPolicy, bonus: &[f64]) -> Vec<f64> {
    (0..f.n_states)
        .map(|s| pi.row(s).expectation(f.row(s)) + bonus[s])
        .collect()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "entropy coefficient must be finite and >= 0, got {alpha}"
        )));
    }
    Ok(())
}

/// Fixed point of the Tsallis Bellman expectation operator for `pi`,
/// iterated from `F = 0` to a sup-norm residual of [`EVALUATION_TOL`].
pub fn evaluate_policy(
    mdp: &TabularMdp,
    pi: &StationaryPolicy,
    q: EntropicIndex,
    alpha: f64,
) -> Result<(VFunction, QFunction)> {
    let init = QFunction::zeros(mdp.n_states(), mdp.n_actions());
    let ev = evaluate_policy_from(mdp, pi, q, alpha, &init, EVALUATION_TOL, EVALUATION_MAX_ITERS)?;
    Ok((ev.v, ev.q))
}

/// Iterates the expectation operator from `init` until successive tables
/// differ by less than `tol` in sup-norm.
pub fn evaluate_policy_from(
    mdp: &TabularMdp,
    pi: &StationaryPolicy,
    q: EntropicIndex,
    alpha: f64,
    init: &QFunction,
    tol: f64,
    max_iterations: usize,
) -> Result<Evaluation> {
    mdp.check_policy(pi)?;
    mdp.check_q(init)?;
    check_alpha(alpha)?;
    let bonus = entropy_bonus(pi, q, alpha);
    let mut f = init.clone();
    let mut residual = f64::INFINITY;
    for it in 1..=max_iterations {
        let v = soft_state_values(&f, pi, &bonus);
        let next = mdp.backup(&v);
        residual = next.sup_distance(&f);
        f = next;
        if residual <= tol {
            let v = VFunction(soft_state_values(&f, pi, &bonus));
            return Ok(Evaluation { v, q: f, iterations: it, residual });
        }
    }
    Err(Error::NonConvergence { what: "policy evaluation", iterations: max_iterations, residual })
}

/// Solves `(I - gamma P_pi) V = r_pi + alpha S_q(pi)` directly.
///
/// Used as an independent check on [`evaluate_policy`].
pub fn evaluate_policy_exact(
    mdp: &TabularMdp,
    pi: &StationaryPolicy,
    q: EntropicIndex,
    alpha: f64,
) -> Result<(VFunction, QFunction)> {
    mdp.check_policy(pi)?;
    check_alpha(alpha)?;
    let (m, mut r) = mdp.policy_dynamics(pi);
    for (s, b) in entropy_bonus(pi, q, alpha).into_iter().enumerate() {
        r[s] += b;
    }
    let n = mdp.n_states();
    let system = DMatrix::identity(n, n) - m * mdp.discount();
    let v = system
        .lu()
        .solve(&r)
        .ok_or_else(|| Error::Singular("policy evaluation system".into()))?;
    let v: Vec<f64> = v.iter().copied().collect();
    let q_table = mdp.backup(&v);
    Ok((VFunction(v), q_table))
}

/// Entropy-free expected discounted return `J(pi) = sum_s d(s) V^pi(s)`.
pub fn discounted_return(mdp: &TabularMdp, pi: &StationaryPolicy) -> Result<f64> {
    let (v, _) = evaluate_policy_exact(mdp, pi, EntropicIndex::shannon(), 0.0)?;
    Ok(v.expected_under(mdp.initial()))
}

/// Discounted state-action visitation of `pi`.
pub fn compute_visitation(mdp: &TabularMdp, pi: &StationaryPolicy) -> Result<Visitation> {
    mdp.check_policy(pi)?;
    let n = mdp.n_states();
    let (m, _) = mdp.policy_dynamics(pi);
    let system = DMatrix::identity(n, n) - m.transpose() * mdp.discount();
    let d = DVector::from_column_slice(mdp.initial().probs());
    let state_mass = system
        .lu()
        .solve(&d)
        .ok_or_else(|| Error::Singular("bellman flow system".into()))?;
    let na = mdp.n_actions();
    let mut rho = Vec::with_capacity(n * na);
    for s in 0..n {
        let mass = state_mass[s].max(0.0);
        rho.extend(pi.row(s).probs().iter().map(|p| (mass * p).max(0.0)));
    }
    Ok(Visitation { n_states: n, n_actions: na, rho })
}

/// `pi(a|s) = rho(s,a) / sum_a' rho(s,a')`; unvisited states get uniform rows.
pub fn policy_from_visitation(rho: &Visitation) -> StationaryPolicy {
    let rows = (0..rho.n_states)
        .map(|s| {
            let mass = rho.state_mass(s);
            if mass > 0.0 {
                DiscreteDistribution::from_weights(rho.row(s).to_vec())
                    .unwrap_or_else(|_| DiscreteDistribution::uniform(rho.n_actions))
            } else {
                DiscreteDistribution::uniform(rho.n_actions)
            }
        })
        .collect();
    StationaryPolicy { rows }
}

/// `S_q^inf(pi) = sum_s rho_pi(s) S_q(pi(.|s))`.
pub fn discounted_tsallis_entropy(
    mdp: &TabularMdp,
    pi: &StationaryPolicy,
    q: EntropicIndex,
) -> Result<f64> {
    let rho = compute_visitation(mdp, pi)?;
    Ok((0..mdp.n_states())
        .map(|s| rho.state_mass(s) * tsallis_entropy(pi.row(s), q))
        .sum())
}
