//! Deformed exponential and logarithm, and the Tsallis entropy they induce.
//!
//! With entropic index `q > 0`:
//!
//! ```text
//! exp_q(x) = [1 + (q - 1) x]_+ ^ (1 / (q - 1))      exp(x)  at q = 1
//! ln_q(x)  = (x^(q - 1) - 1) / (q - 1)              log(x)  at q = 1
//! S_q(P)   = E_P[-ln_q P(X)]
//! ```
//!
//! `q = 1` recovers the Shannon entropy, `q = 2` gives `1 - sum p^2`, and the
//! entropy vanishes as `q` grows.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SPECIAL_INDEX_TOL: f64 = 1e-12;
const SIMPLEX_SUM_TOL: f64 = 1e-9;

/// Which closed-form branch an [`EntropicIndex`] takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    /// Shannon-Gibbs (`q = 1`): softmax policies, log-sum-exp potential.
    One,
    /// Sparse Tsallis (`q = 2`): sparsemax policies.
    Two,
    General,
}

/// A validated entropic index `q > 0`.
///
/// The branch is fixed at construction so iterative solvers never flip
/// between the closed form and the general formula from one call to the next.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct EntropicIndex {
    q: f64,
    kind: IndexKind,
}

impl EntropicIndex {
    pub fn new(q: f64) -> Result<Self> {
        if !q.is_finite() || q <= 0.0 {
            return Err(Error::InvalidEntropicIndex(q));
        }
        let (q, kind) = if (q - 1.0).abs() <= SPECIAL_INDEX_TOL {
            (1.0, IndexKind::One)
        } else if (q - 2.0).abs() <= SPECIAL_INDEX_TOL {
            (2.0, IndexKind::Two)
        } else {
            (q, IndexKind::General)
        };
        Ok(EntropicIndex { q, kind })
    }

    /// Shannon-Gibbs index.
    pub fn shannon() -> Self {
        EntropicIndex { q: 1.0, kind: IndexKind::One }
    }

    /// Sparse Tsallis index.
    pub fn sparse() -> Self {
        EntropicIndex { q: 2.0, kind: IndexKind::Two }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.q
    }

    #[inline]
    pub fn kind(self) -> IndexKind {
        self.kind
    }
}

impl TryFrom<f64> for EntropicIndex {
    type Error = Error;

    fn try_from(q: f64) -> Result<Self> {
        EntropicIndex::new(q)
    }
}

impl From<EntropicIndex> for f64 {
    fn from(q: EntropicIndex) -> f64 {
        q.q
    }
}

impl fmt::Display for EntropicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.q)
    }
}

/// A probability vector on a finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates that `probs` is nonempty, nonnegative and sums to one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {p}, expected a finite nonnegative probability"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        Ok(DiscreteDistribution { probs })
    }

    /// Rescales a nonnegative weight vector with positive total mass.
    pub fn from_weights(mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weights have total mass {total}"
            )));
        }
        for w in &mut weights {
            *w /= total;
        }
        DiscreteDistribution::new(weights)
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs a nonempty support");
        DiscreteDistribution { probs: vec![1.0 / n as f64; n] }
    }

    /// All mass on outcome `i`.
    pub fn point_mass(n: usize, i: usize) -> Self {
        assert!(i < n, "outcome {i} outside support of size {n}");
        let mut probs = vec![0.0; n];
        probs[i] = 1.0;
        DiscreteDistribution { probs }
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Indices with strictly positive probability.
    pub fn support(&self) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// `E_P[f]`.
    pub fn expectation(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.probs.len());
        self.probs.iter().zip(f).map(|(p, x)| p * x).sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.probs
    }
}

impl TryFrom<Vec<f64>> for DiscreteDistribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        DiscreteDistribution::new(probs)
    }
}

impl From<DiscreteDistribution> for Vec<f64> {
    fn from(d: DiscreteDistribution) -> Vec<f64> {
        d.probs
    }
}

/// q-exponential.
///
/// For `q > 1` the base is clamped at zero, which is where sparse policies
/// come from. For `q < 1` the exponent is negative and the function blows up
/// at `x = 1 / (1 - q)`; beyond that point it returns `+inf`.
pub fn exp_q(x: f64, q: EntropicIndex) -> f64 {
    match q.kind {
        IndexKind::One => x.exp(),
        IndexKind::Two => (1.0 + x).max(0.0),
        IndexKind::General => {
            let k = q.q - 1.0;
            let base = k * x;
            if base <= -1.0 {
                return if k > 0.0 { 0.0 } else { f64::INFINITY };
            }
            (base.ln_1p() / k).exp()
        }
    }
}

/// q-logarithm, defined for `x > 0`.
pub fn ln_q(x: f64, q: EntropicIndex) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain { function: "ln_q", value: x });
    }
    Ok(ln_q_positive(x, q))
}

/// q-logarithm without the domain check. `x` must be positive.
#[inline]
pub(crate) fn ln_q_positive(x: f64, q: EntropicIndex) -> f64 {
    match q.kind {
        IndexKind::One => x.ln(),
        IndexKind::Two => x - 1.0,
        IndexKind::General => {
            let k = q.q - 1.0;
            (k * x.ln()).exp_m1() / k
        }
    }
}

/// `-p ln_q(p)`, extended by continuity with the value 0 at `p = 0`.
#[inline]
pub(crate) fn entropy_term(p: f64, q: EntropicIndex) -> f64 {
    if p > 0.0 {
        -p * ln_q_positive(p, q)
    } else {
        0.0
    }
}

/// Tsallis entropy `S_q(P) = -sum_x P(x) ln_q P(x)`.
///
/// Zero-probability outcomes contribute nothing, so the entropy is defined on
/// the closed simplex.
pub fn tsallis_entropy(p: &DiscreteDistribution, q: EntropicIndex) -> f64 {
    tsallis_entropy_of(p.probs(), q)
}

pub(crate) fn tsallis_entropy_of(probs: &[f64], q: EntropicIndex) -> f64 {
    probs.iter().map(|&p| entropy_term(p, q)).sum()
}

/// `-ln_q(1/n)`, the largest Tsallis entropy on `n` outcomes.
pub fn max_entropy(n: usize, q: EntropicIndex) -> f64 {
    assert!(n > 0);
    -ln_q_positive(1.0 / n as f64, q)
}
