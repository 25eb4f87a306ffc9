//! The q-maximum operator
//!
//! ```text
//! q-max(f) = max_{P in simplex} E_P[f] + S_q(P)
//! ```
//!
//! Its maximizer has the form `P(a) = exp_q(f(a)/q - psi)` where the
//! q-potential `psi` is the unique scalar that normalizes `P`. The potential
//! has closed forms at `q = 1` (log-sum-exp) and `q = 2` (sparsemax
//! threshold); other indices are solved by bisection.
//!
//! For `q > 2` the maximizer is extremely steep near the edge of its support
//! (`dP/dpsi ~ P^(2-q)`), so `psi` itself cannot resolve small probabilities
//! in double precision. That branch brackets the support first and then
//! bisects on the logarithm of the offset from the last support breakpoint,
//! which keeps every probability accurate to relative precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{exp_q, tsallis_entropy_of, DiscreteDistribution, EntropicIndex, IndexKind};

/// Bracket width at which bisection stops.
pub const BRACKET_TOL: f64 = 1e-12;
/// Normalization residual at which bisection stops early.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Largest normalization error accepted from a finished solve.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Disagreement between the two value formulas that gets flagged.
pub const VALUE_DISCREPANCY_TOL: f64 = 1e-6;
pub const MAX_BISECTION_ITERS: usize = 200;

/// Solution of a q-maximum problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QMaxResult {
    /// `E_policy[f] + S_q(policy)`.
    pub value: f64,
    /// Value from the potential form `(q-1) sum_a (f(a)/q) P(a) + psi`.
    pub potential_value: f64,
    pub policy: DiscreteDistribution,
    /// q-potential evaluated at `f/q`.
    pub psi: f64,
    /// Indices with positive probability, ascending.
    pub support: Vec<usize>,
}

impl QMaxResult {
    /// Absolute disagreement between the direct and potential value formulas.
    pub fn discrepancy(&self) -> f64 {
        (self.value - self.potential_value).abs()
    }

    pub fn has_discrepancy(&self) -> bool {
        self.discrepancy() > VALUE_DISCREPANCY_TOL
    }
}

struct Normalized {
    psi: f64,
    probs: Vec<f64>,
}

fn check_input(f: &[f64]) -> Result<()> {
    if f.is_empty() {
        return Err(Error::InvalidParameter("q-max of an empty vector".into()));
    }
    if let Some(x) = f.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite entry {x}")));
    }
    Ok(())
}

fn max_of(z: &[f64]) -> f64 {
    z.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// The q-potential `psi` with `sum_a exp_q(f(a)/q - psi) = 1`.
///
/// For `q > 2` the returned value is the correctly rounded potential, but
/// plugging it back into `exp_q` loses the probabilities of actions sitting
/// just inside the support; use [`q_max`] to get the maximizer itself.
pub fn solve_q_potential(f: &[f64], q: EntropicIndex) -> Result<f64> {
    check_input(f)?;
    let z: Vec<f64> = f.iter().map(|x| x / q.value()).collect();
    Ok(normalize(&z, q)?.psi)
}

fn normalize(z: &[f64], q: EntropicIndex) -> Result<Normalized> {
    if z.len() == 1 {
        return Ok(Normalized { psi: z[0], probs: vec![1.0] });
    }
    let mut out = match q.kind() {
        IndexKind::One => softmax(z),
        IndexKind::Two => sparsemax(z),
        IndexKind::General if q.value() < 2.0 => bisect_potential(z, q)?,
        IndexKind::General => bisect_support_offset(z, q)?,
    };
    let total: f64 = out.probs.iter().sum();
    if total.is_nan() || (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NonConvergence {
            what: "q-potential",
            iterations: MAX_BISECTION_ITERS,
            residual: (total - 1.0).abs(),
        });
    }
    for p in &mut out.probs {
        *p /= total;
    }
    Ok(out)
}

fn softmax(z: &[f64]) -> Normalized {
    let m = max_of(z);
    let mut probs: Vec<f64> = z.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= s);
    Normalized { psi: m + s.ln(), probs }
}

/// Euclidean projection of `z` onto the simplex.
///
/// Returns the projection and the threshold `tau` with `p = [z - tau]_+`.
/// Ties are resolved in index order.
pub fn simplex_projection(z: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
    let mut cumulative = 0.0;
    let mut k = 0;
    let mut kept_sum = 0.0;
    for (i, &idx) in order.iter().enumerate() {
        cumulative += z[idx];
        if 1.0 + (i + 1) as f64 * z[idx] > cumulative {
            k = i + 1;
            kept_sum = cumulative;
        }
    }
    let tau = (kept_sum - 1.0) / k as f64;
    let probs = z.iter().map(|x| (x - tau).max(0.0)).collect();
    (probs, tau)
}

fn sparsemax(z: &[f64]) -> Normalized {
    let (probs, tau) = simplex_projection(z);
    Normalized { psi: 1.0 + tau, probs }
}

/// Bisection directly on `psi`, used for `q < 2` where the maximizer has
/// bounded slope in `psi`.
fn bisect_potential(z: &[f64], q: EntropicIndex) -> Result<Normalized> {
    let n = z.len();
    let m = max_of(z);
    // At psi = max z the argmax term is exp_q(0) = 1; at the upper end every
    // term is at most exp_q(ln_q(1/n)) = 1/n.
    let mut lo = m;
    let mut hi = m + crate::qmath::max_entropy(n, q);
    let mass = |psi: f64| -> f64 { z.iter().map(|x| exp_q(x - psi, q)).sum() };

    let mut iterations = 0;
    while hi - lo >= BRACKET_TOL && iterations < MAX_BISECTION_ITERS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let residual = mass(mid) - 1.0;
        if residual.abs() < RESIDUAL_TOL {
            lo = mid;
            hi = mid;
            break;
        }
        if residual > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let psi = 0.5 * (lo + hi);
    let probs = z.iter().map(|x| exp_q(x - psi, q)).collect();
    Ok(Normalized { psi, probs })
}

/// Solver for `q > 2`.
///
/// Writing `d_a = max z - z_a` and `u = max z + 1/(q-1) - psi`, the maximizer
/// is `P(a) = [(q-1)(u - d_a)]_+^(1/(q-1))` and the total mass is increasing
/// in `u`. The breakpoints `u = d_a` delimit the support; once the piece
/// containing the root is known, `u = d_K + exp(l)` and the bisection runs on
/// `l`, so the offsets `u - d_a` are never formed by cancellation.
fn bisect_support_offset(z: &[f64], q: EntropicIndex) -> Result<Normalized> {
    let n = z.len();
    let m = max_of(z);
    let k = q.value() - 1.0;
    let inv_k = 1.0 / k;
    let ln_k = k.ln();
    let term = |ln_offset: f64| (inv_k * (ln_k + ln_offset)).exp();

    let gaps: Vec<f64> = z.iter().map(|x| m - x).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| gaps[a].total_cmp(&gaps[b]).then(a.cmp(&b)));

    let mass_at_breakpoint = |u: f64| -> f64 {
        gaps.iter()
            .filter(|&&d| d < u)
            .map(|&d| term((u - d).ln()))
            .sum()
    };

    // Largest sorted position whose breakpoint still carries mass below one.
    let mut last = 0;
    for pos in 1..n {
        if mass_at_breakpoint(gaps[order[pos]]) < 1.0 {
            last = pos;
        } else {
            break;
        }
    }
    let anchor = gaps[order[last]];
    let ceiling = match order.get(last + 1) {
        Some(&next) => gaps[next].min(inv_k),
        None => inv_k,
    };
    let support: Vec<usize> = order[..=last].to_vec();
    let offsets: Vec<f64> = support.iter().map(|&a| anchor - gaps[a]).collect();

    let ln_offset = |c: f64, l: f64| -> f64 {
        if c == 0.0 {
            l
        } else {
            let lc = c.ln();
            lc + (l - lc).exp().ln_1p()
        }
    };
    let excess = |l: f64| -> f64 { offsets.iter().map(|&c| term(ln_offset(c, l))).sum::<f64>() - 1.0 };

    let mut hi = (ceiling - anchor).max(f64::MIN_POSITIVE).ln();
    let mut step = 1.0;
    let mut lo = hi - step;
    while excess(lo) >= 0.0 && step < 1e7 {
        hi = lo;
        step *= 2.0;
        lo = hi - step;
    }

    let mut iterations = 0;
    while hi - lo >= BRACKET_TOL && iterations < MAX_BISECTION_ITERS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let residual = excess(mid);
        if residual.abs() < RESIDUAL_TOL {
            lo = mid;
            hi = mid;
            break;
        }
        if residual > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let l = 0.5 * (lo + hi);
    let mut probs = vec![0.0; n];
    for (&a, &c) in support.iter().zip(&offsets) {
        probs[a] = term(ln_offset(c, l));
    }
    let u = anchor + l.exp();
    Ok(Normalized { psi: m + inv_k - u, probs })
}

/// Evaluates the q-maximum of `f` and its maximizing distribution.
pub fn q_max(f: &[f64], q: EntropicIndex) -> Result<QMaxResult> {
    check_input(f)?;
    let qv = q.value();
    let z: Vec<f64> = f.iter().map(|x| x / qv).collect();
    let Normalized { psi, probs } = normalize(&z, q)?;

    let expected: f64 = probs.iter().zip(f).map(|(p, x)| p * x).sum();
    let value = expected + tsallis_entropy_of(&probs, q);
    let potential_value = match q.kind() {
        IndexKind::One => psi,
        _ => (qv - 1.0) * probs.iter().zip(&z).map(|(p, x)| p * x).sum::<f64>() + psi,
    };
    let support = probs
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(QMaxResult {
        value,
        potential_value,
        policy: DiscreteDistribution::new(probs)?,
        psi,
        support,
    })
}

/// Solves `max_P E_P[f] + alpha S_q(P)` as `alpha * q-max(f / alpha)`.
pub fn q_max_with_coefficient(f: &[f64], q: EntropicIndex, alpha: f64) -> Result<QMaxResult> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "entropy coefficient must be > 0, got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return q_max(f, q);
    }
    check_input(f)?;
    let scaled: Vec<f64> = f.iter().map(|x| x / alpha).collect();
    let mut res = q_max(&scaled, q)?;
    res.value *= alpha;
    res.potential_value *= alpha;
    Ok(res)
}
