//! Independent oracles shared by the integration tests. Nothing here calls
//! into the q-max solver or the iterative evaluators.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsallis_core::{DiscreteDistribution, EntropicIndex, StationaryPolicy, TabularMdp};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q(v: f64) -> EntropicIndex {
    EntropicIndex::new(v).unwrap()
}

/// Tsallis entropy written out from the definition.
pub fn entropy(p: &[f64], qv: f64) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| {
            if qv == 1.0 {
                -x * x.ln()
            } else {
                -x * (x.powf(qv - 1.0) - 1.0) / (qv - 1.0)
            }
        })
        .sum()
}

pub fn objective(p: &[f64], f: &[f64], qv: f64) -> f64 {
    p.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() + entropy(p, qv)
}

/// Exhaustive search for `max_P E_P[f] + S_q(P)` over a simplex lattice with
/// spacing `1/resolution`. Supports up to three outcomes.
pub fn grid_search_qmax(f: &[f64], qv: f64, resolution: usize) -> f64 {
    let h = 1.0 / resolution as f64;
    match f.len() {
        1 => f[0],
        2 => (0..=resolution)
            .map(|i| {
                let a = i as f64 * h;
                objective(&[a, 1.0 - a], f, qv)
            })
            .fold(f64::NEG_INFINITY, f64::max),
        3 => {
            let mut best = f64::NEG_INFINITY;
            let mut p = [0.0; 3];
            for i in 0..=resolution {
                p[0] = i as f64 * h;
                for j in 0..=(resolution - i) {
                    p[1] = j as f64 * h;
                    p[2] = (1.0 - p[0] - p[1]).max(0.0);
                    best = best.max(objective(&p, f, qv));
                }
            }
            best
        }
        n => panic!("grid search supports up to 3 outcomes, got {n}"),
    }
}

/// Euclidean projection onto the simplex by coordinate-grid refinement:
/// a coarse lattice search, then repeated local searches with a step ten
/// times smaller, down to `final_step`.
pub fn projection_by_refinement(z: &[f64], final_step: f64) -> Vec<f64> {
    let n = z.len();
    let dist = |p: &[f64]| -> f64 { p.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum() };
    // Free coordinates are the first n-1; the last absorbs the remainder.
    let complete = |free: &[f64]| -> Option<Vec<f64>> {
        let rest = 1.0 - free.iter().sum::<f64>();
        if rest < -1e-15 || free.iter().any(|&x| x < 0.0) {
            return None;
        }
        let mut p = free.to_vec();
        p.push(rest.max(0.0));
        Some(p)
    };
    if n == 1 {
        return vec![1.0];
    }
    let mut step: f64 = 0.05;
    let mut center = vec![1.0 / n as f64; n - 1];
    let mut radius: f64 = 1.0;
    loop {
        let k = (radius / step).round() as i64;
        let mut best = (f64::INFINITY, center.clone());
        let mut idx = vec![-k; n - 1];
        loop {
            let free: Vec<f64> = center
                .iter()
                .zip(&idx)
                .map(|(c, &i)| c + i as f64 * step)
                .collect();
            if let Some(p) = complete(&free) {
                let d = dist(&p);
                if d < best.0 {
                    best = (d, free);
                }
            }
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] > k {
                    idx[pos] = -k;
                    pos += 1;
                } else {
                    break;
                }
            }
            if pos == idx.len() {
                break;
            }
        }
        center = best.1;
        if step <= final_step {
            return complete(&center).unwrap();
        }
        radius = 2.0 * step;
        step /= 10.0;
    }
}

/// Soft (Shannon) value iteration with a log-sum-exp backup.
pub fn soft_value_iteration(mdp: &TabularMdp, alpha: f64, tol: f64) -> Vec<f64> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut v = vec![0.0; ns];
    loop {
        let next: Vec<f64> = (0..ns)
            .map(|s| {
                let qs: Vec<f64> = (0..na)
                    .map(|a| {
                        mdp.expected_reward(s, a)
                            + mdp.discount()
                                * mdp.next_state_probs(s, a).iter().zip(&v).map(|(p, x)| p * x).sum::<f64>()
                    })
                    .collect();
                let m = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                m + alpha * qs.iter().map(|x| ((x - m) / alpha).exp()).sum::<f64>().ln()
            })
            .collect();
        let diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if diff < tol {
            return v;
        }
    }
}

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (x, p) in a[row].iter_mut().zip(&pivot_row).skip(col) {
                *x -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub fn random_distribution<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    // Occasionally zero out entries to exercise the boundary of the simplex.
    let mut w: Vec<f64> = (0..n)
        .map(|_| if rng.random::<f64>() < 0.15 { 0.0 } else { rng.random::<f64>() })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

pub fn random_policy<R: Rng>(rng: &mut R, ns: usize, na: usize) -> StationaryPolicy {
    StationaryPolicy::new(
        (0..ns)
            .map(|_| DiscreteDistribution::new(random_distribution(rng, na)).unwrap())
            .collect(),
    )
    .unwrap()
}

pub fn random_mdp<R: Rng>(rng: &mut R, max_states: usize, max_actions: usize, gamma: f64) -> TabularMdp {
    let ns = rng.random_range(1..=max_states);
    let na = rng.random_range(1..=max_actions);
    TabularMdp::random(rng, ns, na, gamma).unwrap()
}
