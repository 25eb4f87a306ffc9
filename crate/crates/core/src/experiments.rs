//! Desk-scale experiments: bandit sparsity sweeps, the q-max bound table and
//! the gridworld performance-bound sweep.
//!
//! CSV column order per sweep kind:
//!
//! | kind              | columns                                                        |
//! |-------------------|----------------------------------------------------------------|
//! | `bandit`          | `q, alpha, support_size, qmax_value, p0, p1, ...`              |
//! | `gridworld-bounds`| `q, alpha, J_opt, J_tsallis, lower_bound, entropy_bound`        |
//! | `qmax-bounds`     | `q, c, qmax, max, upper_bound`                                 |
//!
//! Floats are written with the shortest representation that parses back to
//! the same bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{discounted_return, TabularMdp};
use crate::qmath::{max_entropy, EntropicIndex};
use crate::qmax::{q_max, q_max_with_coefficient};
use crate::solvers::{standard_value_iteration, tsallis_value_iteration, SolverConfig};

/// Cell palette of the default gridworld.
pub const WALL_REWARD: f64 = -0.5;
pub const GOAL_REWARD: f64 = 2.0;

/// Canonical 8-action bandit profile. Distinct rewards with a top gap larger
/// than `q/(q-1)` at `q = 100`, so the sweep ends on a deterministic policy.
pub const BANDIT8_REWARDS: [f64; 8] = [0.4, 1.1, 0.0, 2.8, 0.8, 1.4, 0.2, 1.6];

/// Entropic indices swept by the bandit experiment.
pub const BANDIT_Q_VALUES: [f64; 8] = [1.0, 1.2, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0];

/// Tolerance on the bound orderings.
pub const BOUND_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveSet {
    /// Up, down, left, right.
    Four,
    /// Up, down, left, right, stay.
    Five,
}

impl MoveSet {
    pub fn n_actions(self) -> usize {
        match self {
            MoveSet::Four => 4,
            MoveSet::Five => 5,
        }
    }

    fn delta(self, action: usize) -> (i64, i64) {
        match action {
            0 => (0, -1),
            1 => (0, 1),
            2 => (-1, 0),
            3 => (1, 0),
            _ => (0, 0),
        }
    }
}

/// A rectangular gridworld. Cell `(x, y)` is state `y * width + x`.
///
/// Moves that would leave the grid keep the agent in place. With probability
/// `slip_probability` the executed move is drawn uniformly from the move set
/// instead of the intended one. Entering a cell pays that cell's reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorldSpec {
    pub width: usize,
    pub height: usize,
    /// Row-major rewards, `cell_rewards[y][x]`.
    pub cell_rewards: Vec<Vec<f64>>,
    pub moves: MoveSet,
    pub slip_probability: f64,
    pub discount: f64,
    /// Start distribution over cells, row-major.
    pub start_distribution: Vec<f64>,
}

impl GridWorldSpec {
    /// 5x5 grid with the goal in the bottom-right corner behind an L-shaped
    /// wall of three penalty cells; the agent starts in the top-left corner.
    pub fn default_scenario() -> Self {
        let (w, h) = (5, 5);
        let mut cells = vec![vec![0.0; w]; h];
        cells[4][4] = GOAL_REWARD;
        cells[3][3] = WALL_REWARD;
        cells[3][4] = WALL_REWARD;
        cells[4][3] = WALL_REWARD;
        let mut start = vec![0.0; w * h];
        start[0] = 1.0;
        GridWorldSpec {
            width: w,
            height: h,
            cell_rewards: cells,
            moves: MoveSet::Four,
            slip_probability: 0.1,
            discount: 0.9,
            start_distribution: start,
        }
    }

    pub fn n_states(&self) -> usize {
        self.width * self.height
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("gridworld: {msg}")));
        if self.width == 0 || self.height == 0 {
            return bad("grid must be at least 1x1".into());
        }
        if self.cell_rewards.len() != self.height
            || self.cell_rewards.iter().any(|row| row.len() != self.width)
        {
            return bad(format!("cell_rewards must be {}x{}", self.height, self.width));
        }
        if self.cell_rewards.iter().flatten().any(|r| !r.is_finite()) {
            return bad("cell rewards must be finite".into());
        }
        if !(0.0..1.0).contains(&self.slip_probability) {
            return bad(format!("slip probability {} outside [0, 1)", self.slip_probability));
        }
        if self.start_distribution.len() != self.n_states() {
            return bad(format!("start distribution needs {} entries", self.n_states()));
        }
        Ok(())
    }

    fn step(&self, state: usize, action: usize) -> usize {
        let (x, y) = ((state % self.width) as i64, (state / self.width) as i64);
        let (dx, dy) = self.moves.delta(action);
        let (nx, ny) = (x + dx, y + dy);
        if nx < 0 || ny < 0 || nx >= self.width as i64 || ny >= self.height as i64 {
            state
        } else {
            ny as usize * self.width + nx as usize
        }
    }
}

/// Tabular MDP for a gridworld spec.
pub fn build_gridworld(spec: &GridWorldSpec) -> Result<TabularMdp> {
    spec.validate()?;
    let ns = spec.n_states();
    let na = spec.moves.n_actions();
    let mut transition = vec![0.0; ns * na * ns];
    let mut reward = vec![0.0; ns * na * ns];
    let slip_each = spec.slip_probability / na as f64;
    for s in 0..ns {
        for a in 0..na {
            let base = (s * na + a) * ns;
            transition[base + spec.step(s, a)] += 1.0 - spec.slip_probability;
            if slip_each > 0.0 {
                for b in 0..na {
                    transition[base + spec.step(s, b)] += slip_each;
                }
            }
            for t in 0..ns {
                reward[base + t] = spec.cell_rewards[t / spec.width][t % spec.width];
            }
        }
    }
    TabularMdp::new(ns, na, transition, reward, spec.discount, spec.start_distribution.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditPoint {
    pub q: f64,
    pub alpha: f64,
    pub support_size: usize,
    pub qmax_value: f64,
    pub policy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridBoundPoint {
    pub q: f64,
    pub alpha: f64,
    /// `J(pi*)` of the standard MDP, the upper bound.
    pub j_opt: f64,
    /// Entropy-free return of the Tsallis-optimal policy.
    pub j_tsallis: f64,
    /// `J(pi*) + alpha (1 - gamma)^-1 ln_q(1/|A|)`.
    pub lower_bound: f64,
    /// Width of the bound, `alpha (1 - gamma)^-1 (-ln_q(1/|A|))`.
    pub entropy_bound: f64,
}

impl GridBoundPoint {
    pub fn sandwich_holds(&self, slack: f64) -> bool {
        self.lower_bound <= self.j_tsallis + slack && self.j_tsallis <= self.j_opt + slack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QMaxBoundPoint {
    pub q: f64,
    pub c: f64,
    pub qmax: f64,
    /// `max(c, 0)`, the lower bound.
    pub max: f64,
    /// `max(c, 0) - ln_q(1/2)`.
    pub upper_bound: f64,
}

/// Output of a sweep, one point per axis value in axis order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "points", rename_all = "kebab-case")]
pub enum SweepResult {
    Bandit(Vec<BanditPoint>),
    GridworldBounds(Vec<GridBoundPoint>),
    QmaxBounds(Vec<QMaxBoundPoint>),
}

fn parse_entropic(q: f64) -> Result<EntropicIndex> {
    EntropicIndex::new(q)
}

/// Optimal bandit policies for every `(q, alpha)` pair, q-major.
pub fn bandit_sweep(rewards: &[f64], q_values: &[f64], alpha_values: &[f64]) -> Result<SweepResult> {
    if rewards.is_empty() {
        return Err(Error::InvalidParameter("bandit needs at least one arm".into()));
    }
    let mut points = Vec::with_capacity(q_values.len() * alpha_values.len());
    for &qv in q_values {
        let q = parse_entropic(qv)?;
        for &alpha in alpha_values {
            let res = q_max_with_coefficient(rewards, q, alpha)?;
            points.push(BanditPoint {
                q: qv,
                alpha,
                support_size: res.support.len(),
                qmax_value: res.value,
                policy: res.policy.into_inner(),
            });
        }
    }
    Ok(SweepResult::Bandit(points))
}

/// Compares the standard optimum `J(pi*)` with the return of the
/// Tsallis-optimal policy for each `q` (entropy coefficient `alpha`).
pub fn theorem6_experiment_with(
    spec: &GridWorldSpec,
    q_values: &[f64],
    alpha: f64,
    config: &SolverConfig,
) -> Result<SweepResult> {
    let mdp = build_gridworld(spec)?;
    let greedy = standard_value_iteration(&mdp, config)?;
    let j_opt = discounted_return(&mdp, &greedy.policy)?;
    let horizon = 1.0 / (1.0 - mdp.discount());
    let mut points = Vec::with_capacity(q_values.len());
    for &qv in q_values {
        let q = parse_entropic(qv)?;
        let report = tsallis_value_iteration(&mdp, q, alpha, config)?;
        let j_tsallis = discounted_return(&mdp, &report.policy)?;
        let gap = alpha * horizon * max_entropy(mdp.n_actions(), q);
        points.push(GridBoundPoint {
            q: qv,
            alpha,
            j_opt,
            j_tsallis,
            lower_bound: j_opt - gap,
            entropy_bound: gap,
        });
    }
    Ok(SweepResult::GridworldBounds(points))
}

/// [`theorem6_experiment_with`] at `alpha = 1` and default tolerances.
pub fn theorem6_experiment(spec: &GridWorldSpec, q_values: &[f64]) -> Result<SweepResult> {
    theorem6_experiment_with(spec, q_values, 1.0, &SolverConfig::default())
}

/// Tabulates `q-max([c, 0])` with its bounds over `steps + 1` evenly spaced
/// values of `c` in `c_range`.
pub fn theorem1_experiment(c_range: (f64, f64), steps: usize, q_values: &[f64]) -> Result<SweepResult> {
    let (lo, hi) = c_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) || steps == 0 {
        return Err(Error::InvalidParameter(format!("bad c range [{lo}, {hi}] with {steps} steps")));
    }
    let mut points = Vec::with_capacity(q_values.len() * (steps + 1));
    for &qv in q_values {
        let q = parse_entropic(qv)?;
        for i in 0..=steps {
            let c = lo + (hi - lo) * i as f64 / steps as f64;
            let res = q_max(&[c, 0.0], q)?;
            let m = c.max(0.0);
            points.push(QMaxBoundPoint {
                q: qv,
                c,
                qmax: res.value,
                max: m,
                upper_bound: m + max_entropy(2, q),
            });
        }
    }
    Ok(SweepResult::QmaxBounds(points))
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn parse_f64(field: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Parse(format!("bad number {field:?}")))
}

impl SweepResult {
    pub fn kind(&self) -> &'static str {
        match self {
            SweepResult::Bandit(_) => "bandit",
            SweepResult::GridworldBounds(_) => "gridworld-bounds",
            SweepResult::QmaxBounds(_) => "qmax-bounds",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepResult::Bandit(p) => p.len(),
            SweepResult::GridworldBounds(p) => p.len(),
            SweepResult::QmaxBounds(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks the bound ordering at every point.
    pub fn bounds_hold(&self, slack: f64) -> bool {
        match self {
            SweepResult::Bandit(_) => true,
            SweepResult::GridworldBounds(points) => points.iter().all(|p| p.sandwich_holds(slack)),
            SweepResult::QmaxBounds(points) => points
                .iter()
                .all(|p| p.max <= p.qmax + slack && p.qmax <= p.upper_bound + slack),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn header(&self) -> Vec<String> {
        let fixed: &[&str] = match self {
            SweepResult::Bandit(_) => &["q", "alpha", "support_size", "qmax_value"],
            SweepResult::GridworldBounds(_) => {
                &["q", "alpha", "J_opt", "J_tsallis", "lower_bound", "entropy_bound"]
            }
            SweepResult::QmaxBounds(_) => &["q", "c", "qmax", "max", "upper_bound"],
        };
        let mut header: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
        if let SweepResult::Bandit(points) = self {
            let arms = points.first().map_or(0, |p| p.policy.len());
            header.extend((0..arms).map(|i| format!("p{i}")));
        }
        header
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        match self {
            SweepResult::Bandit(points) => {
                for p in points {
                    let mut rec = vec![fmt(p.q), fmt(p.alpha), p.support_size.to_string(), fmt(p.qmax_value)];
                    rec.extend(p.policy.iter().map(|&x| fmt(x)));
                    w.write_record(rec).expect("in-memory write");
                }
            }
            SweepResult::GridworldBounds(points) => {
                for p in points {
                    w.write_record([p.q, p.alpha, p.j_opt, p.j_tsallis, p.lower_bound, p.entropy_bound].map(fmt))
                        .expect("in-memory write");
                }
            }
            SweepResult::QmaxBounds(points) => {
                for p in points {
                    w.write_record([p.q, p.c, p.qmax, p.max, p.upper_bound].map(fmt))
                        .expect("in-memory write");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Parses CSV written by [`SweepResult::to_csv`]; the kind is recognized
    /// from the header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows: Vec<Vec<String>> = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(e.to_string()))?;
        let nums = |row: &[String]| -> Result<Vec<f64>> { row.iter().map(|f| parse_f64(f)).collect() };
        match header.get(2).map(String::as_str) {
            Some("support_size") => {
                let mut points = Vec::with_capacity(rows.len());
                for row in &rows {
                    let support_size = row[2]
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad support size {:?}", row[2])))?;
                    points.push(BanditPoint {
                        q: parse_f64(&row[0])?,
                        alpha: parse_f64(&row[1])?,
                        support_size,
                        qmax_value: parse_f64(&row[3])?,
                        policy: nums(&row[4..])?,
                    });
                }
                Ok(SweepResult::Bandit(points))
            }
            Some("J_opt") => rows
                .iter()
                .map(|row| {
                    let v = nums(row)?;
                    Ok(GridBoundPoint {
                        q: v[0],
                        alpha: v[1],
                        j_opt: v[2],
                        j_tsallis: v[3],
                        lower_bound: v[4],
                        entropy_bound: v[5],
                    })
                })
                .collect::<Result<_>>()
                .map(SweepResult::GridworldBounds),
            Some("qmax") => rows
                .iter()
                .map(|row| {
                    let v = nums(row)?;
                    Ok(QMaxBoundPoint { q: v[0], c: v[1], qmax: v[2], max: v[3], upper_bound: v[4] })
                })
                .collect::<Result<_>>()
                .map(SweepResult::QmaxBounds),
            _ => Err(Error::Parse(format!("unrecognized sweep header {header:?}"))),
        }
    }
}
