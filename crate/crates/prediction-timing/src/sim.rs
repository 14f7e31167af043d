//! Monte Carlo machinery: walk sampling, stopping policies, reward
//! statistics, tail frequencies, and the quality-weighted market scenario.
//!
//! Everything is deterministic given a seed. Paths are generated by a
//! counter-based generator keyed as `(seed, path_index)`, so path `i` is
//! the same regardless of how many paths run, in what order, or on how
//! many threads. Aggregation is chunked: path-level results are reduced
//! within fixed 1024-path chunks and the chunk partials are folded in
//! index order, which keeps sums bit-identical across thread counts.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{lmsr_realized_reward, GaussianSpec};
use crate::solver::PolicyTable;

/// Paths per deterministic reduction chunk.
const CHUNK: usize = 1024;

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

// ---------------------------------------------------------------------------
// Walks
// ---------------------------------------------------------------------------

/// A standard Gaussian walk indexed by rounds remaining: with `t` rounds
/// left the position is the sum of the `t` unit noises still unresolved,
/// so `S_t ~ N(0, t)` and passing time peels terms off the sum. Stored as
/// prefix sums: `s[t - 1]` is `S_t`, observed in the order
/// `s[horizon - 1], ..., s[0]`.
#[derive(Debug, Clone)]
pub struct WalkPath {
    s: Vec<f64>,
}

impl WalkPath {
    pub fn sample(horizon: usize, seed: u64, path: u64) -> Self {
        let mut rng = path_rng(seed, path);
        let mut s = Vec::with_capacity(horizon);
        let mut acc = 0.0;
        for _ in 0..horizon {
            let z: f64 = StandardNormal.sample(&mut rng);
            acc += z;
            s.push(acc);
        }
        Self { s }
    }

    pub fn horizon(&self) -> usize {
        self.s.len()
    }

    /// Position with `t` rounds left.
    pub fn position(&self, t: usize) -> f64 {
        self.s[t - 1]
    }

    /// The stop payoff `S_t^2 / t` with `t` rounds left.
    pub fn ratio(&self, t: usize) -> f64 {
        let x = self.position(t);
        x * x / t as f64
    }
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

/// A rule for choosing the single prediction time while scanning a walk
/// from `t = T` down to `t = 1`.
#[derive(Debug, Clone, Copy)]
pub enum StoppingPolicy<'a> {
    /// Stop at the solved threshold: first `t` with `|S_t| >= theta(t)`.
    Optimal(&'a PolicyTable),
    /// Stop once `S_t^2 / t >= (1 - eps) 2 log log T`, the level the
    /// running maximum eventually reaches; needs `T > 16` so the level is
    /// positive and meaningful.
    FixedLil { eps: f64 },
    /// Predict immediately at `t = T`.
    Immediate,
    /// Hold out until the final round.
    Final,
    /// Pick the best ratio in hindsight; not implementable, pathwise
    /// dominates everything.
    Hindsight,
}

impl<'a> StoppingPolicy<'a> {
    pub fn id(&self) -> String {
        match self {
            StoppingPolicy::Optimal(_) => "optimal".into(),
            StoppingPolicy::FixedLil { eps } => format!("lil-{eps:.3}"),
            StoppingPolicy::Immediate => "immediate".into(),
            StoppingPolicy::Final => "final".into(),
            StoppingPolicy::Hindsight => "hindsight".into(),
        }
    }

    pub fn validate(&self, horizon: usize) -> Result<()> {
        if horizon == 0 {
            return Err(Error::ZeroTime);
        }
        match self {
            StoppingPolicy::Optimal(table) => {
                if table.horizon() < horizon {
                    return Err(Error::TimeOutOfRange {
                        t: horizon,
                        horizon: table.horizon(),
                    });
                }
                Ok(())
            }
            StoppingPolicy::FixedLil { eps } => {
                if !(*eps > 0.0 && *eps < 1.0) {
                    return Err(Error::OutOfDomain {
                        what: "eps",
                        requirement: "within (0, 1)",
                        value: *eps,
                    });
                }
                if horizon <= 16 {
                    return Err(Error::HorizonTooSmall {
                        horizon,
                        detail: "the iterated-logarithm level needs T > 16",
                    });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Decide whether to stop with `t` rounds left at position `s_t`.
    /// The threshold policies always fire at `t = 1` (`theta(1) = 0`).
    fn stops(&self, t: usize, s_t: f64, horizon: usize, lil_level: f64) -> bool {
        match self {
            StoppingPolicy::Optimal(table) => {
                s_t.abs() >= table.thetas()[t - 1]
            }
            StoppingPolicy::FixedLil { .. } => t == 1 || s_t * s_t / t as f64 >= lil_level,
            StoppingPolicy::Immediate => t == horizon,
            StoppingPolicy::Final => t == 1,
            StoppingPolicy::Hindsight => unreachable!("hindsight scans the whole path"),
        }
    }
}

/// Stop time and collected ratio for one walk under one policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub stop_t: u32,
    pub reward: f64,
}

/// Scan one walk with a policy and collect `S_t^2 / t` at its stop time.
pub fn run_policy(policy: &StoppingPolicy, path: &WalkPath) -> PathOutcome {
    let horizon = path.horizon();
    if let StoppingPolicy::Hindsight = policy {
        let mut best = PathOutcome {
            stop_t: horizon as u32,
            reward: path.ratio(horizon),
        };
        for t in (1..horizon).rev() {
            let r = path.ratio(t);
            if r > best.reward {
                best = PathOutcome {
                    stop_t: t as u32,
                    reward: r,
                };
            }
        }
        return best;
    }
    let lil_level = match policy {
        StoppingPolicy::FixedLil { eps } => {
            (1.0 - eps) * 2.0 * (horizon as f64).ln().ln()
        }
        _ => 0.0,
    };
    for t in (1..=horizon).rev() {
        if policy.stops(t, path.position(t), horizon, lil_level) {
            return PathOutcome {
                stop_t: t as u32,
                reward: path.ratio(t),
            };
        }
    }
    // theta(1) = 0 makes t = 1 a certain stop; belt and braces
    PathOutcome {
        stop_t: 1,
        reward: path.ratio(1),
    }
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// Mean/spread summary of one policy over a path ensemble.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub policy: String,
    pub horizon: usize,
    pub n_paths: u64,
    pub mean_reward: f64,
    pub stderr: f64,
    pub mean_stop_time: f64,
    pub stop_histogram: BTreeMap<u32, u64>,
}

struct Partial {
    sum: f64,
    sum_sq: f64,
    sum_stop: f64,
    hist: BTreeMap<u32, u64>,
}

impl Partial {
    fn new() -> Self {
        Partial {
            sum: 0.0,
            sum_sq: 0.0,
            sum_stop: 0.0,
            hist: BTreeMap::new(),
        }
    }

    fn push(&mut self, o: PathOutcome) {
        self.sum += o.reward;
        self.sum_sq += o.reward * o.reward;
        self.sum_stop += o.stop_t as f64;
        *self.hist.entry(o.stop_t).or_insert(0) += 1;
    }

    fn merge(mut self, other: Partial) -> Partial {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.sum_stop += other.sum_stop;
        for (k, v) in other.hist {
            *self.hist.entry(k).or_insert(0) += v;
        }
        self
    }
}

fn summarize(policy: &StoppingPolicy, horizon: usize, n_paths: u64, p: Partial) -> SimResult {
    let n = n_paths as f64;
    let mean = p.sum / n;
    let var = (p.sum_sq / n - mean * mean).max(0.0);
    SimResult {
        policy: policy.id(),
        horizon,
        n_paths,
        mean_reward: mean,
        stderr: (var / n).sqrt(),
        mean_stop_time: p.sum_stop / n,
        stop_histogram: p.hist,
    }
}

/// Outcomes of one policy over paths `0..n_paths` of the `(seed)` ensemble,
/// reduced deterministically. Policies given the same seed see the same
/// walks, so differences between policies are paired.
pub fn monte_carlo(
    policy: &StoppingPolicy,
    horizon: usize,
    n_paths: u64,
    seed: u64,
) -> Result<SimResult> {
    policy.validate(horizon)?;
    let chunks: Vec<u64> = (0..n_paths.div_ceil(CHUNK as u64)).collect();
    let partials: Vec<Partial> = chunks
        .par_iter()
        .map(|&chunk| {
            let lo = chunk * CHUNK as u64;
            let hi = ((chunk + 1) * CHUNK as u64).min(n_paths);
            let mut p = Partial::new();
            for i in lo..hi {
                let path = WalkPath::sample(horizon, seed, i);
                p.push(run_policy(policy, &path));
            }
            p
        })
        .collect();
    let total = partials.into_iter().fold(Partial::new(), Partial::merge);
    Ok(summarize(policy, horizon, n_paths, total))
}

/// Like [`monte_carlo`] but also returns the per-path outcomes in path
/// order, for paired comparisons.
pub fn monte_carlo_detailed(
    policy: &StoppingPolicy,
    horizon: usize,
    n_paths: u64,
    seed: u64,
) -> Result<(SimResult, Vec<PathOutcome>)> {
    policy.validate(horizon)?;
    let outcomes: Vec<PathOutcome> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let path = WalkPath::sample(horizon, seed, i);
            run_policy(policy, &path)
        })
        .collect();
    let mut p = Partial::new();
    for &o in &outcomes {
        p.push(o);
    }
    Ok((summarize(policy, horizon, n_paths, p), outcomes))
}

// ---------------------------------------------------------------------------
// Tail frequencies
// ---------------------------------------------------------------------------

/// Empirical `Pr[|S_t| >= lambda sqrt(t)]` for one `(t, lambda)` cell.
#[derive(Debug, Clone)]
pub struct TailCell {
    pub t: usize,
    pub lambda: f64,
    pub fraction: f64,
    pub stderr: f64,
}

/// Empirical scaled-tail frequencies over a shared ensemble: one set of
/// walks of length `max t`, read at every requested `t`.
pub fn tail_stats(ts: &[usize], lambdas: &[f64], n_paths: u64, seed: u64) -> Result<Vec<TailCell>> {
    let max_t = *ts.iter().max().ok_or(Error::ZeroTime)?;
    if ts.contains(&0) {
        return Err(Error::ZeroTime);
    }
    let cells: Vec<(usize, f64)> = ts
        .iter()
        .flat_map(|&t| lambdas.iter().map(move |&l| (t, l)))
        .collect();
    let chunks: Vec<u64> = (0..n_paths.div_ceil(CHUNK as u64)).collect();
    let partials: Vec<Vec<u64>> = chunks
        .par_iter()
        .map(|&chunk| {
            let lo = chunk * CHUNK as u64;
            let hi = ((chunk + 1) * CHUNK as u64).min(n_paths);
            let mut counts = vec![0u64; cells.len()];
            for i in lo..hi {
                let path = WalkPath::sample(max_t, seed, i);
                for (k, &(t, lambda)) in cells.iter().enumerate() {
                    if path.position(t).abs() >= lambda * (t as f64).sqrt() {
                        counts[k] += 1;
                    }
                }
            }
            counts
        })
        .collect();
    let mut counts = vec![0u64; cells.len()];
    for p in partials {
        for (k, v) in p.into_iter().enumerate() {
            counts[k] += v;
        }
    }
    let n = n_paths as f64;
    Ok(cells
        .into_iter()
        .zip(counts)
        .map(|((t, lambda), c)| {
            let f = c as f64 / n;
            TailCell {
                t,
                lambda,
                fraction: f,
                stderr: (f * (1.0 - f) / n).sqrt(),
            }
        })
        .collect())
}

/// How often the hindsight maximum of `S_t^2/t` clears the
/// iterated-logarithm level `(1 - eps) 2 log log T`.
#[derive(Debug, Clone)]
pub struct HindsightLevelReport {
    pub horizon: usize,
    pub eps: f64,
    pub level: f64,
    pub fraction_above: f64,
    pub stderr: f64,
}

pub fn hindsight_fraction_above(
    horizon: usize,
    eps: f64,
    n_paths: u64,
    seed: u64,
) -> Result<HindsightLevelReport> {
    if horizon <= 16 {
        return Err(Error::HorizonTooSmall {
            horizon,
            detail: "the iterated-logarithm level needs T > 16",
        });
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfDomain {
            what: "eps",
            requirement: "within (0, 1)",
            value: eps,
        });
    }
    let level = (1.0 - eps) * 2.0 * (horizon as f64).ln().ln();
    let chunks: Vec<u64> = (0..n_paths.div_ceil(CHUNK as u64)).collect();
    let count: u64 = chunks
        .par_iter()
        .map(|&chunk| {
            let lo = chunk * CHUNK as u64;
            let hi = ((chunk + 1) * CHUNK as u64).min(n_paths);
            let mut c = 0u64;
            for i in lo..hi {
                let path = WalkPath::sample(horizon, seed, i);
                let best = run_policy(&StoppingPolicy::Hindsight, &path).reward;
                if best >= level {
                    c += 1;
                }
            }
            c
        })
        .sum();
    let f = count as f64 / n_paths as f64;
    Ok(HindsightLevelReport {
        horizon,
        eps,
        level,
        fraction_above: f,
        stderr: (f * (1.0 - f) / n_paths as f64).sqrt(),
    })
}

// ---------------------------------------------------------------------------
// One-step conditional ratio
// ---------------------------------------------------------------------------

/// Exact one-step drift of the stop payoff:
/// `E[S_{t-1}^2/(t-1) - S_t^2/t | S_t = c] = (1 - c^2/t)/t`,
/// positive below `|c| = sqrt(t)`, zero on it, negative above.
pub fn ratio_drift(t: usize, c: f64) -> Result<f64> {
    if t < 2 {
        return Err(Error::HorizonTooSmall {
            horizon: t,
            detail: "the one-step drift needs t >= 2",
        });
    }
    let tf = t as f64;
    Ok((1.0 - c * c / tf) / tf)
}

/// Monte Carlo mean of `S_{t-1}^2/(t-1) - c^2/t` with `S_{t-1}` drawn from
/// its exact conditional law given `S_t = c`.
#[derive(Debug, Clone)]
pub struct DriftEstimate {
    pub t: usize,
    pub c: f64,
    pub mean: f64,
    pub stderr: f64,
    pub exact: f64,
}

pub fn conditional_ratio_mean(t: usize, c: f64, n_paths: u64, seed: u64) -> Result<DriftEstimate> {
    let exact = ratio_drift(t, c)?;
    let tf = t as f64;
    let shrink = (tf - 1.0) / tf;
    let spread = shrink.sqrt();
    let base = c * c / tf;
    let chunks: Vec<u64> = (0..n_paths.div_ceil(CHUNK as u64)).collect();
    let partials: Vec<(f64, f64)> = chunks
        .par_iter()
        .map(|&chunk| {
            let lo = chunk * CHUNK as u64;
            let hi = ((chunk + 1) * CHUNK as u64).min(n_paths);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for i in lo..hi {
                let mut rng = path_rng(seed, i);
                let z: f64 = StandardNormal.sample(&mut rng);
                let s_prev = shrink * c + spread * z;
                let d = s_prev * s_prev / (tf - 1.0) - base;
                sum += d;
                sum_sq += d * d;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = partials
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let n = n_paths as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(DriftEstimate {
        t,
        c,
        mean,
        stderr: (var / n).sqrt(),
        exact,
    })
}

// ---------------------------------------------------------------------------
// Market scenario
// ---------------------------------------------------------------------------

/// Standard deviation of the scenario's initial outcome draw. Rewards are
/// invariant to it; a large value keeps accidental absolute-coordinate
/// assumptions visible in tests.
pub const SCENARIO_SIGMA0: f64 = 1000.0;

/// One trading path of the quality-`q` expert scenario.
///
/// The outcome is `X = x0 + sum_i (a_i + b_i)`: each round contributes unit
/// variance, split into a share `a_i ~ N(0, q)` the expert foresees and a
/// share `b_i ~ N(0, 1-q)` nobody does. With `t` rounds left, the public
/// record holds `x0` and the full increments of the elapsed rounds, so the
/// market quotes `x_t` = public sum with variance `t`; the expert adds the
/// foreseen `a`-mass of the remaining rounds, `y_t = x_t + sum of future
/// a_i`. The disagreement `y - x` is `N(0, q t)`, the scaled state
/// `(y - x)/sqrt(q)` follows exactly the canonical walk, and the residual
/// `X - y_t` is `N(0, (1-q) t)`.
#[derive(Debug, Clone)]
pub struct ScenarioPath {
    pub quality: f64,
    pub outcome: f64,
    /// Market estimates indexed like [`WalkPath`]: entry `t - 1` is the
    /// estimate with `t` rounds left.
    pub market: Vec<f64>,
    pub expert: Vec<f64>,
}

impl ScenarioPath {
    pub fn sample(horizon: usize, quality: f64, seed: u64, path: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::ZeroTime);
        }
        if !(quality > 0.0 && quality < 1.0) {
            return Err(Error::QualityOutOfRange(quality));
        }
        let mut rng = path_rng(seed, path);
        let x0 = {
            let z: f64 = StandardNormal.sample(&mut rng);
            SCENARIO_SIGMA0 * z
        };
        let sq = quality.sqrt();
        let sb = (1.0 - quality).sqrt();
        let steps: Vec<(f64, f64)> = (0..horizon)
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                (sq * a, sb * b)
            })
            .collect();
        let total_a: f64 = steps.iter().map(|&(a, _)| a).sum();
        let outcome = x0 + steps.iter().map(|&(a, b)| a + b).sum::<f64>();

        // forward stage k = 0..horizon: k rounds public, t = horizon - k
        let mut market = vec![0.0; horizon];
        let mut expert = vec![0.0; horizon];
        let mut seen_a = 0.0;
        let mut seen_b = 0.0;
        for (k, &(a, b)) in steps.iter().enumerate() {
            let t = horizon - k;
            let x_t = x0 + seen_a + seen_b;
            let y_t = x_t + (total_a - seen_a);
            market[t - 1] = x_t;
            expert[t - 1] = y_t;
            seen_a += a;
            seen_b += b;
        }
        Ok(ScenarioPath {
            quality,
            outcome,
            market,
            expert,
        })
    }

    pub fn horizon(&self) -> usize {
        self.market.len()
    }

    /// Scaled disagreement `(y_t - x_t)/sqrt(q)`, distributed like the
    /// canonical walk position at `t`.
    pub fn canonical_position(&self, t: usize) -> f64 {
        (self.expert[t - 1] - self.market[t - 1]) / self.quality.sqrt()
    }
}

/// Result of running the solved threshold rule on one scenario path:
/// prediction time, the market-scoring reward actually collected against
/// the realized outcome, and the expected reward of the posted update.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioOutcome {
    pub stop_t: u32,
    pub realized_reward: f64,
    pub expected_reward: f64,
}

/// Trade once on one scenario path: predict at the first `t` where
/// `(y - x)^2 >= q theta(t)^2`, replacing the market's `N(x_t, t)` quote
/// with `N(y_t, (1 - q) t)`.
pub fn run_scenario(table: &PolicyTable, path: &ScenarioPath) -> Result<ScenarioOutcome> {
    let horizon = path.horizon();
    if table.horizon() < horizon {
        return Err(Error::TimeOutOfRange {
            t: horizon,
            horizon: table.horizon(),
        });
    }
    let q = path.quality;
    let thetas = table.thetas();
    for t in (1..=horizon).rev() {
        let x = path.market[t - 1];
        let y = path.expert[t - 1];
        let d = y - x;
        let theta = thetas[t - 1];
        if d * d >= q * theta * theta {
            let tf = t as f64;
            let prior = GaussianSpec::new(x, tf)?;
            let posterior = GaussianSpec::new(y, (1.0 - q) * tf)?;
            return Ok(ScenarioOutcome {
                stop_t: t as u32,
                realized_reward: lmsr_realized_reward(prior, posterior, path.outcome),
                expected_reward: d * d / (2.0 * tf) - (q + (1.0 - q).ln()) / 2.0,
            });
        }
    }
    unreachable!("theta(1) = 0 forces a prediction by t = 1");
}

/// Paired ensemble summary of the scenario.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub horizon: usize,
    pub quality: f64,
    pub n_paths: u64,
    pub mean_realized: f64,
    pub stderr_realized: f64,
    pub mean_expected: f64,
    pub stderr_expected: f64,
    /// Mean of realized minus expected on the same path, with its own
    /// standard error; consistency demands it straddle zero.
    pub mean_diff: f64,
    pub stderr_diff: f64,
    pub mean_stop_time: f64,
    /// The quality-only part of the reward, `-(q + log(1-q))/2`, collected
    /// at any prediction time.
    pub quality_floor: f64,
}

pub fn scenario_monte_carlo(
    table: &PolicyTable,
    horizon: usize,
    quality: f64,
    n_paths: u64,
    seed: u64,
) -> Result<ScenarioReport> {
    if table.horizon() < horizon {
        return Err(Error::TimeOutOfRange {
            t: horizon,
            horizon: table.horizon(),
        });
    }
    if !(quality > 0.0 && quality < 1.0) {
        return Err(Error::QualityOutOfRange(quality));
    }
    let chunks: Vec<u64> = (0..n_paths.div_ceil(CHUNK as u64)).collect();
    let partials: Vec<[f64; 7]> = chunks
        .par_iter()
        .map(|&chunk| {
            let lo = chunk * CHUNK as u64;
            let hi = ((chunk + 1) * CHUNK as u64).min(n_paths);
            let mut acc = [0.0f64; 7];
            for i in lo..hi {
                let path = ScenarioPath::sample(horizon, quality, seed, i)
                    .expect("validated arguments");
                let o = run_scenario(table, &path).expect("validated horizon");
                let d = o.realized_reward - o.expected_reward;
                acc[0] += o.realized_reward;
                acc[1] += o.realized_reward * o.realized_reward;
                acc[2] += o.expected_reward;
                acc[3] += o.expected_reward * o.expected_reward;
                acc[4] += d;
                acc[5] += d * d;
                acc[6] += o.stop_t as f64;
            }
            acc
        })
        .collect();
    let mut a = [0.0f64; 7];
    for p in partials {
        for (k, v) in p.into_iter().enumerate() {
            a[k] += v;
        }
    }
    let n = n_paths as f64;
    let moments = |s: f64, s2: f64| {
        let m = s / n;
        (m, ((s2 / n - m * m).max(0.0) / n).sqrt())
    };
    let (mean_realized, stderr_realized) = moments(a[0], a[1]);
    let (mean_expected, stderr_expected) = moments(a[2], a[3]);
    let (mean_diff, stderr_diff) = moments(a[4], a[5]);
    Ok(ScenarioReport {
        horizon,
        quality,
        n_paths,
        mean_realized,
        stderr_realized,
        mean_expected,
        stderr_expected,
        mean_diff,
        stderr_diff,
        mean_stop_time: a[6] / n,
        quality_floor: -(quality + (1.0 - quality).ln()) / 2.0,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, SolverConfig};

    fn small_table(horizon: usize) -> PolicyTable {
        let cfg = SolverConfig::with_grid(horizon, 0.1, 0.01).unwrap();
        solve(&cfg).unwrap()
    }

    #[test]
    fn paths_are_reproducible_and_independent_of_ensemble_size() {
        let a = WalkPath::sample(50, 7, 3);
        let b = WalkPath::sample(50, 7, 3);
        assert_eq!(a.s, b.s);
        let c = WalkPath::sample(50, 8, 3);
        assert!(a.s != c.s, "different seeds should differ");
        let d = WalkPath::sample(50, 7, 4);
        assert!(a.s != d.s, "different path indices should differ");
    }

    #[test]
    fn walk_indexing_matches_time_remaining() {
        let p = WalkPath::sample(10, 1, 0);
        assert_eq!(p.horizon(), 10);
        // regenerate the raw noise stream: S_t is the sum of t draws, so
        // position(1) is the first draw and position(10) the full sum
        let mut rng = path_rng(1, 0);
        let zs: Vec<f64> = (0..10).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut acc = 0.0;
        for (k, &z) in zs.iter().enumerate() {
            acc += z;
            assert_eq!(p.position(k + 1), acc, "prefix sum mismatch at t = {}", k + 1);
        }
        assert_eq!(p.position(1), zs[0]);
        assert_eq!(p.ratio(4), p.position(4).powi(2) / 4.0);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let r1 = monte_carlo(&StoppingPolicy::Final, 20, 2500, 42).unwrap();
        let r2 = monte_carlo(&StoppingPolicy::Final, 20, 2500, 42).unwrap();
        assert_eq!(r1.mean_reward.to_bits(), r2.mean_reward.to_bits());
        assert_eq!(r1.stderr.to_bits(), r2.stderr.to_bits());
        assert_eq!(r1.stop_histogram, r2.stop_histogram);
    }

    #[test]
    fn trivial_policies_have_unit_mean() {
        // S_T^2/T and S_1^2 both have mean exactly 1
        for policy in [StoppingPolicy::Immediate, StoppingPolicy::Final] {
            let r = monte_carlo(&policy, 50, 40_000, 11).unwrap();
            assert!(
                (r.mean_reward - 1.0).abs() < 4.0 * r.stderr + 0.01,
                "{}: mean {} stderr {}",
                r.policy,
                r.mean_reward,
                r.stderr
            );
        }
        let r = monte_carlo(&StoppingPolicy::Immediate, 50, 1000, 11).unwrap();
        assert_eq!(r.mean_stop_time, 50.0);
        assert_eq!(r.stop_histogram.len(), 1);
        let r = monte_carlo(&StoppingPolicy::Final, 50, 1000, 11).unwrap();
        assert_eq!(r.mean_stop_time, 1.0);
    }

    #[test]
    fn hindsight_dominates_pathwise() {
        let table = small_table(40);
        let n = 4000;
        let (_, hind) = monte_carlo_detailed(&StoppingPolicy::Hindsight, 40, n, 5).unwrap();
        for policy in [
            StoppingPolicy::Optimal(&table),
            StoppingPolicy::Immediate,
            StoppingPolicy::Final,
        ] {
            let (_, outs) = monte_carlo_detailed(&policy, 40, n, 5).unwrap();
            for (i, (h, o)) in hind.iter().zip(&outs).enumerate() {
                assert!(
                    h.reward >= o.reward - 1e-12,
                    "hindsight beaten on path {i} by {}",
                    policy.id()
                );
            }
        }
    }

    #[test]
    fn optimal_threshold_beats_fixed_endpoints() {
        let table = small_table(60);
        let n = 30_000;
        let opt = monte_carlo(&StoppingPolicy::Optimal(&table), 60, n, 3).unwrap();
        let imm = monte_carlo(&StoppingPolicy::Immediate, 60, n, 3).unwrap();
        let fin = monte_carlo(&StoppingPolicy::Final, 60, n, 3).unwrap();
        let slack = 3.0 * (opt.stderr + imm.stderr);
        assert!(opt.mean_reward > imm.mean_reward - slack);
        assert!(opt.mean_reward > fin.mean_reward - slack);
        // and decisively above 1 at this horizon
        assert!(opt.mean_reward > 1.5, "optimal mean {}", opt.mean_reward);
    }

    #[test]
    fn policy_stop_times_are_sane() {
        let table = small_table(30);
        let r = monte_carlo(&StoppingPolicy::Optimal(&table), 30, 5000, 9).unwrap();
        assert!(r.mean_stop_time >= 1.0 && r.mean_stop_time <= 30.0);
        assert!(r.stop_histogram.values().sum::<u64>() == 5000);
        assert!(r.stop_histogram.keys().all(|&t| (1..=30).contains(&t)));
    }

    #[test]
    fn policy_validation() {
        let table = small_table(10);
        assert!(StoppingPolicy::Optimal(&table).validate(10).is_ok());
        assert!(StoppingPolicy::Optimal(&table).validate(11).is_err());
        assert!(StoppingPolicy::FixedLil { eps: 0.2 }.validate(16).is_err());
        assert!(StoppingPolicy::FixedLil { eps: 0.2 }.validate(17).is_ok());
        assert!(StoppingPolicy::FixedLil { eps: 1.0 }.validate(100).is_err());
        assert!(StoppingPolicy::Final.validate(0).is_err());
    }

    #[test]
    fn policy_ids() {
        let table = small_table(5);
        assert_eq!(StoppingPolicy::Optimal(&table).id(), "optimal");
        assert_eq!(StoppingPolicy::FixedLil { eps: 0.2 }.id(), "lil-0.200");
        assert_eq!(StoppingPolicy::Immediate.id(), "immediate");
        assert_eq!(StoppingPolicy::Final.id(), "final");
        assert_eq!(StoppingPolicy::Hindsight.id(), "hindsight");
    }

    #[test]
    fn tail_stats_match_analytic_band() {
        use crate::model::normal_tail_bounds;
        let cells = tail_stats(&[25], &[0.5, 1.0, 2.0], 40_000, 17).unwrap();
        for cell in cells {
            let (lo, hi) = normal_tail_bounds(cell.lambda).unwrap();
            assert!(
                cell.fraction >= lo - 5.0 * cell.stderr - 1e-9,
                "fraction {} below floor {lo} at lambda {}",
                cell.fraction,
                cell.lambda
            );
            assert!(
                cell.fraction <= hi + 5.0 * cell.stderr,
                "fraction {} above cap {hi} at lambda {}",
                cell.fraction,
                cell.lambda
            );
        }
    }

    #[test]
    fn drift_closed_form_and_sampler_agree() {
        // sign structure, including the exactly-zero case at c^2 = t
        assert!(ratio_drift(4, 1.0).unwrap() > 0.0);
        assert_eq!(ratio_drift(4, 2.0).unwrap(), 0.0);
        assert!(ratio_drift(4, 3.0).unwrap() < 0.0);
        assert!(ratio_drift(1, 0.0).is_err());

        let est = conditional_ratio_mean(10, 2.0, 200_000, 23).unwrap();
        assert!(
            (est.mean - est.exact).abs() < 4.0 * est.stderr,
            "mean {} exact {} stderr {}",
            est.mean,
            est.exact,
            est.stderr
        );
        assert!((est.exact - (1.0 - 0.4) / 10.0).abs() < 1e-15);
    }

    #[test]
    fn scenario_disagreement_is_canonical_walk() {
        // With q fixed, (y - x)/sqrt(q) at time t has variance t and the
        // outcome-coordinate scale cancels.
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let n = 20_000;
        let t_probe = 9;
        for i in 0..n {
            let p = ScenarioPath::sample(12, 0.3, 99, i).unwrap();
            let s = p.canonical_position(t_probe);
            sum += s;
            sum_sq += s * s;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let se_var = (2.0 * (t_probe as f64).powi(2) / n as f64).sqrt();
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!(
            (var - t_probe as f64).abs() < 5.0 * se_var,
            "var {var} expected {t_probe}"
        );
    }

    #[test]
    fn scenario_expert_residual_has_unforeseen_variance() {
        // at t = 1 only the final round is open; the expert has its a-share,
        // so X - y_1 is that round's b-share, N(0, 1 - q)
        let mut sum_sq = 0.0;
        let n = 5000;
        for i in 0..n {
            let p = ScenarioPath::sample(8, 0.4, 123, i).unwrap();
            let gap = p.outcome - p.expert[0];
            sum_sq += gap * gap;
        }
        let mean_sq = sum_sq / n as f64;
        assert!(
            (mean_sq - 0.6).abs() < 0.05,
            "residual variance {mean_sq}, expected 1 - q = 0.6"
        );
    }

    #[test]
    fn scenario_realized_matches_expected_in_mean() {
        let table = small_table(30);
        let rep = scenario_monte_carlo(&table, 30, 0.5, 30_000, 31).unwrap();
        assert!(
            rep.mean_diff.abs() < 4.0 * rep.stderr_diff,
            "paired diff {} stderr {}",
            rep.mean_diff,
            rep.stderr_diff
        );
        // reward beats the immediate-prediction floor on average
        assert!(rep.mean_expected > rep.quality_floor);
        assert!(rep.mean_stop_time > 1.0 && rep.mean_stop_time < 30.0);
    }

    #[test]
    fn scenario_rejects_bad_arguments() {
        let table = small_table(5);
        assert!(ScenarioPath::sample(0, 0.5, 1, 0).is_err());
        assert!(ScenarioPath::sample(5, 0.0, 1, 0).is_err());
        assert!(ScenarioPath::sample(5, 1.0, 1, 0).is_err());
        let p = ScenarioPath::sample(6, 0.5, 1, 0).unwrap();
        assert!(run_scenario(&table, &p).is_err());
        assert!(scenario_monte_carlo(&table, 6, 0.5, 10, 1).is_err());
        assert!(scenario_monte_carlo(&table, 5, 1.5, 10, 1).is_err());
    }

    #[test]
    fn detailed_and_summary_paths_agree() {
        let (summary, outs) = monte_carlo_detailed(&StoppingPolicy::Final, 15, 3000, 77).unwrap();
        let plain = monte_carlo(&StoppingPolicy::Final, 15, 3000, 77).unwrap();
        assert_eq!(outs.len(), 3000);
        assert!((summary.mean_reward - plain.mean_reward).abs() < 1e-12);
        let manual: f64 = outs.iter().map(|o| o.reward).sum::<f64>() / 3000.0;
        assert!((manual - plain.mean_reward).abs() < 1e-9);
    }
}
