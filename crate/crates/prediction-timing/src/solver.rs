//! Backward dynamic program for the canonical stopping problem.
//!
//! A standard Gaussian walk `S_t` is observed from the horizon `T` down to
//! t = 1, and the observer stops once to collect `S_t^2 / t`. The value
//! function obeys
//!
//! ```text
//! psi_1(c) = c^2
//! psi_t(c) = max(c^2 / t, E[ psi_{t-1}(S_{t-1}) | S_t = c ])
//! ```
//!
//! where `S_{t-1} | S_t = c` is Gaussian with mean `c (t-1)/t` and variance
//! `(t-1)/t`. The continuation value is evaluated by a truncated
//! rectangle rule on a uniform grid, the stop region is exact, and the
//! optimal rule is a time-indexed threshold: stop as soon as
//! `|S_t| >= theta(t)`.
//!
//! [`solve`] sweeps each time slice outward from zero until stopping first
//! dominates, records `theta(t)`, the value at zero, and the expected
//! optimally-stopped ratio `Psi(t)`, and returns everything as a
//! [`PolicyTable`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SQRT_2PI;

/// Bisection refines a threshold bracket down to this fraction of a cell.
const REFINE_FRACTION: f64 = 1.0 / 16.0;

/// Threshold sweeps evaluate continuation values in blocks of this many grid
/// points; block boundaries are fixed so results never depend on thread
/// count.
const SWEEP_BLOCK: usize = 256;

/// Default ceiling on estimated inner-loop operations before [`solve`]
/// refuses a configuration as a capacity error.
pub const DEFAULT_WORK_LIMIT: u64 = 20_000_000_000;

/// Ceiling on stored grid bytes when `store_full_grid` is set.
const STORE_BYTE_LIMIT: u64 = 1_600_000_000;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Grid and accuracy parameters for one solve.
///
/// `gamma` is the cell width shared by the value grid and the quadrature
/// nodes; `h` is the half-width at which the Gaussian integrals are
/// truncated. [`SolverConfig::from_accuracy`] derives both from a target
/// total error `epsilon`; [`SolverConfig::with_grid`] accepts a user grid
/// for desk-scale horizons where the certified step is impractically fine,
/// in which case `certified` is false and accuracy should be judged by grid
/// halving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub horizon: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub h: f64,
    pub certified: bool,
    pub refine_theta: bool,
    pub store_full_grid: bool,
    pub work_limit: u64,
}

impl SolverConfig {
    /// Certified parameters meeting the `epsilon` total-error budget:
    /// `gamma = sqrt(epsilon) / (T log T log log T)` and
    /// `h = sqrt(6 log(2T/epsilon))`. Requires `T >= 3` so that
    /// `log log T > 0`.
    pub fn from_accuracy(horizon: usize, epsilon: f64) -> Result<Self> {
        let (gamma, h) = default_parameters(horizon, epsilon)?;
        Ok(SolverConfig {
            horizon,
            epsilon,
            gamma,
            h,
            certified: true,
            refine_theta: true,
            store_full_grid: false,
            work_limit: DEFAULT_WORK_LIMIT,
        })
    }

    /// User-chosen grid step with the default truncation width. The error
    /// budget is no longer certified; `epsilon` still sizes `h`.
    pub fn with_grid(horizon: usize, epsilon: f64, gamma: f64) -> Result<Self> {
        validate_horizon_epsilon(horizon, epsilon)?;
        if !gamma.is_finite() || gamma <= 0.0 || gamma > 1.0 {
            return Err(Error::OutOfDomain {
                what: "gamma",
                requirement: "within (0, 1]",
                value: gamma,
            });
        }
        let h = truncation_width(horizon, epsilon);
        Ok(SolverConfig {
            horizon,
            epsilon,
            gamma,
            h,
            certified: false,
            refine_theta: true,
            store_full_grid: false,
            work_limit: DEFAULT_WORK_LIMIT,
        })
    }

    pub fn validate(&self) -> Result<()> {
        validate_horizon_epsilon(self.horizon, self.epsilon)?;
        if !self.gamma.is_finite() || self.gamma <= 0.0 || self.gamma > 1.0 {
            return Err(Error::OutOfDomain {
                what: "gamma",
                requirement: "within (0, 1]",
                value: self.gamma,
            });
        }
        if !self.h.is_finite() || self.h <= 0.0 {
            return Err(Error::OutOfDomain {
                what: "h",
                requirement: "finite and > 0",
                value: self.h,
            });
        }
        Ok(())
    }

    /// Quadrature nodes per continuation evaluation (one side of zero).
    fn half_nodes(&self) -> usize {
        (self.h / self.gamma).floor() as usize
    }

    /// Crude upper estimate of inner-loop operations for a full solve, used
    /// only for the capacity refusal.
    fn estimated_ops(&self) -> u64 {
        let t = self.horizon as f64;
        let theta_proxy = if self.horizon >= 3 {
            (3.0 * t * t.ln().ln().max(1.0)).sqrt()
        } else {
            2.0
        };
        let sweep_evals = (2.0 / 3.0) * t * theta_proxy / self.gamma;
        let nodes = (2 * self.half_nodes() + 1) as f64;
        (sweep_evals * nodes).min(u64::MAX as f64) as u64
    }

    fn check_capacity(&self) -> Result<()> {
        let ops = self.estimated_ops();
        if ops > self.work_limit {
            return Err(Error::Capacity {
                detail: format!(
                    "estimated {ops} inner operations exceed the work limit {} \
                     (horizon {}, gamma {:.3e}, {} nodes per evaluation); \
                     pass a coarser gamma or raise work_limit",
                    self.work_limit,
                    self.horizon,
                    self.gamma,
                    2 * self.half_nodes() + 1
                ),
            });
        }
        if self.store_full_grid {
            let t = self.horizon as f64;
            let theta_proxy = if self.horizon >= 3 {
                (3.0 * t * t.ln().ln().max(1.0)).sqrt()
            } else {
                2.0
            };
            let bytes = 8.0 * (2.0 / 3.0) * t * theta_proxy / self.gamma;
            if bytes > STORE_BYTE_LIMIT as f64 {
                return Err(Error::Capacity {
                    detail: format!(
                        "storing the full grid would take about {:.1e} bytes \
                         (limit {STORE_BYTE_LIMIT}); solve without store_full_grid \
                         or coarsen gamma",
                        bytes
                    ),
                });
            }
        }
        Ok(())
    }
}

fn validate_horizon_epsilon(horizon: usize, epsilon: f64) -> Result<()> {
    if horizon == 0 {
        return Err(Error::ZeroTime);
    }
    if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= 1.0 {
        return Err(Error::OutOfDomain {
            what: "epsilon",
            requirement: "within (0, 1)",
            value: epsilon,
        });
    }
    Ok(())
}

fn truncation_width(horizon: usize, epsilon: f64) -> f64 {
    (6.0 * (2.0 * horizon as f64 / epsilon).ln()).sqrt()
}

/// The certified `(gamma, h)` pair for a horizon and error budget.
///
/// Truncating each conditional integral at `h = sqrt(6 log(2T/epsilon))`
/// and stepping the grid at `gamma = sqrt(epsilon)/(T log T log log T)`
/// keeps the per-slice error below `epsilon/T`, so errors accumulate to at
/// most `epsilon t / T` through slice t.
pub fn default_parameters(horizon: usize, epsilon: f64) -> Result<(f64, f64)> {
    validate_horizon_epsilon(horizon, epsilon)?;
    if horizon <= 2 {
        return Err(Error::HorizonTooSmall {
            horizon,
            detail: "certified grids need log log T > 0; pass an explicit gamma instead",
        });
    }
    let t = horizon as f64;
    let gamma = epsilon.sqrt() / (t * t.ln() * t.ln().ln());
    Ok((gamma, truncation_width(horizon, epsilon)))
}

// ---------------------------------------------------------------------------
// Value rows
// ---------------------------------------------------------------------------

/// One time slice of the value function on the half-grid `c = i gamma`,
/// `i = 0..=last`. Values are even in `c`, so only `c >= 0` is stored; the
/// final entry is the first grid point where stopping dominates, and beyond
/// it the value is exactly `c^2/t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiRow {
    pub t: usize,
    pub gamma: f64,
    pub values: Vec<f64>,
}

/// Evaluate a stored slice at an arbitrary point: exact `c^2/t` at or beyond
/// the threshold, linear interpolation between grid points inside the
/// continuation region. Even in `c` by construction.
pub fn psi_star(row: &PsiRow, theta_t: f64, c: f64) -> f64 {
    let a = c.abs();
    if a >= theta_t {
        return a * a / row.t as f64;
    }
    let pos = a / row.gamma;
    let last = row.values.len() - 1;
    let i = (pos as usize).min(last.saturating_sub(1));
    let frac = pos - i as f64;
    row.values[i] + frac * (row.values[i + 1] - row.values[i])
}

/// Precomputed quadrature state for continuation values against one
/// previous slice.
struct WaitKernel<'a> {
    prev_values: &'a [f64],
    prev_theta: f64,
    inv_prev_t: f64,
    shrink: f64,
    spread: f64,
    gamma: f64,
    inv_gamma: f64,
    weights: &'a [f64],
    norm: f64,
}

impl<'a> WaitKernel<'a> {
    fn new(t: usize, prev: &'a PsiRow, prev_theta: f64, weights: &'a [f64], gamma: f64) -> Self {
        let tf = t as f64;
        let ratio = (tf - 1.0) / tf;
        WaitKernel {
            prev_values: &prev.values,
            prev_theta,
            inv_prev_t: 1.0 / (tf - 1.0),
            shrink: ratio,
            spread: ratio.sqrt(),
            gamma,
            inv_gamma: 1.0 / gamma,
            weights,
            norm: gamma / SQRT_2PI,
        }
    }

    /// Previous-slice value at `u`, mirroring [`psi_star`] with cached
    /// reciprocals.
    #[inline]
    fn eval_prev(&self, u: f64) -> f64 {
        let a = u.abs();
        if a >= self.prev_theta {
            return a * a * self.inv_prev_t;
        }
        let pos = a * self.inv_gamma;
        let last = self.prev_values.len() - 1;
        let i = (pos as usize).min(last.saturating_sub(1));
        let frac = pos - i as f64;
        self.prev_values[i] + frac * (self.prev_values[i + 1] - self.prev_values[i])
    }

    /// Rectangle-rule continuation value at `c`. Nodes come in `+-x` pairs
    /// added together, which makes the result exactly even in `c`.
    fn value(&self, c: f64) -> f64 {
        let base = self.shrink * c;
        let mut acc = self.weights[0] * self.eval_prev(base);
        for i in 1..self.weights.len() {
            let dx = self.spread * (i as f64 * self.gamma);
            acc += self.weights[i] * (self.eval_prev(base - dx) + self.eval_prev(base + dx));
        }
        acc * self.norm
    }
}

fn node_weights(cfg: &SolverConfig) -> Vec<f64> {
    (0..=cfg.half_nodes())
        .map(|i| {
            let x = i as f64 * cfg.gamma;
            (-0.5 * x * x).exp()
        })
        .collect()
}

/// One-step continuation value: the expected next-slice value given the
/// current scaled disagreement `c` with `t` rounds left, integrated by the
/// configured truncated rectangle rule against `prev` (the solved slice for
/// `t - 1` with threshold `prev_theta`).
pub fn psi_wait(t: usize, c: f64, prev: &PsiRow, prev_theta: f64, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    if t < 2 {
        return Err(Error::HorizonTooSmall {
            horizon: t,
            detail: "continuation values start at t = 2",
        });
    }
    if prev.t != t - 1 {
        return Err(Error::Malformed {
            what: "previous slice",
            detail: format!("slice is for t = {}, expected {}", prev.t, t - 1),
        });
    }
    let weights = node_weights(cfg);
    Ok(WaitKernel::new(t, prev, prev_theta, &weights, cfg.gamma).value(c))
}

// ---------------------------------------------------------------------------
// Solving
// ---------------------------------------------------------------------------

/// Solved thresholds and values for every `t` up to the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    #[serde(rename = "T")]
    horizon: usize,
    config: SolverConfig,
    theta: Vec<f64>,
    psi0: Vec<f64>,
    capital_psi: Vec<f64>,
    /// Total certified error at the horizon (`epsilon`); the per-slice bound
    /// is `epsilon t / T`. Informational when the grid is not certified.
    accumulated_error_bound: f64,
    final_row: PsiRow,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    rows: Option<Vec<PsiRow>>,
}

impl PolicyTable {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn config(&self) -> &SolverConfig {
        self.config_ref()
    }

    fn config_ref(&self) -> &SolverConfig {
        &self.config
    }

    fn index(&self, t: usize) -> Result<usize> {
        if t == 0 || t > self.horizon {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(t - 1)
    }

    /// Stop threshold for `t` rounds left.
    pub fn theta(&self, t: usize) -> Result<f64> {
        Ok(self.theta[self.index(t)?])
    }

    /// Value at zero disagreement with `t` rounds left.
    pub fn psi0(&self, t: usize) -> Result<f64> {
        Ok(self.psi0[self.index(t)?])
    }

    /// Expected optimally-stopped ratio `Psi(t)` for a walk entered `t`
    /// rounds from the end.
    pub fn capital_psi(&self, t: usize) -> Result<f64> {
        Ok(self.capital_psi[self.index(t)?])
    }

    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    pub fn psi0_values(&self) -> &[f64] {
        &self.psi0
    }

    pub fn capital_psi_values(&self) -> &[f64] {
        &self.capital_psi
    }

    /// Certified error bound accumulated through slice `t`, when the grid
    /// was derived from an accuracy target.
    pub fn certified_error_at(&self, t: usize) -> Option<f64> {
        if self.config.certified {
            Some(self.accumulated_error_bound * t as f64 / self.horizon as f64)
        } else {
            None
        }
    }

    pub fn accumulated_error_bound(&self) -> f64 {
        self.accumulated_error_bound
    }

    /// The stored grid slice for `t`. The final slice is always kept; inner
    /// slices require `store_full_grid`.
    pub fn row(&self, t: usize) -> Result<&PsiRow> {
        let idx = self.index(t)?;
        if t == self.horizon {
            return Ok(&self.final_row);
        }
        match &self.rows {
            Some(rows) => Ok(&rows[idx]),
            None => Err(Error::RowNotStored { t }),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<PolicyTable> {
        let table: PolicyTable = serde_json::from_str(text)?;
        table.config.validate()?;
        let n = table.horizon;
        if table.theta.len() != n || table.psi0.len() != n || table.capital_psi.len() != n {
            return Err(Error::Malformed {
                what: "policy table",
                detail: format!(
                    "array lengths {}/{}/{} do not match horizon {n}",
                    table.theta.len(),
                    table.psi0.len(),
                    table.capital_psi.len()
                ),
            });
        }
        if let Some(rows) = &table.rows {
            if rows.len() != n {
                return Err(Error::Malformed {
                    what: "policy table",
                    detail: format!("{} stored slices for horizon {n}", rows.len()),
                });
            }
        }
        Ok(table)
    }

    /// Central-difference curvature of a stored slice, checked against the
    /// structural band `(-theta(t)^2/t, (3 + theta(t-1)^2)/t)` on interior
    /// points kept two cells clear of the threshold kink, plus the exact
    /// `2/t` curvature of the stop region.
    pub fn second_derivative_diagnostic(&self, t: usize) -> Result<CurvatureReport> {
        if t < 2 {
            return Err(Error::HorizonTooSmall {
                horizon: t,
                detail: "curvature diagnostics start at t = 2",
            });
        }
        let row = self.row(t)?;
        let theta_t = self.theta(t)?;
        let theta_prev = self.theta(t - 1)?;
        let tf = t as f64;
        let gamma = row.gamma;
        let lower = -theta_t * theta_t / tf;
        let upper = (3.0 + theta_prev * theta_prev) / tf;
        let tolerance = 10.0 * gamma;

        let mut curvatures = Vec::new();
        if row.values.len() >= 2 {
            // even reflection at zero
            curvatures.push(2.0 * (row.values[1] - row.values[0]) / (gamma * gamma));
        }
        let mut i = 1usize;
        while (i + 1) as f64 * gamma <= theta_t - 2.0 * gamma {
            if i + 1 >= row.values.len() {
                break;
            }
            let fd = (row.values[i - 1] - 2.0 * row.values[i] + row.values[i + 1])
                / (gamma * gamma);
            curvatures.push(fd);
            i += 1;
        }

        let interior_points = curvatures.len();
        let in_band = curvatures
            .iter()
            .filter(|&&v| v >= lower - tolerance && v <= upper + tolerance)
            .count();
        let min_curvature = curvatures.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_curvature = curvatures.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        let c0 = theta_t + 5.0 * gamma;
        let stop_region_curvature = (psi_star(row, theta_t, c0 - gamma)
            - 2.0 * psi_star(row, theta_t, c0)
            + psi_star(row, theta_t, c0 + gamma))
            / (gamma * gamma);

        let max_abs = min_curvature.abs().max(max_curvature.abs());
        let growth_ratio = if t >= 3 && interior_points > 0 {
            Some(max_abs * tf / tf.ln().ln())
        } else {
            None
        };

        Ok(CurvatureReport {
            t,
            lower,
            upper,
            tolerance,
            interior_points,
            in_band_fraction: if interior_points == 0 {
                1.0
            } else {
                in_band as f64 / interior_points as f64
            },
            min_curvature,
            max_curvature,
            stop_region_curvature,
            stop_region_expected: 2.0 / tf,
            growth_ratio,
        })
    }
}

/// Summary of [`PolicyTable::second_derivative_diagnostic`].
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub t: usize,
    pub lower: f64,
    pub upper: f64,
    pub tolerance: f64,
    pub interior_points: usize,
    pub in_band_fraction: f64,
    pub min_curvature: f64,
    pub max_curvature: f64,
    pub stop_region_curvature: f64,
    pub stop_region_expected: f64,
    /// `max |psi''| t / log log t`, reported for curiosity at `t >= 3`;
    /// nothing is asserted against it.
    pub growth_ratio: Option<f64>,
}

/// Expected value of a slice against the standard normal in the scaled
/// coordinate: `(1/sqrt(2 pi)) Int exp(-x^2/2) psi_t(x sqrt(t)) dx`,
/// using the same rectangle nodes and truncation as the recursion.
fn integrate_capital_psi(row: &PsiRow, theta_t: f64, weights: &[f64], gamma: f64) -> f64 {
    let sqrt_t = (row.t as f64).sqrt();
    let mut acc = weights[0] * psi_star(row, theta_t, 0.0);
    for (i, w) in weights.iter().enumerate().skip(1) {
        let x = i as f64 * gamma;
        acc += w * 2.0 * psi_star(row, theta_t, x * sqrt_t);
    }
    acc * gamma / SQRT_2PI
}

/// Sweep one time slice outward from zero until stopping dominates.
fn sweep_slice(t: usize, kernel: &WaitKernel, cfg: &SolverConfig) -> Result<(Vec<f64>, f64)> {
    let tf = t as f64;
    let gamma = cfg.gamma;
    let wait0 = kernel.value(0.0);
    let mut values = vec![wait0];

    // Termination guard from the value envelope theta(t) <= t sqrt(psi_t(0)),
    // padded for grid error; a sweep passing this point is a numerics bug.
    let cap_c = tf * (wait0 + 1.0).sqrt() + 2.0;
    let j_cap = (cap_c / gamma).ceil() as usize + 16;

    let mut j0 = 1usize;
    let theta_grid = loop {
        let hi = (j0 + SWEEP_BLOCK).min(j_cap + 1);
        let waits: Vec<f64> = (j0..hi)
            .into_par_iter()
            .map(|j| kernel.value(j as f64 * gamma))
            .collect();
        let mut crossed = None;
        for (k, &wv) in waits.iter().enumerate() {
            let c = (j0 + k) as f64 * gamma;
            let sv = c * c / tf;
            if sv >= wv {
                values.push(sv);
                crossed = Some(c);
                break;
            }
            values.push(wv);
        }
        if let Some(c) = crossed {
            break c;
        }
        if hi > j_cap {
            return Err(Error::Capacity {
                detail: format!(
                    "threshold sweep for t = {t} passed the envelope cap {cap_c:.3} \
                     without a stop/continue crossing"
                ),
            });
        }
        j0 = hi;
    };

    let theta = if cfg.refine_theta && theta_grid > 0.0 {
        let mut lo = theta_grid - gamma;
        let mut hi = theta_grid;
        while hi - lo > gamma * REFINE_FRACTION {
            let mid = 0.5 * (lo + hi);
            if mid * mid / tf >= kernel.value(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    } else {
        theta_grid
    };

    Ok((values, theta))
}

/// Run the backward recursion up to `cfg.horizon`.
pub fn solve(cfg: &SolverConfig) -> Result<PolicyTable> {
    cfg.validate()?;
    cfg.check_capacity()?;

    let horizon = cfg.horizon;
    let weights = node_weights(cfg);

    let mut theta = Vec::with_capacity(horizon);
    let mut psi0 = Vec::with_capacity(horizon);
    let mut capital_psi = Vec::with_capacity(horizon);
    let mut rows: Option<Vec<PsiRow>> = cfg.store_full_grid.then(Vec::new);

    // t = 1: the value is exactly c^2 and stopping is mandatory.
    let mut prev_row = PsiRow {
        t: 1,
        gamma: cfg.gamma,
        values: vec![0.0],
    };
    let mut prev_theta = 0.0;
    theta.push(0.0);
    psi0.push(0.0);
    capital_psi.push(integrate_capital_psi(&prev_row, 0.0, &weights, cfg.gamma));
    if let Some(rows) = rows.as_mut() {
        rows.push(prev_row.clone());
    }

    for t in 2..=horizon {
        let kernel = WaitKernel::new(t, &prev_row, prev_theta, &weights, cfg.gamma);
        let (values, th) = sweep_slice(t, &kernel, cfg)?;
        let row = PsiRow {
            t,
            gamma: cfg.gamma,
            values,
        };
        theta.push(th);
        psi0.push(row.values[0]);
        capital_psi.push(integrate_capital_psi(&row, th, &weights, cfg.gamma));
        if let Some(rows) = rows.as_mut() {
            rows.push(row.clone());
        }
        prev_row = row;
        prev_theta = th;
    }

    Ok(PolicyTable {
        horizon,
        config: cfg.clone(),
        theta,
        psi0,
        capital_psi,
        accumulated_error_bound: cfg.epsilon,
        final_row: prev_row,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
