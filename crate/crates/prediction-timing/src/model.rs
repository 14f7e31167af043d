//! Market model: Gaussian beliefs, log-score rewards, and the reduction of
//! the expert's timing decision to a single canonical walk coordinate.
//!
//! The market carries a Gaussian belief about an unknown quantity and decays
//! toward it one unit of variance per round. An expert holds a strictly
//! better belief (a fraction `q` of the market's residual variance removed)
//! and may correct the market exactly once, earning the log density ratio of
//! the two beliefs at the realized outcome. Everything the expert needs to
//! decide *when* to move collapses to the scaled disagreement
//! `s = (y - x) / sqrt(q)` and the time left, which is what the solver in
//! [`crate::solver`] consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// sqrt(2 pi), the Gaussian normalization constant.
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_2;

// ---------------------------------------------------------------------------
// Normal distribution helpers
// ---------------------------------------------------------------------------

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Complementary error function.
///
/// Alternating power series below 2, modified-Lentz continued fraction
/// above; both converge to double precision, comfortably inside the 1e-10
/// absolute error this crate promises for tail probabilities.
fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        // erf(x) = 2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1))
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0u32;
        loop {
            n += 1;
            term *= -x2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() + 1e-300 {
                break;
            }
        }
        1.0 - std::f64::consts::FRAC_2_SQRT_PI * sum
    } else {
        // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        let tiny = 1e-300;
        let mut f = tiny;
        let mut c = f;
        let mut d = 0.0;
        let mut k = 0u32;
        loop {
            k += 1;
            let a = if k == 1 { 1.0 } else { (k - 1) as f64 / 2.0 };
            d = x + a * d;
            if d == 0.0 {
                d = tiny;
            }
            c = x + a / c;
            if c == 0.0 {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 || k > 300 {
                break;
            }
        }
        (-x * x).exp() * 0.5 * std::f64::consts::FRAC_2_SQRT_PI * f
    }
}

/// Standard normal upper tail probability `Pr[Z >= x]`.
#[inline]
pub fn normal_ccdf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Two-sided Gaussian tail sandwich for a walk at scale `lambda`:
/// `Pr[|S_t| >= lambda sqrt(t)]` lies strictly above the first component and
/// at or below the second, for every t.
///
/// Returns `(exp(-lambda^2/2) / (lambda + 2), exp(-lambda^2/2))`.
pub fn normal_tail_bounds(lambda: f64) -> Result<(f64, f64)> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::OutOfDomain {
            what: "lambda",
            requirement: "finite and >= 0",
            value: lambda,
        });
    }
    let e = (-0.5 * lambda * lambda).exp();
    Ok((e / (lambda + 2.0), e))
}

// ---------------------------------------------------------------------------
// Beliefs and rewards
// ---------------------------------------------------------------------------

/// A Gaussian belief, stored as mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    mean: f64,
    variance: f64,
}

impl GaussianSpec {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::OutOfDomain {
                what: "mean",
                requirement: "finite",
                value: mean,
            });
        }
        if !variance.is_finite() || variance <= 0.0 {
            return Err(Error::NonPositiveVariance(variance));
        }
        Ok(GaussianSpec { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Log-score payoff for replacing belief `prior` with `posterior` when the
/// outcome realizes at `outcome`: `log f_posterior(outcome) - log f_prior(outcome)`.
pub fn lmsr_realized_reward(prior: GaussianSpec, posterior: GaussianSpec, outcome: f64) -> f64 {
    let dm = outcome - prior.mean;
    let dp = outcome - posterior.mean;
    0.5 * (prior.variance / posterior.variance).ln() + dm * dm / (2.0 * prior.variance)
        - dp * dp / (2.0 * posterior.variance)
}

/// Expected log-score payoff when the outcome is drawn from `posterior`
/// itself: the divergence KL(posterior || prior). Always nonnegative, zero
/// only when the two beliefs coincide.
pub fn lmsr_expected_reward(prior: GaussianSpec, posterior: GaussianSpec) -> f64 {
    let dm = posterior.mean - prior.mean;
    let r = posterior.variance / prior.variance;
    dm * dm / (2.0 * prior.variance) + 0.5 * (r - 1.0 - r.ln())
}

// ---------------------------------------------------------------------------
// Market state
// ---------------------------------------------------------------------------

/// Per-unit breakdown of the expert's one-shot expected reward.
///
/// `deviation_term` is earned by correcting the market's current estimate;
/// `quality_term` is the state-independent payment for the expert's variance
/// advantage. `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    pub deviation_term: f64,
    pub quality_term: f64,
    pub total: f64,
}

/// The canonical coordinate the timing problem runs on: time left `t` and the
/// scaled disagreement `s = (y - x)/sqrt(q)`, which behaves as a standard
/// Gaussian walk when observed from the horizon down to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalState {
    pub t: usize,
    pub s: f64,
}

/// Snapshot of the market with `t` rounds left to resolution: the market
/// estimate `x_t`, the expert estimate `y_t`, and the expert's quality
/// `q` in (0, 1) (the fraction of residual variance the expert resolves).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketState {
    t: usize,
    market_estimate: f64,
    expert_estimate: f64,
    quality: f64,
}

impl MarketState {
    pub fn new(t: usize, market_estimate: f64, expert_estimate: f64, quality: f64) -> Result<Self> {
        if t == 0 {
            return Err(Error::ZeroTime);
        }
        if !quality.is_finite() || quality <= 0.0 || quality >= 1.0 {
            return Err(Error::QualityOutOfRange(quality));
        }
        for (what, v) in [
            ("market estimate", market_estimate),
            ("expert estimate", expert_estimate),
        ] {
            if !v.is_finite() {
                return Err(Error::OutOfDomain {
                    what,
                    requirement: "finite",
                    value: v,
                });
            }
        }
        Ok(MarketState {
            t,
            market_estimate,
            expert_estimate,
            quality,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn market_estimate(&self) -> f64 {
        self.market_estimate
    }

    pub fn expert_estimate(&self) -> f64 {
        self.expert_estimate
    }

    pub fn quality(&self) -> f64 {
        self.quality
    }

    /// The market's current belief: `N(x_t, t)` under the diffuse-start model.
    pub fn prior(&self) -> GaussianSpec {
        GaussianSpec {
            mean: self.market_estimate,
            variance: self.t as f64,
        }
    }

    /// The expert's belief after resolving a `q` fraction of the residual
    /// variance: `N(y_t, (1 - q) t)`.
    pub fn posterior(&self) -> GaussianSpec {
        GaussianSpec {
            mean: self.expert_estimate,
            variance: (1.0 - self.quality) * self.t as f64,
        }
    }

    /// Project onto the canonical walk coordinate `s = (y - x)/sqrt(q)`.
    pub fn canonical(&self) -> CanonicalState {
        CanonicalState {
            t: self.t,
            s: (self.expert_estimate - self.market_estimate) / self.quality.sqrt(),
        }
    }

    /// Expected reward from predicting right now, split into its two parts:
    /// `(y - x)^2 / (2t)` for the estimate correction and
    /// `-(q + log(1 - q))/2` for the variance reduction.
    pub fn immediate_reward(&self) -> RewardBreakdown {
        let d = self.expert_estimate - self.market_estimate;
        let deviation_term = d * d / (2.0 * self.t as f64);
        let quality_term = -(self.quality + (1.0 - self.quality).ln()) / 2.0;
        RewardBreakdown {
            deviation_term,
            quality_term,
            total: deviation_term + quality_term,
        }
    }

    /// Expected reward of following an optimal continuation whose canonical
    /// value at this state is `psi_value`: `q psi / 2` plus the quality term.
    ///
    /// With `psi_value = s^2/t` (the stop region) this collapses to
    /// [`MarketState::immediate_reward`]'s total.
    pub fn policy_reward(&self, psi_value: f64) -> f64 {
        self.quality * psi_value / 2.0 - (self.quality + (1.0 - self.quality).ln()) / 2.0
    }

    /// Whether an optimal expert facing threshold `theta_t` predicts now:
    /// `(y - x)^2 >= q theta_t^2`. Since `q < 1`, a disagreement exceeding
    /// `theta_t` outright triggers a prediction for every quality level.
    pub fn should_predict(&self, theta_t: f64) -> bool {
        let d = self.expert_estimate - self.market_estimate;
        d * d >= self.quality * theta_t * theta_t
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
