//! Closed-form envelopes for the expected optimally-stopped ratio `Psi(T)`.
//!
//! The dynamic program in [`crate::solver`] computes `Psi(T)` numerically;
//! this module provides the analytic sandwich that pins its growth at
//! horizons far beyond numerical reach:
//!
//! ```text
//! (1 - gamma2(T, eps)) (1 - eps) 2 log log T
//!     <= Psi(T) <=
//! (1 + eps) 2 log log T + gamma1(T, eps)
//! ```
//!
//! for admissible `(T, eps)`, plus the eps-free corollary
//! `2 log log T - 32 log log log T - 8 <= Psi(T) <= 2 log log T +
//! 8 log log log T + 6` once `log log T >= 4`. The lower bound is vacuous
//! until `gamma2 < 1`, which needs genuinely astronomical horizons; it is
//! reported as-is and flagged.
//!
//! Horizons are `f64` throughout: the corollary's domain starts near
//! `exp(exp(4)) ~ 5e23`, past any integer type worth the trouble. Logs of
//! `T` stay representable long after `T` itself overflows, so a few
//! internal helpers work from `log T` directly.

use crate::error::{Error, Result};

/// Additive slack `gamma1` of the upper envelope. Requires `T > 10` and
/// `eps > 0`. Decreasing in both arguments; vanishes as `T` grows.
pub fn gamma1(horizon: f64, eps: f64) -> Result<f64> {
    check_horizon(horizon, 10.0, "gamma1")?;
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::OutOfDomain {
            what: "eps",
            requirement: "> 0",
            value: eps,
        });
    }
    Ok(gamma1_from_log(horizon.ln(), eps))
}

fn gamma1_from_log(log_t: f64, eps: f64) -> f64 {
    let s = (1.0 + eps).sqrt() - (1.0 + eps / 2.0).sqrt();
    let a = 1.0 + s * s / (1.0 + eps / 2.0);
    12.0 / (a.ln() * log_t.powf(eps / 2.0))
}

/// Simplified variant of [`gamma1`] with the log argument flattened to
/// `1 + eps^2/4`. It undercuts `gamma1` by at most a factor of 10 and
/// shares its decay rate, so it makes a convenient analytic stand-in.
pub fn gamma1_simplified(horizon: f64, eps: f64) -> Result<f64> {
    check_horizon(horizon, 10.0, "gamma1_simplified")?;
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::OutOfDomain {
            what: "eps",
            requirement: "> 0",
            value: eps,
        });
    }
    Ok(12.0 / ((1.0 + eps * eps / 4.0).ln() * horizon.ln().powf(eps / 2.0)))
}

/// Multiplicative defect `gamma2` of the lower envelope. Requires `T > 16`
/// and `0 < eps < 1/2`. The first term decays like a stretched exponential
/// in `log log T`; the second is `(log T)^{-eps/8}`.
pub fn gamma2(horizon: f64, eps: f64) -> Result<f64> {
    check_horizon(horizon, 16.0, "gamma2")?;
    check_eps_half(eps)?;
    Ok(gamma2_from_log(horizon.ln(), eps))
}

fn gamma2_from_log(log_t: f64, eps: f64) -> f64 {
    (-gamma2_concentration_exponent(log_t, eps)).exp() + log_t.powf(-eps / 8.0)
}

/// Exponent of the concentration term of [`gamma2`], positive in its
/// domain; the term itself is `exp(-exponent)`. Split out so the decay can
/// be examined in log space at horizons where the term underflows.
pub fn gamma2_concentration_exponent(log_t: f64, eps: f64) -> f64 {
    let ll = log_t.ln();
    let power = eps / 4.0 - eps * eps / 64.0;
    log_t.powf(power)
        / (((1.0 - eps / 8.0) * (2.0 * ll).sqrt() + 2.0) * (20.0 / (eps * eps)).ln())
}

/// Upper envelope `(1 + eps) 2 log log T + gamma1(T, eps)`.
pub fn psi_upper_bound(horizon: f64, eps: f64) -> Result<f64> {
    let g1 = gamma1(horizon, eps)?;
    Ok((1.0 + eps) * 2.0 * horizon.ln().ln() + g1)
}

/// Lower envelope `(1 - gamma2(T, eps)) (1 - eps) 2 log log T`, returned
/// as-is even when vacuous (non-positive).
pub fn psi_lower_bound(horizon: f64, eps: f64) -> Result<f64> {
    let g2 = gamma2(horizon, eps)?;
    Ok((1.0 - g2) * (1.0 - eps) * 2.0 * horizon.ln().ln())
}

/// Eps-free bracket `[2 llT - 32 lllT - 8, 2 llT + 8 lllT + 6]` for
/// `Psi(T)`, valid once `log log T >= 4`.
pub fn corollary_envelope(horizon: f64) -> Result<(f64, f64)> {
    if !horizon.is_finite() {
        return Err(Error::OutOfDomain {
            what: "horizon",
            requirement: "finite",
            value: horizon,
        });
    }
    let ll = horizon.ln().ln();
    if ll.is_nan() || ll < 4.0 {
        return Err(Error::OutOfDomain {
            what: "log log T",
            requirement: ">= 4",
            value: ll,
        });
    }
    Ok(corollary_from_loglog(ll))
}

fn corollary_from_loglog(ll: f64) -> (f64, f64) {
    let lll = ll.ln();
    (2.0 * ll - 32.0 * lll - 8.0, 2.0 * ll + 8.0 * lll + 6.0)
}

/// Candidate eps values for minimizing the upper envelope: 0.05 to 3 in
/// steps of 0.05. Division keeps shared grid points bit-identical with
/// [`lower_eps_grid`].
pub fn upper_eps_grid() -> impl Iterator<Item = f64> {
    (1..=60).map(|i| i as f64 / 20.0)
}

/// Candidate eps values for maximizing the lower envelope: 0.01 to 0.49 in
/// steps of 0.01.
pub fn lower_eps_grid() -> impl Iterator<Item = f64> {
    (1..=49).map(|i| i as f64 / 100.0)
}

/// Smallest upper envelope over the standard eps grid, with its argmin.
pub fn best_upper_bound(horizon: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for eps in upper_eps_grid() {
        if let Ok(v) = psi_upper_bound(horizon, eps) {
            if best.is_none_or(|(_, bv)| v < bv) {
                best = Some((eps, v));
            }
        }
    }
    best
}

/// Largest lower envelope over the standard eps grid, with its argmax.
/// `None` when no eps is admissible; the best value may still be vacuous.
pub fn best_lower_bound(horizon: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for eps in lower_eps_grid() {
        if let Ok(v) = psi_lower_bound(horizon, eps) {
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((eps, v));
            }
        }
    }
    best
}

/// Everything this module can say about one horizon.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub horizon: f64,
    pub two_loglog: f64,
    /// `(eps, value)` minimizing the upper envelope; `None` when `T <= 10`.
    pub best_upper: Option<(f64, f64)>,
    /// `(eps, value)` maximizing the lower envelope; `None` when `T <= 16`.
    pub best_lower: Option<(f64, f64)>,
    /// True when the best lower bound exists but is non-positive.
    pub lower_vacuous: bool,
    /// Eps-free bracket, once `log log T >= 4`.
    pub corollary: Option<(f64, f64)>,
}

pub fn bound_report(horizon: f64) -> BoundReport {
    let best_upper = best_upper_bound(horizon);
    let best_lower = best_lower_bound(horizon);
    BoundReport {
        horizon,
        two_loglog: 2.0 * horizon.ln().ln(),
        best_upper,
        best_lower,
        lower_vacuous: best_lower.is_some_and(|(_, v)| v <= 0.0),
        corollary: corollary_envelope(horizon).ok(),
    }
}

/// A usable stand-in for the stop threshold at scales the solver cannot
/// reach, labelled by its provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaEnvelope {
    /// `t sqrt(3 log log t)`: the asymptotic shape, trusted only once
    /// `log log t` is large.
    Asymptotic(f64),
    /// `t sqrt(bound)` from an envelope on the value at zero.
    Proxy(f64),
}

impl ThetaEnvelope {
    pub fn value(self) -> f64 {
        match self {
            ThetaEnvelope::Asymptotic(v) | ThetaEnvelope::Proxy(v) => v,
        }
    }
}

/// Upper proxy for `theta(t)` from analytic material alone, using
/// `theta(t) <= t sqrt(psi_t(0))` and `psi_t(0) <= Psi(t)`.
pub fn theta_envelope(t: f64) -> Result<ThetaEnvelope> {
    if t < 1.0 || !t.is_finite() {
        return Err(Error::OutOfDomain {
            what: "t",
            requirement: ">= 1 and finite",
            value: t,
        });
    }
    let ll = t.ln().ln();
    if ll >= 35.0 {
        return Ok(ThetaEnvelope::Asymptotic(t * (3.0 * ll).sqrt()));
    }
    if t > 10.0 {
        if let Some((_, ub)) = best_upper_bound(t) {
            return Ok(ThetaEnvelope::Proxy(t * ub.sqrt()));
        }
    }
    // tiny horizons: the ratio is at most max_t S_t^2/t <= sum x_i^2
    // in expectation T, giving the crude psi <= T envelope
    Ok(ThetaEnvelope::Proxy(t * t.sqrt()))
}

/// Exact threshold envelope from a solved value at zero:
/// `theta(t) <= t sqrt(psi_t(0))`.
pub fn theta_envelope_from_psi0(t: f64, psi0: f64) -> f64 {
    t * psi0.max(0.0).sqrt()
}

fn check_horizon(horizon: f64, min_exclusive: f64, what: &'static str) -> Result<()> {
    if horizon <= min_exclusive || !horizon.is_finite() {
        return Err(Error::OutOfDomain {
            what,
            requirement: if min_exclusive == 10.0 {
                "requires horizon > 10"
            } else {
                "requires horizon > 16"
            },
            value: horizon,
        });
    }
    Ok(())
}

fn check_eps_half(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::OutOfDomain {
            what: "eps",
            requirement: "within (0, 1/2)",
            value: eps,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma1_frozen_value() {
        // e^100 keeps every intermediate comfortably representable
        let t = 100.0f64.exp();
        let g = gamma1(t, 1.0).unwrap();
        assert!((g - 50.739_166_614_165_17).abs() < 1e-9, "gamma1 = {g}");
    }

    #[test]
    fn gamma1_decreases_in_horizon_and_eps() {
        let ts = [1e2, 1e4, 1e8, 1e16, 1e100, 1e300];
        for eps in [0.1, 0.5, 1.0, 2.0] {
            for w in ts.windows(2) {
                let a = gamma1(w[0], eps).unwrap();
                let b = gamma1(w[1], eps).unwrap();
                assert!(b < a, "gamma1 not decreasing in T at eps = {eps}");
            }
        }
        for t in ts {
            let a = gamma1(t, 0.2).unwrap();
            let b = gamma1(t, 0.4).unwrap();
            assert!(b < a, "gamma1 not decreasing in eps at T = {t}");
        }
    }

    #[test]
    fn gamma1_against_simplified_form() {
        // The ratio gamma1 / gamma1_simplified equals
        // log(1 + eps^2/4) / log(1 + s^2/(1+eps/2)), which grows from 4 at
        // eps -> 0 to about 17.4 at eps = 3; within a factor 10 up to
        // eps = 1.
        for t in [1e2, 1e6, 1e30, 1e300] {
            for eps in [0.05, 0.1, 0.5, 1.0, 2.0, 3.0] {
                let exact = gamma1(t, eps).unwrap();
                let simple = gamma1_simplified(t, eps).unwrap();
                assert!(simple < exact, "simplified should undercut at T={t}, eps={eps}");
                let cap = if eps <= 1.0 { 10.0 } else { 18.0 };
                assert!(
                    exact <= cap * simple,
                    "ratio {} too large at T={t}, eps={eps}",
                    exact / simple
                );
            }
        }
    }

    #[test]
    fn gamma1_polynomial_envelope() {
        // log(1 + s^2/(1+eps/2)) >= eps^2/D with D < 42.7 for eps <= 1 and
        // D < 134 for eps <= 3, so gamma1 < 512 eps^{-2} (log T)^{-eps/2}
        // on (0, 1] and < 1620 eps^{-2} (log T)^{-eps/2} on (0, 3].
        for t in [1e2, 1e8, 1e100] {
            for eps in [0.05, 0.2, 1.0, 2.0, 3.0] {
                let g = gamma1(t, eps).unwrap();
                let c = if eps <= 1.0 { 512.0 } else { 1620.0 };
                let cap = c / (eps * eps) * t.ln().powf(-eps / 2.0);
                assert!(g < cap, "gamma1 = {g} above envelope {cap} at T={t}, eps={eps}");
            }
        }
    }

    #[test]
    fn gamma2_range_and_decay() {
        for t in [17.0, 1e3, 1e10, 1e100, 1e300] {
            for eps in [0.05, 0.2, 0.4, 0.49] {
                let g = gamma2(t, eps).unwrap();
                assert!(g > 0.0 && g < 2.0, "gamma2 = {g} at T={t}, eps={eps}");
            }
        }
        // decreasing in T for fixed eps
        let seq: Vec<f64> = [1e2, 1e4, 1e16, 1e64, 1e256]
            .iter()
            .map(|&t| gamma2(t, 0.3).unwrap())
            .collect();
        for w in seq.windows(2) {
            assert!(w[1] < w[0], "gamma2 not decreasing: {seq:?}");
        }
    }

    #[test]
    fn gamma2_concentration_term_decay_in_log_space() {
        // The concentration exponent grows like a power of log T divided by
        // sqrt(log log T), so the term itself tends to zero; checked in log
        // space at horizons far past f64 range. At eps = 0.16 the power is
        // 0.0396.
        let eps = 0.16;
        let exps: Vec<f64> = [1e6, 1e12, 1e18, 1e24]
            .iter()
            .map(|&lt| gamma2_concentration_exponent(lt, eps))
            .collect();
        assert!(exps[0] > 0.0);
        for w in exps.windows(2) {
            assert!(w[1] > w[0], "exponent should grow with log T: {exps:?}");
        }
        // power-law growth wins against the sqrt(log log T) denominator
        assert!(exps[3] > 2.0 * exps[0], "{exps:?}");
        // sanity in the normal range too
        let g = gamma2(1e300, eps).unwrap();
        assert!(g > 0.0 && g < 2.0);
    }

    #[test]
    fn envelope_domains() {
        assert!(gamma1(10.0, 0.5).is_err());
        assert!(gamma1(11.0, 0.5).is_ok());
        assert!(gamma1(100.0, 0.0).is_err());
        assert!(gamma2(16.0, 0.3).is_err());
        assert!(gamma2(17.0, 0.3).is_ok());
        assert!(gamma2(100.0, 0.5).is_err());
        assert!(gamma2(100.0, 0.0).is_err());
        assert!(corollary_envelope(1e10).is_err());
        assert!(corollary_envelope(f64::INFINITY).is_err());
    }

    #[test]
    fn corollary_frozen_values() {
        // at log log T = 4 exactly: 8 - 32 log 4 - 8 and 8 + 8 log 4 + 6
        let (lo, hi) = corollary_from_loglog(4.0);
        assert!((lo - (-44.361_419_555_836_5)).abs() < 1e-9, "lo = {lo}");
        assert!((hi - 25.090_354_888_959_126).abs() < 1e-9, "hi = {hi}");
        // the public entry point, just above the domain edge
        let (lo, hi) = corollary_envelope(1e24).unwrap();
        assert!(lo < 2.0 * 1e24f64.ln().ln() && 2.0 * 1e24f64.ln().ln() < hi);
    }

    #[test]
    fn corollary_brackets_the_leading_term() {
        for ll in [4.0, 10.0, 100.0, 1e4, 1e8] {
            let (lo, hi) = corollary_from_loglog(ll);
            let lead = 2.0 * ll;
            assert!(lo < lead && lead < hi);
        }
        // both ends converge to 2 log log T in ratio
        let (lo, hi) = corollary_from_loglog(1e12);
        assert!((lo / (2.0 * 1e12) - 1.0).abs() < 1e-9);
        assert!((hi / (2.0 * 1e12) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn upper_bound_sits_above_leading_term() {
        for t in [1e2, 1e4, 1e10, 1e100] {
            let (eps, ub) = best_upper_bound(t).unwrap();
            assert!(ub > 2.0 * t.ln().ln(), "upper bound below 2 llT at T = {t}");
            assert!(eps > 0.0 && eps <= 3.0);
        }
    }

    #[test]
    fn lower_bound_vacuous_at_reachable_horizons() {
        let report = bound_report(1e4);
        assert!(report.best_upper.is_some());
        let (_, lb) = report.best_lower.unwrap();
        assert!(lb <= 0.0, "expected a vacuous lower bound at T = 1e4, got {lb}");
        assert!(report.lower_vacuous);
        assert!(report.corollary.is_none());
    }

    #[test]
    fn lower_bound_turns_positive_eventually() {
        // the concentration term decays glacially; only around
        // log T ~ 1e26 does gamma2 finally drop below 1 at eps = 0.4
        let log_t = 1e26;
        let eps = 0.4;
        let g2 = gamma2_from_log(log_t, eps);
        assert!(g2 < 1.0, "gamma2 = {g2}");
        let lb = (1.0 - g2) * (1.0 - eps) * 2.0 * log_t.ln();
        assert!(lb > 0.0);
        // and it was still vacuous a few decades earlier
        assert!(gamma2_from_log(1e6, eps) > 1.0);
    }

    #[test]
    fn bound_report_small_horizons() {
        let r = bound_report(8.0);
        assert!(r.best_upper.is_none());
        assert!(r.best_lower.is_none());
        assert!(!r.lower_vacuous);
        let r = bound_report(12.0);
        assert!(r.best_upper.is_some());
        assert!(r.best_lower.is_none());
    }

    #[test]
    fn theta_envelope_branches() {
        // tiny: crude T-envelope
        let e = theta_envelope(5.0).unwrap();
        assert_eq!(e, ThetaEnvelope::Proxy(5.0 * 5.0f64.sqrt()));
        // desk scale: proxy through the best upper bound
        let e = theta_envelope(1000.0).unwrap();
        let (_, ub) = best_upper_bound(1000.0).unwrap();
        assert_eq!(e, ThetaEnvelope::Proxy(1000.0 * ub.sqrt()));
        // asymptotic branch needs log log t >= 35, i.e. t = e^(e^35)
        let t = f64::MAX;
        // f64::MAX has log log ~ 6.56: still proxy
        assert!(matches!(theta_envelope(t).unwrap(), ThetaEnvelope::Proxy(_)));
        assert!(theta_envelope(0.5).is_err());
    }

    #[test]
    fn theta_envelope_from_solved_value() {
        assert_eq!(theta_envelope_from_psi0(10.0, 4.0), 20.0);
        assert_eq!(theta_envelope_from_psi0(10.0, -1.0), 0.0);
    }

    #[test]
    fn eps_grids_cover_documented_ranges() {
        let us: Vec<f64> = upper_eps_grid().collect();
        assert_eq!(us.len(), 60);
        assert!((us[0] - 0.05).abs() < 1e-12);
        assert!((us[59] - 3.0).abs() < 1e-12);
        let ls: Vec<f64> = lower_eps_grid().collect();
        assert_eq!(ls.len(), 49);
        assert!((ls[0] - 0.01).abs() < 1e-12);
        assert!((ls[48] - 0.49).abs() < 1e-12);
    }
}
