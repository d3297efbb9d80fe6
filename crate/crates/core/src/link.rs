//! Single-link quantities: heralding probability, attempt budgets, link rate
//! and memory dephasing.
//!
//! Logarithms are natural throughout. One attempt occupies a round trip
//! `2L/c` plus any configured local latency.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, ModelError, Result};

/// Device and channel constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalParams {
    /// Signal speed in fiber, km/s.
    pub c_km_s: f64,
    /// Fiber attenuation length, km.
    pub l0_km: f64,
    /// Cavity coupling times frequency-conversion efficiency.
    pub p_c: f64,
    /// Single-photon detection probability.
    pub p_d: f64,
    /// Cavity transmission coefficient `T` (nominally −1).
    pub transmission: f64,
    /// Nuclear-spin memory coherence time, s.
    pub t2_s: f64,
    /// Local two-qubit gate fidelity used by each swap.
    pub f_gate: f64,
    /// Local processing latency added to every attempt, s.
    pub t_local_s: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            c_km_s: 2.0e5,
            l0_km: 25.0,
            p_c: 0.7,
            p_d: 0.7,
            transmission: -1.0,
            t2_s: 0.2,
            f_gate: 0.997,
            t_local_s: 0.0,
        }
    }
}

fn check_probability(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(invalid(name, format!("must lie in [0, 1], got {v}")));
    }
    Ok(())
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(
            name,
            format!("must be positive and finite, got {v}"),
        ));
    }
    Ok(())
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        check_probability("p_c", self.p_c)?;
        check_probability("p_d", self.p_d)?;
        check_probability("f_gate", self.f_gate)?;
        check_positive("l0_km", self.l0_km)?;
        check_positive("c_km_s", self.c_km_s)?;
        check_positive("t2_s", self.t2_s)?;
        if !(-1.0..=1.0).contains(&self.transmission) {
            return Err(invalid(
                "transmission",
                format!("must lie in [-1, 1], got {}", self.transmission),
            ));
        }
        if !(self.t_local_s >= 0.0 && self.t_local_s.is_finite()) {
            return Err(invalid("t_local_s", "must be non-negative"));
        }
        let peak = self.transmission_factor(0.0) * self.local_efficiency();
        if peak > 1.0 {
            return Err(ModelError::InconsistentProbability { value: peak });
        }
        Ok(())
    }

    /// `e^(−L/L0)(1−T)/2`: the part of the heralding probability shared by
    /// everything riding on one transmitted photon.
    pub fn transmission_factor(&self, l_km: f64) -> f64 {
        (-l_km / self.l0_km).exp() * (1.0 - self.transmission) / 2.0
    }

    /// `p_c · p_D`.
    pub fn local_efficiency(&self) -> f64 {
        self.p_c * self.p_d
    }

    /// Round-trip attempt duration `2L/c + t_local`.
    pub fn attempt_time(&self, l_km: f64) -> f64 {
        2.0 * l_km / self.c_km_s + self.t_local_s
    }
}

fn check_length(l_km: f64) -> Result<()> {
    if !(l_km >= 0.0 && l_km.is_finite()) {
        return Err(invalid("l_km", format!("must be non-negative, got {l_km}")));
    }
    Ok(())
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Per-attempt heralding probability `p_s = e^(−L/L0)(1−T) p_c p_D / 2`.
pub fn link_success_probability(p: &PhysicalParams, l_km: f64) -> Result<f64> {
    p.validate()?;
    check_length(l_km)?;
    let ps = p.transmission_factor(l_km) * p.local_efficiency();
    if ps > 1.0 {
        return Err(ModelError::InconsistentProbability { value: ps });
    }
    Ok(ps)
}

/// Probability of each individual heralding outcome (DD, DA, AD, AA): `p_s / 4`.
pub fn event_probability(p: &PhysicalParams, l_km: f64) -> Result<f64> {
    Ok(link_success_probability(p, l_km)? / 4.0)
}

/// Attempt count reaching a failure target, with the residual it actually achieves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttemptBudget {
    pub n_attempts: u64,
    pub eps_residual: f64,
}

/// `(1 − p)^n` without cancellation for small `p`.
pub fn failure_after(p_s: f64, n: u64) -> f64 {
    if p_s >= 1.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    ((n as f64) * (-p_s).ln_1p()).exp()
}

/// Smallest `n` with `(1 − p_s)^n ≤ eps`.
pub fn attempts_for_failure_bound(p_s: f64, eps: f64) -> Result<AttemptBudget> {
    check_eps(eps)?;
    if !(p_s > 0.0 && p_s <= 1.0) {
        if p_s == 0.0 {
            return Err(ModelError::UnreachableTarget { eps });
        }
        return Err(invalid("p_s", format!("must lie in (0, 1], got {p_s}")));
    }
    if p_s == 1.0 {
        return Ok(AttemptBudget {
            n_attempts: 1,
            eps_residual: 0.0,
        });
    }
    let estimate = (eps.ln() / (-p_s).ln_1p()).ceil();
    if !estimate.is_finite() || estimate >= u64::MAX as f64 {
        return Err(ModelError::UnreachableTarget { eps });
    }
    let mut n = (estimate as u64).max(1);
    // The float quotient can land one off an exact integer boundary.
    while failure_after(p_s, n) > eps {
        n += 1;
    }
    while n > 1 && failure_after(p_s, n - 1) <= eps {
        n -= 1;
    }
    Ok(AttemptBudget {
        n_attempts: n,
        eps_residual: failure_after(p_s, n),
    })
}

/// Expected number of attempts given success within `n` attempts (truncated geometric mean).
pub fn expected_attempts_given_success(p_s: f64, n: u64) -> f64 {
    if p_s >= 1.0 {
        return 1.0;
    }
    let tail = failure_after(p_s, n);
    1.0 / p_s - (n as f64) * tail / (1.0 - tail)
}

/// Everything needed to schedule one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub p_s: f64,
    pub n_attempts: u64,
    pub eps_residual: f64,
    /// Duration of one attempt (round trip `T_R` plus local latency), s.
    pub t_attempt: f64,
    /// Expected time to herald success, conditioned on success within budget, s.
    pub t_expected: f64,
}

impl LinkBudget {
    pub fn from_probability(p_s: f64, t_attempt: f64, eps: f64) -> Result<Self> {
        let AttemptBudget {
            n_attempts,
            eps_residual,
        } = attempts_for_failure_bound(p_s, eps)?;
        Ok(Self {
            p_s,
            n_attempts,
            eps_residual,
            t_attempt,
            t_expected: expected_attempts_given_success(p_s, n_attempts) * t_attempt,
        })
    }

    /// Time the whole budget takes.
    pub fn t_budget(&self) -> f64 {
        self.n_attempts as f64 * self.t_attempt
    }
}

pub fn link_budget(p: &PhysicalParams, l_km: f64, eps: f64) -> Result<LinkBudget> {
    let ps = link_success_probability(p, l_km)?;
    LinkBudget::from_probability(ps, p.attempt_time(l_km), eps)
}

/// `R = −(1−ε)·(c/2L)·p_s / ln ε`.
pub fn link_rate(p: &PhysicalParams, l_km: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(l_km > 0.0) {
        return Err(invalid("l_km", "link rate needs a positive length"));
    }
    let ps = link_success_probability(p, l_km)?;
    Ok(-(1.0 - eps) * (p.c_km_s / (2.0 * l_km)) * ps / eps.ln())
}

/// Bell-state fidelity after storing for `t` seconds: `(1 + e^(−t/T2)) / 2`.
pub fn memory_fidelity(t: f64, t2: f64) -> f64 {
    (1.0 + dephasing_weight(t, t2)) / 2.0
}

/// `w = e^(−t/T2)`, the coherence remaining after `t` seconds.
pub fn dephasing_weight(t: f64, t2: f64) -> f64 {
    (-t / t2).exp()
}
