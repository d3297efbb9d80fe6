//! Spatial multiplexing and hyper-encoded photons.
//!
//! With `n` senders per link the round succeeds if at least one (or `q`) of
//! the independent attempts heralds. The hyper-encoded variant packs `q`
//! logical qubits onto one photon: the fiber transmission is shared, while
//! the local coupling/detection step acts on each encoded qubit separately.

use serde::{Deserialize, Serialize};

use crate::chain::{
    assemble, per_link_wait, rate_from_link_probability, ChainConfig, ChainResult, WaitPolicy,
};
use crate::error::{invalid, ModelError, Result};
use crate::link::{LinkBudget, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeLayout {
    /// `n` senders towards the right neighbour plus one receiver: `n + 1` qubits per node.
    SendersPlusOneReceiver,
    /// `m` senders with `q`-qubit hyper-encoded photons: `m + q` qubits per node.
    MPlusQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiplexConfig {
    pub n_senders: u32,
    /// Simultaneous links required per round.
    pub q_copies: u32,
    pub layout: NodeLayout,
    /// Qubits encoded per photon.
    pub hyper_q: u32,
}

impl Default for MultiplexConfig {
    fn default() -> Self {
        Self {
            n_senders: 1,
            q_copies: 1,
            layout: NodeLayout::SendersPlusOneReceiver,
            hyper_q: 1,
        }
    }
}

impl MultiplexConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_senders < 1 {
            return Err(invalid("n_senders", "need at least one sender"));
        }
        if self.q_copies < 1 || self.q_copies > self.n_senders {
            return Err(invalid(
                "q_copies",
                format!("must satisfy 1 ≤ q ≤ n_senders = {}", self.n_senders),
            ));
        }
        if self.hyper_q < 1 {
            return Err(invalid("hyper_q", "need at least one qubit per photon"));
        }
        Ok(())
    }

    pub fn qubits_per_node(&self) -> u32 {
        match self.layout {
            NodeLayout::SendersPlusOneReceiver => self.n_senders + 1,
            NodeLayout::MPlusQ => self.n_senders + self.hyper_q,
        }
    }
}

fn check_probability(p_s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p_s) {
        return Err(invalid("p_s", format!("must lie in [0, 1], got {p_s}")));
    }
    Ok(())
}

/// `1 − (1 − p_s)^n`.
pub fn multiplexed_success(p_s: f64, n: u32) -> Result<f64> {
    check_probability(p_s)?;
    if n < 1 {
        return Err(invalid("n", "need at least one sender"));
    }
    if n == 1 {
        return Ok(p_s);
    }
    Ok(-((n as f64) * (-p_s).ln_1p()).exp_m1())
}

/// `P[Binomial(n, p_s) ≥ q]`.
///
/// Terms are generated in log space and the smaller tail is summed, so the
/// result stays accurate for `n` in the tens of thousands.
pub fn multiplexed_success_q(p_s: f64, n: u32, q: u32) -> Result<f64> {
    check_probability(p_s)?;
    if n < 1 {
        return Err(invalid("n", "need at least one sender"));
    }
    if q < 1 || q > n {
        return Err(invalid(
            "q",
            format!("must satisfy 1 ≤ q ≤ n = {n}, got {q}"),
        ));
    }
    if q == 1 {
        return multiplexed_success(p_s, n);
    }
    if p_s == 0.0 {
        return Ok(0.0);
    }
    if p_s == 1.0 {
        return Ok(1.0);
    }
    let log_pmf = binomial_log_pmf(p_s, n);
    let lower_is_small = (q as f64 - 1.0) < n as f64 * p_s;
    if lower_is_small {
        Ok((1.0 - log_sum_exp(&log_pmf[..q as usize])).max(0.0))
    } else {
        Ok(log_sum_exp(&log_pmf[q as usize..]).min(1.0))
    }
}

fn binomial_log_pmf(p: f64, n: u32) -> Vec<f64> {
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let mut out = Vec::with_capacity(n as usize + 1);
    // ln C(n, i) accumulated as a running sum of ln((n − i)/(i + 1)).
    let mut ln_binom = 0.0;
    for i in 0..=n {
        out.push(ln_binom + i as f64 * ln_p + (n - i) as f64 * ln_q);
        if i < n {
            ln_binom += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
        }
    }
    out
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max.exp() * sum
}

/// Per-round success of `mux` given the per-sender heralding probability.
fn round_success(per_sender: f64, mux: &MultiplexConfig) -> Result<f64> {
    multiplexed_success_q(per_sender, mux.n_senders, mux.q_copies)
}

fn multiplexed_result(
    p: &PhysicalParams,
    cfg: &ChainConfig,
    mux: &MultiplexConfig,
    round_probability: f64,
    policy: WaitPolicy,
) -> Result<ChainResult> {
    let l = cfg.link_km();
    let budget = LinkBudget::from_probability(round_probability, p.attempt_time(l), cfg.eps)?;
    let wait = per_link_wait(policy, &budget, cfg.n_links);
    let rate = mux.q_copies as f64 * rate_from_link_probability(p, cfg, round_probability);
    let total_qubits = cfg.n_links as f64 * mux.qubits_per_node() as f64;
    assemble(p, cfg, budget, rate, total_qubits, wait)
}

/// Chain result with `n` senders per node (`n + 1` qubits per node).
///
/// The boosted round probability replaces `p_s` in the attempt budget, the
/// rate and the storage time. Requiring `q_copies > 1` delivers that many
/// pairs per successful round.
pub fn multiplexed_chain_result(
    p: &PhysicalParams,
    cfg: &ChainConfig,
    mux: &MultiplexConfig,
    policy: WaitPolicy,
) -> Result<ChainResult> {
    p.validate()?;
    cfg.validate()?;
    mux.validate()?;
    if mux.layout != NodeLayout::SendersPlusOneReceiver {
        return Err(ModelError::LayoutMismatch {
            expected: "senders_plus_one_receiver",
        });
    }
    let per_sender = p.transmission_factor(cfg.link_km()) * p.local_efficiency();
    let round = round_success(per_sender, mux)?;
    multiplexed_result(p, cfg, mux, round, policy)
}

/// Per-photon success with `hyper_q` encoded qubits: at least one of the
/// locally coupled/detected qubits survives, times the shared transmission.
pub fn hyperencoded_photon_success(p: &PhysicalParams, l_km: f64, hyper_q: u32) -> Result<f64> {
    let local = multiplexed_success(p.local_efficiency(), hyper_q)?;
    Ok(p.transmission_factor(l_km) * local)
}

/// Chain result for `m` senders each emitting `hyper_q`-qubit photons (`m + q` qubits per node).
pub fn hyperencoded_chain_result(
    p: &PhysicalParams,
    cfg: &ChainConfig,
    mux: &MultiplexConfig,
    policy: WaitPolicy,
) -> Result<ChainResult> {
    p.validate()?;
    cfg.validate()?;
    mux.validate()?;
    if mux.layout != NodeLayout::MPlusQ {
        return Err(ModelError::LayoutMismatch {
            expected: "m_plus_q",
        });
    }
    let per_sender = hyperencoded_photon_success(p, cfg.link_km(), mux.hyper_q)?;
    let round = round_success(per_sender, mux)?;
    multiplexed_result(p, cfg, mux, round, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::evaluate_chain;
    use crate::link::attempts_for_failure_bound;
    use proptest::prelude::*;

    fn brute_force(p: f64, n: u32, q: u32) -> f64 {
        (0u32..(1 << n))
            .filter(|mask| mask.count_ones() >= q)
            .map(|mask| {
                (0..n)
                    .map(|i| if mask >> i & 1 == 1 { p } else { 1.0 - p })
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn single_copy_examples() {
        assert_eq!(multiplexed_success(0.37, 1).unwrap(), 0.37);
        assert_eq!(multiplexed_success(1.0, 9).unwrap(), 1.0);
        let v = multiplexed_success(0.1, 10).unwrap();
        assert!((v - (1.0 - 0.9f64.powi(10))).abs() < 1e-15);
        assert!((v - 0.651_321_559_9).abs() < 1e-10);
    }

    #[test]
    fn q_copy_examples() {
        for &(p, n) in &[(0.3, 5), (0.01, 12), (0.99, 3)] {
            assert_eq!(
                multiplexed_success_q(p, n, 1).unwrap(),
                multiplexed_success(p, n).unwrap()
            );
            let all = multiplexed_success_q(p, n, n).unwrap();
            assert!(
                (all - p.powi(n as i32)).abs() <= 1e-14 * p.powi(n as i32).max(1e-300) + 1e-300
            );
        }
        let v = multiplexed_success_q(0.3, 5, 2).unwrap();
        assert!((v - brute_force(0.3, 5, 2)).abs() < 1e-15);
        assert!((v - 0.471_78).abs() < 1e-12, "{v}");
        assert!(multiplexed_success_q(0.3, 5, 6).is_err());
        assert!(multiplexed_success_q(0.3, 5, 0).is_err());
    }

    #[test]
    fn large_n_is_stable() {
        use statrs::distribution::{Binomial, DiscreteCDF};
        for &(p, n, q) in &[
            (1e-3, 10_000u32, 5u32),
            (0.4, 10_000, 3_900),
            (0.4, 10_000, 4_100),
            (0.999, 10_000, 9_990),
        ] {
            let v = multiplexed_success_q(p, n, q).unwrap();
            let oracle = Binomial::new(p, n as u64).unwrap().sf(q as u64 - 1);
            assert!((v - oracle).abs() < 1e-10, "{p} {n} {q}: {v} vs {oracle}");
        }
    }

    #[test]
    fn layout_is_checked() {
        let p = PhysicalParams::default();
        let cfg = ChainConfig::default();
        let hyper = MultiplexConfig {
            layout: NodeLayout::MPlusQ,
            ..MultiplexConfig::default()
        };
        assert!(multiplexed_chain_result(&p, &cfg, &hyper, WaitPolicy::WorstCase).is_err());
        assert!(hyperencoded_chain_result(
            &p,
            &cfg,
            &MultiplexConfig::default(),
            WaitPolicy::WorstCase
        )
        .is_err());
        let bad = MultiplexConfig {
            n_senders: 2,
            q_copies: 3,
            ..MultiplexConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_sender_matches_plain_chain() {
        let p = PhysicalParams::default();
        for policy in [
            WaitPolicy::WorstCase,
            WaitPolicy::UntilLastLink,
            WaitPolicy::ExpectedConditional,
        ] {
            for (l, n) in [(200.0, 20), (350.0, 7), (500.0, 64)] {
                let cfg = ChainConfig::new(l, n, 0.01);
                let plain = evaluate_chain(&p, &cfg, policy).unwrap();
                let mux = multiplexed_chain_result(&p, &cfg, &MultiplexConfig::default(), policy)
                    .unwrap();
                let hyper_cfg = MultiplexConfig {
                    layout: NodeLayout::MPlusQ,
                    ..MultiplexConfig::default()
                };
                let hyper = hyperencoded_chain_result(&p, &cfg, &hyper_cfg, policy).unwrap();
                for r in [mux, hyper] {
                    assert_eq!(r.rate_hz, plain.rate_hz);
                    assert_eq!(r.fidelity, plain.fidelity);
                    assert_eq!(r.skr_bits_per_s, plain.skr_bits_per_s);
                    assert_eq!(r.total_qubits, plain.total_qubits);
                }
            }
        }
    }

    #[test]
    fn boosted_budget_needs_fewer_attempts() {
        let p = PhysicalParams::default();
        let ps = p.transmission_factor(40.0) * p.local_efficiency();
        let base = attempts_for_failure_bound(ps, 0.01).unwrap().n_attempts;
        for n in 2..16 {
            let boosted = multiplexed_success(ps, n).unwrap();
            assert!(
                attempts_for_failure_bound(boosted, 0.01)
                    .unwrap()
                    .n_attempts
                    <= base
            );
        }
    }

    #[test]
    fn hyper_q_one_equals_multiplex_with_m_senders() {
        let p = PhysicalParams::default();
        let cfg = ChainConfig::new(350.0, 25, 0.01);
        for m in [1, 3, 8] {
            let mux = MultiplexConfig {
                n_senders: m,
                ..MultiplexConfig::default()
            };
            let hyper = MultiplexConfig {
                layout: NodeLayout::MPlusQ,
                ..mux
            };
            let a = multiplexed_chain_result(&p, &cfg, &mux, WaitPolicy::UntilLastLink).unwrap();
            let b = hyperencoded_chain_result(&p, &cfg, &hyper, WaitPolicy::UntilLastLink).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn hyper_encoding_is_monotone_in_q() {
        let p = PhysicalParams::default();
        let cfg = ChainConfig::new(500.0, 40, 0.01);
        let mut prev = 0.0;
        for q in 1..=8 {
            let mux = MultiplexConfig {
                layout: NodeLayout::MPlusQ,
                hyper_q: q,
                ..MultiplexConfig::default()
            };
            let r = hyperencoded_chain_result(&p, &cfg, &mux, WaitPolicy::UntilLastLink).unwrap();
            assert!(r.rate_hz >= prev);
            prev = r.rate_hz;
        }
    }

    proptest! {
        #[test]
        fn matches_enumeration(p in 0.0..=1.0f64, n in 1u32..=12, q_frac in 0.0..1.0f64) {
            let q = 1 + ((n as f64 - 1.0) * q_frac).round() as u32;
            let v = multiplexed_success_q(p, n, q).unwrap();
            prop_assert!((v - brute_force(p, n, q)).abs() <= 1e-12);
        }

        #[test]
        fn monotone(p in 0.0..1.0f64, n in 1u32..40, q in 1u32..40) {
            prop_assume!(q <= n);
            let v = multiplexed_success_q(p, n, q).unwrap();
            prop_assert!(multiplexed_success_q(p, n + 1, q).unwrap() >= v - 1e-15);
            prop_assert!(multiplexed_success_q((p + 0.01).min(1.0), n, q).unwrap() >= v - 1e-15);
            if q < n {
                prop_assert!(multiplexed_success_q(p, n, q + 1).unwrap() <= v + 1e-15);
            }
        }
    }
}
