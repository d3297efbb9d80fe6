//! Monte Carlo of the repeat-until-success chain protocol.
//!
//! Every link starts at `t = 0` and makes slotted attempts of length
//! `t_attempt = 2L/c + t_local` until it heralds or exhausts its cap. A trial
//! succeeds when all links herald. Each stored link dephases for its wait
//! `t_i`, giving a trial fidelity `Π (1 + e^(−t_i/T2))/2 · F_gate^(N−1)`.
//!
//! Trial `i` draws from its own ChaCha8 stream keyed by `(seed, i)`, and sums
//! are taken in trial order, so an [`MCEstimate`] is bit-identical for a given
//! seed whatever the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{
    chain_fidelity, expected_max_attempts, secret_fraction, ChainConfig, WaitPolicy,
};
use crate::error::{invalid, Result};
use crate::link::{
    attempts_for_failure_bound, failure_after, link_success_probability, PhysicalParams,
};

pub const MIN_TRIALS_FOR_ERRORS: u64 = 100;

/// How stored links are timed in a simulated round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SimWait {
    /// Links wait until the whole budget `cap · t_attempt` has elapsed.
    WorstCase,
    /// Links wait only until the slowest link heralds.
    #[default]
    UntilLastLink,
}

impl SimWait {
    pub fn as_wait_policy(self) -> WaitPolicy {
        match self {
            SimWait::WorstCase => WaitPolicy::WorstCase,
            SimWait::UntilLastLink => WaitPolicy::UntilLastLink,
        }
    }
}

impl TryFrom<WaitPolicy> for SimWait {
    type Error = crate::ModelError;

    fn try_from(policy: WaitPolicy) -> Result<Self> {
        match policy {
            WaitPolicy::WorstCase => Ok(SimWait::WorstCase),
            WaitPolicy::UntilLastLink => Ok(SimWait::UntilLastLink),
            other => Err(invalid(
                "wait_policy",
                format!("`{other}` is not simulated; use worst_case or until_last_link"),
            )),
        }
    }
}

impl std::fmt::Display for SimWait {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.as_wait_policy().fmt(f)
    }
}

impl std::str::FromStr for SimWait {
    type Err = crate::ModelError;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<WaitPolicy>()?.try_into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub wait_policy: SimWait,
    /// Per-link attempt cap; `None` takes it from the failure bound `eps`.
    pub attempt_cap: Option<u64>,
    pub record_traces: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 0,
            wait_policy: SimWait::UntilLastLink,
            attempt_cap: None,
            record_traces: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(invalid("trials", "need at least one trial"));
        }
        if self.attempt_cap == Some(0) {
            return Err(invalid("attempt_cap", "cap must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of one link's attempts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkOutcome {
    pub success: bool,
    pub attempts: u64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainTrial {
    pub success: bool,
    pub completion_time_s: f64,
    pub per_link_attempts: Vec<u64>,
    pub per_link_dephasing_weight: Vec<f64>,
    pub final_fidelity: Option<f64>,
}

/// One row of the optional per-trial trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub trial: u64,
    pub success: bool,
    pub completion_s: f64,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCEstimate {
    pub rate_hz: f64,
    pub rate_se: f64,
    pub fidelity: f64,
    pub fidelity_se: f64,
    pub skr_bits_per_s: f64,
    pub normalized_skr: f64,
    pub chain_success_fraction: f64,
    pub success_se: f64,
    pub mean_completion_s: f64,
    /// Mean storage time over every link of every successful trial.
    pub mean_per_link_wait_s: f64,
    pub trials_used: u64,
    pub successes: u64,
    pub attempt_cap: u64,
    /// Set when no trial succeeded; rate is then 0 and fidelity NaN.
    pub degenerate: bool,
    #[serde(skip)]
    pub traces: Option<Vec<TraceRow>>,
}

/// Stream for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Attempt on which a link first heralds, or `None` past `cap`.
fn sample_attempts<R: Rng + ?Sized>(p_s: f64, cap: u64, rng: &mut R) -> Option<u64> {
    if p_s >= 1.0 {
        return Some(1);
    }
    if p_s <= 0.0 {
        return None;
    }
    // 1 − U lies in (0, 1], so the log is finite.
    let u = 1.0 - rng.random::<f64>();
    let k = 1 + (u.ln() / (-p_s).ln_1p()).floor() as u64;
    (k <= cap).then_some(k)
}

/// One link's repeat-until-success run with at most `cap` attempts.
pub fn simulate_link<R: Rng + ?Sized>(
    p: &PhysicalParams,
    l_km: f64,
    cap: u64,
    rng: &mut R,
) -> Result<LinkOutcome> {
    if cap < 1 {
        return Err(invalid("cap", "cap must be at least 1"));
    }
    let p_s = link_success_probability(p, l_km)?;
    let t_attempt = p.attempt_time(l_km);
    let (success, attempts) = match sample_attempts(p_s, cap, rng) {
        Some(k) => (true, k),
        None => (false, cap),
    };
    Ok(LinkOutcome {
        success,
        attempts,
        elapsed_s: attempts as f64 * t_attempt,
    })
}

#[derive(Debug, Clone, Copy)]
struct Plan {
    p_s: f64,
    t_attempt: f64,
    cap: u64,
    links: u32,
    t2: f64,
    f_gate: f64,
    wait: SimWait,
}

impl Plan {
    fn new(p: &PhysicalParams, cfg: &ChainConfig, sim: &SimConfig) -> Result<Self> {
        p.validate()?;
        cfg.validate()?;
        sim.validate()?;
        let l = cfg.link_km();
        let p_s = link_success_probability(p, l)?;
        let cap = match sim.attempt_cap {
            Some(cap) => cap,
            None => attempts_for_failure_bound(p_s, cfg.eps)?.n_attempts,
        };
        Ok(Self {
            p_s,
            t_attempt: p.attempt_time(l),
            cap,
            links: cfg.n_links,
            t2: p.t2_s,
            f_gate: p.f_gate,
            wait: sim.wait_policy,
        })
    }

    fn run(&self, rng: &mut ChaCha8Rng) -> ChainTrial {
        let attempts: Vec<Option<u64>> = (0..self.links)
            .map(|_| sample_attempts(self.p_s, self.cap, rng))
            .collect();
        let success = attempts.iter().all(Option::is_some);
        let per_link_attempts: Vec<u64> = attempts.iter().map(|k| k.unwrap_or(self.cap)).collect();
        let last = per_link_attempts.iter().copied().max().unwrap_or(0);
        if !success {
            return ChainTrial {
                success,
                completion_time_s: last as f64 * self.t_attempt,
                per_link_attempts,
                per_link_dephasing_weight: Vec::new(),
                final_fidelity: None,
            };
        }
        let release = match self.wait {
            SimWait::UntilLastLink => last,
            SimWait::WorstCase => self.cap,
        };
        let weights: Vec<f64> = per_link_attempts
            .iter()
            .map(|&k| (-((release - k) as f64 * self.t_attempt) / self.t2).exp())
            .collect();
        let link_product: f64 = weights.iter().map(|w| (1.0 + w) / 2.0).product();
        ChainTrial {
            success,
            completion_time_s: release as f64 * self.t_attempt,
            per_link_attempts,
            per_link_dephasing_weight: weights,
            final_fidelity: Some(link_product * self.f_gate.powi(self.links as i32 - 1)),
        }
    }

    fn mean_wait(&self, trial: &ChainTrial) -> f64 {
        let release = (trial.completion_time_s / self.t_attempt).round() as u64;
        let total: u64 = trial.per_link_attempts.iter().map(|&k| release - k).sum();
        total as f64 * self.t_attempt / self.links as f64
    }
}

/// One simulated round of the whole chain.
pub fn simulate_chain(
    p: &PhysicalParams,
    cfg: &ChainConfig,
    sim: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ChainTrial> {
    Ok(Plan::new(p, cfg, sim)?.run(rng))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Sum {
    total: f64,
    carry: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.total + x;
        if self.total.abs() >= x.abs() {
            self.carry += (self.total - t) + x;
        } else {
            self.carry += (x - t) + self.total;
        }
        self.total = t;
    }

    fn value(&self) -> f64 {
        self.total + self.carry
    }
}

#[derive(Debug, Clone, Copy)]
struct Summary {
    success: bool,
    completion: f64,
    fidelity: f64,
    mean_wait: f64,
}

/// Aggregate `sim.trials` independent rounds.
pub fn estimate(p: &PhysicalParams, cfg: &ChainConfig, sim: &SimConfig) -> Result<MCEstimate> {
    let plan = Plan::new(p, cfg, sim)?;
    if sim.trials < MIN_TRIALS_FOR_ERRORS {
        return Err(invalid(
            "trials",
            format!("need at least {MIN_TRIALS_FOR_ERRORS} trials for standard errors"),
        ));
    }
    let summaries: Vec<Summary> = (0..sim.trials)
        .into_par_iter()
        .map(|i| {
            let trial = plan.run(&mut trial_rng(sim.seed, i));
            Summary {
                success: trial.success,
                completion: trial.completion_time_s,
                fidelity: trial.final_fidelity.unwrap_or(f64::NAN),
                mean_wait: if trial.success {
                    plan.mean_wait(&trial)
                } else {
                    0.0
                },
            }
        })
        .collect();

    let traces = sim.record_traces.then(|| {
        summaries
            .iter()
            .enumerate()
            .map(|(i, s)| TraceRow {
                trial: i as u64,
                success: s.success,
                completion_s: s.completion,
                fidelity: s.success.then_some(s.fidelity),
            })
            .collect()
    });

    let n = sim.trials as f64;
    let mut successes = 0u64;
    let (mut b, mut bb, mut f, mut ff, mut w) = (
        Sum::default(),
        Sum::default(),
        Sum::default(),
        Sum::default(),
        Sum::default(),
    );
    for s in summaries.iter().filter(|s| s.success) {
        successes += 1;
        b.add(s.completion);
        bb.add(s.completion * s.completion);
        f.add(s.fidelity);
        ff.add(s.fidelity * s.fidelity);
        w.add(s.mean_wait);
    }
    let [b, bb, f, ff, w] = [b, bb, f, ff, w].map(|s| s.value());

    let frac = successes as f64 / n;
    let success_se = (frac * (1.0 - frac) / (n - 1.0)).max(0.0).sqrt();
    let total_qubits = cfg.total_qubits();

    if successes == 0 {
        return Ok(MCEstimate {
            rate_hz: 0.0,
            rate_se: 0.0,
            fidelity: f64::NAN,
            fidelity_se: f64::NAN,
            skr_bits_per_s: 0.0,
            normalized_skr: 0.0,
            chain_success_fraction: 0.0,
            success_se,
            mean_completion_s: f64::NAN,
            mean_per_link_wait_s: f64::NAN,
            trials_used: sim.trials,
            successes,
            attempt_cap: plan.cap,
            degenerate: true,
            traces,
        });
    }

    let k = successes as f64;
    let mean_completion = b / k;
    let rate = frac / mean_completion;

    // Delta method on rate = ā²/b̄ with a = 1[success], b = a · completion.
    let a_bar = frac;
    let b_bar = b / n;
    let var_a = frac * (1.0 - frac) * n / (n - 1.0);
    let var_b = (bb - n * b_bar * b_bar) / (n - 1.0);
    let cov_ab = (b - n * a_bar * b_bar) / (n - 1.0);
    let ga = 2.0 * a_bar / b_bar;
    let gb = -a_bar * a_bar / (b_bar * b_bar);
    let rate_var = (ga * ga * var_a + 2.0 * ga * gb * cov_ab + gb * gb * var_b) / n;

    let fidelity = f / k;
    let fidelity_se = if successes > 1 {
        ((ff - k * fidelity * fidelity) / (k - 1.0)).max(0.0).sqrt() / k.sqrt()
    } else {
        0.0
    };
    let secret = secret_fraction(fidelity.clamp(0.0, 1.0))?;

    Ok(MCEstimate {
        rate_hz: rate,
        rate_se: rate_var.max(0.0).sqrt(),
        fidelity,
        fidelity_se,
        skr_bits_per_s: rate * secret,
        normalized_skr: rate * secret / total_qubits,
        chain_success_fraction: frac,
        success_se,
        mean_completion_s: mean_completion,
        mean_per_link_wait_s: w / k,
        trials_used: sim.trials,
        successes,
        attempt_cap: plan.cap,
        degenerate: false,
        traces,
    })
}

/// Probability that all links herald within the cap, `(1 − ε_res)^N`.
pub fn expected_success_fraction(
    p: &PhysicalParams,
    cfg: &ChainConfig,
    cap: Option<u64>,
) -> Result<f64> {
    let plan = Plan::new(
        p,
        cfg,
        &SimConfig {
            attempt_cap: cap,
            ..SimConfig::default()
        },
    )?;
    Ok((1.0 - failure_after(plan.p_s, plan.cap)).powi(cfg.n_links as i32))
}

/// Exact long-run rate of the slotted protocol the simulator runs.
///
/// `(1 − ε_res)^N` divided by the mean completion time of a successful round,
/// which is `cap · t_attempt` or `E[max K_i] · t_attempt`.
pub fn slotted_chain_rate(p: &PhysicalParams, cfg: &ChainConfig, sim: &SimConfig) -> Result<f64> {
    let plan = Plan::new(p, cfg, sim)?;
    let frac = (1.0 - failure_after(plan.p_s, plan.cap)).powi(cfg.n_links as i32);
    let slots = match plan.wait {
        SimWait::WorstCase => plan.cap as f64,
        SimWait::UntilLastLink => expected_max_attempts(plan.p_s, plan.cap, plan.links),
    };
    Ok(frac / (slots * plan.t_attempt))
}

/// Chain fidelity with every link stored for `mean_wait_s`, the analytic
/// counterpart of [`MCEstimate::fidelity`].
pub fn matched_wait_fidelity(
    p: &PhysicalParams,
    cfg: &ChainConfig,
    mean_wait_s: f64,
) -> Result<f64> {
    chain_fidelity(p, cfg, mean_wait_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn certain() -> PhysicalParams {
        // p_s = e^(−L/L0)·(1−T)·p_c·p_D/2 rounds to exactly 1 with a huge L0.
        PhysicalParams {
            l0_km: 1e300,
            p_c: 1.0,
            p_d: 1.0,
            ..PhysicalParams::default()
        }
    }

    #[test]
    fn certain_link_succeeds_first_time() {
        let p = certain();
        let mut rng = trial_rng(1, 0);
        for _ in 0..100 {
            let out = simulate_link(&p, 10.0, 5, &mut rng).unwrap();
            assert!(out.success);
            assert_eq!(out.attempts, 1);
            assert_eq!(out.elapsed_s, p.attempt_time(10.0));
        }
        assert!(simulate_link(&p, 10.0, 0, &mut rng).is_err());
    }

    #[test]
    fn certain_chain_examples() {
        let p = certain();
        let sim = SimConfig::default();
        let mut rng = trial_rng(3, 0);
        let one = simulate_chain(&p, &ChainConfig::new(10.0, 1, 0.01), &sim, &mut rng).unwrap();
        assert_eq!(one.final_fidelity, Some(1.0));
        assert_eq!(one.completion_time_s, p.attempt_time(10.0));
        let two = simulate_chain(&p, &ChainConfig::new(20.0, 2, 0.01), &sim, &mut rng).unwrap();
        assert_eq!(two.per_link_dephasing_weight, vec![1.0, 1.0]);
        assert_eq!(two.final_fidelity, Some(p.f_gate));
    }

    #[test]
    fn certain_single_link_rate_is_exact() {
        let p = certain();
        let cfg = ChainConfig::new(10.0, 1, 0.01);
        let sim = SimConfig {
            trials: 1_000,
            ..SimConfig::default()
        };
        let est = estimate(&p, &cfg, &sim).unwrap();
        assert_eq!(est.rate_hz, p.c_km_s / 20.0);
        assert_eq!(est.rate_se, 0.0);
        assert_eq!(est.chain_success_fraction, 1.0);
    }

    #[test]
    fn geometric_mean_given_success() {
        let mut rng = trial_rng(11, 0);
        let trials = 1_000_000;
        let (mut sum, mut sum_sq, mut count) = (0.0, 0.0, 0.0);
        for _ in 0..trials {
            if let Some(k) = sample_attempts(0.5, 40, &mut rng) {
                let k = k as f64;
                sum += k;
                sum_sq += k * k;
                count += 1.0;
            }
        }
        let mean = sum / count;
        let se = ((sum_sq / count - mean * mean) / count).sqrt();
        // Truncated mean 1/p − n q^n/(1 − q^n) is 2 to within 4e-11 here.
        assert!((mean - 2.0).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn failure_fraction_matches_tail() {
        let mut rng = trial_rng(12, 0);
        let (p_s, cap, trials) = (0.1, 10, 400_000);
        let failures = (0..trials)
            .filter(|_| sample_attempts(p_s, cap, &mut rng).is_none())
            .count() as f64;
        let expected = failure_after(p_s, cap);
        let se = (expected * (1.0 - expected) / trials as f64).sqrt();
        let observed = failures / trials as f64;
        assert!(
            (observed - expected).abs() < 3.0 * se,
            "{observed} vs {expected}"
        );
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let p = PhysicalParams::default();
        let cfg = ChainConfig::new(200.0, 20, 0.01);
        let sim = SimConfig {
            trials: 20_000,
            seed: 99,
            ..SimConfig::default()
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate(&p, &cfg, &sim).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a, b);
        assert_eq!(a.rate_hz.to_bits(), b.rate_hz.to_bits());
        let c = estimate(&p, &cfg, &SimConfig { seed: 100, ..sim }).unwrap();
        assert_ne!(a.rate_hz, c.rate_hz);
    }

    #[test]
    fn standard_error_scales_with_root_trials() {
        let p = PhysicalParams::default();
        let cfg = ChainConfig::new(200.0, 20, 0.01);
        let big = SimConfig {
            trials: 80_000,
            seed: 5,
            ..SimConfig::default()
        };
        let small = SimConfig {
            trials: 20_000,
            ..big
        };
        let a = estimate(&p, &cfg, &big).unwrap();
        let b = estimate(&p, &cfg, &small).unwrap();
        let growth = b.rate_se / a.rate_se;
        assert!((growth - 2.0).abs() < 0.6, "{growth}");
    }

    #[test]
    fn trial_fidelity_bounds() {
        let p = PhysicalParams {
            t2_s: 1e-4,
            ..PhysicalParams::default()
        };
        let cfg = ChainConfig::new(500.0, 10, 0.01);
        let floor = 0.5f64.powi(10) * p.f_gate.powi(9);
        for policy in [SimWait::WorstCase, SimWait::UntilLastLink] {
            let sim = SimConfig {
                wait_policy: policy,
                ..SimConfig::default()
            };
            for i in 0..2_000 {
                let t = simulate_chain(&p, &cfg, &sim, &mut trial_rng(8, i)).unwrap();
                if let Some(f) = t.final_fidelity {
                    assert!(f >= floor && f <= 1.0, "{f}");
                }
            }
        }
    }

    #[test]
    fn attempts_never_exceed_cap() {
        let p = PhysicalParams::default();
        let cfg = ChainConfig::new(500.0, 5, 0.1);
        let sim = SimConfig {
            attempt_cap: Some(3),
            ..SimConfig::default()
        };
        for i in 0..2_000 {
            let t = simulate_chain(&p, &cfg, &sim, &mut trial_rng(4, i)).unwrap();
            assert!(t.per_link_attempts.iter().all(|&k| (1..=3).contains(&k)));
            assert_eq!(t.success, t.final_fidelity.is_some());
        }
    }

    #[test]
    fn fidelity_matches_analytic_with_measured_wait() {
        let p = PhysicalParams::default();
        let cfg = ChainConfig::new(200.0, 20, 0.01);
        let sim = SimConfig {
            trials: 100_000,
            seed: 21,
            ..SimConfig::default()
        };
        let est = estimate(&p, &cfg, &sim).unwrap();
        let analytic = matched_wait_fidelity(&p, &cfg, est.mean_per_link_wait_s).unwrap();
        assert!(
            (est.fidelity - analytic).abs() < 3.0 * est.fidelity_se,
            "{} ± {} vs {analytic}",
            est.fidelity,
            est.fidelity_se
        );
    }

    #[test]
    fn rate_matches_slotted_closed_form() {
        let p = PhysicalParams::default();
        let cfg = ChainConfig::new(350.0, 20, 0.1);
        for policy in [SimWait::WorstCase, SimWait::UntilLastLink] {
            let sim = SimConfig {
                trials: 50_000,
                seed: 2,
                wait_policy: policy,
                ..SimConfig::default()
            };
            let est = estimate(&p, &cfg, &sim).unwrap();
            let exact = slotted_chain_rate(&p, &cfg, &sim).unwrap();
            assert!(
                (est.rate_hz - exact).abs() < 3.0 * est.rate_se,
                "{policy}: {} vs {exact}",
                est.rate_hz
            );
            let frac = expected_success_fraction(&p, &cfg, None).unwrap();
            assert!((est.chain_success_fraction - frac).abs() < 3.0 * est.success_se);
        }
    }

    #[test]
    fn zero_successes_are_flagged() {
        let p = PhysicalParams::default();
        let cfg = ChainConfig::new(2000.0, 5, 0.5);
        let sim = SimConfig {
            trials: 200,
            attempt_cap: Some(1),
            ..SimConfig::default()
        };
        let est = estimate(&p, &cfg, &sim).unwrap();
        assert!(est.degenerate);
        assert_eq!(est.rate_hz, 0.0);
        assert!(est.fidelity.is_nan());
    }

    #[test]
    fn rejects_small_trial_counts() {
        let p = PhysicalParams::default();
        let cfg = ChainConfig::default();
        let sim = SimConfig {
            trials: 99,
            ..SimConfig::default()
        };
        assert!(estimate(&p, &cfg, &sim).is_err());
        assert!(SimConfig { trials: 0, ..sim }.validate().is_err());
    }

    #[test]
    fn traces_follow_trial_order() {
        let p = PhysicalParams::default();
        let cfg = ChainConfig::new(200.0, 4, 0.1);
        let sim = SimConfig {
            trials: 300,
            seed: 6,
            record_traces: true,
            ..SimConfig::default()
        };
        let est = estimate(&p, &cfg, &sim).unwrap();
        let traces = est.traces.unwrap();
        assert_eq!(traces.len(), 300);
        let t7 = simulate_chain(&p, &cfg, &sim, &mut trial_rng(6, 7)).unwrap();
        assert_eq!(traces[7].trial, 7);
        assert_eq!(traces[7].success, t7.success);
        assert_eq!(traces[7].fidelity, t7.final_fidelity);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("worst_case".parse::<SimWait>().unwrap(), SimWait::WorstCase);
        assert!("expected_conditional".parse::<SimWait>().is_err());
        assert_eq!(SimWait::UntilLastLink.to_string(), "until_last_link");
    }
}
