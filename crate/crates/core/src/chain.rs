//! End-to-end quantities for a linear chain of `N` equal links (`N + 1` nodes).
//!
//! Rates follow the repeat-until-success budget of each link: every link is
//! given enough attempts to reach failure probability `ε`, so the chain
//! completes a round with probability `(1 − ε)^N`. Fidelities compose as
//! `F^N · F_gate^(N−1)` with `F` the dephased link fidelity after the
//! per-link storage time chosen by a [`WaitPolicy`].

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, ModelError, Result};
use crate::link::{
    check_eps, expected_attempts_given_success, link_success_probability, memory_fidelity,
    LinkBudget, PhysicalParams,
};

/// Chain geometry and protocol knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub l_tot_km: f64,
    /// Number of links; the chain has `n_links + 1` nodes.
    pub n_links: u32,
    /// Per-link failure budget.
    pub eps: f64,
    /// Qubits per node used for rate normalisation.
    pub qubits_per_node: u32,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            l_tot_km: 200.0,
            n_links: 20,
            eps: 0.01,
            qubits_per_node: 2,
        }
    }
}

impl ChainConfig {
    pub fn new(l_tot_km: f64, n_links: u32, eps: f64) -> Self {
        Self {
            l_tot_km,
            n_links,
            eps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_tot_km > 0.0 && self.l_tot_km.is_finite()) {
            return Err(invalid("l_tot_km", "total distance must be positive"));
        }
        if self.n_links < 1 {
            return Err(invalid("n_links", "need at least one link"));
        }
        check_eps(self.eps)?;
        if self.qubits_per_node < 1 {
            return Err(invalid(
                "qubits_per_node",
                "need at least one qubit per node",
            ));
        }
        Ok(())
    }

    pub fn link_km(&self) -> f64 {
        self.l_tot_km / self.n_links as f64
    }

    /// Qubits in the whole network under the normalisation convention.
    pub fn total_qubits(&self) -> f64 {
        self.n_links as f64 * self.qubits_per_node as f64
    }
}

/// How long each link sits in memory before the swaps complete.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaitPolicy {
    /// A fixed storage time in seconds.
    Fixed(f64),
    /// The whole attempt budget `n · t_attempt`.
    WorstCase,
    /// `t_attempt / p_s`, capped at the budget.
    ExpectedConditional,
    /// Expected gap between a link's herald and the last herald in the chain.
    UntilLastLink,
}

impl fmt::Display for WaitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WaitPolicy::Fixed(s) => write!(f, "fixed:{s}"),
            WaitPolicy::WorstCase => f.write_str("worst_case"),
            WaitPolicy::ExpectedConditional => f.write_str("expected_conditional"),
            WaitPolicy::UntilLastLink => f.write_str("until_last_link"),
        }
    }
}

impl FromStr for WaitPolicy {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "worst_case" => Ok(WaitPolicy::WorstCase),
            "expected_conditional" => Ok(WaitPolicy::ExpectedConditional),
            "until_last_link" => Ok(WaitPolicy::UntilLastLink),
            other => match other.strip_prefix("fixed:").map(str::parse::<f64>) {
                Some(Ok(secs)) if secs >= 0.0 => Ok(WaitPolicy::Fixed(secs)),
                _ => Err(invalid(
                    "wait_policy",
                    format!(
                        "unknown policy `{other}` (worst_case, expected_conditional, \
                         until_last_link, fixed:<seconds>)"
                    ),
                )),
            },
        }
    }
}

// Above this budget the exact sum is replaced by its Euler–Maclaurin integral.
const EXACT_SUM_LIMIT: u64 = 20_000;
const SIMPSON_PANELS: usize = 4_000;

/// `E[max(K_1..K_N)]` for i.i.d. attempt counts truncated to `1..=n`
/// (geometric with success probability `p`, conditioned on success).
pub fn expected_max_attempts(p: f64, n: u64, links: u32) -> f64 {
    if p >= 1.0 || n <= 1 {
        return 1.0;
    }
    if links <= 1 {
        return expected_attempts_given_success(p, n);
    }
    if n <= EXACT_SUM_LIMIT {
        expected_max_exact(p, n, links)
    } else {
        expected_max_integral(p, n, links)
    }
}

fn truncated_cdf(p: f64, n: u64) -> impl Fn(f64) -> f64 {
    let log_q = (-p).ln_1p();
    let norm = -((n as f64) * log_q).exp_m1();
    move |k: f64| -(k * log_q).exp_m1() / norm
}

fn expected_max_exact(p: f64, n: u64, links: u32) -> f64 {
    let cdf = truncated_cdf(p, n);
    (0..n).map(|k| 1.0 - cdf(k as f64).powi(links as i32)).sum()
}

fn expected_max_integral(p: f64, n: u64, links: u32) -> f64 {
    let cdf = truncated_cdf(p, n);
    let g = |x: f64| 1.0 - cdf(x).powi(links as i32);
    let h = n as f64 / SIMPSON_PANELS as f64;
    let mut acc = g(0.0) + g(n as f64);
    for i in 1..SIMPSON_PANELS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(i as f64 * h);
    }
    // Σ_{k=0}^{n-1} g(k) ≈ ∫_0^n g + (g(0) − g(n))/2, with g(0) = 1, g(n) = 0.
    acc * h / 3.0 + 0.5
}

/// Storage time of a single link under `policy`, in seconds.
pub fn per_link_wait(policy: WaitPolicy, budget: &LinkBudget, links: u32) -> f64 {
    match policy {
        WaitPolicy::Fixed(s) => s,
        WaitPolicy::WorstCase => budget.t_budget(),
        WaitPolicy::ExpectedConditional => (budget.t_attempt / budget.p_s).min(budget.t_budget()),
        WaitPolicy::UntilLastLink => {
            if links <= 1 {
                return 0.0;
            }
            let gap = expected_max_attempts(budget.p_s, budget.n_attempts, links)
                - expected_attempts_given_success(budget.p_s, budget.n_attempts);
            gap.max(0.0) * budget.t_attempt
        }
    }
}

/// `−(1−ε)^N · c · p / (2 L ln ε)` for a per-link success probability `p`.
pub(crate) fn rate_from_link_probability(
    p: &PhysicalParams,
    cfg: &ChainConfig,
    link_probability: f64,
) -> f64 {
    let n = cfg.n_links as i32;
    -(1.0 - cfg.eps).powi(n) * p.c_km_s * link_probability / (2.0 * cfg.link_km() * cfg.eps.ln())
}

/// End-to-end Bell-pair rate
/// `R_net = −(1−ε)^N (N e^(−L_tot/(N L0)) / L_tot) · c p_c p_D (1−T) / (4 ln ε)`.
pub fn chain_rate(p: &PhysicalParams, cfg: &ChainConfig) -> Result<f64> {
    cfg.validate()?;
    let ps = link_success_probability(p, cfg.link_km())?;
    Ok(rate_from_link_probability(p, cfg, ps))
}

/// `R_net / (N · qubits_per_node)`; with two qubits per node this is `R_net / 2N`.
pub fn normalized_chain_rate(p: &PhysicalParams, cfg: &ChainConfig) -> Result<f64> {
    Ok(chain_rate(p, cfg)? / cfg.total_qubits())
}

/// `F_net = F^N · F_gate^(N−1)` with `F` the link fidelity after `per_link_wait` seconds.
pub fn chain_fidelity(p: &PhysicalParams, cfg: &ChainConfig, per_link_wait: f64) -> Result<f64> {
    p.validate()?;
    cfg.validate()?;
    if !(per_link_wait >= 0.0) {
        return Err(invalid("per_link_wait", "must be non-negative"));
    }
    let link = memory_fidelity(per_link_wait, p.t2_s);
    Ok(compose_fidelity(link, p.f_gate, cfg.n_links))
}

pub(crate) fn compose_fidelity(link: f64, f_gate: f64, links: u32) -> f64 {
    link.powi(links as i32) * f_gate.powi(links as i32 - 1)
}

/// `H[x] = −x log₂ x − (1−x) log₂ (1−x)`, with `H[0] = H[1] = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(
            "x",
            format!("entropy argument must lie in [0, 1], got {x}"),
        ));
    }
    let term = |v: f64| if v > 0.0 { -v * v.log2() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

/// Secret fraction `max(0, 1 − H[1 − F])`.
pub fn secret_fraction(fidelity: f64) -> Result<f64> {
    let err = (1.0 - fidelity).clamp(0.0, 1.0);
    Ok((1.0 - binary_entropy(err)?).max(0.0))
}

/// Rates, fidelity and key rates for one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainResult {
    pub n_links: u32,
    pub rate_hz: f64,
    pub normalized_rate_hz_per_qubit: f64,
    pub fidelity: f64,
    pub skr_bits_per_s: f64,
    pub normalized_skr: f64,
    pub per_link_distance_km: f64,
    pub per_link_fidelity: f64,
    pub per_link_wait_s: f64,
    pub total_qubits: f64,
    pub budget: LinkBudget,
}

pub(crate) fn assemble(
    p: &PhysicalParams,
    cfg: &ChainConfig,
    budget: LinkBudget,
    rate_hz: f64,
    total_qubits: f64,
    per_link_wait_s: f64,
) -> Result<ChainResult> {
    let per_link_fidelity = memory_fidelity(per_link_wait_s, p.t2_s);
    let fidelity = compose_fidelity(per_link_fidelity, p.f_gate, cfg.n_links);
    let secret = secret_fraction(fidelity)?;
    let normalized = rate_hz / total_qubits;
    Ok(ChainResult {
        n_links: cfg.n_links,
        rate_hz,
        normalized_rate_hz_per_qubit: normalized,
        fidelity,
        skr_bits_per_s: rate_hz * secret,
        normalized_skr: normalized * secret,
        per_link_distance_km: cfg.link_km(),
        per_link_fidelity,
        per_link_wait_s,
        total_qubits,
        budget,
    })
}

fn chain_budget(p: &PhysicalParams, cfg: &ChainConfig) -> Result<LinkBudget> {
    let l = cfg.link_km();
    let ps = link_success_probability(p, l)?;
    LinkBudget::from_probability(ps, p.attempt_time(l), cfg.eps)
}

/// Key rates `C_r = R_net·(1 − H[ε_f])` and `C̄_r = R̄_net·(1 − H[ε_f])`, clamped at zero.
pub fn secret_key_rate(
    p: &PhysicalParams,
    cfg: &ChainConfig,
    per_link_wait: f64,
) -> Result<ChainResult> {
    if !(per_link_wait >= 0.0) {
        return Err(invalid("per_link_wait", "must be non-negative"));
    }
    let rate = chain_rate(p, cfg)?;
    let budget = chain_budget(p, cfg)?;
    assemble(p, cfg, budget, rate, cfg.total_qubits(), per_link_wait)
}

/// [`secret_key_rate`] with the storage time taken from `policy`.
pub fn evaluate_chain(
    p: &PhysicalParams,
    cfg: &ChainConfig,
    policy: WaitPolicy,
) -> Result<ChainResult> {
    cfg.validate()?;
    let budget = chain_budget(p, cfg)?;
    secret_key_rate(p, cfg, per_link_wait(policy, &budget, cfg.n_links))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    RawSkr,
    NormalizedSkr,
    Rate,
    Fidelity,
}

impl Objective {
    pub fn score(self, r: &ChainResult) -> f64 {
        match self {
            Objective::RawSkr => r.skr_bits_per_s,
            Objective::NormalizedSkr => r.normalized_skr,
            Objective::Rate => r.rate_hz,
            Objective::Fidelity => r.fidelity,
        }
    }
}

impl FromStr for Objective {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw_skr" => Ok(Objective::RawSkr),
            "normalized_skr" => Ok(Objective::NormalizedSkr),
            "rate" => Ok(Objective::Rate),
            "fidelity" => Ok(Objective::Fidelity),
            other => Err(invalid("objective", format!("unknown objective `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeScan {
    pub best_n: u32,
    pub best: ChainResult,
    /// One entry per scanned `N`, ascending.
    pub sweep: Vec<ChainResult>,
}

/// Evaluates every `N` in `n_range` (in parallel, output in ascending order).
pub fn sweep_node_count(
    p: &PhysicalParams,
    template: &ChainConfig,
    n_range: RangeInclusive<u32>,
    policy: WaitPolicy,
) -> Result<Vec<ChainResult>> {
    if n_range.is_empty() {
        return Err(ModelError::EmptyRange("n_range"));
    }
    n_range
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let cfg = ChainConfig {
                n_links: n,
                ..*template
            };
            evaluate_chain(p, &cfg, policy)
        })
        .collect()
}

/// Exhaustive integer scan over the node count; ties go to the smaller `N`.
pub fn optimize_node_count(
    p: &PhysicalParams,
    template: &ChainConfig,
    objective: Objective,
    n_range: RangeInclusive<u32>,
    policy: WaitPolicy,
) -> Result<NodeScan> {
    let sweep = sweep_node_count(p, template, n_range, policy)?;
    let best = argmax_first(&sweep, |r| objective.score(r));
    Ok(NodeScan {
        best_n: sweep[best].n_links,
        best: sweep[best],
        sweep,
    })
}

pub(crate) fn argmax_first<T>(items: &[T], score: impl Fn(&T) -> f64) -> usize {
    let mut best = 0;
    for (i, item) in items.iter().enumerate().skip(1) {
        if score(item) > score(&items[best]) {
            best = i;
        }
    }
    best
}
