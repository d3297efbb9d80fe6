//! Sweep grids behind each figure.
//!
//! | figure | panels | content |
//! |--------|--------|---------|
//! | fig2 | `fig2` | fidelity vs N for L_tot ∈ {200, 350, 500} km |
//! | fig3 | `fig3_{raw,normalized}_eps{ε}` | key rate vs N, ε ∈ {0.1, 0.01, 0.001} |
//! | fig5 | `fig5_{raw,normalized}` | multiplexed key rate vs N, n ∈ {1, 2, 4, 8} |
//! | fig6 | `fig6_{raw,normalized}` | hyper-encoded key rate vs N, q ∈ {1, 2, 4, 8} |
//! | fig7 | `fig7` | coded/uncoded ratio vs r for d ∈ {5, 7} |
//! | fig8 | `fig8` | improvement boundary r_min(N) for d ∈ {3, 5, 7} |

use nvrepeater::chain::{sweep_node_count, ChainConfig, ChainResult, WaitPolicy};
use nvrepeater::ecc::{improvement_threshold, rate_ratio, CodeSpec, Convention};
use nvrepeater::multiplex::{
    hyperencoded_chain_result, multiplexed_chain_result, MultiplexConfig, NodeLayout,
};
use rayon::prelude::*;

use crate::args::FigureName;
use crate::config::RunConfig;
use crate::error::Result;
use crate::table::{num, opt, Table};

pub const DISTANCES_KM: [f64; 3] = [200.0, 350.0, 500.0];
pub const FIG3_EPS: [f64; 3] = [0.1, 0.01, 0.001];
pub const FIG5_SENDERS: [u32; 4] = [1, 2, 4, 8];
pub const FIG6_HYPER_Q: [u32; 4] = [1, 2, 4, 8];
pub const FIG7_DISTANCES: [u32; 2] = [5, 7];
pub const FIG8_DISTANCES: [u32; 3] = [3, 5, 7];
/// Per-link failure bound used by the multiplexing and coding figures.
pub const FIGURE_EPS: f64 = 0.01;

pub fn figure(name: FigureName, cfg: &RunConfig) -> Result<Vec<Table>> {
    match name {
        FigureName::Fig2 => fig2(cfg).map(|t| vec![t]),
        FigureName::Fig3 => fig3(cfg),
        FigureName::Fig5 => fig5(cfg),
        FigureName::Fig6 => fig6(cfg),
        FigureName::Fig7 => fig7(cfg).map(|t| vec![t]),
        FigureName::Fig8 => fig8(cfg).map(|t| vec![t]),
    }
}

fn n_range(cfg: &RunConfig) -> std::ops::RangeInclusive<u32> {
    cfg.sweep.n_min..=cfg.sweep.n_max
}

fn chain_at(cfg: &RunConfig, l_tot_km: f64, eps: f64) -> ChainConfig {
    ChainConfig {
        l_tot_km,
        eps,
        ..cfg.chain
    }
}

pub fn fig2(cfg: &RunConfig) -> Result<Table> {
    let policy = cfg.wait_policy;
    let mut t = Table::new(
        "fig2",
        &["L_tot_km", "N", "sep_km", "fidelity", "wait_policy"],
    )
    .note(format!("fidelity vs N, eps = {}", cfg.chain.eps));
    for l_tot in DISTANCES_KM {
        let sweep = sweep_node_count(
            &cfg.physical,
            &chain_at(cfg, l_tot, cfg.chain.eps),
            n_range(cfg),
            policy,
        )?;
        for r in sweep {
            t.push(vec![
                num(l_tot),
                r.n_links.to_string(),
                num(r.per_link_distance_km),
                num(r.fidelity),
                policy.to_string(),
            ]);
        }
    }
    Ok(t)
}

fn key_panels(
    names: [String; 2],
    series_column: &str,
    series: &[(String, f64, Vec<ChainResult>)],
    policy: WaitPolicy,
    note: &str,
) -> [Table; 2] {
    let cols = |value: &'static str, rate: &'static str| {
        [
            "L_tot_km",
            series_column,
            "N",
            "sep_km",
            value,
            rate,
            "fidelity",
            "total_qubits",
            "wait_policy",
        ]
    };
    let [raw_name, norm_name] = names;
    let mut raw = Table::new(raw_name, &cols("skr", "rate")).note(format!("{note}, raw key rate"));
    let mut norm = Table::new(norm_name, &cols("norm_skr", "norm_rate"))
        .note(format!("{note}, key rate per qubit"));
    for (key, l_tot, results) in series {
        for r in results {
            let head = [
                num(*l_tot),
                key.clone(),
                r.n_links.to_string(),
                num(r.per_link_distance_km),
            ];
            let tail = [num(r.fidelity), num(r.total_qubits), policy.to_string()];
            let row = |value: f64, rate: f64| {
                head.iter()
                    .cloned()
                    .chain([num(value), num(rate)])
                    .chain(tail.iter().cloned())
                    .collect()
            };
            raw.push(row(r.skr_bits_per_s, r.rate_hz));
            norm.push(row(r.normalized_skr, r.normalized_rate_hz_per_qubit));
        }
    }
    [raw, norm]
}

fn names(stem: &str) -> [String; 2] {
    [format!("{stem}_raw"), format!("{stem}_normalized")]
}

pub fn fig3(cfg: &RunConfig) -> Result<Vec<Table>> {
    let policy = cfg.wait_policy;
    let mut tables = Vec::new();
    for eps in FIG3_EPS {
        let mut series = Vec::new();
        for l_tot in DISTANCES_KM {
            let sweep = sweep_node_count(
                &cfg.physical,
                &chain_at(cfg, l_tot, eps),
                n_range(cfg),
                policy,
            )?;
            series.push((num(eps), l_tot, sweep));
        }
        let names = [
            format!("fig3_raw_eps{eps}"),
            format!("fig3_normalized_eps{eps}"),
        ];
        let note = format!("{} qubits per node", cfg.chain.qubits_per_node);
        tables.extend(key_panels(names, "eps", &series, policy, &note));
    }
    Ok(tables)
}

fn mux_sweep(
    cfg: &RunConfig,
    l_tot: f64,
    mux: MultiplexConfig,
    policy: WaitPolicy,
) -> Result<Vec<ChainResult>> {
    let template = chain_at(cfg, l_tot, FIGURE_EPS);
    multiplex_sweep(cfg, &template, mux, policy)
}

/// Multiplexed or hyper-encoded results over the configured N range, ascending.
pub fn multiplex_sweep(
    cfg: &RunConfig,
    template: &ChainConfig,
    mux: MultiplexConfig,
    policy: WaitPolicy,
) -> Result<Vec<ChainResult>> {
    n_range(cfg)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            let chain = ChainConfig {
                n_links: n,
                ..*template
            };
            match mux.layout {
                NodeLayout::SendersPlusOneReceiver => {
                    multiplexed_chain_result(&cfg.physical, &chain, &mux, policy)
                }
                NodeLayout::MPlusQ => {
                    hyperencoded_chain_result(&cfg.physical, &chain, &mux, policy)
                }
            }
        })
        .collect::<nvrepeater::Result<Vec<_>>>()
        .map_err(Into::into)
}

pub fn fig5(cfg: &RunConfig) -> Result<Vec<Table>> {
    let policy = cfg.wait_policy;
    let base = cfg.multiplex.unwrap_or_default();
    let mut series = Vec::new();
    for l_tot in DISTANCES_KM {
        for n in FIG5_SENDERS {
            let mux = MultiplexConfig {
                n_senders: n,
                q_copies: base.q_copies.min(n),
                layout: NodeLayout::SendersPlusOneReceiver,
                hyper_q: 1,
            };
            series.push((n.to_string(), l_tot, mux_sweep(cfg, l_tot, mux, policy)?));
        }
    }
    Ok(key_panels(
        names("fig5"),
        "n_senders",
        &series,
        policy,
        &format!("n senders + 1 receiver, eps = {FIGURE_EPS}"),
    )
    .into())
}

pub fn fig6(cfg: &RunConfig) -> Result<Vec<Table>> {
    let policy = cfg.wait_policy;
    let base = cfg.multiplex.unwrap_or_default();
    let mut series = Vec::new();
    for l_tot in DISTANCES_KM {
        for q in FIG6_HYPER_Q {
            let mux = MultiplexConfig {
                n_senders: base.n_senders,
                q_copies: base.q_copies,
                layout: NodeLayout::MPlusQ,
                hyper_q: q,
            };
            series.push((q.to_string(), l_tot, mux_sweep(cfg, l_tot, mux, policy)?));
        }
    }
    let note = format!(
        "m = {} senders, q qubits per photon, eps = {FIGURE_EPS}",
        base.n_senders
    );
    Ok(key_panels(names("fig6"), "hyper_q", &series, policy, &note).into())
}

pub fn fig7(cfg: &RunConfig) -> Result<Table> {
    let grid = &cfg.ecc;
    let mut t = Table::new(
        "fig7",
        &["d", "n_d", "r", "ratio_criterion", "ratio_strict", "r_min"],
    )
    .note(format!(
        "coded chain of r links vs uncoded chain of {} links over {} km, eps = {FIGURE_EPS}",
        grid.n_ref, grid.l_tot_km
    ));
    for d in FIG7_DISTANCES {
        let code = CodeSpec::topological(d)?;
        let r_min =
            improvement_threshold(grid.n_ref, grid.l_tot_km, cfg.physical.l0_km, code.n_d());
        for r in 1..=grid.r_max {
            let ratio = |conv| {
                rate_ratio(
                    &cfg.physical,
                    grid.l_tot_km,
                    r,
                    &code,
                    grid.n_ref,
                    FIGURE_EPS,
                    conv,
                )
            };
            t.push(vec![
                d.to_string(),
                code.qubits_per_node.to_string(),
                r.to_string(),
                num(ratio(Convention::Criterion)?),
                num(ratio(Convention::Strict)?),
                opt(r_min),
            ]);
        }
    }
    Ok(t)
}

pub fn fig8(cfg: &RunConfig) -> Result<Table> {
    let grid = &cfg.ecc;
    let mut t = Table::new("fig8", &["d", "n_d", "N", "r_min"]).note(format!(
        "coding helps above r_min; blank where no r helps; L_tot = {} km",
        grid.l_tot_km
    ));
    for d in FIG8_DISTANCES {
        let code = CodeSpec::topological(d)?;
        for n in 1..=grid.n_max {
            let r_min = improvement_threshold(n, grid.l_tot_km, cfg.physical.l0_km, code.n_d());
            t.push(vec![
                d.to_string(),
                code.qubits_per_node.to_string(),
                n.to_string(),
                opt(r_min),
            ]);
        }
    }
    Ok(t)
}
