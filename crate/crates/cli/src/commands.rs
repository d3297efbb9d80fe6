use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use nvrepeater::chain::{
    chain_rate, evaluate_chain, optimize_node_count, ChainResult, Objective, WaitPolicy,
};
use nvrepeater::ecc::{
    coded_normalized_rate, improvement_region, improvement_threshold, rate_ratio, CodeSpec,
    Convention,
};
use nvrepeater::levels::{build_ground_hamiltonian, eigenlevels, electron_transition_frequency};
use nvrepeater::link::{event_probability, link_budget, link_rate};
use nvrepeater::mc::{
    estimate, expected_success_fraction, matched_wait_fidelity, slotted_chain_rate, MCEstimate,
};
use nvrepeater::multiplex::NodeLayout;
use serde_json::Value;

use crate::args::{set, Cli, Command, EccMode, LevelsView, McArgs, MultiplexArgs};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::figures::{figure, multiplex_sweep};
use crate::table::{num, opt, Table};

/// Defaults, then `--config`, then flags; validated.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.sim_mut().seed = seed;
    }
    match &cli.command {
        Command::Levels(a) => {
            set(&mut cfg.field_mt, a.field_mt);
            set(
                &mut cfg.nv.nuclear_zeeman_sign,
                a.nuclear_zeeman_sign.map(Into::into),
            );
        }
        Command::Link(a) => {
            a.phys.apply(&mut cfg);
            a.chain.apply(&mut cfg);
        }
        Command::Chain(a) => {
            a.phys.apply(&mut cfg);
            a.chain.apply(&mut cfg);
            set(&mut cfg.wait_policy, a.wait_policy);
        }
        Command::Sweep(a) => {
            a.base.phys.apply(&mut cfg);
            a.base.chain.apply(&mut cfg);
            set(&mut cfg.wait_policy, a.base.wait_policy);
            a.range.apply(&mut cfg);
        }
        Command::Multiplex(a) => apply_multiplex(a, &mut cfg)?,
        Command::Ecc(a) => {
            a.phys.apply(&mut cfg);
            set(&mut cfg.ecc.l_tot_km, a.l_tot_km);
            set(&mut cfg.chain.eps, a.eps);
            set(&mut cfg.ecc.distances, a.distances.clone());
            set(&mut cfg.ecc.n_ref, a.n_ref);
            set(&mut cfg.ecc.n_max, a.n_max);
            set(&mut cfg.ecc.r_max, a.r_max);
        }
        Command::Mc(a) => apply_mc(a, &mut cfg),
        Command::Figures(a) => {
            a.phys.apply(&mut cfg);
            a.range.apply(&mut cfg);
            set(&mut cfg.wait_policy, a.wait_policy);
        }
        Command::Params(a) => a.apply(&mut cfg),
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_multiplex(a: &MultiplexArgs, cfg: &mut RunConfig) -> Result<()> {
    a.base.phys.apply(cfg);
    a.base.chain.apply(cfg);
    set(&mut cfg.wait_policy, a.base.wait_policy);
    a.range.apply(cfg);
    let mux = cfg.multiplex_mut();
    set(&mut mux.n_senders, a.senders);
    set(&mut mux.q_copies, a.q_copies);
    set(&mut mux.hyper_q, a.hyper_q);
    set(&mut mux.layout, a.layout.map(Into::into));
    if mux.layout == NodeLayout::SendersPlusOneReceiver && mux.hyper_q > 1 {
        return Err(CliError::Config(
            "`multiplex.hyper_q`: values above 1 need layout m_plus_q".into(),
        ));
    }
    Ok(())
}

fn apply_mc(a: &McArgs, cfg: &mut RunConfig) {
    a.phys.apply(cfg);
    a.chain.apply(cfg);
    let sim = cfg.sim_mut();
    set(&mut sim.trials, a.trials);
    set(&mut sim.wait_policy, a.wait_policy);
    if a.cap.is_some() {
        sim.attempt_cap = a.cap;
    }
    if a.traces.is_some() {
        sim.record_traces = true;
    }
}

/// What a command produced.
pub struct Output {
    pub tables: Vec<Table>,
    pub degenerate: Option<String>,
    pub traces: Option<(PathBuf, Table)>,
}

impl Output {
    fn one(table: Table) -> Self {
        Self {
            tables: vec![table],
            degenerate: None,
            traces: None,
        }
    }
}

pub fn execute(cli: &Cli, cfg: &RunConfig) -> Result<Output> {
    Ok(match &cli.command {
        Command::Levels(a) => Output::one(levels(cfg, a.show)?),
        Command::Link(a) => Output::one(link(cfg, a.l_km)?),
        Command::Chain(_) => Output::one(chain(cfg)?),
        Command::Sweep(a) => Output::one(sweep(cfg, a.objective.into())?),
        Command::Multiplex(_) => Output::one(multiplex(cfg)?),
        Command::Ecc(a) => Output::one(ecc(cfg, a.mode)?),
        Command::Mc(a) => mc(cfg, a.traces.as_deref())?,
        Command::Figures(a) => Output {
            tables: figure(a.name, cfg)?,
            degenerate: None,
            traces: None,
        },
        Command::Params(_) => Output::one(params(cfg)),
    })
}

/// Runs a parsed command line and writes its output.
pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    let output = execute(cli, &cfg)?;
    let header = cfg.to_header();
    if let Command::Figures(_) = cli.command {
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir)?;
        for t in &output.tables {
            let path = dir.join(format!("{}.{}", t.name, cli.format.extension()));
            write_to(&path, |w| t.write(cli.format, &header, w))?;
            eprintln!("wrote {}", path.display());
        }
    } else {
        let write_all = |w: &mut dyn Write| -> Result<()> {
            for t in &output.tables {
                t.write(cli.format, &header, w)?;
            }
            Ok(())
        };
        match &cli.out {
            Some(path) => write_to(path, write_all)?,
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                write_all(&mut lock)?;
                lock.flush()?;
            }
        }
    }
    if let Some((path, table)) = &output.traces {
        write_to(path, |w| table.write(crate::table::Format::Csv, &header, w))?;
    }
    match output.degenerate {
        Some(msg) => Err(CliError::Degenerate(msg)),
        None => Ok(()),
    }
}

fn write_to(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn levels(cfg: &RunConfig, view: LevelsView) -> Result<Table> {
    let h = build_ground_hamiltonian(&cfg.nv, cfg.field_mt * 1e-3)?;
    let set = eigenlevels(&h)?;
    let note = format!("B = {} mT", cfg.field_mt);
    match view {
        LevelsView::Transitions => {
            let mut t =
                Table::new("transitions", &["from_ms", "to_ms", "frequency_ghz"]).note(note);
            for (from, to) in [(0, 1), (-1, 1), (0, -1)] {
                let f = electron_transition_frequency(&set, from, to)?;
                t.push(vec![from.to_string(), to.to_string(), num(f / 1e9)]);
            }
            Ok(t)
        }
        LevelsView::Levels => {
            let mut t = Table::new(
                "levels",
                &[
                    "index",
                    "label",
                    "m_s",
                    "nuclear",
                    "energy_ghz",
                    "admixture",
                    "mixed",
                ],
            )
            .note(note);
            for (i, l) in set.levels.iter().enumerate() {
                t.push(vec![
                    i.to_string(),
                    l.dominant.to_string(),
                    l.dominant.m_s.to_string(),
                    l.dominant.m_i.as_str().to_string(),
                    num(l.energy_hz() / 1e9),
                    num(l.admixture),
                    l.is_mixed().to_string(),
                ]);
            }
            Ok(t)
        }
    }
}

pub fn link(cfg: &RunConfig, l_km: Option<f64>) -> Result<Table> {
    let l = l_km.unwrap_or_else(|| cfg.chain.link_km());
    let p = &cfg.physical;
    let b = link_budget(p, l, cfg.chain.eps)?;
    let mut t = Table::new(
        "link",
        &[
            "l_km",
            "eps",
            "p_s",
            "event_probability",
            "n_attempts",
            "eps_residual",
            "t_attempt_s",
            "t_expected_s",
            "rate_hz",
        ],
    );
    t.push(vec![
        num(l),
        num(cfg.chain.eps),
        num(b.p_s),
        num(event_probability(p, l)?),
        b.n_attempts.to_string(),
        num(b.eps_residual),
        num(b.t_attempt),
        num(b.t_expected),
        num(link_rate(p, l, cfg.chain.eps)?),
    ]);
    Ok(t)
}

const RESULT_COLUMNS: [&str; 14] = [
    "N",
    "sep_km",
    "rate",
    "norm_rate",
    "fidelity",
    "skr",
    "norm_skr",
    "per_link_fidelity",
    "per_link_wait_s",
    "p_s",
    "n_attempts",
    "eps_residual",
    "total_qubits",
    "wait_policy",
];

fn result_row(r: &ChainResult, policy: WaitPolicy) -> Vec<String> {
    vec![
        r.n_links.to_string(),
        num(r.per_link_distance_km),
        num(r.rate_hz),
        num(r.normalized_rate_hz_per_qubit),
        num(r.fidelity),
        num(r.skr_bits_per_s),
        num(r.normalized_skr),
        num(r.per_link_fidelity),
        num(r.per_link_wait_s),
        num(r.budget.p_s),
        r.budget.n_attempts.to_string(),
        num(r.budget.eps_residual),
        num(r.total_qubits),
        policy.to_string(),
    ]
}

fn columns_with(extra: &[&'static str]) -> Vec<&'static str> {
    RESULT_COLUMNS
        .iter()
        .copied()
        .chain(extra.iter().copied())
        .collect()
}

pub fn chain(cfg: &RunConfig) -> Result<Table> {
    let r = evaluate_chain(&cfg.physical, &cfg.chain, cfg.wait_policy)?;
    let mut t = Table::new("chain", &columns_with(&["L_tot_km", "eps"]));
    let mut row = result_row(&r, cfg.wait_policy);
    row.extend([num(cfg.chain.l_tot_km), num(cfg.chain.eps)]);
    t.push(row);
    Ok(t)
}

fn objective_name(o: Objective) -> &'static str {
    match o {
        Objective::RawSkr => "raw_skr",
        Objective::NormalizedSkr => "normalized_skr",
        Objective::Rate => "rate",
        Objective::Fidelity => "fidelity",
    }
}

pub fn sweep(cfg: &RunConfig, objective: Objective) -> Result<Table> {
    let scan = optimize_node_count(
        &cfg.physical,
        &cfg.chain,
        objective,
        cfg.sweep.n_min..=cfg.sweep.n_max,
        cfg.wait_policy,
    )?;
    let mut t = Table::new("sweep", &columns_with(&["is_best"])).note(format!(
        "L_tot = {} km, eps = {}, best N = {} by {}",
        cfg.chain.l_tot_km,
        cfg.chain.eps,
        scan.best_n,
        objective_name(objective)
    ));
    for r in &scan.sweep {
        let mut row = result_row(r, cfg.wait_policy);
        row.push((r.n_links == scan.best_n).to_string());
        t.push(row);
    }
    Ok(t)
}

pub fn multiplex(cfg: &RunConfig) -> Result<Table> {
    let mux = cfg.multiplex.unwrap_or_default();
    let results = multiplex_sweep(cfg, &cfg.chain, mux, cfg.wait_policy)?;
    let layout = match mux.layout {
        NodeLayout::SendersPlusOneReceiver => "senders_plus_one_receiver",
        NodeLayout::MPlusQ => "m_plus_q",
    };
    let mut t = Table::new(
        "multiplex",
        &columns_with(&["n_senders", "q_copies", "hyper_q", "layout"]),
    )
    .note(format!(
        "L_tot = {} km, eps = {}, {} qubits per node",
        cfg.chain.l_tot_km,
        cfg.chain.eps,
        mux.qubits_per_node()
    ));
    for r in &results {
        let mut row = result_row(r, cfg.wait_policy);
        row.extend([
            mux.n_senders.to_string(),
            mux.q_copies.to_string(),
            mux.hyper_q.to_string(),
            layout.to_string(),
        ]);
        t.push(row);
    }
    Ok(t)
}

fn codes(cfg: &RunConfig) -> Result<Vec<CodeSpec>> {
    match cfg.code {
        Some(code) => Ok(vec![code]),
        None => cfg
            .ecc
            .distances
            .iter()
            .map(|&d| CodeSpec::topological(d).map_err(Into::into))
            .collect(),
    }
}

pub fn ecc(cfg: &RunConfig, mode: EccMode) -> Result<Table> {
    let p = &cfg.physical;
    let g = &cfg.ecc;
    let eps = cfg.chain.eps;
    let codes = codes(cfg)?;
    match mode {
        EccMode::Ratio => {
            let mut t = Table::new(
                "ecc_ratio",
                &[
                    "d",
                    "n_d",
                    "r",
                    "coded_norm_rate",
                    "ratio_criterion",
                    "ratio_strict",
                    "r_min",
                ],
            )
            .note(format!(
                "reference: uncoded chain of {} links, L_tot = {} km, eps = {eps}",
                g.n_ref, g.l_tot_km
            ));
            for code in &codes {
                let r_min = improvement_threshold(g.n_ref, g.l_tot_km, p.l0_km, code.n_d());
                for r in 1..=g.r_max {
                    let ratio = |c| rate_ratio(p, g.l_tot_km, r, code, g.n_ref, eps, c);
                    t.push(vec![
                        code.distance.to_string(),
                        code.qubits_per_node.to_string(),
                        r.to_string(),
                        num(coded_normalized_rate(p, g.l_tot_km, r, code, eps)?),
                        num(ratio(Convention::Criterion)?),
                        num(ratio(Convention::Strict)?),
                        opt(r_min),
                    ]);
                }
            }
            Ok(t)
        }
        EccMode::Region => {
            let cells = improvement_region(p, g.l_tot_km, eps, &codes, 1..=g.n_max, 1..=g.r_max)?;
            let mut t = Table::new(
                "ecc_region",
                &[
                    "d",
                    "n_d",
                    "N",
                    "r",
                    "r_min",
                    "threshold_flag",
                    "criterion_flag",
                    "strict_flag",
                ],
            )
            .note(format!("L_tot = {} km, eps = {eps}", g.l_tot_km));
            for c in cells {
                t.push(vec![
                    c.distance.to_string(),
                    c.n_d.to_string(),
                    c.n_links.to_string(),
                    c.r.to_string(),
                    opt(c.r_min),
                    c.threshold_flag.to_string(),
                    c.criterion_flag.to_string(),
                    c.strict_flag.to_string(),
                ]);
            }
            Ok(t)
        }
        EccMode::Boundary => {
            let mut t = Table::new("ecc_boundary", &["d", "n_d", "N", "r_min"])
                .note(format!("L_tot = {} km", g.l_tot_km));
            for code in &codes {
                for n in 1..=g.n_max {
                    t.push(vec![
                        code.distance.to_string(),
                        code.qubits_per_node.to_string(),
                        n.to_string(),
                        opt(improvement_threshold(n, g.l_tot_km, p.l0_km, code.n_d())),
                    ]);
                }
            }
            Ok(t)
        }
    }
}

pub const MC_COLUMNS: [&str; 22] = [
    "N",
    "L_tot_km",
    "eps",
    "wait_policy",
    "trials",
    "successes",
    "attempt_cap",
    "success_fraction",
    "success_se",
    "expected_success_fraction",
    "rate_hz",
    "rate_se",
    "analytic_rate",
    "slotted_rate",
    "fidelity",
    "fidelity_se",
    "matched_fidelity",
    "mean_per_link_wait_s",
    "mean_completion_s",
    "skr",
    "norm_skr",
    "degenerate",
];

pub fn mc_row(cfg: &RunConfig, est: &MCEstimate) -> Result<Vec<String>> {
    let sim = cfg.sim.unwrap_or_default();
    let p = &cfg.physical;
    let matched = if est.degenerate {
        f64::NAN
    } else {
        matched_wait_fidelity(p, &cfg.chain, est.mean_per_link_wait_s)?
    };
    Ok(vec![
        cfg.chain.n_links.to_string(),
        num(cfg.chain.l_tot_km),
        num(cfg.chain.eps),
        sim.wait_policy.to_string(),
        est.trials_used.to_string(),
        est.successes.to_string(),
        est.attempt_cap.to_string(),
        num(est.chain_success_fraction),
        num(est.success_se),
        num(expected_success_fraction(p, &cfg.chain, sim.attempt_cap)?),
        num(est.rate_hz),
        num(est.rate_se),
        num(chain_rate(p, &cfg.chain)?),
        num(slotted_chain_rate(p, &cfg.chain, &sim)?),
        num(est.fidelity),
        num(est.fidelity_se),
        num(matched),
        num(est.mean_per_link_wait_s),
        num(est.mean_completion_s),
        num(est.skr_bits_per_s),
        num(est.normalized_skr),
        est.degenerate.to_string(),
    ])
}

fn mc(cfg: &RunConfig, traces: Option<&Path>) -> Result<Output> {
    let sim = cfg.sim.unwrap_or_default();
    let est = estimate(&cfg.physical, &cfg.chain, &sim)?;
    let mut t = Table::new("mc", &MC_COLUMNS).note(format!("seed = {}", sim.seed));
    t.push(mc_row(cfg, &est)?);
    let traces = match (traces, &est.traces) {
        (Some(path), Some(rows)) => {
            let mut tt = Table::new("traces", &["trial", "success", "completion_s", "fidelity"]);
            for r in rows {
                tt.push(vec![
                    r.trial.to_string(),
                    r.success.to_string(),
                    num(r.completion_s),
                    opt(r.fidelity),
                ]);
            }
            Some((path.to_path_buf(), tt))
        }
        _ => None,
    };
    let degenerate = est.degenerate.then(|| {
        format!(
            "degenerate statistics: no chain succeeded in {} trials",
            est.trials_used
        )
    });
    Ok(Output {
        tables: vec![t],
        degenerate,
        traces,
    })
}

fn describe(key: &str) -> (&'static str, &'static str) {
    match key {
        "schema_version" => ("", "config schema version"),
        "physical.c_km_s" => ("km/s", "signal speed in fiber"),
        "physical.l0_km" => ("km", "fiber attenuation length"),
        "physical.p_c" => ("", "photon collection efficiency"),
        "physical.p_d" => ("", "detector efficiency"),
        "physical.transmission" => ("", "T in the (1 - T) heralding factor"),
        "physical.t2_s" => ("s", "nuclear memory coherence time"),
        "physical.f_gate" => ("", "swap gate fidelity"),
        "physical.t_local_s" => ("s", "local latency per attempt"),
        "nv.d" => ("rad/s", "zero-field splitting"),
        "nv.e" => ("rad/s", "strain splitting"),
        "nv.g_e" => ("", "electron g-factor"),
        "nv.g_n" => ("", "nuclear g-factor"),
        "nv.a_par" => ("rad/s", "axial hyperfine coupling"),
        "nv.a_perp" => ("rad/s", "transverse hyperfine coupling"),
        "nv.mu_b" => ("J/T", "Bohr magneton"),
        "nv.mu_n" => ("J/T", "nuclear magneton"),
        "nv.hbar" => ("J s", "reduced Planck constant"),
        "nv.h" => ("J s", "Planck constant"),
        "nv.nuclear_zeeman_sign" => ("", "sign convention of the nuclear Zeeman term"),
        "field_mt" => ("mT", "axial magnetic field"),
        "chain.l_tot_km" => ("km", "total distance"),
        "chain.n_links" => ("", "number of links N"),
        "chain.eps" => ("", "per-link failure bound"),
        "chain.qubits_per_node" => ("", "qubits per node for normalisation"),
        "wait_policy" => ("", "storage time used for the analytic fidelity"),
        "sweep.n_min" => ("", "smallest N scanned"),
        "sweep.n_max" => ("", "largest N scanned"),
        "ecc.l_tot_km" => ("km", "total distance for code comparisons"),
        "ecc.n_ref" => ("", "links in the uncoded reference chain"),
        "ecc.n_max" => ("", "largest uncoded N on the grid"),
        "ecc.r_max" => ("", "largest coded r on the grid"),
        "ecc.distances" => ("", "code distances compared"),
        "multiplex" => ("", "multiplexing settings (unset: one sender)"),
        "code" => ("", "custom code (unset: topological family)"),
        "sim" => ("", "Monte Carlo settings (unset: defaults)"),
        _ => ("", ""),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, child, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Parameter ledger: every resolved key with its value, unit and meaning.
pub fn params(cfg: &RunConfig) -> Table {
    let json = serde_json::to_value(cfg).expect("config serializes");
    let mut pairs = Vec::new();
    flatten("", &json, &mut pairs);
    let mut t = Table::new("params", &["key", "value", "unit", "description"]);
    for (k, v) in pairs {
        let (unit, desc) = describe(&k);
        t.push(vec![k, v, unit.into(), desc.into()]);
    }
    t
}
