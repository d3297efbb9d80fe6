//! Exit criteria. Each test writes one `criterion N [PASS|FAIL]` line to
//! stderr (outside the harness capture) and fails when its criterion fails.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nvrepeater::chain::{chain_rate, normalized_chain_rate, ChainConfig};
use nvrepeater::ecc::{coded_normalized_rate, improvement_region, improvement_threshold, CodeSpec};
use nvrepeater::levels::{
    build_ground_hamiltonian, eigenlevels, electron_transition_frequency, NvParams,
};
use nvrepeater::link::{link_budget, link_success_probability, PhysicalParams};
use nvrepeater::mc::{estimate, expected_success_fraction, slotted_chain_rate, SimConfig, SimWait};
use nvrepeater::multiplex::multiplexed_success_q;
use nvrepeater_cli::figures::{fig2, fig3, fig8};
use nvrepeater_cli::table::Table;
use nvrepeater_cli::RunConfig;

fn line(text: &str) {
    let _ = writeln!(std::io::stderr(), "{text}");
}

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let text = format!("criterion {id} [{status}] {name}: {detail}");
    line(&text);
    assert!(pass, "{text}");
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

#[test]
fn criterion_1_level_structure() {
    let h = build_ground_hamiltonian(&NvParams::default(), 0.02).unwrap();
    let levels = eigenlevels(&h).unwrap();
    let ghz = |from, to| electron_transition_frequency(&levels, from, to).unwrap() / 1e9;
    let checks = [
        ("0->+1", ghz(0, 1), 3.43, 0.02),
        ("-1->+1", ghz(-1, 1), 1.12, 0.03),
        ("0->-1", ghz(0, -1), 2.31, 0.03),
    ];
    let pass = checks
        .iter()
        .all(|(_, got, want, tol)| (got - want).abs() <= *tol);
    let detail = checks
        .iter()
        .map(|(name, got, want, tol)| format!("{name} {got:.4} GHz (want {want} ± {tol})"))
        .collect::<Vec<_>>()
        .join(", ");
    report(1, "level structure at 20 mT", pass, &detail);
}

struct OraclePoint {
    physical: PhysicalParams,
    chain: ChainConfig,
    n_d: u32,
    p_s: f64,
    rate: f64,
    normalized: f64,
    coded: f64,
}

fn oracle_points() -> Vec<OraclePoint> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/formula_oracle.csv");
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            let f = |i: usize| r[i].parse::<f64>().unwrap();
            OraclePoint {
                physical: PhysicalParams {
                    c_km_s: f(0),
                    l0_km: f(1),
                    p_c: f(2),
                    p_d: f(3),
                    transmission: f(4),
                    ..PhysicalParams::default()
                },
                chain: ChainConfig::new(f(5), r[6].parse().unwrap(), f(7)),
                n_d: r[8].parse().unwrap(),
                p_s: f(9),
                rate: f(10),
                normalized: f(11),
                coded: f(12),
            }
        })
        .collect()
}

#[test]
fn criterion_2_formula_exactness() {
    let start = Instant::now();
    let points = oracle_points();
    let mut worst = [0.0f64; 4];
    for pt in &points {
        let p = &pt.physical;
        let cfg = &pt.chain;
        let code = CodeSpec::custom(1, pt.n_d).unwrap();
        let got = [
            link_success_probability(p, cfg.link_km()).unwrap(),
            chain_rate(p, cfg).unwrap(),
            normalized_chain_rate(p, cfg).unwrap(),
            coded_normalized_rate(p, cfg.l_tot_km, cfg.n_links, &code, cfg.eps).unwrap(),
        ];
        let want = [pt.p_s, pt.rate, pt.normalized, pt.coded];
        for i in 0..4 {
            worst[i] = worst[i].max(rel(got[i], want[i]));
        }
    }
    let max = worst.iter().cloned().fold(0.0, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = points.len() == 1000 && max <= 1e-12 && elapsed < 1.0;
    report(
        2,
        "formula exactness vs 50-digit oracle",
        pass,
        &format!(
            "{} points, max rel err p_s {:.1e} R {:.1e} R_norm {:.1e} coded {:.1e} (limit 1e-12), {elapsed:.3} s",
            points.len(),
            worst[0],
            worst[1],
            worst[2],
            worst[3]
        ),
    );
}

#[test]
fn criterion_3_ratio_identities() {
    let mut worst_norm = 0.0f64;
    let mut worst_code = 0.0f64;
    for pt in oracle_points() {
        let p = &pt.physical;
        let cfg = &pt.chain;
        let ratio = chain_rate(p, cfg).unwrap() / normalized_chain_rate(p, cfg).unwrap();
        worst_norm = worst_norm.max(rel(ratio, 2.0 * cfg.n_links as f64));
        let unit = CodeSpec::custom(1, 1).unwrap();
        let code = CodeSpec::custom(1, pt.n_d).unwrap();
        let bare = coded_normalized_rate(p, cfg.l_tot_km, cfg.n_links, &unit, cfg.eps).unwrap();
        let coded = coded_normalized_rate(p, cfg.l_tot_km, cfg.n_links, &code, cfg.eps).unwrap();
        worst_code = worst_code.max(rel(coded / bare, 1.0 / pt.n_d as f64));
    }
    let pass = worst_norm <= 1e-12 && worst_code <= 1e-12;
    report(
        3,
        "ratio identities",
        pass,
        &format!("R/R_norm vs 2N max rel err {worst_norm:.1e}, coded rate vs 1/n_d max rel err {worst_code:.1e}"),
    );
}

fn enumerate_at_least(p: f64, n: u32, q: u32) -> f64 {
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
fn criterion_4_q_copy_enumeration() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 1..=12 {
        for q in 1..=n {
            for k in 1..=99 {
                let p = k as f64 / 100.0;
                let got = multiplexed_success_q(p, n, q).unwrap();
                worst = worst.max((got - enumerate_at_least(p, n, q)).abs());
                cases += 1;
            }
        }
    }
    report(
        4,
        "q-copy success vs 2^n enumeration",
        worst <= 1e-12,
        &format!(
            "{cases} cases (n ≤ 12, all q, p_s = 0.01..0.99), max abs err {worst:.1e}, {:.2} s",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_5_monte_carlo_agreement() {
    let start = Instant::now();
    let p = PhysicalParams::default();
    let mut rate_ok = 0;
    let mut frac_ok = 0;
    let mut slotted_ok = 0;
    let mut worst_rate_z = 0.0f64;
    let mut worst_rate_rel = 0.0f64;
    let mut rows = Vec::new();
    let mut total = 0;
    for l_tot in [200.0, 350.0, 500.0] {
        for n in [5, 20, 50] {
            for eps in [0.1, 0.01] {
                let cfg = ChainConfig::new(l_tot, n, eps);
                let sim = SimConfig {
                    trials: 100_000,
                    seed: 7,
                    wait_policy: SimWait::WorstCase,
                    ..SimConfig::default()
                };
                let est = estimate(&p, &cfg, &sim).unwrap();
                let analytic = chain_rate(&p, &cfg).unwrap();
                let slotted = slotted_chain_rate(&p, &cfg, &sim).unwrap();
                let frac = expected_success_fraction(&p, &cfg, None).unwrap();
                let z_rate = (est.rate_hz - analytic).abs() / est.rate_se;
                let z_frac = (est.chain_success_fraction - frac).abs() / est.success_se;
                let z_slot = (est.rate_hz - slotted).abs() / est.rate_se;
                total += 1;
                rate_ok += (z_rate <= 3.0) as u32;
                frac_ok += (z_frac <= 3.0) as u32;
                slotted_ok += (z_slot <= 3.0) as u32;
                worst_rate_z = worst_rate_z.max(z_rate);
                worst_rate_rel = worst_rate_rel.max(rel(est.rate_hz, analytic));
                rows.push(format!(
                    "    L_tot={l_tot} N={n} eps={eps}: p_s={:.4} cap={} MC rate {:.4} ± {:.4} Hz, closed form {:.4} Hz ({:.1} SE), slotted {:.4} Hz ({:.1} SE); success {:.5} ± {:.5} vs {:.5} ({:.1} SE)",
                    link_success_probability(&p, cfg.link_km()).unwrap(),
                    est.attempt_cap,
                    est.rate_hz,
                    est.rate_se,
                    analytic,
                    z_rate,
                    slotted,
                    z_slot,
                    est.chain_success_fraction,
                    est.success_se,
                    frac,
                    z_frac,
                ));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = rate_ok == total && frac_ok == total;
    let detail = format!(
        "{total} configs at 1e5 trials: rate within 3 SE of closed form {rate_ok}/{total} (worst {worst_rate_z:.1} SE, {:.1}% off), \
         success fraction within 3 SE {frac_ok}/{total}, rate within 3 SE of slotted-protocol rate {slotted_ok}/{total}, {elapsed:.1} s",
        100.0 * worst_rate_rel
    );
    if !pass {
        for r in &rows {
            line(r);
        }
    }
    report(5, "Monte Carlo vs analytic", pass, &detail);
}

#[test]
fn criterion_6_improvement_criterion() {
    let p = PhysicalParams::default();
    let codes = [3, 5, 7].map(|d| CodeSpec::topological(d).unwrap());
    let cells = improvement_region(&p, 2000.0, 0.01, &codes, 1..=200, 1..=200).unwrap();
    let mismatches = cells.iter().filter(|c| c.diverges()).count();
    let r_min = improvement_threshold(10, 2000.0, 25.0, 81.0).unwrap();
    let pass = cells.len() == 3 * 200 * 200 && mismatches == 0 && (r_min - 22.2).abs() <= 0.05;
    report(
        6,
        "improvement criterion vs direct comparison",
        pass,
        &format!(
            "{} grid points, {mismatches} mismatches; d=5 threshold at N=10 is r > {r_min:.3} (want ≈ 22.2)",
            cells.len()
        ),
    );
}

fn series(t: &Table, key: &str, value: f64, column: &str) -> Vec<(u32, f64)> {
    let k = t.floats(key);
    let n = t.floats("N");
    let v = t.floats(column);
    (0..t.rows.len())
        .filter(|&i| k[i] == value)
        .map(|i| (n[i] as u32, v[i]))
        .collect()
}

fn argmax(s: &[(u32, f64)]) -> usize {
    let mut best = 0;
    for i in 1..s.len() {
        if s[i].1 > s[best].1 {
            best = i;
        }
    }
    best
}

#[test]
fn criterion_7_figure_shapes() {
    let cfg = RunConfig::default();
    let mut notes = Vec::new();

    // fig2 at 500 km: rises from small N to a peak, then non-increasing.
    // N = 1 is a bare link with no stored qubit, so F = 1 there; chains start at N = 2.
    let f2 = fig2(&cfg).unwrap();
    let mut s = series(&f2, "L_tot_km", 500.0, "fidelity");
    s.retain(|(n, _)| *n >= 2);
    let peak = argmax(&s);
    let depressed = peak > 0 && s[0].1 < s[peak].1;
    let falling = s[peak..].windows(2).all(|w| w[1].1 <= w[0].1);
    let fig2_ok = depressed && falling && peak + 1 < s.len();
    // Upticks after the peak, and whether the attempt budget n steps down there.
    let budget = |n: u32| {
        link_budget(&cfg.physical, 500.0 / n as f64, cfg.chain.eps)
            .unwrap()
            .n_attempts
    };
    let upticks: Vec<String> = s[peak..]
        .windows(2)
        .filter(|w| w[1].1 > w[0].1)
        .map(|w| {
            let (a, b) = (budget(w[0].0), budget(w[1].0));
            format!("N={}:+{:.1e}(n {a}->{b})", w[1].0, w[1].1 - w[0].1)
        })
        .collect();
    notes.push(format!(
        "fig2 500 km: F(N={})={:.3}, peak F(N={})={:.3}, non-increasing after peak: {falling} [{}]",
        s[0].0,
        s[0].1,
        s[peak].0,
        s[peak].1,
        upticks.join(" ")
    ));

    // fig3: every series peaks strictly inside the scanned range.
    let mut fig3_ok = true;
    let mut peaks = Vec::new();
    for t in fig3(&cfg).unwrap() {
        let column = if t.column("skr").is_some() {
            "skr"
        } else {
            "norm_skr"
        };
        for l_tot in [200.0, 350.0, 500.0] {
            let s = series(&t, "L_tot_km", l_tot, column);
            let i = argmax(&s);
            let interior = i > 0 && i + 1 < s.len() && s[i].1 > 0.0;
            fig3_ok &= interior;
            peaks.push(format!(
                "{}@{l_tot}:N*={}",
                t.name.trim_start_matches("fig3_"),
                s[i].0
            ));
        }
    }
    notes.push(format!(
        "fig3 interior maxima: {fig3_ok} ({})",
        peaks.join(" ")
    ));

    // fig8: r_min(d=3) < r_min(d=5) < r_min(d=7) wherever all three exist.
    let f8 = fig8(&cfg).unwrap();
    let b = |d| series(&f8, "d", d, "r_min");
    let (b3, b5, b7) = (b(3.0), b(5.0), b(7.0));
    let mut compared = 0;
    let mut fig8_ok = true;
    for i in 0..b3.len() {
        let (x, y, z) = (b3[i].1, b5[i].1, b7[i].1);
        if x.is_finite() && y.is_finite() && z.is_finite() {
            compared += 1;
            fig8_ok &= x < y && y < z;
        }
    }
    fig8_ok &= compared > 0;
    notes.push(format!(
        "fig8 ordering d3<d5<d7 at {compared} N values: {fig8_ok}"
    ));

    report(
        7,
        "qualitative figure shapes",
        fig2_ok && fig3_ok && fig8_ok,
        &notes.join("; "),
    );
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_8_determinism() {
    let bin = env!("CARGO_BIN_EXE_nvrepeater");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let status = Command::new(bin)
            .args(["figures", "fig3", "--seed", "7", "--out"])
            .arg(d.path())
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
    }
    let a = read_dir_sorted(dirs[0].path());
    let b = read_dir_sorted(dirs[1].path());
    let identical = !a.is_empty() && a == b;
    report(
        8,
        "figures fig3 --seed 7 reproducible",
        identical,
        &format!("{} CSV files per run, byte-identical: {identical}", a.len()),
    );
}
