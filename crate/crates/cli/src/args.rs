use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nvrepeater::chain::{Objective, WaitPolicy};
use nvrepeater::levels::NuclearZeemanSign;
use nvrepeater::mc::SimWait;
use nvrepeater::multiplex::NodeLayout;

use crate::config::RunConfig;
use crate::table::Format;

/// Rate, fidelity and key-rate models for NV-centre quantum repeater chains.
///
/// Values come from built-in defaults, then `--config`, then flags.
#[derive(Debug, Parser)]
#[command(name = "nvrepeater", version)]
pub struct Cli {
    /// JSON config file, or a CSV previously written by this tool.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output file (directory for `figures`); stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Monte Carlo seed [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ground-manifold levels and transition frequencies.
    Levels(LevelsArgs),
    /// Single-link success probability, attempt budget and rate.
    Link(LinkArgs),
    /// One chain configuration.
    Chain(ChainArgs),
    /// Scan the number of links.
    Sweep(SweepArgs),
    /// Multiplexed or hyper-encoded chains over a range of link counts.
    Multiplex(MultiplexArgs),
    /// Error-corrected versus uncoded chains.
    Ecc(EccArgs),
    /// Monte Carlo estimate next to the analytic values.
    Mc(McArgs),
    /// Data behind a figure, one CSV per panel.
    Figures(FiguresArgs),
    /// Every resolved parameter with its value.
    Params(PhysArgs),
}

#[derive(Debug, Args, Default)]
pub struct PhysArgs {
    /// Fiber signal speed, km/s [default: 200000].
    #[arg(long = "c")]
    pub c_km_s: Option<f64>,
    /// Fiber attenuation length, km [default: 25].
    #[arg(long = "l0")]
    pub l0_km: Option<f64>,
    /// Photon collection efficiency [default: 0.7].
    #[arg(long)]
    pub p_c: Option<f64>,
    /// Detector efficiency [default: 0.7].
    #[arg(long)]
    pub p_d: Option<f64>,
    /// Transmission parameter T in the (1 − T) factor [default: -1].
    #[arg(long, allow_hyphen_values = true)]
    pub transmission: Option<f64>,
    /// Nuclear memory coherence time, s [default: 0.2].
    #[arg(long = "t2")]
    pub t2_s: Option<f64>,
    /// Swap gate fidelity [default: 0.997].
    #[arg(long)]
    pub f_gate: Option<f64>,
    /// Local latency added to every attempt, s [default: 0].
    #[arg(long = "t-local")]
    pub t_local_s: Option<f64>,
}

impl PhysArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let p = &mut cfg.physical;
        set(&mut p.c_km_s, self.c_km_s);
        set(&mut p.l0_km, self.l0_km);
        set(&mut p.p_c, self.p_c);
        set(&mut p.p_d, self.p_d);
        set(&mut p.transmission, self.transmission);
        set(&mut p.t2_s, self.t2_s);
        set(&mut p.f_gate, self.f_gate);
        set(&mut p.t_local_s, self.t_local_s);
    }
}

#[derive(Debug, Args, Default)]
pub struct ChainFlags {
    /// Total distance, km [default: 200].
    #[arg(long = "l-tot")]
    pub l_tot_km: Option<f64>,
    /// Number of links N [default: 20].
    #[arg(long = "links")]
    pub n_links: Option<u32>,
    /// Per-link failure bound ε [default: 0.01].
    #[arg(long)]
    pub eps: Option<f64>,
    /// Qubits per node for normalisation [default: 2].
    #[arg(long)]
    pub qubits_per_node: Option<u32>,
}

impl ChainFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let c = &mut cfg.chain;
        set(&mut c.l_tot_km, self.l_tot_km);
        set(&mut c.n_links, self.n_links);
        set(&mut c.eps, self.eps);
        set(&mut c.qubits_per_node, self.qubits_per_node);
    }
}

#[derive(Debug, Args, Default)]
pub struct RangeFlags {
    /// Smallest link count scanned [default: 1].
    #[arg(long)]
    pub n_min: Option<u32>,
    /// Largest link count scanned [default: 100].
    #[arg(long)]
    pub n_max: Option<u32>,
}

impl RangeFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.sweep.n_min, self.n_min);
        set(&mut cfg.sweep.n_max, self.n_max);
    }
}

pub(crate) fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum LevelsView {
    #[default]
    Transitions,
    Levels,
}

#[derive(Debug, Args)]
pub struct LevelsArgs {
    /// Axial field, mT [default: 20].
    #[arg(long)]
    pub field_mt: Option<f64>,
    #[arg(long, value_enum)]
    pub nuclear_zeeman_sign: Option<SignArg>,
    #[arg(long, value_enum, default_value_t = LevelsView::Transitions)]
    pub show: LevelsView,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    AsWritten,
    Flipped,
}

impl From<SignArg> for NuclearZeemanSign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::AsWritten => NuclearZeemanSign::AsWritten,
            SignArg::Flipped => NuclearZeemanSign::Flipped,
        }
    }
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    /// Link length, km [default: L_tot / N from the chain config].
    #[arg(long = "length")]
    pub l_km: Option<f64>,
    #[command(flatten)]
    pub phys: PhysArgs,
    #[command(flatten)]
    pub chain: ChainFlags,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    #[command(flatten)]
    pub phys: PhysArgs,
    #[command(flatten)]
    pub chain: ChainFlags,
    /// worst_case, expected_conditional, until_last_link or fixed:<seconds> [default: until_last_link].
    #[arg(long)]
    pub wait_policy: Option<WaitPolicy>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub base: ChainArgs,
    #[command(flatten)]
    pub range: RangeFlags,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::NormalizedSkr)]
    pub objective: ObjectiveArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    RawSkr,
    NormalizedSkr,
    Rate,
    Fidelity,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::RawSkr => Objective::RawSkr,
            ObjectiveArg::NormalizedSkr => Objective::NormalizedSkr,
            ObjectiveArg::Rate => Objective::Rate,
            ObjectiveArg::Fidelity => Objective::Fidelity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    SendersPlusOneReceiver,
    MPlusQ,
}

impl From<LayoutArg> for NodeLayout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::SendersPlusOneReceiver => NodeLayout::SendersPlusOneReceiver,
            LayoutArg::MPlusQ => NodeLayout::MPlusQ,
        }
    }
}

#[derive(Debug, Args)]
pub struct MultiplexArgs {
    #[command(flatten)]
    pub base: ChainArgs,
    #[command(flatten)]
    pub range: RangeFlags,
    /// Senders per node, n (or m for hyper-encoding) [default: 1].
    #[arg(long)]
    pub senders: Option<u32>,
    /// Links required per round [default: 1].
    #[arg(long)]
    pub q_copies: Option<u32>,
    /// Qubits encoded per photon [default: 1].
    #[arg(long)]
    pub hyper_q: Option<u32>,
    #[arg(long, value_enum)]
    pub layout: Option<LayoutArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum EccMode {
    /// Coded/uncoded ratio against the reference chain, per r.
    #[default]
    Ratio,
    /// Improvement flags over the (N, r) grid.
    Region,
    /// r_min(N) for each code.
    Boundary,
}

#[derive(Debug, Args)]
pub struct EccArgs {
    #[command(flatten)]
    pub phys: PhysArgs,
    #[arg(long, value_enum, default_value_t = EccMode::Ratio)]
    pub mode: EccMode,
    /// Total distance, km [default: 2000].
    #[arg(long = "l-tot")]
    pub l_tot_km: Option<f64>,
    /// Per-link failure bound ε [default: 0.01].
    #[arg(long)]
    pub eps: Option<f64>,
    /// Code distances, comma separated [default: 3,5,7].
    #[arg(long, value_delimiter = ',')]
    pub distances: Option<Vec<u32>>,
    /// Links in the uncoded reference chain [default: 10].
    #[arg(long)]
    pub n_ref: Option<u32>,
    /// Largest uncoded link count [default: 200].
    #[arg(long)]
    pub n_max: Option<u32>,
    /// Largest coded link count [default: 200].
    #[arg(long)]
    pub r_max: Option<u32>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub phys: PhysArgs,
    #[command(flatten)]
    pub chain: ChainFlags,
    /// Trials [default: 100000].
    #[arg(long)]
    pub trials: Option<u64>,
    /// worst_case or until_last_link [default: until_last_link].
    #[arg(long)]
    pub wait_policy: Option<SimWait>,
    /// Per-link attempt cap [default: from ε].
    #[arg(long)]
    pub cap: Option<u64>,
    /// Also write per-trial rows to this CSV.
    #[arg(long, value_name = "PATH")]
    pub traces: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureName {
    Fig2,
    Fig3,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    #[arg(value_enum)]
    pub name: FigureName,
    #[command(flatten)]
    pub phys: PhysArgs,
    #[command(flatten)]
    pub range: RangeFlags,
    /// worst_case, expected_conditional, until_last_link or fixed:<seconds> [default: until_last_link].
    #[arg(long)]
    pub wait_policy: Option<WaitPolicy>,
}
