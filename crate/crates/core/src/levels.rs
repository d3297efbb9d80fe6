//! NV⁻ ground-manifold level structure.
//!
//! The ground manifold is the electron spin-1 (`m_s ∈ {−1, 0, +1}`) coupled to
//! the ¹⁵N nuclear spin-1/2 (`m_I ∈ {↓, ↑}`). The Hamiltonian is assembled in
//! angular-frequency units (rad/s) on the product basis
//!
//! ```text
//! index  0        1        2       3       4        5
//! state  |−1,↓⟩   |−1,↑⟩   |0,↓⟩   |0,↑⟩   |+1,↓⟩   |+1,↑⟩
//! ```
//!
//! i.e. row-major over `(m_s, m_I)` with `m_s` ascending and `↓` before `↑`.
//! Spin-1 operators use `S_z = diag(−1, 0, +1)` and the standard `S_±`
//! with matrix elements `√2`; nuclear operators are spin-1/2 (`I_z = ±1/2`).
//!
//! The electron qubit used by the link protocols is `{|0⟩, |+1⟩}`; see
//! [`QUBIT_ZERO_MS`] and [`QUBIT_ONE_MS`].

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Complex, SMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, ModelError, Result};

pub type C64 = Complex<f64>;
pub type Matrix6 = SMatrix<C64, 6, 6>;
type Matrix3 = SMatrix<C64, 3, 3>;
type Matrix2 = SMatrix<C64, 2, 2>;

/// Electron `m_s` carrying the logical `|0⟩` of the electron-spin qubit.
pub const QUBIT_ZERO_MS: i8 = 0;
/// Electron `m_s` carrying the logical `|1⟩` of the electron-spin qubit.
pub const QUBIT_ONE_MS: i8 = 1;

/// A level is reported as mixed when its dominant overlap is at or below this.
pub const MIXED_THRESHOLD: f64 = 0.5 + 1e-9;

const HERMITIAN_RTOL: f64 = 1e-12;

pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
pub const NUCLEAR_MAGNETON: f64 = 5.050_783_746_1e-27;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const PLANCK: f64 = 6.626_070_15e-34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuclearSpin {
    Down,
    Up,
}

impl NuclearSpin {
    pub fn m_i(self) -> f64 {
        match self {
            NuclearSpin::Down => -0.5,
            NuclearSpin::Up => 0.5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NuclearSpin::Down => "down",
            NuclearSpin::Up => "up",
        }
    }
}

/// A product-basis label `|m_s, m_I⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinLabel {
    pub m_s: i8,
    pub m_i: NuclearSpin,
}

impl SpinLabel {
    pub const fn new(m_s: i8, m_i: NuclearSpin) -> Self {
        Self { m_s, m_i }
    }

    /// Position in the fixed product basis.
    pub fn basis_index(self) -> usize {
        let nuc = match self.m_i {
            NuclearSpin::Down => 0,
            NuclearSpin::Up => 1,
        };
        ((self.m_s + 1) as usize) * 2 + nuc
    }

    pub fn from_basis_index(index: usize) -> Self {
        let m_s = (index / 2) as i8 - 1;
        let m_i = if index.is_multiple_of(2) {
            NuclearSpin::Down
        } else {
            NuclearSpin::Up
        };
        Self { m_s, m_i }
    }
}

impl fmt::Display for SpinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.m_i {
            NuclearSpin::Down => '↓',
            NuclearSpin::Up => '↑',
        };
        match self.m_s {
            0 => write!(f, "|0,{arrow}⟩"),
            m => write!(f, "|{m:+},{arrow}⟩"),
        }
    }
}

/// The fixed basis ordering shared by every Hamiltonian in this module.
pub fn basis_labels() -> [SpinLabel; 6] {
    std::array::from_fn(SpinLabel::from_basis_index)
}

/// Sign convention of the nuclear Zeeman term.
///
/// `AsWritten` uses `−g_n μ_n B I_z / ħ` with `g_n` as configured; `Flipped`
/// uses `+g_n μ_n B I_z / ħ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuclearZeemanSign {
    #[default]
    AsWritten,
    Flipped,
}

/// Hamiltonian constants. Splittings and couplings are angular frequencies (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NvParams {
    pub d: f64,
    pub e: f64,
    pub g_e: f64,
    pub g_n: f64,
    pub a_par: f64,
    pub a_perp: f64,
    pub mu_b: f64,
    pub mu_n: f64,
    pub hbar: f64,
    pub h: f64,
    pub nuclear_zeeman_sign: NuclearZeemanSign,
}

impl Default for NvParams {
    fn default() -> Self {
        Self {
            d: 2.0 * PI * 2.87e9,
            e: 0.0,
            g_e: 2.0,
            g_n: -0.566,
            a_par: 2.0 * PI * 3.03e6,
            a_perp: 2.0 * PI * 3.65e6,
            mu_b: BOHR_MAGNETON,
            mu_n: NUCLEAR_MAGNETON,
            hbar: HBAR,
            h: PLANCK,
            nuclear_zeeman_sign: NuclearZeemanSign::AsWritten,
        }
    }
}

impl NvParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("d", self.d),
            ("e", self.e),
            ("g_e", self.g_e),
            ("g_n", self.g_n),
            ("a_par", self.a_par),
            ("a_perp", self.a_perp),
            ("mu_b", self.mu_b),
            ("mu_n", self.mu_n),
            ("hbar", self.hbar),
            ("h", self.h),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.d <= 0.0 {
            return Err(invalid("d", "zero-field splitting must be positive"));
        }
        if self.e.abs() >= self.d {
            return Err(invalid("e", "strain splitting must satisfy |E| < D"));
        }
        if self.hbar <= 0.0 {
            return Err(invalid("hbar", "must be positive"));
        }
        Ok(())
    }

    /// Electron Zeeman angular frequency `g_e μ_B B / ħ`.
    pub fn electron_zeeman(&self, b_tesla: f64) -> f64 {
        self.g_e * self.mu_b * b_tesla / self.hbar
    }

    /// Coefficient multiplying `I_z` in the nuclear Zeeman term.
    pub fn nuclear_zeeman(&self, b_tesla: f64) -> f64 {
        let magnitude = self.g_n * self.mu_n * b_tesla / self.hbar;
        match self.nuclear_zeeman_sign {
            NuclearZeemanSign::AsWritten => -magnitude,
            NuclearZeemanSign::Flipped => magnitude,
        }
    }
}

/// A 6×6 Hamiltonian on the fixed product basis, in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    pub entries: Matrix6,
}

impl HamiltonianMatrix {
    pub fn new(entries: Matrix6) -> Self {
        Self { entries }
    }

    pub fn basis_labels(&self) -> [SpinLabel; 6] {
        basis_labels()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Largest `|H − H†|` entry.
    pub fn hermitian_deviation(&self) -> f64 {
        let m = &self.entries;
        let mut dev: f64 = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= HERMITIAN_RTOL * self.max_abs()
    }
}

fn spin1_ops() -> (Matrix3, Matrix3, Matrix3, Matrix3) {
    let r2 = std::f64::consts::SQRT_2;
    let mut s_plus = Matrix3::zeros();
    s_plus[(1, 0)] = C64::new(r2, 0.0);
    s_plus[(2, 1)] = C64::new(r2, 0.0);
    let s_minus = s_plus.adjoint();
    let s_x = (s_plus + s_minus).scale(0.5);
    let s_y = (s_plus - s_minus) / C64::new(0.0, 2.0);
    let s_z = Matrix3::from_diagonal(&nalgebra::Vector3::new(
        C64::new(-1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
    ));
    (s_x, s_y, s_z, s_plus)
}

fn spin_half_ops() -> (Matrix2, Matrix2) {
    let i_z = Matrix2::from_diagonal(&nalgebra::Vector2::new(
        C64::new(-0.5, 0.0),
        C64::new(0.5, 0.0),
    ));
    let mut i_plus = Matrix2::zeros();
    i_plus[(1, 0)] = C64::new(1.0, 0.0);
    (i_z, i_plus)
}

fn kron(a: &Matrix3, b: &Matrix2) -> Matrix6 {
    let mut out = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Assembles the ground-manifold Hamiltonian at field `b_tesla` (along the NV axis).
///
/// `H = D S_z² + E (S_x² − S_y²) + (g_e μ_B B/ħ) S_z − (g_n μ_n B/ħ) I_z
///      + A_∥ S_z I_z + (A_⊥/2)(S₊I₋ + S₋I₊)`
pub fn build_ground_hamiltonian(nv: &NvParams, b_tesla: f64) -> Result<HamiltonianMatrix> {
    nv.validate()?;
    if !b_tesla.is_finite() {
        return Err(invalid("b", format!("field must be finite, got {b_tesla}")));
    }
    let (s_x, s_y, s_z, s_plus) = spin1_ops();
    let s_minus = s_plus.adjoint();
    let (i_z, i_plus) = spin_half_ops();
    let i_minus = i_plus.adjoint();
    let id3 = Matrix3::identity();
    let id2 = Matrix2::identity();

    let re = |x: f64| C64::new(x, 0.0);
    let electron = (s_z * s_z).scale(nv.d)
        + (s_x * s_x - s_y * s_y).scale(nv.e)
        + s_z.scale(nv.electron_zeeman(b_tesla));

    let h = kron(&electron, &id2)
        + kron(&id3, &i_z) * re(nv.nuclear_zeeman(b_tesla))
        + kron(&s_z, &i_z) * re(nv.a_par)
        + (kron(&s_plus, &i_minus) + kron(&s_minus, &i_plus)) * re(nv.a_perp / 2.0);

    Ok(HamiltonianMatrix::new(h))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    /// Eigenvalue in rad/s.
    pub energy: f64,
    pub dominant: SpinLabel,
    /// Probability weight of `dominant` in the eigenvector.
    pub admixture: f64,
}

impl Level {
    pub fn is_mixed(&self) -> bool {
        self.admixture <= MIXED_THRESHOLD
    }

    pub fn energy_hz(&self) -> f64 {
        self.energy / (2.0 * PI)
    }
}

/// Eigenlevels sorted ascending by energy.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    pub levels: Vec<Level>,
}

impl LevelSet {
    /// The unmixed level whose dominant label is `label`.
    pub fn find(&self, label: SpinLabel) -> Result<&Level> {
        self.levels
            .iter()
            .find(|l| l.dominant == label && !l.is_mixed())
            .ok_or_else(|| ModelError::LabelNotFound {
                label: label.to_string(),
            })
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }
}

pub fn eigenlevels(h: &HamiltonianMatrix) -> Result<LevelSet> {
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_RTOL * h.max_abs() {
        return Err(ModelError::NotHermitian { deviation });
    }
    // Symmetrize so round-off in the input cannot leak into the solver.
    let sym = (h.entries + h.entries.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);

    let mut levels: Vec<Level> = (0..6)
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            let (idx, weight) =
                v.iter()
                    .map(|z| z.norm_sqr())
                    .enumerate()
                    .fold(
                        (0, -1.0),
                        |best, (i, w)| if w > best.1 { (i, w) } else { best },
                    );
            Level {
                energy: eig.eigenvalues[k],
                dominant: SpinLabel::from_basis_index(idx),
                admixture: weight,
            }
        })
        .collect();
    levels.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then(a.dominant.basis_index().cmp(&b.dominant.basis_index()))
    });
    Ok(LevelSet { levels })
}

/// `(E_b − E_a) / 2π` in Hz, sign preserved.
pub fn transition_frequency(levels: &LevelSet, a: SpinLabel, b: SpinLabel) -> Result<f64> {
    let ea = levels.find(a)?.energy;
    let eb = levels.find(b)?.energy;
    Ok((eb - ea) / (2.0 * PI))
}

/// Electron-spin transition `m_s = from → to` averaged over both nuclear projections.
pub fn electron_transition_frequency(levels: &LevelSet, from: i8, to: i8) -> Result<f64> {
    let mut sum = 0.0;
    for m_i in [NuclearSpin::Down, NuclearSpin::Up] {
        sum += transition_frequency(levels, SpinLabel::new(from, m_i), SpinLabel::new(to, m_i))?;
    }
    Ok(sum / 2.0)
}
