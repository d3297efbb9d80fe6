//! Error-corrected repeater economics.
//!
//! A coded chain of `r` links spends `n_d` qubits per node on a distance-`d`
//! code and is treated as delivering a link every round, so its normalised
//! rate carries no `(1 − ε)^N` attrition:
//!
//! ```text
//! R̄(r, n_d) = −e^(−L_tot/(r L0)) / (n_d L_tot) · c p_c p_D (1−T) / (4 ln ε)
//! ```
//!
//! Two comparison conventions against an uncoded `N`-link chain are offered.
//! [`Convention::Criterion`] compares both sides with the coded prefactor and
//! without attrition, which is the form in which the threshold
//! `r > N L_tot / (L_tot − N L0 ln n_d)` holds exactly.
//! [`Convention::Strict`] compares against the full uncoded normalised rate
//! `R_net / 2N`, including `(1 − ε)^N`.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{normalized_chain_rate, ChainConfig};
use crate::error::{invalid, ModelError, Result};
use crate::link::{check_eps, PhysicalParams};

/// Code distance with its per-node qubit cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    pub distance: u32,
    pub qubits_per_node: u32,
    /// Logical pair fidelity quoted for the code, carried as metadata only.
    #[serde(default)]
    pub logical_fidelity: Option<f64>,
}

impl CodeSpec {
    /// Built-in topological family with `(2d − 1)²` qubits per node.
    pub fn topological(distance: u32) -> Result<Self> {
        Ok(Self {
            distance,
            qubits_per_node: code_qubits(distance)?,
            logical_fidelity: None,
        })
    }

    pub fn custom(distance: u32, qubits_per_node: u32) -> Result<Self> {
        let spec = Self {
            distance,
            qubits_per_node,
            logical_fidelity: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_fidelity(mut self, fidelity: f64) -> Self {
        self.logical_fidelity = Some(fidelity);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits_per_node < 1 {
            return Err(invalid(
                "qubits_per_node",
                "need at least one qubit per node",
            ));
        }
        Ok(())
    }

    pub fn n_d(&self) -> f64 {
        self.qubits_per_node as f64
    }
}

/// `(2d − 1)²` for odd `d ≥ 3`.
pub fn code_qubits(distance: u32) -> Result<u32> {
    if distance < 3 || distance.is_multiple_of(2) {
        return Err(invalid(
            "distance",
            format!("code distance must be odd and at least 3, got {distance}"),
        ));
    }
    Ok((2 * distance - 1).pow(2))
}

fn check_links(name: &'static str, r: u32) -> Result<()> {
    if r < 1 {
        return Err(invalid(name, "need at least one link"));
    }
    Ok(())
}

/// Normalised rate of an `r`-link coded chain.
pub fn coded_normalized_rate(
    p: &PhysicalParams,
    l_tot_km: f64,
    r: u32,
    code: &CodeSpec,
    eps: f64,
) -> Result<f64> {
    p.validate()?;
    code.validate()?;
    check_eps(eps)?;
    check_links("r", r)?;
    if !(l_tot_km > 0.0) {
        return Err(invalid("l_tot_km", "total distance must be positive"));
    }
    let attenuation = (-l_tot_km / (r as f64 * p.l0_km)).exp();
    let device = p.c_km_s * p.p_c * p.p_d * (1.0 - p.transmission);
    Ok(-attenuation / (code.n_d() * l_tot_km) * device / (4.0 * eps.ln()))
}

/// Smallest real `r` for which the coded chain beats `n_links` uncoded links,
/// or `None` when `L_tot ≤ N L0 ln n_d`.
pub fn improvement_threshold(n_links: u32, l_tot_km: f64, l0_km: f64, n_d: f64) -> Option<f64> {
    let n = n_links as f64;
    let denominator = l_tot_km - n * l0_km * n_d.ln();
    if denominator > 0.0 {
        Some(n * l_tot_km / denominator)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Uncoded side without `(1 − ε)^N`, with the coded prefactor.
    Criterion,
    /// Uncoded side is the full normalised chain rate.
    Strict,
}

fn uncoded_reference(
    p: &PhysicalParams,
    l_tot_km: f64,
    n_ref: u32,
    eps: f64,
    convention: Convention,
) -> Result<f64> {
    match convention {
        Convention::Criterion => {
            let bare = CodeSpec {
                distance: 1,
                qubits_per_node: 1,
                logical_fidelity: None,
            };
            coded_normalized_rate(p, l_tot_km, n_ref, &bare, eps)
        }
        Convention::Strict => normalized_chain_rate(p, &ChainConfig::new(l_tot_km, n_ref, eps)),
    }
}

/// Coded normalised rate over the uncoded reference rate.
pub fn rate_ratio(
    p: &PhysicalParams,
    l_tot_km: f64,
    r: u32,
    code: &CodeSpec,
    n_ref: u32,
    eps: f64,
    convention: Convention,
) -> Result<f64> {
    let coded = coded_normalized_rate(p, l_tot_km, r, code, eps)?;
    Ok(coded / uncoded_reference(p, l_tot_km, n_ref, eps, convention)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCell {
    pub n_links: u32,
    pub r: u32,
    pub distance: u32,
    pub n_d: u32,
    pub r_min: Option<f64>,
    /// `r > r_min` from the closed-form threshold.
    pub threshold_flag: bool,
    /// Direct rate comparison under [`Convention::Criterion`].
    pub criterion_flag: bool,
    /// Direct rate comparison under [`Convention::Strict`].
    pub strict_flag: bool,
}

impl RegionCell {
    /// Whether the closed-form threshold and the direct comparison disagree.
    pub fn diverges(&self) -> bool {
        self.threshold_flag != self.criterion_flag
    }
}

/// Improvement flags over an `(N, r)` grid for each code.
///
/// Rows are ordered by code, then `N`, then `r`.
pub fn improvement_region(
    p: &PhysicalParams,
    l_tot_km: f64,
    eps: f64,
    codes: &[CodeSpec],
    n_range: RangeInclusive<u32>,
    r_range: RangeInclusive<u32>,
) -> Result<Vec<RegionCell>> {
    if n_range.is_empty() {
        return Err(ModelError::EmptyRange("n_range"));
    }
    if r_range.is_empty() {
        return Err(ModelError::EmptyRange("r_range"));
    }
    if codes.is_empty() {
        return Err(ModelError::EmptyRange("codes"));
    }
    let cells: Vec<(CodeSpec, u32)> = codes
        .iter()
        .flat_map(|c| n_range.clone().map(move |n| (*c, n)))
        .collect();
    let rows: Result<Vec<Vec<RegionCell>>> = cells
        .into_par_iter()
        .map(|(code, n)| {
            let r_min = improvement_threshold(n, l_tot_km, p.l0_km, code.n_d());
            let criterion_ref = uncoded_reference(p, l_tot_km, n, eps, Convention::Criterion)?;
            let strict_ref = uncoded_reference(p, l_tot_km, n, eps, Convention::Strict)?;
            r_range
                .clone()
                .map(|r| {
                    let coded = coded_normalized_rate(p, l_tot_km, r, &code, eps)?;
                    Ok(RegionCell {
                        n_links: n,
                        r,
                        distance: code.distance,
                        n_d: code.qubits_per_node,
                        r_min,
                        threshold_flag: r_min.is_some_and(|m| r as f64 > m),
                        criterion_flag: coded > criterion_ref,
                        strict_flag: coded > strict_ref,
                    })
                })
                .collect()
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}
