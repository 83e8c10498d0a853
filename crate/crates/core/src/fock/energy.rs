use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::region::momentum_modes;
use super::{FockBasis, FockOperator};
use crate::error::{Error, Result};
use crate::modes::{Branch, ModeSet};

/// Which vacuum term the energy operator carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyConvention {
    /// `Σ_{k>0} ε_k(n_k + n_{−k})`, no vacuum term; modes must pair up.
    PaperCharged,
    /// `Σ_i ε_i n_i`.
    PaperNeutral,
    /// `Σ_{k>0} ε_k(n_k + n_{−k} + 1)`; modes must pair up.
    Textbook,
}

/// Diagonal energy operator over a momentum-mode basis.
pub fn energy_operator(basis: &FockBasis, set: &ModeSet, convention: EnergyConvention) -> Result<FockOperator> {
    let modes = momentum_modes(basis, set)?;
    let eps: Vec<f64> = modes.iter().map(|k| set.energy(k)).collect();
    let mut constant = 0.0;
    if convention != EnergyConvention::PaperNeutral {
        for k in &modes {
            if !modes.contains(&k.partner()) {
                return Err(Error::UnpairedModes(format!("{k:?} has no partner in the basis")));
            }
        }
        if convention == EnergyConvention::Textbook {
            constant = modes.iter().zip(&eps).filter(|(k, _)| k.branch == Branch::Positive).map(|(_, e)| e).sum();
        }
    }
    let values: Vec<C64> = basis
        .states()
        .iter()
        .map(|n| C64::new(constant + n.iter().zip(&eps).map(|(n, e)| *n as f64 * e).sum::<f64>(), 0.0))
        .collect();
    Ok(FockOperator::diagonal(&values, true))
}
