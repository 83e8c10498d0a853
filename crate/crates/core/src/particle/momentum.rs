use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{synthesize_terms, Species, Term, WavePacket};
use crate::error::{Error, Result};
use crate::modes::{Branch, Coefficients, ModeSet, Normalization};
use crate::spacetime::FieldKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumEntry {
    pub n: [i32; 3],
    pub sign: Branch,
    pub four_momentum: [f64; 4],
    pub probability: f64,
}

/// Law of the measured 4-momentum: `n_k = |C_k|²` on `p_k = (ε_k sign k, p_k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumDistribution {
    pub entries: Vec<MomentumEntry>,
    /// `J^α = Σ_k n_k p_k^α`.
    pub mean: [f64; 4],
    /// `Σ_k n_k sign(k)` for charged species.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub charge: Option<f64>,
}

impl MomentumDistribution {
    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }
}

pub fn momentum_distribution(p: &WavePacket) -> MomentumDistribution {
    let set = p.mode_set();
    let mut mean = [0.0; 4];
    let mut charge = 0.0;
    let entries: Vec<MomentumEntry> = p
        .coefficients()
        .iter()
        .map(|(k, c)| {
            let prob = c.norm_sqr();
            let p4 = set.four_momentum(k);
            for a in 0..4 {
                mean[a] += prob * p4[a];
            }
            charge += prob * k.branch.sign();
            MomentumEntry { n: k.n, sign: k.branch, four_momentum: p4, probability: prob }
        })
        .collect();
    let charged = matches!(p.species(), Species::ScalarBosonComplex | Species::Electron);
    MomentumDistribution { entries, mean, charge: charged.then_some(charge) }
}

/// `J^α = ∫ Π^{0α} dE` for a scalar packet under unit-4-volume normalization.
pub fn energy_momentum_functional(p: &WavePacket) -> Result<[f64; 4]> {
    if !p.species().is_scalar() {
        return Err(Error::UnsupportedSpecies(format!("{:?}", p.species())));
    }
    energy_momentum_integral(p.mode_set(), p.coefficients())
}

/// `∫ Π^{0α} dE` for `ψ = Σ C_k ψ_k` with `r_k = (2|V₄|ε_k)^{-1/2}`, using
/// `Π⁰⁰ = |∂₀ψ|² + |∇ψ|² + m²|ψ|²` and `Π⁰ⁱ = −(∂₀ψ* ∂ᵢψ + c.c.)`.
/// Derivatives are exact on the plane-wave span.
pub fn energy_momentum_integral(set: &ModeSet, coeffs: &Coefficients) -> Result<[f64; 4]> {
    let set = set.clone().with_normalization(Normalization::UnitFourVolume);
    let terms: Vec<Term> = coeffs.iter().map(|(k, c)| Term { k: *k, c: *c, e: vec![C64::new(1.0, 0.0)] }).collect();
    let field = |axis: Option<usize>| {
        synthesize_terms(&set, &terms, FieldKind::Scalar, |k| match axis {
            None => C64::new(1.0, 0.0),
            Some(a) => C64::new(0.0, set.axis_wavenumbers(k)[a]),
        })
    };
    let psi = field(None)?;
    let d: Vec<_> = (0..4).map(|a| field(Some(a))).collect::<Result<_>>()?;
    let m2 = set.mass() * set.mass();
    let mut j = [0.0; 4];
    for flat in 0..psi.data().len() {
        let d0 = d[0].data()[flat];
        let mut grad2 = 0.0;
        for a in 1..4 {
            let da = d[a].data()[flat];
            grad2 += da.norm_sqr();
            j[a] -= 2.0 * (d0.conj() * da).re;
        }
        j[0] += d0.norm_sqr() + grad2 + m2 * psi.data()[flat].norm_sqr();
    }
    let w = set.spacetime_box().cell_volume();
    Ok(j.map(|v| v * w))
}
