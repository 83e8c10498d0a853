use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{synthesize_operator, FockBasis, FockMode, FockOperator};
use crate::error::{Error, Result};
use crate::modes::{unit_overlap, ModeIndex, ModeSet, Quadrature};
use crate::spacetime::Region;

pub(crate) fn momentum_modes(basis: &FockBasis, set: &ModeSet) -> Result<Vec<ModeIndex>> {
    basis
        .modes()
        .iter()
        .map(|m| match m {
            FockMode::Momentum(k) => {
                set.check(k)?;
                Ok(*k)
            }
            other => Err(Error::UnsupportedConfiguration(format!("{other:?} is not a momentum mode"))),
        })
        .collect()
}

/// `l_ij(Q) = ∫_Q ψ_i* ψ_j dE` for unit-norm modes (`r = |V₄|^{-1/2}`),
/// whatever normalization `set` carries.
pub fn region_one_particle_matrix(
    set: &ModeSet,
    modes: &[ModeIndex],
    q: &Region,
    quad: Quadrature,
) -> Result<DMatrix<C64>> {
    let m = modes.len();
    let mut l = DMatrix::from_element(m, m, C64::new(0.0, 0.0));
    for i in 0..m {
        l[(i, i)] = unit_overlap(set, &modes[i], &modes[i], q, quad)?;
        for j in i + 1..m {
            let v = unit_overlap(set, &modes[i], &modes[j], q, quad)?;
            l[(i, j)] = v;
            l[(j, i)] = v.conj();
        }
    }
    Ok(l)
}

/// `Λ(Q) = Σ_ij l_ij(Q) a⁺_i a_j` over a momentum-mode basis.
pub fn region_number_operator(basis: &FockBasis, set: &ModeSet, q: &Region, quad: Quadrature) -> Result<FockOperator> {
    let modes = momentum_modes(basis, set)?;
    synthesize_operator(basis, &region_one_particle_matrix(set, &modes, q, quad)?)
}
