use num_complex::Complex64 as C64;

use super::{FockBasis, FockMode, FockOperator};
use crate::error::{Error, Result};
use crate::spacetime::{FieldKind, LatticeField, Region, SpacetimeBox};

/// Cell indicator family: amplitude `1/w` on one cell and component, zero
/// elsewhere, so `‖χ_ξ‖² = 1/w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellBasis {
    bx: SpacetimeBox,
    kind: FieldKind,
}

impl CellBasis {
    pub fn new(bx: SpacetimeBox, kind: FieldKind) -> Self {
        CellBasis { bx, kind }
    }

    pub fn spacetime_box(&self) -> &SpacetimeBox {
        &self.bx
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.bx.cell_count() * self.kind.components()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn amplitude(&self) -> f64 {
        1.0 / self.bx.cell_volume()
    }

    pub fn norm_squared(&self) -> f64 {
        1.0 / self.bx.cell_volume()
    }

    /// Cell modes in flat order, components innermost.
    pub fn modes(&self) -> Vec<FockMode> {
        let nc = self.kind.components();
        (0..self.bx.cell_count())
            .flat_map(|xi| (0..nc).map(move |component| FockMode::Cell { xi, component }))
            .collect()
    }

    /// The indicator of cell `xi`, component `component`.
    pub fn function(&self, xi: usize, component: usize) -> Result<LatticeField> {
        if xi >= self.bx.cell_count() || component >= self.kind.components() {
            return Err(Error::Range(format!("cell mode ({xi}, {component}) outside the basis")));
        }
        let mut f = LatticeField::zeros(self.bx, self.kind);
        f.data_mut()[xi * self.kind.components() + component] = C64::new(self.amplitude(), 0.0);
        Ok(f)
    }

    /// Coefficients `(χ_ξ, f)`, which equal the cell values of `f`.
    pub fn expand(&self, f: &LatticeField) -> Result<Vec<C64>> {
        self.check_field(f)?;
        let w = self.bx.cell_volume();
        Ok(f.data().iter().map(|z| z * (self.amplitude() * w)).collect())
    }

    /// `P(ξ) = ψ²(ξ) w(ξ)` assembled from the expansion coefficients.
    pub fn probabilities(&self, f: &LatticeField) -> Result<Vec<f64>> {
        let c = self.expand(f)?;
        let w = self.bx.cell_volume();
        let nc = self.kind.components();
        Ok(c.chunks_exact(nc)
            .map(|u| u.iter().enumerate().map(|(k, z)| self.kind.signature(k) * z.norm_sqr()).sum::<f64>() * w)
            .collect())
    }

    pub fn fock_basis(&self, n_max: u32, total_max: u32) -> Result<FockBasis> {
        FockBasis::new(self.modes(), n_max, total_max)
    }

    fn check_field(&self, f: &LatticeField) -> Result<()> {
        if f.spacetime_box() != &self.bx || f.kind() != self.kind {
            return Err(Error::Mismatch("field does not live on the cell basis grid".into()));
        }
        Ok(())
    }
}

/// `Λ(Q′) = Σ_{ξ∈Q′} n(ξ)`, summed over components.
pub fn cell_number_operator(cells: &CellBasis, basis: &FockBasis, q: &Region) -> Result<FockOperator> {
    if q.spacetime_box() != cells.spacetime_box() {
        return Err(Error::RegionMisaligned("region grid differs from the cell basis grid".into()));
    }
    let inside: Vec<bool> = basis
        .modes()
        .iter()
        .map(|m| match m {
            FockMode::Cell { xi, component } if *xi < q.mask().len() && *component < cells.kind().components() => {
                Ok(q.contains(*xi))
            }
            FockMode::Cell { .. } => Err(Error::RegionMisaligned(format!("{m:?} lies outside the region grid"))),
            other => Err(Error::UnsupportedConfiguration(format!("{other:?} is not a cell mode"))),
        })
        .collect::<Result<_>>()?;
    let values: Vec<C64> = basis
        .states()
        .iter()
        .map(|n| C64::new(n.iter().zip(&inside).filter(|(_, i)| **i).map(|(n, _)| *n).sum::<u32>() as f64, 0.0))
        .collect();
    Ok(FockOperator::diagonal(&values, true))
}
