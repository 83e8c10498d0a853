use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::region::momentum_modes;
use super::{synthesize_sparse, FockBasis, FockMode, FockOperator, OneParticleMatrix};
use crate::error::{Error, Result};
use crate::modes::{unit_overlap, ModeSet, Quadrature};
use crate::spacetime::{Region, SpacetimeBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Momentum,
    Cell,
}

/// `b = −∂₀² + Σ∂ₐ² − m²` as a periodic central second-difference stencil
/// on orthonormalized scalar cells, rows in flat cell order.
pub fn cell_kernel_matrix(bx: &SpacetimeBox, m: f64) -> OneParticleMatrix {
    let n = bx.counts();
    let h = bx.spacings();
    let coef = [0, 1, 2, 3].map(|a| if a == 0 { -1.0 } else { 1.0 } / (h[a] * h[a]));
    let mut rows = Vec::with_capacity(bx.cell_count());
    for xi in bx.cells() {
        let mut row: Vec<(usize, C64)> = Vec::with_capacity(9);
        let mut diag = -m * m;
        for a in 0..4 {
            if n[a] == 1 {
                continue;
            }
            diag -= 2.0 * coef[a];
            for step in [1, n[a] - 1] {
                let mut nb = xi;
                nb[a] = (xi[a] + step) % n[a];
                row.push((bx.flat_index(nb), C64::new(coef[a], 0.0)));
            }
        }
        row.push((bx.flat_index(xi), C64::new(diag, 0.0)));
        row.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, C64)> = Vec::with_capacity(row.len());
        for (c, v) in row {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        rows.push(merged);
    }
    rows
}

/// Eigenvalue of [`cell_kernel_matrix`] on the lattice plane wave with
/// integer wavenumbers `j`.
pub fn cell_dispersion(bx: &SpacetimeBox, m: f64, j: [i64; 4]) -> f64 {
    let n = bx.counts();
    let h = bx.spacings();
    let mut lam = -m * m;
    for a in 0..4 {
        let s = (PI * j[a] as f64 / n[a] as f64).sin();
        let term = 4.0 * s * s / (h[a] * h[a]);
        lam += if a == 0 { term } else { -term };
    }
    lam
}

/// Mass that puts the lattice plane wave `j` on shell, if real.
pub fn on_shell_lattice_mass(bx: &SpacetimeBox, j: [i64; 4]) -> Result<f64> {
    let m2 = cell_dispersion(bx, 0.0, j);
    if m2 < 0.0 {
        return Err(Error::Domain(format!("lattice wave {j:?} is spacelike; no real mass")));
    }
    Ok(m2.sqrt())
}

/// `Σ_ij b_ij a⁺_i a_j` with `b_ij = (ψ_i, Bψ_j)`, `B = ∂_α∂^α − m²`.
///
/// Momentum modes are exact plane waves, so `b_ij = l_ij(V)(p⁰_j² − |p_j|² − m²)`
/// vanishes to round-off. Cell modes use [`cell_kernel_matrix`] restricted to
/// the cells present in the basis.
pub fn field_equation_operator(basis: &FockBasis, set: &ModeSet, rep: Representation) -> Result<FockOperator> {
    let l = match rep {
        Representation::Momentum => {
            let modes = momentum_modes(basis, set)?;
            let whole = Region::whole(set.spacetime_box());
            let m2 = set.mass() * set.mass();
            let lam: Vec<f64> = modes
                .iter()
                .map(|k| {
                    let p = set.four_momentum(k);
                    p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - p[3] * p[3] - m2
                })
                .collect();
            let mut l = Vec::with_capacity(modes.len());
            for i in 0..modes.len() {
                let mut row = Vec::new();
                for j in 0..modes.len() {
                    let v = unit_overlap(set, &modes[i], &modes[j], &whole, Quadrature::CellExact)? * lam[j];
                    if v != C64::new(0.0, 0.0) {
                        row.push((j, v));
                    }
                }
                l.push(row);
            }
            l
        }
        Representation::Cell => {
            let bx = set.spacetime_box();
            let mut pos = HashMap::new();
            for (i, m) in basis.modes().iter().enumerate() {
                match m {
                    FockMode::Cell { xi, component: 0 } if *xi < bx.cell_count() => {
                        pos.insert(*xi, i);
                    }
                    other => {
                        return Err(Error::UnsupportedConfiguration(format!(
                            "{other:?} is not a scalar cell of the box"
                        )))
                    }
                }
            }
            let full = cell_kernel_matrix(bx, set.mass());
            let mut l = vec![Vec::new(); basis.modes().len()];
            for (xi, i) in &pos {
                l[*i] = full[*xi].iter().filter_map(|(c, v)| pos.get(c).map(|j| (*j, *v))).collect();
            }
            l
        }
    };
    synthesize_sparse(basis, &l)
}

#[cfg(test)]
mod tests {
    use super::super::CellBasis;
    use super::*;
    use crate::particle::fixtures::generic_set;
    use crate::spacetime::FieldKind;
    use nalgebra::{DMatrix, DVector};

    fn dense(l: &OneParticleMatrix) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(l.len(), l.len());
        for (i, row) in l.iter().enumerate() {
            for (j, v) in row {
                d[(i, *j)] = v.re;
            }
        }
        d
    }

    fn signed(i: usize, n: usize) -> i64 {
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Dense eigen-solve oracle on a 1+1D grid.
    fn check_grid(n0: usize, n1: usize, ct: f64, l: f64, m: f64) -> usize {
        let bx = SpacetimeBox::new(ct, [l, 1.0, 1.0], [n0, n1, 1, 1]).unwrap();
        let b = cell_kernel_matrix(&bx, m);
        let d = dense(&b);
        assert_eq!(d, d.transpose());
        let mut ev: Vec<f64> = d.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let mut lam = Vec::new();
        let mut kernel = Vec::new();
        for j0 in 0..n0 {
            for j1 in 0..n1 {
                let j = [signed(j0, n0), signed(j1, n1), 0, 0];
                let v = cell_dispersion(&bx, m, j);
                lam.push(v);
                if v.abs() < 1e-8 {
                    kernel.push(j);
                }
            }
        }
        lam.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&lam) {
            assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "{a} vs {b}");
        }
        let zero = ev.iter().filter(|v| v.abs() < 1e-8).count();
        assert_eq!(zero, kernel.len());
        let dc = d.map(|x| C64::new(x, 0.0));
        let waves: Vec<DVector<C64>> = kernel
            .iter()
            .map(|j| {
                DVector::from_iterator(
                    bx.cell_count(),
                    bx.cells().map(|xi| {
                        C64::from_polar(
                            1.0,
                            2.0 * PI
                                * (j[0] as f64 * xi[0] as f64 / n0 as f64 + j[1] as f64 * xi[1] as f64 / n1 as f64),
                        )
                    }),
                )
            })
            .collect();
        for w in &waves {
            assert!((&dc * w).norm() < 1e-8 * w.norm());
        }
        // The dense null space lies in the span of the lattice waves.
        let eig = d.symmetric_eigen();
        for (k, v) in eig.eigenvalues.iter().enumerate() {
            if v.abs() >= 1e-8 {
                continue;
            }
            let u = eig.eigenvectors.column(k).map(|x| C64::new(x, 0.0));
            let mut rest = u.clone();
            for w in &waves {
                let c = w.dotc(&u) / w.norm_squared();
                rest -= w * c;
            }
            assert!(rest.norm() < 1e-8);
        }
        kernel.len()
    }

    #[test]
    fn cell_kernel_is_the_lattice_dispersion() {
        let bx = SpacetimeBox::new(1.0, [4.0, 1.0, 1.0], [16, 12, 1, 1]).unwrap();
        let m = on_shell_lattice_mass(&bx, [2, 1, 0, 0]).unwrap();
        assert_eq!(check_grid(16, 12, 1.0, 4.0, m), 4);
        // Massless with equal spacings: j1 = ±j0 mod 8, so 1 + 1 + 6·2 states.
        assert_eq!(check_grid(8, 8, 1.0, 1.0, 0.0), 14);
    }

    #[test]
    fn heavy_mass_empties_the_kernel() {
        assert_eq!(check_grid(12, 10, 1.0, 4.0, 500.0), 0);
    }

    #[test]
    fn spacelike_wave_has_no_mass() {
        let bx = SpacetimeBox::new(8.0, [1.0, 1.0, 1.0], [8, 8, 1, 1]).unwrap();
        assert!(on_shell_lattice_mass(&bx, [0, 1, 0, 0]).is_err());
    }

    #[test]
    fn momentum_representation_vanishes() {
        let set = generic_set();
        let modes: Vec<FockMode> = set.modes().into_iter().take(12).map(FockMode::Momentum).collect();
        let basis = FockBasis::new(modes, 2, 2).unwrap();
        let op = field_equation_operator(&basis, &set, Representation::Momentum).unwrap();
        assert!(op.max_abs() < 1e-10, "{}", op.max_abs());
    }

    #[test]
    fn cell_representation_is_nontrivial_and_hermitian() {
        let bx = SpacetimeBox::new(1.0, [2.0, 1.0, 1.0], [4, 3, 1, 1]).unwrap();
        let set = ModeSet::uniform(0.5, bx, 0).unwrap();
        let cb = CellBasis::new(bx, FieldKind::Scalar);
        let basis = cb.fock_basis(2, 2).unwrap();
        let op = field_equation_operator(&basis, &set, Representation::Cell).unwrap();
        assert!(op.max_abs() > 1.0);
        assert!(op.is_flagged_hermitian());
        assert!(op.max_hermitian_defect() < 1e-12);
        let spec = op.hermitian_spectrum().unwrap();
        let b1 = dense(&cell_kernel_matrix(&bx, 0.5));
        let e1: Vec<f64> = b1.symmetric_eigenvalues().iter().copied().collect();
        for e in &e1 {
            assert!(spec.iter().any(|s| (s - e).abs() < 1e-9));
        }
        assert!(
            field_equation_operator(&FockBasis::abstract_modes(2, 1, 1).unwrap(), &set, Representation::Cell).is_err()
        );
    }
}
