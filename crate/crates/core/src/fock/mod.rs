//! Truncated bosonic Fock space over a finite list of one-particle modes.
//!
//! Occupations are capped per mode (`n_max`) and in total (`N_max`). Ladder
//! operators use the standard `√n` elements; anything pushed past a cap maps
//! to zero, so canonical commutators hold only below the caps.

mod cells;
mod energy;
mod field_equation;
mod n1;
mod region;

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

pub use cells::{cell_number_operator, CellBasis};
pub use energy::{energy_operator, EnergyConvention};
pub use field_equation::{
    cell_dispersion, cell_kernel_matrix, field_equation_operator, on_shell_lattice_mass, Representation,
};
pub use n1::{n1_from_field, n1_subsystem, N1Report, N1Row};
pub use region::{region_number_operator, region_one_particle_matrix};

use crate::error::{Error, Result};
use crate::modes::ModeIndex;

/// Hard ceiling on enumerated basis states.
pub const MAX_STATES: usize = 2_000_000;
/// Largest dimension for which dense copies are produced.
pub const DENSE_LIMIT: usize = 5000;

/// Label of a one-particle mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FockMode {
    Momentum(ModeIndex),
    /// Grid cell (flat index) and field component.
    Cell {
        xi: usize,
        component: usize,
    },
    Abstract(usize),
}

/// Enumerated occupation states, graded by total number and then
/// lexicographic with the first mode varying slowest.
#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: Vec<FockMode>,
    n_max: u32,
    total_max: u32,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    mode_index: HashMap<FockMode, usize>,
}

/// Number of occupation vectors of `m` modes with sum `n`, each at most `cap`.
fn count_compositions(m: usize, cap: u32, n: u32) -> u128 {
    let mut ways = vec![0u128; n as usize + 1];
    ways[0] = 1;
    for _ in 0..m {
        let mut next = vec![0u128; n as usize + 1];
        for (s, w) in ways.iter().enumerate() {
            if *w == 0 {
                continue;
            }
            for k in 0..=cap.min(n - s as u32) {
                next[s + k as usize] += w;
            }
        }
        ways = next;
    }
    ways[n as usize]
}

fn push_compositions(m: usize, cap: u32, n: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() == m {
        if n == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    let rest = (m - prefix.len() - 1) as u64;
    for k in 0..=cap.min(n) {
        if (n - k) as u64 > rest * cap as u64 {
            continue;
        }
        prefix.push(k);
        push_compositions(m, cap, n - k, prefix, out);
        prefix.pop();
    }
}

impl FockBasis {
    pub fn new(modes: Vec<FockMode>, n_max: u32, total_max: u32) -> Result<Self> {
        Self::with_limit(modes, n_max, total_max, MAX_STATES)
    }

    pub fn with_limit(modes: Vec<FockMode>, n_max: u32, total_max: u32, limit: usize) -> Result<Self> {
        let mut mode_index = HashMap::new();
        for (i, m) in modes.iter().enumerate() {
            if mode_index.insert(*m, i).is_some() {
                return Err(Error::Domain(format!("duplicate mode {m:?}")));
            }
        }
        let m = modes.len();
        let count: u128 = (0..=total_max).map(|n| count_compositions(m, n_max, n)).sum();
        if count > limit as u128 {
            return Err(Error::BasisTooLarge { states: count.min(usize::MAX as u128) as usize, limit });
        }
        let mut states = Vec::with_capacity(count as usize);
        for n in 0..=total_max {
            push_compositions(m, n_max, n, &mut Vec::with_capacity(m), &mut states);
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(FockBasis { modes, n_max, total_max, states, index, mode_index })
    }

    /// Modes `Abstract(0..m)`.
    pub fn abstract_modes(m: usize, n_max: u32, total_max: u32) -> Result<Self> {
        Self::new((0..m).map(FockMode::Abstract).collect(), n_max, total_max)
    }

    pub fn modes(&self) -> &[FockMode] {
        &self.modes
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn total_max(&self) -> u32 {
        self.total_max
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn index_of(&self, n: &[u32]) -> Option<usize> {
        self.index.get(n).copied()
    }

    pub fn mode_position(&self, m: &FockMode) -> Result<usize> {
        self.mode_index.get(m).copied().ok_or_else(|| Error::Range(format!("mode {m:?} is not in the basis")))
    }

    /// True when `a⁺_j` cannot be truncated on state `s`.
    pub fn below_caps(&self, s: usize, j: usize) -> bool {
        let n = &self.states[s];
        n.iter().sum::<u32>() < self.total_max && n[j] < self.n_max
    }

    pub fn vacuum(&self) -> FockVector {
        self.basis_vector(0)
    }

    pub fn basis_vector(&self, i: usize) -> FockVector {
        let mut amps = vec![C64::new(0.0, 0.0); self.dim()];
        amps[i] = C64::new(1.0, 0.0);
        FockVector { amps }
    }

    /// `Σ_k c_k |1_k⟩` over mode positions.
    pub fn one_particle(&self, c: &[C64]) -> Result<FockVector> {
        if c.len() != self.modes.len() {
            return Err(Error::Mismatch(format!("{} amplitudes for {} modes", c.len(), self.modes.len())));
        }
        if self.total_max < 1 || self.n_max < 1 {
            return Err(Error::Range("basis has no one-particle sector".into()));
        }
        let mut amps = vec![C64::new(0.0, 0.0); self.dim()];
        let mut n = vec![0u32; self.modes.len()];
        for (k, ck) in c.iter().enumerate() {
            n[k] = 1;
            amps[self.index[&n]] = *ck;
            n[k] = 0;
        }
        Ok(FockVector { amps })
    }
}

/// Amplitudes `Φ(n)` over a basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockVector {
    pub amps: Vec<C64>,
}

impl FockVector {
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn dot(&self, other: &FockVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.amps.iter().all(|z| *z == C64::new(0.0, 0.0))
    }
}

/// Sparse matrix over a Fock basis, stored by rows with ascending columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    rows: Vec<Vec<(usize, C64)>>,
    hermitian: bool,
}

fn accumulate_rows(dim: usize, entries: impl IntoIterator<Item = (usize, usize, C64)>) -> Vec<Vec<(usize, C64)>> {
    let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
    for (r, c, v) in entries {
        rows[r].push((c, v));
    }
    for row in rows.iter_mut() {
        row.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, C64)> = Vec::with_capacity(row.len());
        for (c, v) in row.drain(..) {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|e| e.1 != C64::new(0.0, 0.0));
        *row = merged;
    }
    rows
}

impl FockOperator {
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, usize, C64)>, hermitian: bool) -> Self {
        FockOperator { rows: accumulate_rows(dim, entries), hermitian }
    }

    pub fn diagonal(values: &[C64], hermitian: bool) -> Self {
        Self::from_entries(values.len(), values.iter().enumerate().map(|(i, v)| (i, i, *v)), hermitian)
    }

    pub fn zeros(dim: usize) -> Self {
        FockOperator { rows: vec![Vec::new(); dim], hermitian: true }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); dim], true)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Flag set at construction (from a Hermitian one-particle matrix).
    pub fn is_flagged_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn rows(&self) -> &[Vec<(usize, C64)>] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        match self.rows[r].binary_search_by_key(&c, |e| e.0) {
            Ok(i) => self.rows[r][i].1,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |(c, v)| (r, *c, *v)))
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        if v.amps.len() != self.dim() {
            return Err(Error::Mismatch(format!(
                "vector of length {} for operator of dim {}",
                v.amps.len(),
                self.dim()
            )));
        }
        Ok(FockVector { amps: self.rows.iter().map(|row| row.iter().map(|(c, x)| x * v.amps[*c]).sum()).collect() })
    }

    /// `⟨v|A|v⟩`.
    pub fn expectation(&self, v: &FockVector) -> Result<C64> {
        Ok(v.dot(&self.apply(v)?))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_entries(self.dim(), self.entries().map(|(r, c, v)| (c, r, v.conj())), self.hermitian)
    }

    pub fn max_hermitian_defect(&self) -> f64 {
        self.entries().map(|(r, c, v)| (v - self.get(c, r).conj()).norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        let hermitian = self.hermitian && s.im == 0.0;
        Self::from_entries(self.dim(), self.entries().map(|(r, c, v)| (r, c, v * s)), hermitian)
    }

    pub fn add(&self, other: &FockOperator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_entries(self.dim(), self.entries().chain(other.entries()), self.hermitian && other.hermitian))
    }

    pub fn sub(&self, other: &FockOperator) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &FockOperator) -> Result<Self> {
        self.check_dim(other)?;
        let mut entries = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for (k, a) in row {
                for (c, b) in &other.rows[*k] {
                    entries.push((r, *c, a * b));
                }
            }
        }
        Ok(Self::from_entries(self.dim(), entries, false))
    }

    pub fn commutator(&self, other: &FockOperator) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Diagonal elements.
    pub fn diagonal_values(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries().all(|(r, c, _)| r == c)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().map(|(_, _, v)| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        if self.dim() > DENSE_LIMIT {
            return Err(Error::BasisTooLarge { states: self.dim(), limit: DENSE_LIMIT });
        }
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        Ok(m)
    }

    /// Eigenvalues of a Hermitian operator, ascending (dense solve).
    pub fn hermitian_spectrum(&self) -> Result<Vec<f64>> {
        let m = self.to_dense()?;
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    fn check_dim(&self, other: &FockOperator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Mismatch(format!("operator dims {} and {}", self.dim(), other.dim())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

/// `a⁺_i` or `a_i` for the mode at position `i`.
pub fn ladder(basis: &FockBasis, i: usize, kind: Ladder) -> Result<FockOperator> {
    if i >= basis.modes.len() {
        return Err(Error::Range(format!("mode position {i} outside 0..{}", basis.modes.len())));
    }
    let mut entries = Vec::new();
    let mut n = vec![0u32; basis.modes.len()];
    for (s, state) in basis.states.iter().enumerate() {
        n.copy_from_slice(state);
        let (amp, ok) = match kind {
            Ladder::Annihilate => {
                let amp = (n[i] as f64).sqrt();
                (
                    amp,
                    n[i] > 0 && {
                        n[i] -= 1;
                        true
                    },
                )
            }
            Ladder::Create => {
                let amp = (n[i] as f64 + 1.0).sqrt();
                n[i] += 1;
                (amp, true)
            }
        };
        if !ok {
            continue;
        }
        if let Some(t) = basis.index_of(&n) {
            entries.push((t, s, C64::new(amp, 0.0)));
        }
    }
    Ok(FockOperator::from_entries(basis.dim(), entries, false))
}

/// Ladder operator addressed by mode label.
pub fn ladder_for(basis: &FockBasis, mode: &FockMode, kind: Ladder) -> Result<FockOperator> {
    ladder(basis, basis.mode_position(mode)?, kind)
}

/// Sparse one-particle matrix: row `i` lists `(j, l_ij)`.
pub type OneParticleMatrix = Vec<Vec<(usize, C64)>>;

pub fn dense_to_sparse(l: &DMatrix<C64>) -> OneParticleMatrix {
    (0..l.nrows())
        .map(|i| (0..l.ncols()).filter(|j| l[(i, *j)] != C64::new(0.0, 0.0)).map(|j| (j, l[(i, j)])).collect())
        .collect()
}

fn sparse_is_hermitian(l: &OneParticleMatrix) -> bool {
    let get = |i: usize, j: usize| match l[i].iter().find(|e| e.0 == j) {
        Some(e) => e.1,
        None => C64::new(0.0, 0.0),
    };
    l.iter().enumerate().all(|(i, row)| row.iter().all(|(j, v)| get(*j, i) == v.conj()))
}

/// `Λ = Σ_ij l_ij a⁺_i a_j`.
pub fn synthesize_operator(basis: &FockBasis, l: &DMatrix<C64>) -> Result<FockOperator> {
    let m = basis.modes.len();
    if l.nrows() != m || l.ncols() != m {
        return Err(Error::Mismatch(format!(
            "one-particle matrix is {}x{}, basis has {m} modes",
            l.nrows(),
            l.ncols()
        )));
    }
    synthesize_sparse(basis, &dense_to_sparse(l))
}

/// As [`synthesize_operator`] for a sparse `l`. Diagonal terms contribute
/// `l_ii n_i` exactly; off-diagonal terms `l_ij √n_j √(n_i+1)`, dropped when
/// the hop leaves the caps.
pub fn synthesize_sparse(basis: &FockBasis, l: &OneParticleMatrix) -> Result<FockOperator> {
    let m = basis.modes.len();
    if l.len() != m || l.iter().flatten().any(|(j, _)| *j >= m) {
        return Err(Error::Mismatch(format!("one-particle matrix does not match {m} modes")));
    }
    // Column view: for each j, the (i, l_ij).
    let mut cols: Vec<Vec<(usize, C64)>> = vec![Vec::new(); m];
    for (i, row) in l.iter().enumerate() {
        for (j, v) in row {
            cols[*j].push((i, *v));
        }
    }
    let mut entries = Vec::new();
    let mut n = vec![0u32; m];
    for (s, state) in basis.states.iter().enumerate() {
        let mut diag = C64::new(0.0, 0.0);
        for j in 0..m {
            let nj = state[j];
            if nj == 0 {
                continue;
            }
            for (i, v) in &cols[j] {
                if *i == j {
                    diag += v * nj as f64;
                    continue;
                }
                if state[*i] >= basis.n_max {
                    continue;
                }
                n.copy_from_slice(state);
                n[j] -= 1;
                n[*i] += 1;
                let t = basis.index[&n];
                let amp = (nj as f64).sqrt() * (state[*i] as f64 + 1.0).sqrt();
                entries.push((t, s, v * amp));
            }
        }
        if diag != C64::new(0.0, 0.0) {
            entries.push((s, s, diag));
        }
    }
    Ok(FockOperator::from_entries(basis.dim(), entries, sparse_is_hermitian(l)))
}

/// `N̂ = Σ_i a⁺_i a_i`.
pub fn number_operator(basis: &FockBasis) -> FockOperator {
    let values: Vec<C64> = basis.states.iter().map(|s| C64::new(s.iter().sum::<u32>() as f64, 0.0)).collect();
    FockOperator::diagonal(&values, true)
}

/// `Λ = Σ_i n_i y_i`, with the basis modes read as eigenmodes of `L` with
/// eigenvalues `y_i`.
pub fn eigen_synthesis(basis: &FockBasis, y: &[f64]) -> Result<FockOperator> {
    if y.len() != basis.modes.len() {
        return Err(Error::Mismatch(format!("{} eigenvalues for {} modes", y.len(), basis.modes.len())));
    }
    let values: Vec<C64> =
        basis.states.iter().map(|s| C64::new(s.iter().zip(y).map(|(n, v)| *n as f64 * v).sum(), 0.0)).collect();
    Ok(FockOperator::diagonal(&values, true))
}

/// Spectra of the same Hermitian `l` lifted two ways: `Σ l_ij a⁺_i a_j` in the
/// given modes, and `Σ n_i y_i` over the eigenmodes of `l` under the same caps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisComparison {
    pub general: Vec<f64>,
    pub eigen: Vec<f64>,
    pub max_deviation: f64,
}

/// The two spectra coincide when only the total cap binds; a per-mode cap
/// is not invariant under the change of one-particle basis.
pub fn compare_synthesis(basis: &FockBasis, l: &DMatrix<C64>) -> Result<SynthesisComparison> {
    if !sparse_is_hermitian(&dense_to_sparse(l)) {
        return Err(Error::Mismatch("one-particle matrix is not Hermitian".into()));
    }
    let general = synthesize_operator(basis, l)?.hermitian_spectrum()?;
    let y: Vec<f64> = l.clone().symmetric_eigenvalues().iter().copied().collect();
    let mut eigen: Vec<f64> = eigen_synthesis(basis, &y)?.diagonal_values().iter().map(|v| v.re).collect();
    eigen.sort_by(f64::total_cmp);
    let max_deviation = general.iter().zip(&eigen).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(SynthesisComparison { general, eigen, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn enumeration_is_graded_then_lexicographic() {
        let b = FockBasis::abstract_modes(3, 2, 2).unwrap();
        let want: Vec<Vec<u32>> = vec![
            vec![0, 0, 0],
            vec![0, 0, 1],
            vec![0, 1, 0],
            vec![1, 0, 0],
            vec![0, 0, 2],
            vec![0, 1, 1],
            vec![0, 2, 0],
            vec![1, 0, 1],
            vec![1, 1, 0],
            vec![2, 0, 0],
        ];
        assert_eq!(b.states(), &want[..]);
        for (i, s) in want.iter().enumerate() {
            assert_eq!(b.index_of(s), Some(i));
        }
    }

    #[test]
    fn state_counts_match_capped_compositions() {
        for (m, cap, tot) in [(1, 3, 5), (3, 1, 3), (4, 2, 5), (5, 4, 3), (2, 0, 2)] {
            let b = FockBasis::abstract_modes(m, cap, tot).unwrap();
            // Brute force over the full cap box.
            let mut brute = 0;
            let mut n = vec![0u32; m];
            loop {
                if n.iter().sum::<u32>() <= tot {
                    brute += 1;
                }
                let mut a = 0;
                while a < m && n[a] == cap {
                    n[a] = 0;
                    a += 1;
                }
                if a == m {
                    break;
                }
                n[a] += 1;
            }
            assert_eq!(b.dim(), brute, "{m} {cap} {tot}");
        }
    }

    #[test]
    fn oversized_basis_is_refused() {
        let r = FockBasis::with_limit((0..30).map(FockMode::Abstract).collect(), 3, 6, 1000);
        assert!(matches!(r, Err(Error::BasisTooLarge { limit: 1000, .. })));
        assert!(FockBasis::new(vec![FockMode::Abstract(1), FockMode::Abstract(1)], 1, 1).is_err());
    }

    #[test]
    fn ladder_basics() {
        let b = FockBasis::abstract_modes(2, 4, 4).unwrap();
        let a0 = ladder(&b, 0, Ladder::Annihilate).unwrap();
        assert!(a0.apply(&b.vacuum()).unwrap().is_zero());
        let n0 = ladder(&b, 0, Ladder::Create).unwrap().mul(&a0).unwrap();
        let s = b.index_of(&[3, 1]).unwrap();
        let out = n0.apply(&b.basis_vector(s)).unwrap();
        assert!((out.amps[s] - 3.0).norm() < 1e-14);
        assert!(ladder(&b, 2, Ladder::Create).is_err());
        assert!(ladder_for(&b, &FockMode::Abstract(7), Ladder::Create).is_err());
    }

    #[test]
    fn truncation_maps_to_zero() {
        let b = FockBasis::abstract_modes(2, 2, 3).unwrap();
        let up = ladder(&b, 0, Ladder::Create).unwrap();
        assert!(up.apply(&b.basis_vector(b.index_of(&[2, 0]).unwrap())).unwrap().is_zero());
        assert!(up.apply(&b.basis_vector(b.index_of(&[1, 2]).unwrap())).unwrap().is_zero());
    }

    /// Independent dense construction of the truncated ladder operators.
    fn dense_ladders(b: &FockBasis, i: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = b.dim();
        let mut a = DMatrix::zeros(d, d);
        for s in 0..d {
            let n = b.state(s).to_vec();
            if n[i] > 0 {
                let mut t = n.clone();
                t[i] -= 1;
                a[(b.index_of(&t).unwrap(), s)] = (n[i] as f64).sqrt();
            }
        }
        let ad = a.transpose();
        (a, ad)
    }

    #[test]
    fn commutators_hold_below_caps() {
        for (m, cap, tot) in [(1, 4, 4), (2, 3, 4), (3, 2, 3), (3, 4, 4), (2, 4, 3)] {
            let b = FockBasis::abstract_modes(m, cap, tot).unwrap();
            for i in 0..m {
                for j in 0..m {
                    let ai = ladder(&b, i, Ladder::Annihilate).unwrap();
                    let adj = ladder(&b, j, Ladder::Create).unwrap();
                    let comm = ai.commutator(&adj).unwrap().to_dense().unwrap();
                    let (dai, _) = dense_ladders(&b, i);
                    let (_, dadj) = dense_ladders(&b, j);
                    let oracle = &dai * &dadj - &dadj * &dai;
                    for col in 0..b.dim() {
                        if !b.below_caps(col, j) {
                            continue;
                        }
                        for row in 0..b.dim() {
                            let delta = if i == j && row == col { 1.0 } else { 0.0 };
                            assert!((comm[(row, col)] - c(oracle[(row, col)])).norm() < 1e-12);
                            assert!(
                                (comm[(row, col)] - c(delta)).norm() < 1e-12,
                                "{m} {cap} {tot}: [{i},{j}] ({row},{col})"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn identity_and_diagonal_synthesis() {
        let b = FockBasis::abstract_modes(3, 3, 4).unwrap();
        let id = synthesize_operator(&b, &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(id, number_operator(&b));
        let y = [0.5, -1.25, 3.0];
        let l = DMatrix::from_fn(3, 3, |i, j| if i == j { c(y[i]) } else { c(0.0) });
        let op = synthesize_operator(&b, &l).unwrap();
        assert!(op.is_diagonal());
        for s in 0..b.dim() {
            let want: f64 = b.state(s).iter().zip(&y).map(|(n, y)| *n as f64 * y).sum();
            assert_eq!(op.get(s, s), c(want));
        }
        assert!(synthesize_operator(&b, &DMatrix::identity(2, 2)).is_err());
    }

    fn hermitian(m: usize, seed: &[f64]) -> DMatrix<C64> {
        let mut l = DMatrix::from_element(m, m, c(0.0));
        let mut it = seed.iter().cycle();
        for i in 0..m {
            l[(i, i)] = c(*it.next().unwrap());
            for j in i + 1..m {
                let z = C64::new(*it.next().unwrap(), *it.next().unwrap());
                l[(i, j)] = z;
                l[(j, i)] = z.conj();
            }
        }
        l
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn spectrum_is_sums_of_one_particle_levels(seed in proptest::collection::vec(-2.0f64..2.0, 9)) {
            let m = 3;
            let l = hermitian(m, &seed);
            // n_max = N_max: no per-mode truncation inside a fixed-N sector.
            let b = FockBasis::abstract_modes(m, 2, 2).unwrap();
            let op = synthesize_operator(&b, &l).unwrap();
            prop_assert!(op.is_flagged_hermitian());
            prop_assert!(op.max_hermitian_defect() < 1e-12);
            let ev = op.hermitian_spectrum().unwrap();
            let e1: Vec<f64> = l.clone().symmetric_eigenvalues().iter().copied().collect();
            let mut want = vec![0.0];
            want.extend(e1.iter().copied());
            for i in 0..m {
                for j in i..m {
                    want.push(e1[i] + e1[j]);
                }
            }
            want.sort_by(f64::total_cmp);
            for (a, b) in ev.iter().zip(&want) {
                prop_assert!((a - b).abs() < 1e-10, "{ev:?} vs {want:?}");
            }
        }

        #[test]
        fn synthesized_operators_conserve_number(seed in proptest::collection::vec(-2.0f64..2.0, 16)) {
            let l = hermitian(4, &seed);
            let b = FockBasis::abstract_modes(4, 2, 3).unwrap();
            let op = synthesize_operator(&b, &l).unwrap();
            let total = |s: usize| b.state(s).iter().sum::<u32>();
            for (r, cidx, _) in op.entries() {
                prop_assert_eq!(total(r), total(cidx));
            }
            let comm = op.commutator(&number_operator(&b)).unwrap();
            prop_assert!(comm.max_abs() == 0.0);
            prop_assert_eq!(op.expectation(&b.vacuum()).unwrap(), c(0.0));
        }
    }

    #[test]
    fn random_hermitian_two_mode_spectrum() {
        let l = hermitian(2, &[0.3, -0.7, 1.1, 0.9]);
        let b = FockBasis::abstract_modes(2, 2, 2).unwrap();
        let op = synthesize_operator(&b, &l).unwrap();
        let dense = op.to_dense().unwrap();
        let brute: Vec<f64> = {
            let mut v: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v
        };
        assert_eq!(brute, op.hermitian_spectrum().unwrap());
        let e: Vec<f64> = l.symmetric_eigenvalues().iter().copied().collect();
        let mut want = vec![0.0, e[0], e[1], 2.0 * e[0], e[0] + e[1], 2.0 * e[1]];
        want.sort_by(f64::total_cmp);
        for (a, b) in brute.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_form_is_diagonal_in_occupations() {
        let b = FockBasis::abstract_modes(3, 2, 2).unwrap();
        let op = eigen_synthesis(&b, &[1.0, -2.0, 0.5]).unwrap();
        let s = b.index_of(&[1, 0, 1]).unwrap();
        assert_eq!(op.get(s, s), c(1.5));
        assert!(op.is_diagonal());
        assert!(eigen_synthesis(&b, &[1.0]).is_err());
    }

    #[test]
    fn per_mode_cap_splits_the_two_forms() {
        // Complete-graph hopping on 3 modes, eigenvalues 2, -1, -1. With one
        // particle per mode the pair sector hops as K3 (2, -1, -1) while the
        // eigenmode sums give 1, 1, -2.
        let mut l = DMatrix::from_element(3, 3, c(1.0));
        l.fill_diagonal(c(0.0));
        let r = compare_synthesis(&FockBasis::abstract_modes(3, 1, 2).unwrap(), &l).unwrap();
        assert!((r.max_deviation - 1.0).abs() < 1e-12, "{r:?}");
        let r = compare_synthesis(&FockBasis::abstract_modes(3, 2, 2).unwrap(), &l).unwrap();
        assert!(r.max_deviation < 1e-12, "{r:?}");
        let mut bad = l.clone();
        bad[(0, 1)] = c(2.0);
        assert!(compare_synthesis(&FockBasis::abstract_modes(3, 2, 2).unwrap(), &bad).is_err());
    }

    proptest! {
        #[test]
        fn forms_agree_when_only_the_total_cap_binds(seed in proptest::collection::vec(-2.0f64..2.0, 9)) {
            let l = hermitian(3, &seed);
            let r = compare_synthesis(&FockBasis::abstract_modes(3, 3, 3).unwrap(), &l).unwrap();
            prop_assert!(r.max_deviation < 1e-10, "{:?}", r);
        }
    }
}
