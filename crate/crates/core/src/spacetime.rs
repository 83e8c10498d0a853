//! Finite spacetime box, its uniform cell grid, lattice fields and midpoint
//! quadrature.
//!
//! Axis 0 is time (`x⁰ = ct`, natural units), axes 1..=3 are spatial. Every
//! cell is a brick `v(ξ)` of identical 4-volume `w`; all integrals are
//! midpoint sums over cell centers.

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_f64;

/// The finite box `(0, cT) × V` with a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxSpec", into = "BoxSpec")]
pub struct SpacetimeBox {
    extents: [f64; 4],
    counts: [usize; 4],
}

/// Wire form `{cT, L:[3], N:[4]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    #[serde(rename = "cT")]
    pub ct: f64,
    #[serde(rename = "L")]
    pub l: [f64; 3],
    #[serde(rename = "N")]
    pub n: [usize; 4],
}

impl TryFrom<BoxSpec> for SpacetimeBox {
    type Error = Error;
    fn try_from(s: BoxSpec) -> Result<Self> {
        SpacetimeBox::new(s.ct, s.l, s.n)
    }
}

impl From<SpacetimeBox> for BoxSpec {
    fn from(b: SpacetimeBox) -> Self {
        BoxSpec { ct: b.extents[0], l: [b.extents[1], b.extents[2], b.extents[3]], n: b.counts }
    }
}

impl SpacetimeBox {
    pub fn new(ct: f64, l: [f64; 3], n: [usize; 4]) -> Result<Self> {
        let extents = [ct, l[0], l[1], l[2]];
        if extents.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::Domain(format!("box extents must be positive, got {extents:?}")));
        }
        if n.contains(&0) {
            return Err(Error::Domain(format!("grid counts must be at least 1, got {n:?}")));
        }
        Ok(SpacetimeBox { extents, counts: n })
    }

    /// Same physical box with a different grid.
    pub fn regrid(&self, counts: [usize; 4]) -> Result<Self> {
        SpacetimeBox::new(self.extents[0], [self.extents[1], self.extents[2], self.extents[3]], counts)
    }

    pub fn ct(&self) -> f64 {
        self.extents[0]
    }

    pub fn lengths(&self) -> [f64; 3] {
        [self.extents[1], self.extents[2], self.extents[3]]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extents[axis]
    }

    pub fn extents(&self) -> [f64; 4] {
        self.extents
    }

    pub fn counts(&self) -> [usize; 4] {
        self.counts
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.counts[axis] as f64
    }

    pub fn spacings(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|a| self.spacing(a))
    }

    /// Volume `w` of a single cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacings().iter().product()
    }

    /// `|V₄| = cT·L1·L2·L3`.
    pub fn volume4(&self) -> f64 {
        self.extents.iter().product()
    }

    /// Spatial volume `|V|`.
    pub fn spatial_volume(&self) -> f64 {
        self.extents[1] * self.extents[2] * self.extents[3]
    }

    pub fn cell_count(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn spatial_cell_count(&self) -> usize {
        self.counts[1] * self.counts[2] * self.counts[3]
    }

    pub fn flat_index(&self, xi: [usize; 4]) -> usize {
        let n = self.counts;
        ((xi[0] * n[1] + xi[1]) * n[2] + xi[2]) * n[3] + xi[3]
    }

    pub fn unflatten(&self, mut flat: usize) -> [usize; 4] {
        let n = self.counts;
        let i3 = flat % n[3];
        flat /= n[3];
        let i2 = flat % n[2];
        flat /= n[2];
        let i1 = flat % n[1];
        [flat / n[1], i1, i2, i3]
    }

    pub fn cell(&self, xi: [usize; 4]) -> Result<CellIndex> {
        if (0..4).any(|a| xi[a] >= self.counts[a]) {
            return Err(Error::Range(format!("cell {xi:?} outside grid {:?}", self.counts)));
        }
        Ok(CellIndex { xi, w: self.cell_volume() })
    }

    /// Coordinate of the center of cell `i` along `axis`.
    pub fn center_coord(&self, axis: usize, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing(axis)
    }

    pub fn axis_centers(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis]).map(|i| self.center_coord(axis, i)).collect()
    }

    pub fn cell_center(&self, xi: [usize; 4]) -> [f64; 4] {
        [0, 1, 2, 3].map(|a| self.center_coord(a, xi[a]))
    }

    /// All cells in flat-index order.
    pub fn cells(&self) -> impl Iterator<Item = [usize; 4]> + '_ {
        (0..self.cell_count()).map(move |f| self.unflatten(f))
    }

    /// Index of the cell containing the point `x`, or `None` outside the box.
    pub fn locate(&self, x: [f64; 4]) -> Option<[usize; 4]> {
        let mut xi = [0usize; 4];
        for a in 0..4 {
            if !(x[a] >= 0.0 && x[a] < self.extents[a]) {
                return None;
            }
            xi[a] = ((x[a] / self.spacing(a)) as usize).min(self.counts[a] - 1);
        }
        Some(xi)
    }

    pub fn contains_point(&self, x: [f64; 4]) -> bool {
        (0..4).all(|a| x[a] >= 0.0 && x[a] <= self.extents[a])
    }
}

/// A brick `v(ξ)` of the grid together with its 4-volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellIndex {
    pub xi: [usize; 4],
    pub w: f64,
}

/// Component layout of a lattice field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Scalar,
    Vector,
    Spinor,
}

impl FieldKind {
    pub fn components(self) -> usize {
        match self {
            FieldKind::Scalar => 1,
            FieldKind::Vector | FieldKind::Spinor => 4,
        }
    }

    /// Weight of component `c` in the field's quadratic form. Vectors carry
    /// the pseudo-Euclidean signature `u₁u₂ = u₁*·u₂ − u₁⁰*u₂⁰`.
    pub fn signature(self, c: usize) -> f64 {
        match (self, c) {
            (FieldKind::Vector, 0) => -1.0,
            _ => 1.0,
        }
    }
}

/// Complex field sampled at cell centers; components are stored innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    bx: SpacetimeBox,
    kind: FieldKind,
    data: Vec<C64>,
}

impl LatticeField {
    pub fn zeros(bx: SpacetimeBox, kind: FieldKind) -> Self {
        LatticeField { bx, kind, data: vec![C64::new(0.0, 0.0); bx.cell_count() * kind.components()] }
    }

    pub fn from_data(bx: SpacetimeBox, kind: FieldKind, data: Vec<C64>) -> Result<Self> {
        let expected = bx.cell_count() * kind.components();
        if data.len() != expected {
            return Err(Error::Mismatch(format!("field data has {} entries, grid needs {expected}", data.len())));
        }
        Ok(LatticeField { bx, kind, data })
    }

    /// Samples `f(center, component)` on every cell.
    pub fn from_fn(bx: SpacetimeBox, kind: FieldKind, f: impl Fn([f64; 4], usize) -> C64) -> Self {
        let nc = kind.components();
        let mut data = Vec::with_capacity(bx.cell_count() * nc);
        for xi in bx.cells() {
            let x = bx.cell_center(xi);
            for c in 0..nc {
                data.push(f(x, c));
            }
        }
        LatticeField { bx, kind, data }
    }

    pub fn scalar_from_fn(bx: SpacetimeBox, f: impl Fn([f64; 4]) -> C64) -> Self {
        Self::from_fn(bx, FieldKind::Scalar, |x, _| f(x))
    }

    pub fn spacetime_box(&self) -> &SpacetimeBox {
        &self.bx
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Components at the cell with flat index `flat`.
    pub fn at(&self, flat: usize) -> &[C64] {
        let nc = self.kind.components();
        &self.data[flat * nc..(flat + 1) * nc]
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    /// Pointwise quadratic form `Σ_c sig_c |u_c|²` per cell.
    pub fn pointwise_square(&self) -> Vec<f64> {
        let nc = self.kind.components();
        self.data
            .chunks_exact(nc)
            .map(|u| u.iter().enumerate().map(|(c, z)| self.kind.signature(c) * z.norm_sqr()).sum())
            .collect()
    }

    /// Writes `xi0,xi1,xi2,xi3,component,re,im` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = crate::io::csv_writer(w);
        out.write_record(["xi0", "xi1", "xi2", "xi3", "component", "re", "im"])?;
        let nc = self.kind.components();
        for (flat, u) in self.data.chunks_exact(nc).enumerate() {
            let xi = self.bx.unflatten(flat);
            for (c, z) in u.iter().enumerate() {
                out.write_record([
                    xi[0].to_string(),
                    xi[1].to_string(),
                    xi[2].to_string(),
                    xi[3].to_string(),
                    c.to_string(),
                    fmt_f64(z.re),
                    fmt_f64(z.im),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Midpoint approximation of `∫_V f1*·f2 dE` with the kind's signature.
pub fn inner_product(f1: &LatticeField, f2: &LatticeField) -> Result<C64> {
    if f1.bx != f2.bx {
        return Err(Error::Mismatch("fields live on different boxes".into()));
    }
    if f1.kind != f2.kind {
        return Err(Error::Mismatch(format!("field kinds differ: {:?} vs {:?}", f1.kind, f2.kind)));
    }
    let nc = f1.kind.components();
    let mut acc = C64::new(0.0, 0.0);
    for (a, b) in f1.data.chunks_exact(nc).zip(f2.data.chunks_exact(nc)) {
        for c in 0..nc {
            acc += a[c].conj() * b[c] * f1.kind.signature(c);
        }
    }
    Ok(acc * f1.bx.cell_volume())
}

/// `‖f‖²`; negative values are possible for vector fields that break the
/// gauge constraint.
pub fn norm_squared(f: &LatticeField) -> f64 {
    inner_product(f, f).map(|z| z.re).unwrap_or(0.0)
}

/// A union of whole grid cells, membership decided per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    bx: SpacetimeBox,
    mask: Vec<bool>,
}

impl Region {
    pub fn whole(bx: &SpacetimeBox) -> Self {
        Region { bx: *bx, mask: vec![true; bx.cell_count()] }
    }

    pub fn empty(bx: &SpacetimeBox) -> Self {
        Region { bx: *bx, mask: vec![false; bx.cell_count()] }
    }

    pub fn from_mask(bx: &SpacetimeBox, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != bx.cell_count() {
            return Err(Error::Mismatch(format!("mask has {} cells, grid has {}", mask.len(), bx.cell_count())));
        }
        Ok(Region { bx: *bx, mask })
    }

    /// Cells whose centers satisfy `pred`.
    pub fn from_predicate(bx: &SpacetimeBox, pred: impl Fn([f64; 4]) -> bool) -> Self {
        let mask = bx.cells().map(|xi| pred(bx.cell_center(xi))).collect();
        Region { bx: *bx, mask }
    }

    /// Index brick `lo[a] <= ξ[a] < hi[a]`.
    pub fn index_brick(bx: &SpacetimeBox, lo: [usize; 4], hi: [usize; 4]) -> Result<Self> {
        let n = bx.counts();
        if (0..4).any(|a| lo[a] > hi[a] || hi[a] > n[a]) {
            return Err(Error::Range(format!("brick {lo:?}..{hi:?} outside grid {n:?}")));
        }
        let mask = bx.cells().map(|xi| (0..4).all(|a| xi[a] >= lo[a] && xi[a] < hi[a])).collect();
        Ok(Region { bx: *bx, mask })
    }

    /// Physical brick `[lo, hi]`; every face must sit on a cell boundary.
    pub fn physical_brick(bx: &SpacetimeBox, lo: [f64; 4], hi: [f64; 4]) -> Result<Self> {
        let mut ilo = [0usize; 4];
        let mut ihi = [0usize; 4];
        for a in 0..4 {
            let h = bx.spacing(a);
            for (val, slot) in [(lo[a], &mut ilo[a]), (hi[a], &mut ihi[a])] {
                let k = val / h;
                let r = k.round();
                if (k - r).abs() > 1e-9 || r < 0.0 {
                    return Err(Error::RegionMisaligned(format!(
                        "face {val} on axis {a} is not a multiple of spacing {h}"
                    )));
                }
                *slot = r as usize;
            }
        }
        Self::index_brick(bx, ilo, ihi)
    }

    pub fn spacetime_box(&self) -> &SpacetimeBox {
        &self.bx
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, flat: usize) -> bool {
        self.mask[flat]
    }

    pub fn cell_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// `|Q|`.
    pub fn volume(&self) -> f64 {
        self.cell_count() as f64 * self.bx.cell_volume()
    }

    /// `|Q| / |V₄|` as a ratio of cell counts, exact for dyadic fractions.
    pub fn volume_fraction(&self) -> f64 {
        self.cell_count() as f64 / self.bx.cell_count() as f64
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn union(&self, other: &Region) -> Result<Region> {
        self.check_same_grid(other)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect();
        Ok(Region { bx: self.bx, mask })
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.mask.iter().zip(&other.mask).all(|(a, b)| !(*a && *b))
    }

    pub fn complement(&self) -> Region {
        Region { bx: self.bx, mask: self.mask.iter().map(|m| !m).collect() }
    }

    pub fn check_same_grid(&self, other: &Region) -> Result<()> {
        if self.bx != other.bx {
            return Err(Error::RegionMisaligned("regions are defined on different grids".into()));
        }
        Ok(())
    }
}

/// `Σ_{ξ∈Q} f(ξ)·w(ξ)`.
pub fn integrate_region(f: &[f64], q: &Region) -> Result<f64> {
    if f.len() != q.mask.len() {
        return Err(Error::Mismatch(format!("function has {} cells, region grid has {}", f.len(), q.mask.len())));
    }
    let s: f64 = f.iter().zip(&q.mask).filter(|(_, &m)| m).map(|(v, _)| v).sum();
    Ok(s * q.bx.cell_volume())
}
