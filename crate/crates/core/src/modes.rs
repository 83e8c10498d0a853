//! Signed plane-wave modes `ψ_k = r_k exp(i(p_k·x − p⁰_k x⁰))` on the periodic
//! momentum lattice `p = 2πn/L`, with `p⁰_k = ε_k·sign(k)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spacetime::{FieldKind, LatticeField, Region, SpacetimeBox};

/// Energy branch of a mode; the sign of the label `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }

    pub fn flip(self) -> Branch {
        match self {
            Branch::Positive => Branch::Negative,
            Branch::Negative => Branch::Positive,
        }
    }
}

impl TryFrom<i8> for Branch {
    type Error = Error;
    fn try_from(s: i8) -> Result<Self> {
        match s {
            1 => Ok(Branch::Positive),
            -1 => Ok(Branch::Negative),
            _ => Err(Error::Domain(format!("branch sign must be +1 or -1, got {s}"))),
        }
    }
}

impl From<Branch> for i8 {
    fn from(b: Branch) -> i8 {
        match b {
            Branch::Positive => 1,
            Branch::Negative => -1,
        }
    }
}

/// Spatial lattice site plus energy branch. The derived ordering is the
/// enumeration order: lexicographic in `n`, positive before negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex {
    pub n: [i32; 3],
    pub branch: Branch,
}

impl ModeIndex {
    pub fn new(n: [i32; 3], branch: Branch) -> Self {
        ModeIndex { n, branch }
    }

    pub fn positive(n: [i32; 3]) -> Self {
        ModeIndex { n, branch: Branch::Positive }
    }

    pub fn negative(n: [i32; 3]) -> Self {
        ModeIndex { n, branch: Branch::Negative }
    }

    /// The mode `−k`: same lattice site, opposite branch.
    pub fn partner(self) -> Self {
        ModeIndex { n: self.n, branch: self.branch.flip() }
    }
}

impl Serialize for ModeIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ModeIndex", 2)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("sign", &self.branch)?;
        st.end()
    }
}

/// Amplitude convention `r_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Normalization {
    /// `r_k = (2|V|ε_k)^{-1/2}` with `|V|` the spatial volume.
    #[serde(rename = "unit-3-volume")]
    UnitThreeVolume,
    /// `r_k = (2|V₄|ε_k)^{-1/2}`.
    #[serde(rename = "unit-4-volume")]
    UnitFourVolume,
    /// `r_k = |V₄|^{-1/2}`, so that `‖ψ_k‖ = 1` on the box.
    #[default]
    #[serde(rename = "unit-norm")]
    UnitNorm,
}

/// How a cell contributes to a phase integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrature {
    /// Value at the cell center times `w`.
    Midpoint,
    /// Closed-form `∫_cell e^{iqx} dE`.
    #[default]
    CellExact,
}

/// `ε = (|p|² + m²)^{1/2}`.
pub fn dispersion(m: f64, p: [f64; 3]) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::Domain(format!("mass must be non-negative, got {m}")));
    }
    Ok((p.iter().map(|c| c * c).sum::<f64>() + m * m).sqrt())
}

/// Plane-wave family over a box, truncated at `|n_a| <= cutoff[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    mass: f64,
    bx: SpacetimeBox,
    cutoff: [u32; 3],
    normalization: Normalization,
    commensurate_time: bool,
}

impl ModeSet {
    pub fn new(mass: f64, bx: SpacetimeBox, cutoff: [u32; 3]) -> Result<Self> {
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::Domain(format!("mass must be non-negative, got {mass}")));
        }
        Ok(ModeSet { mass, bx, cutoff, normalization: Normalization::UnitNorm, commensurate_time: false })
    }

    pub fn uniform(mass: f64, bx: SpacetimeBox, cutoff: u32) -> Result<Self> {
        Self::new(mass, bx, [cutoff; 3])
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    /// Restrict usable modes to `ε_k ∈ (2π/cT)·ℤ`, where plane waves of
    /// opposite branch are exactly orthogonal over the time window.
    pub fn with_commensurate_time(mut self, on: bool) -> Self {
        self.commensurate_time = on;
        self
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn spacetime_box(&self) -> &SpacetimeBox {
        &self.bx
    }

    pub fn cutoff(&self) -> [u32; 3] {
        self.cutoff
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn commensurate_time(&self) -> bool {
        self.commensurate_time
    }

    /// Same modes on another box (e.g. a refined grid).
    pub fn on_box(&self, bx: SpacetimeBox) -> Self {
        ModeSet { bx, ..self.clone() }
    }

    fn sites_per_axis(&self) -> [usize; 3] {
        self.cutoff.map(|c| 2 * c as usize + 1)
    }

    pub fn contains(&self, k: &ModeIndex) -> bool {
        (0..3).all(|a| k.n[a].unsigned_abs() <= self.cutoff[a])
    }

    pub(crate) fn check(&self, k: &ModeIndex) -> Result<()> {
        if !self.contains(k) {
            return Err(Error::Range(format!("mode {:?} exceeds cutoff {:?}", k.n, self.cutoff)));
        }
        if self.commensurate_time && !self.is_commensurate(k) {
            return Err(Error::Domain(format!(
                "mode {:?} has energy {} not commensurate with 2π/cT",
                k.n,
                self.energy(k)
            )));
        }
        Ok(())
    }

    /// All modes in enumeration order.
    pub fn modes(&self) -> Vec<ModeIndex> {
        let s = self.sites_per_axis();
        let c = self.cutoff.map(|c| c as i32);
        let mut out = Vec::with_capacity(2 * s.iter().product::<usize>());
        for a in -c[0]..=c[0] {
            for b in -c[1]..=c[1] {
                for d in -c[2]..=c[2] {
                    out.push(ModeIndex::positive([a, b, d]));
                    out.push(ModeIndex::negative([a, b, d]));
                }
            }
        }
        out
    }

    /// Modes usable under the commensurate-time restriction (all modes otherwise).
    pub fn usable_modes(&self) -> Vec<ModeIndex> {
        self.modes().into_iter().filter(|k| !self.commensurate_time || self.is_commensurate(k)).collect()
    }

    pub fn len(&self) -> usize {
        2 * self.sites_per_axis().iter().product::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed label `k ≠ 0`: `|k| − 1` is the lexicographic rank of `n`.
    pub fn label(&self, k: &ModeIndex) -> Result<i64> {
        if !self.contains(k) {
            return Err(Error::Range(format!("mode {:?} exceeds cutoff {:?}", k.n, self.cutoff)));
        }
        let s = self.sites_per_axis();
        let off = [0, 1, 2].map(|a| (k.n[a] + self.cutoff[a] as i32) as usize);
        let rank = (off[0] * s[1] + off[1]) * s[2] + off[2];
        let mag = rank as i64 + 1;
        Ok(match k.branch {
            Branch::Positive => mag,
            Branch::Negative => -mag,
        })
    }

    pub fn mode_from_label(&self, k: i64) -> Result<ModeIndex> {
        let s = self.sites_per_axis();
        let total = s.iter().product::<usize>() as i64;
        if k == 0 || k.abs() > total {
            return Err(Error::Range(format!("label {k} outside 1..={total}")));
        }
        let mut rank = (k.abs() - 1) as usize;
        let o2 = rank % s[2];
        rank /= s[2];
        let o1 = rank % s[1];
        let o0 = rank / s[1];
        let c = self.cutoff.map(|c| c as i32);
        let n = [o0 as i32 - c[0], o1 as i32 - c[1], o2 as i32 - c[2]];
        Ok(ModeIndex::new(n, if k > 0 { Branch::Positive } else { Branch::Negative }))
    }

    pub fn momentum(&self, k: &ModeIndex) -> [f64; 3] {
        let l = self.bx.lengths();
        [0, 1, 2].map(|a| 2.0 * PI * k.n[a] as f64 / l[a])
    }

    /// `ε_k`.
    pub fn energy(&self, k: &ModeIndex) -> f64 {
        let p = self.momentum(k);
        (p.iter().map(|c| c * c).sum::<f64>() + self.mass * self.mass).sqrt()
    }

    /// `(p⁰_k, p_k)` with `p⁰_k = ε_k·sign(k)`.
    pub fn four_momentum(&self, k: &ModeIndex) -> [f64; 4] {
        let p = self.momentum(k);
        [self.energy(k) * k.branch.sign(), p[0], p[1], p[2]]
    }

    /// True when `ε_k·cT/2π` is an integer.
    pub fn is_commensurate(&self, k: &ModeIndex) -> bool {
        let turns = self.energy(k) * self.bx.ct() / (2.0 * PI);
        (turns - turns.round()).abs() < 1e-9 * turns.max(1.0)
    }

    /// `r_k` under the set's normalization.
    pub fn amplitude(&self, k: &ModeIndex) -> Result<f64> {
        let eps = self.energy(k);
        let needs_energy = !matches!(self.normalization, Normalization::UnitNorm);
        if needs_energy && eps <= 0.0 {
            return Err(Error::Domain(format!("mode {:?} has zero energy; r_k diverges", k.n)));
        }
        Ok(match self.normalization {
            Normalization::UnitNorm => self.bx.volume4().powf(-0.5),
            Normalization::UnitThreeVolume => (2.0 * self.bx.spatial_volume() * eps).powf(-0.5),
            Normalization::UnitFourVolume => (2.0 * self.bx.volume4() * eps).powf(-0.5),
        })
    }

    /// Phase `p_k·x − p⁰_k x⁰`.
    pub fn phase(&self, k: &ModeIndex, x: [f64; 4]) -> f64 {
        let p = self.four_momentum(k);
        p[1] * x[1] + p[2] * x[2] + p[3] * x[3] - p[0] * x[0]
    }

    /// `ψ_k(x)` evaluated analytically.
    pub fn value(&self, k: &ModeIndex, x: [f64; 4]) -> Result<C64> {
        Ok(C64::from_polar(self.amplitude(k)?, self.phase(k, x)))
    }

    /// Per-axis wavenumbers `q` such that `ψ_k ∝ Π_a e^{i q_a x_a}`.
    pub(crate) fn axis_wavenumbers(&self, k: &ModeIndex) -> [f64; 4] {
        let p = self.four_momentum(k);
        [-p[0], p[1], p[2], p[3]]
    }
}

/// Per-axis `e^{i q_a c_a}` sampled at cell centers.
pub(crate) fn phase_tables(bx: &SpacetimeBox, q: [f64; 4]) -> [Vec<C64>; 4] {
    [0, 1, 2, 3].map(|a| bx.axis_centers(a).into_iter().map(|c| C64::from_polar(1.0, q[a] * c)).collect())
}

/// Adds `amp · Π_a t_a[i_a]` into every cell of `out` (stride `nc`, slot `comp`).
pub(crate) fn accumulate_separable(
    bx: &SpacetimeBox,
    tables: &[Vec<C64>; 4],
    amp: C64,
    out: &mut [C64],
    nc: usize,
    comp: usize,
) {
    let n = bx.counts();
    let mut flat = 0usize;
    for i0 in 0..n[0] {
        let a0 = amp * tables[0][i0];
        for i1 in 0..n[1] {
            let a1 = a0 * tables[1][i1];
            for i2 in 0..n[2] {
                let a2 = a1 * tables[2][i2];
                for t3 in &tables[3] {
                    out[flat * nc + comp] += a2 * t3;
                    flat += 1;
                }
            }
        }
    }
}

/// `ψ_k` sampled at cell centers.
pub fn mode_field(set: &ModeSet, k: &ModeIndex) -> Result<LatticeField> {
    set.check(k)?;
    let mut f = LatticeField::zeros(set.bx, FieldKind::Scalar);
    let tables = phase_tables(&set.bx, set.axis_wavenumbers(k));
    accumulate_separable(&set.bx, &tables, C64::new(set.amplitude(k)?, 0.0), f.data_mut(), 1, 0);
    Ok(f)
}

/// Mode coefficients `{C_k}`, ordered by enumeration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Coefficients(BTreeMap<ModeIndex, C64>);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientEntry {
    n: [i32; 3],
    sign: Branch,
    re: f64,
    im: f64,
}

impl Serialize for Coefficients {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<CoefficientEntry> =
            self.0.iter().map(|(k, c)| CoefficientEntry { n: k.n, sign: k.branch, re: c.re, im: c.im }).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Coefficients {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<CoefficientEntry>::deserialize(d)?;
        let mut out = Coefficients::new();
        for e in v {
            let k = ModeIndex::new(e.n, e.sign);
            if out.0.insert(k, C64::new(e.re, e.im)).is_some() {
                return Err(serde::de::Error::custom(format!("duplicate coefficient for mode {:?}", k)));
            }
        }
        Ok(out)
    }
}

impl Coefficients {
    pub fn new() -> Self {
        Coefficients(BTreeMap::new())
    }

    pub fn single(k: ModeIndex) -> Self {
        let mut c = Self::new();
        c.insert(k, C64::new(1.0, 0.0));
        c
    }

    pub fn insert(&mut self, k: ModeIndex, c: C64) {
        self.0.insert(k, c);
    }

    pub fn get(&self, k: &ModeIndex) -> C64 {
        self.0.get(k).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeIndex, &C64)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.values().map(|c| c.norm_sqr()).sum()
    }

    /// Scaled to `‖C‖ = 1`; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Coefficients> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return None;
        }
        Some(Coefficients(self.0.iter().map(|(k, c)| (*k, c / n)).collect()))
    }
}

impl FromIterator<(ModeIndex, C64)> for Coefficients {
    fn from_iter<I: IntoIterator<Item = (ModeIndex, C64)>>(iter: I) -> Self {
        Coefficients(iter.into_iter().collect())
    }
}

/// `C_k = (ψ_k, f)` for every mode of the set, with unit-norm modes.
pub fn expand(f: &LatticeField, set: &ModeSet) -> Result<Coefficients> {
    if f.kind() != FieldKind::Scalar {
        return Err(Error::Mismatch("expansion needs a scalar field".into()));
    }
    if f.spacetime_box() != &set.bx {
        return Err(Error::Mismatch("field and mode set live on different boxes".into()));
    }
    let unit = set.clone().with_normalization(Normalization::UnitNorm);
    let w = set.bx.cell_volume();
    let n = set.bx.counts();
    let data = f.data();
    let mut out = Coefficients::new();
    for k in unit.modes() {
        let q = unit.axis_wavenumbers(&k);
        let t = phase_tables(&set.bx, q.map(|v| -v));
        let mut acc = C64::new(0.0, 0.0);
        let mut flat = 0usize;
        for i0 in 0..n[0] {
            for i1 in 0..n[1] {
                let a1 = t[0][i0] * t[1][i1];
                for i2 in 0..n[2] {
                    let a2 = a1 * t[2][i2];
                    let mut row = C64::new(0.0, 0.0);
                    for t3 in &t[3] {
                        row += t3 * data[flat];
                        flat += 1;
                    }
                    acc += a2 * row;
                }
            }
        }
        out.insert(k, acc * (w * unit.amplitude(&k)?));
    }
    Ok(out)
}

/// `Σ_k C_k ψ_k` sampled at cell centers.
pub fn synthesize(set: &ModeSet, coeffs: &Coefficients) -> Result<LatticeField> {
    let mut f = LatticeField::zeros(set.bx, FieldKind::Scalar);
    for (k, c) in coeffs.iter() {
        set.check(k)?;
        if *c == C64::new(0.0, 0.0) {
            continue;
        }
        let tables = phase_tables(&set.bx, set.axis_wavenumbers(k));
        accumulate_separable(&set.bx, &tables, c * set.amplitude(k)?, f.data_mut(), 1, 0);
    }
    Ok(f)
}

fn sinc(y: f64) -> f64 {
    if y.abs() < 1e-8 {
        1.0 - y * y / 6.0
    } else {
        y.sin() / y
    }
}

/// Contribution of one cell (index `i`, spacing `h`) to `∫ e^{iqx} dx`.
fn cell_factor(q: f64, h: f64, i: usize, quad: Quadrature) -> C64 {
    let c = (i as f64 + 0.5) * h;
    let base = C64::from_polar(h, q * c);
    match quad {
        Quadrature::Midpoint => base,
        Quadrature::CellExact => base * sinc(0.5 * q * h),
    }
}

/// Sum of `cell_factor` over a full axis, with the exact zero restored
/// when `qL` is a non-aliased multiple of 2π.
fn full_axis_sum(q: f64, h: f64, n: usize, quad: Quadrature) -> C64 {
    let l = h * n as f64;
    let turns = q * l / (2.0 * PI);
    let r = turns.round();
    let on_lattice = (turns - r).abs() < 1e-10 * turns.abs().max(1.0);
    if on_lattice && r != 0.0 {
        let aliased = quad == Quadrature::Midpoint && (r as i64) % (n as i64) == 0;
        if !aliased {
            return C64::new(0.0, 0.0);
        }
    }
    (0..n).map(|i| cell_factor(q, h, i, quad)).sum()
}

/// `∫_Q ψ_i* ψ_j dE` for unit-norm modes; the diagonal is `|Q|/|V₄|` by
/// construction.
pub fn unit_overlap(set: &ModeSet, i: &ModeIndex, j: &ModeIndex, region: &Region, quad: Quadrature) -> Result<C64> {
    if region.spacetime_box() != &set.bx {
        return Err(Error::RegionMisaligned("region grid differs from the mode set's box".into()));
    }
    if i == j {
        return Ok(C64::new(region.volume_fraction(), 0.0));
    }
    let qi = set.axis_wavenumbers(i);
    let qj = set.axis_wavenumbers(j);
    let q = [0, 1, 2, 3].map(|a| qj[a] - qi[a]);
    let bx = &set.bx;
    let h = bx.spacings();
    let n = bx.counts();
    let norm = 1.0 / bx.volume4();
    if region.cell_count() == bx.cell_count() {
        let mut prod = C64::new(norm, 0.0);
        for a in 0..4 {
            prod *= full_axis_sum(q[a], h[a], n[a], quad);
        }
        return Ok(prod);
    }
    let f: [Vec<C64>; 4] = [0, 1, 2, 3].map(|a| (0..n[a]).map(|m| cell_factor(q[a], h[a], m, quad)).collect());
    let mut acc = C64::new(0.0, 0.0);
    for flat in region.cells() {
        let xi = bx.unflatten(flat);
        acc += f[0][xi[0]] * f[1][xi[1]] * f[2][xi[2]] * f[3][xi[3]];
    }
    Ok(acc * norm)
}
