use std::io::Write;

use num_complex::Complex64 as C64;

use super::{Species, WavePacket, NEGATIVE_CLAMP};
use crate::error::{Error, Result};
use crate::io::{csv_writer, fmt_f64};
use crate::spacetime::SpacetimeBox;

/// Event density `g(ξ)` on the grid, normalized so that `Σ g·w = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Density4 {
    bx: SpacetimeBox,
    values: Vec<f64>,
}

impl Density4 {
    /// Wraps non-negative cell values and renormalizes them.
    pub fn from_values(bx: SpacetimeBox, values: Vec<f64>) -> Result<Self> {
        if values.len() != bx.cell_count() {
            return Err(Error::Mismatch(format!("{} values for {} cells", values.len(), bx.cell_count())));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Domain("density values must be non-negative".into()));
        }
        let total: f64 = values.iter().sum::<f64>() * bx.cell_volume();
        if !(total > 0.0) {
            return Err(Error::NoSupport);
        }
        Ok(Density4 { bx, values: values.into_iter().map(|v| v / total).collect() })
    }

    pub fn spacetime_box(&self) -> &SpacetimeBox {
        &self.bx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Σ g·w`.
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.bx.cell_volume()
    }

    /// Cell probabilities `g(ξ)·w`.
    pub fn cell_probabilities(&self) -> Vec<f64> {
        let w = self.bx.cell_volume();
        self.values.iter().map(|g| g * w).collect()
    }

    /// Writes `xi0,xi1,xi2,xi3,g` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        out.write_record(["xi0", "xi1", "xi2", "xi3", "g"])?;
        for (flat, g) in self.values.iter().enumerate() {
            let xi = self.bx.unflatten(flat);
            out.write_record([
                xi[0].to_string(),
                xi[1].to_string(),
                xi[2].to_string(),
                xi[3].to_string(),
                fmt_f64(*g),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `g = ψ²` with the species' quadratic form.
///
/// Negative values down to `-1e-12` are clamped to zero; anything lower is a
/// positivity failure of the vector gauge data.
pub fn event_density(p: &WavePacket) -> Result<Density4> {
    let mut q = p.field().pointwise_square();
    let min = q.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -NEGATIVE_CLAMP {
        return Err(Error::GaugeViolation(format!("u² reaches {min:e} below the {:e} threshold", -NEGATIVE_CLAMP)));
    }
    q.iter_mut().for_each(|v| *v = v.max(0.0));
    Density4::from_values(*p.spacetime_box(), q)
}

/// Spatial and temporal marginals of a density.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    bx: SpacetimeBox,
    /// `g1(x)` per spatial cell, index `(i1·N2 + i2)·N3 + i3`.
    pub g1: Vec<f64>,
    /// `g0(x⁰)` per time row.
    pub g0: Vec<f64>,
}

impl Marginals {
    pub fn write_g0_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        out.write_record(["xi0", "g0"])?;
        for (i, v) in self.g0.iter().enumerate() {
            out.write_record([i.to_string(), fmt_f64(*v)])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_g1_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        out.write_record(["xi1", "xi2", "xi3", "g1"])?;
        for (s, v) in self.g1.iter().enumerate() {
            let xi = self.bx.unflatten(s);
            out.write_record([xi[1].to_string(), xi[2].to_string(), xi[3].to_string(), fmt_f64(*v)])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn marginals(d: &Density4) -> Marginals {
    let bx = d.bx;
    let h = bx.spacings();
    let dv3 = h[1] * h[2] * h[3];
    let s = bx.spatial_cell_count();
    let mut g1 = vec![0.0; s];
    let mut g0 = vec![0.0; bx.counts()[0]];
    for (row, slice) in d.values.chunks_exact(s).enumerate() {
        for (a, g) in g1.iter_mut().zip(slice) {
            *a += g * h[0];
        }
        g0[row] = slice.iter().sum::<f64>() * dv3;
    }
    Marginals { bx, g1, g0 }
}

/// `g1(x/x⁰) = g(x)/g0(x⁰)` on time row `row`.
pub fn conditional_spatial(d: &Density4, row: usize) -> Result<Vec<f64>> {
    let bx = d.bx;
    let n0 = bx.counts()[0];
    if row >= n0 {
        return Err(Error::Range(format!("time row {row} outside 0..{n0}")));
    }
    let h = bx.spacings();
    let s = bx.spatial_cell_count();
    let slice = &d.values[row * s..(row + 1) * s];
    let g0 = slice.iter().sum::<f64>() * h[1] * h[2] * h[3];
    if g0 * bx.ct() <= NEGATIVE_CLAMP {
        return Err(Error::UndefinedConditional { row, g0 });
    }
    Ok(slice.iter().map(|g| g / g0).collect())
}

/// Pointwise `(∂ψ)² = −|∂₀ψ|² + |∇ψ|²` for a scalar packet, derivatives taken
/// spectrally.
pub fn gradient_invariant(p: &WavePacket) -> Result<Vec<f64>> {
    if !matches!(p.species(), Species::ScalarBosonReal | Species::ScalarBosonComplex) {
        return Err(Error::UnsupportedSpecies(format!("{:?}", p.species())));
    }
    let set = p.mode_set();
    let mut out = vec![0.0; p.spacetime_box().cell_count()];
    for axis in 0..4 {
        let d = p.weighted_field(|k| C64::new(0.0, set.axis_wavenumbers(k)[axis]))?;
        let sig = if axis == 0 { -1.0 } else { 1.0 };
        for (o, z) in out.iter_mut().zip(d.data()) {
            *o += sig * z.norm_sqr();
        }
    }
    Ok(out)
}
