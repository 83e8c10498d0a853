use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::{event_density, momentum_distribution, Density4, WavePacket};
use crate::error::{Error, Result};
use crate::spacetime::{FieldKind, LatticeField, SpacetimeBox};

/// Four-dimensional spreads `Δx^α`, `Δp_α` and their products.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyReport {
    pub dx: [f64; 4],
    pub dp: [f64; 4],
    pub products: [f64; 4],
    /// Mean energy `J⁰` of the momentum law.
    pub energy: f64,
    /// `ħc/|J⁰|`, absent when the mean energy vanishes.
    pub dx_min: Option<f64>,
    /// Whether each spatial spread reaches `dx_min`.
    pub resolvable: [bool; 3],
}

impl UncertaintyReport {
    fn new(dx: [f64; 4], dp: [f64; 4], energy: f64) -> Self {
        let dx_min = (energy != 0.0).then(|| 1.0 / energy.abs());
        let resolvable = [1, 2, 3].map(|a| dx_min.is_some_and(|m| dx[a] >= m));
        let products = [0, 1, 2, 3].map(|a| dx[a] * dp[a]);
        UncertaintyReport { dx, dp, products, energy, dx_min, resolvable }
    }
}

/// Per-axis standard deviation of the piecewise-constant density: the
/// midpoint variance plus the in-cell `h²/12`.
pub(crate) fn position_spreads(d: &Density4) -> [f64; 4] {
    let bx = d.spacetime_box();
    let h = bx.spacings();
    let w = bx.cell_volume();
    let centers: Vec<Vec<f64>> = (0..4).map(|a| bx.axis_centers(a)).collect();
    let mut laws: Vec<Vec<f64>> = centers.iter().map(|c| vec![0.0; c.len()]).collect();
    for (flat, g) in d.values().iter().enumerate() {
        let xi = bx.unflatten(flat);
        for a in 0..4 {
            laws[a][xi[a]] += g * w;
        }
    }
    [0, 1, 2, 3].map(|a| {
        let sd = spread(laws[a].iter().copied().zip(centers[a].iter().copied())).1;
        (sd * sd + h[a] * h[a] / 12.0).sqrt()
    })
}

fn spread(weights: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, f64) {
    let (mut s0, mut s1) = (0.0, 0.0);
    for (p, v) in weights.clone() {
        s0 += p;
        s1 += p * v;
    }
    let mean = s1 / s0;
    let var: f64 = weights.map(|(p, v)| p * (v - mean) * (v - mean)).sum::<f64>() / s0;
    (mean, var.sqrt())
}

/// Spreads of a packet: positions under `g`, momenta under `n_k`.
pub fn uncertainty_report(p: &WavePacket) -> Result<UncertaintyReport> {
    let d = event_density(p)?;
    let dx = position_spreads(&d);
    let law = momentum_distribution(p);
    let dp = [0, 1, 2, 3].map(|a| spread(law.entries.iter().map(|e| (e.probability, e.four_momentum[a]))).1);
    Ok(UncertaintyReport::new(dx, dp, law.mean[0]))
}

/// In-place 4D DFT over the grid layout (time outermost).
fn fft4(bx: &SpacetimeBox, data: &mut [C64]) {
    let n = bx.counts();
    let mut planner = FftPlanner::new();
    for a in 0..4 {
        let len = n[a];
        if len == 1 {
            continue;
        }
        let stride: usize = n[a + 1..].iter().product();
        let fft = planner.plan_fft_forward(len);
        let mut line = vec![C64::new(0.0, 0.0); len];
        for outer in 0..data.len() / (len * stride) {
            for inner in 0..stride {
                let base = outer * len * stride + inner;
                for (i, z) in line.iter_mut().enumerate() {
                    *z = data[base + i * stride];
                }
                fft.process(&mut line);
                for (i, z) in line.iter().enumerate() {
                    data[base + i * stride] = *z;
                }
            }
        }
    }
}

/// Spreads of an arbitrary scalar field on the box, treated as an element of
/// the full 4D Hilbert space. Momenta come from the lattice Fourier law on
/// `p_a = 2πn_a/L_a` and `p⁰ = −2πn₀/cT` with signed `n ∈ [−N/2, N/2)`.
pub fn field_uncertainty_report(f: &LatticeField) -> Result<UncertaintyReport> {
    if f.kind() != FieldKind::Scalar {
        return Err(Error::Mismatch("field uncertainty needs a scalar field".into()));
    }
    let bx = *f.spacetime_box();
    let d = Density4::from_values(bx, f.data().iter().map(|z| z.norm_sqr()).collect())?;
    let dx = position_spreads(&d);
    let mut spec = f.data().to_vec();
    fft4(&bx, &mut spec);
    let counts = bx.counts();
    let ext = bx.extents();
    let mut laws: Vec<Vec<f64>> = counts.iter().map(|&c| vec![0.0; c]).collect();
    for (flat, z) in spec.iter().enumerate() {
        let xi = bx.unflatten(flat);
        let p = z.norm_sqr();
        for a in 0..4 {
            laws[a][xi[a]] += p;
        }
    }
    let mut dp = [0.0; 4];
    let mut energy = 0.0;
    for a in 0..4 {
        let len = counts[a] as i64;
        let sign = if a == 0 { -1.0 } else { 1.0 };
        let momentum = |i: usize| {
            let n = if (i as i64) < (len + 1) / 2 { i as i64 } else { i as i64 - len };
            sign * 2.0 * PI * n as f64 / ext[a]
        };
        let (mean, sd) = spread(laws[a].iter().enumerate().map(|(i, p)| (*p, momentum(i))));
        dp[a] = sd;
        if a == 0 {
            energy = mean;
        }
    }
    Ok(UncertaintyReport::new(dx, dp, energy))
}

/// Gaussian envelope `Π_a exp(−(x_a − L_a/2)²/(4σ_a²) + i k_a x_a)` on the grid;
/// `|f|²` has standard deviation `σ_a` along axis `a`.
pub fn gaussian_field(bx: SpacetimeBox, sigma: [f64; 4], carrier: [f64; 4]) -> LatticeField {
    let ext = bx.extents();
    LatticeField::scalar_from_fn(bx, |x| {
        let mut arg = C64::new(0.0, 0.0);
        for a in 0..4 {
            let u = x[a] - ext[a] / 2.0;
            arg += C64::new(-u * u / (4.0 * sigma[a] * sigma[a]), carrier[a] * x[a]);
        }
        arg.exp()
    })
}
