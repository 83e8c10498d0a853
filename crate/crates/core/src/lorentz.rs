//! Active Lorentz boosts and numerical checks of the invariance of `g(x)` and
//! `P(Q)` for scalar packets.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{Branch, Coefficients, ModeIndex, ModeSet};
use crate::particle::{event_density, WavePacket};
use crate::spacetime::{Region, SpacetimeBox};

const METRIC: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

/// Pure boost with velocity `v` (`|v| < 1`), acting on contravariant vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoostSpec", into = "BoostSpec")]
pub struct Boost {
    v: [f64; 3],
    gamma: f64,
    m: [[f64; 4]; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostSpec {
    pub v: [f64; 3],
}

impl TryFrom<BoostSpec> for Boost {
    type Error = Error;
    fn try_from(s: BoostSpec) -> Result<Self> {
        Boost::new(s.v)
    }
}

impl From<Boost> for BoostSpec {
    fn from(b: Boost) -> Self {
        BoostSpec { v: b.v }
    }
}

impl Boost {
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let v2: f64 = v.iter().map(|c| c * c).sum();
        if !(v2 < 1.0) {
            return Err(Error::Domain(format!("boost speed must be below 1, got |v|² = {v2}")));
        }
        let gamma = 1.0 / (1.0 - v2).sqrt();
        let mut m = [[0.0; 4]; 4];
        m[0][0] = gamma;
        for i in 0..3 {
            m[0][i + 1] = gamma * v[i];
            m[i + 1][0] = gamma * v[i];
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                let k = if v2 > 0.0 { (gamma - 1.0) * v[i] * v[j] / v2 } else { 0.0 };
                m[i + 1][j + 1] = delta + k;
            }
        }
        Ok(Boost { v, gamma, m })
    }

    pub fn identity() -> Self {
        Self::new([0.0; 3]).expect("zero velocity")
    }

    pub fn velocity(&self) -> [f64; 3] {
        self.v
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn matrix(&self) -> [[f64; 4]; 4] {
        self.m
    }

    pub fn inverse(&self) -> Boost {
        Boost::new(self.v.map(|c| -c)).expect("inverse of a valid boost")
    }

    pub fn apply(&self, p: [f64; 4]) -> [f64; 4] {
        [0, 1, 2, 3].map(|r| (0..4).map(|c| self.m[r][c] * p[c]).sum())
    }

    pub fn apply_complex(&self, p: [C64; 4]) -> [C64; 4] {
        [0, 1, 2, 3].map(|r| (0..4).map(|c| p[c] * self.m[r][c]).sum())
    }
}

/// `Λp`.
pub fn boost_momentum(b: &Boost, p: [f64; 4]) -> [f64; 4] {
    b.apply(p)
}

/// Minkowski square `|p|² − (p⁰)²`.
pub fn minkowski_square(p: [f64; 4]) -> f64 {
    (0..4).map(|a| METRIC[a] * p[a] * p[a]).sum()
}

/// Relativistic sum of collinear speeds.
pub fn collinear_velocity_addition(u: f64, w: f64) -> f64 {
    (u + w) / (1.0 + u * w)
}

/// `(1/L)∫₀ᴸ e^{iΔx} dx`, exact 1 or 0 when `ΔL` is a multiple of 2π.
fn axis_projection(delta: f64, l: f64) -> C64 {
    let turns = delta * l / (2.0 * PI);
    let r = turns.round();
    if (turns - r).abs() < 1e-9 {
        return if r == 0.0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    (C64::new(0.0, delta * l).exp() - 1.0) / C64::new(0.0, delta * l)
}

/// Result of boosting a scalar packet.
#[derive(Debug, Clone)]
pub struct BoostedPacket {
    /// Normalized packet on the target mode set.
    pub packet: WavePacket,
    /// Reprojected coefficients before renormalization.
    pub coefficients: Coefficients,
    /// `Σ_k |C_k|² (1 − Σ_{n'} |s_{kn'}|²)`: weight lost off the target cutoff.
    pub leakage: f64,
    /// Exact boosted 4-momenta `Λp_k` of the source terms.
    pub boosted_momenta: Vec<(ModeIndex, [f64; 4])>,
}

/// Applies `ψ′(x′) = ψ(Λ⁻¹x′)` mode by mode and projects each boosted plane
/// wave onto the target momentum lattice.
pub fn boost_scalar_packet(b: &Boost, p: &WavePacket, target: Option<&ModeSet>) -> Result<BoostedPacket> {
    if !p.species().is_scalar() {
        return Err(Error::UnsupportedSpecies(format!(
            "boosts are implemented for scalar packets, got {:?}",
            p.species()
        )));
    }
    let src = p.mode_set();
    let target = target.unwrap_or(src);
    if target.mass() != src.mass() {
        return Err(Error::Mismatch("target mode set has a different mass".into()));
    }
    let tl = target.spacetime_box().lengths();
    let cut = target.cutoff();
    let mut out = Coefficients::new();
    let mut leakage = 0.0;
    let mut boosted = Vec::new();
    for (k, c) in p.coefficients().iter() {
        let pp = b.apply(src.four_momentum(k));
        boosted.push((*k, pp));
        if pp[0] == 0.0 {
            return Err(Error::Domain(format!("mode {:?} has zero boosted energy", k.n)));
        }
        let branch = if pp[0] > 0.0 { Branch::Positive } else { Branch::Negative };
        let mut factors: Vec<Vec<(i32, C64)>> = Vec::with_capacity(3);
        let mut kept = 1.0;
        for a in 0..3 {
            let unit = 2.0 * PI / tl[a];
            let nearest = (pp[a + 1] / unit).round();
            if nearest.abs() > cut[a] as f64 {
                return Err(Error::CutoffOverflow(format!(
                    "mode {:?} boosts to lattice site {nearest} on axis {} beyond cutoff {}",
                    k.n,
                    a + 1,
                    cut[a]
                )));
            }
            let c = cut[a] as i32;
            let f: Vec<(i32, C64)> = (-c..=c)
                .map(|n| (n, axis_projection(pp[a + 1] - unit * n as f64, tl[a])))
                .filter(|(_, s)| s.norm() > 0.0)
                .collect();
            kept *= f.iter().map(|(_, s)| s.norm_sqr()).sum::<f64>();
            factors.push(f);
        }
        leakage += c.norm_sqr() * (1.0 - kept).max(0.0);
        let r_src = src.amplitude(k)?;
        for (n0, s0) in &factors[0] {
            for (n1, s1) in &factors[1] {
                for (n2, s2) in &factors[2] {
                    let kk = ModeIndex::new([*n0, *n1, *n2], branch);
                    let ratio = r_src / target.amplitude(&kk)?;
                    let add = c * s0 * s1 * s2 * ratio;
                    out.insert(kk, out.get(&kk) + add);
                }
            }
        }
    }
    let packet = WavePacket::scalar(p.species(), target.clone(), out.clone())?;
    Ok(BoostedPacket { packet, coefficients: out, leakage, boosted_momenta: boosted })
}

/// Outcome of an invariance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    /// `max |g′(Λx) − g(x)|` over source cell centers (reprojected packet).
    pub density_dev: f64,
    /// `|P(ΛQ, ψ′) − P(Q, ψ)|` with the exact boosted field; boundary cells
    /// of `ΛQ` are weighted by their covered fraction.
    pub prob_dev: f64,
    pub prob_source: f64,
    pub prob_target: f64,
    pub leakage: f64,
    /// Target grid counts.
    pub grid: [usize; 4],
}

/// Evaluates `scale·Σ C_k r_k e^{iP_k·x}` at `x`.
fn evaluate(terms: &[(C64, f64, [f64; 4])], scale: f64, x: [f64; 4]) -> C64 {
    terms
        .iter()
        .map(|(c, r, p)| {
            let phase = p[1] * x[1] + p[2] * x[2] + p[3] * x[3] - p[0] * x[0];
            c * C64::from_polar(*r * scale, phase)
        })
        .sum()
}

/// Compares `g` and `P(Q)` before and after the boost.
///
/// The pointwise check evaluates the reprojected packet at `Λx` for every
/// source cell center. The probability check integrates the exact boosted
/// field over the target cells, each weighted by the fraction of it covered by `ΛQ`.
pub fn invariance_check(b: &Boost, p: &WavePacket, q: &Region, target: Option<&ModeSet>) -> Result<InvarianceReport> {
    let src = p.mode_set();
    let sbx = *src.spacetime_box();
    if q.spacetime_box() != &sbx {
        return Err(Error::RegionMisaligned("region is not on the packet's grid".into()));
    }
    let target = target.unwrap_or(src);
    let tbx = *target.spacetime_box();
    let boosted = boost_scalar_packet(b, p, Some(target))?;

    let d = event_density(p)?;
    let scale = p.scale();
    let source_terms: Vec<(C64, f64, [f64; 4])> = p
        .coefficients()
        .iter()
        .map(|(k, c)| Ok((*c, src.amplitude(k)?, src.four_momentum(k))))
        .collect::<Result<_>>()?;
    let reprojected: Vec<(C64, f64, [f64; 4])> = boosted
        .coefficients
        .iter()
        .map(|(k, c)| Ok((*c, target.amplitude(k)?, target.four_momentum(k))))
        .collect::<Result<_>>()?;
    let exact: Vec<(C64, f64, [f64; 4])> =
        source_terms.iter().zip(&boosted.boosted_momenta).map(|((c, r, _), (_, pp))| (*c, *r, *pp)).collect();

    let mut density_dev: f64 = 0.0;
    for flat in 0..sbx.cell_count() {
        let x = sbx.cell_center(sbx.unflatten(flat));
        let g = evaluate(&source_terms, scale, x).norm_sqr();
        let g2 = evaluate(&reprojected, scale, b.apply(x)).norm_sqr();
        density_dev = density_dev.max((g2 - g).abs());
    }

    let mut lo = [usize::MAX; 4];
    let mut hi = [0usize; 4];
    for flat in q.cells() {
        let xi = sbx.unflatten(flat);
        for a in 0..4 {
            lo[a] = lo[a].min(xi[a]);
            hi[a] = hi[a].max(xi[a] + 1);
        }
    }
    let prob_source: f64 = q.cells().map(|c| d.values()[c]).sum::<f64>() * sbx.cell_volume();
    let mut prob_target = 0.0;
    if q.cell_count() > 0 {
        let h = sbx.spacings();
        let text = tbx.extents();
        for corner in 0..16 {
            let x: [f64; 4] = [0, 1, 2, 3].map(|a| if corner >> a & 1 == 1 { hi[a] } else { lo[a] } as f64 * h[a]);
            let y = b.apply(x);
            if (0..4).any(|a| y[a] < 0.0 || y[a] > text[a]) {
                return Err(Error::Range(format!("boosted region corner {y:?} leaves the target box")));
            }
        }
        let inv = b.inverse();
        let mut acc = 0.0;
        for xi in tbx.cells() {
            let cover = coverage(&inv, &sbx, q, &tbx, xi);
            if cover > 0.0 {
                acc += cover * evaluate(&exact, scale, tbx.cell_center(xi)).norm_sqr();
            }
        }
        prob_target = acc * tbx.cell_volume();
    }
    Ok(InvarianceReport {
        density_dev,
        prob_dev: (prob_target - prob_source).abs(),
        prob_source,
        prob_target,
        leakage: boosted.leakage,
        grid: tbx.counts(),
    })
}

/// Fraction of target cell `xi` whose preimage under `inv` lies in `q`.
///
/// Only axes mixed by the boost can cut a cell; cells whose corners and
/// center agree are taken whole, the rest are sub-sampled along those axes.
fn coverage(inv: &Boost, sbx: &SpacetimeBox, q: &Region, tbx: &SpacetimeBox, xi: [usize; 4]) -> f64 {
    let m = inv.matrix();
    let mixed: Vec<usize> = (0..4).filter(|&a| (0..4).any(|c| c != a && (m[a][c] != 0.0 || m[c][a] != 0.0))).collect();
    let inside = |y: [f64; 4]| sbx.locate(inv.apply(y)).is_some_and(|c| q.contains(sbx.flat_index(c)));
    let center = tbx.cell_center(xi);
    if mixed.is_empty() {
        return if inside(center) { 1.0 } else { 0.0 };
    }
    let h = tbx.spacings();
    let lo: [f64; 4] = [0, 1, 2, 3].map(|a| xi[a] as f64 * h[a]);
    let probe = |frac: &[f64]| {
        let mut y = center;
        for (k, &a) in mixed.iter().enumerate() {
            y[a] = lo[a] + frac[k] * h[a];
        }
        inside(y)
    };
    let c0 = inside(center);
    // Corners pulled slightly inward so that cell faces shared with `q` stay on one side.
    let uniform = (0..1usize << mixed.len()).all(|bits| {
        let frac: Vec<f64> = (0..mixed.len()).map(|k| if bits >> k & 1 == 1 { 1.0 - 1e-9 } else { 1e-9 }).collect();
        probe(&frac) == c0
    });
    if uniform {
        return if c0 { 1.0 } else { 0.0 };
    }
    let s = if mixed.len() <= 2 { COVERAGE_SUBDIV } else { COVERAGE_SUBDIV / 2 };
    let total = s.pow(mixed.len() as u32);
    let mut hits = 0usize;
    let mut frac = vec![0.0; mixed.len()];
    for idx in 0..total {
        let mut r = idx;
        for f in frac.iter_mut() {
            *f = ((r % s) as f64 + 0.5) / s as f64;
            r /= s;
        }
        hits += probe(&frac) as usize;
    }
    hits as f64 / total as f64
}

/// Sub-samples per mixed axis when a target cell straddles the boundary of `ΛQ`.
const COVERAGE_SUBDIV: usize = 16;

/// Least-squares slope of `log dev` against `log h`.
pub fn convergence_order(h: &[f64], dev: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h.iter().zip(dev).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
