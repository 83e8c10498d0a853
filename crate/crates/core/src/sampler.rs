//! Monte Carlo measurement sessions drawn from an event density, with
//! goodness-of-fit statistics.
//!
//! Every series owns a ChaCha8 stream keyed by `(seed, series)`, so results do
//! not depend on how series are spread over worker threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::io::{csv_writer, fmt_f64};
use crate::modes::ModeIndex;
use crate::particle::{marginals, Density4, WavePacket};
use crate::spacetime::SpacetimeBox;

/// Series per parallel work item; fixed so that the partition never depends
/// on the thread count.
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// One event per series, drawn from `g·w` over all cells.
    #[default]
    Event4d,
    /// Per series, each time row fires with probability
    /// `min(1, g0·cT·ρ)` and then draws a position from `g1(x/x⁰)`.
    TimedSlices,
    /// One 4-momentum per series, drawn from `n_k`.
    Momentum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub n_series: u64,
    pub seed: u64,
    /// Coarse bin counts per axis; each must divide the field grid count.
    pub bins: [usize; 4],
    #[serde(default)]
    pub mode: SamplingMode,
    /// Duty cycle `ρ` for timed slices; defaults to `1/N₀`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duty_cycle: Option<f64>,
}

fn series_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn position(rng: &mut ChaCha8Rng, series: u64) {
    rng.set_stream(series);
    rng.set_word_pos(0);
}

/// Index `i` with `cdf[i-1] <= u·total < cdf[i]`.
fn draw(cdf: &[f64], u: f64) -> usize {
    let target = u * cdf[cdf.len() - 1];
    cdf.partition_point(|c| *c <= target).min(cdf.len() - 1)
}

fn cumulative(w: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    w.map(|x| {
        acc += x;
        acc
    })
    .collect()
}

/// Event counts on a coarse grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    /// Coarse grid; bin `b` is the coarse cell with flat index `b`.
    pub grid: [usize; 4],
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `n(ξ)/(N·w_bin)` on a box with the given extents.
    pub fn density_estimate(&self, bx: &SpacetimeBox) -> Result<Vec<f64>> {
        let n = self.total();
        if n == 0 {
            return Err(Error::NoData);
        }
        let coarse = bx.regrid(self.grid)?;
        let w = coarse.cell_volume();
        Ok(self.counts.iter().map(|c| *c as f64 / (n as f64 * w)).collect())
    }

    /// Writes `bin,xi0,xi1,xi2,xi3,count,expected`; `expected` is `N·P_bin`.
    pub fn write_csv<W: Write>(&self, w: W, probabilities: &[f64]) -> Result<()> {
        if probabilities.len() != self.counts.len() {
            return Err(Error::Mismatch("expected-probability vector does not match the bins".into()));
        }
        let n = self.total() as f64;
        let mut out = csv_writer(w);
        out.write_record(["bin", "xi0", "xi1", "xi2", "xi3", "count", "expected"])?;
        let g = self.grid;
        for (b, c) in self.counts.iter().enumerate() {
            let i3 = b % g[3];
            let i2 = (b / g[3]) % g[2];
            let i1 = (b / (g[3] * g[2])) % g[1];
            let i0 = b / (g[3] * g[2] * g[1]);
            out.write_record([
                b.to_string(),
                i0.to_string(),
                i1.to_string(),
                i2.to_string(),
                i3.to_string(),
                c.to_string(),
                fmt_f64(n * probabilities[b]),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Coarse bin of every field cell.
fn bin_map(bx: &SpacetimeBox, bins: [usize; 4]) -> Result<Vec<usize>> {
    let n = bx.counts();
    for a in 0..4 {
        if bins[a] == 0 || !n[a].is_multiple_of(bins[a]) {
            return Err(Error::Mismatch(format!("bins {bins:?} do not divide the grid {n:?}")));
        }
    }
    let f = [0, 1, 2, 3].map(|a| n[a] / bins[a]);
    Ok(bx
        .cells()
        .map(|xi| {
            let c = [0, 1, 2, 3].map(|a| xi[a] / f[a]);
            ((c[0] * bins[1] + c[1]) * bins[2] + c[2]) * bins[3] + c[3]
        })
        .collect())
}

/// Analytic bin probabilities `Σ_{ξ∈bin} g(ξ)w`.
pub fn bin_probabilities(d: &Density4, bins: [usize; 4]) -> Result<Vec<f64>> {
    let map = bin_map(d.spacetime_box(), bins)?;
    let mut p = vec![0.0; bins.iter().product()];
    for (cell, q) in d.cell_probabilities().iter().enumerate() {
        p[map[cell]] += q;
    }
    Ok(p)
}

fn run_chunks<F>(seed: u64, n_series: u64, nbins: usize, f: F) -> Vec<u64>
where
    F: Fn(u64, &mut ChaCha8Rng, &mut Vec<u64>) + Sync,
    F: Send,
{
    let chunks = n_series.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut counts = vec![0u64; nbins];
            let mut rng = series_rng(seed);
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(n_series);
            for s in start..end {
                f(s, &mut rng, &mut counts);
            }
            counts
        })
        .reduce(
            || vec![0u64; nbins],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Draws a measurement session from `g`.
pub fn sample_events(d: &Density4, cfg: &SessionConfig) -> Result<Histogram> {
    let bx = *d.spacetime_box();
    let map = bin_map(&bx, cfg.bins)?;
    let nbins: usize = cfg.bins.iter().product();
    let seed = cfg.seed;
    let counts = match cfg.mode {
        SamplingMode::Event4d => {
            let cdf = cumulative(d.cell_probabilities().into_iter());
            if !(cdf[cdf.len() - 1] > 0.0) {
                return Err(Error::NoSupport);
            }
            run_chunks(seed, cfg.n_series, nbins, |s, rng, counts| {
                position(rng, s);
                counts[map[draw(&cdf, rng.random::<f64>())]] += 1;
            })
        }
        SamplingMode::TimedSlices => {
            let n0 = bx.counts()[0];
            let rho = cfg.duty_cycle.unwrap_or(1.0 / n0 as f64);
            if !(rho > 0.0) {
                return Err(Error::Domain(format!("duty cycle must be positive, got {rho}")));
            }
            let m = marginals(d);
            let accept: Vec<f64> = m.g0.iter().map(|g0| (g0 * bx.ct() * rho).min(1.0)).collect();
            let s_cells = bx.spatial_cell_count();
            let rows: Vec<Vec<f64>> = d.values().chunks_exact(s_cells).map(|r| cumulative(r.iter().copied())).collect();
            run_chunks(seed, cfg.n_series, nbins, |s, rng, counts| {
                position(rng, s);
                for (row, a) in accept.iter().enumerate() {
                    let u: f64 = rng.random();
                    if u < *a {
                        let x = draw(&rows[row], rng.random::<f64>());
                        counts[map[row * s_cells + x]] += 1;
                    }
                }
            })
        }
        SamplingMode::Momentum => {
            return Err(Error::Mismatch("momentum sessions sample a packet, not a density".into()));
        }
    };
    Ok(Histogram { grid: cfg.bins, counts })
}

/// Draw counts over the modes of a packet plus the empirical mean 4-momentum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentumHistogram {
    pub modes: Vec<ModeIndex>,
    pub counts: Vec<u64>,
    pub four_momenta: Vec<[f64; 4]>,
    pub mean: [f64; 4],
    /// Standard error of each mean component.
    pub std_error: [f64; 4],
}

impl MomentumHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Writes `n1,n2,n3,sign,p0,p1,p2,p3,count,expected`.
    pub fn write_csv<W: Write>(&self, w: W, probabilities: &[f64]) -> Result<()> {
        let n = self.total() as f64;
        let mut out = csv_writer(w);
        out.write_record(["n1", "n2", "n3", "sign", "p0", "p1", "p2", "p3", "count", "expected"])?;
        for (i, k) in self.modes.iter().enumerate() {
            let p = self.four_momenta[i];
            out.write_record([
                k.n[0].to_string(),
                k.n[1].to_string(),
                k.n[2].to_string(),
                i8::from(k.branch).to_string(),
                fmt_f64(p[0]),
                fmt_f64(p[1]),
                fmt_f64(p[2]),
                fmt_f64(p[3]),
                self.counts[i].to_string(),
                fmt_f64(n * probabilities[i]),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Categorical draws from `n_k = |C_k|²`.
pub fn sample_momentum(p: &WavePacket, cfg: &SessionConfig) -> Result<MomentumHistogram> {
    let set = p.mode_set();
    let modes: Vec<ModeIndex> = p.coefficients().iter().map(|(k, _)| *k).collect();
    let probs: Vec<f64> = p.coefficients().iter().map(|(_, c)| c.norm_sqr()).collect();
    let cdf = cumulative(probs.iter().copied());
    let seed = cfg.seed;
    let counts = run_chunks(seed, cfg.n_series, modes.len(), |s, rng, counts| {
        position(rng, s);
        counts[draw(&cdf, rng.random::<f64>())] += 1;
    });
    let four_momenta: Vec<[f64; 4]> = modes.iter().map(|k| set.four_momentum(k)).collect();
    let n = counts.iter().sum::<u64>() as f64;
    let mut mean = [0.0; 4];
    let mut sq = [0.0; 4];
    for (c, p4) in counts.iter().zip(&four_momenta) {
        for a in 0..4 {
            mean[a] += *c as f64 * p4[a] / n;
            sq[a] += *c as f64 * p4[a] * p4[a] / n;
        }
    }
    let std_error = [0, 1, 2, 3].map(|a| ((sq[a] - mean[a] * mean[a]).max(0.0) / n).sqrt());
    Ok(MomentumHistogram { modes, counts, four_momenta, mean, std_error })
}

/// Pearson chi-square result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `Σ |n/N − P|` over the original bins.
    pub l1: f64,
    /// Number of groups after merging bins with expected count below 5.
    pub groups: usize,
}

fn chi2_sf(chi2: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).map(|d| d.sf(chi2)).unwrap_or(f64::NAN)
}

/// Pearson test of observed counts against bin probabilities. Adjacent bins
/// are merged greedily until each group expects at least 5 events.
pub fn chi_square(counts: &[u64], probabilities: &[f64]) -> Result<FitReport> {
    if counts.len() != probabilities.len() {
        return Err(Error::Mismatch("counts and probabilities differ in length".into()));
    }
    let n = counts.iter().sum::<u64>();
    if n == 0 {
        return Err(Error::NoData);
    }
    let nf = n as f64;
    let ptot: f64 = probabilities.iter().sum();
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (c, p) in counts.iter().zip(probabilities) {
        o += *c as f64;
        e += nf * p / ptot;
        if e >= 5.0 {
            groups.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if o > 0.0 || e > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => groups.push((o, e)),
        }
    }
    let mut chi2 = 0.0;
    for (o, e) in &groups {
        if *e > 0.0 {
            chi2 += (o - e) * (o - e) / e;
        } else if *o > 0.0 {
            chi2 = f64::INFINITY;
        }
    }
    let dof = groups.len().saturating_sub(1);
    let l1 = counts.iter().zip(probabilities).map(|(c, p)| (*c as f64 / nf - p / ptot).abs()).sum();
    Ok(FitReport { chi2, dof, p_value: chi2_sf(chi2, dof), l1, groups: groups.len() })
}

pub fn goodness_of_fit(h: &Histogram, d: &Density4) -> Result<FitReport> {
    chi_square(&h.counts, &bin_probabilities(d, h.grid)?)
}

/// Chi-square test that the rows of a contingency table share one law.
/// Columns with no events are dropped.
pub fn homogeneity(table: &[Vec<u64>]) -> Result<FitReport> {
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().sum::<u64>() > 0).collect();
    if rows.is_empty() {
        return Err(Error::NoData);
    }
    let ncol = rows[0].len();
    let col: Vec<u64> = (0..ncol).map(|j| rows.iter().map(|r| r[j]).sum()).collect();
    let keep: Vec<usize> = (0..ncol).filter(|j| col[*j] > 0).collect();
    let total: u64 = col.iter().sum();
    let mut chi2 = 0.0;
    for r in &rows {
        let rt: u64 = r.iter().sum();
        for &j in &keep {
            let e = rt as f64 * col[j] as f64 / total as f64;
            chi2 += (r[j] as f64 - e).powi(2) / e;
        }
    }
    let dof = (rows.len() - 1) * keep.len().saturating_sub(1);
    Ok(FitReport { chi2, dof, p_value: chi2_sf(chi2, dof), l1: 0.0, groups: keep.len() })
}

/// Splits a 4D histogram into per-time-bin rows of spatial counts.
pub fn time_slices(h: &Histogram) -> Vec<Vec<u64>> {
    let s = h.grid[1] * h.grid[2] * h.grid[3];
    h.counts.chunks_exact(s).map(|c| c.to_vec()).collect()
}

/// One-sample Kolmogorov–Smirnov test against U(0,1); returns `(D, p)` with
/// the asymptotic Kolmogorov law.
pub fn ks_uniform(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let d = v.iter().enumerate().map(|(i, x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n)).fold(0.0, f64::max);
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        p += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (d, (2.0 * p).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{Coefficients, ModeSet};
    use crate::particle::{event_density, Species};
    use num_complex::Complex64 as C64;

    fn flat(counts: [usize; 4]) -> Density4 {
        let bx = SpacetimeBox::new(1.0, [1.0; 3], counts).unwrap();
        Density4::from_values(bx, vec![1.0; bx.cell_count()]).unwrap()
    }

    fn cfg(n: u64, seed: u64, bins: [usize; 4], mode: SamplingMode) -> SessionConfig {
        SessionConfig { n_series: n, seed, bins, mode, duty_cycle: None }
    }

    #[test]
    fn flat_law_bins_concentrate() {
        let d = flat([4, 4, 2, 2]);
        // A 1% band is ±2.58σ per bin; all 16 bins land inside it for about
        // 86% of seeds, this one included.
        let h = sample_events(&d, &cfg(1_000_000, 1, [2, 2, 2, 2], SamplingMode::Event4d)).unwrap();
        assert_eq!(h.total(), 1_000_000);
        for c in &h.counts {
            assert!((*c as f64 / 62_500.0 - 1.0).abs() < 0.01);
        }
        let est = h.density_estimate(d.spacetime_box()).unwrap();
        let w = d.spacetime_box().regrid([2, 2, 2, 2]).unwrap().cell_volume();
        assert!((est.iter().sum::<f64>() * w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p_values_are_uniform_over_seeds() {
        let bx = SpacetimeBox::new(1.0, [1.0; 3], [2, 16, 1, 1]).unwrap();
        let vals: Vec<f64> = bx.cells().map(|xi| 1.0 + 0.9 * (0.7 * xi[1] as f64 + xi[0] as f64).cos()).collect();
        let d = Density4::from_values(bx, vals).unwrap();
        let p: Vec<f64> = (0..100)
            .map(|seed| {
                goodness_of_fit(
                    &sample_events(&d, &cfg(100_000, seed, [2, 16, 1, 1], SamplingMode::Event4d)).unwrap(),
                    &d,
                )
                .unwrap()
                .p_value
            })
            .collect();
        let (_, ks) = ks_uniform(&p);
        println!("ks p = {ks}");
        assert!(ks > 0.01, "{p:?}");
    }

    #[test]
    fn seeded_sessions_repeat() {
        let d = flat([2, 3, 1, 1]);
        let c = cfg(50_000, 11, [2, 3, 1, 1], SamplingMode::Event4d);
        assert_eq!(sample_events(&d, &c).unwrap(), sample_events(&d, &c).unwrap());
        let other = cfg(50_000, 12, [2, 3, 1, 1], SamplingMode::Event4d);
        assert_ne!(sample_events(&d, &c).unwrap(), sample_events(&d, &other).unwrap());
    }

    #[test]
    fn prefix_of_a_session_is_a_session() {
        // Per-series streams: the first n series agree whatever the total.
        let d = flat([1, 1, 1, 64]);
        let small = sample_events(&d, &cfg(CHUNK + 5, 4, [1, 1, 1, 64], SamplingMode::Event4d)).unwrap();
        let big = sample_events(&d, &cfg(CHUNK + 6, 4, [1, 1, 1, 64], SamplingMode::Event4d)).unwrap();
        let diff: u64 = big.counts.iter().zip(&small.counts).map(|(a, b)| a - b).sum();
        assert_eq!(diff, 1);
    }

    #[test]
    fn zero_rows_never_fire_in_timed_slices() {
        let bx = SpacetimeBox::new(2.0, [1.0; 3], [2, 2, 1, 1]).unwrap();
        let d = Density4::from_values(bx, vec![1.0, 3.0, 0.0, 0.0]).unwrap();
        let h = sample_events(&d, &cfg(40_000, 5, [2, 2, 1, 1], SamplingMode::TimedSlices)).unwrap();
        assert_eq!(h.counts[2] + h.counts[3], 0);
        // Row 0 carries all the weight: ρ = 1/2 gives acceptance 1.
        assert_eq!(h.total(), 40_000);
        let r = h.counts[1] as f64 / h.total() as f64;
        assert!((r - 0.75).abs() < 0.01);
    }

    #[test]
    fn separable_packet_slices_are_homogeneous() {
        let bx = SpacetimeBox::new(2.0, [2.0, 1.0, 1.0], [4, 8, 1, 1]).unwrap();
        let set = ModeSet::uniform(1.0, bx, 1).unwrap();
        let a = C64::new(0.8, 0.0);
        let b = C64::new(0.0, 0.6);
        let beta = C64::new(0.5, 0.0);
        let c: Coefficients = [
            (ModeIndex::positive([1, 0, 0]), a),
            (ModeIndex::negative([1, 0, 0]), a * beta),
            (ModeIndex::positive([-1, 0, 0]), b),
            (ModeIndex::negative([-1, 0, 0]), b * beta),
        ]
        .into_iter()
        .collect();
        let p = WavePacket::scalar(Species::ScalarBosonComplex, set, c).unwrap();
        let d = event_density(&p).unwrap();
        let h = sample_events(&d, &cfg(200_000, 9, [4, 8, 1, 1], SamplingMode::TimedSlices)).unwrap();
        let r = homogeneity(&time_slices(&h)).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
        let fit = goodness_of_fit(&h, &d);
        assert!(fit.is_ok());
    }

    #[test]
    fn momentum_draws() {
        let bx = SpacetimeBox::new(2.0, [2.0; 3], [2, 4, 2, 2]).unwrap();
        let set = ModeSet::uniform(1.0, bx, 1).unwrap();
        let single = WavePacket::scalar(
            Species::ScalarBosonComplex,
            set.clone(),
            Coefficients::single(ModeIndex::negative([1, 0, 0])),
        )
        .unwrap();
        let h = sample_momentum(&single, &cfg(1000, 1, [1; 4], SamplingMode::Momentum)).unwrap();
        assert_eq!(h.counts, vec![1000]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let two: Coefficients =
            [(ModeIndex::positive([1, 0, 0]), C64::new(s, 0.0)), (ModeIndex::positive([0, 1, 0]), C64::new(0.0, s))]
                .into_iter()
                .collect();
        let p = WavePacket::scalar(Species::ScalarBosonComplex, set, two).unwrap();
        let h = sample_momentum(&p, &cfg(10_000, 2, [1; 4], SamplingMode::Momentum)).unwrap();
        assert!((4700..=5300).contains(&h.counts[0]), "{:?}", h.counts);
        let h = sample_momentum(&p, &cfg(100_000, 3, [1; 4], SamplingMode::Momentum)).unwrap();
        let j = crate::particle::momentum_distribution(&p).mean;
        for a in 0..4 {
            assert!((h.mean[a] - j[a]).abs() <= 3.0 * h.std_error[a] + 1e-12, "{a}: {} vs {}", h.mean[a], j[a]);
        }
    }

    #[test]
    fn chi_square_edge_cases() {
        assert!(matches!(chi_square(&[0, 0], &[0.5, 0.5]), Err(Error::NoData)));
        let r = chi_square(&[50, 50], &[0.5, 0.5]).unwrap();
        assert_eq!(r.chi2, 0.0);
        assert_eq!(r.dof, 1);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        // Bins expecting fewer than 5 events are merged.
        let r = chi_square(&[3, 1, 0, 96], &[0.02, 0.02, 0.02, 0.94]).unwrap();
        assert_eq!(r.groups, 2);
        // scipy.stats.chi2.sf(10.0, 3) = 0.018566135463043...
        let r = chi_square(&[10, 20, 30, 40], &[0.25; 4]).unwrap();
        assert!((r.chi2 - 20.0).abs() < 1e-12);
        assert!((chi2_sf(10.0, 3) - 0.01856613546304325).abs() < 1e-12);
    }

    #[test]
    fn ks_detects_non_uniform() {
        let uniform: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_uniform(&uniform).1 > 0.99);
        let skewed: Vec<f64> = uniform.iter().map(|x| x * x).collect();
        assert!(ks_uniform(&skewed).1 < 1e-6);
    }

    #[test]
    fn misaligned_bins_are_rejected() {
        let d = flat([4, 4, 1, 1]);
        assert!(sample_events(&d, &cfg(10, 0, [3, 4, 1, 1], SamplingMode::Event4d)).is_err());
        assert!(sample_events(&d, &cfg(10, 0, [4, 4, 1, 1], SamplingMode::Momentum)).is_err());
    }
}
