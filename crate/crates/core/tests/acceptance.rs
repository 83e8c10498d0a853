//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sek_core::fock::{
    cell_dispersion, cell_kernel_matrix, energy_operator, field_equation_operator, ladder, n1_subsystem,
    number_operator, on_shell_lattice_mass, region_number_operator, EnergyConvention, FockBasis, FockMode, Ladder,
    Representation,
};
use sek_core::lorentz::{convergence_order, invariance_check, Boost};
use sek_core::modes::{Branch, Coefficients, ModeIndex, ModeSet, Quadrature};
use sek_core::particle::{
    conditional_spatial, energy_momentum_functional, event_density, field_uncertainty_report, gaussian_field,
    gradient_invariant, marginals, momentum_distribution, Density4, Species, WavePacket,
};
use sek_core::sampler::{goodness_of_fit, sample_events, SamplingMode, SessionConfig};
use sek_core::spacetime::{integrate_region, Region, SpacetimeBox};
use sek_core::C64;

/// Writes straight to the stdout handle so the line shows without `--nocapture`.
fn report(id: u32, name: &str, ok: bool, detail: String) {
    let line = format!("criterion {id:>2} {} {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn coeffs(items: &[([i32; 3], Branch, f64, f64)]) -> Coefficients {
    items.iter().map(|(n, b, re, im)| (ModeIndex::new(*n, *b), c(*re, *im))).collect()
}

/// `L = cT = 1`, `m = 8π`: `n = 0` and `n = (±3,0,0)` have `εcT/2π` = 4 and 5.
fn commensurate_set(counts: [usize; 4]) -> ModeSet {
    let bx = SpacetimeBox::new(1.0, [1.0; 3], counts).unwrap();
    ModeSet::new(8.0 * PI, bx, [3, 1, 1]).unwrap().with_commensurate_time(true)
}

fn fringe_packet(counts: [usize; 4]) -> WavePacket {
    let set = commensurate_set(counts);
    let cf =
        coeffs(&[([0, 0, 0], Branch::Positive, FRAC_1_SQRT_2, 0.0), ([3, 0, 0], Branch::Positive, 0.0, FRAC_1_SQRT_2)]);
    WavePacket::scalar(Species::ScalarBosonComplex, set, cf).unwrap()
}

fn species_fixtures() -> Vec<WavePacket> {
    let bx = SpacetimeBox::new(3.0, [2.0, 2.5, 3.0], [8, 6, 6, 6]).unwrap();
    let set = ModeSet::uniform(0.9, bx, 2).unwrap();
    let mut out = Vec::new();
    let cx = coeffs(&[
        ([1, 0, 0], Branch::Positive, 0.8, 0.1),
        ([0, -1, 1], Branch::Negative, -0.3, 0.5),
        ([0, 0, 0], Branch::Positive, 0.2, 0.0),
    ]);
    out.push(WavePacket::scalar(Species::ScalarBosonComplex, set.clone(), cx.clone()).unwrap());
    let re = coeffs(&[
        ([1, 0, 0], Branch::Positive, 0.6, 0.2),
        ([-1, 0, 0], Branch::Negative, 0.6, -0.2),
        ([0, 1, 0], Branch::Positive, 0.3, 0.0),
        ([0, -1, 0], Branch::Negative, 0.3, 0.0),
    ]);
    out.push(WavePacket::scalar(Species::ScalarBosonReal, set.clone(), re).unwrap());
    let spatial: BTreeMap<_, _> =
        cx.iter().enumerate().map(|(i, (k, _))| (*k, [c(1.0, 0.0), c(0.0, i as f64), c(0.5, 0.0)])).collect();
    out.push(WavePacket::vector_rest_gauge(set.clone(), cx.clone(), &spatial, [0.0; 3]).unwrap());
    let moving: BTreeMap<_, _> = cx.iter().map(|(k, _)| (*k, [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])).collect();
    out.push(WavePacket::vector_rest_gauge(set.clone(), cx.clone(), &moving, [0.3, 0.0, 0.0]).unwrap());
    let massless = ModeSet::uniform(0.0, bx, 2).unwrap();
    let ph = coeffs(&[([1, 0, 0], Branch::Positive, 0.8, 0.0), ([2, 0, 0], Branch::Positive, 0.0, 0.6)]);
    let pols: BTreeMap<_, _> =
        ph.iter().map(|(k, _)| (*k, [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)])).collect();
    out.push(WavePacket::photon(massless, ph, &pols).unwrap());
    let spinors: BTreeMap<_, _> = cx.iter().map(|(k, _)| (*k, [c(0.6, 0.0), c(0.0, 0.8)])).collect();
    out.push(WavePacket::electron(set, cx, &spinors).unwrap());
    out
}

#[test]
fn criterion_01_normalization_and_positivity() {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for p in species_fixtures() {
        let t = Instant::now();
        let raw = p.field().pointwise_square();
        let d = event_density(&p).unwrap();
        let total = d.values().iter().sum::<f64>() * p.spacetime_box().cell_volume();
        let raw_total = raw.iter().sum::<f64>() * p.spacetime_box().cell_volume();
        let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
        worst = worst.max((total - 1.0).abs()).max((raw_total - 1.0).abs());
        ok &= min >= -1e-12 && d.values().iter().all(|g| *g >= 0.0) && t.elapsed() < Duration::from_secs(10);
    }
    report(1, "normalization & positivity", ok && worst < 1e-9, format!("max |∫g − 1| = {worst:.2e} over 6 fixtures"));
}

#[test]
fn criterion_02_marginal_consistency() {
    let mut worst: f64 = 0.0;
    let mut electron_dev: f64 = 0.0;
    for p in species_fixtures() {
        let d = event_density(&p).unwrap();
        let bx = *d.spacetime_box();
        let m = marginals(&d);
        let h0 = bx.spacing(0);
        let mut rebuilt = vec![0.0; bx.spatial_cell_count()];
        for row in 0..bx.counts()[0] {
            let cond = conditional_spatial(&d, row).unwrap();
            for (r, g) in rebuilt.iter_mut().zip(cond) {
                *r += m.g0[row] * g * h0;
            }
        }
        let dev = rebuilt.iter().zip(&m.g1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(dev);
        if p.species() == Species::Electron {
            electron_dev = m.g0.iter().map(|g| (g - 1.0 / bx.ct()).abs()).fold(0.0, f64::max);
        }
    }
    report(
        2,
        "marginal consistency",
        worst < 1e-10 && electron_dev < 1e-9,
        format!("g1 rebuild dev = {worst:.2e}, electron |g0 − 1/cT| = {electron_dev:.2e}"),
    );
}

#[test]
fn criterion_03_uniqueness_counterexample() {
    let bx = SpacetimeBox::new(2.0, [1.5, 1.5, 1.5], [16, 4, 4, 4]).unwrap();
    let set = ModeSet::uniform(1.3, bx, 1).unwrap();
    let cf = coeffs(&[([0, 0, 0], Branch::Positive, 0.8, 0.0), ([0, 0, 0], Branch::Negative, 0.0, 0.6)]);
    let p = WavePacket::scalar(Species::ScalarBosonComplex, set, cf).unwrap();
    let inv = gradient_invariant(&p).unwrap();
    let max = inv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report(3, "uniqueness counterexample", max < 0.0, format!("max (∂ψ)² over {} cells = {max:.3e}", inv.len()));
}

fn two_mode_boost_dev(n: usize) -> f64 {
    let bx = SpacetimeBox::new(4.0, [4.0; 3], [n, n, 2, 2]).unwrap();
    let set = ModeSet::uniform(1.0, bx, 2).unwrap();
    let cf = coeffs(&[([0, 0, 0], Branch::Positive, 0.8, 0.0), ([1, 0, 0], Branch::Positive, 0.0, 0.6)]);
    let p = WavePacket::scalar(Species::ScalarBosonComplex, set, cf).unwrap();
    let q = Region::index_brick(&bx, [n / 4, n / 4, 0, 0], [3 * n / 4, 3 * n / 4, 2, 2]).unwrap();
    let r = invariance_check(&Boost::new([0.2, 0.0, 0.0]).unwrap(), &p, &q, None).unwrap();
    r.prob_dev
}

#[test]
fn criterion_04_lorentz_invariance() {
    let bx = SpacetimeBox::new(2.0 * PI, [2.0 * PI; 3], [8, 8, 4, 4]).unwrap();
    let set = ModeSet::uniform(4.0 / 3.0, bx, 2).unwrap();
    let p = WavePacket::scalar(Species::ScalarBosonComplex, set, Coefficients::single(ModeIndex::positive([0, 0, 0])))
        .unwrap();
    let q = Region::index_brick(&bx, [0, 0, 0, 0], [2, 2, 1, 1]).unwrap();
    let exact = invariance_check(&Boost::new([0.6, 0.0, 0.0]).unwrap(), &p, &q, None).unwrap();

    let sizes = [8usize, 16, 32, 64];
    let devs: Vec<f64> = sizes.iter().map(|n| two_mode_boost_dev(*n)).collect();
    let h: Vec<f64> = sizes.iter().map(|n| 4.0 / *n as f64).collect();
    let order = convergence_order(&h, &devs);
    let at32 = devs[2];
    report(
        4,
        "lorentz invariance",
        exact.density_dev < 1e-10 && at32 < 1e-3 && order >= 1.0,
        format!(
            "exact-lattice density dev = {:.2e}; P(Q) dev at 32 = {at32:.2e}; devs {devs:?}; order = {order:.2}",
            exact.density_dev
        ),
    );
}

#[test]
fn criterion_05_momentum_consistency() {
    let set = commensurate_set([12, 8, 4, 4]);
    let cf = coeffs(&[
        ([0, 0, 0], Branch::Positive, 0.6, 0.1),
        ([3, 0, 0], Branch::Positive, 0.2, -0.5),
        ([-3, 0, 0], Branch::Positive, 0.4, 0.3),
    ]);
    let p = WavePacket::scalar(Species::ScalarBosonComplex, set.clone(), cf).unwrap();
    let j = energy_momentum_functional(&p).unwrap();
    let mean = momentum_distribution(&p).mean;
    let scale = mean.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let rel = (0..4).map(|a| (j[a] - mean[a]).abs()).fold(0.0, f64::max) / scale;

    let k = ModeIndex::positive([3, 0, 0]);
    let single = WavePacket::scalar(Species::ScalarBosonComplex, set.clone(), Coefficients::single(k)).unwrap();
    let js = energy_momentum_functional(&single).unwrap();
    let want = set.four_momentum(&k);
    let single_dev = (0..4).map(|a| (js[a] - want[a]).abs()).fold(0.0, f64::max);
    report(
        5,
        "momentum consistency",
        rel < 1e-6 && single_dev < 1e-8,
        format!("J vs Σ n_k p_k relative dev = {rel:.2e}; single-mode |J − p| = {single_dev:.2e}"),
    );
}

fn session(seed: u64, bins: [usize; 4]) -> SessionConfig {
    SessionConfig { n_series: 1_000_000, seed, bins, mode: SamplingMode::Event4d, duty_cycle: None }
}

#[test]
fn criterion_06_sampler_fidelity() {
    let t = Instant::now();
    let d = event_density(&fringe_packet([4, 12, 1, 1])).unwrap();
    let bins = [4, 12, 1, 1];
    let mut passed = 0;
    for seed in 0..100 {
        let h = sample_events(&d, &session(seed, bins)).unwrap();
        if goodness_of_fit(&h, &d).unwrap().p_value > 0.01 {
            passed += 1;
        }
    }
    let h = sample_events(&d, &session(1000, bins)).unwrap();
    let bx = *d.spacetime_box();
    let shifted: Vec<f64> = (0..bx.cell_count())
        .map(|f| {
            let xi = bx.unflatten(f);
            1.0 + 0.95
                * (2.0 * PI * 3.0 * bx.center_coord(1, xi[1]) - 2.0 * PI * 2.0 * bx.center_coord(0, xi[0]) + 0.4).cos()
        })
        .collect();
    let wrong = Density4::from_values(bx, shifted).unwrap();
    let p_wrong = goodness_of_fit(&h, &wrong).unwrap().p_value;
    let elapsed = t.elapsed();
    report(
        6,
        "sampler fidelity",
        passed >= 95 && p_wrong < 1e-6 && elapsed < Duration::from_secs(60),
        format!("{passed}/100 seeds p > 0.01; wrong density p = {p_wrong:.1e}; {:.1} s", elapsed.as_secs_f64()),
    );
}

#[test]
fn criterion_07_uncertainty() {
    let bx = SpacetimeBox::new(16.0, [16.0; 3], [32; 4]).unwrap();
    let f = gaussian_field(bx, [1.6; 4], [-1.5, 0.4, 0.0, -0.3]);
    let r = field_uncertainty_report(&f).unwrap();
    // Reference values from oracles/gaussian_uncertainty.py.
    let oracle = [5.020338048768691e-01, 5.020208069328450e-01, 5.020206527937295e-01, 5.020408666452318e-01];
    let in_band = r.products.iter().all(|v| (0.5..=0.55).contains(v));
    let oracle_dev = r.products.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let dx_min = r.dx_min.unwrap_or(f64::NAN);
    let flag_ok =
        (dx_min - 1.0 / r.energy.abs()).abs() < 1e-12 && (0..3).all(|a| r.resolvable[a] == (r.dx[a + 1] >= dx_min));
    report(
        7,
        "uncertainty",
        in_band && oracle_dev < 1e-12 && flag_ok,
        format!(
            "products {:.4?} (oracle dev {oracle_dev:.1e}); dx_min = {dx_min:.4}, resolvable {:?}",
            r.products, r.resolvable
        ),
    );
}

#[test]
fn criterion_08_fock_vacuum_contrast() {
    let bx = SpacetimeBox::new(3.0, [2.0, 2.5, 3.0], [8, 6, 6, 6]).unwrap();
    let set = ModeSet::uniform(0.9, bx, 1).unwrap();
    let basis = FockBasis::new(set.modes().into_iter().map(FockMode::Momentum).collect(), 1, 1).unwrap();
    let vac = basis.vacuum();
    let e = |conv| energy_operator(&basis, &set, conv).unwrap().expectation(&vac).unwrap();
    let charged = e(EnergyConvention::PaperCharged);
    let neutral = e(EnergyConvention::PaperNeutral);
    let textbook = e(EnergyConvention::Textbook);
    let want: f64 = set.modes().iter().filter(|k| k.branch == Branch::Positive).map(|k| set.energy(k)).sum();
    report(
        8,
        "fock vacuum contrast",
        charged == c(0.0, 0.0) && neutral == c(0.0, 0.0) && textbook == c(want, 0.0),
        format!("charged {charged}, neutral {neutral}, textbook {} = Σε_k {want}", textbook.re),
    );
}

#[test]
fn criterion_09_region_operator() {
    let set = commensurate_set([12, 8, 4, 4]);
    let bx = *set.spacetime_box();
    let modes = [
        ModeIndex::positive([0, 0, 0]),
        ModeIndex::positive([3, 0, 0]),
        ModeIndex::positive([-3, 0, 0]),
        ModeIndex::negative([0, 0, 0]),
        ModeIndex::negative([-3, 0, 0]),
    ];
    let basis = FockBasis::new(modes.iter().copied().map(FockMode::Momentum).collect(), 2, 3).unwrap();
    let whole = region_number_operator(&basis, &set, &Region::whole(&bx), Quadrature::CellExact).unwrap();
    let whole_exact = whole == number_operator(&basis);

    let q = Region::index_brick(&bx, [2, 1, 0, 1], [9, 6, 3, 4]).unwrap();
    let op = region_number_operator(&basis, &set, &q, Quadrature::CellExact).unwrap();
    let frac = q.volume() / bx.volume4();
    let mut basis_dev: f64 = 0.0;
    for s in 0..basis.dim() {
        let n: u32 = basis.state(s).iter().sum();
        let e = op.expectation(&basis.basis_vector(s)).unwrap();
        basis_dev = basis_dev.max((e - c(n as f64 * frac, 0.0)).norm());
    }

    let one = FockBasis::new(modes.iter().copied().map(FockMode::Momentum).collect(), 1, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut cross_dev: f64 = 0.0;
    for _ in 0..20 {
        let cf: Coefficients =
            modes.iter().map(|k| (*k, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))).collect();
        let cf = cf.normalized().unwrap();
        let p = WavePacket::scalar(Species::ScalarBosonComplex, set.clone(), cf.clone()).unwrap();
        let frac: f64 = rng.random();
        let q = Region::from_mask(&bx, (0..bx.cell_count()).map(|_| rng.random::<f64>() < frac).collect()).unwrap();
        let prob = integrate_region(event_density(&p).unwrap().values(), &q).unwrap();
        let phi = one.one_particle(&modes.iter().map(|k| cf.get(k)).collect::<Vec<_>>()).unwrap();
        let e = region_number_operator(&one, &set, &q, Quadrature::Midpoint).unwrap().expectation(&phi).unwrap();
        cross_dev = cross_dev.max((e.re - prob).abs()).max(e.im.abs());
    }
    report(
        9,
        "region operator",
        whole_exact && basis_dev < 1e-14 && cross_dev < 1e-10,
        format!("Λ(V) == N̂: {whole_exact}; basis-state dev {basis_dev:.1e}; one-particle vs P(Q) dev {cross_dev:.1e}"),
    );
}

#[test]
fn criterion_10_n1_equivalence() {
    let p = fringe_packet([6, 8, 2, 2]);
    let bx = *p.spacetime_box();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let regions: Vec<(String, Region)> = (0..20)
        .map(|i| {
            let frac: f64 = rng.random();
            let mask = (0..bx.cell_count()).map(|_| rng.random::<f64>() < frac).collect();
            (format!("q{i}"), Region::from_mask(&bx, mask).unwrap())
        })
        .collect();
    let r = n1_subsystem(&p, &regions).unwrap();
    let dev = r.max_deviation();
    report(
        10,
        "N=1 equivalence",
        r.rows.len() == 20 && dev < 1e-10,
        format!("max |⟨N⟩ − P| over 20 regions = {dev:.1e}"),
    );
}

fn signed(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Dense eigen-solve of the 1+1D cell kernel against the lattice dispersion;
/// returns (max eigenvalue error, kernel size, dense kernel size).
fn dense_kernel_check(n0: usize, n1: usize, ct: f64, l: f64, m: Option<[i64; 4]>, mass: f64) -> (f64, usize, usize) {
    let bx = SpacetimeBox::new(ct, [l, 1.0, 1.0], [n0, n1, 1, 1]).unwrap();
    let mass = m.map(|j| on_shell_lattice_mass(&bx, j).unwrap()).unwrap_or(mass);
    let b = cell_kernel_matrix(&bx, mass);
    let mut d = DMatrix::<f64>::zeros(b.len(), b.len());
    for (i, row) in b.iter().enumerate() {
        for (j, v) in row {
            d[(i, *j)] = v.re;
        }
    }
    let mut ev: Vec<f64> = d.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let mut lam = Vec::new();
    let mut kernel = Vec::new();
    for j0 in 0..n0 {
        for j1 in 0..n1 {
            let j = [signed(j0, n0), signed(j1, n1), 0, 0];
            let v = cell_dispersion(&bx, mass, j);
            lam.push(v);
            if v.abs() < 1e-8 {
                kernel.push(j);
            }
        }
    }
    lam.sort_by(f64::total_cmp);
    let err = ev.iter().zip(&lam).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)).fold(0.0, f64::max);
    let dense_kernel = ev.iter().filter(|v| v.abs() < 1e-8).count();
    let dc = d.map(|x| c(x, 0.0));
    for j in &kernel {
        let w = DVector::from_iterator(
            bx.cell_count(),
            bx.cells().map(|xi| {
                C64::from_polar(
                    1.0,
                    2.0 * PI * (j[0] as f64 * xi[0] as f64 / n0 as f64 + j[1] as f64 * xi[1] as f64 / n1 as f64),
                )
            }),
        );
        assert!((&dc * &w).norm() < 1e-8 * w.norm());
    }
    (err, kernel.len(), dense_kernel)
}

#[test]
fn criterion_11_field_equation() {
    let bx = SpacetimeBox::new(3.0, [2.0, 2.5, 3.0], [8, 6, 6, 6]).unwrap();
    let set = ModeSet::uniform(0.9, bx, 1).unwrap();
    let basis = FockBasis::new(set.modes().into_iter().map(FockMode::Momentum).collect(), 1, 2).unwrap();
    let b_max = field_equation_operator(&basis, &set, Representation::Momentum).unwrap().max_abs();

    let mut worst: f64 = 0.0;
    let mut kernels = Vec::new();
    let mut ok = true;
    for (n, j) in [(16usize, [2i64, 1, 0, 0]), (32, [3, 2, 0, 0]), (64, [5, 3, 0, 0])] {
        let (err, k, dk) = dense_kernel_check(n, n, 1.0, 3.0, Some(j), 0.0);
        worst = worst.max(err);
        ok &= k == dk && k > 0;
        kernels.push(k);
    }
    let (err, k, dk) = dense_kernel_check(32, 32, 1.0, 3.0, None, 400.0);
    worst = worst.max(err);
    ok &= k == 0 && dk == 0;
    report(
        11,
        "field equation",
        ok && b_max < 1e-10 && worst < 1e-8,
        format!("momentum ‖B‖max = {b_max:.1e}; cell eigenvalue error {worst:.1e}; kernels {kernels:?} (16², 32², 64²), heavy mass empty"),
    );
}

#[test]
fn criterion_12_truncated_commutators() {
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for m in 1..=3usize {
        for cap in 1..=4u32 {
            for total in [cap, cap + 1, 2 * cap] {
                let basis = FockBasis::abstract_modes(m, cap, total).unwrap();
                let dim = basis.dim();
                // Dense oracle: a_i built directly from occupation vectors.
                let dense_a = |i: usize| {
                    let mut a = DMatrix::<f64>::zeros(dim, dim);
                    for s in 0..dim {
                        let n = basis.state(s);
                        if n[i] > 0 {
                            let mut t = n.to_vec();
                            t[i] -= 1;
                            a[(basis.index_of(&t).unwrap(), s)] = (n[i] as f64).sqrt();
                        }
                    }
                    a
                };
                for i in 0..m {
                    for j in 0..m {
                        let ai = ladder(&basis, i, Ladder::Annihilate).unwrap();
                        let adj = ladder(&basis, j, Ladder::Create).unwrap();
                        let comm = ai.commutator(&adj).unwrap();
                        let (oi, oj) = (dense_a(i), dense_a(j).transpose());
                        let oracle = &oi * &oj - &oj * &oi;
                        for col in (0..dim).filter(|s| basis.below_caps(*s, j)) {
                            for row in 0..dim {
                                let delta = if i == j && row == col { 1.0 } else { 0.0 };
                                let v = comm.get(row, col);
                                worst = worst
                                    .max((v.re - oracle[(row, col)]).abs())
                                    .max((v.re - delta).abs())
                                    .max(v.im.abs());
                                checked += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    report(12, "truncated commutators", worst < 1e-12, format!("{checked} below-cap entries, max error {worst:.1e}"))
}

#[test]
fn criterion_13_reproducibility() {
    let d = event_density(&fringe_packet([4, 12, 2, 2])).unwrap();
    let cfg = SessionConfig {
        n_series: 300_000,
        seed: 42,
        bins: [4, 6, 1, 1],
        mode: SamplingMode::Event4d,
        duty_cycle: None,
    };
    let probs = sek_core::sampler::bin_probabilities(&d, cfg.bins).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut out = Vec::new();
            sample_events(&d, &cfg).unwrap().write_csv(&mut out, &probs).unwrap();
            let timed = SessionConfig { mode: SamplingMode::TimedSlices, ..cfg.clone() };
            sample_events(&d, &timed).unwrap().write_csv(&mut out, &probs).unwrap();
            out
        })
    };
    let one = run(1);
    let same = [2, 8].iter().all(|t| run(*t) == one);
    report(
        13,
        "reproducibility",
        same && !one.is_empty(),
        format!("{} CSV bytes identical across 1, 2, 8 threads: {same}", one.len()),
    );
}
