//! Execution of each experiment command.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use sek_core::fock::{
    cell_dispersion, cell_kernel_matrix, cell_number_operator, compare_synthesis, energy_operator,
    field_equation_operator, n1_subsystem, number_operator, region_number_operator, region_one_particle_matrix,
    CellBasis, EnergyConvention, FockBasis, FockMode, FockOperator, Representation, DENSE_LIMIT,
};
use sek_core::io::{csv_writer, fmt_f64};
use sek_core::lorentz::{convergence_order, invariance_check};
use sek_core::modes::{Branch, Quadrature};
use sek_core::particle::{
    conditional_spatial, energy_momentum_functional, event_density, field_uncertainty_report, gaussian_field,
    marginals, momentum_distribution, uncertainty_report, PacketSpec, Species, UncertaintyReport, WavePacket,
};
use sek_core::sampler::{bin_probabilities, chi_square, goodness_of_fit, sample_events, sample_momentum, SamplingMode};
use sek_core::spacetime::{integrate_region, FieldKind, Region};
use sek_core::{Error, C64};

use crate::config::{Experiment, RegionSpec, RegionSuite};

/// Largest basis dumped to JSON.
const DUMP_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    PassWithConvergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    Sampled,
    Refined,
}

/// A checked statement with the number it rests on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub name: String,
    pub status: Status,
    pub value: f64,
    pub tolerance: f64,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub tolerance: f64,
    pub provenance: Provenance,
}

/// Contents of `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunResult {
    pub command: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub claims: Vec<Claim>,
    pub metrics: BTreeMap<String, Metric>,
    pub artifacts: Vec<String>,
}

impl RunResult {
    fn new(command: &str) -> Self {
        RunResult { command: command.to_string(), ..Default::default() }
    }

    fn metric(&mut self, name: impl Into<String>, value: f64, tolerance: f64, provenance: Provenance) {
        self.metrics.insert(name.into(), Metric { value, tolerance, provenance });
    }

    /// Claim that `value ≤ tolerance`.
    fn bound(&mut self, name: &str, value: f64, tolerance: f64, provenance: Provenance) {
        let status = if value <= tolerance { Status::Pass } else { Status::Fail };
        self.claims.push(Claim { name: name.into(), status, value, tolerance, provenance, detail: None });
    }

    fn claim(&mut self, name: &str, ok: bool, value: f64, tolerance: f64, provenance: Provenance, detail: String) {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.claims.push(Claim { name: name.into(), status, value, tolerance, provenance, detail: Some(detail) });
    }
}

/// Output directory plus the list of files written to it.
struct Sink<'a> {
    dir: &'a Path,
    result: RunResult,
}

impl Sink<'_> {
    fn create(&mut self, name: &str) -> sek_core::Result<BufWriter<File>> {
        self.result.artifacts.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> sek_core::Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

fn max_abs_dev(a: impl IntoIterator<Item = f64>, b: impl IntoIterator<Item = f64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs `exp`, writing artifacts into `dir`.
pub fn run(exp: &Experiment, dir: &Path) -> sek_core::Result<RunResult> {
    let mut sink = Sink { dir, result: RunResult::new(exp.name()) };
    match exp {
        Experiment::Density { packet } => density(&mut sink, packet)?,
        Experiment::Marginals { packet } => marginal_run(&mut sink, packet)?,
        Experiment::Momentum { packet, session } => momentum(&mut sink, packet, session.as_ref())?,
        Experiment::BoostCheck { packet, boost, region, levels, tolerance } => {
            boost_check(&mut sink, packet, boost, region, *levels, *tolerance)?
        }
        Experiment::Sample { packet, session, reference, alpha } => {
            sample(&mut sink, packet, session, reference.as_ref(), *alpha)?
        }
        Experiment::Uncertainty { packet, gaussian } => {
            let r = match (packet, gaussian) {
                (Some(p), None) => uncertainty_report(&WavePacket::from_spec(p)?)?,
                (None, Some(g)) => field_uncertainty_report(&gaussian_field(g.bx, g.sigma, g.carrier))?,
                _ => return Err(Error::Mismatch("uncertainty needs exactly one of `packet` or `gaussian`".into())),
            };
            uncertainty(&mut sink, &r, gaussian.is_some())?
        }
        Experiment::FockEnergy { modes, convention, n_max, total_max } => {
            let set = modes.mode_set()?;
            let basis = FockBasis::new(set.modes().into_iter().map(FockMode::Momentum).collect(), *n_max, *total_max)?;
            let op = energy_operator(&basis, &set, *convention)?;
            let vacuum = op.expectation(&basis.vacuum())?.re;
            let want = match convention {
                EnergyConvention::Textbook => {
                    set.modes().iter().filter(|k| k.branch == Branch::Positive).map(|k| set.energy(k)).sum()
                }
                _ => 0.0,
            };
            sink.result.metric("vacuum_energy", vacuum, 0.0, Provenance::Analytic);
            sink.result.metric("basis_states", basis.dim() as f64, 0.0, Provenance::Analytic);
            sink.result.claim(
                "vacuum-energy",
                vacuum == want,
                vacuum,
                0.0,
                Provenance::Analytic,
                format!("expected {want} under {convention:?}"),
            );
            write_spectrum(&mut sink, &basis, &op, "spectrum.csv")?;
            dump_basis(&mut sink, &basis)?;
        }
        Experiment::FockRegion { modes, region, n_max, total_max, quadrature, one_particle } => {
            let set = modes.mode_set()?;
            let bx = *set.spacetime_box();
            let q = region.build(&bx)?;
            let mode_list = set.modes();
            let basis =
                FockBasis::new(mode_list.iter().copied().map(FockMode::Momentum).collect(), *n_max, *total_max)?;
            let op = region_number_operator(&basis, &set, &q, *quadrature)?;
            let whole = region_number_operator(&basis, &set, &Region::whole(&bx), *quadrature)?;
            sink.result.notes.push("the box volume in the region operator is the 4-volume, so that the whole box gives the number operator".into());
            let whole_dev = whole.sub(&number_operator(&basis))?.max_abs();
            sink.result.bound("whole-box-is-number-operator", whole_dev, 0.0, Provenance::Analytic);
            let frac = q.volume_fraction();
            let mut w = csv_writer(sink.create("expectations.csv")?);
            w.write_record(["state", "occupations", "total", "expectation", "expected"])?;
            let mut dev: f64 = 0.0;
            for s in 0..basis.dim() {
                let n: u32 = basis.state(s).iter().sum();
                let e = op.expectation(&basis.basis_vector(s))?;
                let want = n as f64 * frac;
                dev = dev.max((e - C64::new(want, 0.0)).norm());
                w.write_record([
                    s.to_string(),
                    occupations(basis.state(s)),
                    n.to_string(),
                    fmt_f64(e.re),
                    fmt_f64(want),
                ])?;
            }
            w.flush()?;
            sink.result.metric("volume_fraction", frac, 0.0, Provenance::Analytic);
            if basis.dim() <= DENSE_LIMIT {
                let l = region_one_particle_matrix(&set, &mode_list, &q, *quadrature)?;
                let cmp = compare_synthesis(&basis, &l)?;
                sink.result.metric("eigen_form_deviation", cmp.max_deviation, 0.0, Provenance::Analytic);
                sink.result.notes.push(
                    "eigen_form_deviation compares the spectrum of the general lift with occupation sums over the eigenmodes of l(Q); per-mode caps make them differ".into(),
                );
            }
            sink.result.bound("basis-state-expectation", dev, 1e-12, Provenance::Analytic);
            if let Some(c) = one_particle {
                let c = c.normalized().ok_or(Error::NoSupport)?;
                let p = WavePacket::scalar(Species::ScalarBosonComplex, set.clone(), c.clone())?;
                let prob = integrate_region(event_density(&p)?.values(), &q)?;
                let one = FockBasis::new(mode_list.iter().copied().map(FockMode::Momentum).collect(), 1, 1)?;
                let phi = one.one_particle(&mode_list.iter().map(|k| c.get(k)).collect::<Vec<_>>())?;
                let e = region_number_operator(&one, &set, &q, *quadrature)?.expectation(&phi)?.re;
                sink.result.metric("one_particle_expectation", e, 0.0, Provenance::Analytic);
                sink.result.metric("packet_probability", prob, 0.0, Provenance::Analytic);
                if *quadrature == Quadrature::Midpoint {
                    sink.result.bound("one-particle-matches-packet", (e - prob).abs(), 1e-10, Provenance::Analytic);
                }
            }
        }
        Experiment::FockCells { bx, region, n_max, total_max } => {
            let cells = CellBasis::new(*bx, FieldKind::Scalar);
            let basis = cells.fock_basis(*n_max, *total_max)?;
            let q = region.build(bx)?;
            let op = cell_number_operator(&cells, &basis, &q)?;
            let all = cell_number_operator(&cells, &basis, &Region::whole(bx))?;
            sink.result.bound(
                "all-cells-is-number-operator",
                all.sub(&number_operator(&basis))?.max_abs(),
                0.0,
                Provenance::Analytic,
            );
            let mut w = csv_writer(sink.create("cell_counts.csv")?);
            w.write_record(["state", "total", "eigenvalue", "direct_count"])?;
            let mut dev: f64 = 0.0;
            for s in 0..basis.dim() {
                let n = basis.state(s);
                let count: u32 = n
                    .iter()
                    .zip(basis.modes())
                    .filter(|(_, m)| matches!(m, FockMode::Cell { xi, .. } if q.contains(*xi)))
                    .map(|(c, _)| *c)
                    .sum();
                let e = op.get(s, s).re;
                dev = dev.max((e - count as f64).abs());
                w.write_record([s.to_string(), n.iter().sum::<u32>().to_string(), fmt_f64(e), count.to_string()])?;
            }
            w.flush()?;
            sink.result.bound("eigenvalue-is-direct-count", dev, 0.0, Provenance::Analytic);
            sink.result.metric("basis_states", basis.dim() as f64, 0.0, Provenance::Analytic);
        }
        Experiment::FieldEquation { modes, representation, n_max, total_max } => {
            let set = modes.mode_set()?;
            match representation {
                Representation::Momentum => {
                    let basis =
                        FockBasis::new(set.modes().into_iter().map(FockMode::Momentum).collect(), *n_max, *total_max)?;
                    let op = field_equation_operator(&basis, &set, *representation)?;
                    sink.result.bound("on-shell-modes-annihilate", op.max_abs(), 1e-10, Provenance::Analytic);
                    sink.result.metric("basis_states", basis.dim() as f64, 0.0, Provenance::Analytic);
                }
                Representation::Cell => {
                    let bx = *set.spacetime_box();
                    let basis = CellBasis::new(bx, FieldKind::Scalar).fock_basis(*n_max, *total_max)?;
                    let op = field_equation_operator(&basis, &set, *representation)?;
                    sink.result.metric("max_entry", op.max_abs(), 0.0, Provenance::Analytic);
                    sink.result.metric("nonzeros", op.nnz() as f64, 0.0, Provenance::Analytic);
                    sink.result.bound("hermitian", op.max_hermitian_defect(), 1e-12, Provenance::Analytic);
                    lattice_kernel(&mut sink, &set)?;
                }
            }
        }
        Experiment::N1Equivalence { packet, regions } => {
            let p = WavePacket::from_spec(packet)?;
            let bx = *p.spacetime_box();
            let list: Vec<(String, Region)> = match regions {
                RegionSuite::Explicit(list) => {
                    list.iter().map(|r| Ok((r.label.clone(), r.region.build(&bx)?))).collect::<sek_core::Result<_>>()?
                }
                RegionSuite::Random { count, seed } => (0..*count)
                    .map(|i| {
                        let fraction = ((i as f64 + 0.5) / *count as f64).clamp(0.0, 1.0);
                        let spec = RegionSpec::Random { fraction, seed: seed.wrapping_add(i as u64) };
                        Ok((format!("random-{i}"), spec.build(&bx)?))
                    })
                    .collect::<sek_core::Result<_>>()?,
            };
            let r = n1_subsystem(&p, &list)?;
            let mut w = csv_writer(sink.create("n1.csv")?);
            w.write_record(["label", "expectation", "probability", "deviation"])?;
            for row in &r.rows {
                w.write_record([
                    row.label.clone(),
                    fmt_f64(row.expectation),
                    fmt_f64(row.probability),
                    fmt_f64(row.deviation),
                ])?;
            }
            w.flush()?;
            sink.result.bound("n1-equivalence", r.max_deviation(), 1e-10, Provenance::Analytic);
            sink.result.metric("regions", r.rows.len() as f64, 0.0, Provenance::Analytic);
        }
    }
    Ok(sink.result)
}

fn occupations(n: &[u32]) -> String {
    n.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn write_spectrum(sink: &mut Sink, basis: &FockBasis, op: &FockOperator, name: &str) -> sek_core::Result<()> {
    let mut w = csv_writer(sink.create(name)?);
    w.write_record(["state", "occupations", "total", "value"])?;
    for s in 0..basis.dim() {
        let n = basis.state(s);
        w.write_record([s.to_string(), occupations(n), n.iter().sum::<u32>().to_string(), fmt_f64(op.get(s, s).re)])?;
    }
    w.flush()?;
    Ok(())
}

fn dump_basis(sink: &mut Sink, basis: &FockBasis) -> sek_core::Result<()> {
    if basis.dim() > DUMP_LIMIT {
        return Ok(());
    }
    #[derive(Serialize)]
    struct Dump<'a> {
        modes: &'a [FockMode],
        n_max: u32,
        total_max: u32,
        states: &'a [Vec<u32>],
    }
    sink.json(
        "basis.json",
        &Dump { modes: basis.modes(), n_max: basis.n_max(), total_max: basis.total_max(), states: basis.states() },
    )
}

fn density(sink: &mut Sink, spec: &PacketSpec) -> sek_core::Result<()> {
    let p = WavePacket::from_spec(spec)?;
    let d = event_density(&p)?;
    let raw = p.field().pointwise_square();
    let w = p.spacetime_box().cell_volume();
    let total = raw.iter().sum::<f64>() * w;
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    sink.result.metric("integral", total, 1e-9, Provenance::Analytic);
    sink.result.metric("min_g", min, 1e-12, Provenance::Analytic);
    sink.result.bound("normalization", (total - 1.0).abs(), 1e-9, Provenance::Analytic);
    sink.result.bound("positivity", (-min).max(0.0), 1e-12, Provenance::Analytic);
    let mut f = sink.create("density.csv")?;
    d.write_csv(&mut f)?;
    f.flush()?;
    Ok(())
}

fn marginal_run(sink: &mut Sink, spec: &PacketSpec) -> sek_core::Result<()> {
    let p = WavePacket::from_spec(spec)?;
    let d = event_density(&p)?;
    let bx = *d.spacetime_box();
    let m = marginals(&d);
    let h0 = bx.spacing(0);
    let mut rebuilt = vec![0.0; bx.spatial_cell_count()];
    let mut undefined = 0usize;
    for row in 0..bx.counts()[0] {
        match conditional_spatial(&d, row) {
            Ok(cond) => rebuilt.iter_mut().zip(cond).for_each(|(r, g)| *r += m.g0[row] * g * h0),
            Err(Error::UndefinedConditional { .. }) => undefined += 1,
            Err(e) => return Err(e),
        }
    }
    sink.result.bound("g1-from-conditionals", max_abs_dev(rebuilt, m.g1.iter().copied()), 1e-10, Provenance::Analytic);
    sink.result.bound("g0-normalization", (m.g0.iter().sum::<f64>() * h0 - 1.0).abs(), 1e-9, Provenance::Analytic);
    sink.result.metric("undefined_conditional_rows", undefined as f64, 0.0, Provenance::Analytic);
    if p.species() == Species::Electron {
        let dev = m.g0.iter().map(|g| (g - 1.0 / bx.ct()).abs()).fold(0.0, f64::max);
        sink.result.bound("electron-uniform-in-time", dev, 1e-9, Provenance::Analytic);
    }
    let mut f = sink.create("g0.csv")?;
    m.write_g0_csv(&mut f)?;
    f.flush()?;
    let mut f = sink.create("g1.csv")?;
    m.write_g1_csv(&mut f)?;
    f.flush()?;
    Ok(())
}

fn momentum(
    sink: &mut Sink,
    spec: &PacketSpec,
    session: Option<&sek_core::sampler::SessionConfig>,
) -> sek_core::Result<()> {
    let p = WavePacket::from_spec(spec)?;
    let law = momentum_distribution(&p);
    let mut w = csv_writer(sink.create("momentum.csv")?);
    w.write_record(["n1", "n2", "n3", "sign", "p0", "p1", "p2", "p3", "probability"])?;
    for e in &law.entries {
        let mut rec = vec![e.n[0].to_string(), e.n[1].to_string(), e.n[2].to_string(), i8::from(e.sign).to_string()];
        rec.extend(e.four_momentum.iter().map(|v| fmt_f64(*v)));
        rec.push(fmt_f64(e.probability));
        w.write_record(rec)?;
    }
    w.flush()?;
    for a in 0..4 {
        sink.result.metric(format!("mean_p{a}"), law.mean[a], 1e-12, Provenance::Analytic);
    }
    if let Some(q) = law.charge {
        sink.result.metric("charge", q, 1e-12, Provenance::Analytic);
    }
    let positive = p.coefficients().iter().all(|(k, _)| k.branch == Branch::Positive);
    if p.species().is_scalar() && spec.commensurate_time && positive {
        let j = energy_momentum_functional(&p)?;
        let scale = law.mean.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let rel = max_abs_dev(j, law.mean) / scale;
        sink.result.bound("functional-matches-mean", rel, 1e-6, Provenance::Analytic);
    } else {
        sink.result.notes.push(
            "functional comparison needs a scalar packet of positive-branch modes on a commensurate time grid".into(),
        );
    }
    if let Some(cfg) = session {
        let h = sample_momentum(&p, cfg)?;
        let probs: Vec<f64> = p.coefficients().iter().map(|(_, c)| c.norm_sqr()).collect();
        let mut f = sink.create("momentum_histogram.csv")?;
        h.write_csv(&mut f, &probs)?;
        f.flush()?;
        for a in 0..4 {
            sink.result.metric(format!("sampled_mean_p{a}"), h.mean[a], h.std_error[a], Provenance::Sampled);
        }
        let fit = chi_square(&h.counts, &probs)?;
        sink.result.claim(
            "momentum-fit",
            fit.p_value > 0.01,
            fit.p_value,
            0.01,
            Provenance::Sampled,
            format!("chi2 = {} on {} dof", fit.chi2, fit.dof),
        );
    }
    Ok(())
}

fn boost_check(
    sink: &mut Sink,
    spec: &PacketSpec,
    boost: &sek_core::lorentz::Boost,
    region: &RegionSpec,
    levels: u32,
    tolerance: f64,
) -> sek_core::Result<()> {
    let v = boost.velocity();
    let refined: Vec<usize> = (0..4).filter(|&a| a == 0 || v[a - 1] != 0.0).collect();
    let mut rows = Vec::new();
    for level in 0..=levels {
        let mut counts = spec.bx.counts();
        for &a in &refined {
            counts[a] <<= level;
        }
        let mut s = spec.clone();
        s.bx = spec.bx.regrid(counts)?;
        let p = WavePacket::from_spec(&s)?;
        let q = region.build(&s.bx)?;
        let r = invariance_check(boost, &p, &q, None)?;
        let h = refined.iter().map(|&a| s.bx.spacing(a)).fold(0.0, f64::max);
        rows.push((counts, h, r));
    }
    let mut w = csv_writer(sink.create("boost.csv")?);
    w.write_record([
        "level",
        "n0",
        "n1",
        "n2",
        "n3",
        "h",
        "density_dev",
        "prob_dev",
        "prob_source",
        "prob_target",
        "leakage",
    ])?;
    for (level, (counts, h, r)) in rows.iter().enumerate() {
        let mut rec = vec![level.to_string()];
        rec.extend(counts.iter().map(|c| c.to_string()));
        rec.extend(
            [*h, r.density_dev, r.prob_dev, r.prob_source, r.prob_target, r.leakage].iter().map(|x| fmt_f64(*x)),
        );
        w.write_record(rec)?;
    }
    w.flush()?;
    let base = &rows[0].2;
    let finest = &rows[rows.len() - 1].2;
    let order = if rows.len() > 1 {
        let h: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let d: Vec<f64> = rows.iter().map(|r| r.2.prob_dev.max(f64::MIN_POSITIVE)).collect();
        convergence_order(&h, &d)
    } else {
        f64::NAN
    };
    let status = if base.prob_dev <= tolerance {
        Status::Pass
    } else if order >= 1.0 && finest.prob_dev < base.prob_dev {
        Status::PassWithConvergence
    } else {
        Status::Fail
    };
    sink.result.claims.push(Claim {
        name: "probability-invariance".into(),
        status,
        value: base.prob_dev,
        tolerance,
        provenance: Provenance::Refined,
        detail: Some(format!(
            "convergence order {order:.3} over {} grids; finest deviation {:e}",
            rows.len(),
            finest.prob_dev
        )),
    });
    if !order.is_nan() {
        sink.result.metric("convergence_order", order, 0.0, Provenance::Refined);
    }
    sink.result.metric("prob_dev", base.prob_dev, tolerance, Provenance::Refined);
    sink.result.metric("prob_dev_finest", finest.prob_dev, tolerance, Provenance::Refined);
    sink.result.metric("leakage", base.leakage, 0.0, Provenance::Analytic);
    if base.leakage == 0.0 {
        sink.result.bound("density-invariance", base.density_dev, 1e-10, Provenance::Analytic);
    } else {
        sink.result.metric("density_dev", base.density_dev, base.leakage, Provenance::Analytic);
    }
    Ok(())
}

fn sample(
    sink: &mut Sink,
    spec: &PacketSpec,
    cfg: &sek_core::sampler::SessionConfig,
    reference: Option<&PacketSpec>,
    alpha: f64,
) -> sek_core::Result<()> {
    let p = WavePacket::from_spec(spec)?;
    let r = match reference {
        Some(s) => WavePacket::from_spec(s)?,
        None => p.clone(),
    };
    let (fit, name) = if cfg.mode == SamplingMode::Momentum {
        let h = sample_momentum(&p, cfg)?;
        let probs: Vec<f64> = h.modes.iter().map(|k| r.coefficients().get(k).norm_sqr()).collect();
        let mut f = sink.create("momentum_histogram.csv")?;
        h.write_csv(&mut f, &probs)?;
        f.flush()?;
        (chi_square(&h.counts, &probs)?, "momentum-fit")
    } else {
        let d = event_density(&p)?;
        let dr = event_density(&r)?;
        if dr.spacetime_box() != d.spacetime_box() {
            return Err(Error::Mismatch("reference packet lives on a different grid".into()));
        }
        let h = sample_events(&d, cfg)?;
        let probs = bin_probabilities(&dr, cfg.bins)?;
        let mut f = sink.create("histogram.csv")?;
        h.write_csv(&mut f, &probs)?;
        f.flush()?;
        (goodness_of_fit(&h, &dr)?, "density-fit")
    };
    sink.result.metric("chi2", fit.chi2, 0.0, Provenance::Sampled);
    sink.result.metric("dof", fit.dof as f64, 0.0, Provenance::Sampled);
    sink.result.metric("p_value", fit.p_value, alpha, Provenance::Sampled);
    sink.result.metric("l1", fit.l1, 0.0, Provenance::Sampled);
    sink.result.claim(
        name,
        fit.p_value > alpha,
        fit.p_value,
        alpha,
        Provenance::Sampled,
        format!("chi2 = {} on {} dof", fit.chi2, fit.dof),
    );
    Ok(())
}

fn uncertainty(sink: &mut Sink, r: &UncertaintyReport, gaussian: bool) -> sek_core::Result<()> {
    let mut w = csv_writer(sink.create("uncertainty.csv")?);
    w.write_record(["axis", "dx", "dp", "product"])?;
    for a in 0..4 {
        w.write_record([a.to_string(), fmt_f64(r.dx[a]), fmt_f64(r.dp[a]), fmt_f64(r.products[a])])?;
        sink.result.metric(format!("product_{a}"), r.products[a], 1e-12, Provenance::Analytic);
    }
    w.flush()?;
    sink.result.metric("energy", r.energy, 1e-12, Provenance::Analytic);
    if let Some(m) = r.dx_min {
        sink.result.metric("dx_min", m, 1e-12, Provenance::Analytic);
    }
    for a in 0..3 {
        sink.result.metric(format!("resolvable_{}", a + 1), r.resolvable[a] as u8 as f64, 0.0, Provenance::Analytic);
    }
    if gaussian {
        let lo = r.products.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = r.products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        sink.result.claim(
            "gaussian-products-in-band",
            lo >= 0.5 && hi <= 0.55,
            hi,
            0.55,
            Provenance::Analytic,
            format!("products range [{lo}, {hi}], band [0.5, 0.55], time axis included"),
        );
    }
    Ok(())
}

/// Lattice dispersion of the cell kernel and the residual of its on-shell waves.
fn lattice_kernel(sink: &mut Sink, set: &sek_core::modes::ModeSet) -> sek_core::Result<()> {
    let bx = *set.spacetime_box();
    let n = bx.counts();
    let b = cell_kernel_matrix(&bx, set.mass());
    let signed = |i: usize, len: usize| if i <= len / 2 { i as i64 } else { i as i64 - len as i64 };
    let mut w = csv_writer(sink.create("dispersion.csv")?);
    w.write_record(["j0", "j1", "j2", "j3", "lambda", "on_shell"])?;
    let mut kernel = 0usize;
    let mut residual: f64 = 0.0;
    for xi in bx.cells() {
        let j = [0, 1, 2, 3].map(|a| signed(xi[a], n[a]));
        let lam = cell_dispersion(&bx, set.mass(), j);
        let on_shell = lam.abs() < 1e-8;
        if on_shell {
            kernel += 1;
            let wave: Vec<C64> = bx
                .cells()
                .map(|c| C64::from_polar(1.0, (0..4).map(|a| 2.0 * PI * j[a] as f64 * c[a] as f64 / n[a] as f64).sum()))
                .collect();
            let r: f64 =
                b.iter().map(|row| row.iter().map(|(k, v)| v * wave[*k]).sum::<C64>().norm_sqr()).sum::<f64>().sqrt();
            residual = residual.max(r / (wave.len() as f64).sqrt());
        }
        w.write_record([
            j[0].to_string(),
            j[1].to_string(),
            j[2].to_string(),
            j[3].to_string(),
            fmt_f64(lam),
            (on_shell as u8).to_string(),
        ])?;
    }
    w.flush()?;
    sink.result.metric("kernel_dimension", kernel as f64, 0.0, Provenance::Analytic);
    sink.result.bound("kernel-waves-annihilated", residual, 1e-8, Provenance::Analytic);
    Ok(())
}
