//! Species-specific wave packets and their spacetime event statistics.

mod density;
pub mod dirac;
mod momentum;
mod uncertainty;

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use density::{conditional_spatial, event_density, gradient_invariant, marginals, Density4, Marginals};
pub use momentum::{energy_momentum_functional, energy_momentum_integral, momentum_distribution, MomentumDistribution};
pub use uncertainty::{field_uncertainty_report, gaussian_field, uncertainty_report, UncertaintyReport};

use crate::error::{Error, Result};
use crate::lorentz::Boost;
use crate::modes::{accumulate_separable, phase_tables, Branch, Coefficients, ModeIndex, ModeSet, Normalization};
use crate::spacetime::{FieldKind, LatticeField, SpacetimeBox};
use dirac::plane_wave_spinor;

/// Values below this (in absolute value) count as round-off for the
/// positivity and gauge checks.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Species {
    ScalarBosonReal,
    ScalarBosonComplex,
    VectorBosonMassive,
    Photon,
    Electron,
}

impl Species {
    pub fn field_kind(self) -> FieldKind {
        match self {
            Species::ScalarBosonReal | Species::ScalarBosonComplex => FieldKind::Scalar,
            Species::VectorBosonMassive | Species::Photon => FieldKind::Vector,
            Species::Electron => FieldKind::Spinor,
        }
    }

    pub fn is_scalar(self) -> bool {
        self.field_kind() == FieldKind::Scalar
    }
}

/// One mode of a packet: coefficient plus its component vector.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Term {
    pub k: ModeIndex,
    pub c: C64,
    pub e: Vec<C64>,
}

/// A normalized single-particle packet `Σ_k C_k e_k ψ_k` with its sampled field.
#[derive(Debug, Clone)]
pub struct WavePacket {
    species: Species,
    set: ModeSet,
    coeffs: Coefficients,
    terms: Vec<Term>,
    scale: f64,
    field: LatticeField,
}

fn unit(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl WavePacket {
    /// Real or complex scalar boson.
    pub fn scalar(species: Species, set: ModeSet, coeffs: Coefficients) -> Result<Self> {
        if !species.is_scalar() {
            return Err(Error::UnsupportedSpecies(format!("{species:?} is not a scalar species")));
        }
        let coeffs = normalize(&coeffs)?;
        if species == Species::ScalarBosonReal {
            check_reality(&coeffs)?;
        }
        let terms = coeffs.iter().map(|(k, c)| Term { k: *k, c: *c, e: vec![unit(1.0)] }).collect();
        Self::assemble(species, set, coeffs, terms)
    }

    /// Massive vector boson with explicit 4-polarizations `e_k`.
    pub fn vector(set: ModeSet, coeffs: Coefficients, pols: &BTreeMap<ModeIndex, [C64; 4]>) -> Result<Self> {
        let coeffs = normalize(&coeffs)?;
        let terms = attach(&coeffs, |k| pols.get(k).map(|e| e.to_vec()))?;
        Self::assemble(Species::VectorBosonMassive, set, coeffs, terms)
    }

    /// Massive vector boson in the rest-frame gauge: each polarization is
    /// `Λ(v)(0, ε′_k)`, so the field has vanishing time component in the
    /// frame moving with `frame_velocity`.
    pub fn vector_rest_gauge(
        set: ModeSet,
        coeffs: Coefficients,
        spatial: &BTreeMap<ModeIndex, [C64; 3]>,
        frame_velocity: [f64; 3],
    ) -> Result<Self> {
        let boost = Boost::new(frame_velocity)?;
        let lam = boost.matrix();
        let pols: BTreeMap<ModeIndex, [C64; 4]> = spatial
            .iter()
            .map(|(k, s)| {
                let rest = [unit(0.0), s[0], s[1], s[2]];
                let e = [0, 1, 2, 3].map(|r| (0..4).map(|c| rest[c] * lam[r][c]).sum::<C64>());
                (*k, e)
            })
            .collect();
        Self::vector(set, coeffs, &pols)
    }

    /// Photon plane wave-packet: massless, collinear wave vectors, transverse
    /// polarizations with zero time component.
    pub fn photon(set: ModeSet, coeffs: Coefficients, pols: &BTreeMap<ModeIndex, [C64; 4]>) -> Result<Self> {
        if set.mass() != 0.0 {
            return Err(Error::Domain(format!("photon mass must be 0, got {}", set.mass())));
        }
        let coeffs = normalize(&coeffs)?;
        let mut axis: Option<[f64; 3]> = None;
        for (k, c) in coeffs.iter() {
            if c.norm() == 0.0 {
                continue;
            }
            if k.n == [0, 0, 0] {
                return Err(Error::UnsupportedConfiguration("photon mode with zero wave vector".into()));
            }
            let n = k.n.map(f64::from);
            match axis {
                None => axis = Some(n),
                Some(a) => {
                    let cross = [a[1] * n[2] - a[2] * n[1], a[2] * n[0] - a[0] * n[2], a[0] * n[1] - a[1] * n[0]];
                    if cross.iter().any(|x| *x != 0.0) {
                        return Err(Error::UnsupportedConfiguration(
                            "photon packet requires collinear wave vectors".into(),
                        ));
                    }
                }
            }
            let e = pols.get(k).ok_or_else(|| Error::Mismatch(format!("no polarization for mode {:?}", k.n)))?;
            let en: f64 = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let nn = n.iter().map(|x| x * x).sum::<f64>().sqrt();
            let long: C64 = (0..3).map(|a| e[a + 1] * n[a]).sum::<C64>() / nn;
            if e[0].norm() > NEGATIVE_CLAMP * en.max(1.0) || long.norm() > NEGATIVE_CLAMP * en.max(1.0) {
                return Err(Error::GaugeViolation(format!(
                    "photon polarization of mode {:?} is not transverse: e0 = {}, e·k = {}",
                    k.n, e[0], long
                )));
            }
        }
        let terms = attach(&coeffs, |k| pols.get(k).map(|e| e.to_vec()))?;
        Self::assemble(Species::Photon, set, coeffs, terms)
    }

    /// Electron with a two-spinor `χ_k` per mode (lifted to a Dirac spinor).
    pub fn electron(set: ModeSet, coeffs: Coefficients, spinors: &BTreeMap<ModeIndex, [C64; 2]>) -> Result<Self> {
        let coeffs = normalize(&coeffs)?;
        let m = set.mass();
        let terms = coeffs
            .iter()
            .map(|(k, c)| {
                let chi = spinors.get(k).ok_or_else(|| Error::Mismatch(format!("no spinor for mode {:?}", k.n)))?;
                let u = plane_wave_spinor(set.momentum(k), m, k.branch, *chi)?;
                Ok(Term { k: *k, c: *c, e: u.to_vec() })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(Species::Electron, set, coeffs, terms)
    }

    fn assemble(species: Species, set: ModeSet, coeffs: Coefficients, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            set.check(&t.k)?;
        }
        let kind = species.field_kind();
        let mut field = synthesize_terms(&set, &terms, kind, |_| unit(1.0))?;
        let norm: f64 = field.pointwise_square().iter().sum::<f64>() * set.spacetime_box().cell_volume();
        if !(norm.abs() > 0.0) {
            return Err(Error::NoSupport);
        }
        let scale = norm.abs().powf(-0.5);
        field.scale(scale);
        Ok(WavePacket { species, set, coeffs, terms, scale, field })
    }

    pub fn species(&self) -> Species {
        self.species
    }

    pub fn mode_set(&self) -> &ModeSet {
        &self.set
    }

    pub fn spacetime_box(&self) -> &SpacetimeBox {
        self.set.spacetime_box()
    }

    /// Coefficients scaled to `‖C‖ = 1`.
    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    /// Normalized field on the grid.
    pub fn field(&self) -> &LatticeField {
        &self.field
    }

    /// Factor applied to `Σ_k C_k e_k ψ_k` to normalize the field.
    pub(crate) fn scale(&self) -> f64 {
        self.scale
    }

    /// Field of `Σ_k weight(k) C_k e_k ψ_k` with the packet's normalization.
    pub(crate) fn weighted_field(&self, weight: impl Fn(&ModeIndex) -> C64) -> Result<LatticeField> {
        let mut f = synthesize_terms(&self.set, &self.terms, self.species.field_kind(), weight)?;
        f.scale(self.scale);
        Ok(f)
    }

    /// Builds a packet from its JSON description.
    pub fn from_spec(spec: &PacketSpec) -> Result<Self> {
        let set = spec.mode_set()?;
        let coeffs = spec.coeffs.clone();
        let pols = spec.polarization_map()?;
        let width = |k: &ModeIndex, want: usize| -> Result<()> {
            match pols.get(k) {
                Some(v) if v.len() != want => Err(Error::Mismatch(format!(
                    "polarization of mode {:?} has {} components, expected {want}",
                    k.n,
                    v.len()
                ))),
                _ => Ok(()),
            }
        };
        let fixed = |want: usize| -> Result<()> {
            for k in pols.keys() {
                width(k, want)?;
            }
            Ok(())
        };
        match spec.species {
            Species::ScalarBosonReal | Species::ScalarBosonComplex => {
                if !pols.is_empty() {
                    return Err(Error::Mismatch("scalar packets take no polarizations".into()));
                }
                Self::scalar(spec.species, set, coeffs)
            }
            Species::VectorBosonMassive => match spec.frame_velocity {
                Some(v) => {
                    fixed(3)?;
                    let m = pols.iter().map(|(k, e)| (*k, [e[0], e[1], e[2]])).collect();
                    Self::vector_rest_gauge(set, coeffs, &m, v)
                }
                None => {
                    fixed(4)?;
                    let m = pols.iter().map(|(k, e)| (*k, [e[0], e[1], e[2], e[3]])).collect();
                    Self::vector(set, coeffs, &m)
                }
            },
            Species::Photon => {
                fixed(4)?;
                let m = pols.iter().map(|(k, e)| (*k, [e[0], e[1], e[2], e[3]])).collect();
                Self::photon(set, coeffs, &m)
            }
            Species::Electron => {
                fixed(2)?;
                let m = pols.iter().map(|(k, e)| (*k, [e[0], e[1]])).collect();
                Self::electron(set, coeffs, &m)
            }
        }
    }
}

fn normalize(c: &Coefficients) -> Result<Coefficients> {
    c.normalized().ok_or_else(|| Error::Domain("coefficient vector is zero".into()))
}

fn check_reality(c: &Coefficients) -> Result<()> {
    let tol = 1e-12;
    for (k, v) in c.iter() {
        let mirror = ModeIndex::new(k.n.map(|x| -x), k.branch.flip());
        if (c.get(&mirror) - v.conj()).norm() > tol {
            return Err(Error::Domain(format!("real scalar needs C(-n, -s) = conj C(n, s); mode {:?} breaks it", k)));
        }
    }
    Ok(())
}

fn attach(c: &Coefficients, e: impl Fn(&ModeIndex) -> Option<Vec<C64>>) -> Result<Vec<Term>> {
    c.iter()
        .map(|(k, v)| {
            let e = e(k).ok_or_else(|| Error::Mismatch(format!("no polarization for mode {:?}", k.n)))?;
            Ok(Term { k: *k, c: *v, e })
        })
        .collect()
}

pub(crate) fn synthesize_terms(
    set: &ModeSet,
    terms: &[Term],
    kind: FieldKind,
    weight: impl Fn(&ModeIndex) -> C64,
) -> Result<LatticeField> {
    let bx = *set.spacetime_box();
    let nc = kind.components();
    let mut f = LatticeField::zeros(bx, kind);
    for t in terms {
        let amp = t.c * weight(&t.k) * set.amplitude(&t.k)?;
        if amp == unit(0.0) {
            continue;
        }
        let tables = phase_tables(&bx, set.axis_wavenumbers(&t.k));
        for (comp, e) in t.e.iter().enumerate() {
            if *e != unit(0.0) {
                accumulate_separable(&bx, &tables, amp * e, f.data_mut(), nc, comp);
            }
        }
    }
    Ok(f)
}

/// Mode-count cutoff as a single value or one per spatial axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cutoff {
    Uniform(u32),
    PerAxis([u32; 3]),
}

impl Cutoff {
    pub fn per_axis(self) -> [u32; 3] {
        match self {
            Cutoff::Uniform(c) => [c; 3],
            Cutoff::PerAxis(c) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarizationEntry {
    pub n: [i32; 3],
    pub sign: Branch,
    /// `[re, im]` per component.
    pub components: Vec<[f64; 2]>,
}

/// JSON description of a packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub species: Species,
    pub mass: f64,
    #[serde(rename = "box")]
    pub bx: SpacetimeBox,
    pub cutoff: Cutoff,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub commensurate_time: bool,
    pub coeffs: Coefficients,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub polarizations: Vec<PolarizationEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_velocity: Option<[f64; 3]>,
}

impl PacketSpec {
    pub fn mode_set(&self) -> Result<ModeSet> {
        Ok(ModeSet::new(self.mass, self.bx, self.cutoff.per_axis())?
            .with_normalization(self.normalization)
            .with_commensurate_time(self.commensurate_time))
    }

    fn polarization_map(&self) -> Result<BTreeMap<ModeIndex, Vec<C64>>> {
        let mut out = BTreeMap::new();
        for p in &self.polarizations {
            let k = ModeIndex::new(p.n, p.sign);
            let v = p.components.iter().map(|c| C64::new(c[0], c[1])).collect();
            if out.insert(k, v).is_some() {
                return Err(Error::Mismatch(format!("duplicate polarization for mode {:?}", k)));
            }
        }
        Ok(out)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::spacetime::norm_squared;

    #[test]
    fn every_species_is_normalized() {
        for p in all_species(&generic_set()) {
            let n: f64 = p.field().pointwise_square().iter().sum::<f64>() * p.spacetime_box().cell_volume();
            assert!((n - 1.0).abs() < 1e-12, "{:?}: {n}", p.species());
            assert!((p.coefficients().norm_sqr() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn real_scalar_field_is_real() {
        let set = generic_set();
        let p = &all_species(&set)[1];
        assert!(p.field().data().iter().all(|z| z.im.abs() < 1e-12));
        let bad = coeffs(&[([1, 0, 0], Branch::Positive, 1.0, 0.0)]);
        assert!(matches!(WavePacket::scalar(Species::ScalarBosonReal, set, bad), Err(Error::Domain(_))));
    }

    #[test]
    fn rest_gauge_polarization_has_no_rest_time_component() {
        let set = generic_set();
        let v = [0.3, -0.2, 0.1];
        let p = &all_species(&set)[2];
        let back = Boost::new(v).unwrap().inverse();
        for t in &p.terms {
            let e: [C64; 4] = [t.e[0], t.e[1], t.e[2], t.e[3]];
            let rest = back.apply_complex(e);
            assert!(rest[0].norm() < 1e-14);
        }
    }

    #[test]
    fn photon_configuration_errors() {
        let bx = *generic_set().spacetime_box();
        let set = ModeSet::uniform(0.0, bx, 2).unwrap();
        let pol = |e: [f64; 4]| e.map(unit);
        let two = coeffs(&[([1, 0, 0], Branch::Positive, 1.0, 0.0), ([0, 1, 0], Branch::Positive, 1.0, 0.0)]);
        let pols: BTreeMap<_, _> = two.iter().map(|(k, _)| (*k, pol([0.0, 0.0, 0.0, 1.0]))).collect();
        assert!(matches!(WavePacket::photon(set.clone(), two, &pols), Err(Error::UnsupportedConfiguration(_))));
        let one = coeffs(&[([1, 0, 0], Branch::Positive, 1.0, 0.0)]);
        let k = ModeIndex::positive([1, 0, 0]);
        for bad in [[0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 1.0, 0.0]] {
            let m = BTreeMap::from([(k, pol(bad))]);
            assert!(matches!(WavePacket::photon(set.clone(), one.clone(), &m), Err(Error::GaugeViolation(_))));
        }
        let massive = ModeSet::uniform(1.0, bx, 2).unwrap();
        let m = BTreeMap::from([(k, pol([0.0, 0.0, 1.0, 0.0]))]);
        assert!(matches!(WavePacket::photon(massive, one, &m), Err(Error::Domain(_))));
    }

    #[test]
    fn missing_polarization_and_zero_coefficients() {
        let set = generic_set();
        let c = coeffs(&[([1, 0, 0], Branch::Positive, 1.0, 0.0)]);
        assert!(matches!(WavePacket::vector(set.clone(), c.clone(), &BTreeMap::new()), Err(Error::Mismatch(_))));
        assert!(matches!(WavePacket::electron(set.clone(), c, &BTreeMap::new()), Err(Error::Mismatch(_))));
        assert!(WavePacket::scalar(Species::ScalarBosonComplex, set, Coefficients::new()).is_err());
    }

    #[test]
    fn spec_round_trip_builds_same_packet() {
        let json = r#"{
            "species": "electron", "mass": 0.9,
            "box": {"cT": 3.0, "L": [2.0, 2.5, 3.0], "N": [4, 4, 4, 4]},
            "cutoff": [1, 1, 0],
            "coeffs": [{"n": [1, 0, 0], "sign": 1, "re": 1.0, "im": 0.0}],
            "polarizations": [{"n": [1, 0, 0], "sign": 1, "components": [[1, 0], [0, 0]]}]
        }"#;
        let spec: PacketSpec = serde_json::from_str(json).unwrap();
        let p = WavePacket::from_spec(&spec).unwrap();
        assert_eq!(p.species(), Species::Electron);
        assert!((norm_squared(p.field()) - 1.0).abs() < 1e-12);
        let again: PacketSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(again, spec);
        let unknown = json.replace("\"mass\"", "\"extra\": 1, \"mass\"");
        assert!(serde_json::from_str::<PacketSpec>(&unknown).is_err());
        let wrong = json.replace("[[1, 0], [0, 0]]", "[[1, 0]]");
        let spec: PacketSpec = serde_json::from_str(&wrong).unwrap();
        assert!(matches!(WavePacket::from_spec(&spec), Err(Error::Mismatch(_))));
    }
}
