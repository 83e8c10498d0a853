use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{cell_number_operator, CellBasis, FockBasis, FockMode, FockVector};
use crate::error::{Error, Result};
use crate::particle::{event_density, Density4, WavePacket, NEGATIVE_CLAMP};
use crate::spacetime::{integrate_region, LatticeField, Region};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct N1Row {
    pub label: String,
    /// `⟨N⟩(Q, Φ) = (Φ, Λ′(Q)Φ)`.
    pub expectation: f64,
    /// `P(Q′, ψ)` from the event density.
    pub probability: f64,
    pub deviation: f64,
}

/// One-particle sector of the cell Fock space, with `Φ(1_ξ) = ψ(ξ)√w`.
#[derive(Debug, Clone)]
pub struct N1Report {
    pub cells: CellBasis,
    pub basis: FockBasis,
    pub phi: FockVector,
    pub rows: Vec<N1Row>,
}

impl N1Report {
    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(|r| r.deviation).fold(0.0, f64::max)
    }
}

/// Components that enter `Φ`: those with positive signature. Negative
/// ones must vanish, otherwise `ψ²` is not a sum of squares.
fn positive_components(f: &LatticeField) -> Result<Vec<usize>> {
    let kind = f.kind();
    let nc = kind.components();
    let scale = f.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut keep = Vec::new();
    for c in 0..nc {
        if kind.signature(c) > 0.0 {
            keep.push(c);
        } else if f.data().iter().skip(c).step_by(nc).any(|z| z.norm() > NEGATIVE_CLAMP * scale.max(1.0)) {
            return Err(Error::UnsupportedConfiguration(format!(
                "component {c} has negative signature and does not vanish"
            )));
        }
    }
    Ok(keep)
}

fn build(f: &LatticeField, d: &Density4, regions: &[(String, Region)]) -> Result<N1Report> {
    let bx = *f.spacetime_box();
    let keep = positive_components(f)?;
    let nc = f.kind().components();
    let cells = CellBasis::new(bx, f.kind());
    let modes: Vec<FockMode> =
        (0..bx.cell_count()).flat_map(|xi| keep.iter().map(move |c| FockMode::Cell { xi, component: *c })).collect();
    let basis = FockBasis::new(modes, 1, 1)?;
    let sq = f.pointwise_square();
    let norm = sq.iter().sum::<f64>() * bx.cell_volume();
    if !(norm > 0.0) {
        return Err(Error::NoSupport);
    }
    let root_w = (bx.cell_volume() / norm).sqrt();
    let amps: Vec<C64> =
        (0..bx.cell_count()).flat_map(|xi| keep.iter().map(move |c| f.data()[xi * nc + c] * root_w)).collect();
    let phi = basis.one_particle(&amps)?;
    let mut rows = Vec::with_capacity(regions.len());
    for (label, q) in regions {
        let op = cell_number_operator(&cells, &basis, q)?;
        let expectation = op.expectation(&phi)?.re;
        let probability = integrate_region(d.values(), q)?;
        rows.push(N1Row {
            label: label.clone(),
            expectation,
            probability,
            deviation: (expectation - probability).abs(),
        });
    }
    Ok(N1Report { cells, basis, phi, rows })
}

/// N = 1 subsystem of a packet, compared with its event probabilities.
pub fn n1_subsystem(p: &WavePacket, regions: &[(String, Region)]) -> Result<N1Report> {
    build(p.field(), &event_density(p)?, regions)
}

/// As [`n1_subsystem`] for a step field; the density is `ψ²` normalized.
pub fn n1_from_field(f: &LatticeField, regions: &[(String, Region)]) -> Result<N1Report> {
    positive_components(f)?;
    let d = Density4::from_values(*f.spacetime_box(), f.pointwise_square().into_iter().map(|v| v.max(0.0)).collect())?;
    build(f, &d, regions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::Branch;
    use crate::particle::fixtures::{all_species, coeffs, commensurate_set, generic_set};
    use crate::particle::Species;
    use crate::spacetime::{FieldKind, SpacetimeBox};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_regions(bx: &SpacetimeBox, n: usize, seed: u64) -> Vec<(String, Region)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![("whole".to_string(), Region::whole(bx))];
        for i in 0..n {
            let frac: f64 = rng.random();
            let mask = (0..bx.cell_count()).map(|_| rng.random::<f64>() < frac).collect();
            out.push((format!("random-{i}"), Region::from_mask(bx, mask).unwrap()));
        }
        out
    }

    #[test]
    fn flat_packet_quarter_region() {
        let bx = SpacetimeBox::new(1.0, [1.0; 3], [4, 4, 2, 2]).unwrap();
        let f = LatticeField::scalar_from_fn(bx, |_| C64::new(0.3, 0.0));
        let q = Region::index_brick(&bx, [0, 0, 0, 0], [1, 4, 2, 2]).unwrap();
        let r = n1_from_field(&f, &[("whole".into(), Region::whole(&bx)), ("quarter".into(), q)]).unwrap();
        assert!((r.rows[0].expectation - 1.0).abs() < 1e-14);
        assert!((r.rows[1].expectation - 0.25).abs() < 1e-14);
        assert!((r.phi.norm_sqr() - 1.0).abs() < 1e-14);
        assert_eq!(r.phi.amps[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn fringe_packet_matches_event_probabilities() {
        let set = commensurate_set([6, 8, 2, 2]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = coeffs(&[([0, 0, 0], Branch::Positive, s, 0.0), ([3, 0, 0], Branch::Positive, 0.0, s)]);
        let p = WavePacket::scalar(Species::ScalarBosonComplex, set.clone(), c).unwrap();
        let r = n1_subsystem(&p, &random_regions(set.spacetime_box(), 20, 7)).unwrap();
        assert_eq!(r.rows.len(), 21);
        assert!(r.max_deviation() < 1e-10, "{}", r.max_deviation());
        assert!((r.rows[0].expectation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn supported_species() {
        let set = generic_set();
        for p in all_species(&set) {
            let regions = random_regions(set.spacetime_box(), 5, 3);
            match p.species() {
                Species::VectorBosonMassive => {
                    let vanishing_time = p.field().data().iter().step_by(4).all(|z| z.norm() < 1e-14);
                    let r = n1_subsystem(&p, &regions);
                    assert_eq!(r.is_ok(), vanishing_time);
                }
                _ => {
                    let r = match n1_subsystem(&p, &regions) {
                        Ok(r) => r,
                        Err(e) => panic!("{:?}: {e}", p.species()),
                    };
                    assert!(r.max_deviation() < 1e-10, "{:?}", p.species());
                }
            }
        }
    }

    #[test]
    fn timelike_vector_component_is_refused() {
        let bx = SpacetimeBox::new(1.0, [1.0; 3], [2, 2, 1, 1]).unwrap();
        let f = LatticeField::from_fn(bx, FieldKind::Vector, |_, c| C64::new(if c == 0 { 0.1 } else { 1.0 }, 0.0));
        assert!(matches!(n1_from_field(&f, &[]), Err(Error::UnsupportedConfiguration(_))));
        let g = LatticeField::from_fn(bx, FieldKind::Vector, |_, c| C64::new(if c == 0 { 0.0 } else { 1.0 }, 0.0));
        let r = n1_from_field(&g, &[("whole".into(), Region::whole(&bx))]).unwrap();
        assert_eq!(r.basis.modes().len(), 12);
    }
}
