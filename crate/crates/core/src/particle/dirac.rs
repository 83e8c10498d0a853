//! Free plane-wave spinors in the Dirac representation.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::Branch;

/// Basis two-spinor along the z axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn chi(self) -> [C64; 2] {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        match self {
            Spin::Up => [o, z],
            Spin::Down => [z, o],
        }
    }
}

fn sigma_dot(p: [f64; 3], chi: [C64; 2]) -> [C64; 2] {
    let p3 = C64::new(p[2], 0.0);
    let minus = C64::new(p[0], -p[1]);
    let plus = C64::new(p[0], p[1]);
    [p3 * chi[0] + minus * chi[1], plus * chi[0] - p3 * chi[1]]
}

/// Unit-norm spinor for momentum `p` on the given energy branch.
///
/// Positive branch: `N(χ, σ·p χ/(E+m))`; negative branch: `N(−σ·p χ/(E+m), χ)`,
/// with `N = ((E+m)/2E)^{1/2}` and `χ` normalized first.
pub fn plane_wave_spinor(p: [f64; 3], m: f64, branch: Branch, chi: [C64; 2]) -> Result<[C64; 4]> {
    let e = (p.iter().map(|c| c * c).sum::<f64>() + m * m).sqrt();
    if e <= 0.0 {
        return Err(Error::Domain("massless spinor at zero momentum is undefined".into()));
    }
    let cn = (chi[0].norm_sqr() + chi[1].norm_sqr()).sqrt();
    if cn == 0.0 {
        return Err(Error::Domain("two-spinor must be nonzero".into()));
    }
    let chi = [chi[0] / cn, chi[1] / cn];
    let n = ((e + m) / (2.0 * e)).sqrt();
    let s = sigma_dot(p, chi).map(|z| z / (e + m));
    Ok(match branch {
        Branch::Positive => [chi[0] * n, chi[1] * n, s[0] * n, s[1] * n],
        Branch::Negative => [-s[0] * n, -s[1] * n, chi[0] * n, chi[1] * n],
    })
}

/// Dirac Hamiltonian `α·p + βm` applied to a spinor.
pub fn hamiltonian(p: [f64; 3], m: f64, u: [C64; 4]) -> [C64; 4] {
    let top = sigma_dot(p, [u[2], u[3]]);
    let bot = sigma_dot(p, [u[0], u[1]]);
    [top[0] + u[0] * m, top[1] + u[1] * m, bot[0] - u[2] * m, bot[1] - u[3] * m]
}

/// Change to the chiral representation, `U = (1/√2)[[I, −I], [I, I]]`.
pub fn dirac_to_weyl(u: &[C64]) -> [C64; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [(u[0] - u[2]) * s, (u[1] - u[3]) * s, (u[0] + u[2]) * s, (u[1] + u[3]) * s]
}
