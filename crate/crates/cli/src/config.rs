//! Experiment configuration files.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sek_core::fock::{EnergyConvention, Representation};
use sek_core::lorentz::Boost;
use sek_core::modes::{Coefficients, ModeSet, Normalization, Quadrature};
use sek_core::particle::{Cutoff, PacketSpec};
use sek_core::sampler::SessionConfig;
use sek_core::spacetime::{Region, SpacetimeBox};

/// A parsed config file: the experiment plus its output directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Config {
    /// Strict parse: `out` is peeled off, everything else must match the
    /// schema of the selected command exactly.
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        let mut value: Value = serde_json::from_str(text)?;
        let out = match value.as_object_mut().and_then(|m| m.remove("out")) {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s),
            Some(other) => return Err(serde::de::Error::custom(format!("`out` must be a string, got {other}"))),
        };
        let experiment = serde_json::from_value(value)?;
        Ok(Config { experiment, out, threads: None })
    }
}

/// Mode lattice without packet coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSetSpec {
    pub mass: f64,
    #[serde(rename = "box")]
    pub bx: SpacetimeBox,
    pub cutoff: Cutoff,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub commensurate_time: bool,
}

impl ModeSetSpec {
    pub fn mode_set(&self) -> sek_core::Result<ModeSet> {
        Ok(ModeSet::new(self.mass, self.bx, self.cutoff.per_axis())?
            .with_normalization(self.normalization)
            .with_commensurate_time(self.commensurate_time))
    }
}

/// Cell-aligned region on a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionSpec {
    Whole,
    /// Half-open index ranges per axis.
    IndexBrick {
        lo: [usize; 4],
        hi: [usize; 4],
    },
    /// Physical bounds; must fall on cell faces.
    PhysicalBrick {
        lo: [f64; 4],
        hi: [f64; 4],
    },
    /// Each cell kept with probability `fraction`.
    Random {
        fraction: f64,
        seed: u64,
    },
}

impl RegionSpec {
    pub fn build(&self, bx: &SpacetimeBox) -> sek_core::Result<Region> {
        match self {
            RegionSpec::Whole => Ok(Region::whole(bx)),
            RegionSpec::IndexBrick { lo, hi } => Region::index_brick(bx, *lo, *hi),
            RegionSpec::PhysicalBrick { lo, hi } => Region::physical_brick(bx, *lo, *hi),
            RegionSpec::Random { fraction, seed } => {
                if !(0.0..=1.0).contains(fraction) {
                    return Err(sek_core::Error::Domain(format!("region fraction {fraction} outside [0, 1]")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Region::from_mask(bx, (0..bx.cell_count()).map(|_| rng.random::<f64>() < *fraction).collect())
            }
        }
    }
}

/// Named region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedRegion {
    pub label: String,
    pub region: RegionSpec,
}

/// Regions for the N = 1 comparison: explicit, or `count` random masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegionSuite {
    Explicit(Vec<NamedRegion>),
    Random { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    #[serde(rename = "box")]
    pub bx: SpacetimeBox,
    pub sigma: [f64; 4],
    #[serde(default)]
    pub carrier: [f64; 4],
}

fn default_caps() -> u32 {
    1
}

fn default_levels() -> u32 {
    2
}

fn default_tolerance() -> f64 {
    1e-3
}

fn default_alpha() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Density {
        packet: PacketSpec,
    },
    Marginals {
        packet: PacketSpec,
    },
    Momentum {
        packet: PacketSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<SessionConfig>,
    },
    BoostCheck {
        packet: PacketSpec,
        boost: Boost,
        /// Physical brick, so it stays cell-aligned under refinement.
        region: RegionSpec,
        /// Number of grid doublings along the boosted axes.
        #[serde(default = "default_levels")]
        levels: u32,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    Sample {
        packet: PacketSpec,
        session: SessionConfig,
        /// Density the histogram is tested against; defaults to the packet's.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<PacketSpec>,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Uncertainty {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        packet: Option<PacketSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gaussian: Option<GaussianSpec>,
    },
    FockEnergy {
        modes: ModeSetSpec,
        convention: EnergyConvention,
        #[serde(default = "default_caps")]
        n_max: u32,
        #[serde(default = "default_caps")]
        total_max: u32,
    },
    FockRegion {
        modes: ModeSetSpec,
        region: RegionSpec,
        #[serde(default = "default_caps")]
        n_max: u32,
        #[serde(default = "default_caps")]
        total_max: u32,
        #[serde(default)]
        quadrature: Quadrature,
        /// Optional one-particle state to compare with the packet probability.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        one_particle: Option<Coefficients>,
    },
    FockCells {
        #[serde(rename = "box")]
        bx: SpacetimeBox,
        region: RegionSpec,
        #[serde(default = "default_caps")]
        n_max: u32,
        #[serde(default = "default_caps")]
        total_max: u32,
    },
    FieldEquation {
        modes: ModeSetSpec,
        representation: Representation,
        #[serde(default = "default_caps")]
        n_max: u32,
        #[serde(default = "default_caps")]
        total_max: u32,
    },
    N1Equivalence {
        packet: PacketSpec,
        regions: RegionSuite,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Density { .. } => "density",
            Experiment::Marginals { .. } => "marginals",
            Experiment::Momentum { .. } => "momentum",
            Experiment::BoostCheck { .. } => "boost-check",
            Experiment::Sample { .. } => "sample",
            Experiment::Uncertainty { .. } => "uncertainty",
            Experiment::FockEnergy { .. } => "fock-energy",
            Experiment::FockRegion { .. } => "fock-region",
            Experiment::FockCells { .. } => "fock-cells",
            Experiment::FieldEquation { .. } => "field-equation",
            Experiment::N1Equivalence { .. } => "n1-equivalence",
        }
    }

    /// Replaces every seed in the config.
    pub fn override_seed(&mut self, seed: u64) {
        let region_seed = |r: &mut RegionSpec| {
            if let RegionSpec::Random { seed: s, .. } = r {
                *s = seed;
            }
        };
        match self {
            Experiment::Momentum { session: Some(s), .. } | Experiment::Sample { session: s, .. } => s.seed = seed,
            Experiment::FockRegion { region, .. } | Experiment::FockCells { region, .. } => region_seed(region),
            Experiment::N1Equivalence { regions, .. } => match regions {
                RegionSuite::Random { seed: s, .. } => *s = seed,
                RegionSuite::Explicit(list) => list.iter_mut().for_each(|r| region_seed(&mut r.region)),
            },
            _ => {}
        }
    }
}
