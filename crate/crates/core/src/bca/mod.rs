//! Binary-collision Monte Carlo transport through a layered target.

pub mod kinematics;
pub mod profile;
pub mod scattering;
pub mod stopping;
pub mod transport;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::target::{ElementSpec, Material, TargetConfig, TargetStack};
use kinematics::Vec3;
use profile::{bin_edges, Tally};
use transport::{Engine, Particle};

pub use kinematics::{binary_collision, CollisionOutcome, IonState};
pub use profile::{DepthProfileSet, DepthStats, EnergyPartition, PrimaryTally, RegionTally};
pub use scattering::scatter;
pub use stopping::electronic_stopping;
pub use transport::{transport_history, Event, HistoryLog};

/// Histories per reduction block. Fixed so that the reduction order never
/// depends on the number of workers.
const BLOCK: u64 = 512;

/// Energy below which a particle is considered at rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CutoffRule {
    /// The same energy for every species and material (eV).
    Fixed { energy_ev: f64 },
    /// The smallest displacement energy among the host material's species,
    /// but never below `floor_ev`.
    MinDisplacement { floor_ev: f64 },
}

impl Default for CutoffRule {
    fn default() -> Self {
        CutoffRule::Fixed { energy_ev: 3.0 }
    }
}

impl CutoffRule {
    pub fn energy_for(&self, material: &Material) -> f64 {
        match *self {
            CutoffRule::Fixed { energy_ev } => energy_ev,
            CutoffRule::MinDisplacement { floor_ev } => material.min_displacement_energy().max(floor_ev),
        }
    }

    fn validate(&self) -> Result<()> {
        let (name, e) = match *self {
            CutoffRule::Fixed { energy_ev } => ("cutoff.energy_ev", energy_ev),
            CutoffRule::MinDisplacement { floor_ev } => ("cutoff.floor_ev", floor_ev),
        };
        if !(e > 0.0 && e.is_finite()) {
            return Err(invalid(name, format!("{e}")));
        }
        Ok(())
    }
}

/// Incident beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonConfig {
    pub species: String,
    pub energy_kev: f64,
    /// From the surface normal.
    #[serde(default)]
    pub angle_deg: f64,
}

fn default_bin_width() -> f64 {
    1.0
}

fn default_max_depth() -> f64 {
    100.0
}

/// Everything needed for a reproducible run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub target: TargetConfig,
    pub ion: IonConfig,
    pub ion_count: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bin_width")]
    pub bin_width_nm: f64,
    #[serde(default = "default_max_depth")]
    pub max_depth_nm: f64,
    #[serde(default)]
    pub cutoff: CutoffRule,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn stack(&self) -> Result<TargetStack> {
        self.target.build()
    }

    pub fn ion_species(&self) -> Result<ElementSpec> {
        Ok(self.target.element_table()?.get(&self.ion.species)?.clone())
    }

    pub fn validate(&self) -> Result<TargetStack> {
        if self.ion_count < 1 {
            return Err(invalid("ion_count", "need at least one history"));
        }
        if !(self.bin_width_nm > 0.0 && self.bin_width_nm.is_finite()) {
            return Err(invalid("bin_width_nm", format!("{}", self.bin_width_nm)));
        }
        if !(self.ion.energy_kev > 0.0 && self.ion.energy_kev.is_finite()) {
            return Err(invalid("ion.energy_kev", format!("{}", self.ion.energy_kev)));
        }
        if !(self.ion.angle_deg >= 0.0 && self.ion.angle_deg < 90.0) {
            return Err(invalid("ion.angle_deg", "must lie in [0, 90)"));
        }
        self.cutoff.validate()?;
        let stack = self.stack()?;
        if !(self.max_depth_nm > stack.substrate_top() && self.max_depth_nm.is_finite()) {
            return Err(invalid(
                "max_depth_nm",
                format!("{} does not extend past the last film at {}", self.max_depth_nm, stack.substrate_top()),
            ));
        }
        Ok(stack)
    }

    /// Copy with the incident energy replaced.
    pub fn with_energy_kev(&self, energy_kev: f64) -> Self {
        let mut c = self.clone();
        c.ion.energy_kev = energy_kev;
        c
    }

    /// Copy with the top film resized; zero removes it.
    pub fn with_film_thickness(&self, thickness_nm: f64) -> Result<Self> {
        let mut c = self.clone();
        if c.target.layers.is_empty() {
            return Err(invalid("thickness", "target has no film layer"));
        }
        if thickness_nm == 0.0 {
            c.target.layers.remove(0);
        } else {
            c.target.layers[0].thickness_nm = thickness_nm;
        }
        Ok(c)
    }

    pub(crate) fn target_boundaries(&self) -> Vec<f64> {
        let mut depth = 0.0;
        self.target
            .layers
            .iter()
            .map(|l| {
                depth += l.thickness_nm;
                depth
            })
            .collect()
    }

    pub(crate) fn region_materials(&self) -> Vec<String> {
        self.target
            .layers
            .iter()
            .map(|l| l.material.clone())
            .chain([self.target.substrate.clone()])
            .collect()
    }
}

/// The random stream for one history: independent of every other history
/// and of how histories are distributed over workers.
pub fn history_rng(seed: u64, history: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(history);
    rng
}

/// Runs `config.ion_count` histories on the current rayon pool.
pub fn run_simulation(config: &SimConfig) -> Result<DepthProfileSet> {
    let stack = config.validate()?;
    let ion = config.ion_species()?;
    let engine = Engine::new(&stack, &ion, &config.cutoff)?;
    let edges = bin_edges(config.bin_width_nm, config.max_depth_nm, stack.boundaries());
    let angle = config.ion.angle_deg.to_radians();
    let primary = Particle {
        species: engine.ion_species(),
        energy: config.ion.energy_kev * 1e3,
        position: Vec3::new(0.0, 0.0, 0.0),
        direction: Vec3::new(angle.sin(), 0.0, angle.cos()),
        generation: 0,
    };

    let blocks = config.ion_count.div_ceil(BLOCK);
    let partial: Vec<Tally> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut tally = Tally::new(&engine, &edges);
            let end = ((b + 1) * BLOCK).min(config.ion_count);
            for history in b * BLOCK..end {
                let mut rng = history_rng(config.seed, history);
                engine.run_history(primary, &mut rng, &mut tally);
                tally.end_history();
            }
            tally
        })
        .collect();

    let mut total = Tally::new(&engine, &edges);
    for t in &partial {
        total.merge(t);
    }
    Ok(total.finish(config))
}

/// Runs on a dedicated pool of `threads` workers (0 picks the default).
pub fn run_simulation_with_threads(config: &SimConfig, threads: usize) -> Result<DepthProfileSet> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid("threads", e.to_string()))?;
    pool.install(|| run_simulation(config))
}
