//! Cascade transport of one incident ion and all of its recoils.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kinematics::{rotate_cs, CmToLab, IonState, Vec3};
use super::scattering::{screening_length, ScatteringTable};
use super::stopping::material_coefficient;
use super::CutoffRule;
use crate::constants::COULOMB_E2;
use crate::error::{invalid, Result};
use crate::target::{ElementSpec, TargetStack};

/// Index into [`Engine::species`].
pub type SpeciesId = usize;

#[derive(Debug, Clone)]
struct RegionModel {
    /// Mean free path N^(-1/3) (nm).
    free_path: f64,
    /// Maximum impact parameter (π N L)^(-1/2) (nm).
    max_impact: f64,
    /// Particles below this energy come to rest (eV).
    cutoff: f64,
    /// (species, cumulative atom fraction)
    targets: Vec<(SpeciesId, f64)>,
}

impl RegionModel {
    #[inline]
    fn pick(&self, r: f64) -> SpeciesId {
        for &(id, cum) in &self.targets {
            if r < cum {
                return id;
            }
        }
        self.targets[self.targets.len() - 1].0
    }
}

#[derive(Debug, Clone, Copy)]
struct PairModel {
    screening: f64,
    eps_per_ev: f64,
    lab: CmToLab,
}

/// A moving particle inside the engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub species: SpeciesId,
    pub energy: f64,
    pub position: Vec3,
    pub direction: Vec3,
    pub generation: u32,
}

/// Everything a history reports while it runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Collision {
        projectile: SpeciesId,
        target: SpeciesId,
        energy_in: f64,
        energy_out: f64,
        transfer: f64,
        depth: f64,
    },
    /// A target atom received more than its displacement energy.
    Recoil {
        species: SpeciesId,
        generation: u32,
        transfer: f64,
        energy: f64,
        depth: f64,
    },
    Vacancy {
        host: SpeciesId,
        depth: f64,
    },
    Stopped {
        species: SpeciesId,
        generation: u32,
        depth: f64,
        energy: f64,
    },
    /// Left through the surface moving outward.
    Exited {
        species: SpeciesId,
        generation: u32,
        energy: f64,
    },
    /// Electronic energy loss over one free flight.
    Electronic {
        loss: f64,
    },
    /// Energy left in the lattice: sub-threshold transfers and binding energy.
    Phonon {
        energy: f64,
    },
}

/// Receives the outcome of each step of a history.
pub trait EventSink {
    fn collision(&mut self, _projectile: &Particle, _target: SpeciesId, _energy_in: f64, _transfer: f64) {}
    fn recoil(&mut self, _recoil: &Particle, _transfer: f64) {}
    fn vacancy(&mut self, _host: SpeciesId, _depth: f64) {}
    fn stopped(&mut self, _particle: &Particle) {}
    fn exited(&mut self, _particle: &Particle) {}
    fn electronic(&mut self, _loss: f64) {}
    fn phonon(&mut self, _energy: f64) {}
}

impl EventSink for Vec<Event> {
    fn collision(&mut self, p: &Particle, target: SpeciesId, energy_in: f64, transfer: f64) {
        self.push(Event::Collision {
            projectile: p.species,
            target,
            energy_in,
            energy_out: p.energy,
            transfer,
            depth: p.position.z,
        });
    }
    fn recoil(&mut self, r: &Particle, transfer: f64) {
        self.push(Event::Recoil {
            species: r.species,
            generation: r.generation,
            transfer,
            energy: r.energy,
            depth: r.position.z,
        });
    }
    fn vacancy(&mut self, host: SpeciesId, depth: f64) {
        self.push(Event::Vacancy { host, depth });
    }
    fn stopped(&mut self, p: &Particle) {
        self.push(Event::Stopped {
            species: p.species,
            generation: p.generation,
            depth: p.position.z,
            energy: p.energy,
        });
    }
    fn exited(&mut self, p: &Particle) {
        self.push(Event::Exited {
            species: p.species,
            generation: p.generation,
            energy: p.energy,
        });
    }
    fn electronic(&mut self, loss: f64) {
        self.push(Event::Electronic { loss });
    }
    fn phonon(&mut self, energy: f64) {
        self.push(Event::Phonon { energy });
    }
}

/// Compiled, read-only transport model for one target stack.
#[derive(Debug, Clone)]
pub struct Engine {
    species: Vec<ElementSpec>,
    regions: Vec<RegionModel>,
    boundaries: Vec<f64>,
    pairs: Vec<PairModel>,
    /// Electronic stopping coefficient, `[region * n_species + projectile]`.
    stopping: Vec<f64>,
    table: &'static ScatteringTable,
}

impl Engine {
    /// Compiles `stack` for transport of `ion` and every species in the stack.
    pub fn new(stack: &TargetStack, ion: &ElementSpec, cutoff: &CutoffRule) -> Result<Self> {
        let mut species = vec![ion.clone()];
        for e in stack.elements() {
            if e.symbol == ion.symbol {
                // the stack's definition wins for shared species
                species[0] = e;
            } else {
                species.push(e);
            }
        }
        let id_of = |symbol: &str| species.iter().position(|s| s.symbol == symbol).unwrap();
        let n = species.len();

        let mut regions = Vec::with_capacity(stack.region_count());
        let mut stopping = Vec::with_capacity(stack.region_count() * n);
        for r in 0..stack.region_count() {
            let m = stack.material(r);
            let density = m.atom_density();
            if !(density > 0.0) {
                return Err(invalid("density", format!("material `{}` is empty", m.name)));
            }
            let free_path = density.powf(-1.0 / 3.0);
            let max_impact = (PI * density * free_path).powf(-0.5);
            let mut cum = 0.0;
            let targets = m
                .composition
                .iter()
                .map(|c| {
                    cum += c.number_density / density;
                    (id_of(&c.element.symbol), cum)
                })
                .collect();
            regions.push(RegionModel {
                free_path,
                max_impact,
                cutoff: cutoff.energy_for(m),
                targets,
            });
            stopping.extend(species.iter().map(|s| material_coefficient(s, m)));
        }

        let mut pairs = Vec::with_capacity(n * n);
        for p in &species {
            for t in &species {
                let a = screening_length(p.z, t.z);
                pairs.push(PairModel {
                    screening: a,
                    eps_per_ev: a * t.mass / ((p.z * t.z) as f64 * COULOMB_E2 * (p.mass + t.mass)),
                    lab: CmToLab::new(p.mass, t.mass),
                });
            }
        }

        Ok(Self {
            species,
            regions,
            boundaries: stack.boundaries().to_vec(),
            pairs,
            stopping,
            table: ScatteringTable::shared(),
        })
    }

    pub fn species(&self) -> &[ElementSpec] {
        &self.species
    }

    /// Id of the incident species.
    pub fn ion_species(&self) -> SpeciesId {
        0
    }

    pub fn species_id(&self, symbol: &str) -> Option<SpeciesId> {
        self.species.iter().position(|s| s.symbol == symbol)
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    /// Region index at `depth`; the boundary belongs to the deeper region.
    #[inline]
    pub fn region_of(&self, depth: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= depth)
    }

    /// Energy below which particles stop in `region` (eV).
    pub fn cutoff(&self, region: usize) -> f64 {
        self.regions[region].cutoff
    }

    pub fn particle(&self, ion: &IonState) -> Result<Particle> {
        ion.validate()?;
        let species = self
            .species_id(&ion.species.symbol)
            .ok_or_else(|| invalid("species", format!("{} not in engine", ion.species.symbol)))?;
        Ok(Particle {
            species,
            energy: ion.energy,
            position: ion.position,
            direction: ion.direction,
            generation: ion.generation,
        })
    }

    /// Follows `primary` and every recoil it sets in motion.
    pub fn run_history<R: Rng, S: EventSink>(&self, primary: Particle, rng: &mut R, sink: &mut S) {
        let mut pending = vec![(primary, true)];
        while let Some((p, random_first)) = pending.pop() {
            self.follow(p, random_first, &mut pending, rng, sink);
        }
    }

    fn follow<R: Rng, S: EventSink>(
        &self,
        mut p: Particle,
        random_first_flight: bool,
        pending: &mut Vec<(Particle, bool)>,
        rng: &mut R,
        sink: &mut S,
    ) {
        let n = self.species.len();
        let mut region = self.region_of(p.position.z.max(0.0));
        if p.energy < self.regions[region].cutoff {
            sink.stopped(&p);
            return;
        }
        let mut first = random_first_flight;
        loop {
            let model = &self.regions[region];
            let step = if first {
                model.free_path * rng.random::<f64>()
            } else {
                model.free_path
            };
            first = false;

            let loss = (self.stopping[region * n + p.species] * p.energy.sqrt() * step).min(p.energy);
            p.energy -= loss;
            sink.electronic(loss);
            p.position = p.position.add(p.direction.scale(step));
            if p.position.z < 0.0 {
                sink.exited(&p);
                return;
            }
            region = self.region_of(p.position.z);
            let model = &self.regions[region];
            if p.energy < model.cutoff {
                sink.stopped(&p);
                return;
            }

            let target = model.pick(rng.random::<f64>());
            let impact = model.max_impact * rng.random::<f64>().sqrt();
            let (cos_az, sin_az) = random_azimuth(rng);
            let pair = &self.pairs[p.species * n + target];
            let theta = self
                .table
                .theta(pair.eps_per_ev * p.energy, impact / pair.screening);
            let (sin_half, cos_half) = (0.5 * theta).sin_cos();
            let energy_in = p.energy;
            let transfer = pair.lab.energy_transfer_half(energy_in, sin_half);
            p.energy = energy_in - transfer;
            sink.collision(&p, target, energy_in, transfer);

            let host = &self.species[target];
            if transfer > host.displacement_energy {
                let energy = (transfer - host.lattice_binding).max(0.0);
                sink.phonon(transfer - energy);
                sink.vacancy(target, p.position.z);
                // recoil leaves at (π - θ)/2 on the opposite side
                let recoil = Particle {
                    species: target,
                    energy,
                    position: p.position,
                    direction: rotate_cs(p.direction, sin_half, cos_half, -cos_az, -sin_az),
                    generation: p.generation + 1,
                };
                sink.recoil(&recoil, transfer);
                pending.push((recoil, false));
            } else {
                sink.phonon(transfer);
            }
            let (cos_psi, sin_psi) = pair.lab.projectile_cs(sin_half, cos_half);
            p.direction = rotate_cs(p.direction, cos_psi, sin_psi, cos_az, sin_az);

            if p.energy < model.cutoff {
                sink.stopped(&p);
                return;
            }
        }
    }
}

/// (cos φ, sin φ) of a uniform azimuth, from a uniform point in the unit disc.
#[inline]
fn random_azimuth<R: Rng>(rng: &mut R) -> (f64, f64) {
    loop {
        let u = 2.0 * rng.random::<f64>() - 1.0;
        let v = 2.0 * rng.random::<f64>() - 1.0;
        let r2 = u * u + v * v;
        if r2 > 1e-12 && r2 <= 1.0 {
            return ((u * u - v * v) / r2, 2.0 * u * v / r2);
        }
    }
}

/// Runs one full cascade and returns its event log.
pub fn transport_history<R: Rng>(
    ion: &IonState,
    stack: &TargetStack,
    cutoff: &CutoffRule,
    rng: &mut R,
) -> Result<HistoryLog> {
    if ion.position.z != 0.0 || ion.direction.z <= 0.0 {
        return Err(invalid("ion", "must start at the surface moving inward"));
    }
    let engine = Engine::new(stack, &ion.species, cutoff)?;
    let mut events = Vec::new();
    engine.run_history(engine.particle(ion)?, rng, &mut events);
    Ok(HistoryLog {
        species: engine.species().iter().map(|s| s.symbol.clone()).collect(),
        events,
    })
}

/// Event log of a single history; species ids index `species`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryLog {
    pub species: Vec<String>,
    pub events: Vec<Event>,
}

impl HistoryLog {
    pub fn species_id(&self, symbol: &str) -> Option<SpeciesId> {
        self.species.iter().position(|s| s == symbol)
    }

    /// Final depths of stopped atoms of `symbol`.
    pub fn stopped_depths(&self, symbol: &str) -> Vec<f64> {
        let Some(id) = self.species_id(symbol) else {
            return Vec::new();
        };
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Stopped { species, depth, .. } if *species == id => Some(*depth),
                _ => None,
            })
            .collect()
    }
}
