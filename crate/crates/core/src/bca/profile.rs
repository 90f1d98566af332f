//! Per-ion depth histograms of stopped atoms and vacancies.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::transport::{Engine, EventSink, Particle, SpeciesId};
use super::SimConfig;
use crate::error::Result;

/// Uniform edges from 0 to `max_depth` merged with the layer boundaries.
pub fn bin_edges(bin_width: f64, max_depth: f64, boundaries: &[f64]) -> Vec<f64> {
    let mut edges: Vec<f64> = (0..)
        .map(|k| k as f64 * bin_width)
        .take_while(|&z| z < max_depth - 1e-9 * bin_width)
        .collect();
    edges.extend(boundaries.iter().copied().filter(|&b| b < max_depth));
    edges.push(max_depth);
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * bin_width);
    edges
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Moments {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, z: f64) {
        self.count += 1;
        self.sum += z;
        self.sum_sq += z * z;
    }

    fn merge(&mut self, o: &Moments) {
        self.count += o.count;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn stats(&self) -> DepthStats {
        let n = self.count as f64;
        if self.count == 0 {
            return DepthStats::default();
        }
        let mean = self.sum / n;
        let var = if self.count > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        DepthStats {
            count: self.count,
            mean_nm: mean,
            std_nm: var.sqrt(),
        }
    }
}

/// Accumulates a contiguous block of histories. Integer tallies merge
/// exactly; floating sums are merged in block order by the caller.
#[derive(Debug, Clone)]
pub(crate) struct Tally<'a> {
    engine: &'a Engine,
    edges: &'a [f64],
    n_regions: usize,
    n_bins: usize,
    stopped: Vec<u64>,
    vacancies: Vec<u64>,
    stopped_beyond: Vec<u64>,
    vacancies_beyond: Vec<u64>,
    exited: Vec<u64>,
    moments: Vec<Moments>,
    region_sq: Vec<u64>,
    history: Vec<u64>,
    primary: Moments,
    primary_exited: u64,
    primary_beyond: u64,
    electronic: f64,
    nuclear: f64,
    exited_energy: f64,
}

impl<'a> Tally<'a> {
    pub(crate) fn new(engine: &'a Engine, edges: &'a [f64]) -> Self {
        let n_species = engine.species().len();
        let n_regions = engine.region_count();
        let n_bins = edges.len() - 1;
        Self {
            engine,
            edges,
            n_regions,
            n_bins,
            stopped: vec![0; n_species * n_bins],
            vacancies: vec![0; n_species * n_bins],
            stopped_beyond: vec![0; n_species],
            vacancies_beyond: vec![0; n_species],
            exited: vec![0; n_species],
            moments: vec![Moments::default(); n_species * n_regions],
            region_sq: vec![0; n_species * n_regions],
            history: vec![0; n_species * n_regions],
            primary: Moments::default(),
            primary_exited: 0,
            primary_beyond: 0,
            electronic: 0.0,
            nuclear: 0.0,
            exited_energy: 0.0,
        }
    }

    fn bin(&self, z: f64) -> Option<usize> {
        if z >= self.edges[self.n_bins] {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= z).saturating_sub(1))
    }

    /// Closes the current history; per-history counts feed the variance.
    pub(crate) fn end_history(&mut self) {
        for (sq, n) in self.region_sq.iter_mut().zip(self.history.iter_mut()) {
            *sq += *n * *n;
            *n = 0;
        }
    }

    pub(crate) fn merge(&mut self, o: &Tally<'_>) {
        fn add(a: &mut [u64], b: &[u64]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        add(&mut self.stopped, &o.stopped);
        add(&mut self.vacancies, &o.vacancies);
        add(&mut self.stopped_beyond, &o.stopped_beyond);
        add(&mut self.vacancies_beyond, &o.vacancies_beyond);
        add(&mut self.exited, &o.exited);
        add(&mut self.region_sq, &o.region_sq);
        for (a, b) in self.moments.iter_mut().zip(&o.moments) {
            a.merge(b);
        }
        self.primary.merge(&o.primary);
        self.primary_exited += o.primary_exited;
        self.primary_beyond += o.primary_beyond;
        self.electronic += o.electronic;
        self.nuclear += o.nuclear;
        self.exited_energy += o.exited_energy;
    }

    pub(crate) fn finish(self, config: &SimConfig) -> DepthProfileSet {
        let ions = config.ion_count as f64;
        let engine = self.engine;
        let names: Vec<String> = engine.species().iter().map(|s| s.symbol.clone()).collect();
        let per_ion = |v: &[u64]| v.iter().map(|&c| c as f64 / ions).collect::<Vec<_>>();
        let mut stopped = BTreeMap::new();
        let mut vacancies = BTreeMap::new();
        let mut backscattered = BTreeMap::new();
        let mut transmitted = BTreeMap::new();
        let mut vacancies_beyond = BTreeMap::new();
        let mut regions = BTreeMap::new();
        let mut depth_stats = BTreeMap::new();
        for (s, name) in names.iter().enumerate() {
            let range = s * self.n_bins..(s + 1) * self.n_bins;
            stopped.insert(name.clone(), per_ion(&self.stopped[range.clone()]));
            vacancies.insert(name.clone(), per_ion(&self.vacancies[range]));
            backscattered.insert(name.clone(), self.exited[s] as f64 / ions);
            transmitted.insert(name.clone(), self.stopped_beyond[s] as f64 / ions);
            vacancies_beyond.insert(name.clone(), self.vacancies_beyond[s] as f64 / ions);
            let mut all = Moments::default();
            let tallies = (0..self.n_regions)
                .map(|r| {
                    let k = s * self.n_regions + r;
                    let m = &self.moments[k];
                    all.merge(m);
                    let mean = m.count as f64 / ions;
                    let second = self.region_sq[k] as f64 / ions;
                    let var = (second - mean * mean).max(0.0) * ions / (ions - 1.0).max(1.0);
                    RegionTally {
                        per_ion: mean,
                        std_error: (var / ions).sqrt(),
                        depth: m.stats(),
                    }
                })
                .collect::<Vec<_>>();
            regions.insert(name.clone(), tallies);
            depth_stats.insert(name.clone(), all.stats());
        }
        let primary_stopped = self.primary.count;
        DepthProfileSet {
            ion: names[engine.ion_species()].clone(),
            ion_count: config.ion_count,
            seed: config.seed,
            bin_edges: self.edges.to_vec(),
            region_boundaries: config.target_boundaries(),
            region_materials: config.region_materials(),
            species: names,
            stopped,
            vacancies,
            backscattered,
            transmitted,
            vacancies_beyond,
            regions,
            depth_stats,
            primary: PrimaryTally {
                stopped: (primary_stopped - self.primary_beyond) as f64 / ions,
                backscattered: self.primary_exited as f64 / ions,
                transmitted: self.primary_beyond as f64 / ions,
                depth: self.primary.stats(),
            },
            energy: EnergyPartition {
                electronic_ev: self.electronic / ions,
                nuclear_ev: self.nuclear / ions,
                exited_ev: self.exited_energy / ions,
            },
            config: config.clone(),
        }
    }
}

impl EventSink for Tally<'_> {
    fn vacancy(&mut self, host: SpeciesId, depth: f64) {
        match self.bin(depth) {
            Some(b) => self.vacancies[host * self.n_bins + b] += 1,
            None => self.vacancies_beyond[host] += 1,
        }
    }

    fn stopped(&mut self, p: &Particle) {
        let z = p.position.z;
        match self.bin(z) {
            Some(b) => self.stopped[p.species * self.n_bins + b] += 1,
            None => self.stopped_beyond[p.species] += 1,
        }
        let k = p.species * self.n_regions + self.engine.region_of(z);
        self.moments[k].push(z);
        self.history[k] += 1;
        self.nuclear += p.energy;
        if p.generation == 0 {
            self.primary.push(z);
            if z >= self.edges[self.n_bins] {
                self.primary_beyond += 1;
            }
        }
    }

    fn exited(&mut self, p: &Particle) {
        self.exited[p.species] += 1;
        self.exited_energy += p.energy;
        if p.generation == 0 {
            self.primary_exited += 1;
        }
    }

    fn electronic(&mut self, loss: f64) {
        self.electronic += loss;
    }

    fn phonon(&mut self, energy: f64) {
        self.nuclear += energy;
    }
}

/// Mean and spread of final depths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DepthStats {
    pub count: u64,
    pub mean_nm: f64,
    pub std_nm: f64,
}

/// Atoms of one species at rest in one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionTally {
    pub per_ion: f64,
    /// Standard error of `per_ion` from the history-to-history spread.
    pub std_error: f64,
    pub depth: DepthStats,
}

/// Fate of the incident ions, as fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimaryTally {
    /// At rest inside the histogram range.
    pub stopped: f64,
    pub backscattered: f64,
    /// At rest deeper than the histogram range.
    pub transmitted: f64,
    pub depth: DepthStats,
}

/// Where the incident energy went, per ion (eV).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyPartition {
    pub electronic_ev: f64,
    /// Lattice deposits, binding energy and the residue of stopped particles.
    pub nuclear_ev: f64,
    /// Carried out through the surface.
    pub exited_ev: f64,
}

/// Result of a simulation, normalized per incident ion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthProfileSet {
    pub ion: String,
    pub ion_count: u64,
    pub seed: u64,
    pub bin_edges: Vec<f64>,
    pub region_boundaries: Vec<f64>,
    pub region_materials: Vec<String>,
    pub species: Vec<String>,
    /// Atoms per ion per bin.
    pub stopped: BTreeMap<String, Vec<f64>>,
    /// Vacancies per ion per bin, keyed by host species.
    pub vacancies: BTreeMap<String, Vec<f64>>,
    pub backscattered: BTreeMap<String, f64>,
    /// At rest past the last bin edge.
    pub transmitted: BTreeMap<String, f64>,
    pub vacancies_beyond: BTreeMap<String, f64>,
    /// Indexed by region: films in order, then the substrate.
    pub regions: BTreeMap<String, Vec<RegionTally>>,
    /// Over all stopped atoms of each species, including past the last bin.
    pub depth_stats: BTreeMap<String, DepthStats>,
    pub primary: PrimaryTally,
    pub energy: EnergyPartition,
    pub config: SimConfig,
}

impl DepthProfileSet {
    pub fn bin_count(&self) -> usize {
        self.bin_edges.len() - 1
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn bin_widths(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn substrate_index(&self) -> usize {
        self.region_boundaries.len()
    }

    /// Depth of the film/substrate interface (nm).
    pub fn substrate_top(&self) -> f64 {
        self.region_boundaries.last().copied().unwrap_or(0.0)
    }

    /// Atoms of `species` per ion at rest in `region` (0.0 if absent).
    pub fn region_tally(&self, species: &str, region: usize) -> Option<&RegionTally> {
        self.regions.get(species).and_then(|r| r.get(region))
    }

    /// Atoms of `species` per ion at rest in the substrate, with standard error.
    pub fn substrate_count(&self, species: &str) -> (f64, f64) {
        self.region_tally(species, self.substrate_index())
            .map(|t| (t.per_ion, t.std_error))
            .unwrap_or((0.0, 0.0))
    }

    /// Σ of stopped bins plus the past-range tally.
    pub fn stopped_total(&self, species: &str) -> f64 {
        self.stopped.get(species).map(|v| v.iter().sum::<f64>()).unwrap_or(0.0)
            + self.transmitted.get(species).copied().unwrap_or(0.0)
    }

    /// Density profile of `species` in atoms·ion⁻¹·nm⁻¹.
    pub fn stopped_density(&self, species: &str) -> Option<Vec<f64>> {
        let v = self.stopped.get(species)?;
        Some(v.iter().zip(self.bin_widths()).map(|(c, w)| c / w).collect())
    }

    /// Writes the CSV table: `depth_nm` (bin centre), then `stopped_<X>` and
    /// `vacancies_<X>` for every species, in atoms·ion⁻¹·nm⁻¹.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["depth_nm".to_string()];
        header.extend(self.species.iter().map(|s| format!("stopped_{s}")));
        header.extend(self.species.iter().map(|s| format!("vacancies_{s}")));
        w.write_record(&header)?;
        let widths = self.bin_widths();
        for (b, centre) in self.bin_centers().into_iter().enumerate() {
            let mut row = vec![format!("{centre}")];
            for s in &self.species {
                row.push(format!("{}", self.stopped[s][b] / widths[b]));
            }
            for s in &self.species {
                row.push(format!("{}", self.vacancies[s][b] / widths[b]));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_include_boundaries() {
        let e = bin_edges(1.0, 5.0, &[2.5]);
        assert_eq!(e, vec![0.0, 1.0, 2.0, 2.5, 3.0, 4.0, 5.0]);
        let e = bin_edges(2.0, 5.0, &[4.0]);
        assert_eq!(e, vec![0.0, 2.0, 4.0, 5.0]);
    }

    #[test]
    fn moments() {
        let mut m = Moments::default();
        for z in [1.0, 2.0, 3.0, 4.0] {
            m.push(z);
        }
        let s = m.stats();
        assert_eq!(s.count, 4);
        assert!((s.mean_nm - 2.5).abs() < 1e-15);
        assert!((s.std_nm - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
