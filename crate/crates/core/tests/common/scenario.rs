//! End-to-end synthetic yield scenario and its hand-computed oracle.
#![allow(dead_code)]

use recoilimp::bca::{run_simulation_with_threads, DepthProfileSet};
use recoilimp::fib::{fluence, BeamRecipe, FluenceEstimate};
use recoilimp::spectral::{synthetic, unmix, Spectrum, UnmixResult};
use recoilimp::yield_pipeline::{yield_report, YieldConfig, YieldReport, UM2_IN_CM2};

pub struct Scenario {
    pub profile: DepthProfileSet,
    pub fluence: FluenceEstimate,
    pub unmix: UnmixResult,
    pub config: YieldConfig,
}

pub fn recipe(passes: u32) -> BeamRecipe {
    BeamRecipe {
        name: "S".into(),
        current_na: 0.024,
        dwell_us: 1.0,
        passes,
        overlap: 0.5,
        diameter_nm: 10.5,
        diameter_sigma_nm: 0.505,
        charge_state: 1,
    }
}

pub fn mixture() -> Spectrum {
    let axis = synthetic::pl_axis();
    let nv = synthetic::nv_model(axis.clone()).unwrap();
    let siv = synthetic::siv_model(axis.clone()).unwrap();
    let irr = synthetic::irradiation_model(axis).unwrap();
    let s = nv.scaled(40.0).plus(&siv.scaled(120.0)).unwrap().plus(&irr.scaled(15.0)).unwrap();
    s.with_intensity(s.intensity().iter().map(|v| v + 2.0).collect()).unwrap()
}

pub fn run(ions: u64, threads: usize) -> Scenario {
    let profile = run_simulation_with_threads(&super::film_config("Si3N4", 2.5, 5.0, ions, 77), threads).unwrap();
    let axis = synthetic::pl_axis();
    let models = vec![
        ("NV".to_string(), synthetic::nv_model(axis.clone()).unwrap()),
        ("SiV".to_string(), synthetic::siv_model(axis.clone()).unwrap()),
        ("irradiation".to_string(), synthetic::irradiation_model(axis).unwrap()),
    ];
    let unmix = unmix(&mixture(), &models, (625.0, 792.0)).unwrap();
    Scenario {
        profile,
        fluence: fluence(&recipe(1)).unwrap(),
        unmix,
        config: YieldConfig::standard(UM2_IN_CM2, 1500.0, 800.0),
    }
}

impl Scenario {
    pub fn report(&self) -> YieldReport {
        yield_report("S", &self.profile, self.fluence, &self.unmix, &self.config).unwrap()
    }

    /// Spreadsheet-style recomputation from the raw columns: substrate bins
    /// plus the past-range count, times fluence, against PL / reference / area.
    pub fn oracle(&self) -> Vec<(&'static str, f64)> {
        let p = &self.profile;
        let top = p.region_boundaries.last().copied().unwrap_or(0.0);
        let column = |sp: &str| -> f64 {
            let bins: f64 = p.stopped[sp]
                .iter()
                .zip(&p.bin_edges)
                .filter(|(_, &lo)| lo >= top)
                .map(|(v, _)| *v)
                .sum();
            bins + p.transmitted[sp]
        };
        let area = 1e-8;
        let nv_pl = self.unmix.contributions["NV"] + self.unmix.background_integral;
        let siv_pl = self.unmix.contributions["SiV"];
        let nv = nv_pl / 1500.0 / area / (column("N") * self.fluence.value);
        let siv = siv_pl / 800.0 / area / (column("Si") * self.fluence.value);
        vec![("NV", nv), ("SiV", siv)]
    }
}
