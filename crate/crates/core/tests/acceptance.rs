//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use common::film_config;
use common::oracle::adaptive_scatter;
use common::scenario;
use recoilimp::bca::kinematics::Vec3;
use recoilimp::bca::*;
use recoilimp::fib::*;
use recoilimp::spectral::synthetic;
use recoilimp::spectral::*;
use recoilimp::target::ElementTable;

const HISTORIES: u64 = 100_000;
const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Simulation runs keyed by (film, thickness, energy), shared across criteria.
#[derive(Default)]
struct Runs {
    cache: BTreeMap<String, (DepthProfileSet, f64)>,
}

impl Runs {
    fn get(&mut self, formula: &str, thickness: f64, energy_kev: f64) -> &(DepthProfileSet, f64) {
        let key = format!("{formula}/{thickness}/{energy_kev}");
        self.cache.entry(key).or_insert_with(|| {
            let density = if formula == "SiO2" { 2.658 } else { 2.5 };
            let config = film_config(formula, density, thickness, HISTORIES, SEED).with_energy_kev(energy_kev);
            let start = Instant::now();
            let p = run_simulation_with_threads(&config, 1).expect("simulation");
            (p, start.elapsed().as_secs_f64())
        })
    }
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn round_sig(v: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits - 1 - v.abs().log10().floor() as i32);
    (v * scale).round() / scale
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let table = DiameterTable::from_json(&std::fs::read_to_string(data("beam_diameters.json")).unwrap()).unwrap();
    let recipes = read_recipes(File::open(data("recipes.csv")).unwrap(), Some(&table)).unwrap();
    let mut reported = csv::Reader::from_path(data("reported_fluence.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reported.records().map(|r| r.unwrap()).collect();
    let mut bad = Vec::new();
    for (r, row) in recipes.iter().zip(&rows) {
        let f = fluence(r).unwrap();
        let want: f64 = row[1].parse().unwrap();
        if round_sig(f.value, 3) != round_sig(want, 3) {
            bad.push(format!("{} {:.3e} vs {}", r.name, f.value, &row[1]));
        }
        if (f.relative_uncertainty() / (2.0 * r.diameter_sigma_nm / r.diameter_nm) - 1.0).abs() > 1e-12 {
            bad.push(format!("{} σ ratio", r.name));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = bad.is_empty() && rows.len() == 12 && recipes.len() == 12 && secs < 1.0;
    outcome(pass, format!("{} rows, {} mismatches {:?}, {:.3} s", rows.len(), bad.len(), bad, secs))
}

fn criterion_2(runs: &mut Runs) -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (formula, checks) in [
        ("SiO2", vec![("Si", 1.28, 2.38)]),
        ("Si3N4", vec![("Si", 1.53, 2.83), ("N", 1.53, 2.85)]),
    ] {
        let (p, secs) = runs.get(formula, 5.0, 30.0);
        pass &= *secs <= 60.0;
        for (sp, lo, hi) in checks {
            let (v, err) = p.substrate_count(sp);
            let rel = err / v;
            let ok = v >= lo && v <= hi && rel < 0.02;
            pass &= ok;
            lines.push(format!("{formula} {sp} {v:.3}/ion ±{:.2}% in [{lo}, {hi}]", 100.0 * rel));
        }
        lines.push(format!("{formula} {secs:.1} s"));
    }
    outcome(pass, lines.join("; "))
}

fn criterion_3(runs: &mut Runs) -> Outcome {
    let energies = [10.0, 30.0, 50.0, 70.0, 90.0];
    let depth: Vec<f64> = energies
        .iter()
        .map(|&e| runs.get("SiO2", 5.0, e).0.primary.depth.mean_nm)
        .collect();
    let a = depth.windows(2).all(|w| w[1] > w[0]);

    let thicknesses = [1.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
    let reach: Vec<f64> = thicknesses
        .iter()
        .map(|&t| runs.get("SiO2", t, 30.0).0.substrate_count("Ga").0)
        .collect();
    let b = reach.windows(2).all(|w| w[1] < w[0]);

    let spread: Vec<f64> = [1.0, 5.0, 30.0]
        .iter()
        .map(|&t| runs.get("SiO2", t, 30.0).0.depth_stats["Si"].std_nm)
        .collect();
    let c = spread[0] < spread[1] && spread[1] < spread[2];

    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    outcome(
        a && b && c,
        format!(
            "(a) {} Ga mean depth [{}] nm; (b) {} Ga/ion in diamond [{}]; (c) {} Si depth std [{}] nm",
            if a { "ok" } else { "FAIL" },
            fmt(&depth),
            if b { "ok" } else { "FAIL" },
            fmt(&reach),
            if c { "ok" } else { "FAIL" },
            fmt(&spread)
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0f64;
    let mut head_on = 0.0f64;
    let mut monotone = true;
    for i in 0..20 {
        let eps = 10f64.powf(-4.0 + 6.0 * i as f64 / 19.0);
        head_on = head_on.max((scatter(eps, 0.0).unwrap() - PI).abs());
        let mut prev = f64::INFINITY;
        for j in 0..20 {
            let b = 10.0 * j as f64 / 19.0;
            let fixed = scatter(eps, b).unwrap();
            let reference = adaptive_scatter(eps, b);
            worst = worst.max((fixed - reference).abs() / reference);
            monotone &= fixed < prev;
            prev = fixed;
        }
    }
    outcome(
        worst < 5e-3 && head_on < 1e-9 && monotone,
        format!("worst rel err {worst:.2e}, |θ(b=0) − π| {head_on:.1e}, monotone {monotone}"),
    )
}

fn criterion_5() -> Outcome {
    let elements = ElementTable::builtin();
    let species: Vec<_> = ["Ga", "Si", "O", "N", "C"].iter().map(|s| elements.get(s).unwrap().clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for _ in 0..1_000_000 {
        let p = &species[rng.random_range(0..species.len())];
        let t = &species[rng.random_range(0..species.len())];
        let ion = IonState {
            species: p.clone(),
            energy: 10f64.powf(1.0 + 4.0 * rng.random::<f64>()),
            position: Vec3::new(0.0, 0.0, 0.0),
            direction: Vec3::new(0.0, 0.0, 1.0),
            generation: 0,
        };
        let out = binary_collision(&ion, t, 0.2 * rng.random::<f64>(), 2.0 * PI * rng.random::<f64>()).unwrap();
        worst = worst.max((ion.energy - out.projectile_energy - out.energy_transfer).abs() / ion.energy);
    }
    let ga = elements.get("Ga").unwrap();
    let c = elements.get("C").unwrap();
    let ion = IonState {
        species: ga.clone(),
        energy: 30e3,
        position: Vec3::new(0.0, 0.0, 0.0),
        direction: Vec3::new(0.0, 0.0, 1.0),
        generation: 0,
    };
    let fraction = binary_collision(&ion, c, 0.0, 0.0).unwrap().energy_transfer / 30e3;
    outcome(
        worst <= 1e-9 && (fraction - 0.5015).abs() <= 1e-4,
        format!("closure worst {worst:.1e} over 1e6 collisions; head-on Ga→C fraction {fraction:.6}"),
    )
}

fn criterion_6() -> Outcome {
    let mut fits_seen = 0usize;
    let mut identity = true;
    let mut check = |fits: &[PeakFit]| {
        for f in fits {
            fits_seen += 1;
            identity &= f.fwhm > 0.0 && (f.area - lorentzian_area(f.height, f.fwhm)).abs() <= 1e-9 * f.area.abs();
        }
    };

    let axis = synthetic::pl_axis();
    let models = vec![
        ("NV".to_string(), synthetic::nv_model(axis.clone()).unwrap()),
        ("SiV".to_string(), synthetic::siv_model(axis.clone()).unwrap()),
        ("irradiation".to_string(), synthetic::irradiation_model(axis).unwrap()),
    ];
    let mix = models[0].1.scaled(0.3).plus(&models[1].1.scaled(0.6)).unwrap().plus(&models[2].1.scaled(0.1)).unwrap();
    let r = unmix(&mix, &models, (625.0, 792.0)).unwrap();
    let unmix_err = [("NV", 0.3), ("SiV", 0.6), ("irradiation", 0.1)]
        .iter()
        .map(|(k, v)| (r.weights[*k] - v).abs())
        .fold(0.0, f64::max);

    let clean = Spectrum::from_fn(AxisKind::WavelengthNm, Spectrum::linspace(630.0, 644.0, 281), |x| {
        let t = x - 637.0;
        lorentzian(x, 637.0, 1.2, 1000.0) + 50.0 + 2.0 * t - 0.3 * t * t
    })
    .unwrap();
    let noise = Normal::new(0.0, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let spec = PeakSpec {
        window: (634.0, 640.0),
        n_peaks: 1,
        background_degree: 2,
    };
    let trials = 200;
    let mut bias = 0.0;
    let mut covered = 0;
    for _ in 0..trials {
        let s = clean
            .with_intensity(clean.intensity().iter().map(|v| v + noise.sample(&mut rng)).collect())
            .unwrap();
        let f = fit_peak(&s, &spec).unwrap();
        check(&f);
        bias += f[0].center - 637.0;
        covered += usize::from((f[0].fwhm - 1.2).abs() <= 3.0 * f[0].sigma.fwhm);
    }
    let bias = bias / trials as f64;
    let pass = unmix_err < 1e-6 && bias.abs() < 0.05 * 1.2 && covered * 100 >= 95 * trials && identity;
    outcome(
        pass,
        format!(
            "unmix max weight err {unmix_err:.1e}; centre bias {bias:.2e} nm; fwhm 3σ coverage {covered}/{trials}; area identity {identity} over {fits_seen} fits"
        ),
    )
}

fn criterion_7() -> Outcome {
    let truth = predict_odmr(synthetic::FIXTURE_FIELD_G, ZERO_FIELD_GHZ, GYROMAGNETIC_MHZ_PER_G);
    let clean = synthetic::odmr_fixture().unwrap();
    let noise = Normal::new(0.0, 0.002).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let s = clean
        .with_intensity(clean.intensity().iter().map(|v| v + noise.sample(&mut rng)).collect())
        .unwrap();
    match fit_odmr(&s, 8) {
        Ok(fit) => {
            let off = (fit.zfs_mean_ghz - ZERO_FIELD_GHZ).abs() * 1e3;
            let within = fit
                .dips
                .iter()
                .zip(truth)
                .filter(|(d, t)| (d.center_mhz - t * 1e3).abs() <= 3.0 * d.sigma_center_mhz)
                .count();
            outcome(
                off < 0.1 && within == 8,
                format!(
                    "zfs {:.5} GHz ({off:.3} MHz off), {within}/8 centres within 3σ, mean fwhm {:.2} MHz",
                    fit.zfs_mean_ghz, fit.mean_fwhm_mhz
                ),
            )
        }
        Err(e) => outcome(false, format!("fit failed: {e}")),
    }
}

fn criterion_8() -> Outcome {
    let s = scenario::run(2000, 1);
    let r = s.report();
    let oracle_err = s
        .oracle()
        .iter()
        .map(|(k, v)| (r.families[*k].yield_fraction.unwrap() / v - 1.0).abs())
        .fold(0.0, f64::max);
    let mut scaled = scenario::run(2000, 1);
    scaled.fluence = fluence(&scenario::recipe(10)).unwrap();
    let r10 = scaled.report();
    let inverse = r
        .families
        .iter()
        .map(|(k, f)| (f.yield_fraction.unwrap() / r10.families[k].yield_fraction.unwrap() / 10.0 - 1.0).abs())
        .fold(0.0, f64::max);
    let one = serde_json::to_vec(&r).unwrap();
    let four = serde_json::to_vec(&scenario::run(2000, 4).report()).unwrap();
    outcome(
        oracle_err < 1e-12 && inverse < 1e-12 && one == four,
        format!(
            "oracle rel diff {oracle_err:.1e}; 10× fluence ratio error {inverse:.1e}; 1 vs 4 threads identical {}",
            one == four
        ),
    )
}

fn criterion_9(runs: &mut Runs) -> Outcome {
    let bytes = |p: &DepthProfileSet| {
        let mut csv = Vec::new();
        p.write_csv(&mut csv).unwrap();
        let mut json = Vec::new();
        p.write_json(&mut json).unwrap();
        (csv, json)
    };
    let single = bytes(&runs.get("SiO2", 5.0, 30.0).0);
    let config = film_config("SiO2", 2.658, 5.0, HISTORIES, SEED);
    let threads = 4;
    let multi = bytes(&run_simulation_with_threads(&config, threads).unwrap());
    outcome(
        single == multi,
        format!("1 vs {threads} threads: csv identical {}, json identical {}", single.0 == multi.0, single.1 == multi.1),
    )
}

fn main() {
    let mut runs = Runs::default();
    let mut all = true;
    let mut report = |n: usize, o: Outcome| {
        all &= o.pass;
        println!("criterion {n}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, criterion_1());
    report(2, criterion_2(&mut runs));
    report(3, criterion_3(&mut runs));
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    report(7, criterion_7());
    report(8, criterion_8());
    report(9, criterion_9(&mut runs));
    if !all {
        std::process::exit(1);
    }
}
