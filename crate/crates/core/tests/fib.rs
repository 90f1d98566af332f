use std::fs::File;
use std::path::PathBuf;

use recoilimp::fib::*;
use recoilimp::Error;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn round_sig(v: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits - 1 - v.abs().log10().floor() as i32);
    (v * scale).round() / scale
}

/// Half a unit in the last printed place of a value like `0.14e16`.
fn half_ulp(text: &str) -> f64 {
    let (mantissa, exp) = text.split_once('e').unwrap();
    let decimals = mantissa.split_once('.').map(|(_, d)| d.len()).unwrap_or(0) as i32;
    0.5 * 10f64.powi(exp.parse::<i32>().unwrap() - decimals)
}

fn recipes() -> Vec<BeamRecipe> {
    let table = DiameterTable::from_json(&std::fs::read_to_string(data("beam_diameters.json")).unwrap()).unwrap();
    read_recipes(File::open(data("recipes.csv")).unwrap(), Some(&table)).unwrap()
}

#[test]
fn reproduces_reported_fluences() {
    let mut reported = csv::Reader::from_path(data("reported_fluence.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reported.records().map(|r| r.unwrap()).collect();
    let recipes = recipes();
    assert_eq!(rows.len(), 12);
    for (r, row) in recipes.iter().zip(&rows) {
        assert_eq!(&r.name, &row[0]);
        let f = fluence(r).unwrap();
        let want: f64 = row[1].parse().unwrap();
        assert_eq!(round_sig(f.value, 3), round_sig(want, 3), "{}", r.name);
        let want_sigma: f64 = row[2].parse().unwrap();
        assert!((f.uncertainty - want_sigma).abs() <= half_ulp(&row[2]) * 1.0001, "{} σ {:.4e}", r.name, f.uncertainty);
        assert_eq!(f.relative_uncertainty(), 2.0 * r.diameter_sigma_nm / r.diameter_nm);
    }
}

#[test]
fn matches_hand_formula() {
    // F = 3 · passes · I t / e / (π d² / 4), written out independently
    let e = 1.602176634e-19;
    for r in recipes() {
        let ions = r.current_na * 1e-9 * r.dwell_us * 1e-6 / e;
        let area = std::f64::consts::PI * (r.diameter_nm * 1e-7).powi(2) / 4.0;
        let expect = 3.0 * r.passes as f64 * ions / area;
        let got = fluence(&r).unwrap().value;
        assert!((got / expect - 1.0).abs() < 1e-12, "{}", r.name);
    }
}

#[test]
fn missing_diameter_needs_table() {
    let csv = "name,current_nA,dwell_us,passes,overlap,diameter_nm,diameter_sigma_nm\nX,0.5,1,1,0.5,,\n";
    assert!(read_recipes(csv.as_bytes(), None).is_err());
    let table = DiameterTable::from_json(&std::fs::read_to_string(data("beam_diameters.json")).unwrap()).unwrap();
    assert!(read_recipes(csv.as_bytes(), Some(&table)).is_err());
}

#[test]
fn zero_current_gives_zero_dose() {
    let mut r = recipes().remove(0);
    r.current_na = 0.0;
    assert_eq!(fluence(&r).unwrap().value, 0.0);
    r.diameter_nm = 0.0;
    assert!(matches!(fluence(&r), Err(Error::ZeroDenominator(_))));
}
