pub mod oracle;
pub mod scenario;

use recoilimp::bca::SimConfig;

/// 30 keV Ga through `thickness_nm` of `formula` on diamond.
#[allow(dead_code)]
pub fn film_config(formula: &str, density: f64, thickness_nm: f64, ions: u64, seed: u64) -> SimConfig {
    let layers = if thickness_nm > 0.0 {
        format!(r#"[{{"material": "film", "thickness_nm": {thickness_nm}}}]"#)
    } else {
        "[]".to_string()
    };
    let json = format!(
        r#"{{
          "target": {{
            "materials": {{
              "film": {{"formula": "{formula}", "density": {density}}},
              "diamond": {{"formula": "C", "density": 3.515}}
            }},
            "layers": {layers},
            "substrate": "diamond"
          }},
          "ion": {{"species": "Ga", "energy_kev": 30.0}},
          "ion_count": {ions},
          "seed": {seed}
        }}"#
    );
    SimConfig::from_json(&json).unwrap()
}
