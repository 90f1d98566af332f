//! Areal ion dose delivered by a rastered focused ion beam.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::constants::{ELEMENTARY_CHARGE, NM2_PER_CM2};
use crate::error::{invalid, Error, Result};

/// Ions delivered during one dwell: I·t / (q·e).
pub fn ions_per_dwell(current_na: f64, dwell_us: f64, charge_state: u32) -> Result<f64> {
    if !(current_na >= 0.0 && current_na.is_finite()) {
        return Err(invalid("current_nA", format!("{current_na}")));
    }
    if !(dwell_us >= 0.0 && dwell_us.is_finite()) {
        return Err(invalid("dwell_us", format!("{dwell_us}")));
    }
    if charge_state == 0 {
        return Err(invalid("charge_state", "must be at least 1"));
    }
    Ok(current_na * 1e-9 * dwell_us * 1e-6 / (charge_state as f64 * ELEMENTARY_CHARGE))
}

/// Dose multiplier for a raster with fractional spot overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapFactor {
    pub value: f64,
    /// True when the value comes from the pitch formula rather than the
    /// calibrated table.
    pub extrapolated: bool,
}

/// Calibrated overlap factors.
const OVERLAP_TABLE: [(f64, f64); 1] = [(0.5, 3.0)];

/// Overlap factor: the calibrated value where one exists, otherwise the
/// ratio of spot area to raster-pitch area, (π/4)/(1 − f)².
pub fn overlap_factor(overlap: f64) -> Result<OverlapFactor> {
    if !(0.0..1.0).contains(&overlap) {
        return Err(invalid("overlap", format!("{overlap} is outside [0, 1)")));
    }
    if let Some(&(_, value)) = OVERLAP_TABLE.iter().find(|(f, _)| (f - overlap).abs() < 1e-12) {
        return Ok(OverlapFactor {
            value,
            extrapolated: false,
        });
    }
    let pitch = 1.0 - overlap;
    Ok(OverlapFactor {
        value: PI / 4.0 / (pitch * pitch),
        extrapolated: true,
    })
}

/// One line of a patterning recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamRecipe {
    pub name: String,
    #[serde(rename = "current_nA")]
    pub current_na: f64,
    pub dwell_us: f64,
    pub passes: u32,
    pub overlap: f64,
    pub diameter_nm: f64,
    pub diameter_sigma_nm: f64,
    #[serde(default = "one")]
    pub charge_state: u32,
}

fn one() -> u32 {
    1
}

impl BeamRecipe {
    pub fn validate(&self) -> Result<()> {
        if !(self.current_na >= 0.0) {
            return Err(invalid("current_nA", format!("{}", self.current_na)));
        }
        if !(self.dwell_us > 0.0) {
            return Err(invalid("dwell_us", format!("{}", self.dwell_us)));
        }
        if self.passes < 1 {
            return Err(invalid("passes", "need at least one pass"));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(invalid("overlap", format!("{}", self.overlap)));
        }
        if self.diameter_nm == 0.0 {
            return Err(Error::ZeroDenominator("beam diameter"));
        }
        if !(self.diameter_nm > 0.0 && self.diameter_nm.is_finite()) {
            return Err(invalid("diameter_nm", format!("{}", self.diameter_nm)));
        }
        if !(self.diameter_sigma_nm >= 0.0) {
            return Err(invalid("diameter_sigma_nm", format!("{}", self.diameter_sigma_nm)));
        }
        Ok(())
    }
}

/// Areal dose with its 1σ uncertainty, in ions/cm².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluenceEstimate {
    pub value: f64,
    pub uncertainty: f64,
    pub ions_per_dwell: f64,
    pub overlap_extrapolated: bool,
}

impl FluenceEstimate {
    pub fn relative_uncertainty(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.uncertainty / self.value
        }
    }
}

/// F = overlap · passes · N / (π d²/4); σ_F / F = 2 σ_d / d.
pub fn fluence(recipe: &BeamRecipe) -> Result<FluenceEstimate> {
    recipe.validate()?;
    let n = ions_per_dwell(recipe.current_na, recipe.dwell_us, recipe.charge_state)?;
    let factor = overlap_factor(recipe.overlap)?;
    let d = recipe.diameter_nm;
    let spot_cm2 = PI * d * d / 4.0 / NM2_PER_CM2;
    let value = factor.value * recipe.passes as f64 * n / spot_cm2;
    Ok(FluenceEstimate {
        value,
        uncertainty: value * 2.0 * recipe.diameter_sigma_nm / d,
        ions_per_dwell: n,
        overlap_extrapolated: factor.extrapolated,
    })
}

/// Spot diameter (with 1σ) for each calibrated beam current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterTable {
    pub entries: Vec<DiameterEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterEntry {
    #[serde(rename = "current_nA")]
    pub current_na: f64,
    pub diameter_nm: f64,
    pub diameter_sigma_nm: f64,
}

impl DiameterTable {
    pub fn from_json(text: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(text)?;
        for e in &t.entries {
            if !(e.diameter_nm > 0.0 && e.diameter_sigma_nm >= 0.0 && e.current_na >= 0.0) {
                return Err(invalid("diameter table", format!("bad entry {e:?}")));
            }
        }
        Ok(t)
    }

    /// Entry for `current_na`, matched to 1e-9 relative.
    pub fn lookup(&self, current_na: f64) -> Result<DiameterEntry> {
        self.entries
            .iter()
            .find(|e| (e.current_na - current_na).abs() <= 1e-9 * current_na.abs().max(1e-12))
            .copied()
            .ok_or_else(|| invalid("current_nA", format!("no calibrated diameter for {current_na} nA")))
    }
}

#[derive(Debug, Deserialize)]
struct RecipeRow {
    name: String,
    #[serde(rename = "current_nA")]
    current_na: f64,
    dwell_us: f64,
    passes: u32,
    overlap: f64,
    diameter_nm: Option<f64>,
    diameter_sigma_nm: Option<f64>,
}

/// Reads a recipe table with header
/// `name,current_nA,dwell_us,passes,overlap,diameter_nm,diameter_sigma_nm`.
/// Empty diameter cells are filled from `diameters`.
pub fn read_recipes<R: Read>(input: R, diameters: Option<&DiameterTable>) -> Result<Vec<BeamRecipe>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize::<RecipeRow>() {
        let row = row?;
        let (d, s) = match (row.diameter_nm, row.diameter_sigma_nm) {
            (Some(d), Some(s)) => (d, s),
            _ => {
                let table = diameters.ok_or_else(|| {
                    invalid("diameter_nm", format!("row `{}` has no diameter and no table was given", row.name))
                })?;
                let e = table.lookup(row.current_na)?;
                (row.diameter_nm.unwrap_or(e.diameter_nm), row.diameter_sigma_nm.unwrap_or(e.diameter_sigma_nm))
            }
        };
        let recipe = BeamRecipe {
            name: row.name,
            current_na: row.current_na,
            dwell_us: row.dwell_us,
            passes: row.passes,
            overlap: row.overlap,
            diameter_nm: d,
            diameter_sigma_nm: s,
            charge_state: 1,
        };
        recipe.validate()?;
        out.push(recipe);
    }
    Ok(out)
}

/// Writes the dose table, one row per recipe.
pub fn write_fluence_table<W: Write>(out: W, rows: &[(BeamRecipe, FluenceEstimate)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "name",
        "current_nA",
        "dwell_us",
        "passes",
        "overlap",
        "diameter_nm",
        "diameter_sigma_nm",
        "ions_per_dwell",
        "fluence_cm2",
        "fluence_sigma_cm2",
        "overlap_extrapolated",
    ])?;
    for (r, f) in rows {
        w.write_record([
            r.name.clone(),
            format!("{}", r.current_na),
            format!("{}", r.dwell_us),
            format!("{}", r.passes),
            format!("{}", r.overlap),
            format!("{}", r.diameter_nm),
            format!("{}", r.diameter_sigma_nm),
            format!("{:.6e}", f.ions_per_dwell),
            format!("{:.6e}", f.value),
            format!("{:.6e}", f.uncertainty),
            format!("{}", f.overlap_extrapolated),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct FluenceRow {
    name: String,
    ions_per_dwell: f64,
    fluence_cm2: f64,
    fluence_sigma_cm2: f64,
    overlap_extrapolated: bool,
}

/// Reads the table written by [`write_fluence_table`]; only the name and
/// dose columns are used.
pub fn read_fluence_table<R: Read>(input: R) -> Result<Vec<(String, FluenceEstimate)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize::<FluenceRow>() {
        let r = row?;
        out.push((
            r.name,
            FluenceEstimate {
                value: r.fluence_cm2,
                uncertainty: r.fluence_sigma_cm2,
                ions_per_dwell: r.ions_per_dwell,
                overlap_extrapolated: r.overlap_extrapolated,
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recipe(current: f64, passes: u32, d: f64, s: f64) -> BeamRecipe {
        BeamRecipe {
            name: "x".into(),
            current_na: current,
            dwell_us: 1.0,
            passes,
            overlap: 0.5,
            diameter_nm: d,
            diameter_sigma_nm: s,
            charge_state: 1,
        }
    }

    #[test]
    fn ions_per_microsecond() {
        assert!((ions_per_dwell(0.79, 1.0, 1).unwrap() - 4931.0).abs() < 0.5);
        assert!((ions_per_dwell(0.0077, 1.0, 1).unwrap() - 48.06).abs() < 0.005);
        assert_eq!(ions_per_dwell(0.0, 3.0, 1).unwrap(), 0.0);
        assert!(ions_per_dwell(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn overlap_lookup_and_extrapolation() {
        let half = overlap_factor(0.5).unwrap();
        assert_eq!(half.value, 3.0);
        assert!(!half.extrapolated);
        let none = overlap_factor(0.0).unwrap();
        assert!(none.extrapolated);
        assert!((none.value - PI / 4.0).abs() < 1e-15);
        assert!(overlap_factor(1.0).is_err());
    }

    #[test]
    fn first_table_row() {
        let f = fluence(&recipe(0.79, 10, 38.0, 2.05)).unwrap();
        assert!((f.value / 1e16 - 1.30).abs() < 0.005);
        assert!((f.relative_uncertainty() - 2.0 * 2.05 / 38.0).abs() < 1e-15);
    }

    #[test]
    fn table_roundtrip() {
        let r = recipe(0.43, 3, 30.0, 1.97);
        let f = fluence(&r).unwrap();
        let mut buf = Vec::new();
        write_fluence_table(&mut buf, &[(r, f)]).unwrap();
        let back = read_fluence_table(buf.as_slice()).unwrap();
        assert_eq!(back[0].0, "x");
        assert!((back[0].1.value / f.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_diameter() {
        assert!(matches!(fluence(&recipe(0.79, 1, 0.0, 0.0)), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn linear_in_passes() {
        let a = fluence(&recipe(0.43, 1, 30.0, 2.0)).unwrap();
        let b = fluence(&recipe(0.43, 2, 30.0, 2.0)).unwrap();
        assert_eq!(b.value, 2.0 * a.value);
    }
}
