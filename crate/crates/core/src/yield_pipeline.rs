//! Effective implantation doses and colour-centre formation yields.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bca::DepthProfileSet;
use crate::error::{invalid, Error, Result};
use crate::fib::FluenceEstimate;
use crate::spectral::UnmixResult;

/// 1 µm² in cm².
pub const UM2_IN_CM2: f64 = 1e-8;

/// Atoms per incident ion with the statistical 1σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeciesCount {
    pub per_ion: f64,
    pub std_error: f64,
}

/// Atoms of each species at rest in the substrate, per ion. Bins whose
/// lower edge lies shallower than `exclusion_nm` below the substrate
/// surface are dropped, so the exclusion is rounded up to a bin edge.
pub fn per_ion_counts(profiles: &DepthProfileSet, exclusion_nm: f64) -> Result<BTreeMap<String, SpeciesCount>> {
    if !(exclusion_nm >= 0.0 && exclusion_nm.is_finite()) {
        return Err(invalid("exclusion_nm", format!("{exclusion_nm}")));
    }
    let top = profiles.substrate_top();
    let edges = &profiles.bin_edges;
    let last = *edges.last().ok_or_else(|| Error::Region("profile has no bins".into()))?;
    if !(last > top) {
        return Err(Error::Region(format!(
            "profile ends at {last} nm, above the substrate surface at {top} nm"
        )));
    }
    let cut = top + exclusion_nm;
    let mut out = BTreeMap::new();
    for sp in &profiles.species {
        let (full, full_err) = profiles.substrate_count(sp);
        let per_ion = if cut >= last {
            0.0
        } else {
            let bins = &profiles.stopped[sp];
            let inside: f64 = bins
                .iter()
                .zip(edges.iter())
                .filter(|(_, &lo)| lo >= cut - 1e-9)
                .map(|(v, _)| v)
                .sum();
            inside + profiles.transmitted.get(sp).copied().unwrap_or(0.0)
        };
        // counting error scales as 1/√N for a subset of the same histories
        let std_error = if exclusion_nm == 0.0 {
            full_err
        } else if per_ion > 0.0 && full > 0.0 {
            per_ion * (full_err / full) * (full / per_ion).sqrt()
        } else {
            0.0
        };
        out.insert(
            sp.clone(),
            SpeciesCount {
                per_ion: if exclusion_nm == 0.0 { full } else { per_ion },
                std_error,
            },
        );
    }
    Ok(out)
}

/// Areal dose of every species implanted into the substrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDose {
    pub per_ion: BTreeMap<String, SpeciesCount>,
    pub fluence: FluenceEstimate,
    /// atoms/cm².
    pub areal_dose: BTreeMap<String, f64>,
    pub areal_dose_sigma: BTreeMap<String, f64>,
}

/// per_ion × fluence; relative errors add in quadrature.
pub fn effective_dose(per_ion: &BTreeMap<String, SpeciesCount>, fluence: FluenceEstimate) -> EffectiveDose {
    let rf = fluence.relative_uncertainty();
    let mut areal_dose = BTreeMap::new();
    let mut areal_dose_sigma = BTreeMap::new();
    for (sp, c) in per_ion {
        let dose = c.per_ion * fluence.value;
        let rc = if c.per_ion > 0.0 { c.std_error / c.per_ion } else { 0.0 };
        areal_dose.insert(sp.clone(), dose);
        areal_dose_sigma.insert(sp.clone(), dose * rf.hypot(rc));
    }
    EffectiveDose {
        per_ion: per_ion.clone(),
        fluence,
        areal_dose,
        areal_dose_sigma,
    }
}

/// Emitters per cm² from integrated PL: (pl / reference) / area.
pub fn emitter_density(pl: f64, reference: f64, spot_area_cm2: f64) -> Result<f64> {
    if reference == 0.0 {
        return Err(Error::ZeroDenominator("reference single-emitter intensity"));
    }
    if spot_area_cm2 == 0.0 {
        return Err(Error::ZeroDenominator("excitation spot area"));
    }
    if !(reference > 0.0 && spot_area_cm2 > 0.0 && pl >= 0.0) {
        return Err(invalid(
            "emitter density",
            format!("pl {pl}, reference {reference}, area {spot_area_cm2} must be non-negative"),
        ));
    }
    Ok(pl / reference / spot_area_cm2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldEstimate {
    /// Emitters per implanted atom.
    pub value: f64,
    pub sigma: f64,
}

/// density / areal_dose[species], with relative errors in quadrature.
pub fn formation_yield(density: f64, density_sigma: f64, dose: &EffectiveDose, species: &str) -> Result<YieldEstimate> {
    let d = dose.areal_dose.get(species).copied().unwrap_or(0.0);
    if d == 0.0 {
        return Err(Error::ZeroDenominator("areal dose"));
    }
    let value = density / d;
    let rd = if density > 0.0 { density_sigma / density } else { 0.0 };
    let rs = dose.areal_dose_sigma[species] / d;
    Ok(YieldEstimate {
        value,
        sigma: value * rd.hypot(rs),
    })
}

/// Calibration for one defect family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    /// Implanted species the yield is computed against.
    pub species: String,
    /// Unmix component whose contribution counts as this family's PL.
    pub component: String,
    /// Integrated PL of one emitter, same units as the unmix contributions.
    pub reference_intensity: f64,
    #[serde(default)]
    pub reference_sigma: f64,
    /// Add the fitted background to the component (for NV, whose NV⁰
    /// sideband dominates the background).
    #[serde(default)]
    pub include_background: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldConfig {
    pub spot_area_cm2: f64,
    #[serde(default)]
    pub exclusion_nm: f64,
    pub families: BTreeMap<String, FamilyConfig>,
}

impl YieldConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        if !(c.spot_area_cm2 > 0.0) {
            return Err(invalid("spot_area_cm2", format!("{}", c.spot_area_cm2)));
        }
        for (name, f) in &c.families {
            if !(f.reference_intensity > 0.0 && f.reference_sigma >= 0.0) {
                return Err(invalid("reference_intensity", format!("family `{name}`")));
            }
        }
        Ok(c)
    }

    /// NV against nitrogen (with background) and SiV against silicon.
    pub fn standard(spot_area_cm2: f64, nv_reference: f64, siv_reference: f64) -> Self {
        let mut families = BTreeMap::new();
        families.insert(
            "NV".into(),
            FamilyConfig {
                species: "N".into(),
                component: "NV".into(),
                reference_intensity: nv_reference,
                reference_sigma: 0.0,
                include_background: true,
            },
        );
        families.insert(
            "SiV".into(),
            FamilyConfig {
                species: "Si".into(),
                component: "SiV".into(),
                reference_intensity: siv_reference,
                reference_sigma: 0.0,
                include_background: false,
            },
        );
        Self {
            spot_area_cm2,
            exclusion_nm: 0.0,
            families,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyYield {
    pub species: String,
    pub pl_contribution: f64,
    pub reference_intensity: f64,
    pub emitters: f64,
    pub spot_area_cm2: f64,
    pub density_cm2: f64,
    pub density_sigma_cm2: f64,
    pub areal_dose_cm2: f64,
    /// None when nothing of `species` reached the substrate.
    pub yield_fraction: Option<f64>,
    pub yield_sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldReport {
    pub label: String,
    pub dose: EffectiveDose,
    /// Areal density of the primary ion at rest in the substrate.
    pub ion_dose_cm2: f64,
    pub families: BTreeMap<String, FamilyYield>,
    /// Depth-dependent collection efficiency is not corrected for.
    pub collection_efficiency: String,
}

/// Chains the profile, fluence and unmix result into a report.
pub fn yield_report(
    label: &str,
    profiles: &DepthProfileSet,
    fluence: FluenceEstimate,
    unmix: &UnmixResult,
    config: &YieldConfig,
) -> Result<YieldReport> {
    let counts = per_ion_counts(profiles, config.exclusion_nm)?;
    let dose = effective_dose(&counts, fluence);
    let mut families = BTreeMap::new();
    for (name, fam) in &config.families {
        let component = unmix.contributions.get(&fam.component).copied().ok_or_else(|| {
            invalid("families", format!("family `{name}` names unknown component `{}`", fam.component))
        })?;
        let pl = if fam.include_background {
            (component + unmix.background_integral).max(0.0)
        } else {
            component
        };
        let density = emitter_density(pl, fam.reference_intensity, config.spot_area_cm2)?;
        let density_sigma = density * fam.reference_sigma / fam.reference_intensity;
        let (yield_fraction, yield_sigma) = match formation_yield(density, density_sigma, &dose, &fam.species) {
            Ok(y) => (Some(y.value), Some(y.sigma)),
            Err(Error::ZeroDenominator(_)) => (None, None),
            Err(e) => return Err(e),
        };
        families.insert(
            name.clone(),
            FamilyYield {
                species: fam.species.clone(),
                pl_contribution: pl,
                reference_intensity: fam.reference_intensity,
                emitters: pl / fam.reference_intensity,
                spot_area_cm2: config.spot_area_cm2,
                density_cm2: density,
                density_sigma_cm2: density_sigma,
                areal_dose_cm2: dose.areal_dose.get(&fam.species).copied().unwrap_or(0.0),
                yield_fraction,
                yield_sigma,
            },
        );
    }
    Ok(YieldReport {
        label: label.to_string(),
        ion_dose_cm2: counts.get(&profiles.ion).map(|c| c.per_ion).unwrap_or(0.0) * fluence.value,
        dose,
        families,
        collection_efficiency: "uncorrected".into(),
    })
}

/// Plot table: one row per report and family.
pub fn write_yield_csv<W: Write>(out: W, reports: &[YieldReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "label",
        "fluence_cm2",
        "fluence_sigma_cm2",
        "family",
        "species",
        "areal_dose_cm2",
        "density_cm2",
        "yield",
        "yield_sigma",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
    for r in reports {
        for (name, f) in &r.families {
            w.write_record([
                r.label.clone(),
                format!("{:.6e}", r.dose.fluence.value),
                format!("{:.6e}", r.dose.fluence.uncertainty),
                name.clone(),
                f.species.clone(),
                format!("{:.6e}", f.areal_dose_cm2),
                format!("{:.6e}", f.density_cm2),
                opt(f.yield_fraction),
                opt(f.yield_sigma),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fluence(value: f64, rel: f64) -> FluenceEstimate {
        FluenceEstimate {
            value,
            uncertainty: value * rel,
            ions_per_dwell: 0.0,
            overlap_extrapolated: false,
        }
    }

    fn counts(si: f64) -> BTreeMap<String, SpeciesCount> {
        let mut m = BTreeMap::new();
        m.insert("Si".into(), SpeciesCount { per_ion: si, std_error: 0.0 });
        m
    }

    #[test]
    fn dose_arithmetic() {
        let d = effective_dose(&counts(1.83), fluence(1.30e16, 0.1));
        assert!((d.areal_dose["Si"] - 2.379e16).abs() < 1e12);
        let z = effective_dose(&counts(1.83), fluence(0.0, 0.0));
        assert_eq!(z.areal_dose["Si"], 0.0);
    }

    #[test]
    fn density_units() {
        assert!((emitter_density(5.0, 5.0, UM2_IN_CM2).unwrap() - 1e8).abs() < 1e-6);
        assert!(matches!(emitter_density(1.0, 0.0, 1.0), Err(Error::ZeroDenominator(_))));
        assert!(matches!(emitter_density(1.0, 1.0, 0.0), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn yield_arithmetic() {
        let d = effective_dose(&counts(1.83), fluence(1.30e16, 0.0));
        let y = formation_yield(2.4e11, 0.0, &d, "Si").unwrap();
        assert_eq!((y.value * 1e6).round() / 10.0, 1.0);
        assert_eq!(formation_yield(0.0, 0.0, &d, "Si").unwrap().value, 0.0);
        assert!(matches!(formation_yield(1.0, 0.0, &d, "N"), Err(Error::ZeroDenominator(_))));
    }
}
