//! Elements, materials and the layered target geometry.
//!
//! Internal units are fixed: energies in eV, lengths in nm, masses in amu and
//! number densities in atoms/nm³. Mass densities are accepted in g/cm³ and
//! converted once, when a [`Material`] is built.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constants::{AVOGADRO, CM3_PER_NM3};
use crate::error::{invalid, Error, Result};

/// Default lattice binding energy (eV) applied to every species.
pub const DEFAULT_LATTICE_BINDING: f64 = 3.0;

/// Displacement energy used for elements without a dedicated default (eV).
pub const FALLBACK_DISPLACEMENT_ENERGY: f64 = 25.0;

/// A chemical element together with its cascade thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementSpec {
    pub symbol: String,
    pub z: u32,
    /// Atomic mass (amu).
    pub mass: f64,
    /// Minimum recoil energy that displaces a lattice atom (eV).
    pub displacement_energy: f64,
    /// Energy a displaced atom leaves behind in the lattice (eV).
    pub lattice_binding: f64,
}

impl ElementSpec {
    pub fn new(
        symbol: impl Into<String>,
        z: u32,
        mass: f64,
        displacement_energy: f64,
        lattice_binding: f64,
    ) -> Result<Self> {
        let spec = Self {
            symbol: symbol.into(),
            z,
            mass,
            displacement_energy,
            lattice_binding,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.z < 1 {
            return Err(invalid("z", format!("{}: atomic number must be >= 1", self.symbol)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(invalid("mass", format!("{}: must be > 0", self.symbol)));
        }
        if !(self.displacement_energy > 0.0 && self.displacement_energy.is_finite()) {
            return Err(invalid(
                "displacement_energy",
                format!("{}: must be > 0", self.symbol),
            ));
        }
        if !(self.lattice_binding >= 0.0 && self.lattice_binding.is_finite()) {
            return Err(invalid(
                "lattice_binding",
                format!("{}: must be >= 0", self.symbol),
            ));
        }
        Ok(())
    }
}

// symbol, Z, standard atomic mass, default displacement energy
const BUILTIN: &[(&str, u32, f64, f64)] = &[
    ("H", 1, 1.008, 10.0),
    ("He", 2, 4.002_602, 5.0),
    ("Li", 3, 6.94, 25.0),
    ("B", 5, 10.81, 25.0),
    ("C", 6, 12.011, 37.5),
    ("N", 7, 14.007, 28.0),
    ("O", 8, 15.999, 28.0),
    ("F", 9, 18.998_403, 25.0),
    ("Ne", 10, 20.1797, 5.0),
    ("Al", 13, 26.981_538, 25.0),
    ("Si", 14, 28.0855, 15.0),
    ("P", 15, 30.973_762, 25.0),
    ("Ar", 18, 39.948, 5.0),
    ("Ti", 22, 47.867, 25.0),
    ("Ga", 31, 69.723, 25.0),
    ("Ge", 32, 72.630, 15.0),
    ("Kr", 36, 83.798, 5.0),
    ("Sn", 50, 118.710, 25.0),
    ("Xe", 54, 131.293, 5.0),
    ("Au", 79, 196.966_57, 25.0),
    ("Pb", 82, 207.2, 25.0),
];

/// Lookup table of elements by chemical symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementTable {
    elements: BTreeMap<String, ElementSpec>,
}

impl Default for ElementTable {
    fn default() -> Self {
        Self::builtin()
    }
}

impl ElementTable {
    /// Table with standard atomic masses and the toolkit's default thresholds.
    pub fn builtin() -> Self {
        let elements = BUILTIN
            .iter()
            .map(|&(symbol, z, mass, ed)| {
                (
                    symbol.to_string(),
                    ElementSpec {
                        symbol: symbol.to_string(),
                        z,
                        mass,
                        displacement_energy: ed,
                        lattice_binding: DEFAULT_LATTICE_BINDING,
                    },
                )
            })
            .collect();
        Self { elements }
    }

    pub fn empty() -> Self {
        Self {
            elements: BTreeMap::new(),
        }
    }

    pub fn get(&self, symbol: &str) -> Result<&ElementSpec> {
        self.elements
            .get(symbol)
            .ok_or_else(|| Error::UnknownElement(symbol.to_string()))
    }

    pub fn insert(&mut self, element: ElementSpec) -> Result<()> {
        element.validate()?;
        self.elements.insert(element.symbol.clone(), element);
        Ok(())
    }

    /// Applies a partial override; fields left `None` keep their current value.
    pub fn apply(&mut self, patch: &ElementOverride) -> Result<()> {
        let base = self.elements.get(&patch.symbol).cloned();
        let merged = match base {
            Some(base) => ElementSpec {
                symbol: base.symbol,
                z: patch.z.unwrap_or(base.z),
                mass: patch.mass.unwrap_or(base.mass),
                displacement_energy: patch
                    .displacement_energy
                    .unwrap_or(base.displacement_energy),
                lattice_binding: patch.lattice_binding.unwrap_or(base.lattice_binding),
            },
            None => ElementSpec {
                symbol: patch.symbol.clone(),
                z: patch
                    .z
                    .ok_or_else(|| invalid("z", format!("new element {} needs z", patch.symbol)))?,
                mass: patch.mass.ok_or_else(|| {
                    invalid("mass", format!("new element {} needs mass", patch.symbol))
                })?,
                displacement_energy: patch
                    .displacement_energy
                    .unwrap_or(FALLBACK_DISPLACEMENT_ENERGY),
                lattice_binding: patch.lattice_binding.unwrap_or(DEFAULT_LATTICE_BINDING),
            },
        };
        self.insert(merged)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ElementSpec> {
        self.elements.values()
    }
}

/// Partial element definition as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementOverride {
    pub symbol: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_binding: Option<f64>,
}

/// One constituent of a material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constituent {
    pub element: ElementSpec,
    /// Normalized stoichiometric (atom) fraction.
    pub fraction: f64,
    /// Number density (atoms/nm³).
    pub number_density: f64,
}

/// A homogeneous amorphous material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub composition: Vec<Constituent>,
    /// Mass density (g/cm³).
    pub mass_density: f64,
}

impl Material {
    /// Total atom density (atoms/nm³).
    pub fn atom_density(&self) -> f64 {
        self.composition.iter().map(|c| c.number_density).sum()
    }

    /// Mass density recomputed from the species number densities (g/cm³).
    pub fn mass_density_from_species(&self) -> f64 {
        self.composition
            .iter()
            .map(|c| c.number_density * c.element.mass)
            .sum::<f64>()
            / AVOGADRO
            / CM3_PER_NM3
    }

    /// Mean molar mass per atom (g/mol).
    pub fn mean_atomic_mass(&self) -> f64 {
        self.composition
            .iter()
            .map(|c| c.fraction * c.element.mass)
            .sum()
    }

    pub fn number_density(&self, symbol: &str) -> Option<f64> {
        self.composition
            .iter()
            .find(|c| c.element.symbol == symbol)
            .map(|c| c.number_density)
    }

    /// Lowest displacement energy among the constituents (eV).
    pub fn min_displacement_energy(&self) -> f64 {
        self.composition
            .iter()
            .map(|c| c.element.displacement_energy)
            .fold(f64::INFINITY, f64::min)
    }

    /// Same material with every number density multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.mass_density *= factor;
        for c in &mut out.composition {
            c.number_density *= factor;
        }
        out
    }
}

/// Parses a formula such as `SiO2`, `Si3N4` or `SiN1.33` into
/// `(symbol, count)` pairs. Repeated symbols are merged.
pub fn parse_formula(formula: &str) -> Result<Vec<(String, f64)>> {
    let bad = |reason: &str| Error::InvalidFormula {
        formula: formula.to_string(),
        reason: reason.to_string(),
    };
    let chars: Vec<char> = formula.trim().chars().collect();
    if chars.is_empty() {
        return Err(bad("empty formula"));
    }
    let mut out: Vec<(String, f64)> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_ascii_uppercase() {
            return Err(bad(&format!("unexpected `{}` at position {}", chars[i], i)));
        }
        let mut symbol = chars[i].to_string();
        i += 1;
        while i < chars.len() && chars[i].is_ascii_lowercase() {
            symbol.push(chars[i]);
            i += 1;
        }
        let start = i;
        while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
            i += 1;
        }
        let count = if start == i {
            1.0
        } else {
            let text: String = chars[start..i].iter().collect();
            text.parse::<f64>()
                .map_err(|_| bad(&format!("bad count `{text}`")))?
        };
        if !(count > 0.0) {
            return Err(bad("counts must be positive"));
        }
        match out.iter_mut().find(|(s, _)| *s == symbol) {
            Some(entry) => entry.1 += count,
            None => out.push((symbol, count)),
        }
    }
    Ok(out)
}

/// Builds a [`Material`] from a formula and a mass density in g/cm³.
pub fn material_from_formula(
    name: impl Into<String>,
    formula: &str,
    density_g_cm3: f64,
    table: &ElementTable,
) -> Result<Material> {
    if !(density_g_cm3 > 0.0 && density_g_cm3.is_finite()) {
        return Err(invalid("density", format!("{density_g_cm3} g/cm³ is not positive")));
    }
    let parts = parse_formula(formula)?;
    let total: f64 = parts.iter().map(|(_, n)| n).sum();
    let mut resolved = Vec::with_capacity(parts.len());
    for (symbol, count) in &parts {
        resolved.push((table.get(symbol)?.clone(), count / total));
    }
    let mean_mass: f64 = resolved.iter().map(|(e, f)| e.mass * f).sum();
    // atoms/cm³ of all species, converted to atoms/nm³
    let atoms_per_nm3 = density_g_cm3 * AVOGADRO / mean_mass * CM3_PER_NM3;
    let composition = resolved
        .into_iter()
        .map(|(element, fraction)| Constituent {
            element,
            fraction,
            number_density: atoms_per_nm3 * fraction,
        })
        .collect();
    Ok(Material {
        name: name.into(),
        composition,
        mass_density: density_g_cm3,
    })
}

/// A film layer of finite thickness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub material: Material,
    pub thickness: f64,
}

/// Ordered film layers over a semi-infinite substrate. Depth `z` increases
/// into the target from the surface at `z = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetStack {
    layers: Vec<Layer>,
    substrate: Material,
    /// Lower boundary of each layer (nm).
    boundaries: Vec<f64>,
}

impl TargetStack {
    pub fn new(layers: Vec<Layer>, substrate: Material) -> Result<Self> {
        let mut boundaries = Vec::with_capacity(layers.len());
        let mut depth = 0.0;
        for layer in &layers {
            if !(layer.thickness > 0.0 && layer.thickness.is_finite()) {
                return Err(invalid(
                    "thickness",
                    format!("layer `{}` has thickness {}", layer.material.name, layer.thickness),
                ));
            }
            depth += layer.thickness;
            boundaries.push(depth);
        }
        Ok(Self {
            layers,
            substrate,
            boundaries,
        })
    }

    /// A bare substrate with no films.
    pub fn bare(substrate: Material) -> Self {
        Self {
            layers: Vec::new(),
            substrate,
            boundaries: Vec::new(),
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn substrate(&self) -> &Material {
        &self.substrate
    }

    /// Lower boundary depth of every film layer (nm).
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Depth of the film/substrate interface (nm).
    pub fn substrate_top(&self) -> f64 {
        self.boundaries.last().copied().unwrap_or(0.0)
    }

    /// Number of regions: film layers plus the substrate.
    pub fn region_count(&self) -> usize {
        self.layers.len() + 1
    }

    /// Index of the substrate region.
    pub fn substrate_index(&self) -> usize {
        self.layers.len()
    }

    pub fn material(&self, region: usize) -> &Material {
        self.layers
            .get(region)
            .map(|l| &l.material)
            .unwrap_or(&self.substrate)
    }

    /// Region index for a depth; boundary depths belong to the deeper region.
    pub fn region_of(&self, depth: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= depth)
    }

    /// Region containing `depth`; any depth past the last film is substrate.
    pub fn locate(&self, depth: f64) -> Result<(usize, &Material)> {
        if depth.is_nan() {
            return Err(Error::NonFinite("locate"));
        }
        if depth < 0.0 {
            return Err(Error::NegativeDepth(depth));
        }
        let region = self.region_of(depth);
        Ok((region, self.material(region)))
    }

    /// Copy of the stack with the top film's thickness replaced.
    pub fn with_top_thickness(&self, thickness: f64) -> Result<Self> {
        let mut layers = self.layers.clone();
        let top = layers
            .first_mut()
            .ok_or_else(|| invalid("thickness", "stack has no film layer to resize"))?;
        top.thickness = thickness;
        Self::new(layers, self.substrate.clone())
    }

    /// Every distinct element in the stack, in order of first appearance.
    pub fn elements(&self) -> Vec<ElementSpec> {
        let mut out: Vec<ElementSpec> = Vec::new();
        let materials = self.layers.iter().map(|l| &l.material).chain([&self.substrate]);
        for m in materials {
            for c in &m.composition {
                if !out.iter().any(|e| e.symbol == c.element.symbol) {
                    out.push(c.element.clone());
                }
            }
        }
        out
    }
}

/// Material definition inside a target config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialDef {
    pub formula: String,
    /// g/cm³
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDef {
    pub material: String,
    pub thickness_nm: f64,
}

/// JSON description of a target: element overrides, named materials, the
/// film layers and the substrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetConfig {
    #[serde(default)]
    pub elements: Vec<ElementOverride>,
    pub materials: BTreeMap<String, MaterialDef>,
    #[serde(default)]
    pub layers: Vec<LayerDef>,
    pub substrate: String,
}

impl TargetConfig {
    /// Element table with this config's overrides applied.
    pub fn element_table(&self) -> Result<ElementTable> {
        let mut table = ElementTable::builtin();
        for patch in &self.elements {
            table.apply(patch)?;
        }
        Ok(table)
    }

    pub fn material(&self, name: &str, table: &ElementTable) -> Result<Material> {
        let def = self
            .materials
            .get(name)
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))?;
        material_from_formula(name, &def.formula, def.density, table)
    }

    pub fn build(&self) -> Result<TargetStack> {
        let table = self.element_table()?;
        let layers = self
            .layers
            .iter()
            .map(|l| {
                Ok(Layer {
                    material: self.material(&l.material, &table)?,
                    thickness: l.thickness_nm,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TargetStack::new(layers, self.material(&self.substrate, &table)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table() -> ElementTable {
        ElementTable::builtin()
    }

    #[test]
    fn silica_number_densities() {
        let m = material_from_formula("SiO2", "SiO2", 2.658, &table()).unwrap();
        // ρ·N_A/M with M(SiO2) = 60.08 g/mol, in cm⁻³
        let si = m.number_density("Si").unwrap() / CM3_PER_NM3;
        let o = m.number_density("O").unwrap() / CM3_PER_NM3;
        assert_relative_eq!(si, 2.664e22, max_relative = 5e-4);
        assert_relative_eq!(o, 5.329e22, max_relative = 5e-4);
        assert_relative_eq!(m.atom_density(), (si + o) * CM3_PER_NM3, max_relative = 1e-12);
    }

    #[test]
    fn diamond_and_nitride_densities() {
        let c = material_from_formula("diamond", "C", 3.515, &table()).unwrap();
        assert_relative_eq!(c.atom_density() / CM3_PER_NM3, 1.763e23, max_relative = 5e-4);
        let n = material_from_formula("SiN", "Si3N4", 2.5, &table()).unwrap();
        assert_relative_eq!(n.number_density("Si").unwrap() / CM3_PER_NM3, 3.220e22, max_relative = 5e-4);
        assert_relative_eq!(n.number_density("N").unwrap() / CM3_PER_NM3, 4.293e22, max_relative = 5e-4);
    }

    #[test]
    fn fractions_sum_to_one() {
        let m = material_from_formula("x", "SiN1.33", 2.5, &table()).unwrap();
        let sum: f64 = m.composition.iter().map(|c| c.fraction).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn formula_errors() {
        assert!(matches!(
            material_from_formula("x", "Qz2", 1.0, &table()),
            Err(Error::UnknownElement(_))
        ));
        assert!(material_from_formula("x", "SiO2", 0.0, &table()).is_err());
        assert!(material_from_formula("x", "SiO2", -1.0, &table()).is_err());
        assert!(parse_formula("").is_err());
        assert!(parse_formula("2Si").is_err());
        assert_eq!(
            parse_formula("CCO").unwrap(),
            vec![("C".to_string(), 2.0), ("O".to_string(), 1.0)]
        );
    }

    fn film_stack(thickness: f64) -> TargetStack {
        let t = table();
        let film = material_from_formula("SiO2", "SiO2", 2.658, &t).unwrap();
        let sub = material_from_formula("diamond", "C", 3.515, &t).unwrap();
        TargetStack::new(vec![Layer { material: film, thickness }], sub).unwrap()
    }

    #[test]
    fn locate_examples() {
        let s = film_stack(5.0);
        assert_eq!(s.locate(2.0).unwrap().1.name, "SiO2");
        assert_eq!(s.locate(5.0).unwrap().1.name, "diamond");
        assert_eq!(s.locate(80.0).unwrap().1.name, "diamond");
        assert_eq!(s.locate(0.0).unwrap().0, 0);
        assert!(matches!(s.locate(-0.1), Err(Error::NegativeDepth(_))));
    }

    #[test]
    fn stack_rejects_bad_thickness() {
        let t = table();
        let film = material_from_formula("SiO2", "SiO2", 2.658, &t).unwrap();
        let sub = material_from_formula("diamond", "C", 3.515, &t).unwrap();
        assert!(TargetStack::new(vec![Layer { material: film, thickness: 0.0 }], sub).is_err());
    }

    #[test]
    fn element_overrides() {
        let mut t = table();
        t.apply(&ElementOverride {
            symbol: "C".into(),
            z: None,
            mass: None,
            displacement_energy: Some(45.0),
            lattice_binding: None,
        })
        .unwrap();
        assert_eq!(t.get("C").unwrap().displacement_energy, 45.0);
        assert!(t
            .apply(&ElementOverride {
                symbol: "Zz".into(),
                z: None,
                mass: Some(1.0),
                displacement_energy: None,
                lattice_binding: None,
            })
            .is_err());
        assert!(ElementSpec::new("X", 0, 1.0, 1.0, 0.0).is_err());
        assert!(ElementSpec::new("X", 1, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn config_roundtrip_builds_stack() {
        let json = r#"{
            "materials": {
                "SiO2": {"formula": "SiO2", "density": 2.658},
                "diamond": {"formula": "C", "density": 3.515}
            },
            "layers": [{"material": "SiO2", "thickness_nm": 5.0}],
            "substrate": "diamond"
        }"#;
        let cfg: TargetConfig = serde_json::from_str(json).unwrap();
        let stack = cfg.build().unwrap();
        assert_eq!(stack.substrate_top(), 5.0);
        assert_eq!(stack.elements().len(), 3);
        let missing: TargetConfig = serde_json::from_str(
            r#"{"materials": {}, "substrate": "diamond"}"#,
        )
        .unwrap();
        assert!(matches!(missing.build(), Err(Error::UnknownMaterial(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mass_density_roundtrip(a in 0.1f64..5.0, b in 0.1f64..5.0, rho in 0.1f64..20.0) {
                let formula = format!("Si{a}O{b}");
                let m = material_from_formula("m", &formula, rho, &ElementTable::builtin()).unwrap();
                let back = m.mass_density_from_species();
                prop_assert!(((back - rho) / rho).abs() < 1e-9);
            }

            #[test]
            fn locate_is_monotone(d1 in 0.0f64..50.0, d2 in 0.0f64..50.0, t1 in 0.5f64..10.0, t2 in 0.5f64..10.0) {
                let tb = ElementTable::builtin();
                let film = material_from_formula("a", "SiO2", 2.658, &tb).unwrap();
                let film2 = material_from_formula("b", "Si3N4", 2.5, &tb).unwrap();
                let sub = material_from_formula("c", "C", 3.515, &tb).unwrap();
                let s = TargetStack::new(vec![
                    Layer { material: film, thickness: t1 },
                    Layer { material: film2, thickness: t2 },
                ], sub).unwrap();
                let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
                prop_assert!(s.locate(lo).unwrap().0 <= s.locate(hi).unwrap().0);
            }
        }
    }
}
