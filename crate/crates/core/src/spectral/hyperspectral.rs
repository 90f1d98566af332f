//! Hyperspectral cubes and per-pixel line maps.
//!
//! Binary container layout (little endian):
//!
//! ```text
//! magic    8 bytes  "RIMPCUBE"
//! version  u32      1
//! nx, ny   u32, u32
//! nk       u32      points per spectrum
//! axis     u8       0 wavelength_nm, 1 frequency_mhz, 2 frequency_ghz
//! axis     nk × f64
//! data     nx·ny·nk × f64, index ((iy·nx) + ix)·nk + k
//! ```
//!
//! The directory form holds one spectrum CSV per pixel and an `index.csv`
//! with columns `x,y,file`.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::peak::{fit_peak, PeakSpec};
use super::spectrum::{AxisKind, Spectrum};
use super::unmix::fit_template_background;
use crate::error::{invalid, Error, Result};

const MAGIC: &[u8; 8] = b"RIMPCUBE";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    pub nx: usize,
    pub ny: usize,
    pub axis_kind: AxisKind,
    axis: Vec<f64>,
    data: Vec<f64>,
}

fn axis_code(kind: AxisKind) -> u8 {
    match kind {
        AxisKind::WavelengthNm => 0,
        AxisKind::FrequencyMhz => 1,
        AxisKind::FrequencyGhz => 2,
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

impl Cube {
    /// `data` is row-major over (y, x, k).
    pub fn new(nx: usize, ny: usize, axis_kind: AxisKind, axis: Vec<f64>, data: Vec<f64>) -> Result<Self> {
        // validates the axis
        Spectrum::new(axis_kind, axis.clone(), vec![0.0; axis.len()])?;
        if nx == 0 || ny == 0 {
            return Err(invalid("cube", "empty grid"));
        }
        if data.len() != nx * ny * axis.len() {
            return Err(invalid(
                "cube",
                format!("{} values for {nx}×{ny}×{}", data.len(), axis.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cube"));
        }
        Ok(Self {
            nx,
            ny,
            axis_kind,
            axis,
            data,
        })
    }

    /// Builds a cube from a per-pixel function.
    pub fn from_fn(nx: usize, ny: usize, axis_kind: AxisKind, axis: Vec<f64>, f: impl Fn(usize, usize, f64) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(nx * ny * axis.len());
        for iy in 0..ny {
            for ix in 0..nx {
                data.extend(axis.iter().map(|&v| f(ix, iy, v)));
            }
        }
        Self::new(nx, ny, axis_kind, axis, data)
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn pixel(&self, ix: usize, iy: usize) -> Spectrum {
        let nk = self.axis.len();
        let start = (iy * self.nx + ix) * nk;
        Spectrum::new(self.axis_kind, self.axis.clone(), self.data[start..start + nk].to_vec())
            .expect("cube contents were validated")
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        for n in [self.nx, self.ny, self.axis.len()] {
            out.write_all(&(n as u32).to_le_bytes())?;
        }
        out.write_all(&[axis_code(self.axis_kind)])?;
        for v in self.axis.iter().chain(&self.data) {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("not a cube file (bad magic)".into()));
        }
        let version = read_u32(&mut input)?;
        if version != VERSION {
            return Err(Error::Parse(format!("unsupported cube version {version}")));
        }
        let nx = read_u32(&mut input)? as usize;
        let ny = read_u32(&mut input)? as usize;
        let nk = read_u32(&mut input)? as usize;
        let mut code = [0u8; 1];
        input.read_exact(&mut code)?;
        let kind = match code[0] {
            0 => AxisKind::WavelengthNm,
            1 => AxisKind::FrequencyMhz,
            2 => AxisKind::FrequencyGhz,
            c => return Err(Error::Parse(format!("unknown axis code {c}"))),
        };
        let axis = read_f64s(&mut input, nk)?;
        let data = read_f64s(&mut input, nx * ny * nk)?;
        Self::new(nx, ny, kind, axis, data)
    }

    /// Reads `dir/index.csv` (`x,y,file`) and the per-pixel CSVs it names.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Entry {
            x: usize,
            y: usize,
            file: String,
        }
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(dir.join("index.csv"))?;
        let entries = reader.deserialize::<Entry>().collect::<std::result::Result<Vec<_>, _>>()?;
        if entries.is_empty() {
            return Err(Error::Parse("index.csv lists no pixels".into()));
        }
        let nx = entries.iter().map(|e| e.x).max().unwrap() + 1;
        let ny = entries.iter().map(|e| e.y).max().unwrap() + 1;
        let mut pixels: Vec<Option<Spectrum>> = vec![None; nx * ny];
        for e in &entries {
            let path = dir.join(&e.file);
            let s = Spectrum::read_csv(std::fs::File::open(&path)?)
                .map_err(|err| Error::Parse(format!("{}: {err}", path.display())))?;
            let slot = &mut pixels[e.y * nx + e.x];
            if slot.is_some() {
                return Err(Error::Parse(format!("pixel ({}, {}) listed twice", e.x, e.y)));
            }
            *slot = Some(s);
        }
        let first = pixels[0]
            .as_ref()
            .ok_or_else(|| Error::Parse("pixel (0, 0) missing from index".into()))?;
        let (kind, axis) = (first.axis_kind, first.axis().to_vec());
        let mut data = Vec::with_capacity(nx * ny * axis.len());
        for (i, p) in pixels.iter().enumerate() {
            let p = p
                .as_ref()
                .ok_or_else(|| Error::Parse(format!("pixel ({}, {}) missing from index", i % nx, i / nx)))?;
            if p.axis() != axis.as_slice() || p.axis_kind != kind {
                return Err(Error::Parse(format!("pixel ({}, {}) has a different axis", i % nx, i / nx)));
            }
            data.extend_from_slice(p.intensity());
        }
        Self::new(nx, ny, kind, axis, data)
    }

    /// Reads a binary container, or a directory with an index.
    pub fn open(path: &Path) -> Result<Self> {
        if path.is_dir() {
            Self::read_dir(path)
        } else {
            Self::read_binary(std::io::BufReader::new(std::fs::File::open(path)?))
        }
    }
}

/// How each pixel is reduced to an integrated intensity.
#[derive(Debug, Clone, PartialEq)]
pub enum PixelMethod {
    /// Lorentzian line(s) on a polynomial background; the summed area.
    Peak(PeakSpec),
    /// Scaled template on a polynomial background; scale × template integral.
    Template {
        template: Spectrum,
        window: (f64, f64),
        background_degree: usize,
    },
}

/// Integrated line intensity per pixel; failed pixels hold NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityMap {
    pub nx: usize,
    pub ny: usize,
    /// Row-major over (y, x).
    pub values: Vec<f64>,
    pub failed: usize,
    pub failures: Vec<PixelFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelFailure {
    pub x: usize,
    pub y: usize,
    pub reason: String,
}

impl IntensityMap {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    /// CSV with columns `x,y,intensity`; failed pixels are written as `NaN`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "intensity"])?;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                w.write_record([ix.to_string(), iy.to_string(), format!("{}", self.get(ix, iy))])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn reduce_pixel(s: &Spectrum, method: &PixelMethod) -> Result<f64> {
    match method {
        PixelMethod::Peak(spec) => {
            let (lo, hi) = spec.window;
            let fits = fit_peak(s, spec)?;
            let (x, y) = s.window(lo, hi);
            let step = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
            let level = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let mut area = 0.0;
            for f in &fits {
                if !f.converged {
                    return Err(Error::NotConverged { iterations: f.iterations });
                }
                let reason = if !(f.height > 1e-9 * level) {
                    Some("no line above background")
                } else if f.height < 3.0 * f.sigma.height {
                    Some("height below 3σ")
                } else if f.center < lo || f.center > hi {
                    Some("centre outside window")
                } else if f.fwhm > hi - lo {
                    Some("wider than window")
                } else if f.fwhm < step {
                    Some("narrower than one grid step")
                } else {
                    None
                };
                if let Some(r) = reason {
                    return Err(Error::NoPeak(format!("{r} (centre {:.4}, height {:.4e})", f.center, f.height)));
                }
                area += f.area;
            }
            Ok(area)
        }
        PixelMethod::Template {
            template,
            window,
            background_degree,
        } => {
            let f = fit_template_background(s, template, *window, *background_degree)?;
            if !(f.scale > 0.0) || f.scale < 3.0 * f.scale_sigma {
                return Err(Error::NoPeak(format!("template scale {:.4e} not significant", f.scale)));
            }
            Ok(f.area)
        }
    }
}

/// Reduces every pixel independently. Pixel errors never abort the map;
/// they leave NaN and are listed in pixel order.
pub fn bin_hyperspectral(cube: &Cube, method: &PixelMethod) -> IntensityMap {
    let results: Vec<Result<f64>> = (0..cube.nx * cube.ny)
        .into_par_iter()
        .map(|i| reduce_pixel(&cube.pixel(i % cube.nx, i / cube.nx), method))
        .collect();
    let mut values = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                values.push(f64::NAN);
                failures.push(PixelFailure {
                    x: i % cube.nx,
                    y: i / cube.nx,
                    reason: e.to_string(),
                });
            }
        }
    }
    IntensityMap {
        nx: cube.nx,
        ny: cube.ny,
        failed: failures.len(),
        values,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_roundtrip() {
        let axis = Spectrum::linspace(600.0, 700.0, 11);
        let cube = Cube::from_fn(3, 2, AxisKind::WavelengthNm, axis, |x, y, v| x as f64 + 10.0 * y as f64 + v).unwrap();
        let mut buf = Vec::new();
        cube.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 * 4 + 1 + 8 * (11 + 66));
        let back = Cube::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, cube);
        assert_eq!(back.pixel(2, 1).intensity()[0], 612.0);
    }

    #[test]
    fn bad_magic() {
        assert!(matches!(Cube::read_binary(&b"NOTACUBE...."[..]), Err(Error::Parse(_))));
    }
}
