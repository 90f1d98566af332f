//! One-dimensional spectra and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    WavelengthNm,
    FrequencyMhz,
    FrequencyGhz,
}

impl AxisKind {
    /// CSV column name for the axis.
    pub fn column(self) -> &'static str {
        match self {
            AxisKind::WavelengthNm => "wavelength_nm",
            AxisKind::FrequencyMhz => "frequency_mhz",
            AxisKind::FrequencyGhz => "frequency_ghz",
        }
    }

    pub fn from_column(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "wavelength_nm" => Ok(AxisKind::WavelengthNm),
            "frequency_mhz" => Ok(AxisKind::FrequencyMhz),
            "frequency_ghz" => Ok(AxisKind::FrequencyGhz),
            other => Err(Error::Parse(format!(
                "line 1: unknown axis column `{other}` (expected wavelength_nm, frequency_mhz or frequency_ghz)"
            ))),
        }
    }

    pub fn is_frequency(self) -> bool {
        !matches!(self, AxisKind::WavelengthNm)
    }

    /// Factor converting axis units to MHz (frequency axes only).
    pub(crate) fn to_mhz(self) -> Option<f64> {
        match self {
            AxisKind::WavelengthNm => None,
            AxisKind::FrequencyMhz => Some(1.0),
            AxisKind::FrequencyGhz => Some(1e3),
        }
    }
}

/// How to scale spectra before comparing them across measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by the maximum intensity.
    Max,
    /// Divide by the trapezoidal integral over the axis.
    Area,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub axis_kind: AxisKind,
    axis: Vec<f64>,
    intensity: Vec<f64>,
}

impl Spectrum {
    /// Axis must be strictly increasing and all values finite.
    pub fn new(axis_kind: AxisKind, axis: Vec<f64>, intensity: Vec<f64>) -> Result<Self> {
        if axis.len() != intensity.len() {
            return Err(invalid(
                "spectrum",
                format!("axis has {} points but intensity has {}", axis.len(), intensity.len()),
            ));
        }
        if axis.len() < 2 {
            return Err(invalid("spectrum", "need at least two points"));
        }
        if axis.iter().chain(&intensity).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spectrum"));
        }
        if let Some(i) = axis.windows(2).position(|w| w[1] <= w[0]) {
            return Err(invalid("spectrum", format!("axis not strictly increasing at point {}", i + 1)));
        }
        Ok(Self {
            axis_kind,
            axis,
            intensity,
        })
    }

    /// Samples `f` on `axis`.
    pub fn from_fn(axis_kind: AxisKind, axis: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let intensity = axis.iter().map(|&x| f(x)).collect();
        Self::new(axis_kind, axis, intensity)
    }

    /// `n` evenly spaced points from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let step = (hi - lo) / (n - 1) as f64;
        (0..n).map(|i| lo + i as f64 * step).collect()
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.axis[0], self.axis[self.axis.len() - 1])
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        let (a, b) = self.range();
        a <= lo && hi <= b
    }

    /// Index range of points with `lo ≤ x ≤ hi`.
    pub fn window_indices(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.axis.partition_point(|&x| x < lo);
        let end = self.axis.partition_point(|&x| x <= hi);
        start..end.max(start)
    }

    /// Points inside `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> (&[f64], &[f64]) {
        let r = self.window_indices(lo, hi);
        (&self.axis[r.clone()], &self.intensity[r])
    }

    /// Linear interpolation; `None` outside the axis.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        let (a, b) = self.range();
        if !(x >= a && x <= b) {
            return None;
        }
        let i = self.axis.partition_point(|&v| v <= x);
        if i >= self.axis.len() {
            return Some(self.intensity[self.axis.len() - 1]);
        }
        let (x0, x1) = (self.axis[i - 1], self.axis[i]);
        let t = (x - x0) / (x1 - x0);
        Some(self.intensity[i - 1] + t * (self.intensity[i] - self.intensity[i - 1]))
    }

    /// This spectrum linearly interpolated onto `axis`.
    pub fn resample(&self, axis: &[f64]) -> Result<Spectrum> {
        let intensity = axis
            .iter()
            .map(|&x| {
                self.value_at(x).ok_or_else(|| {
                    let (a, b) = self.range();
                    Error::Coverage(format!("{x} lies outside [{a}, {b}]"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Spectrum::new(self.axis_kind, axis.to_vec(), intensity)
    }

    /// Trapezoidal integral over `[lo, hi]`, with the end segments interpolated.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        trapezoid_window(&self.axis, &self.intensity, lo, hi)
    }

    pub fn normalized(&self, mode: Normalization) -> Result<Spectrum> {
        let denom = match mode {
            Normalization::Max => self.intensity.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            Normalization::Area => {
                let (a, b) = self.range();
                self.integrate(a, b)
            }
        };
        if !(denom.abs() > 0.0) {
            return Err(Error::ZeroDenominator("normalization"));
        }
        let intensity = self.intensity.iter().map(|v| v / denom).collect();
        Spectrum::new(self.axis_kind, self.axis.clone(), intensity)
    }

    pub fn scaled(&self, factor: f64) -> Spectrum {
        Spectrum {
            axis_kind: self.axis_kind,
            axis: self.axis.clone(),
            intensity: self.intensity.iter().map(|v| v * factor).collect(),
        }
    }

    /// Pointwise sum; axes must match exactly.
    pub fn plus(&self, other: &Spectrum) -> Result<Spectrum> {
        if self.axis != other.axis {
            return Err(invalid("spectrum", "axes differ"));
        }
        let intensity = self.intensity.iter().zip(&other.intensity).map(|(a, b)| a + b).collect();
        Spectrum::new(self.axis_kind, self.axis.clone(), intensity)
    }

    pub fn with_intensity(&self, intensity: Vec<f64>) -> Result<Spectrum> {
        Spectrum::new(self.axis_kind, self.axis.clone(), intensity)
    }

    /// Reads `<axis column>,intensity` CSV; the header names the axis kind.
    pub fn read_csv<R: Read>(input: R) -> Result<Spectrum> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header = reader.headers()?.clone();
        if header.len() != 2 {
            return Err(Error::Parse(format!("line 1: expected 2 columns, found {}", header.len())));
        }
        let kind = AxisKind::from_column(&header[0])?;
        let mut axis = Vec::new();
        let mut intensity = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != 2 {
                return Err(Error::Parse(format!("line {line}: expected 2 columns, found {}", rec.len())));
            }
            for (col, out) in [(0, &mut axis), (1, &mut intensity)] {
                let v: f64 = rec[col].parse().map_err(|_| {
                    Error::Parse(format!("line {line}, column {}: `{}` is not a number", col + 1, &rec[col]))
                })?;
                out.push(v);
            }
        }
        Spectrum::new(kind, axis, intensity)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([self.axis_kind.column(), "intensity"])?;
        for (x, y) in self.axis.iter().zip(&self.intensity) {
            w.write_record([format!("{x}"), format!("{y}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trapezoid rule over `[lo, hi]` on sampled data.
pub(crate) fn trapezoid_window(x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    let lo = lo.max(x[0]);
    let hi = hi.min(x[x.len() - 1]);
    if !(hi > lo) {
        return 0.0;
    }
    let interp = |t: f64| {
        let i = x.partition_point(|&v| v <= t).clamp(1, x.len() - 1);
        let (x0, x1) = (x[i - 1], x[i]);
        y[i - 1] + (t - x0) / (x1 - x0) * (y[i] - y[i - 1])
    };
    let mut pts: Vec<(f64, f64)> = vec![(lo, interp(lo))];
    pts.extend(x.iter().zip(y).filter(|(&v, _)| v > lo && v < hi).map(|(&a, &b)| (a, b)));
    pts.push((hi, interp(hi)));
    pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

/// Linewidth in GHz of a line of width `fwhm_nm` centred at `center_nm`:
/// Δν = c·Δλ/λ².
pub fn fwhm_nm_to_ghz(center_nm: f64, fwhm_nm: f64) -> f64 {
    SPEED_OF_LIGHT * (fwhm_nm * 1e-9) / (center_nm * 1e-9).powi(2) / 1e9
}
