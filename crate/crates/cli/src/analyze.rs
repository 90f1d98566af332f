use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;

use recoilimp::spectral::{
    bin_hyperspectral, fit_odmr, fit_peak, unmix, Cube, PeakSpec, PixelFailure, PixelMethod, Spectrum,
};

use crate::error::{input_error, CliError, CliResult};
use crate::manifest::{Outputs, RunManifest};
use crate::{read_input, AnalyzeArgs, Global, Mode};

/// Components looked up in a `--models` directory, with their file names.
const MODEL_FILES: [(&str, &str); 3] = [("NV", "nv.csv"), ("SiV", "siv.csv"), ("irradiation", "irradiation.csv")];

#[derive(Debug, Serialize)]
struct Report<T: Serialize> {
    input: PathBuf,
    mode: &'static str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<T>,
}

impl<T: Serialize> Report<T> {
    fn from_result(input: &Path, mode: &'static str, r: recoilimp::Result<T>) -> Self {
        match r {
            Ok(v) => Self {
                input: input.to_path_buf(),
                mode,
                status: "ok",
                error: None,
                result: Some(v),
            },
            Err(e) => Self {
                input: input.to_path_buf(),
                mode,
                status: "failed",
                error: Some(e.to_string()),
                result: None,
            },
        }
    }
}

#[derive(Debug, Serialize)]
struct MapSummary {
    nx: usize,
    ny: usize,
    method: &'static str,
    window: (f64, f64),
    failed: usize,
    failures: Vec<PixelFailure>,
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Peak => "peak",
        Mode::Unmix => "unmix",
        Mode::Odmr => "odmr",
        Mode::Bin => "bin",
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".to_string())
}

fn read_spectrum(path: &Path) -> CliResult<Spectrum> {
    let bytes = read_input(path)?;
    Spectrum::read_csv(bytes.as_slice()).map_err(|e| input_error(path, e))
}

fn load_models(global: &Global, args: &AnalyzeArgs) -> CliResult<Vec<(String, PathBuf)>> {
    let mut models: Vec<(String, PathBuf)> = Vec::new();
    if let Some(dir) = &args.models {
        let dir = global.config_path(dir);
        for (name, file) in MODEL_FILES {
            models.push((name.to_string(), dir.join(file)));
        }
    }
    for spec in &args.model {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--model: expected NAME=PATH, got `{spec}`")))?;
        let path = global.config_path(Path::new(path));
        match models.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = path,
            None => models.push((name.to_string(), path)),
        }
    }
    if models.is_empty() {
        return Err(CliError::config("unmix needs model spectra: pass --models DIR or --model NAME=PATH"));
    }
    Ok(models)
}

pub fn run(global: &Global, args: &AnalyzeArgs) -> CliResult<()> {
    let mode = mode_name(args.mode);
    let mut manifest = RunManifest::new("analyze", None, global.threads);
    manifest.inputs = args.inputs.clone();
    let names: Vec<String> = args.inputs.iter().map(|p| stem(p)).collect();
    if names.iter().collect::<BTreeSet<_>>().len() != names.len() {
        return Err(CliError::config("inputs must have distinct file stems"));
    }
    let window = || {
        args.window
            .ok_or_else(|| CliError::config(format!("--mode {mode} needs --window lo,hi")))
    };
    let pool = global.pool()?;
    let mut out = Outputs::new(&global.out, RunManifest::new("analyze", None, global.threads))?;

    match args.mode {
        Mode::Peak => {
            let spec = PeakSpec {
                window: window()?,
                n_peaks: args.peaks,
                background_degree: args.background_degree,
            };
            for (input, name) in args.inputs.iter().zip(&names) {
                let s = read_spectrum(input)?;
                out.write_json(&format!("{name}.peak.json"), &Report::from_result(input, mode, fit_peak(&s, &spec)))?;
            }
        }
        Mode::Unmix => {
            let mut models = Vec::new();
            for (name, path) in load_models(global, args)? {
                let bytes = std::fs::read(&path)
                    .map_err(|e| CliError::input(format!("model `{name}`: {}: {e}", path.display())))?;
                let s = Spectrum::read_csv(bytes.as_slice())
                    .map_err(|e| CliError::input(format!("model `{name}`: {}: {e}", path.display())))?;
                manifest.configs.push(path);
                models.push((name, s));
            }
            for (input, name) in args.inputs.iter().zip(&names) {
                let s = read_spectrum(input)?;
                let r = unmix(&s, &models, args.band);
                out.write_json(&format!("{name}.unmix.json"), &Report::from_result(input, mode, r))?;
            }
        }
        Mode::Odmr => {
            for (input, name) in args.inputs.iter().zip(&names) {
                let s = read_spectrum(input)?;
                let r = fit_odmr(&s, args.dips);
                out.write_json(&format!("{name}.odmr.json"), &Report::from_result(input, mode, r))?;
            }
        }
        Mode::Bin => {
            let window = window()?;
            let method = match &args.template {
                Some(p) => {
                    let path = global.config_path(p);
                    manifest.configs.push(path.clone());
                    PixelMethod::Template {
                        template: read_spectrum(&path)?,
                        window,
                        background_degree: args.background_degree,
                    }
                }
                None => PixelMethod::Peak(PeakSpec {
                    window,
                    n_peaks: args.peaks,
                    background_degree: args.background_degree,
                }),
            };
            for (input, name) in args.inputs.iter().zip(&names) {
                let cube = Cube::open(input).map_err(|e| input_error(input, e))?;
                let map = pool.install(|| bin_hyperspectral(&cube, &method));
                let mut csv = Vec::new();
                map.write_csv(&mut csv)?;
                out.write(&format!("{name}.map.csv"), &csv)?;
                let summary = MapSummary {
                    nx: map.nx,
                    ny: map.ny,
                    method: if args.template.is_some() { "template" } else { "peak" },
                    window,
                    failed: map.failed,
                    failures: map.failures,
                };
                out.write_json(&format!("{name}.bin.json"), &Report::from_result(input, mode, Ok(summary)))?;
            }
        }
    }
    manifest.outputs = std::mem::take(&mut out.manifest.outputs);
    out.manifest = manifest;
    out.finish()
}
