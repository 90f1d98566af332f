use serde::Deserialize;

use recoilimp::bca::DepthProfileSet;
use recoilimp::fib::read_fluence_table;
use recoilimp::spectral::UnmixResult;
use recoilimp::yield_pipeline::{write_yield_csv, yield_report, YieldConfig};

use crate::error::{config_error, input_error, CliError, CliResult};
use crate::manifest::{Outputs, RunManifest};
use crate::{read_input, Global, YieldArgs};

/// The part of an `analyze --mode unmix` report that is needed here.
#[derive(Debug, Deserialize)]
struct UnmixReport {
    status: String,
    #[serde(default)]
    error: Option<String>,
    result: Option<UnmixResult>,
}

pub fn run(global: &Global, args: &YieldArgs) -> CliResult<()> {
    let (config_path, text) = global.read_config(&args.config)?;
    let config = YieldConfig::from_json(&text).map_err(|e| config_error(&config_path, &text, e))?;

    let bytes = read_input(&args.profile)?;
    let profile = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::input(format!("{}: {e}", args.profile.display())))
        .and_then(|t| DepthProfileSet::from_json(t).map_err(|e| input_error(&args.profile, e)))?;

    let bytes = read_input(&args.fluence)?;
    let table = read_fluence_table(bytes.as_slice()).map_err(|e| input_error(&args.fluence, e))?;
    let fluence = table
        .iter()
        .find(|(name, _)| *name == args.recipe)
        .map(|(_, f)| *f)
        .ok_or_else(|| {
            CliError::input(format!("{}: no recipe named `{}`", args.fluence.display(), args.recipe))
        })?;

    let bytes = read_input(&args.unmix)?;
    let report: UnmixReport = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::input(format!("{}: {e}", args.unmix.display())))?;
    let unmix = match (report.status.as_str(), report.result) {
        ("ok", Some(r)) => r,
        _ => {
            return Err(CliError::input(format!(
                "{}: unmix report has no result ({})",
                args.unmix.display(),
                report.error.unwrap_or_else(|| report.status.clone())
            )))
        }
    };

    let label = args.label.clone().unwrap_or_else(|| args.recipe.clone());
    let report = yield_report(&label, &profile, fluence, &unmix, &config)?;
    let mut csv = Vec::new();
    write_yield_csv(&mut csv, std::slice::from_ref(&report))?;

    let mut manifest = RunManifest::new("yield", Some(profile.seed), global.threads);
    manifest.configs.push(config_path);
    manifest.inputs = vec![args.profile.clone(), args.fluence.clone(), args.unmix.clone()];
    let mut out = Outputs::new(&global.out, manifest)?;
    out.write_json("yield.json", &report)?;
    out.write("yield.csv", &csv)?;
    out.finish()
}
