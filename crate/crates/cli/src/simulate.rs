use std::collections::BTreeSet;

use recoilimp::bca::{run_simulation, DepthProfileSet, SimConfig};

use crate::error::{config_error, CliError, CliResult};
use crate::manifest::{Outputs, RunManifest};
use crate::{Global, SimulateArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sweep {
    Energy,
    Thickness,
}

fn parse_sweep(raw: &[String]) -> CliResult<(Sweep, Vec<f64>)> {
    let kind = match raw[0].as_str() {
        "energy" => Sweep::Energy,
        "thickness" => Sweep::Thickness,
        other => return Err(CliError::config(format!("--sweep: unknown kind `{other}` (energy or thickness)"))),
    };
    let values = raw[1]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| CliError::config(format!("--sweep: `{s}` is not a non-negative number")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if values.is_empty() {
        return Err(CliError::config("--sweep: empty value list"));
    }
    Ok((kind, values))
}

fn label(kind: Option<Sweep>, value: f64) -> String {
    match kind {
        Some(Sweep::Energy) => format!("energy_{value}keV"),
        Some(Sweep::Thickness) => format!("thickness_{value}nm"),
        None => "profile".to_string(),
    }
}

fn film_thickness(config: &SimConfig) -> f64 {
    config.target.layers.first().map(|l| l.thickness_nm).unwrap_or(0.0)
}

fn summary(points: &[(String, SimConfig, DepthProfileSet)]) -> CliResult<Vec<u8>> {
    let species: BTreeSet<&String> = points.iter().flat_map(|(_, _, p)| p.species.iter()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "point",
        "energy_kev",
        "film_nm",
        "ion_mean_depth_nm",
        "ion_depth_std_nm",
        "ion_backscattered",
        "ion_transmitted",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for s in &species {
        header.push(format!("{s}_substrate_per_ion"));
        header.push(format!("{s}_substrate_std_error"));
        header.push(format!("{s}_depth_std_nm"));
    }
    let csv_err = |e: csv::Error| CliError::internal(format!("summary: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for (name, config, p) in points {
        let mut row = vec![
            name.clone(),
            format!("{}", config.ion.energy_kev),
            format!("{}", film_thickness(config)),
            format!("{}", p.primary.depth.mean_nm),
            format!("{}", p.primary.depth.std_nm),
            format!("{}", p.primary.backscattered),
            format!("{}", p.primary.transmitted),
        ];
        for s in &species {
            let (v, e) = p.substrate_count(s);
            row.push(format!("{v}"));
            row.push(format!("{e}"));
            row.push(format!("{}", p.depth_stats.get(*s).map(|d| d.std_nm).unwrap_or(0.0)));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::internal(format!("summary: {e}")))
}

pub fn run(global: &Global, args: &SimulateArgs) -> CliResult<()> {
    let (path, text) = global.read_config(&args.config)?;
    let mut base = SimConfig::from_json(&text).map_err(|e| config_error(&path, &text, e))?;
    if let Some(seed) = global.seed {
        base.seed = seed;
    }
    if let Some(ions) = args.ions {
        base.ion_count = ions;
    }
    base.validate().map_err(|e| config_error(&path, &text, e))?;

    let sweep = args.sweep.as_deref().map(parse_sweep).transpose()?;
    let configs: Vec<(String, SimConfig)> = match &sweep {
        None => vec![(label(None, 0.0), base.clone())],
        Some((kind, values)) => values
            .iter()
            .map(|&v| {
                let c = match kind {
                    Sweep::Energy => {
                        if v == 0.0 {
                            return Err(CliError::config("--sweep energy: values must be positive"));
                        }
                        base.with_energy_kev(v)
                    }
                    Sweep::Thickness => base.with_film_thickness(v).map_err(|e| config_error(&path, &text, e))?,
                };
                c.validate().map_err(|e| config_error(&path, &text, e))?;
                Ok((label(Some(*kind), v), c))
            })
            .collect::<CliResult<_>>()?,
    };

    let mut manifest = RunManifest::new("simulate", Some(base.seed), global.threads);
    manifest.configs.push(path);
    let pool = global.pool()?;
    let mut points = Vec::with_capacity(configs.len());
    for (name, config) in configs {
        log::info!("simulating {name}: {} histories", config.ion_count);
        let profile = pool.install(|| run_simulation(&config))?;
        points.push((name, config, profile));
    }

    let mut out = Outputs::new(&global.out, manifest)?;
    for (name, _, p) in &points {
        let mut json = Vec::new();
        p.write_json(&mut json)?;
        json.push(b'\n');
        out.write(&format!("{name}.json"), &json)?;
        let mut csv = Vec::new();
        p.write_csv(&mut csv)?;
        out.write(&format!("{name}.csv"), &csv)?;
    }
    let summary = summary(&points)?;
    out.write("summary.csv", &summary)?;
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_lists() {
        let raw = |a: &str, b: &str| vec![a.to_string(), b.to_string()];
        assert_eq!(parse_sweep(&raw("energy", "10, 30,50")).unwrap().1, vec![10.0, 30.0, 50.0]);
        assert!(parse_sweep(&raw("energy", "")).is_err());
        assert!(parse_sweep(&raw("energy", " , ")).is_err());
        assert!(parse_sweep(&raw("angle", "1")).is_err());
        assert!(parse_sweep(&raw("thickness", "1,x")).is_err());
    }

    #[test]
    fn point_names() {
        assert_eq!(label(Some(Sweep::Energy), 10.0), "energy_10keV");
        assert_eq!(label(Some(Sweep::Thickness), 2.5), "thickness_2.5nm");
    }
}
