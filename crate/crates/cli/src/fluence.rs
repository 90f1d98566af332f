use recoilimp::fib::{fluence, read_recipes, write_fluence_table, DiameterTable};

use crate::error::{config_error, input_error, CliResult};
use crate::manifest::{Outputs, RunManifest};
use crate::{read_input, FluenceArgs, Global};

/// Back-solved beam diameters shipped with the toolkit.
const SHIPPED_DIAMETERS: &str = include_str!("../../../data/beam_diameters.json");

pub fn run(global: &Global, args: &FluenceArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("fluence", None, global.threads);
    let table = match &args.diameters {
        Some(p) => {
            let (path, text) = global.read_config(p)?;
            let t = DiameterTable::from_json(&text).map_err(|e| config_error(&path, &text, e))?;
            manifest.configs.push(path);
            t
        }
        None => DiameterTable::from_json(SHIPPED_DIAMETERS).expect("shipped diameter table parses"),
    };
    let bytes = read_input(&args.recipes)?;
    let recipes = read_recipes(bytes.as_slice(), Some(&table)).map_err(|e| input_error(&args.recipes, e))?;
    manifest.inputs.push(args.recipes.clone());

    let rows = recipes
        .into_iter()
        .map(|r| {
            let f = fluence(&r).map_err(|e| input_error(&args.recipes, e))?;
            Ok((r, f))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut csv = Vec::new();
    write_fluence_table(&mut csv, &rows)?;

    let mut out = Outputs::new(&global.out, manifest)?;
    out.write("fluence.csv", &csv)?;
    out.finish()
}
