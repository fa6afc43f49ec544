//! File-based pipeline stages behind the `maxstable` binary.
//!
//! Each stage reads declared input files, writes its outputs, and records a
//! [`Manifest`] next to them. Output directories are guarded by a lock file
//! for the duration of a stage.

use std::fs::OpenOptions;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::basis::{build_basis_a, build_basis_b, read_basis, write_basis};
use crate::data::{
    map_stations_to_cells, maxima_station_ids, read_forecasts, read_grid, read_maxima, read_maxima_for_ids,
    read_stations,
};
use crate::dependence::{ec_cloud, read_ec, write_ec};
use crate::error::{Error, Result};
use crate::fit::{
    evaluate_max_linear, fit_model_c, fit_model_d, fit_model_e, parametric_bootstrap, read_envelope, station_sites,
    write_envelope, FitRecord,
};
use crate::marginals::{fit_stations, rank_to_frechet, write_station_fits};
use crate::models::MaxStableModel;
use crate::panel_io::{read_panel, write_panel};
use crate::report::{triple_thetas, write_model_vs_empirical, write_theta_vs_distance, write_triplewise};
use crate::synth::{generate_scenario, ScenarioConfig};

pub const LOCK_FILE: &str = ".maxstable.lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
}

/// What a stage reports back for its manifest.
#[derive(Debug, Clone, Default)]
pub struct StageOutput {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
}

/// SHA-256 of a file, or of every file below a directory (sorted by path).
pub fn digest_path(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    let mut files = Vec::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                p.is_file() && name != LOCK_FILE && !name.ends_with("manifest.json")
            })
            .collect();
        entries.sort();
        files.extend(entries);
    } else {
        files.push(path.to_path_buf());
    }
    for f in files {
        let mut bytes = Vec::new();
        std::fs::File::open(&f).and_then(|mut r| r.read_to_end(&mut bytes)).map_err(|e| Error::io(&f, e))?;
        if path.is_dir() {
            h.update(f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default().as_bytes());
        }
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

/// Exclusive lock on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Validation(format!(
                "{} is locked by another invocation (remove {} if stale)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(Error::io(path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

/// Where a stage writing `out` keeps its lock and manifest: the directory
/// itself for directory outputs, else the parent plus `<file>.manifest.json`.
fn manifest_location(out: &Path, out_is_dir: bool) -> (PathBuf, PathBuf) {
    if out_is_dir {
        (out.to_path_buf(), out.join("manifest.json"))
    } else {
        let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf();
        let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "output".into());
        (dir.clone(), dir.join(format!("{name}.manifest.json")))
    }
}

/// Runs a stage under the output lock and writes its manifest.
pub fn run_stage(
    command: &str,
    out: &Path,
    out_is_dir: bool,
    stage: impl FnOnce() -> Result<StageOutput>,
) -> Result<Manifest> {
    let (dir, manifest_path) = manifest_location(out, out_is_dir);
    let _lock = DirLock::acquire(&dir)?;
    let start = Instant::now();
    let res = stage()?;
    let inputs = res
        .inputs
        .iter()
        .map(|p| Ok(InputDigest { path: p.display().to_string(), sha256: digest_path(p)? }))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        inputs,
        outputs: res.outputs.iter().map(|p| p.display().to_string()).collect(),
        parameters: res.parameters,
        seed: res.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")
        .map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

pub fn synth(config: &Path, out: &Path) -> Result<StageOutput> {
    let cfg = ScenarioConfig::read(config)?;
    let scenario = generate_scenario(&cfg)?;
    scenario.write(out)?;
    let outputs = ["grid.csv", "stations.csv", "forecasts.csv", "maxima.csv", "truth.json"]
        .iter()
        .map(|f| out.join(f))
        .collect();
    Ok(StageOutput { inputs: vec![config.into()], outputs, parameters: json!({}), seed: Some(cfg.seed) })
}

pub fn margins_fit(maxima: &Path, stations: Option<&Path>, out: &Path) -> Result<StageOutput> {
    let (ids, matrix) = match stations {
        Some(s) => {
            let st = read_stations(s)?;
            (st.ids(), read_maxima(maxima, &st)?)
        }
        None => {
            let ids = maxima_station_ids(maxima)?;
            let m = read_maxima_for_ids(maxima, &ids)?;
            (ids, m)
        }
    };
    let fits = fit_stations(&matrix, &ids)?;
    write_station_fits(out, &fits)?;
    let mut inputs = vec![maxima.to_path_buf()];
    inputs.extend(stations.map(Path::to_path_buf));
    let mean_p = fits.iter().map(|f| f.ks_pvalue).sum::<f64>() / fits.len().max(1) as f64;
    log::info!("{} stations fitted, mean KS p-value {mean_p:.3}", fits.len());
    Ok(StageOutput { inputs, outputs: vec![out.into()], parameters: json!({}), seed: None })
}

pub fn transform(forecasts: &Path, grid: &Path, out: &Path) -> Result<StageOutput> {
    let g = read_grid(grid)?;
    let archive = read_forecasts(forecasts, &g)?;
    let panel = rank_to_frechet(&archive)?;
    write_panel(out, &panel)?;
    log::info!("panel: {} maps x {} cells", panel.n_maps(), panel.n_cells());
    Ok(StageOutput {
        inputs: vec![forecasts.into(), grid.into()],
        outputs: vec![out.into()],
        parameters: json!({ "n_maps": panel.n_maps(), "n_cells": panel.n_cells() }),
        seed: None,
    })
}

pub fn ec(maxima: &Path, stations: &Path, order: usize, out: &Path) -> Result<StageOutput> {
    let st = read_stations(stations)?;
    let m = read_maxima(maxima, &st)?;
    let est = ec_cloud(&m, &st, order)?;
    write_ec(out, &st, &est)?;
    Ok(StageOutput {
        inputs: vec![maxima.into(), stations.into()],
        outputs: vec![out.into()],
        parameters: json!({ "order": order, "n_blocks": m.n_blocks() }),
        seed: None,
    })
}

pub fn basis(panel: &Path, model: char, quantile: f64, out: &Path) -> Result<StageOutput> {
    let p = read_panel(panel)?;
    let b = match model {
        'A' => build_basis_a(&p)?,
        'B' => build_basis_b(&p, quantile)?,
        other => return Err(Error::Validation(format!("basis model must be A or B, got {other}"))),
    };
    write_basis(out, &b)?;
    log::info!("basis {model}: {} functions over {} cells", b.n_functions(), b.n_cells());
    let mut params = json!({ "model": model.to_string(), "n_functions": b.n_functions() });
    if model == 'B' {
        params["quantile"] = json!(quantile);
    }
    Ok(StageOutput {
        inputs: vec![panel.into()],
        outputs: vec![out.join("basis.csv"), out.join("basis-meta.json")],
        parameters: params,
        seed: None,
    })
}

pub struct FitArgs<'a> {
    pub model: char,
    pub basis: Option<&'a Path>,
    pub ec: &'a Path,
    pub stations: &'a Path,
    pub grid: &'a Path,
    pub out: &'a Path,
}

pub fn fit(args: &FitArgs) -> Result<StageOutput> {
    let st = read_stations(args.stations)?;
    let grid = read_grid(args.grid)?;
    let cells = map_stations_to_cells(&st, &grid)?;
    let empirical = read_ec(args.ec, &st)?;
    let mut inputs = vec![args.ec.to_path_buf(), args.stations.to_path_buf(), args.grid.to_path_buf()];
    let need_basis = || {
        args.basis.ok_or_else(|| Error::Validation(format!("model {} needs --basis", args.model)))
    };
    let result = match args.model {
        'E' => fit_model_e(&empirical, &st.coords())?,
        label @ ('A' | 'B' | 'C' | 'D') => {
            let dir = need_basis()?;
            inputs.push(dir.to_path_buf());
            let b = read_basis(dir)?;
            match label {
                'C' => fit_model_c(&b, &empirical, &cells)?,
                'D' => fit_model_d(&b, &empirical, &cells)?,
                _ => evaluate_max_linear(&label.to_string(), &b, &empirical, &cells)?,
            }
        }
        other => return Err(Error::Validation(format!("model must be one of A-E, got {other}"))),
    };
    for w in &result.warnings {
        log::warn!("{w}");
    }
    log::info!("model {}: rmse {:.5} over {} pairs", result.label, result.rmse, result.pairs.len());
    let record = result.to_record(&st, args.basis);
    record.write(args.out)?;
    Ok(StageOutput {
        inputs,
        outputs: vec![args.out.into()],
        parameters: json!({ "model": args.model.to_string() }),
        seed: None,
    })
}

/// Loads the model described by a `fit.json`; relative basis paths are also
/// tried next to the file.
pub fn load_fitted_model(fit_path: &Path) -> Result<(FitRecord, MaxStableModel)> {
    let record = FitRecord::read(fit_path)?;
    let model = record.model.load(fit_path.parent())?;
    Ok((record, model))
}

pub fn simulate(fit_path: &Path, grid: &Path, n: usize, seed: u64, out: &Path) -> Result<StageOutput> {
    if n == 0 {
        return Err(Error::Validation("--n must be >= 1".into()));
    }
    let g = read_grid(grid)?;
    let (_, model) = load_fitted_model(fit_path)?;
    if let Some(b) = model.basis() {
        if b.n_cells() != g.len() {
            return Err(Error::Validation(format!("basis has {} cells, grid has {}", b.n_cells(), g.len())));
        }
    }
    let fields = model.simulate_grid(&g.coords(), n, seed)?;
    let ids: Vec<usize> = (0..g.len()).collect();
    fields.write_csv(out, &ids)?;
    Ok(StageOutput {
        inputs: vec![fit_path.into(), grid.into()],
        outputs: vec![out.into()],
        parameters: json!({ "n": n }),
        seed: Some(seed),
    })
}

pub struct BootstrapArgs<'a> {
    pub fit: &'a Path,
    pub stations: &'a Path,
    pub grid: &'a Path,
    pub replicates: usize,
    pub blocks: usize,
    pub seed: u64,
    pub out: &'a Path,
}

pub fn bootstrap(args: &BootstrapArgs) -> Result<StageOutput> {
    let st = read_stations(args.stations)?;
    let grid = read_grid(args.grid)?;
    let cells = map_stations_to_cells(&st, &grid)?;
    let (_, model) = load_fitted_model(args.fit)?;
    let env = parametric_bootstrap(&model, &station_sites(&st, &cells), args.replicates, args.blocks, args.seed)?;
    write_envelope(args.out, &st, &env)?;
    log::info!("mean envelope width {:.4}", env.mean_width());
    Ok(StageOutput {
        inputs: vec![args.fit.into(), args.stations.into(), args.grid.into()],
        outputs: vec![args.out.into()],
        parameters: json!({ "replicates": args.replicates, "blocks": args.blocks }),
        seed: Some(args.seed),
    })
}

pub struct ReportArgs<'a> {
    pub fits: &'a [PathBuf],
    pub ec: &'a Path,
    pub envelope: Option<&'a Path>,
    pub stations: &'a Path,
    pub grid: Option<&'a Path>,
    pub triples: Option<&'a Path>,
    pub mc_fields: usize,
    pub seed: u64,
    pub out: &'a Path,
}

/// Writes `fig3-theta-vs-distance.csv`, `fig4-model-vs-empirical.csv` (needs an
/// envelope) and `fig6-triplewise.csv` (needs triples and the grid).
pub fn report(args: &ReportArgs) -> Result<StageOutput> {
    if args.fits.is_empty() {
        return Err(Error::Validation("report needs at least one --fit".into()));
    }
    std::fs::create_dir_all(args.out).map_err(|e| Error::io(args.out, e))?;
    let st = read_stations(args.stations)?;
    let ids = st.ids();
    let records = args.fits.iter().map(FitRecord::read).collect::<Result<Vec<_>>>()?;
    let pairs = read_ec(args.ec, &st)?;
    let mut inputs: Vec<PathBuf> = args.fits.to_vec();
    inputs.extend([args.ec.to_path_buf(), args.stations.to_path_buf()]);
    let mut outputs = Vec::new();

    let fig3 = args.out.join("fig3-theta-vs-distance.csv");
    write_theta_vs_distance(&fig3, &ids, &pairs, &records)?;
    outputs.push(fig3);

    if let Some(env_path) = args.envelope {
        let env = read_envelope(env_path)?;
        let fig4 = args.out.join("fig4-model-vs-empirical.csv");
        write_model_vs_empirical(&fig4, &records[0], &env)?;
        inputs.push(env_path.into());
        outputs.push(fig4);
    }

    if let Some(tri_path) = args.triples {
        let grid_path =
            args.grid.ok_or_else(|| Error::Validation("triplewise tables need --grid".into()))?;
        let grid = read_grid(grid_path)?;
        let cells = map_stations_to_cells(&st, &grid)?;
        let sites = station_sites(&st, &cells);
        let tri = read_ec(tri_path, &st)?;
        let triples: Vec<[usize; 3]> = tri.iter().map(|e| [e.members[0], e.members[1], e.members[2]]).collect();
        let empirical: Vec<f64> = tri.iter().map(|e| e.theta).collect();
        let mut columns = Vec::new();
        for (k, path) in args.fits.iter().enumerate() {
            let (rec, model) = load_fitted_model(path)?;
            let th = triple_thetas(&model, &sites, &triples, args.mc_fields, args.seed.wrapping_add(k as u64))?;
            columns.push((rec.model_type, th));
        }
        let fig6 = args.out.join("fig6-triplewise.csv");
        write_triplewise(&fig6, &ids, &triples, Some(&empirical), &columns)?;
        inputs.extend([tri_path.to_path_buf(), grid_path.to_path_buf()]);
        outputs.push(fig6);
    }
    Ok(StageOutput { inputs, outputs, parameters: json!({ "mc_fields": args.mc_fields }), seed: Some(args.seed) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let a = DirLock::acquire(dir.path()).unwrap();
        assert!(matches!(DirLock::acquire(dir.path()), Err(Error::Validation(_))));
        drop(a);
        assert!(DirLock::acquire(dir.path()).is_ok());
    }

    #[test]
    fn manifest_sits_next_to_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        std::fs::write(&input, "abc").unwrap();
        let out = dir.path().join("result.csv");
        let m = run_stage("test", &out, false, || {
            std::fs::write(&out, "x").unwrap();
            Ok(StageOutput { inputs: vec![input.clone()], outputs: vec![out.clone()], ..Default::default() })
        })
        .unwrap();
        assert_eq!(m.inputs[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert!(dir.path().join("result.csv.manifest.json").exists());
        assert!(!dir.path().join(LOCK_FILE).exists());
    }
}
