//! Data-driven spectral bases built from rank-transformed forecast maps.
//!
//! Both constructions normalise every cell so that the basis functions
//! average to one there, which makes the resulting max-linear model have
//! exactly unit Fréchet margins.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::FrechetPanel;
use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisSource {
    /// Every forecast map (Model A).
    AllMaps,
    /// Sup-norm-normalised maps above a threshold (Models B–D).
    Exceedances,
}

/// `N` nonnegative functions over the cells with per-cell mean one.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    values: Vec<f64>,
    n_functions: usize,
    n_cells: usize,
    source: BasisSource,
    threshold: Option<f64>,
}

/// Tolerance on the per-cell mean.
pub const NORMALIZATION_TOL: f64 = 1e-10;

impl SpectralBasis {
    /// Checks nonnegativity and the per-cell normalisation.
    pub fn new(
        n_functions: usize,
        n_cells: usize,
        values: Vec<f64>,
        source: BasisSource,
        threshold: Option<f64>,
    ) -> Result<Self> {
        if n_functions == 0 {
            return Err(Error::Construction("basis needs at least one function".into()));
        }
        if values.len() != n_functions * n_cells {
            return Err(Error::LengthMismatch { expected: n_functions * n_cells, got: values.len() });
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Construction("basis values must be finite and >= 0".into()));
        }
        let basis = Self { values, n_functions, n_cells, source, threshold };
        for (s, m) in basis.cell_means().into_iter().enumerate() {
            if (m - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Construction(format!("cell {s} has basis mean {m}, expected 1")));
            }
        }
        Ok(basis)
    }

    pub fn n_functions(&self) -> usize {
        self.n_functions
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn source(&self) -> BasisSource {
        self.source
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn function(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cells..(i + 1) * self.n_cells]
    }

    pub fn functions(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_cells.max(1)).take(self.n_functions)
    }

    /// `z_i(s)`.
    #[inline]
    pub fn value(&self, i: usize, s: usize) -> f64 {
        self.values[i * self.n_cells + s]
    }

    pub fn cell_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.n_cells];
        for z in self.functions() {
            for (m, v) in means.iter_mut().zip(z) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= self.n_functions as f64);
        means
    }

    /// The same functions restricted to `cells` (in that order). Normalisation
    /// is per cell, so the restriction is again a valid basis.
    pub fn restrict(&self, cells: &[usize]) -> SpectralBasis {
        let values = self.functions().flat_map(|z| cells.iter().map(move |&c| z[c])).collect();
        SpectralBasis {
            values,
            n_functions: self.n_functions,
            n_cells: cells.len(),
            source: self.source,
            threshold: self.threshold,
        }
    }
}

/// Divide each map by the per-cell mean over all maps.
fn normalize(maps: Vec<Vec<f64>>, n_cells: usize, source: BasisSource, threshold: Option<f64>) -> Result<SpectralBasis> {
    let n = maps.len();
    let mut means = vec![0.0; n_cells];
    for m in &maps {
        for (acc, v) in means.iter_mut().zip(m) {
            *acc += v;
        }
    }
    for (s, m) in means.iter_mut().enumerate() {
        *m /= n as f64;
        if !(*m > 0.0) {
            return Err(Error::Construction(format!(
                "cell {s} is zero in every map, so it cannot be normalised"
            )));
        }
    }
    let mut values = Vec::with_capacity(n * n_cells);
    for m in &maps {
        values.extend(m.iter().zip(&means).map(|(v, mean)| v / mean));
    }
    SpectralBasis::new(n, n_cells, values, source, threshold)
}

/// Model A basis: every map divided by its cell's mean over all maps.
pub fn build_basis_a(panel: &FrechetPanel) -> Result<SpectralBasis> {
    let maps: Vec<Vec<f64>> = panel.maps().map(<[f64]>::to_vec).collect();
    normalize(maps, panel.n_cells(), BasisSource::AllMaps, None)
}

fn sup_norm(m: &[f64]) -> f64 {
    m.iter().copied().fold(0.0, f64::max)
}

/// Maps whose sup-norm reaches the empirical `quantile` of all sup-norms
/// (type 7), ordered by decreasing sup-norm, together with that threshold.
pub fn select_exceedances(panel: &FrechetPanel, quantile: f64) -> Result<(Vec<usize>, f64)> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::Domain(format!("quantile {quantile} outside (0, 1)")));
    }
    if panel.n_maps() == 0 {
        return Err(Error::Selection("panel has no maps".into()));
    }
    let norms: Vec<f64> = panel.maps().map(sup_norm).collect();
    let mut sorted = norms.clone();
    sorted.sort_by(f64::total_cmp);
    let u = quantile_sorted(&sorted, quantile);
    let mut idx: Vec<usize> = (0..norms.len()).filter(|&i| norms[i] >= u && norms[i] > 0.0).collect();
    if idx.is_empty() {
        return Err(Error::Selection(format!("no map reaches the threshold {u}")));
    }
    // stable: equal norms keep panel order
    idx.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    Ok((idx, u))
}

/// Model B basis from the given selected maps: each map scaled by its own
/// sup-norm, then divided by the per-cell mean over the selection.
pub fn build_basis_from_selection(panel: &FrechetPanel, selected: &[usize], threshold: f64) -> Result<SpectralBasis> {
    let maps: Vec<Vec<f64>> = selected
        .iter()
        .map(|&i| {
            let m = panel.map(i);
            let sup = sup_norm(m);
            m.iter().map(|v| v / sup).collect()
        })
        .collect();
    normalize(maps, panel.n_cells(), BasisSource::Exceedances, Some(threshold))
}

/// Model B basis at the given sup-norm quantile.
pub fn build_basis_b(panel: &FrechetPanel, quantile: f64) -> Result<SpectralBasis> {
    let (idx, u) = select_exceedances(panel, quantile)?;
    build_basis_from_selection(panel, &idx, u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisMeta {
    pub source: BasisSource,
    pub threshold: Option<f64>,
    pub n_functions: usize,
}

pub const BASIS_FILE: &str = "basis.csv";
pub const META_FILE: &str = "basis-meta.json";

/// Writes `basis.csv` and `basis-meta.json` into `dir`.
pub fn write_basis(dir: impl AsRef<Path>, basis: &SpectralBasis) -> Result<()> {
    let dir = dir.as_ref();
    crate::data::write_lines(&dir.join(BASIS_FILE), "function_index,cell_id,value", |w| {
        for (i, z) in basis.functions().enumerate() {
            for (c, v) in z.iter().enumerate() {
                writeln!(w, "{i},{c},{v}")?;
            }
        }
        Ok(())
    })?;
    let meta = BasisMeta { source: basis.source, threshold: basis.threshold, n_functions: basis.n_functions };
    let path = dir.join(META_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n").map_err(|e| Error::io(&path, e))
}

/// Reads a basis directory written by [`write_basis`].
pub fn read_basis(dir: impl AsRef<Path>) -> Result<SpectralBasis> {
    let dir = dir.as_ref();
    let meta_path = dir.join(META_FILE);
    let meta: BasisMeta = serde_json::from_str(
        &std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?,
    )?;
    let path = dir.join(BASIS_FILE);
    let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    let mut n_cells = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parse = || -> Option<(usize, usize, f64)> {
            Some((rec.get(0)?.parse().ok()?, rec.get(1)?.parse().ok()?, rec.get(2)?.parse().ok()?))
        };
        let row = parse().ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line,
            msg: "expected function_index,cell_id,value".into(),
        })?;
        if row.0 >= meta.n_functions {
            return Err(Error::Validation(format!("line {line}: function index {} out of range", row.0)));
        }
        n_cells = n_cells.max(row.1 + 1);
        rows.push(row);
    }
    let mut values = vec![f64::NAN; meta.n_functions * n_cells];
    for (i, c, v) in rows {
        values[i * n_cells + c] = v;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Validation("basis file does not cover every (function, cell)".into()));
    }
    SpectralBasis::new(meta.n_functions, n_cells, values, meta.source, meta.threshold)
}
