//! The max-stable model zoo: closed-form extremal coefficients and exact
//! simulators for the max-linear, Reich–Shaby, max-mixture and Brown–Resnick
//! models.

pub mod brownresnick;
pub mod extremal;
pub mod maxlinear;
pub mod mixture;
pub mod reichshaby;
pub mod stable;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use brownresnick::{ec_pair_br, simulate_br, BrownResnickModel};
pub use maxlinear::{ec_pair_maxlinear, simulate_maxlinear, MaxLinearModel};
pub use mixture::{ec_pair_mixture, ec_triple_mixture, simulate_mixture, MaxMixtureModel};
pub use reichshaby::{ec_pair_reichshaby, ec_triple_reichshaby, simulate_reichshaby, ReichShabyModel};
pub use stable::sample_positive_stable;

use crate::basis::{read_basis, SpectralBasis};
use crate::error::{Error, Result};
use crate::geo::{LonLat, PlanarProjection};

/// Simulated fields, field-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Fields {
    pub n_fields: usize,
    pub n_cells: usize,
    pub values: Vec<f64>,
}

impl Fields {
    pub fn new(n_fields: usize, n_cells: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n_fields * n_cells);
        Self { n_fields, n_cells, values }
    }

    pub fn field(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_cells..(k + 1) * self.n_cells]
    }

    /// Values at one cell across fields.
    pub fn at(&self, cell: usize) -> Vec<f64> {
        (0..self.n_fields).map(|k| self.values[k * self.n_cells + cell]).collect()
    }

    /// Columns rearranged (and possibly repeated) as `cols`.
    pub fn select(&self, cols: &[usize]) -> Fields {
        let values = (0..self.n_fields).flat_map(|k| cols.iter().map(move |&c| self.values[k * self.n_cells + c])).collect();
        Fields::new(self.n_fields, cols.len(), values)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, cell_ids: &[usize]) -> Result<()> {
        crate::data::write_lines(path.as_ref(), "field_index,cell_id,value", |w| {
            for k in 0..self.n_fields {
                for (c, v) in self.field(k).iter().enumerate() {
                    writeln!(w, "{k},{},{v}", cell_ids[c])?;
                }
            }
            Ok(())
        })
    }
}

/// A location at which a model is evaluated: the grid cell that carries the
/// basis value and the point used for planar distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub cell: usize,
    pub pos: LonLat,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaxStableModel {
    MaxLinear(MaxLinearModel),
    ReichShaby(ReichShabyModel),
    Mixture(MaxMixtureModel),
    BrownResnick { model: BrownResnickModel, projection: PlanarProjection },
}

impl MaxStableModel {
    pub fn kind(&self) -> &'static str {
        match self {
            MaxStableModel::MaxLinear(_) => "maxlinear",
            MaxStableModel::ReichShaby(_) => "reichshaby",
            MaxStableModel::Mixture(_) => "mixture",
            MaxStableModel::BrownResnick { .. } => "brownresnick",
        }
    }

    pub fn basis(&self) -> Option<&SpectralBasis> {
        match self {
            MaxStableModel::MaxLinear(m) => Some(&m.basis),
            MaxStableModel::ReichShaby(m) => Some(&m.basis),
            MaxStableModel::Mixture(m) => Some(&m.inner.basis),
            MaxStableModel::BrownResnick { .. } => None,
        }
    }

    /// Closed-form pairwise coefficient.
    pub fn ec_pair(&self, a: Site, b: Site) -> f64 {
        match self {
            MaxStableModel::MaxLinear(m) => ec_pair_maxlinear(m, a.cell, b.cell),
            MaxStableModel::ReichShaby(m) => ec_pair_reichshaby(m, a.cell, b.cell),
            MaxStableModel::Mixture(m) => ec_pair_mixture(m, a.cell, b.cell),
            MaxStableModel::BrownResnick { model, projection } => {
                brownresnick::ec_pair_br_geo(model, projection, a.pos, b.pos)
            }
        }
    }

    /// Closed-form coefficient of any order, where one exists (not for
    /// Brown–Resnick beyond pairs).
    pub fn ec_tuple(&self, sites: &[Site]) -> Option<f64> {
        let cells: Vec<usize> = sites.iter().map(|s| s.cell).collect();
        match self {
            MaxStableModel::MaxLinear(m) => Some(maxlinear::ec_tuple_maxlinear(m, &cells)),
            MaxStableModel::ReichShaby(m) => Some(reichshaby::ec_tuple_reichshaby_raw(&m.basis, m.alpha, &cells)),
            MaxStableModel::Mixture(m) => Some(mixture::ec_tuple_mixture_raw(
                m.a,
                maxlinear::ec_tuple_maxlinear(&m.inner, &cells),
                &cells,
            )),
            MaxStableModel::BrownResnick { .. } if sites.len() == 2 => Some(self.ec_pair(sites[0], sites[1])),
            MaxStableModel::BrownResnick { .. } => None,
        }
    }

    /// Fields at the given sites (columns in site order). Coincident sites are
    /// simulated once and repeated.
    pub fn simulate_sites(&self, sites: &[Site], n_fields: usize, seed: u64) -> Result<Fields> {
        let same = |a: &Site, b: &Site| match self {
            MaxStableModel::BrownResnick { .. } => a.pos == b.pos,
            _ => a.cell == b.cell,
        };
        let mut unique: Vec<Site> = Vec::new();
        let cols: Vec<usize> = sites
            .iter()
            .map(|s| match unique.iter().position(|u| same(u, s)) {
                Some(k) => k,
                None => {
                    unique.push(*s);
                    unique.len() - 1
                }
            })
            .collect();
        let cells: Vec<usize> = unique.iter().map(|s| s.cell).collect();
        let fields = match self {
            MaxStableModel::MaxLinear(m) => {
                simulate_maxlinear(&MaxLinearModel::new(m.basis.restrict(&cells)), n_fields, seed)
            }
            MaxStableModel::ReichShaby(m) => {
                simulate_reichshaby(&ReichShabyModel::new(m.basis.restrict(&cells), m.alpha)?, n_fields, seed)
            }
            MaxStableModel::Mixture(m) => simulate_mixture(
                &MaxMixtureModel::new(MaxLinearModel::new(m.inner.basis.restrict(&cells)), m.a)?,
                n_fields,
                seed,
            ),
            MaxStableModel::BrownResnick { model, projection } => {
                let pts: Vec<LonLat> = unique.iter().map(|s| s.pos).collect();
                brownresnick::simulate_br_at(model, &pts, projection, n_fields, seed)?
            }
        };
        Ok(fields.select(&cols))
    }

    /// Fields over every cell of a grid (cell-id order).
    pub fn simulate_grid(&self, coords: &[LonLat], n_fields: usize, seed: u64) -> Result<Fields> {
        match self {
            MaxStableModel::MaxLinear(m) => Ok(simulate_maxlinear(m, n_fields, seed)),
            MaxStableModel::ReichShaby(m) => Ok(simulate_reichshaby(m, n_fields, seed)),
            MaxStableModel::Mixture(m) => Ok(simulate_mixture(m, n_fields, seed)),
            MaxStableModel::BrownResnick { model, projection } => {
                brownresnick::simulate_br_at(model, coords, projection, n_fields, seed)
            }
        }
    }

    pub fn descriptor(&self, basis_path: Option<&Path>) -> ModelDescriptor {
        let bp = || basis_path.map(|p| p.display().to_string()).unwrap_or_default();
        match self {
            MaxStableModel::MaxLinear(_) => ModelDescriptor::Maxlinear { basis_path: bp() },
            MaxStableModel::ReichShaby(m) => ModelDescriptor::Reichshaby { alpha: m.alpha, basis_path: bp() },
            MaxStableModel::Mixture(m) => ModelDescriptor::Mixture { a: m.a, basis_path: bp() },
            MaxStableModel::BrownResnick { model, projection } => ModelDescriptor::Brownresnick {
                sigma2: model.sigma2,
                b1: model.b1,
                b2: model.b2,
                theta_rot: model.theta_rot,
                beta: model.beta,
                ref_lat: projection.ref_lat,
            },
        }
    }
}

/// Serialisable model description (`model.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelDescriptor {
    Maxlinear { basis_path: String },
    Reichshaby { alpha: f64, basis_path: String },
    Mixture { a: f64, basis_path: String },
    Brownresnick { sigma2: f64, b1: f64, b2: f64, theta_rot: f64, beta: f64, ref_lat: f64 },
}

impl ModelDescriptor {
    /// Builds the model, reading the basis directory. Relative basis paths are
    /// tried as given, then relative to `base_dir`.
    pub fn load(&self, base_dir: Option<&Path>) -> Result<MaxStableModel> {
        let basis = |p: &str| -> Result<SpectralBasis> {
            let direct = PathBuf::from(p);
            match base_dir {
                Some(base) if !direct.is_absolute() && !direct.exists() => read_basis(base.join(&direct)),
                _ => read_basis(&direct),
            }
        };
        Ok(match self {
            ModelDescriptor::Maxlinear { basis_path } => MaxStableModel::MaxLinear(MaxLinearModel::new(basis(basis_path)?)),
            ModelDescriptor::Reichshaby { alpha, basis_path } => {
                MaxStableModel::ReichShaby(ReichShabyModel::new(basis(basis_path)?, *alpha)?)
            }
            ModelDescriptor::Mixture { a, basis_path } => {
                MaxStableModel::Mixture(MaxMixtureModel::new(MaxLinearModel::new(basis(basis_path)?), *a)?)
            }
            ModelDescriptor::Brownresnick { sigma2, b1, b2, theta_rot, beta, ref_lat } => MaxStableModel::BrownResnick {
                model: BrownResnickModel::new(*sigma2, *b1, *b2, *theta_rot, *beta)?,
                projection: PlanarProjection::new(*ref_lat),
            },
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Monte-Carlo extremal coefficient from simulated unit Fréchet columns,
/// through `P(all <= y) = exp(-theta / y)` at the level where one margin has
/// probability `u`.
pub fn ec_monte_carlo(fields: &Fields, cols: &[usize], u: f64) -> f64 {
    let level = -1.0 / u.ln();
    let hits = (0..fields.n_fields)
        .filter(|&k| {
            let f = fields.field(k);
            cols.iter().all(|&c| f[c] <= level)
        })
        .count();
    (hits as f64 / fields.n_fields as f64).ln() / u.ln()
}

/// Monte-Carlo extremal coefficient through `E[1 / max_k Y(s_k)] = 1 / theta`,
/// which holds because the componentwise maximum is Fréchet with scale theta.
pub fn ec_from_fields(fields: &Fields, cols: &[usize]) -> f64 {
    let s: f64 = (0..fields.n_fields)
        .map(|k| {
            let f = fields.field(k);
            1.0 / cols.iter().map(|&c| f[c]).fold(0.0, f64::max)
        })
        .sum();
    fields.n_fields as f64 / s
}
