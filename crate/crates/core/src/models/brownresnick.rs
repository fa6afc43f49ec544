//! Anisotropic Brown–Resnick process with a nugget.
//!
//! Variogram `gamma(h) = sigma2 * 1{h != 0} + |diag(b1, b2) R(theta) h|^beta`
//! for planar offsets `h` in km, with `R(theta)` the rotation
//! `[[cos, sin], [-sin, cos]]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::extremal::ExtremalSimulator;
use super::Fields;
use crate::data::GridSpec;
use crate::error::{Error, Result};
use crate::geo::{LonLat, PlanarProjection};
use crate::rng::{substream, Domain};
use crate::special::std_normal_cdf;

/// Largest grid handled by the dense factorisation.
pub const MAX_DENSE_POINTS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrownResnickModel {
    pub sigma2: f64,
    pub b1: f64,
    pub b2: f64,
    pub theta_rot: f64,
    pub beta: f64,
}

impl BrownResnickModel {
    pub fn new(sigma2: f64, b1: f64, b2: f64, theta_rot: f64, beta: f64) -> Result<Self> {
        let quarter = std::f64::consts::FRAC_PI_4;
        let ok = sigma2 >= 0.0
            && sigma2.is_finite()
            && b1 > 0.0
            && b1.is_finite()
            && b2 > 0.0
            && b2.is_finite()
            && theta_rot > -quarter
            && theta_rot < quarter
            && beta > 0.0
            && beta <= 2.0;
        if !ok {
            return Err(Error::Domain(format!(
                "Brown-Resnick parameters out of range: sigma2={sigma2} b1={b1} b2={b2} theta={theta_rot} beta={beta}"
            )));
        }
        Ok(Self { sigma2, b1, b2, theta_rot, beta })
    }

    /// Variogram at a planar offset (km).
    pub fn variogram(&self, h: [f64; 2]) -> f64 {
        if h[0] == 0.0 && h[1] == 0.0 {
            return 0.0;
        }
        let (s, c) = self.theta_rot.sin_cos();
        let x = self.b1 * (c * h[0] + s * h[1]);
        let y = self.b2 * (-s * h[0] + c * h[1]);
        self.sigma2 + (x * x + y * y).sqrt().powf(self.beta)
    }

    /// Variogram matrix between geographic points.
    pub fn variogram_matrix(&self, points: &[LonLat], proj: &PlanarProjection) -> Vec<f64> {
        let n = points.len();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.variogram(proj.offset_km(points[i], points[j]));
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        g
    }
}

/// Extremal coefficient `2 Phi(sqrt(gamma / 2))` for a variogram value.
pub fn ec_from_variogram(gamma: f64) -> f64 {
    2.0 * std_normal_cdf((gamma / 2.0).sqrt())
}

/// Pairwise extremal coefficient at a planar offset (km).
pub fn ec_pair_br(m: &BrownResnickModel, h: [f64; 2]) -> f64 {
    ec_from_variogram(m.variogram(h))
}

/// Pairwise extremal coefficient between two geographic points.
pub fn ec_pair_br_geo(m: &BrownResnickModel, proj: &PlanarProjection, a: LonLat, b: LonLat) -> f64 {
    ec_pair_br(m, proj.offset_km(a, b))
}

/// Simulator for a fixed set of geographic points.
pub fn br_simulator(m: &BrownResnickModel, points: &[LonLat], proj: &PlanarProjection) -> Result<ExtremalSimulator> {
    if points.len() > MAX_DENSE_POINTS {
        return Err(Error::Domain(format!(
            "{} points exceed the dense simulation cap of {MAX_DENSE_POINTS}",
            points.len()
        )));
    }
    ExtremalSimulator::new(points.len(), m.variogram_matrix(points, proj)).map_err(|e| match e {
        Error::Numerical(msg) => Error::Numerical(format!(
            "{msg} (sigma2={}, b1={}, b2={}, theta={}, beta={})",
            m.sigma2, m.b1, m.b2, m.theta_rot, m.beta
        )),
        other => other,
    })
}

/// Runs a simulator for `n_fields` independent fields.
pub fn simulate_points(sim: &ExtremalSimulator, n_fields: usize, seed: u64) -> Fields {
    let n = sim.len();
    let values: Vec<f64> = (0..n_fields)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = substream(seed, Domain::Field, k as u64);
            let mut y = vec![0.0; n];
            sim.simulate_into(&mut rng, &mut y);
            y
        })
        .collect();
    Fields::new(n_fields, n, values)
}

/// Fields over every grid cell (indexed by cell id), with the planar
/// projection centred on the grid.
pub fn simulate_br(m: &BrownResnickModel, grid: &GridSpec, n_fields: usize, seed: u64) -> Result<Fields> {
    let coords = grid.coords();
    let proj = PlanarProjection::about_centroid(&coords);
    simulate_br_at(m, &coords, &proj, n_fields, seed)
}

pub fn simulate_br_at(
    m: &BrownResnickModel,
    points: &[LonLat],
    proj: &PlanarProjection,
    n_fields: usize,
    seed: u64,
) -> Result<Fields> {
    let sim = br_simulator(m, points, proj)?;
    Ok(simulate_points(&sim, n_fields, seed))
}
