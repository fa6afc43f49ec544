//! Reich–Shaby model
//! `Y(s) = (1/N) U(s) (sum_i B_i z_i(s)^(1/alpha))^alpha`
//! with positive alpha-stable `B_i` and i.i.d. `1/alpha`-Fréchet noise `U`.

use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use super::{stable, Fields};
use crate::basis::SpectralBasis;
use crate::error::{Error, Result};
use crate::rng::{substream, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct ReichShabyModel {
    pub basis: SpectralBasis,
    pub alpha: f64,
}

impl ReichShabyModel {
    pub fn new(basis: SpectralBasis, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("alpha {alpha} outside (0, 1)")));
        }
        Ok(Self { basis, alpha })
    }
}

/// `(sum_k x_k^(1/alpha))^alpha`, factored through the largest term so that
/// small alphas neither overflow nor underflow.
pub(crate) fn power_norm(xs: impl Iterator<Item = f64> + Clone, alpha: f64) -> f64 {
    let m = xs.clone().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = xs.map(|x| (x / m).powf(1.0 / alpha)).sum();
    m * s.powf(alpha)
}

/// `(1/N) sum_i (sum_k z_i(s_k)^(1/alpha))^alpha`.
pub fn ec_tuple_reichshaby_raw(basis: &SpectralBasis, alpha: f64, sites: &[usize]) -> f64 {
    basis.functions().map(|z| power_norm(sites.iter().map(|&s| z[s]), alpha)).sum::<f64>()
        / basis.n_functions() as f64
}

pub fn ec_pair_reichshaby(m: &ReichShabyModel, s1: usize, s2: usize) -> f64 {
    ec_tuple_reichshaby_raw(&m.basis, m.alpha, &[s1, s2])
}

pub fn ec_triple_reichshaby(m: &ReichShabyModel, s1: usize, s2: usize, s3: usize) -> f64 {
    ec_tuple_reichshaby_raw(&m.basis, m.alpha, &[s1, s2, s3])
}

/// Fields over every basis cell.
///
/// Works on the log scale of the stable weights and rescales each cell by its
/// largest basis value, so that any alpha in (0, 1) stays finite.
pub fn simulate_reichshaby(m: &ReichShabyModel, n_fields: usize, seed: u64) -> Fields {
    let cells = m.basis.n_cells();
    let n = m.basis.n_functions();
    let inv = 1.0 / m.alpha;
    let mut zmax = vec![0.0f64; cells];
    for z in m.basis.functions() {
        for (mx, &v) in zmax.iter_mut().zip(z) {
            *mx = mx.max(v);
        }
    }
    // (z / zmax)^(1/alpha) in [0, 1], shared by every field
    let scaled: Vec<f64> = m
        .basis
        .functions()
        .flat_map(|z| z.iter().zip(&zmax).map(move |(&v, &mx)| if mx > 0.0 { (v / mx).powf(inv) } else { 0.0 }))
        .collect();
    let values: Vec<f64> = (0..n_fields)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = substream(seed, Domain::Field, k as u64);
            let ln_b: Vec<f64> = (0..n).map(|_| stable::draw_ln(m.alpha, &mut rng)).collect();
            let top = ln_b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut acc = vec![0.0; cells];
            for (i, lb) in ln_b.iter().enumerate() {
                let w = (lb - top).exp();
                if w == 0.0 {
                    continue;
                }
                for (a, p) in acc.iter_mut().zip(&scaled[i * cells..(i + 1) * cells]) {
                    *a += w * p;
                }
            }
            (0..cells)
                .map(|s| {
                    // P(U <= u) = exp(-u^(-1/alpha))  <=>  U = E^(-alpha)
                    let e: f64 = Exp1.sample(&mut rng);
                    if zmax[s] == 0.0 {
                        return 0.0;
                    }
                    let ln_acc = if acc[s] > 1e-250 {
                        acc[s].ln()
                    } else {
                        log_sum_exp(
                            m.basis
                                .functions()
                                .zip(&ln_b)
                                .map(|(z, lb)| lb - top + inv * (z[s] / zmax[s]).ln())
                                .collect::<Vec<_>>(),
                        )
                    };
                    (m.alpha * (top + ln_acc) - m.alpha * e.ln()).exp() * zmax[s] / n as f64
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Fields::new(n_fields, cells, values)
}

fn log_sum_exp(xs: Vec<f64>) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
