//! Max-mixture of white unit Fréchet noise and a max-linear process:
//! `Y(s) = max(a N(s), (1 - a) Y_B(s))`.

use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use super::maxlinear::{ec_tuple_maxlinear, fill_field, MaxLinearModel};
use super::Fields;
use crate::error::{Error, Result};
use crate::rng::{substream, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMixtureModel {
    pub inner: MaxLinearModel,
    pub a: f64,
}

impl MaxMixtureModel {
    pub fn new(inner: MaxLinearModel, a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Domain(format!("mixture weight {a} outside [0, 1]")));
        }
        Ok(Self { inner, a })
    }
}

/// `d' a + (1 - a) theta_B`, where `d'` counts distinct cells (noise is shared
/// by sites on the same cell).
pub fn ec_tuple_mixture_raw(a: f64, theta_b: f64, sites: &[usize]) -> f64 {
    let mut distinct = sites.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    distinct.len() as f64 * a + (1.0 - a) * theta_b
}

pub fn ec_pair_mixture(m: &MaxMixtureModel, s1: usize, s2: usize) -> f64 {
    ec_tuple_mixture_raw(m.a, ec_tuple_maxlinear(&m.inner, &[s1, s2]), &[s1, s2])
}

pub fn ec_triple_mixture(m: &MaxMixtureModel, s1: usize, s2: usize, s3: usize) -> f64 {
    let sites = [s1, s2, s3];
    ec_tuple_mixture_raw(m.a, ec_tuple_maxlinear(&m.inner, &sites), &sites)
}

pub fn simulate_mixture(m: &MaxMixtureModel, n_fields: usize, seed: u64) -> Fields {
    let cells = m.inner.basis.n_cells();
    let values: Vec<f64> = (0..n_fields)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = substream(seed, Domain::Field, k as u64);
            let mut out = vec![0.0; cells];
            fill_field(&m.inner.basis, &mut rng, &mut out);
            for o in out.iter_mut() {
                let e: f64 = Exp1.sample(&mut rng);
                *o = (m.a / e).max((1.0 - m.a) * *o);
            }
            out
        })
        .collect();
    Fields::new(n_fields, cells, values)
}
