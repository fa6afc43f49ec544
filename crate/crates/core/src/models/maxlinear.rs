//! Max-linear model `Y(s) = (1/N) max_i A_i z_i(s)`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use super::Fields;
use crate::basis::SpectralBasis;
use crate::rng::{substream, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct MaxLinearModel {
    pub basis: SpectralBasis,
}

impl MaxLinearModel {
    pub fn new(basis: SpectralBasis) -> Self {
        Self { basis }
    }
}

/// `(1/N) sum_i max_k z_i(s_k)` for any number of sites.
pub fn ec_tuple_maxlinear(m: &MaxLinearModel, sites: &[usize]) -> f64 {
    let b = &m.basis;
    b.functions().map(|z| sites.iter().map(|&s| z[s]).fold(0.0, f64::max)).sum::<f64>() / b.n_functions() as f64
}

pub fn ec_pair_maxlinear(m: &MaxLinearModel, s1: usize, s2: usize) -> f64 {
    ec_tuple_maxlinear(m, &[s1, s2])
}

/// Fills `out` with one max-linear field.
pub(crate) fn fill_field<R: Rng + ?Sized>(basis: &SpectralBasis, rng: &mut R, out: &mut [f64]) {
    out.fill(0.0);
    let n = basis.n_functions() as f64;
    for z in basis.functions() {
        let e: f64 = Exp1.sample(rng);
        let a = 1.0 / (e * n);
        for (o, v) in out.iter_mut().zip(z) {
            let c = a * v;
            if c > *o {
                *o = c;
            }
        }
    }
}

/// Fields from the max-linear model over every basis cell.
pub fn simulate_maxlinear(m: &MaxLinearModel, n_fields: usize, seed: u64) -> Fields {
    let cells = m.basis.n_cells();
    let values: Vec<f64> = (0..n_fields)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = substream(seed, Domain::Field, k as u64);
            let mut out = vec![0.0; cells];
            fill_field(&m.basis, &mut rng, &mut out);
            out
        })
        .collect();
    Fields::new(n_fields, cells, values)
}
