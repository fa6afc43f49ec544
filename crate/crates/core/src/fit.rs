//! Least-squares fits of Models C, D and E to empirical pairwise extremal
//! coefficients, and parametric-bootstrap envelopes for fitted models.
//!
//! Every fit minimises the unweighted RMSE between model and empirical
//! coefficients over all station pairs.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::SpectralBasis;
use crate::data::{MaximaMatrix, StationSet};
use crate::dependence::{pairwise_thetas, tuples, EcEstimate};
use crate::error::{Error, Result};
use crate::geo::{LonLat, PlanarProjection};
use crate::models::brownresnick::ec_from_variogram;
use crate::models::mixture::ec_tuple_mixture_raw;
use crate::models::reichshaby::power_norm;
use crate::models::{
    BrownResnickModel, MaxLinearModel, MaxMixtureModel, MaxStableModel, ModelDescriptor, ReichShabyModel, Site,
};
use crate::rng::{child_seed, Domain};
use crate::stats::quantile_sorted;

/// Coarse grid for the Reich–Shaby exponent.
pub const ALPHA_GRID: std::ops::RangeInclusive<u32> = 1..=99;
/// Width at which the golden-section refinement of alpha stops.
pub const ALPHA_TOL: f64 = 1e-10;
/// Quasi-random starting points for the Brown–Resnick search.
pub const MULTISTARTS: usize = 16;
/// Simplex diameter at which a Nelder–Mead run stops.
pub const SIMPLEX_TOL: f64 = 1e-8;
/// Objective evaluations allowed per Nelder–Mead run.
pub const MAX_EVALUATIONS: usize = 2000;

/// Root mean squared difference of two aligned sequences.
pub fn rmse(theoretical: &[f64], empirical: &[f64]) -> Result<f64> {
    if theoretical.len() != empirical.len() {
        return Err(Error::LengthMismatch { expected: theoretical.len(), got: empirical.len() });
    }
    if theoretical.is_empty() {
        return Err(Error::Domain("rmse of an empty set".into()));
    }
    let ss: f64 = theoretical.iter().zip(empirical).map(|(t, e)| (t - e) * (t - e)).sum();
    Ok((ss / theoretical.len() as f64).sqrt())
}

/// One fitted pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFit {
    pub members: [usize; 2],
    pub distance: Option<f64>,
    pub empirical: f64,
    pub model: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// Model label, `A` to `E`.
    pub label: String,
    pub model: MaxStableModel,
    pub parameters: BTreeMap<String, f64>,
    pub rmse: f64,
    pub objective_evaluations: usize,
    /// `model - empirical`, aligned with `pairs`.
    pub per_pair_residuals: Vec<f64>,
    pub pairs: Vec<PairFit>,
    pub warnings: Vec<String>,
    /// Winning multistart (Model E only).
    pub start_index: Option<usize>,
}

impl FitResult {
    fn assemble(
        label: &str,
        model: MaxStableModel,
        parameters: BTreeMap<String, f64>,
        empirical: &[PairObs],
        model_theta: Vec<f64>,
        evaluations: usize,
    ) -> Result<Self> {
        let emp: Vec<f64> = empirical.iter().map(|p| p.theta).collect();
        let rmse = rmse(&model_theta, &emp)?;
        let pairs: Vec<PairFit> = empirical
            .iter()
            .zip(&model_theta)
            .map(|(p, &m)| PairFit { members: p.members, distance: p.distance, empirical: p.theta, model: m })
            .collect();
        Ok(Self {
            label: label.to_string(),
            model,
            parameters,
            rmse,
            objective_evaluations: evaluations,
            per_pair_residuals: pairs.iter().map(|p| p.model - p.empirical).collect(),
            pairs,
            warnings: Vec::new(),
            start_index: None,
        })
    }

    /// Serialisable form with station ids in place of positions.
    pub fn to_record(&self, stations: &StationSet, basis_path: Option<&Path>) -> FitRecord {
        let ids = stations.ids();
        FitRecord {
            model_type: self.label.clone(),
            model: self.model.descriptor(basis_path),
            parameters: self.parameters.clone(),
            rmse: self.rmse,
            n_pairs: self.pairs.len(),
            evaluations: self.objective_evaluations,
            start_index: self.start_index,
            warnings: self.warnings.clone(),
            pairs: self
                .pairs
                .iter()
                .map(|p| PairRecord {
                    i: ids[p.members[0]],
                    j: ids[p.members[1]],
                    distance_km: p.distance,
                    empirical: p.empirical,
                    model: p.model,
                })
                .collect(),
        }
    }
}

/// Contents of `fit.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub model_type: String,
    pub model: ModelDescriptor,
    pub parameters: BTreeMap<String, f64>,
    pub rmse: f64,
    pub n_pairs: usize,
    pub evaluations: usize,
    pub start_index: Option<usize>,
    pub warnings: Vec<String>,
    pub pairs: Vec<PairRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub i: u32,
    pub j: u32,
    pub distance_km: Option<f64>,
    pub empirical: f64,
    pub model: f64,
}

impl FitRecord {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, Copy)]
struct PairObs {
    members: [usize; 2],
    distance: Option<f64>,
    theta: f64,
}

fn pair_observations(empirical: &[EcEstimate], n_stations: usize) -> Result<Vec<PairObs>> {
    if empirical.is_empty() {
        return Err(Error::Domain("no empirical extremal coefficients to fit".into()));
    }
    empirical
        .iter()
        .map(|e| {
            if e.members.len() != 2 {
                return Err(Error::Domain("fits use pairwise coefficients only".into()));
            }
            if e.members.iter().any(|&k| k >= n_stations) {
                return Err(Error::Domain(format!("pair {:?} refers to an unknown station", e.members)));
            }
            Ok(PairObs { members: [e.members[0], e.members[1]], distance: e.distance, theta: e.theta })
        })
        .collect()
}

fn check_cells(basis: &SpectralBasis, station_cells: &[usize]) -> Result<()> {
    match station_cells.iter().find(|&&c| c >= basis.n_cells()) {
        Some(c) => Err(Error::Domain(format!("station cell {c} outside the basis ({} cells)", basis.n_cells()))),
        None => Ok(()),
    }
}

fn max_linear_thetas(basis: &SpectralBasis, obs: &[PairObs], station_cells: &[usize]) -> Vec<f64> {
    let model = MaxLinearModel::new(basis.clone());
    obs.iter()
        .map(|p| {
            crate::models::maxlinear::ec_tuple_maxlinear(
                &model,
                &[station_cells[p.members[0]], station_cells[p.members[1]]],
            )
        })
        .collect()
}

/// Models A and B have no free parameters; this evaluates the max-linear model
/// of `basis` against the empirical coefficients.
pub fn evaluate_max_linear(
    label: &str,
    basis: &SpectralBasis,
    empirical: &[EcEstimate],
    station_cells: &[usize],
) -> Result<FitResult> {
    check_cells(basis, station_cells)?;
    let obs = pair_observations(empirical, station_cells.len())?;
    let theta = max_linear_thetas(basis, &obs, station_cells);
    FitResult::assemble(
        label,
        MaxStableModel::MaxLinear(MaxLinearModel::new(basis.clone())),
        BTreeMap::new(),
        &obs,
        theta,
        1,
    )
}

/// Model C: Reich–Shaby exponent by coarse grid then golden section.
pub fn fit_model_c(basis: &SpectralBasis, empirical: &[EcEstimate], station_cells: &[usize]) -> Result<FitResult> {
    check_cells(basis, station_cells)?;
    let obs = pair_observations(empirical, station_cells.len())?;
    // spectral values at the two ends of every pair, function-major
    let n = basis.n_functions();
    let ends: Vec<[f64; 2]> = basis
        .functions()
        .flat_map(|z| obs.iter().map(move |p| [z[station_cells[p.members[0]]], z[station_cells[p.members[1]]]]))
        .collect();
    let thetas = |alpha: f64| -> Vec<f64> {
        let mut t = vec![0.0; obs.len()];
        for f in 0..n {
            for (k, e) in ends[f * obs.len()..(f + 1) * obs.len()].iter().enumerate() {
                t[k] += power_norm(e.iter().copied(), alpha);
            }
        }
        t.iter_mut().for_each(|v| *v /= n as f64);
        t
    };
    let emp: Vec<f64> = obs.iter().map(|p| p.theta).collect();
    let objective = |alpha: f64| rmse(&thetas(alpha), &emp).expect("aligned");

    let grid: Vec<f64> = ALPHA_GRID.map(|k| k as f64 / 100.0).collect();
    let values: Vec<f64> = grid.par_iter().map(|&a| objective(a)).collect();
    let mut evals = grid.len();
    let k_best = argmin(&values);
    let (mut best_a, mut best_v) = (grid[k_best], values[k_best]);

    let lo = grid[k_best.saturating_sub(1)];
    let hi = grid[(k_best + 1).min(grid.len() - 1)];
    let (a_gs, v_gs, n_gs) = golden_section(&objective, lo, hi, ALPHA_TOL);
    evals += n_gs;
    if v_gs < best_v {
        best_a = a_gs;
        best_v = v_gs;
    }
    debug_assert!(values.iter().all(|&v| best_v <= v));

    let model = ReichShabyModel::new(basis.clone(), best_a)?;
    let mut params = BTreeMap::new();
    params.insert("alpha".to_string(), best_a);
    let mut res = FitResult::assemble("C", MaxStableModel::ReichShaby(model), params, &obs, thetas(best_a), evals)?;
    if k_best == 0 || k_best == grid.len() - 1 {
        res.warnings.push(format!("alpha minimum at the grid boundary ({})", grid[k_best]));
    }
    Ok(res)
}

fn argmin(v: &[f64]) -> usize {
    let mut k = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[k] {
            k = i;
        }
    }
    k
}

/// Golden-section search on `[lo, hi]`; returns `(x, f(x), evaluations)`.
pub fn golden_section(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64, usize) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut evals = 2;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
        evals += 1;
    }
    if f1 <= f2 {
        (x1, f1, evals)
    } else {
        (x2, f2, evals)
    }
}

/// Model D: mixture weight by closed-form least squares.
pub fn fit_model_d(basis: &SpectralBasis, empirical: &[EcEstimate], station_cells: &[usize]) -> Result<FitResult> {
    check_cells(basis, station_cells)?;
    let obs = pair_observations(empirical, station_cells.len())?;
    let theta_b = max_linear_thetas(basis, &obs, station_cells);
    // theta_D = theta_B + a (d' - theta_B), d' = number of distinct cells
    let slope: Vec<f64> = obs
        .iter()
        .zip(&theta_b)
        .map(|(p, tb)| {
            let d = if station_cells[p.members[0]] == station_cells[p.members[1]] { 1.0 } else { 2.0 };
            d - tb
        })
        .collect();
    let den: f64 = slope.iter().map(|s| s * s).sum();
    if !(den > 0.0) {
        return Err(Error::DegenerateFit("every pair has theta_B = 2; the mixture weight is unidentifiable".into()));
    }
    let num: f64 = obs.iter().zip(&theta_b).zip(&slope).map(|((p, tb), s)| s * (p.theta - tb)).sum();
    let a = (num / den).clamp(0.0, 1.0);
    let theta: Vec<f64> = obs
        .iter()
        .zip(&theta_b)
        .map(|(p, &tb)| ec_tuple_mixture_raw(a, tb, &[station_cells[p.members[0]], station_cells[p.members[1]]]))
        .collect();
    let model = MaxMixtureModel::new(MaxLinearModel::new(basis.clone()), a)?;
    let mut params = BTreeMap::new();
    params.insert("a".to_string(), a);
    FitResult::assemble("D", MaxStableModel::Mixture(model), params, &obs, theta, 1)
}

/// Unconstrained coordinates to Brown–Resnick parameters.
fn br_from_unconstrained(p: &[f64]) -> BrownResnickModel {
    BrownResnickModel {
        sigma2: p[0].clamp(-60.0, 10.0).exp(),
        b1: p[1].clamp(-40.0, 10.0).exp(),
        b2: p[2].clamp(-40.0, 10.0).exp(),
        theta_rot: 0.5 * p[3].atan(),
        beta: 2.0 / (1.0 + (-p[4].clamp(-30.0, 60.0)).exp()),
    }
}

/// Radical inverse of `i` in base `b`.
fn halton(mut i: usize, b: usize) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Model E: anisotropic Brown–Resnick by multistart Nelder–Mead.
pub fn fit_model_e(empirical: &[EcEstimate], station_coords: &[LonLat]) -> Result<FitResult> {
    let obs = pair_observations(empirical, station_coords.len())?;
    if obs.len() < 5 {
        return Err(Error::Domain(format!("Model E needs >= 5 pairs, got {}", obs.len())));
    }
    let proj = PlanarProjection::about_centroid(station_coords);
    let lags: Vec<[f64; 2]> =
        obs.iter().map(|p| proj.offset_km(station_coords[p.members[0]], station_coords[p.members[1]])).collect();
    let norms: Vec<f64> = lags.iter().map(|h| h[0].hypot(h[1])).collect();
    let mut distinct = norms.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if distinct.len() < 2 {
        return Err(Error::Domain("Model E needs pairs at >= 2 distinct distances".into()));
    }
    let positive: Vec<f64> = distinct.iter().copied().filter(|&d| d > 0.0).collect();
    let scale = if positive.is_empty() { 1.0 } else { quantile_sorted(&positive, 0.5) };
    let emp: Vec<f64> = obs.iter().map(|p| p.theta).collect();

    let theta_of = |m: &BrownResnickModel| -> Vec<f64> {
        lags.iter().map(|&h| ec_from_variogram(m.variogram(h))).collect()
    };
    let mse = |p: &[f64]| -> f64 {
        let m = br_from_unconstrained(p);
        lags.iter().zip(&emp).map(|(&h, e)| (ec_from_variogram(m.variogram(h)) - e).powi(2)).sum::<f64>()
            / lags.len() as f64
    };

    // starting box: sigma2 in [1e-3, 1], b in [0.1, 10] / median distance,
    // rotation over its full range, beta in roughly [0.24, 1.76]
    let lb = -scale.ln();
    let lo = [(1e-3f64).ln(), lb + (0.1f64).ln(), lb + (0.1f64).ln(), -3.0, -2.0];
    let hi = [0.0, lb + 10f64.ln(), lb + 10f64.ln(), 3.0, 2.0];
    const BASES: [usize; 5] = [2, 3, 5, 7, 11];
    let starts: Vec<Vec<f64>> = (0..MULTISTARTS)
        .map(|s| (0..5).map(|d| lo[d] + (hi[d] - lo[d]) * halton(s + 1, BASES[d])).collect())
        .collect();
    let runs: Vec<(Vec<f64>, f64, usize)> =
        starts.par_iter().map(|x0| nelder_mead(&mse, x0, 0.5, SIMPLEX_TOL, MAX_EVALUATIONS)).collect();
    let mut evals: usize = runs.iter().map(|r| r.2).sum();
    let mut best = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.1 < runs[best].1 {
            best = k;
        }
    }
    // restart from the winner to shake off a collapsed simplex
    let (mut x, mut fx) = (runs[best].0.clone(), runs[best].1);
    for step in [0.1, 0.01] {
        let (x2, f2, n2) = nelder_mead(&mse, &x, step, SIMPLEX_TOL, MAX_EVALUATIONS);
        evals += n2;
        if f2 <= fx {
            x = x2;
            fx = f2;
        }
    }
    if !fx.is_finite() {
        return Err(Error::Numerical("Model E objective is not finite".into()));
    }
    let model = br_from_unconstrained(&x);
    let mut params = BTreeMap::new();
    params.insert("sigma2".to_string(), model.sigma2);
    params.insert("b1".to_string(), model.b1);
    params.insert("b2".to_string(), model.b2);
    params.insert("theta_rot".to_string(), model.theta_rot);
    params.insert("beta".to_string(), model.beta);
    let theta = theta_of(&model);
    let mut res = FitResult::assemble(
        "E",
        MaxStableModel::BrownResnick { model, projection: proj },
        params,
        &obs,
        theta,
        evals,
    )?;
    res.start_index = Some(best);
    Ok(res)
}

/// Nelder–Mead minimisation from `x0` with an axis-aligned initial simplex of
/// edge `step`. Stops when every vertex lies within `tol` of the best one or
/// after `max_evals` evaluations. Returns `(x, f(x), evaluations)`.
pub fn nelder_mead(f: &impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, tol: f64, max_evals: usize) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;
    let eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fv = order.iter().map(|&i| fv[i]).collect();
        let diameter = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diameter < tol || evals >= max_evals {
            break;
        }
        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let xr = lerp(&centroid, &worst, -1.0);
        let fr = eval(&xr, &mut evals);
        if fr < fv[0] {
            let xe = lerp(&centroid, &worst, -2.0);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
        } else if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
        } else {
            let (xc, fc) = if fr < fv[n] {
                let xc = lerp(&centroid, &xr, 0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = lerp(&centroid, &worst, 0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < fv[n].min(fr) {
                simplex[n] = xc;
                fv[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    simplex[i] = lerp(&best, &simplex[i], 0.5);
                    fv[i] = eval(&simplex[i], &mut evals);
                }
            }
        }
    }
    (simplex[0].clone(), fv[0], evals)
}

/// Per-pair bootstrap quantiles of the estimated coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapEnvelope {
    /// Station positions, lexicographic.
    pub pairs: Vec<[usize; 2]>,
    pub q_low: Vec<f64>,
    pub q_high: Vec<f64>,
    pub n_replicates: usize,
    pub n_blocks: usize,
}

impl BootstrapEnvelope {
    pub fn mean_width(&self) -> f64 {
        self.q_low.iter().zip(&self.q_high).map(|(l, h)| h - l).sum::<f64>() / self.pairs.len() as f64
    }

    /// Whether `theta` (aligned with `pairs`) falls inside each interval.
    pub fn contains(&self, theta: &[f64]) -> Vec<bool> {
        theta.iter().zip(self.q_low.iter().zip(&self.q_high)).map(|(t, (l, h))| l <= t && t <= h).collect()
    }
}

/// Simulates `n_blocks` block maxima at the sites `n_replicates` times and
/// records the 2.5 % and 97.5 % quantiles of each pairwise estimate.
pub fn parametric_bootstrap(
    model: &MaxStableModel,
    sites: &[Site],
    n_replicates: usize,
    n_blocks: usize,
    seed: u64,
) -> Result<BootstrapEnvelope> {
    if n_replicates == 0 || n_blocks == 0 {
        return Err(Error::Domain("bootstrap needs at least one replicate and one block".into()));
    }
    if sites.len() < 2 {
        return Err(Error::Domain("bootstrap needs at least two sites".into()));
    }
    let replicates: Vec<Vec<f64>> = (0..n_replicates)
        .into_par_iter()
        .map(|r| {
            let fields = model.simulate_sites(sites, n_blocks, child_seed(seed, Domain::Bootstrap, r as u64))?;
            let maxima = MaximaMatrix::new(n_blocks, sites.len(), fields.values, 1)?;
            pairwise_thetas(&maxima)
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<[usize; 2]> = tuples(sites.len(), 2).into_iter().map(|t| [t[0], t[1]]).collect();
    let (mut q_low, mut q_high) = (Vec::with_capacity(pairs.len()), Vec::with_capacity(pairs.len()));
    for k in 0..pairs.len() {
        let mut v: Vec<f64> = replicates.iter().map(|r| r[k]).collect();
        v.sort_by(f64::total_cmp);
        q_low.push(quantile_sorted(&v, 0.025));
        q_high.push(quantile_sorted(&v, 0.975));
    }
    Ok(BootstrapEnvelope { pairs, q_low, q_high, n_replicates, n_blocks })
}

pub fn write_envelope(path: impl AsRef<Path>, stations: &StationSet, env: &BootstrapEnvelope) -> Result<()> {
    let ids = stations.ids();
    crate::data::write_lines(path.as_ref(), "i,j,q_low,q_high", |w| {
        for (p, (l, h)) in env.pairs.iter().zip(env.q_low.iter().zip(&env.q_high)) {
            writeln!(w, "{},{},{l},{h}", ids[p[0]], ids[p[1]])?;
        }
        Ok(())
    })
}

/// Reads `envelope.csv` as `(i, j, q_low, q_high)` rows keyed by station id.
pub fn read_envelope(path: impl AsRef<Path>) -> Result<Vec<(u32, u32, f64, f64)>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let parse_err = |line: usize, msg: String| Error::Parse { path: path.display().to_string(), line, msg };
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["i", "j", "q_low", "q_high"] {
        return Err(parse_err(1, "expected header i,j,q_low,q_high".into()));
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        let f = |i: usize| rec.get(i).unwrap_or("").to_string();
        let id = |i: usize| f(i).parse::<u32>().map_err(|e| parse_err(line, e.to_string()));
        let num = |i: usize| f(i).parse::<f64>().map_err(|e| parse_err(line, e.to_string()));
        out.push((id(0)?, id(1)?, num(2)?, num(3)?));
    }
    Ok(out)
}

/// Sites for the stations: their cells and exact coordinates.
pub fn station_sites(stations: &StationSet, station_cells: &[usize]) -> Vec<Site> {
    stations.coords().into_iter().zip(station_cells).map(|(pos, &cell)| Site { cell, pos }).collect()
}
