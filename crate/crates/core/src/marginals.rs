//! Univariate extreme-value machinery: the GEV law, probability-weighted
//! moment fitting, Kolmogorov–Smirnov checks, block maxima and the rank
//! transform of forecasts to the unit Fréchet scale.

use serde::{Deserialize, Serialize};

use crate::data::{ForecastArchive, FrechetPanel, MaximaMatrix};
use crate::error::{Error, Result};
use crate::special::{gamma, kolmogorov_sf, EULER_GAMMA};
use crate::stats::{average_ranks, ks_distance};

/// Shapes closer to zero than this use the Gumbel formulas.
const GUMBEL_EPS: f64 = 1e-8;

/// GEV location, scale and shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl GevParams {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite() && xi.is_finite()) {
            return Err(Error::Domain(format!("invalid GEV parameters mu={mu} sigma={sigma} xi={xi}")));
        }
        Ok(Self { mu, sigma, xi })
    }

    /// Unit Fréchet, `GEV(1, 1, 1)`.
    pub const UNIT_FRECHET: GevParams = GevParams { mu: 1.0, sigma: 1.0, xi: 1.0 };
}

pub fn gev_cdf(p: &GevParams, x: f64) -> f64 {
    let z = (x - p.mu) / p.sigma;
    if p.xi.abs() < GUMBEL_EPS {
        return (-(-z).exp()).exp();
    }
    let t = 1.0 + p.xi * z;
    if t <= 0.0 {
        // below the lower endpoint (xi > 0) or above the upper one (xi < 0)
        return if p.xi > 0.0 { 0.0 } else { 1.0 };
    }
    (-t.powf(-1.0 / p.xi)).exp()
}

pub fn gev_quantile(p: &GevParams, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("quantile level {q} outside (0, 1)")));
    }
    Ok(gev_quantile_neglog(p, -q.ln()))
}

/// Quantile expressed through `y = -ln q`, which stays accurate when `q`
/// underflows.
pub(crate) fn gev_quantile_neglog(p: &GevParams, y: f64) -> f64 {
    if p.xi.abs() < GUMBEL_EPS {
        p.mu - p.sigma * y.ln()
    } else {
        p.mu + p.sigma * (y.powf(-p.xi) - 1.0) / p.xi
    }
}

/// Block maxima of daily series, one series per station (`None` = missing).
///
/// Trailing days that do not fill a block are dropped, as is every block in
/// which any station misses a day, so rows stay aligned across stations.
pub fn block_maxima(series: &[Vec<Option<f64>>], block_length: usize) -> Result<MaximaMatrix> {
    if block_length < 1 {
        return Err(Error::Domain("block length must be >= 1".into()));
    }
    let n_days = series.first().map_or(0, Vec::len);
    if let Some(s) = series.iter().find(|s| s.len() != n_days) {
        return Err(Error::LengthMismatch { expected: n_days, got: s.len() });
    }
    let mut values = Vec::new();
    let mut n_blocks = 0;
    'blocks: for b in 0..n_days / block_length {
        let mut row = Vec::with_capacity(series.len());
        for s in series {
            let mut m = f64::NEG_INFINITY;
            for v in &s[b * block_length..(b + 1) * block_length] {
                match v {
                    Some(v) => m = m.max(*v),
                    None => continue 'blocks,
                }
            }
            row.push(m);
        }
        values.extend(row);
        n_blocks += 1;
    }
    MaximaMatrix::new(n_blocks, series.len(), values, block_length)
}

/// Unbiased sample probability-weighted moments `b0, b1, b2`.
pub fn sample_pwm(sample: &[f64]) -> [f64; 3] {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        let i = i as f64;
        b0 += v;
        b1 += v * i / (n - 1.0);
        b2 += v * i * (i - 1.0) / ((n - 1.0) * (n - 2.0));
    }
    [b0 / n, b1 / n, b2 / n]
}

/// `(1 - 3^-k) / (1 - 2^-k)`, decreasing in `k`, `ln 3 / ln 2` at 0.
fn pwm_shape_ratio(k: f64) -> f64 {
    if k.abs() < 1e-12 {
        return 3f64.ln() / 2f64.ln();
    }
    (-k * 3f64.ln()).exp_m1() / (-k * 2f64.ln()).exp_m1()
}

/// GEV fit by probability-weighted moments.
///
/// With `k = -xi`, the moment identities give
/// `(3 b2 - b0) / (2 b1 - b0) = (1 - 3^-k) / (1 - 2^-k)`, solved exactly by
/// bisection on `k in (-5, 5)`; scale and location follow in closed form.
pub fn pwm_fit(sample: &[f64]) -> Result<GevParams> {
    if sample.len() < 10 {
        return Err(Error::Estimation(format!("PWM fit needs >= 10 values, got {}", sample.len())));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::Estimation("sample contains non-finite values".into()));
    }
    let [b0, b1, b2] = sample_pwm(sample);
    let l2 = 2.0 * b1 - b0;
    if !(l2 > 0.0) || sample.iter().all(|&v| v == sample[0]) {
        return Err(Error::Estimation("degenerate sample: zero spread".into()));
    }
    let target = (3.0 * b2 - b0) / l2;
    let (mut lo, mut hi) = (-5.0, 5.0);
    let (f_lo, f_hi) = (pwm_shape_ratio(lo) - target, pwm_shape_ratio(hi) - target);
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Estimation(format!(
            "PWM ratio {target:.6} implies a shape outside (-5, 5)"
        )));
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        // ratio is decreasing in k
        if pwm_shape_ratio(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    let (sigma, mu) = if k.abs() < GUMBEL_EPS {
        let sigma = l2 / 2f64.ln();
        (sigma, b0 - sigma * EULER_GAMMA)
    } else {
        let g = gamma(1.0 + k);
        let sigma = l2 * k / (g * -(-k * 2f64.ln()).exp_m1());
        (sigma, b0 - sigma * (1.0 - g) / k)
    };
    GevParams::new(mu, sigma, -k)
}

/// One-sample Kolmogorov–Smirnov test against a GEV.
///
/// The p-value comes from the asymptotic Kolmogorov law with no correction
/// for estimated parameters.
pub fn ks_test(sample: &[f64], p: &GevParams) -> Result<(f64, f64)> {
    if sample.len() < 10 {
        return Err(Error::Estimation(format!("KS test needs >= 10 values, got {}", sample.len())));
    }
    let d = ks_distance(sample, |x| gev_cdf(p, x));
    let p_value = kolmogorov_sf((sample.len() as f64).sqrt() * d);
    Ok((d, p_value))
}

/// One row of `gev-fits.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationFit {
    pub station_id: u32,
    pub params: GevParams,
    pub ks_stat: f64,
    pub ks_pvalue: f64,
}

/// PWM fit plus KS check for every station column.
pub fn fit_stations(maxima: &MaximaMatrix, station_ids: &[u32]) -> Result<Vec<StationFit>> {
    use rayon::prelude::*;
    (0..maxima.n_stations())
        .into_par_iter()
        .map(|k| {
            let col = maxima.column(k);
            let params = pwm_fit(&col)?;
            let (ks_stat, ks_pvalue) = ks_test(&col, &params)?;
            Ok(StationFit { station_id: station_ids[k], params, ks_stat, ks_pvalue })
        })
        .collect()
}

pub fn write_station_fits(path: impl AsRef<std::path::Path>, fits: &[StationFit]) -> Result<()> {
    crate::data::write_lines(path.as_ref(), "station_id,mu,sigma,xi,ks_stat,ks_pvalue", |w| {
        for f in fits {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                f.station_id, f.params.mu, f.params.sigma, f.params.xi, f.ks_stat, f.ks_pvalue
            )?;
        }
        Ok(())
    })
}

/// Unit Fréchet value of a positive forecast with (average) rank `rank` among
/// `n` available days.
#[inline]
pub fn frechet_from_rank(rank: f64, n: usize) -> f64 {
    -1.0 / (rank / (n as f64 + 1.0)).ln()
}

/// Rank transform of every member/cell series to the unit Fréchet scale.
///
/// For member `j` and cell `s`, ranks are taken over the days on which that
/// member is available at that cell (zeros included, so they occupy the
/// lowest ranks); zero forecasts stay zero. The output is flattened
/// member-major, day-minor. A (member, day) map with any missing cell is
/// left out of the panel.
pub fn rank_to_frechet(archive: &ForecastArchive) -> Result<FrechetPanel> {
    use rayon::prelude::*;
    let (days, members, cells) = (archive.days(), archive.members(), archive.cells());
    if days * members * cells == 0 {
        return Err(Error::Validation("empty forecast archive".into()));
    }
    // transformed[member][cell][day], NaN where missing
    let per_member: Vec<Vec<Vec<f64>>> = (0..members)
        .into_par_iter()
        .map(|m| {
            (0..cells)
                .map(|c| {
                    let avail: Vec<(usize, f64)> =
                        (0..days).filter_map(|d| archive.get(d, m, c).map(|v| (d, v))).collect();
                    if avail.is_empty() {
                        return Err(Error::Validation(format!(
                            "member {m} has no available forecast at cell position {c}"
                        )));
                    }
                    let vals: Vec<f64> = avail.iter().map(|&(_, v)| v).collect();
                    let ranks = average_ranks(&vals);
                    let mut out = vec![f64::NAN; days];
                    for ((d, v), r) in avail.iter().zip(ranks) {
                        out[*d] = if *v > 0.0 { frechet_from_rank(r, vals.len()) } else { 0.0 };
                    }
                    Ok(out)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values = Vec::with_capacity(members * days * cells);
    let mut n_maps = 0;
    for member in &per_member {
        for d in 0..days {
            if member.iter().any(|col| col[d].is_nan()) {
                continue;
            }
            values.extend(member.iter().map(|col| col[d]));
            n_maps += 1;
        }
    }
    if n_maps == 0 {
        return Err(Error::Validation("every forecast map has a missing cell".into()));
    }
    if n_maps < members * days {
        log::warn!("dropped {} of {} forecast maps with missing cells", members * days - n_maps, members * days);
    }
    FrechetPanel::new(n_maps, cells, values)
}
