//! Rank-based F-madogram estimation of pairwise and higher-order extremal
//! coefficients.
//!
//! For a max-stable vector with uniform margins `U(1..d)`,
//! `E[max_k U(k)] = theta / (theta + 1)`, so the d-wise madogram
//! `nu = E[max_k U(k) - mean_k U(k)]` gives `theta = (1 + 2 nu) / (1 - 2 nu)`.

use std::path::Path;

use rayon::prelude::*;

use crate::basis::SpectralBasis;
use crate::data::{MaximaMatrix, StationSet};
use crate::error::{Error, Result};
use crate::geo::haversine_km;
use crate::stats::average_ranks;

/// Fewest blocks the madogram estimator accepts.
pub const MIN_BLOCKS: usize = 20;

/// One empirical extremal coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct EcEstimate {
    /// Station positions, strictly increasing.
    pub members: Vec<usize>,
    pub theta: f64,
    pub madogram: f64,
    /// Haversine distance, pairs only.
    pub distance: Option<f64>,
}

/// Columns replaced by normalised ranks `R / (n + 1)`.
pub fn normalized_ranks(maxima: &MaximaMatrix) -> Result<Vec<Vec<f64>>> {
    let n = maxima.n_blocks();
    (0..maxima.n_stations())
        .map(|k| {
            let col = maxima.column(k);
            if col.iter().all(|&v| v == col[0]) {
                return Err(Error::Estimation(format!("station column {k} is constant")));
            }
            Ok(average_ranks(&col).into_iter().map(|r| r / (n as f64 + 1.0)).collect())
        })
        .collect()
}

#[allow(clippy::needless_range_loop)]
fn madogram_from_ranks(ranks: &[Vec<f64>], members: &[usize]) -> f64 {
    let n = ranks[members[0]].len();
    let d = members.len() as f64;
    let mut acc = 0.0;
    for t in 0..n {
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &k in members {
            let u = ranks[k][t];
            max = max.max(u);
            sum += u;
        }
        acc += max - sum / d;
    }
    acc / n as f64
}

fn check_members(maxima: &MaximaMatrix, members: &[usize]) -> Result<()> {
    if maxima.n_blocks() < MIN_BLOCKS {
        return Err(Error::Estimation(format!(
            "madogram needs >= {MIN_BLOCKS} blocks, got {}",
            maxima.n_blocks()
        )));
    }
    if members.len() < 2 {
        return Err(Error::Domain("extremal coefficients need at least two sites".into()));
    }
    if let Some(&k) = members.iter().find(|&&k| k >= maxima.n_stations()) {
        return Err(Error::Domain(format!("station position {k} out of range")));
    }
    Ok(())
}

/// Empirical multivariate F-madogram of the given station columns.
pub fn empirical_fmadogram(maxima: &MaximaMatrix, members: &[usize]) -> Result<f64> {
    check_members(maxima, members)?;
    let n = maxima.n_blocks() as f64;
    let ranks: Vec<Vec<f64>> = members
        .iter()
        .map(|&k| {
            let col = maxima.column(k);
            if col.iter().all(|&v| v == col[0]) {
                return Err(Error::Estimation(format!("station column {k} is constant")));
            }
            Ok(average_ranks(&col).into_iter().map(|r| r / (n + 1.0)).collect())
        })
        .collect::<Result<_>>()?;
    let local: Vec<usize> = (0..members.len()).collect();
    Ok(madogram_from_ranks(&ranks, &local))
}

/// Extremal coefficient from a madogram, clipped to `[1, d]`.
pub fn ec_from_madogram(nu: f64, d: usize) -> Result<f64> {
    if !(nu < 0.5) || nu.is_nan() {
        return Err(Error::Domain(format!("madogram {nu} must be < 1/2")));
    }
    if nu < 0.0 {
        return Err(Error::Domain(format!("madogram {nu} must be >= 0")));
    }
    Ok(((1.0 + 2.0 * nu) / (1.0 - 2.0 * nu)).clamp(1.0, d as f64))
}

/// All `d`-tuples of stations (lexicographic), `d` in {2, 3}.
pub fn tuples(n: usize, d: usize) -> Vec<Vec<usize>> {
    match d {
        2 => (0..n).flat_map(|i| ((i + 1)..n).map(move |j| vec![i, j])).collect(),
        3 => (0..n)
            .flat_map(|i| ((i + 1)..n).flat_map(move |j| ((j + 1)..n).map(move |k| vec![i, j, k])))
            .collect(),
        _ => Vec::new(),
    }
}

/// Empirical extremal coefficients for every pair (`d = 2`) or triple (`d = 3`).
pub fn ec_cloud(maxima: &MaximaMatrix, stations: &StationSet, d: usize) -> Result<Vec<EcEstimate>> {
    if !(d == 2 || d == 3) {
        return Err(Error::Domain(format!("order must be 2 or 3, got {d}")));
    }
    if stations.len() != maxima.n_stations() {
        return Err(Error::LengthMismatch { expected: stations.len(), got: maxima.n_stations() });
    }
    check_members(maxima, &(0..d.min(maxima.n_stations().max(2))).collect::<Vec<_>>())?;
    let ranks = normalized_ranks(maxima)?;
    let coords = stations.coords();
    tuples(maxima.n_stations(), d)
        .into_par_iter()
        .map(|members| {
            let nu = madogram_from_ranks(&ranks, &members);
            let theta = ec_from_madogram(nu, d)?;
            let distance = (d == 2).then(|| haversine_km(coords[members[0]], coords[members[1]]));
            Ok(EcEstimate { members, theta, madogram: nu, distance })
        })
        .collect()
}

/// Pairwise coefficients straight from a sample matrix, used by the bootstrap.
///
/// Constant columns are allowed here (every rank ties), which keeps tiny
/// replicate sizes well defined.
pub(crate) fn pairwise_thetas(maxima: &MaximaMatrix) -> Result<Vec<f64>> {
    let n = maxima.n_blocks() as f64;
    let ranks: Vec<Vec<f64>> = (0..maxima.n_stations())
        .map(|k| average_ranks(&maxima.column(k)).into_iter().map(|r| r / (n + 1.0)).collect())
        .collect();
    tuples(maxima.n_stations(), 2)
        .iter()
        .map(|m| ec_from_madogram(madogram_from_ranks(&ranks, m), 2))
        .collect()
}

/// Madogram of the spectral functions, `(1 / 2N) sum_i |z_i(s1) - z_i(s2)|`.
///
/// With per-cell mean one this equals the max-linear coefficient minus one.
pub fn spectral_madogram(basis: &SpectralBasis, s1: usize, s2: usize) -> f64 {
    let n = basis.n_functions();
    basis.functions().map(|z| (z[s1] - z[s2]).abs()).sum::<f64>() / (2.0 * n as f64)
}

pub fn write_ec(path: impl AsRef<Path>, stations: &StationSet, estimates: &[EcEstimate]) -> Result<()> {
    let ids = stations.ids();
    let order = estimates.first().map_or(2, |e| e.members.len());
    let header = if order == 2 { "i,j,distance_km,madogram,theta" } else { "i,j,k,madogram,theta" };
    crate::data::write_lines(path.as_ref(), header, |w| {
        for e in estimates {
            let m: Vec<String> = e.members.iter().map(|&k| ids[k].to_string()).collect();
            match e.distance {
                Some(dist) => writeln!(w, "{},{dist},{},{}", m.join(","), e.madogram, e.theta)?,
                None => writeln!(w, "{},{},{}", m.join(","), e.madogram, e.theta)?,
            }
        }
        Ok(())
    })
}

/// Reads `ec-pairs.csv` or `ec-triples.csv`, mapping station ids back to positions.
pub fn read_ec(path: impl AsRef<Path>, stations: &StationSet) -> Result<Vec<EcEstimate>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse { path: path.display().to_string(), line: 1, msg: e.to_string() })?
        .iter()
        .map(str::to_owned)
        .collect();
    let order = match headers.join(",").as_str() {
        "i,j,distance_km,madogram,theta" => 2,
        "i,j,k,madogram,theta" => 3,
        other => {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: 1,
                msg: format!("unrecognised header {other}"),
            })
        }
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |what: &str| Error::Parse { path: path.display().to_string(), line, msg: format!("bad {what}") };
        let num = |k: usize| rec.get(k).and_then(|s| s.parse::<f64>().ok());
        let mut members = Vec::with_capacity(order);
        for k in 0..order {
            let id: u32 = rec.get(k).and_then(|s| s.parse().ok()).ok_or_else(|| bad("station id"))?;
            members.push(
                stations
                    .position_of(id)
                    .ok_or_else(|| Error::Validation(format!("line {line}: unknown station id {id}")))?,
            );
        }
        let (distance, madogram, theta) = if order == 2 {
            (Some(num(2).ok_or_else(|| bad("distance"))?), num(3), num(4))
        } else {
            (None, num(3), num(4))
        };
        out.push(EcEstimate {
            members,
            theta: theta.ok_or_else(|| bad("theta"))?,
            madogram: madogram.ok_or_else(|| bad("madogram"))?,
            distance,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Station;
    use crate::geo::LonLat;
    use crate::rng::{substream, Domain};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn matrix(cols: &[Vec<f64>]) -> MaximaMatrix {
        let n = cols[0].len();
        let vals: Vec<f64> = (0..n).flat_map(|t| cols.iter().map(move |c| c[t])).collect();
        MaximaMatrix::new(n, cols.len(), vals, 18).unwrap()
    }

    #[test]
    fn identical_columns_have_zero_madogram() {
        let c: Vec<f64> = (1..=50).map(|k| (k as f64).sqrt()).collect();
        let m = matrix(&[c.clone(), c]);
        assert_eq!(empirical_fmadogram(&m, &[0, 1]).unwrap(), 0.0);
        assert_eq!(ec_from_madogram(0.0, 2).unwrap(), 1.0);
    }

    #[test]
    fn reversed_ranks_match_closed_form() {
        for n in [100usize, 101] {
            let a: Vec<f64> = (1..=n).map(|k| k as f64).collect();
            let b: Vec<f64> = a.iter().rev().copied().collect();
            let m = matrix(&[a, b]);
            let nf = n as f64;
            let brute: f64 =
                (1..=n).map(|r| (2.0 * r as f64 - nf - 1.0).abs()).sum::<f64>() / (2.0 * nf * (nf + 1.0));
            // sum_r |2r - n - 1| is n^2/2 (even n) or (n^2 - 1)/2 (odd n)
            let closed = if n % 2 == 0 {
                (nf + 2.0) / (4.0 * (nf + 1.0)) - 1.0 / (2.0 * (nf + 1.0))
            } else {
                (nf - 1.0) / (4.0 * nf)
            };
            let got = empirical_fmadogram(&m, &[0, 1]).unwrap();
            assert_abs_diff_eq!(got, brute, epsilon = 1e-14);
            assert_abs_diff_eq!(got, closed, epsilon = 1e-14);
            assert!(got < 0.25);
        }
    }

    #[test]
    fn independent_columns_give_one_sixth() {
        let mut rng = substream(21, Domain::Field, 0);
        let n = 5000;
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let nu = empirical_fmadogram(&matrix(&[a, b]), &[0, 1]).unwrap();
        assert_abs_diff_eq!(nu, 1.0 / 6.0, epsilon = 0.01);
    }

    #[test]
    fn constant_column_and_short_samples_fail() {
        let c: Vec<f64> = (1..=30).map(|k| k as f64).collect();
        let m = matrix(&[c.clone(), vec![2.0; 30]]);
        assert!(matches!(empirical_fmadogram(&m, &[0, 1]), Err(Error::Estimation(_))));
        let m = matrix(&[c[..10].to_vec(), c[..10].to_vec()]);
        assert!(matches!(empirical_fmadogram(&m, &[0, 1]), Err(Error::Estimation(_))));
    }

    #[test]
    fn madogram_to_theta_values() {
        assert_abs_diff_eq!(ec_from_madogram(1.0 / 6.0, 2).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ec_from_madogram(0.1, 2).unwrap(), 1.5, epsilon = 1e-14);
        assert_eq!(ec_from_madogram(0.24, 2).unwrap(), 2.0);
        assert!(matches!(ec_from_madogram(0.5, 2), Err(Error::Domain(_))));
        let grid: Vec<f64> = (0..100).map(|k| k as f64 * 0.0049).collect();
        let th: Vec<f64> = grid.iter().map(|&nu| ec_from_madogram(nu, 1000).unwrap()).collect();
        assert!(th.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cloud_sizes() {
        let mut rng = substream(5, Domain::Field, 0);
        let st = StationSet::new(
            (0..39).map(|k| Station { id: k, pos: LonLat::new(rng.random_range(0.0..6.0), 43.0) }).collect(),
        )
        .unwrap();
        let cols: Vec<Vec<f64>> = (0..39).map(|_| (0..25).map(|_| rng.random_range(1.0..2.0)).collect()).collect();
        let m = matrix(&cols);
        let pairs = ec_cloud(&m, &st, 2).unwrap();
        assert_eq!(pairs.len(), 741);
        assert!(pairs.iter().all(|e| e.distance.is_some() && (1.0..=2.0).contains(&e.theta)));
        assert_eq!(pairs[0].members, vec![0, 1]);
        assert_eq!(ec_cloud(&m, &st, 3).unwrap().len(), 9139);
    }

    proptest! {
        #[test]
        fn pairwise_madogram_is_half_mean_abs_rank_difference(
            a in proptest::collection::vec(0.0f64..1.0, 25),
            b in proptest::collection::vec(0.0f64..1.0, 25),
        ) {
            let m = matrix(&[a.clone(), b.clone()]);
            let n = 25.0;
            let ra = average_ranks(&a);
            let rb = average_ranks(&b);
            let half: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).abs() / (n + 1.0)).sum::<f64>() / (2.0 * n);
            prop_assert!((empirical_fmadogram(&m, &[0, 1]).unwrap() - half).abs() < 1e-14);
        }

        #[test]
        fn madogram_is_rank_invariant(
            a in proptest::collection::vec(0.01f64..10.0, 30),
            b in proptest::collection::vec(0.01f64..10.0, 30),
            c in proptest::collection::vec(0.01f64..10.0, 30),
        ) {
            let m1 = matrix(&[a.clone(), b.clone(), c.clone()]);
            let m2 = matrix(&[
                a.iter().map(|x| x.ln() + 50.0).collect(),
                b.iter().map(|x| x.powi(3)).collect(),
                c.iter().map(|x| 2.0 * x + 1.0).collect(),
            ]);
            prop_assert_eq!(empirical_fmadogram(&m1, &[0, 1, 2]).unwrap(), empirical_fmadogram(&m2, &[0, 1, 2]).unwrap());
        }
    }
}
