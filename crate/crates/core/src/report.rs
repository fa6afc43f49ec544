//! Plot-ready tables: coefficients against distance, model against empirical
//! coefficients with bootstrap envelopes, and triplewise comparisons.

use std::collections::HashMap;
use std::path::Path;

use crate::data::write_lines;
use crate::dependence::EcEstimate;
use crate::error::{Error, Result};
use crate::fit::FitRecord;
use crate::models::{ec_from_fields, MaxStableModel, Site};

fn model_by_pair(fit: &FitRecord) -> HashMap<(u32, u32), f64> {
    fit.pairs.iter().map(|p| ((p.i, p.j), p.model)).collect()
}

fn lookup(map: &HashMap<(u32, u32), f64>, i: u32, j: u32) -> Result<f64> {
    map.get(&(i, j))
        .or_else(|| map.get(&(j, i)))
        .copied()
        .ok_or_else(|| Error::Validation(format!("pair ({i}, {j}) missing from fit")))
}

/// `i,j,distance_km,empirical,model_<label>...` for every empirical pair.
pub fn write_theta_vs_distance(
    path: impl AsRef<Path>,
    ids: &[u32],
    empirical: &[EcEstimate],
    fits: &[FitRecord],
) -> Result<()> {
    let maps: Vec<_> = fits.iter().map(model_by_pair).collect();
    let mut rows = Vec::with_capacity(empirical.len());
    for e in empirical.iter().filter(|e| e.members.len() == 2) {
        let (i, j) = (ids[e.members[0]], ids[e.members[1]]);
        let models = maps.iter().map(|m| lookup(m, i, j)).collect::<Result<Vec<_>>>()?;
        rows.push((i, j, e.distance.unwrap_or(f64::NAN), e.theta, models));
    }
    let header = std::iter::once("i,j,distance_km,empirical".to_string())
        .chain(fits.iter().map(|f| format!("model_{}", f.model_type)))
        .collect::<Vec<_>>()
        .join(",");
    write_lines(path.as_ref(), &header, |w| {
        for (i, j, d, t, models) in &rows {
            write!(w, "{i},{j},{d},{t}")?;
            for m in models {
                write!(w, ",{m}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
}

/// `i,j,distance_km,empirical,model,q_low,q_high,inside` where `inside` says
/// whether the empirical coefficient lies in the envelope.
pub fn write_model_vs_empirical(
    path: impl AsRef<Path>,
    fit: &FitRecord,
    envelope: &[(u32, u32, f64, f64)],
) -> Result<()> {
    let env: HashMap<(u32, u32), (f64, f64)> = envelope.iter().map(|&(i, j, l, h)| ((i, j), (l, h))).collect();
    let mut rows = Vec::with_capacity(fit.pairs.len());
    for p in &fit.pairs {
        let (l, h) = env
            .get(&(p.i, p.j))
            .or_else(|| env.get(&(p.j, p.i)))
            .copied()
            .ok_or_else(|| Error::Validation(format!("pair ({}, {}) missing from envelope", p.i, p.j)))?;
        rows.push((p, l, h));
    }
    write_lines(path.as_ref(), "i,j,distance_km,empirical,model,q_low,q_high,inside", |w| {
        for (p, l, h) in &rows {
            let inside = (*l <= p.empirical && p.empirical <= *h) as u8;
            let d = p.distance_km.unwrap_or(f64::NAN);
            writeln!(w, "{},{},{d},{},{},{l},{h},{inside}", p.i, p.j, p.empirical, p.model)?;
        }
        Ok(())
    })
}

/// Triplewise coefficients of a model: closed form where available, otherwise
/// from `mc_fields` simulated fields.
pub fn triple_thetas(
    model: &MaxStableModel,
    sites: &[Site],
    triples: &[[usize; 3]],
    mc_fields: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let closed: Option<Vec<f64>> =
        triples.iter().map(|t| model.ec_tuple(&[sites[t[0]], sites[t[1]], sites[t[2]]])).collect();
    if let Some(v) = closed {
        return Ok(v);
    }
    let fields = model.simulate_sites(sites, mc_fields, seed)?;
    Ok(triples.iter().map(|t| ec_from_fields(&fields, t)).collect())
}

/// `i,j,k[,empirical],<label>...` for the given triples.
pub fn write_triplewise(
    path: impl AsRef<Path>,
    ids: &[u32],
    triples: &[[usize; 3]],
    empirical: Option<&[f64]>,
    columns: &[(String, Vec<f64>)],
) -> Result<()> {
    let mut header = vec!["i".to_string(), "j".into(), "k".into()];
    if empirical.is_some() {
        header.push("empirical".into());
    }
    header.extend(columns.iter().map(|(l, _)| format!("model_{l}")));
    write_lines(path.as_ref(), &header.join(","), |w| {
        for (r, t) in triples.iter().enumerate() {
            write!(w, "{},{},{}", ids[t[0]], ids[t[1]], ids[t[2]])?;
            if let Some(e) = empirical {
                write!(w, ",{}", e[r])?;
            }
            for (_, v) in columns {
                write!(w, ",{}", v[r])?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
}

/// Mean absolute difference between two aligned coefficient vectors.
pub fn mean_abs_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisSource, SpectralBasis};
    use crate::fit::PairRecord;
    use crate::geo::LonLat;
    use crate::models::{MaxLinearModel, ModelDescriptor};

    fn record() -> FitRecord {
        FitRecord {
            model_type: "D".into(),
            model: ModelDescriptor::Mixture { a: 0.2, basis_path: "b".into() },
            parameters: Default::default(),
            rmse: 0.1,
            n_pairs: 1,
            evaluations: 1,
            start_index: None,
            warnings: vec![],
            pairs: vec![PairRecord { i: 4, j: 9, distance_km: Some(12.5), empirical: 1.5, model: 1.45 }],
        }
    }

    #[test]
    fn tables_join_on_station_ids() {
        let dir = tempfile::tempdir().unwrap();
        let fig4 = dir.path().join("fig4.csv");
        write_model_vs_empirical(&fig4, &record(), &[(9, 4, 1.4, 1.6)]).unwrap();
        let text = std::fs::read_to_string(&fig4).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "4,9,12.5,1.5,1.45,1.4,1.6,1");
        assert!(write_model_vs_empirical(&fig4, &record(), &[(1, 2, 1.4, 1.6)]).is_err());

        let fig3 = dir.path().join("fig3.csv");
        let e = EcEstimate { members: vec![0, 1], theta: 1.5, madogram: 0.1, distance: Some(12.5) };
        write_theta_vs_distance(&fig3, &[4, 9], &[e], &[record()]).unwrap();
        let text = std::fs::read_to_string(&fig3).unwrap();
        assert_eq!(text, "i,j,distance_km,empirical,model_D\n4,9,12.5,1.5,1.45\n");
    }

    #[test]
    fn closed_form_triples_for_basis_models() {
        let b = SpectralBasis::new(2, 3, vec![1.5, 0.5, 1.0, 0.5, 1.5, 1.0], BasisSource::AllMaps, None).unwrap();
        let m = MaxStableModel::MaxLinear(MaxLinearModel::new(b));
        let sites: Vec<Site> = (0..3).map(|c| Site { cell: c, pos: LonLat::new(c as f64, 0.0) }).collect();
        let th = triple_thetas(&m, &sites, &[[0, 1, 2]], 10, 1).unwrap();
        assert_eq!(th, vec![1.5]);
    }
}
