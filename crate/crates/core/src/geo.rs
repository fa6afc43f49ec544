//! Great-circle distances, nearest-cell lookup and the local planar projection
//! used by the anisotropic variogram.

use serde::{Deserialize, Serialize};

/// Mean Earth radius in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// A point in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat }
    }
}

/// Haversine distance in km.
pub fn haversine_km(a: LonLat, b: LonLat) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Symmetric matrix of haversine distances (row-major, `n * n`).
pub fn pairwise_distances(points: &[LonLat]) -> Vec<f64> {
    let n = points.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = haversine_km(points[i], points[j]);
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    out
}

/// Index of the point in `candidates` closest to `p`; ties go to the
/// candidate with the smaller key.
pub fn nearest<K: Ord + Copy>(p: LonLat, candidates: impl IntoIterator<Item = (K, LonLat)>) -> Option<K> {
    let mut best: Option<(f64, K)> = None;
    for (key, q) in candidates {
        let d = haversine_km(p, q);
        best = match best {
            None => Some((d, key)),
            Some((bd, bk)) if d < bd || (d == bd && key < bk) => Some((d, key)),
            keep => keep,
        };
    }
    best.map(|(_, k)| k)
}

/// Equirectangular projection about a reference latitude.
///
/// Only offsets between points are ever needed, so the reference longitude
/// drops out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarProjection {
    pub ref_lat: f64,
}

impl PlanarProjection {
    pub fn new(ref_lat: f64) -> Self {
        Self { ref_lat }
    }

    /// Projection centred on the mean latitude of `points`.
    pub fn about_centroid(points: &[LonLat]) -> Self {
        let lat = if points.is_empty() {
            0.0
        } else {
            points.iter().map(|p| p.lat).sum::<f64>() / points.len() as f64
        };
        Self::new(lat)
    }

    /// Planar offset `b - a` in km (east, north).
    pub fn offset_km(&self, a: LonLat, b: LonLat) -> [f64; 2] {
        let k = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
        [
            k * (b.lon - a.lon) * self.ref_lat.to_radians().cos(),
            k * (b.lat - a.lat),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn one_degree_on_equator() {
        let d = haversine_km(LonLat::new(0.0, 0.0), LonLat::new(1.0, 0.0));
        // R * pi / 180
        assert_abs_diff_eq!(d, 111.19, epsilon = 0.01);
        assert_eq!(haversine_km(LonLat::new(3.1, 44.0), LonLat::new(3.1, 44.0)), 0.0);
    }

    #[test]
    fn nearest_breaks_ties_by_key() {
        let p = LonLat::new(0.5, 0.0);
        let c = [(7usize, LonLat::new(1.0, 0.0)), (4usize, LonLat::new(0.0, 0.0))];
        assert_eq!(nearest(p, c), Some(4));
    }

    proptest! {
        #[test]
        fn distances_are_a_metric(
            pts in proptest::collection::vec((-10.0f64..10.0, 35.0f64..50.0), 3..6)
        ) {
            let pts: Vec<LonLat> = pts.into_iter().map(|(a, b)| LonLat::new(a, b)).collect();
            let n = pts.len();
            let d = pairwise_distances(&pts);
            for i in 0..n {
                prop_assert_eq!(d[i * n + i], 0.0);
                for j in 0..n {
                    prop_assert_eq!(d[i * n + j], d[j * n + i]);
                    for k in 0..n {
                        prop_assert!(d[i * n + k] <= d[i * n + j] + d[j * n + k] + 1e-9);
                    }
                }
            }
        }
    }
}
