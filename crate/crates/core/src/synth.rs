//! Synthetic scenarios with known ground truth.
//!
//! A Brown–Resnick latent field is simulated daily on the grid cells and at
//! the station positions. Stations see the latent field with the nugget of the
//! truth model; the grid sees its smooth part. Station series are mapped to
//! the configured GEV law for block maxima, and forecast members are rank
//! blends of the latent field with independent fields of the same law.

use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    write_forecasts, write_grid, write_maxima, write_stations, ForecastArchive, GridSpec, MaximaMatrix, Station,
    StationSet,
};
use crate::error::{Error, Result};
use crate::geo::{haversine_km, LonLat, PlanarProjection};
use crate::marginals::{gev_quantile_neglog, GevParams};
use crate::models::brownresnick::{br_simulator, ec_pair_br_geo};
use crate::models::extremal::ExtremalSimulator;
use crate::models::BrownResnickModel;
use crate::rng::{child_seed, substream, Domain};
use crate::special::frechet_cdf;

/// Latent uniform level below which a value may be thinned to zero.
pub const THINNING_LEVEL: f64 = 0.4;
/// Station jitter around the cell centre, as a fraction of the spacing.
pub const STATION_JITTER: f64 = 0.3;

fn default_block_length() -> usize {
    18
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub nx: usize,
    pub ny: usize,
    /// Grid spacing in degrees.
    pub spacing: f64,
    pub lon0: f64,
    pub lat0: f64,
    pub n_stations: usize,
    pub n_days: usize,
    pub n_members: usize,
    #[serde(default = "default_block_length")]
    pub block_length: usize,
    pub truth: BrownResnickModel,
    /// Weight of the independent field in the member blend.
    pub rho: f64,
    /// Probability of a zero on a low-intensity day.
    pub p0: f64,
    /// Block-maximum GEV law: one entry shared by all stations, or one per station.
    pub margins: Vec<GevParams>,
    pub seed: u64,
}

impl ScenarioConfig {
    /// 20 x 20 grid, 15 stations, 1,200 days, 8 members.
    pub fn desk_scale(seed: u64) -> Self {
        Self {
            nx: 20,
            ny: 20,
            spacing: 0.1,
            lon0: 3.0,
            lat0: 43.5,
            n_stations: 15,
            n_days: 1200,
            n_members: 8,
            block_length: 18,
            truth: BrownResnickModel { sigma2: 0.5, b1: 0.02, b2: 0.035, theta_rot: 0.3, beta: 1.0 },
            rho: 0.0,
            p0: 0.3,
            margins: vec![GevParams { mu: 40.0, sigma: 12.0, xi: 0.1 }],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if self.nx * self.ny < 4 {
            return bad(format!("grid has {} cells, need >= 4", self.nx * self.ny));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return bad(format!("spacing {} must be positive", self.spacing));
        }
        if self.n_stations < 3 || self.n_stations > self.nx * self.ny {
            return bad(format!("n_stations {} must be in [3, cells]", self.n_stations));
        }
        if self.n_members < 1 {
            return bad("n_members must be >= 1".into());
        }
        if self.block_length < 1 || self.n_days < self.block_length {
            return bad(format!("n_days {} must cover at least one block of {}", self.n_days, self.block_length));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho {} outside [0, 1]", self.rho));
        }
        if !(0.0..1.0).contains(&self.p0) {
            return bad(format!("p0 {} outside [0, 1)", self.p0));
        }
        if !(self.margins.len() == 1 || self.margins.len() == self.n_stations) {
            return bad(format!("margins must have 1 or {} entries", self.n_stations));
        }
        for m in &self.margins {
            GevParams::new(m.mu, m.sigma, m.xi).map_err(|e| Error::Validation(e.to_string()))?;
        }
        let t = &self.truth;
        BrownResnickModel::new(t.sigma2, t.b1, t.b2, t.theta_rot, t.beta).map_err(|e| Error::Validation(e.to_string()))?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn margin(&self, station: usize) -> &GevParams {
        &self.margins[if self.margins.len() == 1 { 0 } else { station }]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthPair {
    pub i: u32,
    pub j: u32,
    pub distance_km: f64,
    pub theta: f64,
}

/// Generating parameters and theoretical pairwise coefficients (`truth.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub config: ScenarioConfig,
    /// Projection used for Brown–Resnick lags.
    pub ref_lat: f64,
    /// Grid cell of each station, in station order.
    pub station_cells: Vec<usize>,
    pub pairs: Vec<TruthPair>,
}

impl TruthRecord {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn projection(&self) -> PlanarProjection {
        PlanarProjection::new(self.ref_lat)
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.theta).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: GridSpec,
    pub stations: StationSet,
    pub archive: ForecastArchive,
    pub maxima: MaximaMatrix,
    pub truth: TruthRecord,
}

impl Scenario {
    /// Writes `grid.csv`, `stations.csv`, `forecasts.csv`, `maxima.csv` and `truth.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_grid(dir.join("grid.csv"), &self.grid)?;
        write_stations(dir.join("stations.csv"), &self.stations)?;
        write_forecasts(dir.join("forecasts.csv"), &self.grid, &self.archive)?;
        write_maxima(dir.join("maxima.csv"), &self.stations, &self.maxima)?;
        self.truth.write(dir.join("truth.json"))
    }
}

/// Simulator over grid cells followed by station positions. Station points
/// carry a white-noise component that puts the nugget `sigma2` between any
/// two stations and `sigma2 / 2` between a station and a cell; cells alone
/// follow the smooth part of the variogram.
fn latent_simulator(
    truth: &BrownResnickModel,
    cells: &[LonLat],
    stations: &[LonLat],
    proj: &PlanarProjection,
) -> Result<ExtremalSimulator> {
    let smooth = BrownResnickModel { sigma2: 0.0, ..*truth };
    let points: Vec<LonLat> = cells.iter().chain(stations).copied().collect();
    if truth.sigma2 == 0.0 {
        return br_simulator(&smooth, &points, proj);
    }
    let n = points.len();
    let mut gamma = smooth.variogram_matrix(&points, proj);
    let nc = cells.len();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let copies = (i >= nc) as u8 + (j >= nc) as u8;
            gamma[i * n + j] += truth.sigma2 * copies as f64 / 2.0;
        }
    }
    ExtremalSimulator::new(n, gamma)
}

/// Monotone map from the blended uniform score to millimetres.
pub fn intensity_curve(v: f64) -> f64 {
    6.0 * (-(1.0 - v).ln()).powf(1.4)
}

pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let grid = GridSpec::regular(cfg.nx, cfg.ny, cfg.lon0, cfg.lat0, cfg.spacing)?;
    let cell_coords = grid.coords();
    let n_cells = grid.len();

    // station layout: distinct cells, jittered positions
    let mut rng = substream(cfg.seed, Domain::Layout, 0);
    let chosen: Vec<usize> = sample(&mut rng, n_cells, cfg.n_stations).into_vec();
    let stations: Vec<Station> = chosen
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let centre = cell_coords[c];
            let dx = rng.random_range(-STATION_JITTER..STATION_JITTER) * cfg.spacing;
            let dy = rng.random_range(-STATION_JITTER..STATION_JITTER) * cfg.spacing;
            Station { id: k as u32 + 1, pos: LonLat::new(centre.lon + dx, centre.lat + dy) }
        })
        .collect();
    let stations = StationSet::new(stations)?;
    let station_coords = stations.coords();
    let proj = PlanarProjection::about_centroid(&cell_coords);

    let latent = latent_simulator(&cfg.truth, &cell_coords, &station_coords, &proj)?;
    let noise = if cfg.rho > 0.0 {
        Some(br_simulator(&BrownResnickModel { sigma2: 0.0, ..cfg.truth }, &cell_coords, &proj)?)
    } else {
        None
    };

    let n_st = cfg.n_stations;
    let m = cfg.n_members;
    let field_seed = child_seed(cfg.seed, Domain::Scenario, 0);
    // per day: member values (member-major) and station values
    let days: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.n_days)
        .into_par_iter()
        .map(|day| {
            let mut rng = substream(field_seed, Domain::Field, day as u64);
            let mut y = vec![0.0; latent.len()];
            latent.simulate_into(&mut rng, &mut y);
            let mut thin = substream(field_seed, Domain::Thinning, day as u64);

            let stations: Vec<f64> = (0..n_st)
                .map(|k| {
                    let yk = y[n_cells + k];
                    let keep = !(frechet_cdf(yk) < THINNING_LEVEL && thin.random_bool(cfg.p0));
                    if keep {
                        gev_quantile_neglog(cfg.margin(k), cfg.block_length as f64 / yk).max(0.0)
                    } else {
                        0.0
                    }
                })
                .collect();

            let mut members = vec![0.0; m * n_cells];
            let mut noise_field = vec![0.0; n_cells];
            for mem in 0..m {
                let mut mrng = substream(field_seed, Domain::Member, (day * m + mem) as u64);
                if let Some(sim) = &noise {
                    sim.simulate_into(&mut mrng, &mut noise_field);
                }
                for c in 0..n_cells {
                    let u_lat = frechet_cdf(y[c]);
                    let v = match &noise {
                        Some(_) => (1.0 - cfg.rho) * u_lat + cfg.rho * frechet_cdf(noise_field[c]),
                        None => u_lat,
                    };
                    let zero = v < THINNING_LEVEL && cfg.p0 > 0.0 && mrng.random_bool(cfg.p0);
                    members[mem * n_cells + c] = if zero { 0.0 } else { intensity_curve(v) };
                }
            }
            (members, stations)
        })
        .collect();

    let mut forecast_values = Vec::with_capacity(cfg.n_days * m * n_cells);
    for (members, _) in &days {
        forecast_values.extend_from_slice(members);
    }
    let archive = ForecastArchive::new(cfg.n_days, m, n_cells, forecast_values)?;

    let n_blocks = cfg.n_days / cfg.block_length;
    let mut maxima = vec![0.0; n_blocks * n_st];
    for (day, (_, st)) in days.iter().enumerate().take(n_blocks * cfg.block_length) {
        let b = day / cfg.block_length;
        for k in 0..n_st {
            maxima[b * n_st + k] = f64::max(maxima[b * n_st + k], st[k]);
        }
    }
    let maxima = MaximaMatrix::new(n_blocks, n_st, maxima, cfg.block_length).map_err(|e| {
        Error::Validation(format!("configured margins give non-positive block maxima: {e}"))
    })?;

    let ids = stations.ids();
    let mut pairs = Vec::new();
    for i in 0..n_st {
        for j in (i + 1)..n_st {
            pairs.push(TruthPair {
                i: ids[i],
                j: ids[j],
                distance_km: haversine_km(station_coords[i], station_coords[j]),
                theta: ec_pair_br_geo(&cfg.truth, &proj, station_coords[i], station_coords[j]),
            });
        }
    }
    let truth = TruthRecord { config: cfg.clone(), ref_lat: proj.ref_lat, station_cells: chosen, pairs };
    Ok(Scenario { grid, stations, archive, maxima, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::map_stations_to_cells;
    use crate::dependence::ec_cloud;
    use crate::marginals::ks_test;
    use crate::stats::average_ranks;

    fn small(seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            nx: 6,
            ny: 5,
            n_stations: 5,
            n_days: 180,
            n_members: 3,
            ..ScenarioConfig::desk_scale(seed)
        }
    }

    #[test]
    fn shapes_and_station_cells() {
        let s = generate_scenario(&small(1)).unwrap();
        assert_eq!(s.grid.len(), 30);
        assert_eq!(s.archive.days(), 180);
        assert_eq!(s.archive.members(), 3);
        assert_eq!(s.maxima.n_blocks(), 10);
        assert_eq!(s.truth.pairs.len(), 10);
        assert_eq!(map_stations_to_cells(&s.stations, &s.grid).unwrap(), s.truth.station_cells);
        assert!(s.archive.raw().contains(&0.0));
        assert_eq!(s.archive.missing_count(), 0);
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let a = generate_scenario(&small(9)).unwrap();
        let b = generate_scenario(&small(9)).unwrap();
        assert_eq!(a.archive, b.archive);
        assert_eq!(a.maxima, b.maxima);
        assert_eq!(a.truth, b.truth);
        let c = generate_scenario(&small(10)).unwrap();
        assert_ne!(a.maxima, c.maxima);
    }

    #[test]
    fn truth_reuses_closed_form() {
        let s = generate_scenario(&small(2)).unwrap();
        let coords = s.stations.coords();
        let proj = s.truth.projection();
        let mut k = 0;
        for i in 0..5 {
            for j in (i + 1)..5 {
                let th = ec_pair_br_geo(&s.truth.config.truth, &proj, coords[i], coords[j]);
                assert!((s.truth.pairs[k].theta - th).abs() <= 1e-12);
                k += 1;
            }
        }
    }

    #[test]
    fn zero_rho_members_are_monotone_in_latent() {
        let cfg = ScenarioConfig { p0: 0.0, ..small(3) };
        let s = generate_scenario(&cfg).unwrap();
        // every member carries the same ranks over days at each cell
        for c in [0, 7, 29] {
            let base: Vec<f64> = (0..180).map(|d| s.archive.get(d, 0, c).unwrap()).collect();
            for mem in 1..3 {
                let other: Vec<f64> = (0..180).map(|d| s.archive.get(d, mem, c).unwrap()).collect();
                assert_eq!(average_ranks(&base), average_ranks(&other));
            }
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = small(1);
        for cfg in [
            ScenarioConfig { nx: 1, ny: 3, ..base.clone() },
            ScenarioConfig { n_stations: 2, ..base.clone() },
            ScenarioConfig { rho: 1.5, ..base.clone() },
            ScenarioConfig { p0: 1.0, ..base.clone() },
            ScenarioConfig { margins: vec![base.margins[0]; 2], ..base.clone() },
        ] {
            assert!(matches!(generate_scenario(&cfg), Err(Error::Validation(_))));
        }
    }

    #[test]
    fn maxima_follow_configured_margins() {
        let cfg = ScenarioConfig { n_days: 190 * 18, n_members: 1, nx: 4, ny: 4, n_stations: 3, ..small(4) };
        let s = generate_scenario(&cfg).unwrap();
        for k in 0..3 {
            let (_, p) = ks_test(&s.maxima.column(k), &cfg.margins[0]).unwrap();
            assert!(p > 0.001, "station {k} p = {p}");
        }
        let ec = ec_cloud(&s.maxima, &s.stations, 2).unwrap();
        for (e, t) in ec.iter().zip(&s.truth.pairs) {
            assert!((e.theta - t.theta).abs() < 0.2);
        }
    }
}
