//! Parametric-bootstrap envelopes around a fitted Model D, and how many
//! empirical coefficients fall inside them.

use maxstable::basis::build_basis_b;
use maxstable::data::map_stations_to_cells;
use maxstable::dependence::ec_cloud;
use maxstable::fit::{fit_model_d, parametric_bootstrap, station_sites};
use maxstable::marginals::rank_to_frechet;
use maxstable::synth::{generate_scenario, ScenarioConfig};

fn main() -> anyhow::Result<()> {
    let sc = generate_scenario(&ScenarioConfig::desk_scale(2024))?;
    let basis = build_basis_b(&rank_to_frechet(&sc.archive)?, 0.9)?;
    let cells = map_stations_to_cells(&sc.stations, &sc.grid)?;
    let ec = ec_cloud(&sc.maxima, &sc.stations, 2)?;
    let d = fit_model_d(&basis, &ec, &cells)?;
    let t0 = std::time::Instant::now();
    let env = parametric_bootstrap(&d.model, &station_sites(&sc.stations, &cells), 500, sc.maxima.n_blocks(), 9)?;
    let empirical: Vec<f64> = ec.iter().map(|e| e.theta).collect();
    let inside = env.contains(&empirical).iter().filter(|&&b| b).count();
    println!(
        "{} replicates x {} blocks in {:.1?}: mean width {:.3}, {inside}/{} empirical coefficients inside",
        env.n_replicates,
        env.n_blocks,
        t0.elapsed(),
        env.mean_width(),
        empirical.len()
    );
    Ok(())
}
