//! End-to-end run on a synthetic scenario: forecasts to spectral basis, station
//! maxima to empirical extremal coefficients, then Models A to E fitted and
//! compared by RMSE.

use std::time::Instant;

use maxstable::basis::{build_basis_a, build_basis_b};
use maxstable::data::map_stations_to_cells;
use maxstable::dependence::ec_cloud;
use maxstable::fit::{evaluate_max_linear, fit_model_c, fit_model_d, fit_model_e, rmse};
use maxstable::marginals::rank_to_frechet;
use maxstable::synth::{generate_scenario, ScenarioConfig};

fn main() -> anyhow::Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(2024);
    let t0 = Instant::now();
    let cfg = ScenarioConfig::desk_scale(seed);
    let scenario = generate_scenario(&cfg)?;
    println!("scenario generated in {:.1?}", t0.elapsed());

    let panel = rank_to_frechet(&scenario.archive)?;
    let basis_a = build_basis_a(&panel)?;
    let basis_b = build_basis_b(&panel, 0.9)?;
    println!("panel: {} maps; basis B keeps {}", panel.n_maps(), basis_b.n_functions());

    let cells = map_stations_to_cells(&scenario.stations, &scenario.grid)?;
    let ec = ec_cloud(&scenario.maxima, &scenario.stations, 2)?;
    let empirical: Vec<f64> = ec.iter().map(|e| e.theta).collect();
    println!(
        "{} pairs from {} blocks; rmse(empirical vs truth) = {:.4}",
        ec.len(),
        scenario.maxima.n_blocks(),
        rmse(&empirical, &scenario.truth.thetas())?
    );

    let fits = [
        evaluate_max_linear("A", &basis_a, &ec, &cells)?,
        evaluate_max_linear("B", &basis_b, &ec, &cells)?,
        fit_model_c(&basis_b, &ec, &cells)?,
        fit_model_d(&basis_b, &ec, &cells)?,
        fit_model_e(&ec, &scenario.stations.coords())?,
    ];
    for f in &fits {
        println!("model {}: rmse {:.4} {:?}", f.label, f.rmse, f.parameters);
    }
    println!("total {:.1?}", t0.elapsed());
    Ok(())
}
