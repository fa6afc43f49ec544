//! Triplewise coefficients of fitted Models C, D and E: closed forms for the
//! basis models, Monte Carlo for Brown–Resnick.

use maxstable::basis::build_basis_b;
use maxstable::data::map_stations_to_cells;
use maxstable::dependence::{ec_cloud, tuples};
use maxstable::fit::{fit_model_c, fit_model_d, fit_model_e, station_sites};
use maxstable::marginals::rank_to_frechet;
use maxstable::report::{mean_abs_difference, triple_thetas};
use maxstable::synth::{generate_scenario, ScenarioConfig};

fn main() -> anyhow::Result<()> {
    let sc = generate_scenario(&ScenarioConfig::desk_scale(2024))?;
    let basis = build_basis_b(&rank_to_frechet(&sc.archive)?, 0.9)?;
    let cells = map_stations_to_cells(&sc.stations, &sc.grid)?;
    let ec = ec_cloud(&sc.maxima, &sc.stations, 2)?;
    let sites = station_sites(&sc.stations, &cells);
    let triples: Vec<[usize; 3]> = tuples(sites.len(), 3).into_iter().map(|t| [t[0], t[1], t[2]]).collect();
    let c = triple_thetas(&fit_model_c(&basis, &ec, &cells)?.model, &sites, &triples, 0, 0)?;
    let d = triple_thetas(&fit_model_d(&basis, &ec, &cells)?.model, &sites, &triples, 0, 0)?;
    let e = triple_thetas(&fit_model_e(&ec, &sc.stations.coords())?.model, &sites, &triples, 50_000, 1)?;
    let empirical: Vec<f64> = ec_cloud(&sc.maxima, &sc.stations, 3)?.iter().map(|t| t.theta).collect();
    println!("{} triples", triples.len());
    println!("mean |C - D| {:.4}, mean |C - E| {:.4}", mean_abs_difference(&c, &d), mean_abs_difference(&c, &e));
    for (label, v) in [("C", &c), ("D", &d), ("E", &e)] {
        println!("mean |{label} - empirical| {:.4}", mean_abs_difference(v, &empirical));
    }
    Ok(())
}
