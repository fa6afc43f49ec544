//! Empirical pairwise and triplewise extremal coefficients from station block
//! maxima, compared with the scenario's truth.

use maxstable::dependence::{ec_cloud, ec_from_madogram};
use maxstable::fit::rmse;
use maxstable::synth::{generate_scenario, ScenarioConfig};

fn main() -> anyhow::Result<()> {
    let sc = generate_scenario(&ScenarioConfig::desk_scale(2024))?;
    let pairs = ec_cloud(&sc.maxima, &sc.stations, 2)?;
    let triples = ec_cloud(&sc.maxima, &sc.stations, 3)?;
    println!("{} pairs and {} triples from {} blocks", pairs.len(), triples.len(), sc.maxima.n_blocks());
    for (e, t) in pairs.iter().zip(&sc.truth.pairs).take(8) {
        println!("({:>2}, {:>2}) {:6.1} km  theta {:.3}  truth {:.3}", t.i, t.j, e.distance.unwrap_or(f64::NAN), e.theta, t.theta);
    }
    let est: Vec<f64> = pairs.iter().map(|e| e.theta).collect();
    println!("rmse against truth: {:.4}", rmse(&est, &sc.truth.thetas())?);
    println!("madogram 1/10 in two dimensions gives theta {}", ec_from_madogram(0.1, 2)?);
    Ok(())
}
