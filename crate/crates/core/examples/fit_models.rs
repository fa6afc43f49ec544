//! Fits Models C, D and E to empirical pairwise coefficients and writes the
//! fit records.

use maxstable::basis::build_basis_b;
use maxstable::data::map_stations_to_cells;
use maxstable::dependence::ec_cloud;
use maxstable::fit::{evaluate_max_linear, fit_model_c, fit_model_d, fit_model_e};
use maxstable::marginals::rank_to_frechet;
use maxstable::synth::{generate_scenario, ScenarioConfig};

fn main() -> anyhow::Result<()> {
    let sc = generate_scenario(&ScenarioConfig::desk_scale(2024))?;
    let basis = build_basis_b(&rank_to_frechet(&sc.archive)?, 0.9)?;
    let cells = map_stations_to_cells(&sc.stations, &sc.grid)?;
    let ec = ec_cloud(&sc.maxima, &sc.stations, 2)?;
    let fits = [
        evaluate_max_linear("B", &basis, &ec, &cells)?,
        fit_model_c(&basis, &ec, &cells)?,
        fit_model_d(&basis, &ec, &cells)?,
        fit_model_e(&ec, &sc.stations.coords())?,
    ];
    let dir = std::env::temp_dir().join("maxstable-fit-example");
    std::fs::create_dir_all(&dir)?;
    for f in &fits {
        println!("Model {}: rmse {:.4}, {} evaluations, {:?}", f.label, f.rmse, f.objective_evaluations, f.parameters);
        for w in &f.warnings {
            println!("  warning: {w}");
        }
        f.to_record(&sc.stations, None).write(dir.join(format!("fit{}.json", f.label)))?;
    }
    println!("records written to {}", dir.display());
    Ok(())
}
