//! Spectral bases from the forecast panel: Model A from every map, Model B
//! from the maps whose sup-norm exceeds the 0.9 quantile.

use maxstable::basis::{build_basis_a, build_basis_b, write_basis};
use maxstable::dependence::spectral_madogram;
use maxstable::marginals::rank_to_frechet;
use maxstable::models::maxlinear::{ec_pair_maxlinear, MaxLinearModel};
use maxstable::synth::{generate_scenario, ScenarioConfig};

fn main() -> anyhow::Result<()> {
    let sc = generate_scenario(&ScenarioConfig { n_days: 600, ..ScenarioConfig::desk_scale(3) })?;
    let panel = rank_to_frechet(&sc.archive)?;
    let a = build_basis_a(&panel)?;
    let b = build_basis_b(&panel, 0.9)?;
    println!("basis A: {} functions; basis B: {} functions above {:?}", a.n_functions(), b.n_functions(), b.threshold());
    let means = b.cell_means();
    let worst = means.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    println!("largest deviation of a cell mean from one: {worst:.2e}");
    let m = MaxLinearModel::new(b.clone());
    for (s1, s2) in [(0, 1), (0, 21), (0, 399)] {
        println!(
            "cells {s1}-{s2}: theta {:.4}, spectral madogram + 1 = {:.4}",
            ec_pair_maxlinear(&m, s1, s2),
            spectral_madogram(&b, s1, s2) + 1.0
        );
    }
    let dir = std::env::temp_dir().join("maxstable-basis-example");
    write_basis(&dir, &b)?;
    println!("basis written to {}", dir.display());
    Ok(())
}
