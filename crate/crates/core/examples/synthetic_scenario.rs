//! Generates the desk-scale synthetic scenario and writes its CSV files and
//! truth record to a directory (default `scenario/`).

use maxstable::synth::{generate_scenario, ScenarioConfig};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "scenario".into());
    let cfg = ScenarioConfig::desk_scale(2024);
    let sc = generate_scenario(&cfg)?;
    sc.write(&out)?;
    println!(
        "{} cells, {} stations, {} days x {} members, {} blocks of {} days",
        sc.grid.len(),
        sc.stations.len(),
        sc.archive.days(),
        sc.archive.members(),
        sc.maxima.n_blocks(),
        sc.maxima.block_length()
    );
    println!("missing forecast values: {}", sc.archive.missing_count());
    for p in sc.truth.pairs.iter().take(5) {
        println!("truth theta({}, {}) at {:.1} km = {:.3}", p.i, p.j, p.distance_km, p.theta);
    }
    println!("written to {out}/");
    Ok(())
}
