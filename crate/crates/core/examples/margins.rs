//! GEV margins: block maxima from a daily series, PWM fits with KS checks,
//! and the rank transform of forecasts to unit Fréchet.

use maxstable::marginals::{block_maxima, fit_stations, gev_quantile, pwm_fit, rank_to_frechet, GevParams};
use maxstable::rng::{substream, Domain};
use maxstable::synth::{generate_scenario, ScenarioConfig};
use rand::Rng;

fn main() -> anyhow::Result<()> {
    // PWM recovery on a known GEV
    let truth = GevParams::new(10.0, 2.0, 0.2)?;
    let mut rng = substream(1, Domain::Layout, 0);
    let sample: Vec<f64> = (0..10_000).map(|_| gev_quantile(&truth, rng.random::<f64>().max(1e-300))).collect::<Result<_, _>>()?;
    let fit = pwm_fit(&sample)?;
    println!("GEV(10, 2, 0.2) refit: mu {:.3} sigma {:.3} xi {:.3}", fit.mu, fit.sigma, fit.xi);

    // block maxima of two daily series with a gap
    let series = vec![
        (0..36).map(|d| Some(d as f64)).collect::<Vec<_>>(),
        (0..36).map(|d| if d == 20 { None } else { Some(36.0 - d as f64) }).collect(),
    ];
    let bm = block_maxima(&series, 18)?;
    println!("block maxima: {} blocks kept, first row {:?}", bm.n_blocks(), bm.row(0));

    // station fits on the synthetic scenario
    let cfg = ScenarioConfig { n_days: 190 * 18, n_members: 1, ..ScenarioConfig::desk_scale(7) };
    let sc = generate_scenario(&cfg)?;
    let fits = fit_stations(&sc.maxima, &sc.stations.ids())?;
    let mean_p = fits.iter().map(|f| f.ks_pvalue).sum::<f64>() / fits.len() as f64;
    for f in fits.iter().take(3) {
        println!("station {}: {:?} KS p = {:.3}", f.station_id, f.params, f.ks_pvalue);
    }
    println!("mean KS p-value over {} stations: {mean_p:.3}", fits.len());

    let panel = rank_to_frechet(&sc.archive)?;
    println!("panel: {} maps x {} cells", panel.n_maps(), panel.n_cells());
    Ok(())
}
