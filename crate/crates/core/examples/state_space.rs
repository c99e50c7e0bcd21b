//! Structural state-space models: local level and local trend fitted by
//! exact Kalman-filter likelihood.
//!
//! ```text
//! cargo run -p minecast-core --example state_space --release
//! ```

use std::fs::File;

use minecast::ingest::annual_series;
use minecast::statespace::{fit_best_structural, fit_structural, forecast_structural, StructuralKind};
use minecast::parse_annual;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/produccion_anual_1980_2022.csv");
    let annual = parse_annual(File::open(path)?)?;
    let (copper, _) = annual_series(&annual, "COBRE")?;

    for kind in [StructuralKind::LocalLevel, StructuralKind::LocalTrend] {
        let fit = fit_structural(&copper, kind)?;
        println!(
            "{kind:?}: q = {:?}, r = {:.3e}, loglik = {:.3}, AIC = {:.3}",
            fit.q_variances.iter().map(|q| format!("{q:.3e}")).collect::<Vec<_>>(),
            fit.r_variance,
            fit.loglik,
            fit.aic
        );
    }

    let best = fit_best_structural(&copper)?;
    let last = best.filtered_states.last().expect("non-empty");
    println!("kept {:?}; final filtered state {:?}", best.kind(), last.mean.iter().map(|m| m.round()).collect::<Vec<_>>());

    let fc = forecast_structural(&best, 5, 0.9)?;
    for h in 0..fc.horizon {
        println!("{}  {:>12.0}  [{:>12.0}, {:>12.0}] {}", fc.start.advance(h as i64), fc.mean[h], fc.lower[h], fc.upper[h], fc.unit);
    }
    Ok(())
}
