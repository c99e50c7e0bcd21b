//! Automatic order selection: differencing test, then the AIC search over
//! p, q ≤ 5.
//!
//! ```text
//! cargo run -p minecast-core --example auto_arima --release
//! ```

use std::fs::File;

use minecast::ingest::annual_series;
use minecast::{auto_arima, forecast_arima, parse_annual, select_differencing, simulate_arima, ArimaParams, ArimaSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ArimaSpec::new(1, 0, 1)?;
    let params = ArimaParams { c: 0.0, phi: vec![0.6], theta: vec![0.3], sigma2: 1.0 };
    let y = simulate_arima(spec, &params, 400, 11)?;
    let fit = auto_arima(&y)?;
    println!("simulated ARMA(1,1): selected {} with AIC {:.2}", fit.spec, fit.aic);

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/produccion_anual_1980_2022.csv");
    let annual = parse_annual(File::open(path)?)?;
    for mineral in ["COBRE", "ORO", "ZINC", "PLATA"] {
        let (series, _) = annual_series(&annual, mineral)?;
        let d = select_differencing(&series)?;
        let fit = auto_arima(&series)?;
        let fc = forecast_arima(&fit, 5, 0.95)?;
        println!(
            "{mineral:<6} d={d}  {}  AIC {:>9.2}  {} forecast {:>12.0} {}",
            fit.spec,
            fit.aic,
            fc.start.advance(4),
            fc.mean[4],
            fc.unit
        );
    }
    Ok(())
}
