//! Residual-resampling bootstrap intervals next to the Gaussian ones.
//!
//! ```text
//! cargo run -p minecast-core --example bootstrap_intervals --release
//! ```

use minecast::{bootstrap_forecast, fit_arima, forecast_arima, simulate_arima, ArimaParams, ArimaSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ArimaSpec::new(1, 0, 0)?;
    let truth = ArimaParams { c: 1.0, phi: vec![0.6], theta: vec![], sigma2: 4.0 };
    let y = simulate_arima(spec, &truth, 400, 21)?;
    let fit = fit_arima(&y, spec)?;

    let gauss = forecast_arima(&fit, 6, 0.95)?;
    let boot = bootstrap_forecast(&fit, 6, 0.95, 2000, 42)?;
    println!("{:>2} {:>18} {:>18}", "h", "gaussian 95%", "bootstrap 95%");
    for h in 0..6 {
        println!(
            "{:>2} [{:>7.3}, {:>7.3}] [{:>7.3}, {:>7.3}]",
            h + 1,
            gauss.lower[h],
            gauss.upper[h],
            boot.lower[h],
            boot.upper[h]
        );
    }

    // Same seed, same bytes.
    let again = bootstrap_forecast(&fit, 6, 0.95, 2000, 42)?;
    assert_eq!(serde_json::to_string(&boot)?, serde_json::to_string(&again)?);
    println!("seed {} reproduces the intervals exactly", boot.seed);
    Ok(())
}
