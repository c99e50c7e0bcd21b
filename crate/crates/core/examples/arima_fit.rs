//! Exact maximum-likelihood ARIMA fitting and forecasting.
//!
//! Simulates an AR(1) with φ = 0.7, fits it back, and compares the
//! forecast with the closed form μ + φ^h (y_T − μ).
//!
//! ```text
//! cargo run -p minecast-core --example arima_fit --release
//! ```

use minecast::{fit_arima, forecast_arima, simulate_arima, ArimaParams, ArimaSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ArimaSpec::new(1, 0, 0)?;
    let truth = ArimaParams { c: 3.0, phi: vec![0.7], theta: vec![], sigma2: 1.0 };
    let y = simulate_arima(spec, &truth, 500, 7)?;

    let fit = fit_arima(&y, spec)?;
    let se = fit.standard_errors()?;
    println!("{spec}: c = {:.4}, φ = {:.4} (se {:.4}), σ² = {:.4}", fit.c, fit.phi[0], se.first().copied().unwrap_or(f64::NAN), fit.sigma2);
    println!("loglik = {:.3}, AIC = {:.3}, mean = {:.4}", fit.loglik, fit.aic, fit.mean);

    let fc = forecast_arima(&fit, 6, 0.95)?;
    let last = *y.values().last().unwrap();
    println!("{:>3} {:>10} {:>10} {:>10} {:>12}", "h", "lower", "mean", "upper", "closed form");
    for h in 0..fc.horizon {
        let closed = fit.mean + fit.phi[0].powi(h as i32 + 1) * (last - fit.mean);
        println!("{:>3} {:>10.4} {:>10.4} {:>10.4} {:>12.4}", h + 1, fc.lower[h], fc.mean[h], fc.upper[h], closed);
    }
    Ok(())
}
