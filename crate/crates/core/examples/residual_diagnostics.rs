//! Ljung-Box and Shapiro-Wilk checks on fitted residuals.
//!
//! A well-specified AR(1) passes; forcing a white-noise model onto the same
//! data leaves autocorrelation that Ljung-Box flags.
//!
//! ```text
//! cargo run -p minecast-core --example residual_diagnostics --release
//! ```

use minecast::diagnostics::{default_lag, diagnose, ljung_box, shapiro_wilk};
use minecast::{fit_arima, simulate_arima, ArimaParams, ArimaSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = ArimaParams { c: 0.0, phi: vec![0.8], theta: vec![], sigma2: 1.0 };
    let y = simulate_arima(ArimaSpec::new(1, 0, 0)?, &truth, 300, 1)?;

    for spec in [ArimaSpec::new(1, 0, 0)?, ArimaSpec::new(0, 0, 0)?] {
        let fit = fit_arima(&y, spec)?;
        let report = diagnose(&fit);
        println!("{spec}");
        println!("  {}", serde_json::to_string(&report)?);
        println!("  verdict: {}", if report.passed() { "residuals look like white noise" } else { "model inadequate" });
    }

    // The tests on their own, with an explicit lag.
    let fit = fit_arima(&y, ArimaSpec::new(1, 0, 0)?)?;
    let h = default_lag(fit.residuals.len(), 1);
    let lb = ljung_box(&fit.residuals, h, 1)?;
    let sw = shapiro_wilk(fit.residuals.values())?;
    println!("Ljung-Box Q({h}) = {:.4}, df = {}, p = {:.4}", lb.statistic, lb.df_or_n, lb.p_value);
    println!("Shapiro-Wilk W = {:.5}, n = {}, p = {:.4}", sw.statistic, sw.df_or_n, sw.p_value);
    Ok(())
}
