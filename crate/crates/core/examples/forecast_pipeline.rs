//! End-to-end forecasts at the three levels, with the default horizons
//! (five years for annual totals, three months otherwise).
//!
//! ```text
//! cargo run -p minecast-core --example forecast_pipeline --release
//! ```

use std::fs::File;

use minecast::ingest::{clean_monthly, FormatOptions, DEFAULT_K};
use minecast::pipeline::{run_forecast, ForecastLevel, ForecastRequest, ModelChoice};
use minecast::parse_annual;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");
    let (monthly, _) = clean_monthly(File::open(format!("{data}/produccion_mensual_2020_2022.csv"))?, FormatOptions::default(), DEFAULT_K)?;
    let annual = parse_annual(File::open(format!("{data}/produccion_anual_1980_2022.csv"))?)?;

    let requests = [
        ForecastRequest::new(ForecastLevel::AnnualTotal, "COBRE"),
        ForecastRequest { model: ModelChoice::Best, ..ForecastRequest::new(ForecastLevel::AnnualTotal, "ORO") },
        ForecastRequest::new(ForecastLevel::Mineral, "PLATA"),
        ForecastRequest { model: ModelChoice::StateSpace, ..ForecastRequest::new(ForecastLevel::Department, "PUNO") },
    ];
    for req in &requests {
        let res = run_forecast(req, &monthly, &annual)?;
        let f = &res.forecast;
        println!(
            "{:?} {} -> {} | LB {} SW {} | {} steps from {}",
            req.level,
            res.series_used.label,
            res.fit.model,
            if res.diagnostics.ljung_box_pass { "pass" } else { "fail" },
            if res.diagnostics.shapiro_wilk_pass { "pass" } else { "fail" },
            f.horizon,
            f.start
        );
        for h in 0..f.horizon {
            println!("    {:>14.1} [{:>14.1}, {:>14.1}] {}", f.mean[h], f.lower[h], f.upper[h], f.unit);
        }
        for note in &res.notes {
            println!("    note: {note}");
        }
    }

    // The JSON payload the service and CLI return.
    let res = run_forecast(&requests[0], &monthly, &annual)?;
    println!("{}", serde_json::to_string(&res.forecast)?);
    Ok(())
}
