//! Chart payloads and department statistics from the monthly table.
//!
//! ```text
//! cargo run -p minecast-core --example charts --release
//! ```

use std::fs::File;

use minecast::analytics::{aggregate, department_stats, frequency_polygon, pie, GroupBy};
use minecast::ingest::{clean_monthly, FormatOptions, DEFAULT_K};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/produccion_mensual_2020_2022.csv");
    let (records, _) = clean_monthly(File::open(path)?, FormatOptions::default(), DEFAULT_K)?;

    // Bars never mix units: one series per unit.
    for series in aggregate(&records, GroupBy::Mineral)? {
        let bars: Vec<String> = series.labels.iter().zip(&series.values).map(|(l, v)| format!("{l}={v:.0}")).collect();
        println!("bar [{}] {}", series.unit, bars.join(", "));
    }

    let copper: Vec<_> = records.iter().filter(|r| r.mineral == "COBRE").cloned().collect();
    for series in pie(&copper, GroupBy::Department)? {
        let top: Vec<String> = series.labels.iter().zip(&series.values).take(5).map(|(l, v)| format!("{l} {v:.1}%")).collect();
        println!("copper share by department: {} ...", top.join(", "));
    }

    let totals: Vec<f64> = copper.iter().map(|r| r.total_or_sum()).collect();
    let poly = frequency_polygon(&totals, None)?;
    println!("polygon over {} copper records: {} points, counts {:?}", totals.len(), poly.values.len(), poly.values);

    let stats = department_stats(&records, "Arequipa")?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}
