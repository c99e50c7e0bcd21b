//! Parsing, name correction and k-NN gap filling of the monthly table,
//! then building series from it.
//!
//! ```text
//! cargo run -p minecast-core --example ingest_monthly --release
//! ```

use std::fs::File;

use minecast::ingest::{knn_impute, normalize_names, parse_monthly, to_series, FormatOptions, SeriesSelector, DEFAULT_K};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/produccion_mensual_2020_2022.csv");
    let (raw, parsed) = parse_monthly(File::open(path)?, FormatOptions::default())?;
    println!("parsed {} rows, kept {}, dropped {}", parsed.rows_read, parsed.rows_kept, parsed.rows_dropped);
    let gaps: usize = raw.iter().map(|r| r.months.iter().filter(|m| m.is_none()).count()).sum();
    println!("{gaps} empty month cells");

    let (named, names) = normalize_names(raw);
    println!("{} names corrected, e.g.:", names.names_corrected);
    for n in names.messages.iter().take(3) {
        println!("  row {:?}: {}", n.row, n.action);
    }

    let (clean, imputed) = knn_impute(named, DEFAULT_K)?;
    println!("{} cells imputed with k = {DEFAULT_K}; {} rows kept", imputed.values_imputed, imputed.rows_kept);

    for selector in [
        SeriesSelector { mineral: Some("cobre".into()), department: None },
        SeriesSelector { mineral: Some("ORO".into()), department: Some("Puno".into()) },
    ] {
        let (series, _) = to_series(&clean, &selector)?;
        let head: Vec<String> = series.values().iter().take(4).map(|v| format!("{v:.1}")).collect();
        println!(
            "{:?}/{:?}: {} months from {} in {}: {} ...",
            selector.mineral.as_deref().unwrap_or("*"),
            selector.department.as_deref().unwrap_or("*"),
            series.len(),
            series.start(),
            series.unit(),
            head.join(", ")
        );
    }
    Ok(())
}
