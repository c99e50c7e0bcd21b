//! k-NN imputation on a tiny hand-made table.
//!
//! Donors must share mineral and unit. Distances use per-month z-scores
//! over the months both rows observe, and only originally observed values
//! are ever averaged.
//!
//! ```text
//! cargo run -p minecast-core --example knn_imputation
//! ```

use minecast::ingest::{knn_impute, ProductionRecord};

fn record(mineral: &str, holder: &str, months: [Option<f64>; 12]) -> ProductionRecord {
    ProductionRecord {
        mineral: mineral.into(),
        unit: "TMF".into(),
        stage: "CONCENTRACIÓN".into(),
        process: "FLOTACIÓN".into(),
        stratum: "RÉGIMEN GENERAL".into(),
        holder: holder.into(),
        department: "JUNIN".into(),
        year: 2022,
        months,
        total: None,
    }
}

fn row(base: f64, gap: Option<usize>) -> [Option<f64>; 12] {
    std::array::from_fn(|m| if Some(m) == gap { None } else { Some(base + m as f64) })
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = vec![
        record("ZINC", "A", row(100.0, Some(5))),
        record("ZINC", "B", row(101.0, None)),
        record("ZINC", "C", row(99.0, None)),
        record("ZINC", "D", row(400.0, None)),
        // Not a donor for the zinc rows.
        record("PLOMO", "E", row(100.5, None)),
    ];
    // B and C sit next to A; with k = 3 the distant D is pulled in as well.
    for k in [1, 2, 3] {
        let (out, report) = knn_impute(records.clone(), k)?;
        println!("k = {k}: June for holder A -> {:?} ({} imputed)", out[0].months[5], report.values_imputed);
    }
    let (out, _) = knn_impute(records, 2)?;
    println!("total recomputed: {:?} = Σ months {}", out[0].total, out[0].month_sum());
    Ok(())
}
