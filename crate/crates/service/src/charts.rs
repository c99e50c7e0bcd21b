use std::collections::BTreeSet;

use minecast::analytics::{aggregate, frequency_polygon, pie_with_threshold, ChartSeries, DEFAULT_PIE_THRESHOLD};
use minecast::ingest::normalize_key;
use minecast::ProductionRecord;

use crate::error::ApiError;
use crate::query::{ChartQuery, ChartType};

fn filtered(records: &[ProductionRecord], q: &ChartQuery) -> Vec<ProductionRecord> {
    let want = |sel: &Option<String>, have: &str| sel.as_ref().is_none_or(|s| normalize_key(s) == normalize_key(have));
    records
        .iter()
        .filter(|r| want(&q.mineral, &r.mineral) && want(&q.department, &r.department))
        .filter(|r| q.year.is_none_or(|y| y == r.year))
        .cloned()
        .collect()
}

/// Chart payloads for a query. Bar and pie charts return one series per
/// unit; the polygon is a single series over record totals and needs a
/// selection with one unit.
pub fn build_chart(kind: ChartType, query: &ChartQuery, records: &[ProductionRecord]) -> Result<Vec<ChartSeries>, ApiError> {
    let subset = filtered(records, query);
    if subset.is_empty() {
        let field = if query.department.is_some() { "department" } else { "mineral" };
        return Err(ApiError::not_found("empty_selection", "no records match the selection", Some(field)));
    }
    match kind {
        ChartType::Bar => Ok(aggregate(&subset, query.group_by)?),
        ChartType::Pie => Ok(pie_with_threshold(&subset, query.group_by, query.threshold.unwrap_or(DEFAULT_PIE_THRESHOLD))?),
        ChartType::Polygon => {
            let units: BTreeSet<&str> = subset.iter().map(|r| r.unit.as_str()).collect();
            if units.len() > 1 {
                let units: Vec<&str> = units.into_iter().collect();
                return Err(ApiError::bad_request(
                    "mixed_unit",
                    format!("selection mixes units ({}); pick a mineral", units.join(", ")),
                    "mineral",
                ));
            }
            let totals: Vec<f64> = subset.iter().map(ProductionRecord::total_or_sum).collect();
            let mut series = frequency_polygon(&totals, query.bins)?;
            series.unit = subset[0].unit.clone();
            series.title = match &query.mineral {
                Some(m) => format!("Distribution of record totals, {}", normalize_key(m)),
                None => "Distribution of record totals".into(),
            };
            Ok(vec![series])
        }
    }
}
