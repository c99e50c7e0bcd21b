//! Grouped aggregates and chart series for dashboards.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{normalize_key, ProductionRecord};

/// Pie slices below this share (percent) are merged into [`OTHERS_LABEL`].
pub const DEFAULT_PIE_THRESHOLD: f64 = 1.0;
pub const OTHERS_LABEL: &str = "OTROS";
/// Unit class whose leader is reported as a department's top mineral.
pub const PRIMARY_UNIT: &str = "TMF";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("no records to aggregate")]
    Empty,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("unknown department {0:?}")]
    UnknownDepartment(String),
    #[error("bin count must be at least 1")]
    Bins,
    #[error("unknown grouping {0:?}")]
    GroupBy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChartKind {
    Bar,
    Pie,
    FrequencyPolygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSeries {
    pub kind: ChartKind,
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    pub unit: String,
    pub title: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Mineral,
    Department,
    Year,
    Stratum,
    Stage,
}

impl GroupBy {
    pub const ALL: [GroupBy; 5] = [GroupBy::Mineral, GroupBy::Department, GroupBy::Year, GroupBy::Stratum, GroupBy::Stage];

    pub fn as_str(self) -> &'static str {
        match self {
            GroupBy::Mineral => "mineral",
            GroupBy::Department => "department",
            GroupBy::Year => "year",
            GroupBy::Stratum => "stratum",
            GroupBy::Stage => "stage",
        }
    }

    fn key(self, r: &ProductionRecord) -> String {
        match self {
            GroupBy::Mineral => normalize_key(&r.mineral),
            GroupBy::Department => normalize_key(&r.department),
            GroupBy::Year => r.year.to_string(),
            GroupBy::Stratum => normalize_key(&r.stratum),
            GroupBy::Stage => normalize_key(&r.stage),
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroupBy {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GroupBy::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| AnalyticsError::GroupBy(s.to_string()))
    }
}

/// Group sums per unit. Values are summed in sorted order so the result is
/// independent of record order.
fn grouped_totals(records: &[ProductionRecord], group_by: GroupBy) -> BTreeMap<String, BTreeMap<String, f64>> {
    let mut raw: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for r in records {
        raw.entry(r.unit.clone()).or_default().entry(group_by.key(r)).or_default().push(r.total_or_sum());
    }
    raw.into_iter()
        .map(|(unit, groups)| {
            let sums = groups
                .into_iter()
                .map(|(k, mut v)| {
                    v.sort_by(f64::total_cmp);
                    (k, v.iter().sum())
                })
                .collect();
            (unit, sums)
        })
        .collect()
}

fn descending(groups: BTreeMap<String, f64>) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = groups.into_iter().collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

/// Bar chart of summed totals, one series per unit (units in alphabetical
/// order), bars sorted by descending value then label.
pub fn aggregate(records: &[ProductionRecord], group_by: GroupBy) -> Result<Vec<ChartSeries>, AnalyticsError> {
    if records.is_empty() {
        return Err(AnalyticsError::Empty);
    }
    Ok(grouped_totals(records, group_by)
        .into_iter()
        .map(|(unit, groups)| {
            let (labels, values) = descending(groups).into_iter().unzip();
            ChartSeries {
                kind: ChartKind::Bar,
                labels,
                values,
                title: format!("Production by {group_by} ({unit})"),
                unit,
            }
        })
        .collect())
}

/// Percentage shares per group, one series per unit.
pub fn pie(records: &[ProductionRecord], group_by: GroupBy) -> Result<Vec<ChartSeries>, AnalyticsError> {
    pie_with_threshold(records, group_by, DEFAULT_PIE_THRESHOLD)
}

pub fn pie_with_threshold(
    records: &[ProductionRecord],
    group_by: GroupBy,
    threshold: f64,
) -> Result<Vec<ChartSeries>, AnalyticsError> {
    if records.is_empty() {
        return Err(AnalyticsError::Empty);
    }
    let mut out = Vec::new();
    for (unit, groups) in grouped_totals(records, group_by) {
        let mut sorted: Vec<f64> = groups.values().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let grand: f64 = sorted.iter().sum();
        if !(grand > 0.0) {
            return Err(AnalyticsError::Degenerate(format!("total production in {unit} is zero")));
        }
        let mut labels = Vec::new();
        let mut values = Vec::new();
        let mut others = Vec::new();
        for (label, v) in descending(groups) {
            let share = 100.0 * v / grand;
            if share < threshold {
                others.push(share);
            } else {
                labels.push(label);
                values.push(share);
            }
        }
        if !others.is_empty() {
            others.sort_by(f64::total_cmp);
            labels.push(OTHERS_LABEL.to_string());
            values.push(others.iter().sum());
        }
        out.push(ChartSeries {
            kind: ChartKind::Pie,
            labels,
            values,
            title: format!("Share by {group_by} ({unit})"),
            unit,
        });
    }
    Ok(out)
}

/// Sturges' rule, `⌈1 + log2 n⌉`.
pub fn sturges_bins(n: usize) -> usize {
    (1.0 + (n as f64).log2()).ceil() as usize
}

/// Equal-width histogram over `[min, max]` drawn as a closed polygon: the
/// bin midpoints plus a zero-count point half a bin beyond each end.
pub fn frequency_polygon(values: &[f64], bins: Option<usize>) -> Result<ChartSeries, AnalyticsError> {
    if values.len() < 2 {
        return Err(AnalyticsError::Degenerate("need at least two values".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AnalyticsError::Degenerate("non-finite value".into()));
    }
    let bins = bins.unwrap_or_else(|| sturges_bins(values.len()));
    if bins == 0 {
        return Err(AnalyticsError::Bins);
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(AnalyticsError::Degenerate("zero spread".into()));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0.0; bins];
    for &v in values {
        let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1.0;
    }
    let mut labels = Vec::with_capacity(bins + 2);
    let mut out = Vec::with_capacity(bins + 2);
    labels.push((lo - width / 2.0).to_string());
    out.push(0.0);
    for (i, c) in counts.into_iter().enumerate() {
        labels.push((lo + (i as f64 + 0.5) * width).to_string());
        out.push(c);
    }
    labels.push((hi + width / 2.0).to_string());
    out.push(0.0);
    Ok(ChartSeries {
        kind: ChartKind::FrequencyPolygon,
        labels,
        values: out,
        unit: String::new(),
        title: "Frequency polygon".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MineralTotal {
    pub quantity: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepartmentStats {
    pub department: String,
    /// Keyed by mineral; a mineral reported in several units gets one entry
    /// per unit, keyed `MINERAL (UNIT)`.
    pub total_by_mineral: BTreeMap<String, MineralTotal>,
    /// Leader of the TMF class when present, otherwise of the first unit
    /// class in alphabetical order.
    pub top_mineral: String,
    /// Leader of every unit class.
    pub top_by_unit: BTreeMap<String, String>,
    pub record_count: usize,
    pub years_covered: (i32, i32),
}

/// Sorted, de-duplicated normalized department names.
pub fn departments(records: &[ProductionRecord]) -> Vec<String> {
    let mut v: Vec<String> = records.iter().map(|r| normalize_key(&r.department)).collect();
    v.sort();
    v.dedup();
    v
}

/// Normalized mineral names with the units each is reported in.
pub fn minerals(records: &[ProductionRecord]) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for r in records {
        let units = out.entry(normalize_key(&r.mineral)).or_default();
        if !units.contains(&r.unit) {
            units.push(r.unit.clone());
        }
    }
    for units in out.values_mut() {
        units.sort();
    }
    out
}

pub fn department_stats(records: &[ProductionRecord], department: &str) -> Result<DepartmentStats, AnalyticsError> {
    let key = normalize_key(department);
    let matched: Vec<&ProductionRecord> = records.iter().filter(|r| normalize_key(&r.department) == key).collect();
    if matched.is_empty() {
        return Err(AnalyticsError::UnknownDepartment(key));
    }
    let mut sums: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in &matched {
        sums.entry((normalize_key(&r.mineral), r.unit.clone())).or_default().push(r.total_or_sum());
    }
    let mut unit_count: BTreeMap<&str, usize> = BTreeMap::new();
    for (mineral, _) in sums.keys() {
        *unit_count.entry(mineral.as_str()).or_default() += 1;
    }
    let mut total_by_mineral = BTreeMap::new();
    let mut leaders: BTreeMap<String, (String, f64)> = BTreeMap::new();
    for ((mineral, unit), mut v) in sums.clone() {
        v.sort_by(f64::total_cmp);
        let quantity: f64 = v.iter().sum();
        let name = if unit_count[mineral.as_str()] > 1 { format!("{mineral} ({unit})") } else { mineral.clone() };
        let lead = leaders.entry(unit.clone()).or_insert_with(|| (mineral.clone(), f64::NEG_INFINITY));
        if quantity > lead.1 {
            *lead = (mineral.clone(), quantity);
        }
        total_by_mineral.insert(name, MineralTotal { quantity, unit });
    }
    let top_by_unit: BTreeMap<String, String> = leaders.into_iter().map(|(u, (m, _))| (u, m)).collect();
    let top_mineral = top_by_unit
        .get(PRIMARY_UNIT)
        .or_else(|| top_by_unit.values().next())
        .cloned()
        .unwrap_or_default();
    let years = matched.iter().map(|r| r.year);
    let years_covered = (years.clone().min().unwrap_or(0), years.max().unwrap_or(0));
    Ok(DepartmentStats {
        department: key,
        total_by_mineral,
        top_mineral,
        top_by_unit,
        record_count: matched.len(),
        years_covered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_example() {
        let c = frequency_polygon(&[1.0, 1.0, 2.0, 2.0], Some(2)).unwrap();
        assert_eq!(c.values, vec![0.0, 2.0, 2.0, 0.0]);
        assert_eq!(c.labels, vec!["0.75", "1.25", "1.75", "2.25"]);
    }

    #[test]
    fn sturges() {
        assert_eq!(sturges_bins(100), 8);
        assert_eq!(sturges_bins(2), 2);
    }

    #[test]
    fn polygon_rejects_constant() {
        assert!(matches!(frequency_polygon(&[5.0, 5.0, 5.0], None), Err(AnalyticsError::Degenerate(_))));
        assert!(matches!(frequency_polygon(&[1.0, 2.0], Some(0)), Err(AnalyticsError::Bins)));
    }

    #[test]
    fn group_by_parses() {
        assert_eq!("Department".parse::<GroupBy>().unwrap(), GroupBy::Department);
        assert!("holder".parse::<GroupBy>().is_err());
    }
}
