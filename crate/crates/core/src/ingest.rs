//! Parsing, cleaning and imputation of MINEM production tables.
//!
//! Two layouts are understood. The monthly table has one row per
//! (mineral, unit, stage, process, stratum, holder, department, year) with
//! twelve month columns and a total. The annual table has a year column
//! followed by one `MINERAL(UNIT)` column per mineral.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use chrono::Datelike;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::series::{CalendarPoint, Frequency, SeriesError, TimeSeries};

/// Header of the monthly table, in file order.
pub const MONTHLY_COLUMNS: [&str; 21] = [
    "Mineral",
    "Unidad de medida",
    "Etapa",
    "Proceso",
    "Estrato",
    "Titular",
    "Departamento",
    "Año",
    "Enero",
    "Febrero",
    "Marzo",
    "Abril",
    "Mayo",
    "Junio",
    "Julio",
    "Agosto",
    "Septiembre",
    "Octubre",
    "Noviembre",
    "Diciembre",
    "Total",
];

pub const YEAR_COLUMN: &str = "AÑO";
pub const DEFAULT_K: usize = 5;
pub const MIN_YEAR: i32 = 1900;

const GAP_TOKENS: [&str; 4] = ["", "NA", "N/A", "-"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("missing required columns: {}", missing.join(", "))]
    Schema { missing: Vec<String> },
    #[error("malformed header column {0:?}")]
    Header(String),
    #[error("input is not valid UTF-8 (byte {offset})")]
    Encoding { offset: usize },
    #[error("year {0} appears more than once")]
    DuplicateYear(i32),
    #[error("k must be at least 1, got {0}")]
    K(usize),
    #[error("selection matched no records")]
    EmptySelection,
    #[error("selection mixes units: {}", units.join(", "))]
    MixedUnit { units: Vec<String> },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

impl From<csv::Error> for IngestError {
    fn from(e: csv::Error) -> Self {
        IngestError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionRecord {
    pub mineral: String,
    pub unit: String,
    pub stage: String,
    pub process: String,
    pub stratum: String,
    pub holder: String,
    pub department: String,
    pub year: i32,
    /// January to December; `None` marks a gap.
    pub months: [Option<f64>; 12],
    pub total: Option<f64>,
}

impl ProductionRecord {
    /// Sum of the observed months.
    pub fn month_sum(&self) -> f64 {
        self.months.iter().flatten().sum()
    }

    pub fn has_gaps(&self) -> bool {
        self.months.iter().any(Option::is_none)
    }

    /// The recorded total, or the month sum when none was recorded.
    pub fn total_or_sum(&self) -> f64 {
        self.total.unwrap_or_else(|| self.month_sum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualQuantity {
    pub value: Option<f64>,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualRecord {
    pub year: i32,
    pub quantities: BTreeMap<String, AnnualQuantity>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notice {
    /// Zero-based data row (header excluded), when the notice concerns one.
    pub row: Option<usize>,
    pub column: Option<String>,
    pub action: String,
}

impl Notice {
    fn new(row: Option<usize>, column: Option<&str>, action: impl Into<String>) -> Self {
        Self { row, column: column.map(str::to_string), action: action.into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_dropped: usize,
    pub names_corrected: usize,
    pub values_imputed: usize,
    pub messages: Vec<Notice>,
}

impl CleaningReport {
    fn notice(&mut self, row: Option<usize>, column: Option<&str>, action: impl Into<String>) {
        let n = Notice::new(row, column, action);
        log::debug!("{n:?}");
        self.messages.push(n);
    }

    /// Folds a later stage's report into this one. Row counts follow the
    /// later stage, which sees only rows kept so far.
    pub fn merge(&mut self, later: CleaningReport) {
        self.rows_kept = later.rows_kept;
        self.rows_dropped += later.rows_dropped;
        self.names_corrected += later.names_corrected;
        self.values_imputed += later.values_imputed;
        self.messages.extend(later.messages);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FormatOptions {
    /// Field delimiter; detected from the header row when `None`.
    pub delimiter: Option<u8>,
}

/// Case-, accent- and whitespace-insensitive key: NFD decomposition with
/// combining marks removed, uppercased, trimmed, internal runs collapsed.
pub fn normalize_key(s: &str) -> String {
    let stripped: String = s.nfd().filter(|c| !is_combining_mark(*c)).collect::<String>().to_uppercase();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn decode(bytes: &[u8]) -> Result<&str, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| IngestError::Encoding { offset: e.valid_up_to() })?;
    Ok(text.strip_prefix('\u{feff}').unwrap_or(text))
}

fn detect_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    let semis = header.matches(';').count();
    let commas = header.matches(',').count();
    if semis > commas {
        b';'
    } else {
        b','
    }
}

/// Parses a numeric cell. `Ok(None)` is a gap; `Err(())` an unreadable value.
fn parse_number(cell: &str) -> Result<Option<f64>, ()> {
    let cell = cell.trim();
    if GAP_TOKENS.iter().any(|g| cell.eq_ignore_ascii_case(g)) {
        return Ok(None);
    }
    let plain = if cell.contains(',') {
        // Thousands separators: groups of exactly three digits after the first.
        let (int, frac) = cell.split_once('.').map_or((cell, None), |(a, b)| (a, Some(b)));
        let int = int.strip_prefix('-').unwrap_or(int);
        let mut groups = int.split(',');
        let first = groups.next().unwrap_or("");
        let ok = (1..=3).contains(&first.len())
            && first.bytes().all(|b| b.is_ascii_digit())
            && groups.all(|g| g.len() == 3 && g.bytes().all(|b| b.is_ascii_digit()))
            && frac.is_none_or(|f| f.bytes().all(|b| b.is_ascii_digit()));
        if !ok {
            return Err(());
        }
        cell.replace(',', "")
    } else {
        cell.to_string()
    };
    match plain.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(()),
    }
}

fn current_year() -> i32 {
    chrono::Utc::now().year()
}

fn parse_year(cell: &str) -> Option<i32> {
    let v = parse_number(cell).ok()??;
    if v.fract() != 0.0 {
        return None;
    }
    let y = v as i32;
    (MIN_YEAR..=current_year()).contains(&y).then_some(y)
}

fn reader(text: &str, delimiter: u8) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .has_headers(true)
        .from_reader(text.as_bytes())
}

/// Parses the monthly production table.
///
/// Rows with an unreadable year or with every month empty are dropped and
/// logged. Unreadable or negative numeric cells become gaps, also logged.
pub fn parse_monthly<R: Read>(
    mut source: R,
    options: FormatOptions,
) -> Result<(Vec<ProductionRecord>, CleaningReport), IngestError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes).map_err(|e| IngestError::Csv(e.to_string()))?;
    let text = decode(&bytes)?;
    let delimiter = options.delimiter.unwrap_or_else(|| detect_delimiter(text));
    let mut rdr = reader(text, delimiter);

    let headers = rdr.headers()?.clone();
    let keys: Vec<String> = headers.iter().map(normalize_key).collect();
    let mut index = [0usize; 21];
    let mut missing = Vec::new();
    for (slot, name) in index.iter_mut().zip(MONTHLY_COLUMNS) {
        match keys.iter().position(|k| *k == normalize_key(name)) {
            Some(i) => *slot = i,
            None => missing.push(name.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(IngestError::Schema { missing });
    }

    let mut report = CleaningReport::default();
    let mut records = Vec::new();
    for (row, result) in rdr.records().enumerate() {
        report.rows_read += 1;
        let rec = match result {
            Ok(r) => r,
            Err(e) => {
                report.rows_dropped += 1;
                report.notice(Some(row), None, format!("dropped: unreadable row ({e})"));
                continue;
            }
        };
        let cell = |i: usize| rec.get(index[i]).unwrap_or("");
        let Some(year) = parse_year(cell(7)) else {
            report.rows_dropped += 1;
            report.notice(Some(row), Some(MONTHLY_COLUMNS[7]), format!("dropped: invalid year {:?}", cell(7)));
            continue;
        };
        let numeric = |i: usize, report: &mut CleaningReport| match parse_number(cell(i)) {
            Ok(Some(v)) if v >= 0.0 => Some(v),
            Ok(None) => None,
            _ => {
                report.notice(Some(row), Some(MONTHLY_COLUMNS[i]), format!("invalid value {:?} treated as gap", cell(i)));
                None
            }
        };
        let mut months = [None; 12];
        for (m, slot) in months.iter_mut().enumerate() {
            *slot = numeric(8 + m, &mut report);
        }
        let total = numeric(20, &mut report);
        if months.iter().all(Option::is_none) {
            report.rows_dropped += 1;
            report.notice(Some(row), None, "dropped: every month is empty");
            continue;
        }
        records.push(ProductionRecord {
            mineral: cell(0).to_string(),
            unit: cell(1).to_string(),
            stage: cell(2).to_string(),
            process: cell(3).to_string(),
            stratum: cell(4).to_string(),
            holder: cell(5).to_string(),
            department: cell(6).to_string(),
            year,
            months,
            total,
        });
    }
    report.rows_kept = records.len();
    Ok((records, report))
}

/// Splits `NAME(UNIT)` into its parts.
fn split_mineral_column(header: &str) -> Option<(String, String)> {
    let h = header.trim();
    let open = h.find('(')?;
    let inner = h[open + 1..].strip_suffix(')')?;
    let name = h[..open].trim();
    if name.is_empty() || inner.trim().is_empty() {
        return None;
    }
    Some((name.to_uppercase(), inner.trim().to_string()))
}

/// Parses the annual production table (`AÑO` plus `MINERAL(UNIT)` columns).
/// Records come back sorted by year.
pub fn parse_annual<R: Read>(mut source: R) -> Result<Vec<AnnualRecord>, IngestError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes).map_err(|e| IngestError::Csv(e.to_string()))?;
    let text = decode(&bytes)?;
    let mut rdr = reader(text, detect_delimiter(text));
    let headers = rdr.headers()?.clone();
    let year_key = normalize_key(YEAR_COLUMN);
    let year_idx = headers
        .iter()
        .position(|h| normalize_key(h) == year_key)
        .ok_or_else(|| IngestError::Schema { missing: vec![YEAR_COLUMN.to_string()] })?;
    let mut columns = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if i == year_idx || h.trim().is_empty() {
            continue;
        }
        let (name, unit) = split_mineral_column(h).ok_or_else(|| IngestError::Header(h.to_string()))?;
        columns.push((i, name, unit));
    }

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (row, result) in rdr.records().enumerate() {
        let rec = result?;
        let cell = rec.get(year_idx).unwrap_or("");
        let year = parse_year(cell).ok_or_else(|| IngestError::Csv(format!("row {row}: invalid year {cell:?}")))?;
        if !seen.insert(year) {
            return Err(IngestError::DuplicateYear(year));
        }
        let mut quantities = BTreeMap::new();
        for (i, name, unit) in &columns {
            let raw = rec.get(*i).unwrap_or("");
            let value = match parse_number(raw) {
                Ok(v) => v.filter(|x| *x >= 0.0),
                Err(()) => {
                    log::warn!("annual row {row}, column {name}: invalid value {raw:?} treated as gap");
                    None
                }
            };
            quantities.insert(name.clone(), AnnualQuantity { value, unit: unit.clone() });
        }
        out.push(AnnualRecord { year, quantities });
    }
    out.sort_by_key(|r| r.year);
    Ok(out)
}

/// Uppercases, strips accents from and collapses whitespace in the mineral
/// and department names.
pub fn normalize_names(mut records: Vec<ProductionRecord>) -> (Vec<ProductionRecord>, CleaningReport) {
    let mut report = CleaningReport { rows_read: records.len(), rows_kept: records.len(), ..Default::default() };
    for (row, r) in records.iter_mut().enumerate() {
        for (column, field) in [("Mineral", &mut r.mineral), ("Departamento", &mut r.department)] {
            let fixed = normalize_key(field);
            if fixed != *field {
                report.names_corrected += 1;
                report.notice(Some(row), Some(column), format!("renamed {field:?} to {fixed:?}"));
                *field = fixed;
            }
        }
    }
    (records, report)
}

/// Per-month z-scores within one donor group. Columns with fewer than two
/// observations or zero spread score 0 everywhere.
fn group_zscores(records: &[ProductionRecord], members: &[usize]) -> Vec<[Option<f64>; 12]> {
    let mut z = vec![[None; 12]; members.len()];
    for m in 0..12 {
        let column: Vec<Option<f64>> = members.iter().map(|&i| records[i].months[m]).collect();
        let scores = crate::series::znormalize(&column)
            .unwrap_or_else(|_| column.iter().map(|v| v.map(|_| 0.0)).collect());
        for (row, s) in z.iter_mut().zip(scores) {
            row[m] = s;
        }
    }
    z
}

/// Distance between two rows over the months observed in both, divided by
/// the number of such months. `None` when they share no month.
fn knn_distance(a: &[Option<f64>; 12], b: &[Option<f64>; 12]) -> Option<f64> {
    let mut ssq = 0.0;
    let mut shared = 0usize;
    for m in 0..12 {
        if let (Some(x), Some(y)) = (a[m], b[m]) {
            ssq += (x - y) * (x - y);
            shared += 1;
        }
    }
    (shared > 0).then(|| ssq.sqrt() / shared as f64)
}

/// Fills month gaps with the mean of the `k` nearest rows of the same
/// mineral and unit that observe that month. Only originally observed
/// values act as donors. A row with a gap that has no donor is dropped.
/// Totals are recomputed for every kept row.
pub fn knn_impute(
    records: Vec<ProductionRecord>,
    k: usize,
) -> Result<(Vec<ProductionRecord>, CleaningReport), IngestError> {
    if k < 1 {
        return Err(IngestError::K(k));
    }
    let mut report = CleaningReport { rows_read: records.len(), ..Default::default() };
    let mut groups: HashMap<(&str, &str), Vec<usize>> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        groups.entry((r.mineral.as_str(), r.unit.as_str())).or_default().push(i);
    }

    let mut filled: Vec<[Option<f64>; 12]> = records.iter().map(|r| r.months).collect();
    let mut dropped = vec![false; records.len()];
    let mut group_list: Vec<_> = groups.into_iter().collect();
    group_list.sort();
    for (_, members) in group_list {
        if !members.iter().any(|&i| records[i].has_gaps()) {
            continue;
        }
        let z = group_zscores(&records, &members);
        for (pos, &row) in members.iter().enumerate() {
            if !records[row].has_gaps() {
                continue;
            }
            // Distances from this row to every other member, computed once.
            let dist: Vec<Option<f64>> = members
                .iter()
                .enumerate()
                .map(|(q, _)| if q == pos { None } else { knn_distance(&z[pos], &z[q]) })
                .collect();
            for m in 0..12 {
                if records[row].months[m].is_some() {
                    continue;
                }
                let mut donors: Vec<(f64, usize, f64)> = members
                    .iter()
                    .zip(&dist)
                    .filter_map(|(&q, d)| Some((d.as_ref().copied()?, q, records[q].months[m]?)))
                    .collect();
                if donors.is_empty() {
                    dropped[row] = true;
                    report.notice(Some(row), Some(MONTHLY_COLUMNS[8 + m]), "dropped: no donor for gap");
                    break;
                }
                donors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                donors.truncate(k);
                if donors.len() < k {
                    report.notice(Some(row), Some(MONTHLY_COLUMNS[8 + m]), format!("only {} donors available", donors.len()));
                }
                let value = donors.iter().map(|d| d.2).sum::<f64>() / donors.len() as f64;
                filled[row][m] = Some(value);
            }
        }
    }

    let mut out = Vec::with_capacity(records.len());
    for (row, (mut r, months)) in records.into_iter().zip(filled).enumerate() {
        if dropped[row] {
            report.rows_dropped += 1;
            continue;
        }
        let imputed = r.months.iter().filter(|v| v.is_none()).count();
        if imputed > 0 {
            report.values_imputed += imputed;
            report.notice(Some(row), None, format!("imputed {imputed} month(s)"));
        }
        r.months = months;
        let sum = r.month_sum();
        if let Some(t) = r.total {
            if (t - sum).abs() > 1e-6 * sum.abs().max(t.abs()) && imputed == 0 {
                report.notice(Some(row), Some("Total"), format!("total {t} replaced by month sum {sum}"));
            }
        }
        r.total = Some(sum);
        out.push(r);
    }
    report.rows_kept = out.len();
    Ok((out, report))
}

/// Parse, name normalization and k-NN imputation in one pass, with the
/// stage reports merged.
pub fn clean_monthly<R: Read>(
    source: R,
    options: FormatOptions,
    k: usize,
) -> Result<(Vec<ProductionRecord>, CleaningReport), IngestError> {
    let (records, mut report) = parse_monthly(source, options)?;
    let (records, names) = normalize_names(records);
    report.merge(names);
    let (records, imputed) = knn_impute(records, k)?;
    report.merge(imputed);
    Ok((records, report))
}

/// Which records feed a monthly series. Fields left `None` match anything;
/// names compare after [`normalize_key`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesSelector {
    pub mineral: Option<String>,
    pub department: Option<String>,
}

impl SeriesSelector {
    pub fn matches(&self, r: &ProductionRecord) -> bool {
        let ok = |want: &Option<String>, have: &str| want.as_ref().is_none_or(|w| normalize_key(w) == normalize_key(have));
        ok(&self.mineral, &r.mineral) && ok(&self.department, &r.department)
    }
}

/// Sums matching records into a monthly series spanning the first to the
/// last observed month. Months in that span with no observation at all are
/// zero-filled and logged.
pub fn to_series(
    records: &[ProductionRecord],
    selector: &SeriesSelector,
) -> Result<(TimeSeries, CleaningReport), IngestError> {
    let matched: Vec<&ProductionRecord> = records.iter().filter(|r| selector.matches(r)).collect();
    if matched.is_empty() {
        return Err(IngestError::EmptySelection);
    }
    let units: BTreeSet<&str> = matched.iter().map(|r| r.unit.as_str()).collect();
    if units.len() > 1 {
        return Err(IngestError::MixedUnit { units: units.into_iter().map(str::to_string).collect() });
    }
    let unit = matched[0].unit.clone();

    // Keyed by months since year 0 so the map iterates in calendar order.
    let mut sums: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for r in &matched {
        for (m, v) in r.months.iter().enumerate() {
            if let Some(v) = v {
                sums.entry(r.year as i64 * 12 + m as i64).or_default().push(*v);
            }
        }
    }
    let (Some(&first), Some(&last)) = (sums.keys().next(), sums.keys().next_back()) else {
        return Err(IngestError::EmptySelection);
    };
    let mut report = CleaningReport { rows_read: records.len(), rows_kept: matched.len(), ..Default::default() };
    let mut values = Vec::with_capacity((last - first + 1) as usize);
    for key in first..=last {
        match sums.get_mut(&key) {
            Some(cell) => {
                // Sorted summation so the result does not depend on record order.
                cell.sort_by(f64::total_cmp);
                values.push(cell.iter().sum());
            }
            None => {
                let p = CalendarPoint::month((key / 12) as i32, (key % 12) as u32 + 1);
                report.notice(None, None, format!("zero-filled {p}: no matching record"));
                values.push(0.0);
            }
        }
    }
    let start = CalendarPoint::month((first / 12) as i32, (first % 12) as u32 + 1);
    Ok((TimeSeries::new(values, start, Frequency::Monthly, unit)?, report))
}

/// Names of the minerals present in an annual dataset with their units.
pub fn annual_minerals(records: &[AnnualRecord]) -> Vec<(String, String)> {
    let mut out: BTreeMap<String, String> = BTreeMap::new();
    for r in records {
        for (name, q) in &r.quantities {
            out.entry(name.clone()).or_insert_with(|| q.unit.clone());
        }
    }
    out.into_iter().collect()
}

/// Annual series of one mineral. Leading and trailing gaps are trimmed,
/// interior gaps (including missing years) are linearly interpolated and
/// logged.
pub fn annual_series(records: &[AnnualRecord], mineral: &str) -> Result<(TimeSeries, CleaningReport), IngestError> {
    let key = normalize_key(mineral);
    let mut points: BTreeMap<i32, Option<f64>> = BTreeMap::new();
    let mut unit = None;
    for r in records {
        if let Some((_, q)) = r.quantities.iter().find(|(name, _)| normalize_key(name) == key) {
            points.insert(r.year, q.value);
            unit.get_or_insert_with(|| q.unit.clone());
        }
    }
    let unit = unit.ok_or(IngestError::EmptySelection)?;
    let observed: Vec<(i32, f64)> = points.iter().filter_map(|(y, v)| Some((*y, (*v)?))).collect();
    let (Some(&(y0, _)), Some(&(y1, _))) = (observed.first(), observed.last()) else {
        return Err(IngestError::EmptySelection);
    };
    let mut report = CleaningReport { rows_read: records.len(), rows_kept: (y1 - y0 + 1) as usize, ..Default::default() };
    let mut values = Vec::with_capacity(report.rows_kept);
    let mut next = 0usize;
    for year in y0..=y1 {
        while observed[next].0 < year {
            next += 1;
        }
        if observed[next].0 == year {
            values.push(observed[next].1);
        } else {
            let (ya, va) = observed[next - 1];
            let (yb, vb) = observed[next];
            let v = va + (vb - va) * (year - ya) as f64 / (yb - ya) as f64;
            report.values_imputed += 1;
            report.notice(None, Some(mineral), format!("interpolated {year}"));
            values.push(v);
        }
    }
    Ok((TimeSeries::new(values, CalendarPoint::year(y0), Frequency::Annual, unit)?, report))
}

fn format_number(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Writes records with the standard 21-column header. Parsing the output
/// reproduces the records.
pub fn write_monthly<W: Write>(records: &[ProductionRecord], out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MONTHLY_COLUMNS)?;
    for r in records {
        let mut row = vec![
            r.mineral.clone(),
            r.unit.clone(),
            r.stage.clone(),
            r.process.clone(),
            r.stratum.clone(),
            r.holder.clone(),
            r.department.clone(),
            r.year.to_string(),
        ];
        row.extend(r.months.iter().map(|m| format_number(*m)));
        row.push(format_number(r.total));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| IngestError::Csv(e.to_string()))
}

/// Writes an annual table with the given `(mineral, unit)` column order.
pub fn write_annual<W: Write>(
    records: &[AnnualRecord],
    columns: &[(String, String)],
    out: W,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![YEAR_COLUMN.to_string()];
    header.extend(columns.iter().map(|(m, u)| format!("{m}({u})")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.year.to_string()];
        row.extend(columns.iter().map(|(m, _)| format_number(r.quantities.get(m).and_then(|q| q.value))));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| IngestError::Csv(e.to_string()))
}
