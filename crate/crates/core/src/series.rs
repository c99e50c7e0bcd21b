//! Time-series container and the stateless numeric primitives every model
//! builds on: differencing, its inverse, sample autocorrelation and
//! z-normalization.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series of length {len} is too short for {what}")]
    Length { len: usize, what: String },
    #[error("expected {expected} anchor values, got {got}")]
    Anchor { expected: usize, got: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("lag {max_lag} must be positive and smaller than the series length {n}")]
    Lag { max_lag: usize, n: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("empty series")]
    Empty,
}

/// Sampling frequency, stored as periods per year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frequency {
    Monthly,
    Annual,
}

impl Frequency {
    pub fn periods_per_year(self) -> u32 {
        match self {
            Frequency::Monthly => 12,
            Frequency::Annual => 1,
        }
    }
}

/// A calendar position: a year, plus a month (1..=12) for monthly data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CalendarPoint {
    pub year: i32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub month: Option<u32>,
}

impl CalendarPoint {
    pub fn year(year: i32) -> Self {
        Self { year, month: None }
    }

    pub fn month(year: i32, month: u32) -> Self {
        debug_assert!((1..=12).contains(&month));
        Self { year, month: Some(month) }
    }

    /// Moves `periods` steps forward (or backward when negative). Monthly
    /// points wrap December into January of the next year.
    pub fn advance(self, periods: i64) -> Self {
        match self.month {
            None => Self::year(self.year + periods as i32),
            Some(m) => {
                let idx = self.year as i64 * 12 + (m as i64 - 1) + periods;
                Self::month(idx.div_euclid(12) as i32, idx.rem_euclid(12) as u32 + 1)
            }
        }
    }

    /// Signed number of periods from `self` to `other`.
    pub fn periods_until(self, other: CalendarPoint) -> i64 {
        match (self.month, other.month) {
            (Some(a), Some(b)) => {
                (other.year as i64 * 12 + b as i64) - (self.year as i64 * 12 + a as i64)
            }
            _ => other.year as i64 - self.year as i64,
        }
    }
}

impl fmt::Display for CalendarPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.month {
            Some(m) => write!(f, "{}-{:02}", self.year, m),
            None => write!(f, "{}", self.year),
        }
    }
}

/// Ordered, finite observations at a fixed calendar frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    start: CalendarPoint,
    frequency: Frequency,
    unit: String,
}

impl TimeSeries {
    /// Builds a series, rejecting empty input and non-finite values.
    pub fn new(
        values: Vec<f64>,
        start: CalendarPoint,
        frequency: Frequency,
        unit: impl Into<String>,
    ) -> Result<Self, SeriesError> {
        if values.is_empty() {
            return Err(SeriesError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite(i));
        }
        let start = match (frequency, start.month) {
            (Frequency::Monthly, None) => CalendarPoint::month(start.year, 1),
            (Frequency::Annual, Some(_)) => CalendarPoint::year(start.year),
            _ => start,
        };
        Ok(Self { values, start, frequency, unit: unit.into() })
    }

    /// Annual series starting at `year` with an empty unit. Handy in tests
    /// and for anonymous numeric data.
    pub fn from_values(values: Vec<f64>) -> Result<Self, SeriesError> {
        Self::new(values, CalendarPoint::year(1), Frequency::Annual, "")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn start(&self) -> CalendarPoint {
        self.start
    }

    pub fn end(&self) -> CalendarPoint {
        self.start.advance(self.values.len() as i64 - 1)
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    /// Same calendar metadata, new values and start offset (in periods).
    pub(crate) fn derive(&self, values: Vec<f64>, offset: i64) -> Self {
        Self {
            values,
            start: self.start.advance(offset),
            frequency: self.frequency,
            unit: self.unit.clone(),
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, SeriesError> {
        Self::new(values, self.start, self.frequency, self.unit.clone())
    }
}

/// Sample autocorrelations at lags `1..=max_lag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfResult {
    pub lags: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub n: usize,
}

/// Applies the first difference `d` times. The start advances by `d`.
pub fn difference(series: &TimeSeries, d: usize) -> Result<TimeSeries, SeriesError> {
    if series.len() <= d {
        return Err(SeriesError::Length { len: series.len(), what: format!("differencing of order {d}") });
    }
    Ok(series.derive(difference_values(series.values(), d), d as i64))
}

pub(crate) fn difference_values(values: &[f64], d: usize) -> Vec<f64> {
    let mut out = values.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    out
}

/// Undoes `d` rounds of differencing.
///
/// `anchors` are the `d` original values immediately preceding the first
/// differenced element; the result has the same length as `diffed` and
/// starts `d` periods after the first anchor. For a series `s`,
/// `inverse_difference(difference(s, d), &s[..d], d)` yields `s[d..]`.
pub fn inverse_difference(
    diffed: &TimeSeries,
    anchors: &[f64],
    d: usize,
) -> Result<TimeSeries, SeriesError> {
    if anchors.len() != d {
        return Err(SeriesError::Anchor { expected: d, got: anchors.len() });
    }
    Ok(diffed.derive(integrate(diffed.values(), anchors), 0))
}

pub(crate) fn integrate(diffed: &[f64], anchors: &[f64]) -> Vec<f64> {
    let d = anchors.len();
    if d == 0 {
        return diffed.to_vec();
    }
    // Last value of each intermediate differencing level, from the original
    // series (level 0) down to level d-1.
    let mut levels = Vec::with_capacity(d);
    let mut current = anchors.to_vec();
    for _ in 0..d {
        levels.push(*current.last().expect("non-empty level"));
        current = current.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let mut out = Vec::with_capacity(diffed.len());
    for &x in diffed {
        let mut value = x;
        for level in (0..d).rev() {
            value += levels[level];
            levels[level] = value;
        }
        out.push(value);
    }
    out
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Biased sample autocorrelation (divisor `n` at every lag).
pub fn acf(series: &TimeSeries, max_lag: usize) -> Result<AcfResult, SeriesError> {
    acf_values(series.values(), max_lag)
}

pub(crate) fn acf_values(values: &[f64], max_lag: usize) -> Result<AcfResult, SeriesError> {
    let n = values.len();
    if max_lag == 0 || max_lag >= n {
        return Err(SeriesError::Lag { max_lag, n });
    }
    let m = mean(values);
    let centered: Vec<f64> = values.iter().map(|v| v - m).collect();
    let denom: f64 = centered.iter().map(|c| c * c).sum();
    if denom <= 0.0 || !denom.is_finite() {
        return Err(SeriesError::Degenerate("zero sample variance".into()));
    }
    let coefficients = (1..=max_lag)
        .map(|k| {
            let num: f64 = centered[..n - k].iter().zip(&centered[k..]).map(|(a, b)| a * b).sum();
            (num / denom).clamp(-1.0, 1.0)
        })
        .collect();
    Ok(AcfResult { lags: (1..=max_lag).collect(), coefficients, n })
}

/// Population variance; `None` for an empty slice.
pub(crate) fn variance(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let m = mean(values);
    Some(values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64)
}

/// Maps present entries to `(v - mean) / sd` using the population standard
/// deviation over present entries; gaps stay gaps.
pub fn znormalize(values: &[Option<f64>]) -> Result<Vec<Option<f64>>, SeriesError> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.len() < 2 {
        return Err(SeriesError::Degenerate("fewer than two present values".into()));
    }
    let m = mean(&present);
    let sd = variance(&present).unwrap_or(0.0).sqrt();
    if sd == 0.0 || !sd.is_finite() {
        return Err(SeriesError::Degenerate("zero spread".into()));
    }
    Ok(values.iter().map(|v| v.map(|x| (x - m) / sd)).collect())
}
