//! Query-string validation shared by the HTTP handlers and the CLI.
//!
//! Every parameter is checked before any computation starts, and each
//! failure names the offending field.

use std::collections::BTreeMap;
use std::str::FromStr;

use minecast::pipeline::{ForecastLevel, ForecastRequest, ModelChoice};
use minecast::GroupBy;

use crate::error::ApiError;

pub type Params = BTreeMap<String, String>;

pub const FORECAST_PARAMS: &[&str] = &["level", "target", "mineral", "horizon", "model", "confidence", "seed"];
pub const CHART_PARAMS: &[&str] = &["group_by", "mineral", "department", "year", "bins", "threshold"];

fn reject_unknown(params: &Params, allowed: &[&str]) -> Result<(), ApiError> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ApiError::bad_request(
            "unknown_parameter",
            format!("unknown query parameter {k:?}; expected one of {}", allowed.join(", ")),
            k,
        )),
        None => Ok(()),
    }
}

/// Non-empty, trimmed value of a parameter.
fn get<'a>(params: &'a Params, key: &str) -> Option<&'a str> {
    params.get(key).map(|v| v.trim()).filter(|v| !v.is_empty())
}

fn parse<T: FromStr>(params: &Params, key: &str, what: &str) -> Result<Option<T>, ApiError> {
    get(params, key)
        .map(|v| v.parse::<T>().map_err(|_| ApiError::invalid(key, format!("{key} must be {what}, got {v:?}"))))
        .transpose()
}

pub fn parse_forecast(params: &Params) -> Result<ForecastRequest, ApiError> {
    reject_unknown(params, FORECAST_PARAMS)?;
    let level: ForecastLevel = get(params, "level")
        .ok_or_else(|| ApiError::missing("level"))?
        .parse()
        .map_err(|e: minecast::PipelineError| ApiError::invalid("level", e.to_string()))?;
    let target = get(params, "target").ok_or_else(|| ApiError::missing("target"))?;
    let mut request = ForecastRequest::new(level, target);
    request.mineral = get(params, "mineral").map(str::to_string);
    request.horizon = parse(params, "horizon", "a positive integer")?;
    if let Some(model) = get(params, "model") {
        request.model = model
            .parse::<ModelChoice>()
            .map_err(|e: minecast::PipelineError| ApiError::invalid("model", e.to_string()))?;
    }
    if let Some(c) = parse::<f64>(params, "confidence", "a number in (0, 1)")? {
        request.confidence = c;
    }
    if let Some(seed) = parse::<u64>(params, "seed", "a non-negative integer")? {
        request.seed = seed;
    }
    request.validate()?;
    Ok(request)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChartType {
    Bar,
    Pie,
    Polygon,
}

impl FromStr for ChartType {
    type Err = ApiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bar" => Ok(ChartType::Bar),
            "pie" => Ok(ChartType::Pie),
            "polygon" => Ok(ChartType::Polygon),
            other => Err(ApiError::not_found(
                "unknown_chart",
                format!("unknown chart {other:?}; expected bar, pie or polygon"),
                Some("kind"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartQuery {
    pub group_by: GroupBy,
    pub mineral: Option<String>,
    pub department: Option<String>,
    pub year: Option<i32>,
    pub bins: Option<usize>,
    pub threshold: Option<f64>,
}

impl Default for ChartQuery {
    fn default() -> Self {
        Self { group_by: GroupBy::Mineral, mineral: None, department: None, year: None, bins: None, threshold: None }
    }
}

pub fn parse_chart(params: &Params) -> Result<ChartQuery, ApiError> {
    reject_unknown(params, CHART_PARAMS)?;
    let group_by = match get(params, "group_by") {
        Some(g) => g.parse().map_err(|_| {
            let names: Vec<&str> = GroupBy::ALL.iter().map(|g| g.as_str()).collect();
            ApiError::invalid("group_by", format!("group_by must be one of {}, got {g:?}", names.join(", ")))
        })?,
        None => GroupBy::Mineral,
    };
    let bins = parse::<usize>(params, "bins", "a positive integer")?;
    if bins == Some(0) {
        return Err(ApiError::invalid("bins", "bins must be at least 1"));
    }
    let threshold = parse::<f64>(params, "threshold", "a percentage between 0 and 100")?;
    if threshold.is_some_and(|t| !(0.0..=100.0).contains(&t)) {
        return Err(ApiError::invalid("threshold", "threshold must lie between 0 and 100"));
    }
    Ok(ChartQuery {
        group_by,
        mineral: get(params, "mineral").map(str::to_string),
        department: get(params, "department").map(str::to_string),
        year: parse(params, "year", "a year")?,
        bins,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, &str)]) -> Params {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn forecast_requires_level_and_target() {
        let e = parse_forecast(&params(&[("level", "Mineral")])).unwrap_err();
        assert_eq!((e.body.code.as_str(), e.body.field.as_deref()), ("missing_parameter", Some("target")));
        let e = parse_forecast(&params(&[("target", "ORO")])).unwrap_err();
        assert_eq!(e.body.field.as_deref(), Some("level"));
    }

    #[test]
    fn forecast_fields_are_validated() {
        let e = parse_forecast(&params(&[("level", "annual"), ("target", "COBRE"), ("horizon", "x")])).unwrap_err();
        assert_eq!(e.body.field.as_deref(), Some("horizon"));
        let e = parse_forecast(&params(&[("level", "annual"), ("target", "COBRE"), ("confidence", "1.5")])).unwrap_err();
        assert_eq!(e.body.field.as_deref(), Some("confidence"));
        let e = parse_forecast(&params(&[("level", "annual"), ("target", "COBRE"), ("colour", "red")])).unwrap_err();
        assert_eq!(e.body.code, "unknown_parameter");
        let r = parse_forecast(&params(&[("level", "annual"), ("target", "COBRE"), ("model", "best")])).unwrap();
        assert_eq!(r.model, ModelChoice::Best);
    }

    #[test]
    fn chart_defaults_and_errors() {
        assert_eq!(parse_chart(&Params::new()).unwrap(), ChartQuery::default());
        assert_eq!(parse_chart(&params(&[("bins", "0")])).unwrap_err().body.field.as_deref(), Some("bins"));
        assert_eq!(parse_chart(&params(&[("group_by", "colour")])).unwrap_err().body.field.as_deref(), Some("group_by"));
        assert!("donut".parse::<ChartType>().is_err());
    }
}
