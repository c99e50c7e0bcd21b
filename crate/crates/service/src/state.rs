use std::collections::BTreeMap;
use std::fs::File;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use lru::LruCache;
use minecast::ingest::{clean_monthly, normalize_key, FormatOptions};
use minecast::pipeline::PipelineOptions;
use minecast::{parse_annual, AnnualRecord, CleaningReport, IngestError, ProductionRecord};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

pub const DEFAULT_CACHE_SIZE: usize = 256;
pub const GEO_NAME_PROPERTY: &str = "NOMBDEP";

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {error}")]
    Ingest { path: PathBuf, error: IngestError, report: CleaningReport },
    #[error("{path}: invalid department boundaries: {message}")]
    Geo { path: PathBuf, message: String },
}

impl LoadError {
    /// Report to print when startup fails. Parse failures carry whatever
    /// was gathered before the error plus the error itself.
    pub fn report(&self) -> CleaningReport {
        let mut report = match self {
            LoadError::Ingest { report, .. } => report.clone(),
            _ => CleaningReport::default(),
        };
        report.messages.push(minecast::ingest::Notice { row: None, column: None, action: self.to_string() });
        report
    }
}

fn open(path: &Path) -> Result<File, LoadError> {
    File::open(path).map_err(|e| LoadError::Io { path: path.to_path_buf(), message: e.to_string() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoDepartment {
    pub name: String,
    pub geometry: Value,
}

/// Department boundaries keyed by normalized name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeoCollection {
    pub departments: BTreeMap<String, GeoDepartment>,
}

impl GeoCollection {
    pub fn from_value(v: &Value) -> Result<Self, String> {
        if v.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
            return Err("expected a GeoJSON FeatureCollection".into());
        }
        let features = v.get("features").and_then(Value::as_array).ok_or("missing features array")?;
        let mut departments = BTreeMap::new();
        for (i, f) in features.iter().enumerate() {
            let name = f
                .pointer(&format!("/properties/{GEO_NAME_PROPERTY}"))
                .and_then(Value::as_str)
                .ok_or_else(|| format!("feature {i} has no {GEO_NAME_PROPERTY} property"))?;
            let geometry = f.get("geometry").cloned().ok_or_else(|| format!("feature {i} has no geometry"))?;
            let name = normalize_key(name);
            if departments.insert(name.clone(), GeoDepartment { name: name.clone(), geometry }).is_some() {
                return Err(format!("department {name:?} appears twice"));
            }
        }
        Ok(Self { departments })
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let geo_err = |message: String| LoadError::Geo { path: path.to_path_buf(), message };
        let value: Value = serde_json::from_reader(std::io::BufReader::new(open(path)?))
            .map_err(|e| geo_err(e.to_string()))?;
        Self::from_value(&value).map_err(geo_err)
    }

    /// FeatureCollection in name order with normalized names.
    pub fn to_geojson(&self) -> Value {
        let features: Vec<Value> = self
            .departments
            .values()
            .map(|d| json!({ "type": "Feature", "properties": { GEO_NAME_PROPERTY: d.name }, "geometry": d.geometry }))
            .collect();
        json!({ "type": "FeatureCollection", "features": features })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPaths {
    pub monthly: PathBuf,
    pub annual: PathBuf,
    pub geo: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct Datasets {
    pub monthly: Vec<ProductionRecord>,
    pub annual: Vec<AnnualRecord>,
    pub report: CleaningReport,
}

impl Datasets {
    pub fn load(monthly: &Path, annual: &Path, k: usize) -> Result<Self, LoadError> {
        let (monthly_records, report) = clean_monthly(open(monthly)?, FormatOptions::default(), k)
            .map_err(|error| LoadError::Ingest { path: monthly.to_path_buf(), error, report: CleaningReport::default() })?;
        let annual_records = parse_annual(open(annual)?)
            .map_err(|error| LoadError::Ingest { path: annual.to_path_buf(), error, report: report.clone() })?;
        Ok(Self { monthly: monthly_records, annual: annual_records, report })
    }
}

/// Shared service state. Datasets are immutable once built; the response
/// cache is the only mutable part.
pub struct AppState {
    data: Datasets,
    geo: Option<GeoCollection>,
    options: PipelineOptions,
    cache: Option<Mutex<LruCache<String, Arc<str>>>>,
}

impl AppState {
    pub fn new(data: Datasets, geo: Option<GeoCollection>, options: PipelineOptions, cache_size: usize) -> Self {
        let cache = NonZeroUsize::new(cache_size).map(|n| Mutex::new(LruCache::new(n)));
        Self { data, geo, options, cache }
    }

    pub fn load(paths: &DataPaths, k: usize, options: PipelineOptions, cache_size: usize) -> Result<Self, LoadError> {
        let data = Datasets::load(&paths.monthly, &paths.annual, k)?;
        let geo = paths.geo.as_deref().map(GeoCollection::load).transpose()?;
        Ok(Self::new(data, geo, options, cache_size))
    }

    pub fn monthly(&self) -> &[ProductionRecord] {
        &self.data.monthly
    }

    pub fn annual(&self) -> &[AnnualRecord] {
        &self.data.annual
    }

    pub fn report(&self) -> &CleaningReport {
        &self.data.report
    }

    pub fn geo(&self) -> Option<&GeoCollection> {
        self.geo.as_ref()
    }

    pub fn options(&self) -> PipelineOptions {
        self.options
    }

    /// Departments known from the boundary file or the monthly records.
    pub fn departments(&self) -> Vec<String> {
        let mut names = minecast::analytics::departments(&self.data.monthly);
        if let Some(geo) = &self.geo {
            names.extend(geo.departments.keys().cloned());
        }
        names.sort();
        names.dedup();
        names
    }

    pub fn cached(&self, key: &str) -> Option<Arc<str>> {
        let cache = self.cache.as_ref()?;
        cache.lock().unwrap_or_else(|p| p.into_inner()).get(key).cloned()
    }

    pub fn store(&self, key: String, body: Arc<str>) {
        if let Some(cache) = &self.cache {
            cache.lock().unwrap_or_else(|p| p.into_inner()).put(key, body);
        }
    }

    pub fn cache_len(&self) -> usize {
        self.cache.as_ref().map_or(0, |c| c.lock().unwrap_or_else(|p| p.into_inner()).len())
    }
}
