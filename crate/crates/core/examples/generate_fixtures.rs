//! Writes the synthetic datasets under `data/`.
//!
//! The real MINEM extracts are not redistributable, so the fixtures are
//! simulated with the same shape: a 21-column monthly table for 2020-2022
//! (2,151 rows), the 1980-2022 annual table with eight minerals, and a
//! schematic department boundary file. Output is fully determined by the
//! seed below.
//!
//! ```text
//! cargo run -p minecast-core --example generate_fixtures -- [out_dir]
//! ```

use std::collections::BTreeMap;
use std::error::Error;
use std::f64::consts::PI;
use std::fs::{self, File};
use std::path::PathBuf;

use minecast::ingest::{write_annual, write_monthly, AnnualQuantity, AnnualRecord, ProductionRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;

const SEED: u64 = 20_230_917;
const OPERATIONS: usize = 717;
const YEARS: [i32; 3] = [2020, 2021, 2022];
const GAP_RATE: f64 = 0.015;

// (name, approximate centroid lon/lat, radius in degrees for the schematic outline)
const DEPARTMENTS: [(&str, f64, f64, f64); 25] = [
    ("AMAZONAS", -78.0, -5.1, 0.9),
    ("ANCASH", -77.6, -9.4, 0.8),
    ("APURIMAC", -73.0, -14.0, 0.6),
    ("AREQUIPA", -72.5, -15.8, 1.2),
    ("AYACUCHO", -74.1, -14.0, 0.9),
    ("CAJAMARCA", -78.6, -6.4, 0.8),
    ("CALLAO", -77.13, -12.05, 0.06),
    ("CUSCO", -72.0, -13.2, 1.1),
    ("HUANCAVELICA", -75.0, -12.9, 0.5),
    ("HUANUCO", -76.0, -9.5, 0.7),
    ("ICA", -75.5, -14.3, 0.6),
    ("JUNIN", -75.0, -11.5, 0.8),
    ("LA LIBERTAD", -78.4, -8.0, 0.8),
    ("LAMBAYEQUE", -79.8, -6.4, 0.5),
    ("LIMA", -76.6, -11.8, 0.8),
    ("LORETO", -75.0, -4.2, 2.6),
    ("MADRE DE DIOS", -70.4, -12.0, 1.2),
    ("MOQUEGUA", -70.9, -16.8, 0.5),
    ("PASCO", -75.6, -10.4, 0.5),
    ("PIURA", -80.3, -5.1, 0.7),
    ("PUNO", -70.0, -14.8, 1.1),
    ("SAN MARTIN", -76.7, -7.1, 0.9),
    ("TACNA", -70.3, -17.6, 0.5),
    ("TUMBES", -80.5, -3.8, 0.3),
    ("UCAYALI", -73.5, -9.6, 1.5),
];

// Weight of each department when placing an operation. LORETO reports no
// metal production.
fn department_weight(name: &str) -> f64 {
    match name {
        "LORETO" => 0.0,
        "ANCASH" | "AREQUIPA" | "JUNIN" | "LIMA" | "PASCO" | "PUNO" | "LA LIBERTAD" => 8.0,
        "APURIMAC" | "CUSCO" | "CAJAMARCA" | "AYACUCHO" | "HUANCAVELICA" | "MOQUEGUA" => 5.0,
        "ICA" | "TACNA" | "HUANUCO" | "MADRE DE DIOS" | "PIURA" => 3.0,
        _ => 1.0,
    }
}

// (mineral, unit, weight, median monthly output per operation, yearly growth)
const MINERALS: [(&str, &str, f64, f64, f64); 8] = [
    ("COBRE", "TMF", 150.0, 900.0, 1.05),
    ("ZINC", "TMF", 125.0, 700.0, 1.01),
    ("PLOMO", "TMF", 105.0, 160.0, 1.02),
    ("PLATA", "Kg. finos", 130.0, 1_600.0, 1.04),
    ("ORO", "Gr. finos", 160.0, 70_000.0, 0.98),
    ("MOLIBDENO", "TMF", 20.0, 180.0, 1.00),
    ("ESTAÑO", "TMF", 7.0, 1_900.0, 1.10),
    ("HIERRO", "TMF", 20.0, 90_000.0, 1.03),
];

const STAGES: [&str; 3] = ["CONCENTRACIÓN", "FUNDICIÓN", "REFINACIÓN"];
const PROCESSES: [&str; 3] = ["FLOTACIÓN", "GRAVIMETRÍA", "LIXIVIACIÓN"];
const STRATA: [&str; 2] = ["PEQUEÑO PRODUCTOR", "RÉGIMEN GENERAL"];
const HOLDER_STEMS: [&str; 12] = [
    "ANDINA", "DEL SUR", "CORDILLERA", "LOS ANDES", "PACIFICO", "ALTIPLANO", "SANTA ROSA", "HUAYLLAY",
    "CHAVIN", "INCA", "CONDOR", "TITICACA",
];

// Spellings as they appear in raw extracts before name correction.
fn raw_department(name: &str) -> &str {
    match name {
        "APURIMAC" => "Apurímac",
        "JUNIN" => "Junín",
        "HUANUCO" => "Huánuco",
        "SAN MARTIN" => "San Martín",
        "PUNO" => " puno",
        "LA LIBERTAD" => "La  Libertad",
        other => other,
    }
}

fn weighted<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T], weight: impl Fn(&T) -> f64) -> &'a T {
    let total: f64 = items.iter().map(&weight).sum();
    let mut u = rng.random::<f64>() * total;
    for item in items {
        u -= weight(item);
        if u < 0.0 {
            return item;
        }
    }
    items.last().expect("non-empty")
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn monthly_records(rng: &mut ChaCha8Rng) -> Vec<ProductionRecord> {
    let noise = Normal::<f64>::new(0.0, 0.15).unwrap();
    let scale = Normal::<f64>::new(0.0, 0.9).unwrap();
    let producing: Vec<&str> =
        DEPARTMENTS.iter().map(|d| d.0).filter(|d| department_weight(d) > 0.0).collect();

    let mut records = Vec::with_capacity(OPERATIONS * YEARS.len());
    for op in 0..OPERATIONS {
        // Every producing department gets at least one operation.
        let department = match producing.get(op) {
            Some(d) => *d,
            None => *weighted(rng, &producing, |d| department_weight(d)),
        };
        let &(mineral, unit, _, median, growth) = weighted(rng, &MINERALS, |m| m.2);
        let stratum = STRATA[usize::from(rng.random::<f64>() < 0.6)];
        let stage = if department == "CALLAO" { STAGES[2] } else { STAGES[usize::from(rng.random::<f64>() < 0.1)] };
        let process = if mineral == "ORO" { PROCESSES[rng.random_range(1..3)] } else { PROCESSES[0] };
        let holder = format!(
            "MINERA {} {:03} S.A.{}",
            HOLDER_STEMS[rng.random_range(0..HOLDER_STEMS.len())],
            op,
            if stratum == STRATA[0] { "C." } else { "A." }
        );
        let size = if stratum == STRATA[0] { 0.15 } else { 1.0 };
        let base = median * size * scale.sample(rng).exp();
        let misspelled = rng.random::<f64>() < 0.04;
        let mineral_raw = if rng.random::<f64>() < 0.03 { mineral.to_lowercase() } else { mineral.to_string() };
        let phase = rng.random::<f64>() * 2.0 * PI;

        for (yi, &year) in YEARS.iter().enumerate() {
            let mut months = [None; 12];
            for (m, slot) in months.iter_mut().enumerate() {
                if rng.random::<f64>() < GAP_RATE {
                    continue;
                }
                let seasonal = 1.0 + 0.08 * ((2.0 * PI * m as f64 / 12.0) + phase).sin();
                let lockdown = if year == 2020 && (3..=4).contains(&m) { 0.55 } else { 1.0 };
                let v = base * growth.powi(yi as i32) * seasonal * lockdown * noise.sample(rng).exp();
                *slot = Some(round3(v));
            }
            if months.iter().all(Option::is_none) {
                months[0] = Some(round3(base));
            }
            let total = round3(months.iter().flatten().sum());
            records.push(ProductionRecord {
                mineral: mineral_raw.clone(),
                unit: unit.to_string(),
                stage: stage.to_string(),
                process: process.to_string(),
                stratum: stratum.to_string(),
                holder: holder.clone(),
                department: if misspelled { raw_department(department) } else { department }.to_string(),
                year,
                months,
                total: Some(total),
            });
        }
    }
    records
}

// (mineral, unit, anchor years with national output)
type Anchors = (&'static str, &'static str, &'static [(i32, f64)]);
const ANNUAL: [Anchors; 8] = [
    ("COBRE", "TMF", &[(1980, 367e3), (1990, 318e3), (2000, 554e3), (2005, 1010e3), (2010, 1247e3), (2015, 1701e3), (2016, 2354e3), (2018, 2437e3), (2020, 2150e3), (2022, 2450e3)]),
    ("ORO", "KG", &[(1980, 5e3), (1990, 20e3), (1995, 57e3), (2000, 133e3), (2005, 208e3), (2010, 164e3), (2015, 147e3), (2020, 88e3), (2022, 97e3)]),
    ("ZINC", "TMF", &[(1980, 488e3), (1990, 584e3), (2000, 910e3), (2010, 1470e3), (2015, 1421e3), (2020, 1335e3), (2022, 1370e3)]),
    ("PLATA", "TMF", &[(1980, 1340.0), (1990, 1730.0), (2000, 2440.0), (2010, 3640.0), (2015, 4100.0), (2020, 2770.0), (2022, 3080.0)]),
    ("PLOMO", "TMF", &[(1980, 189e3), (1990, 188e3), (2000, 271e3), (2010, 262e3), (2015, 316e3), (2020, 242e3), (2022, 255e3)]),
    ("ESTAÑO", "TMF", &[(1980, 1080.0), (1990, 5130.0), (1995, 22330.0), (2000, 70900.0), (2005, 42100.0), (2010, 33800.0), (2015, 19500.0), (2020, 20600.0), (2022, 28700.0)]),
    ("MOLIBDENO", "TMF", &[(1980, 2700.0), (1990, 3000.0), (2000, 7200.0), (2010, 16900.0), (2015, 20200.0), (2020, 32200.0), (2022, 31600.0)]),
    ("CADMIO", "TMF", &[(1980, 500.0), (1990, 580.0), (2000, 440.0), (2010, 750.0), (2015, 790.0), (2020, 700.0), (2022, 720.0)]),
];

/// Log-linear interpolation between anchors.
fn trend(anchors: &[(i32, f64)], year: i32) -> f64 {
    let i = anchors.iter().position(|a| a.0 >= year).unwrap_or(anchors.len() - 1).max(1);
    let ((ya, va), (yb, vb)) = (anchors[i - 1], anchors[i]);
    let t = (year - ya) as f64 / (yb - ya) as f64;
    (va.ln() + t * (vb.ln() - va.ln())).exp()
}

fn annual_records(rng: &mut ChaCha8Rng) -> (Vec<AnnualRecord>, Vec<(String, String)>) {
    let shock = Normal::<f64>::new(0.0, 0.04).unwrap();
    let mut records: Vec<AnnualRecord> =
        (1980..=2022).map(|year| AnnualRecord { year, quantities: BTreeMap::new() }).collect();
    for (mineral, unit, anchors) in ANNUAL {
        let mut ar: f64 = 0.0;
        for r in &mut records {
            ar = 0.5 * ar + shock.sample(rng);
            let value = (trend(anchors, r.year) * ar.exp()).round();
            r.quantities.insert(mineral.to_string(), AnnualQuantity { value: Some(value), unit: unit.to_string() });
        }
    }
    let columns = ANNUAL.iter().map(|(m, u, _)| (m.to_string(), u.to_string())).collect();
    (records, columns)
}

fn geojson() -> serde_json::Value {
    let features: Vec<_> = DEPARTMENTS
        .iter()
        .map(|&(name, lon, lat, radius)| {
            let mut ring: Vec<[f64; 2]> = (0..8)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / 8.0;
                    [round3(lon + radius * a.cos()), round3(lat + radius * a.sin())]
                })
                .collect();
            ring.push(ring[0]);
            json!({
                "type": "Feature",
                "properties": { "NOMBDEP": name },
                "geometry": { "type": "Polygon", "coordinates": [ring] }
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

fn reference_projections() -> serde_json::Value {
    json!({
        "description": "Published 2027 annual projections, kept for provenance only. The source extract and estimator settings are unavailable, so these are never used as assertion targets.",
        "year": 2027,
        "values": [
            { "mineral": "COBRE", "value": 2_694_957.0, "unit": "MT", "anomalous": false },
            { "mineral": "PLATA", "value": 3_083_036.0, "unit": "MT", "anomalous": true,
              "note": "about three orders of magnitude above national silver output in TMF; likely a kilogram figure; excluded from any comparison" }
        ]
    })
}

fn main() -> Result<(), Box<dyn Error>> {
    let out: PathBuf = std::env::args().nth(1).map_or_else(|| PathBuf::from("data"), PathBuf::from);
    fs::create_dir_all(&out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let monthly = monthly_records(&mut rng);
    write_monthly(&monthly, File::create(out.join("produccion_mensual_2020_2022.csv"))?)?;

    let (annual, columns) = annual_records(&mut rng);
    write_annual(&annual, &columns, File::create(out.join("produccion_anual_1980_2022.csv"))?)?;

    fs::write(out.join("departamentos.geojson"), serde_json::to_string_pretty(&geojson())?)?;
    fs::write(out.join("reference_projections.json"), serde_json::to_string_pretty(&reference_projections())? + "\n")?;

    println!("wrote {} monthly rows, {} annual rows to {}", monthly.len(), annual.len(), out.display());
    Ok(())
}
