use minecast::ingest::{
    annual_series, normalize_key, parse_annual, write_annual, write_monthly, FormatOptions, MONTHLY_COLUMNS,
};
use minecast::{knn_impute, normalize_names, parse_monthly, to_series, IngestError, ProductionRecord, SeriesSelector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(mineral: &str, unit: &str, department: &str, year: i32, months: [Option<f64>; 12]) -> ProductionRecord {
    ProductionRecord {
        mineral: mineral.into(),
        unit: unit.into(),
        stage: "CONCENTRACION".into(),
        process: "FLOTACION".into(),
        stratum: "REGIMEN GENERAL".into(),
        holder: "MINERA TEST S.A.".into(),
        department: department.into(),
        year,
        months,
        total: None,
    }
}

fn full(v: [f64; 12]) -> [Option<f64>; 12] {
    v.map(Some)
}

#[test]
fn twin_row_fills_gap() {
    let mut a = full([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
    let b = a;
    a[4] = None;
    let recs = vec![record("ORO", "KG", "PUNO", 2021, a), record("ORO", "KG", "PUNO", 2022, b)];
    let (out, report) = knn_impute(recs, 1).unwrap();
    assert_eq!(out[0].months[4], Some(5.0));
    assert_eq!(report.values_imputed, 1);
    assert_eq!(out[0].total, Some(78.0));
}

#[test]
fn equidistant_donors_are_averaged() {
    let mut target = [Some(5.0); 12];
    target[0] = None;
    let mut lo = [Some(4.0); 12];
    lo[0] = Some(10.0);
    let mut hi = [Some(6.0); 12];
    hi[0] = Some(20.0);
    let recs = vec![
        record("ZINC", "TMF", "LIMA", 2020, target),
        record("ZINC", "TMF", "LIMA", 2021, lo),
        record("ZINC", "TMF", "LIMA", 2022, hi),
    ];
    let (out, _) = knn_impute(recs, 2).unwrap();
    assert_eq!(out[0].months[0], Some(15.0));
}

#[test]
fn donors_must_share_mineral_and_unit() {
    let mut target = [Some(5.0); 12];
    target[3] = None;
    let recs = vec![
        record("ORO", "KG", "PUNO", 2021, target),
        record("ORO", "G", "PUNO", 2021, [Some(9.0); 12]),
        record("PLATA", "KG", "PUNO", 2021, [Some(9.0); 12]),
        record("COBRE", "TMF", "PUNO", 2021, [Some(1.0); 12]),
    ];
    let (out, report) = knn_impute(recs, 3).unwrap();
    assert_eq!(out.len(), 3);
    assert_eq!(report.rows_dropped, 1);
    assert!(report.messages.iter().any(|m| m.row == Some(0) && m.action.contains("no donor")));
    assert_eq!(report.rows_read, report.rows_kept + report.rows_dropped);
}

#[test]
fn k_must_be_positive() {
    assert_eq!(knn_impute(vec![], 0).unwrap_err(), IngestError::K(0));
}

/// Straightforward re-statement of the imputation rule: every gap scans
/// every row of the table.
fn brute_force_impute(records: &[ProductionRecord], k: usize) -> Vec<Vec<Option<f64>>> {
    let n = records.len();
    let same = |a: usize, b: usize| records[a].mineral == records[b].mineral && records[a].unit == records[b].unit;
    let z = |row: usize, m: usize| -> Option<f64> {
        let x = records[row].months[m]?;
        let col: Vec<f64> = (0..n).filter(|&j| same(row, j)).filter_map(|j| records[j].months[m]).collect();
        if col.len() < 2 {
            return Some(0.0);
        }
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
        Some(if sd == 0.0 { 0.0 } else { (x - mean) / sd })
    };
    let mut out = Vec::new();
    for r in 0..n {
        let mut row = Vec::new();
        for m in 0..12 {
            if records[r].months[m].is_some() {
                row.push(records[r].months[m]);
                continue;
            }
            let mut cands = Vec::new();
            for d in 0..n {
                if d == r || !same(r, d) || records[d].months[m].is_none() {
                    continue;
                }
                let shared: Vec<usize> =
                    (0..12).filter(|&j| records[r].months[j].is_some() && records[d].months[j].is_some()).collect();
                if shared.is_empty() {
                    continue;
                }
                let ssq: f64 = shared.iter().map(|&j| (z(r, j).unwrap() - z(d, j).unwrap()).powi(2)).sum();
                cands.push((ssq.sqrt() / shared.len() as f64, d));
            }
            cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let take = &cands[..k.min(cands.len())];
            row.push(if take.is_empty() {
                None
            } else {
                Some(take.iter().map(|(_, d)| records[*d].months[m].unwrap()).sum::<f64>() / take.len() as f64)
            });
        }
        out.push(row);
    }
    out
}

fn masked_records(seed: u64, n: usize, rate: f64) -> Vec<ProductionRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let minerals = [("ORO", "KG"), ("COBRE", "TMF"), ("ZINC", "TMF")];
    (0..n)
        .map(|i| {
            let (mineral, unit) = minerals[rng.random_range(0..minerals.len())];
            let scale: f64 = rng.random_range(10.0..1000.0);
            let mut months = [None; 12];
            for m in months.iter_mut() {
                let v: f64 = scale * rng.random_range(0.5..1.5);
                *m = Some((v * 100.0).round() / 100.0);
            }
            for m in 0..12 {
                if rng.random_bool(rate) {
                    months[m] = None;
                }
            }
            if months.iter().all(Option::is_none) {
                months[0] = Some(scale);
            }
            record(mineral, unit, "AREQUIPA", 2020 + (i % 3) as i32, months)
        })
        .collect()
}

#[test]
fn imputation_matches_brute_force_oracle() {
    for seed in [1, 2, 3] {
        let recs = masked_records(seed, 50, 0.10);
        let expected = brute_force_impute(&recs, 5);
        let (out, report) = knn_impute(recs.clone(), 5).unwrap();
        assert_eq!(report.rows_dropped, 0);
        let gaps: usize = recs.iter().map(|r| r.months.iter().filter(|v| v.is_none()).count()).sum();
        assert!(gaps > 30);
        assert_eq!(report.values_imputed, gaps);
        for (r, (got, want)) in out.iter().zip(&expected).enumerate() {
            for m in 0..12 {
                let (g, w) = (got.months[m].unwrap(), want[m].unwrap());
                assert!((g - w).abs() <= 1e-12 * w.abs(), "row {r} month {m}: {g} vs {w}");
            }
            let sum: f64 = got.months.iter().flatten().sum();
            assert!((got.total.unwrap() - sum).abs() <= 1e-6 * sum);
        }
    }
}

#[test]
fn imputation_never_touches_observed_cells() {
    for seed in 10..20 {
        let recs = masked_records(seed, 40, 0.25);
        let (out, _) = knn_impute(recs.clone(), 3).unwrap();
        let mut it = out.iter();
        for r in &recs {
            let o = it.next().unwrap();
            for m in 0..12 {
                if let Some(v) = r.months[m] {
                    assert_eq!(o.months[m].unwrap().to_bits(), v.to_bits());
                }
            }
        }
    }
}

#[test]
fn normalize_names_counts_and_is_idempotent() {
    let recs = vec![
        record("oro", "KG", "Apurímac ", 2021, [Some(1.0); 12]),
        record("COBRE", "TMF", "Madre  de Dios", 2021, [Some(1.0); 12]),
        record("ZINC", "TMF", "PUNO", 2021, [Some(1.0); 12]),
    ];
    let (once, report) = normalize_names(recs);
    assert_eq!(report.names_corrected, 3);
    assert_eq!(once[0].department, "APURIMAC");
    assert_eq!(once[0].mineral, "ORO");
    assert_eq!(once[1].department, "MADRE DE DIOS");
    let (twice, report) = normalize_names(once.clone());
    assert_eq!(twice, once);
    assert_eq!(report.names_corrected, 0);
}

#[test]
fn to_series_examples() {
    let months = full([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
    let one = vec![record("ORO", "KG", "PUNO", 2020, months)];
    let (s, _) = to_series(&one, &SeriesSelector::default()).unwrap();
    assert_eq!(s.values(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
    assert_eq!(s.unit(), "KG");
    assert_eq!(s.start().to_string(), "2020-01");

    let two = vec![record("ORO", "KG", "PUNO", 2020, months), record("ORO", "KG", "PUNO", 2020, months)];
    let sel = SeriesSelector { mineral: Some("oro".into()), department: Some("Puno".into()) };
    let (s, _) = to_series(&two, &sel).unwrap();
    assert_eq!(s.values()[11], 24.0);

    let mixed = vec![record("COBRE", "TMF", "PUNO", 2020, months), record("ORO", "KG", "PUNO", 2020, months)];
    let sel = SeriesSelector { mineral: None, department: Some("PUNO".into()) };
    assert!(matches!(to_series(&mixed, &sel), Err(IngestError::MixedUnit { .. })));
    let sel = SeriesSelector { mineral: Some("PLATA".into()), department: None };
    assert_eq!(to_series(&mixed, &sel).unwrap_err(), IngestError::EmptySelection);
}

#[test]
fn to_series_zero_fills_missing_months() {
    let recs = vec![
        record("ORO", "KG", "PUNO", 2020, full([1.0; 12])),
        record("ORO", "KG", "PUNO", 2022, full([2.0; 12])),
    ];
    let (s, report) = to_series(&recs, &SeriesSelector::default()).unwrap();
    assert_eq!(s.len(), 36);
    assert!(s.values()[12..24].iter().all(|v| *v == 0.0));
    assert_eq!(report.messages.len(), 12);
}

#[test]
fn to_series_ignores_record_order() {
    let recs = masked_records(5, 30, 0.0);
    let mut rev = recs.clone();
    rev.reverse();
    let sel = SeriesSelector { mineral: Some("COBRE".into()), department: None };
    let a = to_series(&recs, &sel).unwrap().0;
    let b = to_series(&rev, &sel).unwrap().0;
    assert_eq!(a, b);
}

#[test]
fn annual_table_shape() {
    let mut text = String::from("AÑO,COBRE(TMF),ORO(KG),ZINC(TMF),PLATA(TMF),PLOMO(TMF),ESTAÑO(TMF),MOLIBDENO(TMF),CADMIO(TMF)\n");
    for y in 1980..=2022 {
        text.push_str(&format!("{y},{},{},1,2,3,4,5,6\n", 1000 + y, 50 + y));
    }
    let recs = parse_annual(text.as_bytes()).unwrap();
    assert_eq!(recs.len(), 43);
    assert_eq!(recs[0].quantities.len(), 8);
    assert_eq!(recs[0].quantities["ESTAÑO"].unit, "TMF");
    let (s, _) = annual_series(&recs, "estano").unwrap();
    assert_eq!(s.len(), 43);

    let cols: Vec<(String, String)> = vec![("COBRE".into(), "TMF".into()), ("ORO".into(), "KG".into())];
    let mut buf = Vec::new();
    write_annual(&recs, &cols, &mut buf).unwrap();
    let back = parse_annual(&buf[..]).unwrap();
    assert_eq!(back[5].quantities["ORO"], recs[5].quantities["ORO"]);
}

#[test]
fn semicolon_files_are_detected() {
    let header = MONTHLY_COLUMNS.join(";");
    let row = "COBRE;TMF;x;y;z;\"Holder; Inc\";CUSCO;2022;1,234.5;2;3;4;5;6;7;8;9;10;11;12;1,311.5";
    let (recs, report) = parse_monthly(format!("{header}\n{row}\n").as_bytes(), FormatOptions::default()).unwrap();
    assert_eq!(report.rows_dropped, 0);
    assert_eq!(recs[0].months[0], Some(1234.5));
    assert_eq!(recs[0].holder, "Holder; Inc");
    assert_eq!(normalize_key(&recs[0].department), "CUSCO");
}

fn text_strategy() -> impl Strategy<Value = String> {
    "[A-Za-zÁÉÍÓÚÑáéíóúñ0-9 ,.;\"()-]{1,20}".prop_filter("not blank", |s| !s.trim().is_empty())
}

fn cell_strategy() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![1 => Just(None), 5 => (0.0f64..1e9).prop_map(Some), 1 => (0u32..100_000).prop_map(|v| Some(v as f64))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_parse_is_identity(
        rows in prop::collection::vec(
            (text_strategy(), text_strategy(), text_strategy(), 1990i32..2024, prop::array::uniform12(cell_strategy()), cell_strategy()),
            1..12,
        )
    ) {
        let records: Vec<ProductionRecord> = rows
            .into_iter()
            .filter(|r| r.4.iter().any(Option::is_some))
            .map(|(mineral, holder, department, year, months, total)| ProductionRecord {
                mineral,
                unit: "TMF".into(),
                stage: "REFINACION".into(),
                process: "LIXIVIACION".into(),
                stratum: "PEQUEÑO PRODUCTOR".into(),
                holder,
                department,
                year,
                months,
                total,
            })
            .collect();
        let mut buf = Vec::new();
        write_monthly(&records, &mut buf).unwrap();
        let (back, report) = parse_monthly(&buf[..], FormatOptions::default()).unwrap();
        prop_assert_eq!(report.rows_dropped, 0);
        prop_assert_eq!(back, records);
    }

    #[test]
    fn normalize_names_idempotent(name in "[ a-zA-ZáéíóúÁÉÍÓÚñÑü]{0,24}") {
        let r = record(&name, "TMF", &name, 2021, [Some(1.0); 12]);
        let (once, _) = normalize_names(vec![r]);
        let (twice, _) = normalize_names(once.clone());
        prop_assert_eq!(once, twice);
    }
}
