use minecast::{acf, difference, inverse_difference, znormalize, CalendarPoint, Frequency, TimeSeries};
use proptest::prelude::*;

fn monthly(values: Vec<f64>) -> TimeSeries {
    TimeSeries::new(values, CalendarPoint::month(2019, 11), Frequency::Monthly, "TMF").unwrap()
}

proptest! {
    #[test]
    fn integer_series_round_trip_exactly(values in prop::collection::vec(-1_000_000i64..1_000_000, 3..200), d in 0usize..3) {
        let s = monthly(values.iter().map(|&v| v as f64).collect());
        let back = inverse_difference(&difference(&s, d).unwrap(), &s.values()[..d], d).unwrap();
        prop_assert_eq!(back.values(), &s.values()[d..]);
        prop_assert_eq!(back.start(), s.start().advance(d as i64));
    }

    #[test]
    fn float_series_round_trip_to_rounding(values in prop::collection::vec(-1e6f64..1e6, 3..200), d in 0usize..3) {
        let s = monthly(values);
        let back = inverse_difference(&difference(&s, d).unwrap(), &s.values()[..d], d).unwrap();
        let scale = s.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in back.values().iter().zip(&s.values()[d..]) {
            prop_assert!((a - b).abs() <= 1e-12 * scale * s.len() as f64);
        }
    }

    #[test]
    fn differencing_shortens_and_shifts(values in prop::collection::vec(-1e3f64..1e3, 1..60), d in 0usize..4) {
        let s = monthly(values);
        match difference(&s, d) {
            Ok(dy) => {
                prop_assert_eq!(dy.len(), s.len() - d);
                prop_assert_eq!(dy.start(), s.start().advance(d as i64));
                prop_assert_eq!(dy.unit(), s.unit());
            }
            Err(_) => prop_assert!(s.len() <= d),
        }
    }

    #[test]
    fn acf_bounded_and_affine_invariant(
        values in prop::collection::vec(-1e3f64..1e3, 5..80),
        a in 0.1f64..100.0,
        b in -1e3f64..1e3,
    ) {
        let s = monthly(values.clone());
        let max_lag = (values.len() - 1).min(10);
        if let Ok(r) = acf(&s, max_lag) {
            prop_assert_eq!(r.coefficients.len(), r.lags.len());
            prop_assert!(r.coefficients.iter().all(|c| (-1.0..=1.0).contains(c)));
            let t = monthly(values.iter().map(|v| a * v + b).collect());
            let rt = acf(&t, max_lag).unwrap();
            for (x, y) in r.coefficients.iter().zip(&rt.coefficients) {
                prop_assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn znormalize_standardizes_present_values(values in prop::collection::vec(prop::option::weighted(0.8, -1e4f64..1e4), 2..60)) {
        match znormalize(&values) {
            Ok(z) => {
                prop_assert_eq!(z.len(), values.len());
                for (v, w) in values.iter().zip(&z) {
                    prop_assert_eq!(v.is_some(), w.is_some());
                }
                let present: Vec<f64> = z.iter().flatten().copied().collect();
                let n = present.len() as f64;
                let mean = present.iter().sum::<f64>() / n;
                let var = present.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                prop_assert!(mean.abs() < 1e-9);
                prop_assert!((var - 1.0).abs() < 1e-9);
            }
            Err(_) => {
                let present: Vec<f64> = values.iter().flatten().copied().collect();
                prop_assert!(present.len() < 2 || present.iter().all(|v| *v == present[0]));
            }
        }
    }
}

#[test]
fn non_finite_values_are_rejected() {
    assert!(TimeSeries::from_values(vec![1.0, f64::NAN]).is_err());
    assert!(TimeSeries::from_values(vec![f64::INFINITY]).is_err());
    assert!(TimeSeries::from_values(vec![]).is_err());
}
