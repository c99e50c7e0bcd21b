//! Differencing, reconstruction and autocorrelation on a short series.
//!
//! ```text
//! cargo run -p minecast-core --example differencing
//! ```

use minecast::{acf, difference, inverse_difference, CalendarPoint, Frequency, TimeSeries};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let y = TimeSeries::new(vec![1.0, 3.0, 6.0, 10.0, 15.0, 21.0], CalendarPoint::year(2017), Frequency::Annual, "TMF")?;
    println!("y        = {:?} from {}", y.values(), y.start());

    for d in 0..=2 {
        let dy = difference(&y, d)?;
        // The d observations just before the differenced span anchor the
        // cumulative sums.
        let anchors = &y.values()[..d];
        let back = inverse_difference(&dy, anchors, d)?;
        println!("Δ^{d} y     = {:?} from {}  ->  rebuilt {:?}", dy.values(), dy.start(), back.values());
    }

    let r = acf(&difference(&y, 1)?, 3)?;
    for (lag, rho) in r.lags.iter().zip(&r.coefficients) {
        println!("acf lag {lag}: {rho:+.4}");
    }
    Ok(())
}
