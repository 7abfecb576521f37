//! Forecast error metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::variance;
use crate::time::{Instant, TimeOfDayWindow, SLOTS_PER_DAY};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Mean squared error, MW².
    pub mse: f64,
    /// Mean absolute percentage error, percent.
    pub mape: f64,
    /// Variance of the half-hourly mean absolute error profile, MW².
    pub daily_error_variance: f64,
    /// Variance of the half-hourly mean absolute percentage error profile, %².
    pub daily_error_variance_pct: f64,
    /// Mean absolute percentage error per half-hour slot; `None` for slots
    /// without data or inside the exclusion window.
    pub half_hourly_mean_abs_error: Vec<Option<f64>>,
    /// Mean absolute error per slot, MW.
    pub half_hourly_mean_abs_error_mw: Vec<Option<f64>>,
    /// Points that entered the computation.
    pub points: usize,
}

impl MetricsReport {
    pub fn profile_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut out = String::from("slot,mean_abs_pct_error,mean_abs_error_mw\n");
        for s in 0..SLOTS_PER_DAY {
            let _ = writeln!(
                out,
                "{s},{},{}",
                opt(self.half_hourly_mean_abs_error[s]),
                opt(self.half_hourly_mean_abs_error_mw[s])
            );
        }
        out
    }
}

/// MSE, MAPE and within-day error variance over the points whose time of
/// day lies outside `exclusion`.
pub fn evaluate(
    times: &[Instant],
    actual: &[f64],
    predicted: &[f64],
    exclusion: Option<TimeOfDayWindow>,
) -> Result<MetricsReport> {
    if times.len() != actual.len() || actual.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "evaluate on {} times, {} actual, {} predicted",
            times.len(),
            actual.len(),
            predicted.len()
        )));
    }
    let included: Vec<usize> = (0..times.len())
        .filter(|&i| exclusion.is_none_or(|w| !w.contains(times[i])))
        .collect();
    if included.is_empty() {
        return Err(Error::InsufficientData("no points left after exclusion".into()));
    }
    if let Some(&i) = included.iter().find(|&&i| actual[i] == 0.0 || !actual[i].is_finite()) {
        return Err(Error::Invalid(format!("actual value {} at {} makes MAPE undefined", actual[i], times[i])));
    }

    let n = included.len() as f64;
    let mut sq = 0.0;
    let mut ape = 0.0;
    let mut slot_pct = vec![(0.0, 0usize); SLOTS_PER_DAY];
    let mut slot_mw = vec![0.0; SLOTS_PER_DAY];
    for &i in &included {
        let err = actual[i] - predicted[i];
        let pct = (err / actual[i]).abs() * 100.0;
        sq += err * err;
        ape += pct;
        let s = times[i].slot_of_day();
        slot_pct[s].0 += pct;
        slot_pct[s].1 += 1;
        slot_mw[s] += err.abs();
    }
    let profile: Vec<Option<f64>> =
        slot_pct.iter().map(|&(sum, c)| (c > 0).then(|| sum / c as f64)).collect();
    let profile_mw: Vec<Option<f64>> =
        slot_mw.iter().zip(&slot_pct).map(|(&sum, &(_, c))| (c > 0).then(|| sum / c as f64)).collect();
    let present = |p: &[Option<f64>]| p.iter().flatten().copied().collect::<Vec<f64>>();

    Ok(MetricsReport {
        mse: sq / n,
        mape: ape / n,
        daily_error_variance: variance(&present(&profile_mw)),
        daily_error_variance_pct: variance(&present(&profile)),
        half_hourly_mean_abs_error: profile,
        half_hourly_mean_abs_error_mw: profile_mw,
        points: included.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(n: usize) -> Vec<Instant> {
        let t0 = Instant::from_ymd_hm(2016, 1, 1, 0, 0);
        (0..n).map(|k| t0.plus_steps(k as i64)).collect()
    }

    #[test]
    fn perfect_forecast() {
        let t = day(96);
        let y: Vec<f64> = (0..96).map(|k| 10.0 + k as f64).collect();
        let m = evaluate(&t, &y, &y, None).unwrap();
        assert_eq!((m.mse, m.mape, m.daily_error_variance), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_point_mape() {
        let m = evaluate(&day(1), &[100.0], &[90.0], None).unwrap();
        assert_eq!(m.mape, 10.0);
        assert_eq!(m.mse, 100.0);
    }

    #[test]
    fn constant_slot_errors_have_no_variance() {
        let t = day(48 * 3);
        let y = vec![100.0; t.len()];
        let p = vec![105.0; t.len()];
        let m = evaluate(&t, &y, &p, None).unwrap();
        assert!((m.mape - 5.0).abs() < 1e-12);
        assert_eq!(m.daily_error_variance, 0.0);
        assert_eq!(m.daily_error_variance_pct, 0.0);
    }

    #[test]
    fn exclusion_behaviour() {
        let t = day(48 * 2);
        let y: Vec<f64> = (0..t.len()).map(|k| 50.0 + (k % 7) as f64).collect();
        let p: Vec<f64> = y.iter().enumerate().map(|(k, v)| v + ((k * 13) % 5) as f64 - 2.0).collect();
        let full = evaluate(&t, &y, &p, None).unwrap();
        assert_eq!(evaluate(&t, &y, &p, Some(TimeOfDayWindow::new(0, 0))).unwrap(), full);

        let off = evaluate(&t, &y, &p, Some(TimeOfDayWindow::off_peak_uptick())).unwrap();
        assert_eq!(off.points, full.points - 2 * 6);
        assert!(off.half_hourly_mean_abs_error[0].is_none());
        assert!(off.half_hourly_mean_abs_error[45].is_none());
        assert!(off.half_hourly_mean_abs_error[44].is_some());

        assert!(evaluate(&t[..1], &y[..1], &p[..1], Some(TimeOfDayWindow::off_peak_uptick())).is_err());
        assert!(evaluate(&t[..2], &[0.0, 1.0], &[1.0, 1.0], None).is_err());
    }
}
