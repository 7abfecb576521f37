//! Synthetic load and temperature with planted structure.
//!
//! Load is a duck-shaped daily profile scaled by a weekend factor and by a
//! temperature coupling term, plus an off-peak uptick and Gaussian noise:
//!
//! ```text
//! load(t) = base · duck(t) · week(t) · (1 + gain · z(t)) + uptick(t) + ε(t)
//! ```
//!
//! `z` is the standardised weighted sum of standardised condition series
//! (e.g. the temperature five hours earlier). Temperature is a diurnal
//! cosine plus a seasonal cosine plus an AR(1) weather anomaly.

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{condition_values, dedup_conditions, ConditionKind, TemperatureCondition, MAX_LEAD_HOURS};
use crate::ingest::{LoadSeries, TempSeries};
use crate::stats::{mean, variance, Group};
use crate::time::{Instant, TimeOfDayWindow, SLOTS_PER_DAY};

/// One planted temperature dependency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub kind: ConditionKind,
    #[serde(default)]
    pub lead_hours: f64,
    #[serde(default = "unit")]
    pub weight: f64,
}

fn unit() -> f64 {
    1.0
}

impl Coupling {
    pub fn new(condition: TemperatureCondition, weight: f64) -> Self {
        Coupling { kind: condition.kind, lead_hours: condition.lead_hours, weight }
    }

    pub fn condition(&self) -> TemperatureCondition {
        TemperatureCondition::new(self.kind, self.lead_hours)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub station_id: String,
    /// First generated day.
    pub start: NaiveDate,
    /// Length in whole seasons (October to March) starting at `start`.
    pub seasons: usize,
    /// Explicit length in days; overrides `seasons`.
    pub days: Option<usize>,
    pub base_mw: f64,
    /// Relative height of the morning (08:00) and evening (19:00) peaks.
    pub morning_peak: f64,
    pub evening_peak: f64,
    /// Load multiplier on Saturdays and Sundays.
    pub weekend_factor: f64,
    pub uptick_mw: f64,
    pub uptick_start: String,
    pub uptick_end: String,
    pub temp_mean_c: f64,
    pub temp_diurnal_amp_c: f64,
    /// Hour of the diurnal temperature maximum.
    pub temp_peak_hour: f64,
    pub temp_seasonal_amp_c: f64,
    pub weather_sd_c: f64,
    /// AR(1) coefficient of the weather anomaly per half hour.
    pub weather_persistence: f64,
    pub coupling: Vec<Coupling>,
    /// Fractional load change per standard deviation of the coupling signal.
    pub coupling_gain: f64,
    pub noise_sigma_mw: f64,
    /// Signal-to-noise power ratio of the temperature-driven component;
    /// overrides `noise_sigma_mw`.
    pub snr: Option<f64>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            station_id: "synthetic".into(),
            start: NaiveDate::from_ymd_opt(2015, 10, 1).unwrap(),
            seasons: 5,
            days: None,
            base_mw: 20.0,
            morning_peak: 0.25,
            evening_peak: 0.4,
            weekend_factor: 0.85,
            uptick_mw: 1.5,
            uptick_start: "22:30".into(),
            uptick_end: "01:30".into(),
            temp_mean_c: 22.0,
            temp_diurnal_amp_c: 5.0,
            temp_peak_hour: 15.0,
            temp_seasonal_amp_c: 4.0,
            weather_sd_c: 3.0,
            weather_persistence: 0.9,
            coupling: vec![Coupling::new(TemperatureCondition::instantaneous(5.0), 1.0)],
            coupling_gain: 0.15,
            noise_sigma_mw: 0.2,
            snr: None,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn uptick_window(&self) -> Option<TimeOfDayWindow> {
        TimeOfDayWindow::parse(&self.uptick_start, &self.uptick_end)
    }

    /// Number of generated days.
    pub fn day_count(&self) -> usize {
        if let Some(d) = self.days {
            return d;
        }
        let end_year = self.start.year() + self.seasons as i32;
        let end = NaiveDate::from_ymd_opt(end_year, 4, 1).unwrap();
        (end - self.start).num_days().max(0) as usize
    }

    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !finite_pos(self.base_mw) {
            return Err(("base_mw", format!("must be positive, got {}", self.base_mw)));
        }
        if !finite_pos(self.weekend_factor) {
            return Err(("weekend_factor", format!("must be positive, got {}", self.weekend_factor)));
        }
        for (name, v) in [
            ("morning_peak", self.morning_peak),
            ("evening_peak", self.evening_peak),
            ("uptick_mw", self.uptick_mw),
            ("temp_diurnal_amp_c", self.temp_diurnal_amp_c),
            ("temp_seasonal_amp_c", self.temp_seasonal_amp_c),
            ("weather_sd_c", self.weather_sd_c),
            ("coupling_gain", self.coupling_gain),
            ("noise_sigma_mw", self.noise_sigma_mw),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err((name, format!("must be a non-negative number, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.weather_persistence) {
            return Err(("weather_persistence", format!("must lie in [0, 1), got {}", self.weather_persistence)));
        }
        if let Some(snr) = self.snr {
            if !finite_pos(snr) {
                return Err(("snr", format!("must be positive, got {snr}")));
            }
        }
        if self.uptick_window().is_none() {
            return Err(("uptick_start", format!("bad window `{}`-`{}`", self.uptick_start, self.uptick_end)));
        }
        if self.day_count() < 2 {
            return Err(("days", "must generate at least two days".into()));
        }
        for c in &self.coupling {
            if c.kind == ConditionKind::None {
                return Err(("coupling", "`none` cannot be coupled".into()));
            }
            if c.kind != ConditionKind::Simultaneous {
                c.condition().validate().map_err(|m| ("coupling", m))?;
            }
            if !c.weight.is_finite() {
                return Err(("coupling", format!("weight {} is not finite", c.weight)));
            }
        }
        Ok(())
    }
}

/// What was planted, for checking recovery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub station_id: String,
    pub seed: u64,
    pub coupling: Vec<Coupling>,
    /// Lead of the instantaneous coupling term, when there is exactly one.
    pub planted_lag_hours: Option<f64>,
    /// Group whose three-temperature combination was planted, if any.
    pub group: Option<Group>,
    pub uptick_window: TimeOfDayWindow,
    pub uptick_mw: f64,
    pub noise_sigma_mw: f64,
    /// Variance of the temperature-driven load component, MW².
    pub signal_variance: f64,
}

#[derive(Clone, Debug)]
pub struct SynthOutput {
    pub load: LoadSeries,
    pub temp: TempSeries,
    pub truth: GroundTruth,
}

fn circular_hours(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(24.0);
    d.min(24.0 - d)
}

/// Daily profile with a night base of 0.75 and two Gaussian peaks.
fn duck(hour: f64, morning: f64, evening: f64) -> f64 {
    let bump = |centre: f64, width: f64| (-circular_hours(hour, centre).powi(2) / (2.0 * width * width)).exp();
    0.75 + morning * bump(8.0, 1.5) + evening * bump(19.0, 2.0)
}

fn standardise(values: &mut [f64]) {
    let mu = mean(values);
    let sd = variance(values).sqrt();
    for v in values.iter_mut() {
        *v = if sd > 0.0 { (*v - mu) / sd } else { 0.0 };
    }
}

fn planted_group(coupling: &[Coupling]) -> Option<Group> {
    let planted: Vec<_> = dedup_conditions(&coupling.iter().map(Coupling::condition).collect::<Vec<_>>())
        .iter()
        .map(|c| c.canonical())
        .collect();
    [Group::Group1, Group::Group2].into_iter().find(|g| {
        let want: Vec<_> = g.combination().iter().map(|c| c.canonical()).collect();
        planted.len() == want.len() && want.iter().all(|w| planted.contains(w))
    })
}

/// Generate a load/temperature pair. Deterministic per seed.
pub fn synth_generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate().map_err(|(f, m)| Error::config(format!("synth.{f}"), m))?;
    let uptick = spec.uptick_window().expect("validated");
    let n = spec.day_count() * SLOTS_PER_DAY;
    // History so that every condition is defined from the first sample.
    let pre = (MAX_LEAD_HOURS as usize) * 2 + SLOTS_PER_DAY;
    let t0 = Instant::from_datetime(spec.start.and_hms_opt(0, 0, 0).unwrap());

    let mut weather_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    weather_rng.set_stream(1);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    noise_rng.set_stream(2);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let phi = spec.weather_persistence;
    let innovation = spec.weather_sd_c * (1.0 - phi * phi).sqrt();
    let mut anomaly = spec.weather_sd_c * std_normal.sample(&mut weather_rng);
    let mut temp_points = Vec::with_capacity(n + pre);
    for k in 0..n + pre {
        let t = t0.plus_steps(k as i64 - pre as i64);
        if k > 0 {
            anomaly = phi * anomaly + innovation * std_normal.sample(&mut weather_rng);
        }
        let hour = t.minute_of_day() as f64 / 60.0;
        let doy = t.date().ordinal0() as f64;
        let diurnal = spec.temp_diurnal_amp_c * (2.0 * PI * (hour - spec.temp_peak_hour) / 24.0).cos();
        // Seasonal maximum in mid-January.
        let seasonal = spec.temp_seasonal_amp_c * (2.0 * PI * (doy - 15.0) / 365.25).cos();
        temp_points.push((t, spec.temp_mean_c + diurnal + seasonal + anomaly));
    }
    let extended = TempSeries { location: None, points: temp_points };

    let mut z = vec![0.0; n];
    for c in &spec.coupling {
        let mut series: Vec<f64> = condition_values(&extended, &c.condition())[pre..]
            .iter()
            .map(|v| v.expect("pre-roll covers every lead"))
            .collect();
        standardise(&mut series);
        for (zi, s) in z.iter_mut().zip(&series) {
            *zi += c.weight * s;
        }
    }
    standardise(&mut z);

    let mut clean = Vec::with_capacity(n);
    let mut coupled = Vec::with_capacity(n);
    for (k, zk) in z.iter().enumerate() {
        let t = t0.plus_steps(k as i64);
        let hour = t.minute_of_day() as f64 / 60.0;
        let week = match t.weekday() {
            Weekday::Sat | Weekday::Sun => spec.weekend_factor,
            _ => 1.0,
        };
        let shape = spec.base_mw * duck(hour, spec.morning_peak, spec.evening_peak) * week;
        let up = if uptick.contains(t) { spec.uptick_mw } else { 0.0 };
        let drive = shape * spec.coupling_gain * zk;
        let value = shape + drive + up;
        if value <= 0.0 {
            return Err(Error::Invalid(format!(
                "spec produces non-positive load {value:.3} MW at {t}; lower coupling_gain"
            )));
        }
        clean.push((t, value));
        coupled.push(drive);
    }

    let signal_variance = variance(&coupled);
    let sigma = match spec.snr {
        Some(snr) => (signal_variance / snr).sqrt(),
        None => spec.noise_sigma_mw,
    };
    let floor = 1e-3 * spec.base_mw;
    let load_points = clean
        .into_iter()
        .map(|(t, v)| {
            let eps: f64 = if sigma > 0.0 { sigma * std_normal.sample(&mut noise_rng) } else { 0.0 };
            (t, (v + eps).max(floor))
        })
        .collect();

    let instantaneous: Vec<f64> =
        spec.coupling.iter().filter(|c| c.kind == ConditionKind::Instantaneous).map(|c| c.lead_hours).collect();
    let truth = GroundTruth {
        station_id: spec.station_id.clone(),
        seed: spec.seed,
        coupling: spec.coupling.clone(),
        planted_lag_hours: (instantaneous.len() == 1).then(|| instantaneous[0]),
        group: planted_group(&spec.coupling),
        uptick_window: uptick,
        uptick_mw: spec.uptick_mw,
        noise_sigma_mw: sigma,
        signal_variance,
    };
    Ok(SynthOutput {
        load: LoadSeries { station_id: spec.station_id.clone(), points: load_points, gaps: vec![] },
        temp: TempSeries { location: None, points: extended.points[pre..].to_vec() },
        truth,
    })
}

/// A spec whose coupling is the three-temperature combination of `group`.
pub fn group_spec(group: Group, seed: u64) -> SynthSpec {
    SynthSpec {
        station_id: format!("{}-{seed}", match group {
            Group::Group1 => "g1",
            Group::Group2 => "g2",
        }),
        coupling: group.combination().into_iter().map(|c| Coupling::new(c, 1.0)).collect(),
        seed,
        ..Default::default()
    }
}
