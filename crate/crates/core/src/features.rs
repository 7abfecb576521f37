//! Input-matrix construction: load history row, one-hot day labels and
//! leading-temperature rows, plus wildfire seasons and min-max scaling.

use std::collections::BTreeSet;
use std::fmt;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ingest::{LoadSeries, TempSeries};
use crate::time::{Instant, STEP_MINUTES};

/// How day-type information is one-hot encoded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayLabelScheme {
    /// No calendar rows (m = 0).
    None,
    /// Weekday, weekend, holiday (m = 3).
    ThreeType,
    /// Monday through Sunday plus holiday (m = 8).
    EightType,
}

impl DayLabelScheme {
    pub fn width(self) -> usize {
        match self {
            DayLabelScheme::None => 0,
            DayLabelScheme::ThreeType => 3,
            DayLabelScheme::EightType => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DayLabelScheme::None => "none",
            DayLabelScheme::ThreeType => "three_type",
            DayLabelScheme::EightType => "eight_type",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarConfig {
    #[serde(default)]
    pub holidays: BTreeSet<NaiveDate>,
    /// First day of the eight-type encoding.
    #[serde(default = "default_week_start", with = "weekday_serde")]
    pub week_start: Weekday,
}

fn default_week_start() -> Weekday {
    Weekday::Mon
}

mod weekday_serde {
    use chrono::Weekday;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(w: &Weekday, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(w)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Weekday, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(|_| serde::de::Error::custom(format!("bad weekday `{text}`")))
    }
}

impl Default for CalendarConfig {
    fn default() -> Self {
        CalendarConfig { holidays: BTreeSet::new(), week_start: Weekday::Mon }
    }
}

impl CalendarConfig {
    pub fn with_holidays(holidays: impl IntoIterator<Item = NaiveDate>) -> Self {
        CalendarConfig { holidays: holidays.into_iter().collect(), ..Default::default() }
    }

    pub fn is_holiday(&self, date: NaiveDate) -> bool {
        self.holidays.contains(&date)
    }

    pub fn is_weekend(&self, date: NaiveDate) -> bool {
        matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
    }
}

/// One-hot day label. Holidays take the holiday slot whatever the weekday.
pub fn encode_day_onehot(date: NaiveDate, scheme: DayLabelScheme, cal: &CalendarConfig) -> Vec<f64> {
    let mut v = vec![0.0; scheme.width()];
    if let Some(slot) = day_slot(date, scheme, cal) {
        v[slot] = 1.0;
    }
    v
}

fn day_slot(date: NaiveDate, scheme: DayLabelScheme, cal: &CalendarConfig) -> Option<usize> {
    let holiday = cal.is_holiday(date);
    match scheme {
        DayLabelScheme::None => None,
        DayLabelScheme::ThreeType => Some(if holiday {
            2
        } else if cal.is_weekend(date) {
            1
        } else {
            0
        }),
        DayLabelScheme::EightType => Some(if holiday {
            7
        } else {
            let offset = date.weekday().num_days_from_monday() + 7 - cal.week_start.num_days_from_monday();
            (offset % 7) as usize
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    /// Temperature exactly `lead` hours before.
    Instantaneous,
    /// Maximum over the trailing `lead`-hour window.
    WindowMax,
    /// Mean over the trailing `lead`-hour window.
    WindowMean,
    /// Temperature at the same instant.
    Simultaneous,
    /// No temperature row.
    None,
}

impl ConditionKind {
    pub const LEADING: [ConditionKind; 3] =
        [ConditionKind::Instantaneous, ConditionKind::WindowMax, ConditionKind::WindowMean];

    pub fn name(self) -> &'static str {
        match self {
            ConditionKind::Instantaneous => "instantaneous",
            ConditionKind::WindowMax => "window_max",
            ConditionKind::WindowMean => "window_mean",
            ConditionKind::Simultaneous => "simultaneous",
            ConditionKind::None => "none",
        }
    }
}

/// A leading-temperature feature: kind plus lead in hours.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureCondition {
    pub kind: ConditionKind,
    #[serde(default)]
    pub lead_hours: f64,
}

pub const MAX_LEAD_HOURS: f64 = 24.0;

impl TemperatureCondition {
    pub fn new(kind: ConditionKind, lead_hours: f64) -> Self {
        TemperatureCondition { kind, lead_hours }
    }

    pub fn instantaneous(lead_hours: f64) -> Self {
        Self::new(ConditionKind::Instantaneous, lead_hours)
    }

    pub fn window_max(lead_hours: f64) -> Self {
        Self::new(ConditionKind::WindowMax, lead_hours)
    }

    pub fn window_mean(lead_hours: f64) -> Self {
        Self::new(ConditionKind::WindowMean, lead_hours)
    }

    pub fn simultaneous() -> Self {
        Self::new(ConditionKind::Simultaneous, 0.0)
    }

    pub fn none() -> Self {
        Self::new(ConditionKind::None, 0.0)
    }

    /// Lead as a number of half-hour samples.
    pub fn lead_steps(&self) -> usize {
        (self.lead_hours * 60.0 / STEP_MINUTES as f64).round() as usize
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let l = self.lead_hours;
        if !(0.0..=MAX_LEAD_HOURS).contains(&l) || (l * 2.0).fract() != 0.0 {
            return Err(format!("lead_hours {l} must be a multiple of 0.5 in [0, 24]"));
        }
        match self.kind {
            ConditionKind::Simultaneous | ConditionKind::None if l != 0.0 => {
                Err(format!("{} carries no lead", self.kind.name()))
            }
            ConditionKind::Instantaneous | ConditionKind::WindowMax | ConditionKind::WindowMean if l == 0.0 => {
                Err(format!("{} needs a positive lead", self.kind.name()))
            }
            _ => Ok(()),
        }
    }

    /// Conditions that produce identical series share a canonical form:
    /// any leading kind at lead 0 is the simultaneous temperature.
    pub fn canonical(&self) -> (ConditionKind, usize) {
        match self.kind {
            ConditionKind::None => (ConditionKind::None, 0),
            ConditionKind::Simultaneous => (ConditionKind::Simultaneous, 0),
            _ if self.lead_steps() == 0 => (ConditionKind::Simultaneous, 0),
            k => (k, self.lead_steps()),
        }
    }
}

impl fmt::Display for TemperatureCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ConditionKind::None | ConditionKind::Simultaneous => write!(f, "{}", self.kind.name()),
            k => write!(f, "{}@{}h", k.name(), self.lead_hours),
        }
    }
}

/// Drop `None` entries and duplicates (by canonical form), keeping order.
pub fn dedup_conditions(conditions: &[TemperatureCondition]) -> Vec<TemperatureCondition> {
    let mut seen = BTreeSet::new();
    conditions
        .iter()
        .filter(|c| c.kind != ConditionKind::None)
        .filter(|c| seen.insert(c.canonical()))
        .copied()
        .collect()
}

/// Condition value aligned to each sample of `temp`; `None` where the
/// required history is missing.
pub(crate) fn condition_values(temp: &TempSeries, cond: &TemperatureCondition) -> Vec<Option<f64>> {
    let pts = &temp.points;
    let steps = cond.lead_steps();
    let contiguous = |i: usize| {
        i >= steps && pts[i - steps].0 == pts[i].0.plus_steps(-(steps as i64))
    };
    (0..pts.len())
        .map(|i| match cond.kind {
            ConditionKind::None => None,
            ConditionKind::Simultaneous => Some(pts[i].1),
            _ if !contiguous(i) => None,
            ConditionKind::Instantaneous => Some(pts[i - steps].1),
            ConditionKind::WindowMax => {
                Some(pts[i - steps..=i].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max))
            }
            ConditionKind::WindowMean => {
                Some(pts[i - steps..=i].iter().map(|p| p.1).sum::<f64>() / (steps + 1) as f64)
            }
        })
        .collect()
}

/// Leading-temperature series for one condition. Instants without enough
/// history are omitted.
pub fn derive_condition_series(temp: &TempSeries, cond: &TemperatureCondition) -> Result<TempSeries> {
    if cond.kind == ConditionKind::None {
        return Err(Error::Invalid("the `none` condition has no temperature series".into()));
    }
    let points: Vec<(Instant, f64)> = temp
        .points
        .iter()
        .zip(condition_values(temp, cond))
        .filter_map(|(p, v)| v.map(|v| (p.0, v)))
        .collect();
    if points.is_empty() {
        return Err(Error::InsufficientData(format!(
            "temperature series too short for {cond} ({} samples)",
            temp.len()
        )));
    }
    Ok(TempSeries { location: temp.location, points })
}

/// Shape of one model input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// History length in samples.
    pub n_points: usize,
    pub scheme: DayLabelScheme,
    pub conditions: Vec<TemperatureCondition>,
    /// Keep every `stride`-th target instant (1 keeps all).
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

impl WindowSpec {
    pub fn new(n_points: usize, scheme: DayLabelScheme, conditions: &[TemperatureCondition]) -> Self {
        WindowSpec { n_points, scheme, conditions: dedup_conditions(conditions), stride: 1 }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn feature_rows(&self) -> usize {
        1 + self.scheme.width() + self.conditions.len()
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.n_points == 0 {
            return Err("n_points must be at least 1".into());
        }
        if self.stride == 0 {
            return Err("stride must be at least 1".into());
        }
        for c in &self.conditions {
            if c.kind != ConditionKind::Simultaneous && c.kind != ConditionKind::None {
                c.validate()?;
            }
        }
        Ok(())
    }
}

/// One `(1 + m + k) × n` input matrix, stored row-major, and its target.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureWindow {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    /// Load at `target_time`, one step after the last history column.
    pub target: f64,
    pub target_time: Instant,
}

impl FeatureWindow {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Feature vector of one time step.
    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// Precomputed condition lookups for building many windows from one pair
/// of series.
struct WindowBuilder<'a> {
    load: &'a LoadSeries,
    temp: &'a TempSeries,
    spec: &'a WindowSpec,
    cal: &'a CalendarConfig,
    conditions: Vec<Vec<Option<f64>>>,
}

impl<'a> WindowBuilder<'a> {
    fn new(load: &'a LoadSeries, temp: &'a TempSeries, spec: &'a WindowSpec, cal: &'a CalendarConfig) -> Self {
        let conditions = spec.conditions.iter().map(|c| condition_values(temp, c)).collect();
        WindowBuilder { load, temp, spec, cal, conditions }
    }

    fn build(&self, at: Instant) -> Result<FeatureWindow> {
        let n = self.spec.n_points;
        let pts = &self.load.points;
        let idx = self
            .load
            .index_of(at)
            .ok_or_else(|| Error::InsufficientData(format!("no load sample at {at}")))?;
        let target_time = at.plus_steps(1);
        let target = match pts.get(idx + 1) {
            Some(&(t, v)) if t == target_time => v,
            _ => return Err(Error::InsufficientData(format!("target at {target_time} missing"))),
        };
        if idx + 1 < n || pts[idx + 1 - n].0 != at.plus_steps(-(n as i64 - 1)) {
            return Err(Error::InsufficientData(format!("history ending at {at} crosses a gap")));
        }
        let history = &pts[idx + 1 - n..=idx];

        let m = self.spec.scheme.width();
        let rows = self.spec.feature_rows();
        let mut data = vec![0.0; rows * n];
        for (c, &(t, v)) in history.iter().enumerate() {
            data[c] = v;
            if let Some(slot) = day_slot(t.date(), self.spec.scheme, self.cal) {
                data[(1 + slot) * n + c] = 1.0;
            }
            if !self.conditions.is_empty() {
                let ti = self
                    .temp
                    .index_of(t)
                    .ok_or_else(|| Error::InsufficientData(format!("no temperature at {t}")))?;
                for (k, series) in self.conditions.iter().enumerate() {
                    let value = series[ti].ok_or_else(|| {
                        Error::InsufficientData(format!("{} undefined at {t}", self.spec.conditions[k]))
                    })?;
                    data[(1 + m + k) * n + c] = value;
                }
            }
        }
        Ok(FeatureWindow { rows, cols: n, data, target, target_time })
    }
}

/// Build the unscaled input matrix whose history ends at `at`.
pub fn build_window_matrix(
    load: &LoadSeries,
    temp: &TempSeries,
    spec: &WindowSpec,
    cal: &CalendarConfig,
    at: Instant,
) -> Result<FeatureWindow> {
    WindowBuilder::new(load, temp, spec, cal).build(at)
}

/// Australian wildfire season, October 1 to March 31 inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Season {
    pub start_year: i32,
}

impl Season {
    pub fn new(start_year: i32) -> Self {
        Season { start_year }
    }

    pub fn start(&self) -> Instant {
        Instant::from_ymd_hm(self.start_year, 10, 1, 0, 0)
    }

    /// Exclusive end, April 1 of the following year.
    pub fn end(&self) -> Instant {
        Instant::from_ymd_hm(self.start_year + 1, 4, 1, 0, 0)
    }

    pub fn contains(&self, t: Instant) -> bool {
        t >= self.start() && t < self.end()
    }

    pub fn label(&self) -> String {
        format!("{:02}-{:02}", self.start_year.rem_euclid(100), (self.start_year + 1).rem_euclid(100))
    }

    /// Parse a `YY-YY` label; years are taken in the 2000s.
    pub fn parse(label: &str) -> Option<Self> {
        let (a, b) = label.trim().split_once('-')?;
        if a.len() != 2 || b.len() != 2 {
            return None;
        }
        let a: i32 = a.parse().ok()?;
        let b: i32 = b.parse().ok()?;
        ((a + 1) % 100 == b).then_some(Season { start_year: 2000 + a })
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for Season {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Season {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Season::parse(&text).ok_or_else(|| serde::de::Error::custom(format!("bad season label `{text}`")))
    }
}

pub fn season_of(t: Instant) -> Option<Season> {
    let date = t.date();
    match date.month() {
        10..=12 => Some(Season::new(date.year())),
        1..=3 => Some(Season::new(date.year() - 1)),
        _ => None,
    }
}

/// Min-max range of one feature row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        MinMax { min, max }
    }

    /// A degenerate range maps everything to 0.5.
    pub fn scale(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.5
        }
    }

    pub fn unscale(&self, s: f64) -> f64 {
        if self.max > self.min {
            self.min + s * (self.max - self.min)
        } else {
            self.min
        }
    }
}

/// Per-row scaling fitted on training windows. One-hot rows carry `None`
/// and pass through unchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub rows: Vec<Option<MinMax>>,
    pub target: MinMax,
}

impl Scaler {
    pub fn fit(windows: &[FeatureWindow], scheme: DayLabelScheme) -> Result<Self> {
        let first = windows.first().ok_or_else(|| Error::InsufficientData("cannot fit a scaler on no windows".into()))?;
        let m = scheme.width();
        let rows = (0..first.rows)
            .map(|r| {
                (r == 0 || r > m).then(|| MinMax::fit(windows.iter().flat_map(|w| w.row(r).iter().copied())))
            })
            .collect();
        let target = MinMax::fit(windows.iter().map(|w| w.target));
        Ok(Scaler { rows, target })
    }

    fn map(&self, w: &FeatureWindow, f: impl Fn(&MinMax, f64) -> f64, target: f64) -> Result<FeatureWindow> {
        if w.rows != self.rows.len() {
            return Err(Error::Shape(format!("window has {} rows, scaler expects {}", w.rows, self.rows.len())));
        }
        let mut out = w.clone();
        for (r, mm) in self.rows.iter().enumerate() {
            if let Some(mm) = mm {
                for v in &mut out.data[r * w.cols..(r + 1) * w.cols] {
                    *v = f(mm, *v);
                }
            }
        }
        out.target = target;
        Ok(out)
    }

    pub fn scale_window(&self, w: &FeatureWindow) -> Result<FeatureWindow> {
        self.map(w, |mm, v| mm.scale(v), self.target.scale(w.target))
    }

    pub fn unscale_window(&self, w: &FeatureWindow) -> Result<FeatureWindow> {
        self.map(w, |mm, v| mm.unscale(v), self.target.unscale(w.target))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Test,
}

/// Scaled windows for one split.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub windows: Vec<FeatureWindow>,
    /// Unscaled targets in MW, parallel to `windows`.
    pub targets_mw: Vec<f64>,
    pub scaler: Scaler,
    pub split: SplitTag,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn target_times(&self) -> Vec<Instant> {
        self.windows.iter().map(|w| w.target_time).collect()
    }
}

/// Unscaled windows whose target falls inside any of `seasons`.
pub fn collect_windows(
    load: &LoadSeries,
    temp: &TempSeries,
    spec: &WindowSpec,
    cal: &CalendarConfig,
    seasons: &BTreeSet<Season>,
) -> Vec<FeatureWindow> {
    let builder = WindowBuilder::new(load, temp, spec, cal);
    let stride = spec.stride.max(1) as i64;
    load.points
        .iter()
        .filter(|(t, _)| {
            let target = t.plus_steps(1);
            (target.epoch_minutes() / STEP_MINUTES).rem_euclid(stride) == 0
                && season_of(target).is_some_and(|s| seasons.contains(&s))
        })
        .filter_map(|&(t, _)| builder.build(t).ok())
        .collect()
}

fn scaled_dataset(raw: Vec<FeatureWindow>, scaler: &Scaler, split: SplitTag) -> Result<Dataset> {
    let targets_mw = raw.iter().map(|w| w.target).collect();
    let windows = raw.iter().map(|w| scaler.scale_window(w)).collect::<Result<Vec<_>>>()?;
    Ok(Dataset { windows, targets_mw, scaler: scaler.clone(), split })
}

/// Split windows by target season, fit the scaler on the training split
/// only and apply it to both.
pub fn make_dataset(
    load: &LoadSeries,
    temp: &TempSeries,
    spec: &WindowSpec,
    cal: &CalendarConfig,
    train_seasons: &BTreeSet<Season>,
    test_seasons: &BTreeSet<Season>,
) -> Result<(Dataset, Dataset)> {
    if let Some(s) = train_seasons.intersection(test_seasons).next() {
        return Err(Error::Invalid(format!("season {s} is in both train and test splits")));
    }
    let train_raw = collect_windows(load, temp, spec, cal, train_seasons);
    let test_raw = collect_windows(load, temp, spec, cal, test_seasons);
    if train_raw.is_empty() {
        return Err(Error::InsufficientData("training split has no windows".into()));
    }
    if test_raw.is_empty() {
        return Err(Error::InsufficientData("test split has no windows".into()));
    }
    let scaler = Scaler::fit(&train_raw, spec.scheme)?;
    Ok((
        scaled_dataset(train_raw, &scaler, SplitTag::Train)?,
        scaled_dataset(test_raw, &scaler, SplitTag::Test)?,
    ))
}

/// Build one split with an existing scaler (e.g. from a checkpoint).
pub fn make_split_with_scaler(
    load: &LoadSeries,
    temp: &TempSeries,
    spec: &WindowSpec,
    cal: &CalendarConfig,
    seasons: &BTreeSet<Season>,
    scaler: &Scaler,
    split: SplitTag,
) -> Result<Dataset> {
    let raw = collect_windows(load, temp, spec, cal, seasons);
    if raw.is_empty() {
        return Err(Error::InsufficientData("split has no windows".into()));
    }
    scaled_dataset(raw, scaler, split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn temp_of(values: &[f64]) -> TempSeries {
        let t0 = Instant::from_ymd_hm(2016, 1, 1, 0, 0);
        TempSeries { location: None, points: values.iter().enumerate().map(|(i, &v)| (t0.plus_steps(i as i64), v)).collect() }
    }

    fn load_of(values: &[f64]) -> LoadSeries {
        let t0 = Instant::from_ymd_hm(2016, 1, 1, 0, 0);
        LoadSeries {
            station_id: "s".into(),
            points: values.iter().enumerate().map(|(i, &v)| (t0.plus_steps(i as i64), v)).collect(),
            gaps: vec![],
        }
    }

    #[test]
    fn onehot_examples() {
        let cal = CalendarConfig::default();
        // 2016-01-05 is a Tuesday.
        assert_eq!(encode_day_onehot(date(2016, 1, 5), DayLabelScheme::EightType, &cal), vec![0., 1., 0., 0., 0., 0., 0., 0.]);
        // 2016-01-09 is a Saturday.
        assert_eq!(encode_day_onehot(date(2016, 1, 9), DayLabelScheme::ThreeType, &cal), vec![0., 1., 0.]);
        let hol = CalendarConfig::with_holidays([date(2016, 1, 5)]);
        assert_eq!(encode_day_onehot(date(2016, 1, 5), DayLabelScheme::EightType, &hol), vec![0., 0., 0., 0., 0., 0., 0., 1.]);
        assert_eq!(encode_day_onehot(date(2016, 1, 5), DayLabelScheme::ThreeType, &hol), vec![0., 0., 1.]);
        assert!(encode_day_onehot(date(2016, 1, 5), DayLabelScheme::None, &cal).is_empty());
    }

    #[test]
    fn week_start_shifts_positions() {
        let cal = CalendarConfig { week_start: Weekday::Sun, ..Default::default() };
        // Tuesday is index 2 when weeks start on Sunday.
        assert_eq!(encode_day_onehot(date(2016, 1, 5), DayLabelScheme::EightType, &cal)[2], 1.0);
    }

    #[test]
    fn condition_examples() {
        let c = derive_condition_series(&temp_of(&[20.0; 10]), &TemperatureCondition::window_mean(2.0)).unwrap();
        assert!(c.points.iter().all(|p| p.1 == 20.0));

        let t = temp_of(&[10., 11., 12., 13.]);
        let inst = derive_condition_series(&t, &TemperatureCondition::instantaneous(1.0)).unwrap();
        assert_eq!(inst.points.len(), 2);
        assert_eq!(inst.points[1], (t.points[3].0, 11.0));

        let t = temp_of(&[10., 14., 12., 13.]);
        let mx = derive_condition_series(&t, &TemperatureCondition::window_max(1.0)).unwrap();
        let brute = t.points[1..=3].iter().map(|p| p.1).fold(f64::MIN, f64::max);
        assert_eq!(mx.points.last().unwrap().1, brute);
        assert_eq!(brute, 14.0);

        assert!(matches!(
            derive_condition_series(&temp_of(&[1.0, 2.0]), &TemperatureCondition::instantaneous(5.0)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn lead_zero_is_simultaneous() {
        let t = temp_of(&[3., 1., 4., 1., 5., 9.]);
        let sim = derive_condition_series(&t, &TemperatureCondition::simultaneous()).unwrap();
        for kind in ConditionKind::LEADING {
            assert_eq!(derive_condition_series(&t, &TemperatureCondition::new(kind, 0.0)).unwrap(), sim);
        }
    }

    #[test]
    fn condition_validation() {
        assert!(TemperatureCondition::instantaneous(5.0).validate().is_ok());
        assert!(TemperatureCondition::instantaneous(0.75).validate().is_err());
        assert!(TemperatureCondition::window_max(24.5).validate().is_err());
        assert!(TemperatureCondition::window_max(0.0).validate().is_err());
        assert!(TemperatureCondition::simultaneous().validate().is_ok());
        assert!(TemperatureCondition::new(ConditionKind::Simultaneous, 1.0).validate().is_err());
    }

    #[test]
    fn dedup_collapses_equivalent_conditions() {
        let conds = [
            TemperatureCondition::instantaneous(0.5),
            TemperatureCondition::none(),
            TemperatureCondition::instantaneous(0.5),
            TemperatureCondition::window_max(0.0),
            TemperatureCondition::simultaneous(),
            TemperatureCondition::window_max(0.5),
        ];
        let d = dedup_conditions(&conds);
        assert_eq!(d, vec![conds[0], conds[3], conds[5]]);
    }

    #[test]
    fn matrix_shapes() {
        let load = load_of(&(1..=60).map(f64::from).collect::<Vec<_>>());
        let temp = temp_of(&(1..=60).map(|v| v as f64 * 0.1).collect::<Vec<_>>());
        let cal = CalendarConfig::default();
        let at = load.points[50].0;

        let spec = WindowSpec::new(32, DayLabelScheme::EightType, &[TemperatureCondition::instantaneous(5.0)]);
        let w = build_window_matrix(&load, &temp, &spec, &cal, at).unwrap();
        assert_eq!(w.shape(), (10, 32));
        assert_eq!(w.target, 52.0);
        // one-hot columns sum to 1
        for c in 0..32 {
            assert_eq!((1..9).map(|r| w.get(r, c)).sum::<f64>(), 1.0);
        }
        // temperature row is temp(t - 5h) per column
        assert_eq!(w.get(9, 31), temp.points[50 - 10].1);

        let tiny = WindowSpec::new(1, DayLabelScheme::None, &[]);
        let w = build_window_matrix(&load, &temp, &tiny, &cal, at).unwrap();
        assert_eq!(w.shape(), (1, 1));
        assert_eq!(w.data, vec![51.0]);
    }

    #[test]
    fn consecutive_windows_overlap() {
        let load = load_of(&(1..=60).map(|v| (v as f64).sqrt()).collect::<Vec<_>>());
        let temp = temp_of(&[15.0; 60]);
        let cal = CalendarConfig::default();
        let spec = WindowSpec::new(8, DayLabelScheme::ThreeType, &[TemperatureCondition::window_mean(1.0)]);
        let a = build_window_matrix(&load, &temp, &spec, &cal, load.points[20].0).unwrap();
        let b = build_window_matrix(&load, &temp, &spec, &cal, load.points[21].0).unwrap();
        for r in 0..a.rows {
            assert_eq!(&a.row(r)[1..], &b.row(r)[..7]);
        }
    }

    #[test]
    fn window_errors() {
        let mut load = load_of(&(1..=20).map(f64::from).collect::<Vec<_>>());
        let temp = temp_of(&[15.0; 20]);
        let cal = CalendarConfig::default();
        let spec = WindowSpec::new(4, DayLabelScheme::None, &[]);
        // target missing at the series end
        assert!(build_window_matrix(&load, &temp, &spec, &cal, load.points[19].0).is_err());
        // history crossing a removed sample
        let at = load.points[10].0;
        load.points.remove(8);
        assert!(build_window_matrix(&load, &temp, &spec, &cal, at).is_err());
    }

    #[test]
    fn seasons() {
        assert_eq!(season_of(Instant::from_ymd_hm(2016, 1, 15, 0, 0)).unwrap().label(), "15-16");
        assert_eq!(season_of(Instant::from_ymd_hm(2016, 7, 1, 0, 0)), None);
        assert_eq!(season_of(Instant::from_ymd_hm(2015, 10, 1, 0, 0)).unwrap().label(), "15-16");
        assert_eq!(season_of(Instant::from_ymd_hm(2016, 4, 1, 0, 0)), None);
        assert_eq!(season_of(Instant::from_ymd_hm(2016, 3, 31, 23, 30)).unwrap().label(), "15-16");
        assert_eq!(Season::parse("19-20"), Some(Season::new(2019)));
        assert_eq!(Season::parse("99-00"), Some(Season::new(2099)));
        assert_eq!(Season::parse("15-17"), None);
    }

    #[test]
    fn degenerate_scaler() {
        let mm = MinMax { min: 5.0, max: 5.0 };
        assert_eq!(mm.scale(5.0), 0.5);
        assert_eq!(mm.unscale(0.5), 5.0);
    }
}
