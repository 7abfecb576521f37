//! Correlation, regression and dispersion statistics.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{condition_values, CalendarConfig, ConditionKind, TemperatureCondition, MAX_LEAD_HOURS};
use crate::ingest::{LoadSeries, TempSeries};
use crate::time::{Instant, SLOTS_PER_DAY};

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population variance.
pub fn variance(values: &[f64]) -> f64 {
    let mu = mean(values);
    values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / values.len() as f64
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("pearson on lengths {} and {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("pearson needs at least 2 points".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("pearson of a zero-variance series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Solve a small dense system with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Coefficient of determination of a least-squares polynomial fit, clamped
/// to `[0, 1]`.
pub fn polyfit_r2(x: &[f64], y: &[f64], order: usize) -> Result<f64> {
    if !(1..=2).contains(&order) {
        return Err(Error::Invalid(format!("polynomial order {order} not supported")));
    }
    if x.len() != y.len() {
        return Err(Error::Shape(format!("polyfit on lengths {} and {}", x.len(), y.len())));
    }
    if x.len() < order + 2 {
        return Err(Error::InsufficientData(format!("order-{order} fit needs {} points", order + 2)));
    }
    let (mx, sx) = (mean(x), variance(x).sqrt());
    if sx == 0.0 {
        return Err(Error::Undefined("polyfit with constant x".into()));
    }
    // standardised abscissa keeps the normal equations well conditioned
    let u: Vec<f64> = x.iter().map(|v| (v - mx) / sx).collect();
    let terms = order + 1;
    let mut ata = vec![vec![0.0; terms]; terms];
    let mut aty = vec![0.0; terms];
    for (&ui, &yi) in u.iter().zip(y) {
        let powers: Vec<f64> = (0..terms).map(|p| ui.powi(p as i32)).collect();
        for r in 0..terms {
            aty[r] += powers[r] * yi;
            for c in 0..terms {
                ata[r][c] += powers[r] * powers[c];
            }
        }
    }
    let coef = solve(ata, aty).ok_or_else(|| Error::Undefined("singular normal equations".into()))?;
    let my = mean(y);
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&ui, &yi) in u.iter().zip(y) {
        let fit: f64 = coef.iter().enumerate().map(|(p, c)| c * ui.powi(p as i32)).sum();
        ss_res += (yi - fit).powi(2);
        ss_tot += (yi - my).powi(2);
    }
    if ss_tot == 0.0 {
        return Err(Error::Undefined("polyfit with constant y".into()));
    }
    Ok((1.0 - ss_res / ss_tot).clamp(0.0, 1.0))
}

/// Percentile by linear interpolation between order statistics of sorted data.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("percentile of no values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&sorted, p))
}

/// Coefficient of quartile variation, `(Q3 - Q1) / (Q3 + Q1)`.
pub fn cqv(values: &[f64]) -> Result<f64> {
    let q1 = percentile(values, 25.0)?;
    let q3 = percentile(values, 75.0)?;
    if q3 + q1 == 0.0 {
        return Err(Error::Undefined("CQV with Q3 + Q1 = 0".into()));
    }
    Ok((q3 - q1) / (q3 + q1))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub lead_hours: f64,
    pub rho: f64,
    pub r2_order1: f64,
    pub r2_order2: f64,
}

/// Correlation of load against one condition kind over the lead grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: ConditionKind,
    /// Number of instants every record was computed over.
    pub samples: usize,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lead_hours,rho,r2o1,r2o2\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{}", r.lead_hours, r.rho, r.r2_order1, r.r2_order2);
        }
        out
    }
}

/// 0.5 h to 24 h in half-hour steps.
pub fn lead_grid() -> Vec<f64> {
    (1..=(MAX_LEAD_HOURS * 2.0) as usize).map(|k| k as f64 * 0.5).collect()
}

/// Correlate `load(t)` with the condition value at `t` for every lead on
/// the grid, over the instants where all leads are defined.
pub fn lead_sweep(load: &LoadSeries, temp: &TempSeries, kind: ConditionKind) -> Result<SweepResult> {
    if !ConditionKind::LEADING.contains(&kind) {
        return Err(Error::Invalid(format!("cannot sweep leads of `{}`", kind.name())));
    }
    if load.points.len() != temp.points.len() || load.points.iter().zip(&temp.points).any(|(a, b)| a.0 != b.0) {
        return Err(Error::Shape("lead sweep needs aligned load and temperature".into()));
    }
    if load.len() < 2 * SLOTS_PER_DAY {
        return Err(Error::InsufficientData(format!("lead sweep needs 48 h of data, got {} samples", load.len())));
    }
    let leads = lead_grid();
    let series: Vec<Vec<Option<f64>>> = leads
        .par_iter()
        .map(|&l| condition_values(temp, &TemperatureCondition::new(kind, l)))
        .collect();
    let common: Vec<usize> = (0..load.len()).filter(|&i| series.iter().all(|s| s[i].is_some())).collect();
    if common.len() < 4 {
        return Err(Error::InsufficientData("no common instants across the lead grid".into()));
    }
    let y: Vec<f64> = common.iter().map(|&i| load.points[i].1).collect();
    let records = leads
        .par_iter()
        .zip(series.par_iter())
        .map(|(&lead, s)| {
            let x: Vec<f64> = common.iter().map(|&i| s[i].unwrap()).collect();
            Ok(SweepRecord {
                lead_hours: lead,
                rho: pearson(&x, &y)?,
                r2_order1: polyfit_r2(&x, &y, 1)?,
                r2_order2: polyfit_r2(&x, &y, 2)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { kind, samples: common.len(), records })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindBest {
    pub kind: ConditionKind,
    pub best_rho_lead: f64,
    pub best_rho: f64,
    pub best_r2o2_lead: f64,
    pub best_r2o2: f64,
}

/// Strongest-correlation leads per condition kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestConditions {
    /// In instantaneous, max, mean order.
    pub kinds: Vec<KindBest>,
}

impl BestConditions {
    pub fn get(&self, kind: ConditionKind) -> Option<&KindBest> {
        self.kinds.iter().find(|k| k.kind == kind)
    }

    /// Best-ρ leads as (instantaneous, max, mean).
    pub fn rho_leads(&self) -> (f64, f64, f64) {
        let lead = |k| self.get(k).map_or(f64::NAN, |b| b.best_rho_lead);
        (lead(ConditionKind::Instantaneous), lead(ConditionKind::WindowMax), lead(ConditionKind::WindowMean))
    }

    /// The single condition with the highest ρ across kinds.
    pub fn best_rho_condition(&self) -> TemperatureCondition {
        let mut best = &self.kinds[0];
        for k in &self.kinds[1..] {
            if k.best_rho > best.best_rho {
                best = k;
            }
        }
        TemperatureCondition::new(best.kind, best.best_rho_lead)
    }

    pub fn rho_conditions(&self) -> Vec<TemperatureCondition> {
        self.kinds.iter().map(|k| TemperatureCondition::new(k.kind, k.best_rho_lead)).collect()
    }

    pub fn r2o2_conditions(&self) -> Vec<TemperatureCondition> {
        self.kinds.iter().map(|k| TemperatureCondition::new(k.kind, k.best_r2o2_lead)).collect()
    }
}

// First maximum wins, so ties go to the smaller lead.
fn argmax(records: &[SweepRecord], key: impl Fn(&SweepRecord) -> f64) -> (f64, f64) {
    let mut best = (records[0].lead_hours, key(&records[0]));
    for r in &records[1..] {
        if key(r) > best.1 {
            best = (r.lead_hours, key(r));
        }
    }
    best
}

pub fn best_conditions(sweeps: &[SweepResult]) -> Result<BestConditions> {
    let kinds = ConditionKind::LEADING
        .iter()
        .map(|&kind| {
            let sweep = sweeps
                .iter()
                .find(|s| s.kind == kind && !s.records.is_empty())
                .ok_or_else(|| Error::Invalid(format!("missing {} sweep", kind.name())))?;
            let (best_rho_lead, best_rho) = argmax(&sweep.records, |r| r.rho);
            let (best_r2o2_lead, best_r2o2) = argmax(&sweep.records, |r| r.r2_order2);
            Ok(KindBest { kind, best_rho_lead, best_rho, best_r2o2_lead, best_r2o2 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BestConditions { kinds })
}

/// Correlation-pattern group of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    /// Peaks near 2, 2 and 4 hours.
    Group1,
    /// Peaks near 4, 4 and 8 hours.
    Group2,
}

impl Group {
    /// Prototype (instantaneous, max, mean) leads in hours.
    pub fn prototype(self) -> (f64, f64, f64) {
        match self {
            Group::Group1 => (2.0, 2.0, 4.0),
            Group::Group2 => (4.0, 4.0, 8.0),
        }
    }

    /// The three-temperature combination condition.
    pub fn combination(self) -> Vec<TemperatureCondition> {
        let (i, m, a) = self.prototype();
        vec![
            TemperatureCondition::instantaneous(i),
            TemperatureCondition::window_max(m),
            TemperatureCondition::window_mean(a),
        ]
    }
}

/// Nearest prototype in L1 distance; ties go to Group 1.
pub fn classify_group(best: &BestConditions) -> Group {
    let (i, m, a) = best.rho_leads();
    let dist = |g: Group| {
        let (pi, pm, pa) = g.prototype();
        (i - pi).abs() + (m - pm).abs() + (a - pa).abs()
    };
    if dist(Group::Group2) < dist(Group::Group1) {
        Group::Group2
    } else {
        Group::Group1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotStats {
    pub slot: usize,
    pub mean_weekday: Option<f64>,
    pub mean_weekend: Option<f64>,
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

/// Per half-hour-of-day statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailyProfile {
    pub slots: Vec<SlotStats>,
}

impl DailyProfile {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut out = String::from("slot,mean_weekday,mean_weekend,p5,p25,p50,p75,p95\n");
        for s in &self.slots {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.slot,
                opt(s.mean_weekday),
                opt(s.mean_weekend),
                s.p5,
                s.p25,
                s.p50,
                s.p75,
                s.p95
            );
        }
        out
    }
}

/// Weekday/weekend means and percentile bands for every half-hour slot.
/// Holidays count with weekends as non-working days.
pub fn daily_profile(times: &[Instant], values: &[f64], cal: &CalendarConfig) -> Result<DailyProfile> {
    if times.len() != values.len() {
        return Err(Error::Shape("profile times and values differ in length".into()));
    }
    let days: BTreeSet<_> = times.iter().map(|t| t.date()).collect();
    if days.len() < 7 {
        return Err(Error::InsufficientData(format!("daily profile needs 7 days, got {}", days.len())));
    }
    let mut all = vec![Vec::new(); SLOTS_PER_DAY];
    let mut weekday = vec![Vec::new(); SLOTS_PER_DAY];
    let mut weekend = vec![Vec::new(); SLOTS_PER_DAY];
    for (&t, &v) in times.iter().zip(values) {
        let slot = t.slot_of_day();
        let d = t.date();
        all[slot].push(v);
        if cal.is_weekend(d) || cal.is_holiday(d) {
            weekend[slot].push(v);
        } else {
            weekday[slot].push(v);
        }
    }
    let slots = (0..SLOTS_PER_DAY)
        .map(|slot| {
            let mut sorted = std::mem::take(&mut all[slot]);
            if sorted.is_empty() {
                return Err(Error::InsufficientData(format!("no samples in slot {slot}")));
            }
            sorted.sort_by(f64::total_cmp);
            let avg = |v: &Vec<f64>| (!v.is_empty()).then(|| mean(v));
            Ok(SlotStats {
                slot,
                mean_weekday: avg(&weekday[slot]),
                mean_weekend: avg(&weekend[slot]),
                p5: percentile_sorted(&sorted, 5.0),
                p25: percentile_sorted(&sorted, 25.0),
                p50: percentile_sorted(&sorted, 50.0),
                p75: percentile_sorted(&sorted, 75.0),
                p95: percentile_sorted(&sorted, 95.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DailyProfile { slots })
}

/// Silverman's rule of thumb, `0.9 · min(σ, IQR/1.34) · n^(-1/5)`. Falls
/// back to σ when the interquartile range is zero.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData("KDE needs at least 2 samples".into()));
    }
    let n = samples.len() as f64;
    let sd = (variance(samples) * n / (n - 1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(Error::Undefined("KDE of zero-spread samples".into()));
    }
    let iqr = percentile(samples, 75.0)? - percentile(samples, 25.0)?;
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * n.powf(-0.2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kde {
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// Trapezoidal running integral of `density` over `grid`.
    pub cumulative: Vec<f64>,
}

impl Kde {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,density,cumulative\n");
        for ((x, d), c) in self.grid.iter().zip(&self.density).zip(&self.cumulative) {
            let _ = writeln!(out, "{x},{d},{c}");
        }
        out
    }
}

/// Gaussian kernel density estimate evaluated on `grid`.
pub fn kde(samples: &[f64], grid: &[f64]) -> Result<Kde> {
    let h = silverman_bandwidth(samples)?;
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let density: Vec<f64> = grid
        .par_iter()
        .map(|&x| samples.iter().map(|&s| (-0.5 * ((x - s) / h).powi(2)).exp()).sum::<f64>() * norm)
        .collect();
    let mut cumulative = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    for i in 0..grid.len() {
        if i > 0 {
            acc += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
        }
        cumulative.push(acc);
    }
    Ok(Kde { bandwidth: h, grid: grid.to_vec(), density, cumulative })
}

/// Evenly spaced grid covering the samples plus `pad_bandwidths` on each side.
pub fn kde_grid(samples: &[f64], points: usize, pad_bandwidths: f64) -> Result<Vec<f64>> {
    let h = silverman_bandwidth(samples)?;
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - pad_bandwidths * h;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + pad_bandwidths * h;
    let points = points.max(2);
    Ok((0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pearson_examples() {
        assert_abs_diff_eq!(pearson(&[1., 2., 3.], &[1., 2., 3.]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(&[1., 2., 3.], &[3., 2., 1.]).unwrap(), -1.0, epsilon = 1e-15);
        // cov = 4/4·... : dx = [-1.5,-.5,.5,1.5], dy = [-1.5,.5,-.5,1.5]; sxy = 4, sxx = syy = 5
        assert_abs_diff_eq!(pearson(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap(), 0.8, epsilon = 1e-15);
        assert!(matches!(pearson(&[1., 1., 1.], &[1., 2., 3.]), Err(Error::Undefined(_))));
        assert!(pearson(&[1.], &[1.]).is_err());
    }

    #[test]
    fn polyfit_examples() {
        let x = [-2., -1., 0., 1., 2.];
        let lin: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        assert_abs_diff_eq!(polyfit_r2(&x, &lin, 1).unwrap(), 1.0, epsilon = 1e-12);
        let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        assert_abs_diff_eq!(polyfit_r2(&x, &sq, 2).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(polyfit_r2(&x, &sq, 1).unwrap(), 0.0, epsilon = 1e-12);
        assert!(polyfit_r2(&[1., 1., 1., 1.], &[1., 2., 3., 4.], 1).is_err());
        assert!(polyfit_r2(&[1., 2., 3.], &[1., 2., 3.], 2).is_err());
    }

    #[test]
    fn percentile_and_cqv() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 50.0).unwrap(), 50.5);
        assert_eq!(percentile(&v, 25.0).unwrap(), 25.75);
        assert_eq!(percentile(&v, 75.0).unwrap(), 75.25);
        assert_abs_diff_eq!(cqv(&v).unwrap(), 49.5 / 101.0, epsilon = 1e-15);
        assert_eq!(cqv(&[4.0; 9]).unwrap(), 0.0);
        assert!(cqv(&[-1.0, 1.0]).is_err());
    }

    #[test]
    fn cqv_scale_not_translation() {
        let v = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let scaled: Vec<f64> = v.iter().map(|x| x * 3.5).collect();
        let shifted: Vec<f64> = v.iter().map(|x| x + 10.0).collect();
        assert_abs_diff_eq!(cqv(&v).unwrap(), cqv(&scaled).unwrap(), epsilon = 1e-14);
        assert!((cqv(&v).unwrap() - cqv(&shifted).unwrap()).abs() > 1e-3);
    }

    fn best(i: f64, m: f64, a: f64) -> BestConditions {
        let kb = |kind, l| KindBest { kind, best_rho_lead: l, best_rho: 0.5, best_r2o2_lead: l, best_r2o2: 0.2 };
        BestConditions {
            kinds: vec![
                kb(ConditionKind::Instantaneous, i),
                kb(ConditionKind::WindowMax, m),
                kb(ConditionKind::WindowMean, a),
            ],
        }
    }

    #[test]
    fn group_examples() {
        assert_eq!(classify_group(&best(2.0, 2.0, 4.0)), Group::Group1);
        assert_eq!(classify_group(&best(4.0, 4.0, 8.5)), Group::Group2);
        assert_eq!(classify_group(&best(3.0, 3.0, 6.0)), Group::Group1);
        assert_eq!(classify_group(&best(0.5, 0.5, 0.5)), Group::Group1);
    }

    fn sweep_from(rhos: &[f64]) -> SweepResult {
        SweepResult {
            kind: ConditionKind::Instantaneous,
            samples: 10,
            records: rhos
                .iter()
                .enumerate()
                .map(|(i, &r)| SweepRecord { lead_hours: 0.5 * (i + 1) as f64, rho: r, r2_order1: r * r, r2_order2: r * r })
                .collect(),
        }
    }

    #[test]
    fn best_condition_rules() {
        let mut sweeps = vec![sweep_from(&[0.9, 0.8, 0.7, 0.1])];
        for kind in [ConditionKind::WindowMax, ConditionKind::WindowMean] {
            let mut s = sweep_from(&[0.1, 0.2, 0.6, 0.3, 0.2, 0.1, 0.2, 0.6]);
            s.kind = kind;
            sweeps.push(s);
        }
        let b = best_conditions(&sweeps).unwrap();
        assert_eq!(b.get(ConditionKind::Instantaneous).unwrap().best_rho_lead, 0.5);
        // equal maxima at 1.5 h and 4.0 h: the smaller lead wins
        assert_eq!(b.get(ConditionKind::WindowMax).unwrap().best_rho_lead, 1.5);
        assert_eq!(b.best_rho_condition(), TemperatureCondition::instantaneous(0.5));
        assert!(best_conditions(&sweeps[..1]).is_err());
    }

    fn days(n: usize, start: Instant) -> Vec<Instant> {
        (0..n * SLOTS_PER_DAY).map(|k| start.plus_steps(k as i64)).collect()
    }

    #[test]
    fn profile_constant_and_partition() {
        let t = days(7, Instant::from_ymd_hm(2016, 1, 4, 0, 0));
        let p = daily_profile(&t, &vec![3.0; t.len()], &CalendarConfig::default()).unwrap();
        for s in &p.slots {
            assert_eq!([s.p5, s.p25, s.p50, s.p75, s.p95], [3.0; 5]);
            assert_eq!(s.mean_weekday, Some(3.0));
            assert_eq!(s.mean_weekend, Some(3.0));
        }
        // two weeks of weekdays only (Mon 2016-01-04 .. Fri 2016-01-15)
        let weekdays: Vec<Instant> = days(12, Instant::from_ymd_hm(2016, 1, 4, 0, 0))
            .into_iter()
            .filter(|t| !matches!(t.weekday(), chrono::Weekday::Sat | chrono::Weekday::Sun))
            .collect();
        let vals: Vec<f64> = weekdays.iter().map(|t| t.date().day0() as f64).collect();
        let p = daily_profile(&weekdays, &vals, &CalendarConfig::default()).unwrap();
        assert!(p.slots.iter().all(|s| s.mean_weekend.is_none() && s.mean_weekday.is_some()));
        assert!(daily_profile(&t[..48 * 3], &vec![1.0; 48 * 3], &CalendarConfig::default()).is_err());
    }

    use chrono::Datelike;

    #[test]
    fn profile_percentiles_in_slot() {
        // 100 days, slot 0 carries 1..=100
        let t = days(100, Instant::from_ymd_hm(2016, 1, 1, 0, 0));
        let vals: Vec<f64> = t.iter().enumerate().map(|(k, _)| (k / SLOTS_PER_DAY + 1) as f64).collect();
        let p = daily_profile(&t, &vals, &CalendarConfig::default()).unwrap();
        assert_eq!(p.slots[0].p50, 50.5);
        assert!(p.slots.iter().all(|s| s.p5 <= s.p25 && s.p25 <= s.p50 && s.p50 <= s.p75 && s.p75 <= s.p95));
    }

    #[test]
    fn kde_properties() {
        let data = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
        let grid = kde_grid(&data, 401, 5.0).unwrap();
        let k = kde(&data, &grid).unwrap();
        assert!(k.density.iter().all(|&d| d >= 0.0));
        assert!((k.cumulative.last().unwrap() - 1.0).abs() < 0.01);
        assert!(k.cumulative.windows(2).all(|w| w[1] >= w[0]));
        for i in 0..grid.len() {
            assert_abs_diff_eq!(k.density[i], k.density[grid.len() - 1 - i], epsilon = 1e-9);
        }
        assert!(kde(&[1.0, 1.0, 1.0], &grid).is_err());
    }

    #[test]
    fn kde_mode_at_cluster() {
        let mut data = vec![0.0; 50];
        data.push(1e-3);
        data.push(-1e-3);
        data.push(5.0);
        let grid: Vec<f64> = (-100..=600).map(|i| i as f64 * 0.01).collect();
        let k = kde(&data, &grid).unwrap();
        let mode = grid[k.density.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0];
        // histogram oracle: the 0.1-wide bin around 0 holds 52 of 53 samples
        let bin = data.iter().filter(|v| v.abs() < 0.05).count();
        assert_eq!(bin, 52);
        assert!(mode.abs() < 0.05);
    }
}
