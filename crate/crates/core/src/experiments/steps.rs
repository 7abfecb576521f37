//! The four study steps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::MetricsReport;
use super::runner::{check_seeds, run_configuration, RunOutcome, RunSetup};
use crate::error::{Error, Result};
use crate::features::{ConditionKind, DayLabelScheme, TemperatureCondition, WindowSpec};
use crate::ingest::{LoadSeries, StationData, TempSeries};
use crate::neural::CellKind;
use crate::stats::{
    best_conditions, classify_group, cqv, daily_profile, kde, kde_grid, lead_sweep, pearson, BestConditions,
    DailyProfile, Group, Kde, SweepResult,
};

fn pct_change(base: f64, value: f64) -> f64 {
    (base - value) / base * 100.0
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// The three lead sweeps for an aligned pair.
pub fn sweep_all(load: &LoadSeries, temp: &TempSeries) -> Result<Vec<SweepResult>> {
    ConditionKind::LEADING.iter().map(|&k| lead_sweep(load, temp, k)).collect()
}

// ---------------------------------------------------------------- step 1

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step1Row {
    pub n_points: usize,
    pub cell_kind: CellKind,
    pub mse: f64,
    pub mape: f64,
    pub daily_error_variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub cell_kind: CellKind,
    /// Shortest length whose MAPE is within 2% (relative) of the best.
    pub n_points: usize,
}

/// GRU improvement over LSTM at one length, percent of the LSTM value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellComparison {
    pub n_points: usize,
    pub mse_improvement_pct: f64,
    pub mape_improvement_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step1Report {
    pub setup: RunSetup,
    pub rows: Vec<Step1Row>,
    pub plateaus: Vec<Plateau>,
    pub gru_vs_lstm: Vec<CellComparison>,
    pub runs: Vec<RunOutcome>,
}

impl Step1Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_points,cell_kind,mse,mape,daily_error_variance\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.n_points, r.cell_kind.name(), r.mse, r.mape, r.daily_error_variance);
        }
        out
    }
}

/// Train one model per (input length, cell kind).
pub fn step1_input_length_sweep(
    load: &LoadSeries,
    temp: &TempSeries,
    setup: &RunSetup,
    lengths: &[usize],
    cell_kinds: &[CellKind],
) -> Result<Step1Report> {
    if lengths.is_empty() || cell_kinds.is_empty() {
        return Err(Error::config("step1", "needs at least one length and one cell kind"));
    }
    if let Some(&bad) = lengths.iter().find(|&&n| n == 0) {
        return Err(Error::config("step1.lengths", format!("length {bad} must be at least 1")));
    }
    let mut lengths = lengths.to_vec();
    lengths.sort_unstable();
    lengths.dedup();
    let configs: Vec<(CellKind, usize)> =
        cell_kinds.iter().flat_map(|&k| lengths.iter().map(move |&n| (k, n))).collect();
    let runs = configs
        .par_iter()
        .map(|&(kind, n)| {
            let mut s = setup.clone();
            s.model.cell_kind = kind;
            let window = WindowSpec { n_points: n, ..setup.window.clone() };
            run_configuration(load, temp, &s, &window, format!("{}-n{n}", kind.name()))
        })
        .collect::<Result<Vec<_>>>()?;
    check_seeds(setup, &runs)?;

    let rows: Vec<Step1Row> = configs
        .iter()
        .zip(&runs)
        .map(|(&(cell_kind, n_points), r)| Step1Row {
            n_points,
            cell_kind,
            mse: r.metrics.mse,
            mape: r.metrics.mape,
            daily_error_variance: r.metrics.daily_error_variance,
        })
        .collect();
    let mut plateaus = Vec::new();
    for &kind in cell_kinds {
        let of_kind: Vec<&Step1Row> = rows.iter().filter(|r| r.cell_kind == kind).collect();
        let best = of_kind.iter().map(|r| r.mape).fold(f64::INFINITY, f64::min);
        if let Some(r) = of_kind.iter().find(|r| r.mape <= best * 1.02) {
            plateaus.push(Plateau { cell_kind: kind, n_points: r.n_points });
        }
    }
    let find = |kind, n| rows.iter().find(|r| r.cell_kind == kind && r.n_points == n);
    let gru_vs_lstm = lengths
        .iter()
        .filter_map(|&n| {
            let (g, l) = (find(CellKind::Gru, n)?, find(CellKind::Lstm, n)?);
            Some(CellComparison {
                n_points: n,
                mse_improvement_pct: pct_change(l.mse, g.mse),
                mape_improvement_pct: pct_change(l.mape, g.mape),
            })
        })
        .collect();
    Ok(Step1Report { setup: setup.clone(), rows, plateaus, gru_vs_lstm, runs })
}

// ---------------------------------------------------------------- step 2

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step2Row {
    pub scheme: DayLabelScheme,
    pub metrics: MetricsReport,
    /// MAPE reduction relative to the unlabelled model, percent.
    pub mape_reduction_vs_none_pct: Option<f64>,
    /// Density of signed percentage errors.
    pub error_kde: Option<Kde>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step2Report {
    pub setup: RunSetup,
    pub rows: Vec<Step2Row>,
    pub runs: Vec<RunOutcome>,
}

impl Step2Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scheme,mse,mape,daily_error_variance,mape_reduction_vs_none_pct\n");
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.scheme.name(),
                m.mse,
                m.mape,
                m.daily_error_variance,
                opt(r.mape_reduction_vs_none_pct)
            );
        }
        out
    }

    /// Long-format KDE curves, one block per scheme.
    pub fn kde_csv(&self) -> String {
        let mut out = String::from("scheme,error_pct,density,cumulative\n");
        for r in &self.rows {
            if let Some(k) = &r.error_kde {
                for ((x, d), c) in k.grid.iter().zip(&k.density).zip(&k.cumulative) {
                    let _ = writeln!(out, "{},{x},{d},{c}", r.scheme.name());
                }
            }
        }
        out
    }
}

/// Compare day-label schemes with everything else fixed.
pub fn step2_calendar_comparison(
    load: &LoadSeries,
    temp: &TempSeries,
    setup: &RunSetup,
    schemes: &[DayLabelScheme],
) -> Result<Step2Report> {
    if schemes.is_empty() {
        return Err(Error::config("step2.schemes", "needs at least one scheme"));
    }
    let runs = schemes
        .par_iter()
        .map(|&scheme| {
            let window = WindowSpec { scheme, ..setup.window.clone() };
            run_configuration(load, temp, setup, &window, scheme.name())
        })
        .collect::<Result<Vec<_>>>()?;
    check_seeds(setup, &runs)?;
    let none_mape = schemes.iter().zip(&runs).find(|(s, _)| **s == DayLabelScheme::None).map(|(_, r)| r.metrics.mape);
    let rows = schemes
        .iter()
        .zip(&runs)
        .map(|(&scheme, r)| {
            let errors = r.forecast.signed_pct_errors();
            let error_kde = kde_grid(&errors, 200, 3.0).and_then(|g| kde(&errors, &g)).ok();
            Ok(Step2Row {
                scheme,
                metrics: r.metrics.clone(),
                mape_reduction_vs_none_pct: none_mape.map(|b| pct_change(b, r.metrics.mape)),
                error_kde,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Step2Report { setup: setup.clone(), rows, runs })
}

// ---------------------------------------------------------------- step 3

/// The default condition panel: no temperature, simultaneous, and the
/// best-ρ and best-r² lead of every kind, without duplicates.
pub fn step3_panel(best: &BestConditions) -> Vec<TemperatureCondition> {
    let mut panel = vec![TemperatureCondition::none(), TemperatureCondition::simultaneous()];
    for c in best.rho_conditions().into_iter().chain(best.r2o2_conditions()) {
        if !panel.iter().any(|p| p.canonical() == c.canonical()) {
            panel.push(c);
        }
    }
    panel
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step3Row {
    pub label: String,
    pub condition: TemperatureCondition,
    /// How the condition was chosen, e.g. `best_rho` or `rho:window_max`.
    pub roles: Vec<String>,
    pub metrics: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step3Report {
    pub setup: RunSetup,
    pub best_conditions: Option<BestConditions>,
    pub rows: Vec<Step3Row>,
    /// Lowest-MAPE leading condition.
    pub best_label: String,
    pub mape_reduction_vs_simultaneous_pct: f64,
    pub mape_reduction_vs_none_pct: f64,
    pub runs: Vec<RunOutcome>,
}

impl Step3Report {
    pub fn row(&self, role: &str) -> Option<&Step3Row> {
        self.rows.iter().find(|r| r.roles.iter().any(|x| x == role))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,kind,lead_hours,roles,mse,mape,daily_error_variance\n");
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.label,
                r.condition.kind.name(),
                r.condition.lead_hours,
                r.roles.join(" "),
                m.mse,
                m.mape,
                m.daily_error_variance
            );
        }
        out
    }

    /// Long-format daily mean-error profiles.
    pub fn profile_csv(&self) -> String {
        let mut out = String::from("condition,slot,mean_abs_pct_error,mean_abs_error_mw\n");
        for r in &self.rows {
            let m = &r.metrics;
            for (s, (p, mw)) in m.half_hourly_mean_abs_error.iter().zip(&m.half_hourly_mean_abs_error_mw).enumerate() {
                let _ = writeln!(out, "{},{s},{},{}", r.label, opt(*p), opt(*mw));
            }
        }
        out
    }
}

fn roles_of(c: &TemperatureCondition, best: Option<&BestConditions>) -> Vec<String> {
    let mut roles = Vec::new();
    match c.kind {
        ConditionKind::None => roles.push("none".to_string()),
        ConditionKind::Simultaneous => roles.push("simultaneous".to_string()),
        _ => {}
    }
    if let Some(b) = best {
        let key = c.canonical();
        if b.best_rho_condition().canonical() == key {
            roles.push("best_rho".into());
        }
        for k in &b.kinds {
            if TemperatureCondition::new(k.kind, k.best_rho_lead).canonical() == key {
                roles.push(format!("rho:{}", k.kind.name()));
            }
            if TemperatureCondition::new(k.kind, k.best_r2o2_lead).canonical() == key {
                roles.push(format!("r2o2:{}", k.kind.name()));
            }
        }
    }
    roles
}

/// One model per temperature condition. The panel must contain the
/// `none` and `simultaneous` baselines.
pub fn step3_temperature_conditions(
    load: &LoadSeries,
    temp: &TempSeries,
    setup: &RunSetup,
    conditions: &[TemperatureCondition],
    best: Option<&BestConditions>,
) -> Result<Step3Report> {
    for (kind, name) in [(ConditionKind::None, "none"), (ConditionKind::Simultaneous, "simultaneous")] {
        if !conditions.iter().any(|c| c.kind == kind) {
            return Err(Error::config("step3.conditions", format!("must include the `{name}` baseline")));
        }
    }
    for c in conditions {
        c.validate().map_err(|m| Error::config("step3.conditions", m))?;
    }
    let runs = conditions
        .par_iter()
        .map(|c| {
            let window = WindowSpec::new(setup.window.n_points, setup.window.scheme, &[*c]).with_stride(setup.window.stride);
            run_configuration(load, temp, setup, &window, c.to_string())
        })
        .collect::<Result<Vec<_>>>()?;
    check_seeds(setup, &runs)?;
    let rows: Vec<Step3Row> = conditions
        .iter()
        .zip(&runs)
        .map(|(c, r)| Step3Row {
            label: c.to_string(),
            condition: *c,
            roles: roles_of(c, best),
            metrics: r.metrics.clone(),
        })
        .collect();
    let mape_of = |kind| rows.iter().find(|r| r.condition.kind == kind).map(|r| r.metrics.mape).unwrap();
    let leading: Vec<&Step3Row> = rows.iter().filter(|r| ConditionKind::LEADING.contains(&r.condition.kind)).collect();
    let pool = if leading.is_empty() { rows.iter().collect() } else { leading };
    let best_row = pool.iter().min_by(|a, b| a.metrics.mape.total_cmp(&b.metrics.mape)).unwrap();
    Ok(Step3Report {
        setup: setup.clone(),
        best_conditions: best.cloned(),
        best_label: best_row.label.clone(),
        mape_reduction_vs_simultaneous_pct: pct_change(mape_of(ConditionKind::Simultaneous), best_row.metrics.mape),
        mape_reduction_vs_none_pct: pct_change(mape_of(ConditionKind::None), best_row.metrics.mape),
        rows,
        runs,
    })
}

// ---------------------------------------------------------------- step 4

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub sigma2: f64,
    pub mse: f64,
    pub mape: f64,
}

impl From<&MetricsReport> for MetricTriple {
    fn from(m: &MetricsReport) -> Self {
        MetricTriple { sigma2: m.daily_error_variance, mse: m.mse, mape: m.mape }
    }
}

/// One station's row of the three-condition comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub station: String,
    pub group: Group,
    pub best_condition: TemperatureCondition,
    pub combination: Vec<TemperatureCondition>,
    /// The combination reduced to the best-ρ condition and was not retrained.
    pub combination_collapsed: bool,
    pub no_temp: MetricTriple,
    pub best_correl: MetricTriple,
    pub three_temps: MetricTriple,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationSummary {
    pub station: String,
    pub best_conditions: BestConditions,
    pub group: Group,
    /// Coefficient of quartile variation of the load.
    pub load_cqv: Option<f64>,
    pub profile: Option<DailyProfile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorCorrelation {
    pub factor: String,
    /// Column of the table the MAPE came from.
    pub condition: String,
    pub rho: f64,
    pub stations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub station: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step4Report {
    pub setup: RunSetup,
    pub rows: Vec<Table2Row>,
    pub stations: Vec<StationSummary>,
    pub factor_correlations: Vec<FactorCorrelation>,
    pub skipped: Vec<Skipped>,
}

impl Step4Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "station,group,best_condition,combination_collapsed,\
             no_temp_sigma2,no_temp_mse,no_temp_mape,\
             best_correl_sigma2,best_correl_mse,best_correl_mape,\
             three_temps_sigma2,three_temps_mse,three_temps_mape\n",
        );
        for r in &self.rows {
            let t = |m: &MetricTriple| format!("{},{},{}", m.sigma2, m.mse, m.mape);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.station,
                match r.group {
                    Group::Group1 => "group1",
                    Group::Group2 => "group2",
                },
                r.best_condition,
                r.combination_collapsed,
                t(&r.no_temp),
                t(&r.best_correl),
                t(&r.three_temps)
            );
        }
        out
    }
}

/// Sweep, classify and train the three-condition panel at every station.
pub fn step4_generalise(stations: &[StationData], setup: &RunSetup) -> Result<Step4Report> {
    if stations.is_empty() {
        return Err(Error::config("stations", "step4 needs at least one station"));
    }
    let analysed: Vec<std::result::Result<StationSummary, Skipped>> = stations
        .par_iter()
        .map(|s| {
            let id = s.meta.station_id.clone();
            let skip = |e: Error| Skipped { station: id.clone(), reason: e.to_string() };
            let sweeps = sweep_all(&s.load, &s.temp).map_err(skip)?;
            let best = best_conditions(&sweeps).map_err(skip)?;
            let values = s.load.values();
            Ok(StationSummary {
                station: id.clone(),
                group: classify_group(&best),
                best_conditions: best,
                load_cqv: cqv(&values).ok(),
                profile: daily_profile(&s.load.times(), &values, &setup.calendar).ok(),
            })
        })
        .collect();
    let mut summaries = Vec::new();
    let mut skipped = Vec::new();
    let mut kept = Vec::new();
    for (s, a) in stations.iter().zip(analysed) {
        match a {
            Ok(summary) => {
                kept.push(s);
                summaries.push(summary);
            }
            Err(skip) => {
                log::warn!("skipping station {}: {}", skip.station, skip.reason);
                skipped.push(skip);
            }
        }
    }

    let rows = kept
        .par_iter()
        .zip(summaries.par_iter())
        .map(|(s, summary)| {
            let w = &setup.window;
            let window = |conds: &[TemperatureCondition]| WindowSpec::new(w.n_points, w.scheme, conds).with_stride(w.stride);
            let best = summary.best_conditions.best_rho_condition();
            let combination = summary.group.combination();
            let collapsed = window(&combination).conditions.iter().map(|c| c.canonical()).collect::<Vec<_>>()
                == vec![best.canonical()];
            let id = &summary.station;
            let none = run_configuration(&s.load, &s.temp, setup, &window(&[]), format!("{id}:none"));
            let single = run_configuration(&s.load, &s.temp, setup, &window(&[best]), format!("{id}:{best}"));
            let (none, single) = (none?, single?);
            let triple = if collapsed {
                single.clone()
            } else {
                run_configuration(&s.load, &s.temp, setup, &window(&combination), format!("{id}:three"))?
            };
            check_seeds(setup, [&none, &single, &triple])?;
            Ok(Table2Row {
                station: id.clone(),
                group: summary.group,
                best_condition: best,
                combination,
                combination_collapsed: collapsed,
                no_temp: (&none.metrics).into(),
                best_correl: (&single.metrics).into(),
                three_temps: (&triple.metrics).into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let factor_correlations = factor_correlations(&kept, &rows);
    Ok(Step4Report { setup: setup.clone(), rows, stations: summaries, factor_correlations, skipped })
}

fn factor_correlations(stations: &[&StationData], rows: &[Table2Row]) -> Vec<FactorCorrelation> {
    let mut factors: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    for (i, s) in stations.iter().enumerate() {
        for (name, &v) in &s.meta.region_factors {
            factors.entry(name).or_default().push((i, v));
        }
    }
    let columns: [(&str, fn(&Table2Row) -> f64); 3] = [
        ("no_temp", |r| r.no_temp.mape),
        ("best_correl", |r| r.best_correl.mape),
        ("three_temps", |r| r.three_temps.mape),
    ];
    let mut out = Vec::new();
    for (factor, pairs) in factors {
        let x: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        for (column, get) in columns {
            let y: Vec<f64> = pairs.iter().map(|p| get(&rows[p.0])).collect();
            match pearson(&x, &y) {
                Ok(rho) => out.push(FactorCorrelation {
                    factor: factor.to_string(),
                    condition: column.to_string(),
                    rho,
                    stations: x.len(),
                }),
                Err(e) => log::warn!("no correlation for factor {factor} ({column}): {e}"),
            }
        }
    }
    out
}
