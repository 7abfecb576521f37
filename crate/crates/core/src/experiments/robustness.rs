//! Train/test season rotation.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::runner::{check_seeds, run_configuration, RunOutcome, RunSetup};
use crate::error::{Error, Result};
use crate::features::{Season, SplitTag};
use crate::ingest::{LoadSeries, TempSeries};

/// A season-by-season assignment to the train or test split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationPlan {
    pub name: String,
    pub assignments: Vec<(Season, SplitTag)>,
}

impl RotationPlan {
    pub fn new(name: impl Into<String>, assignments: &[(Season, SplitTag)]) -> Self {
        RotationPlan { name: name.into(), assignments: assignments.to_vec() }
    }

    fn seasons(&self, tag: SplitTag) -> BTreeSet<Season> {
        self.assignments.iter().filter(|a| a.1 == tag).map(|a| a.0).collect()
    }

    pub fn train_seasons(&self) -> BTreeSet<Season> {
        self.seasons(SplitTag::Train)
    }

    pub fn test_seasons(&self) -> BTreeSet<Season> {
        self.seasons(SplitTag::Test)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let distinct: BTreeSet<Season> = self.assignments.iter().map(|a| a.0).collect();
        if distinct.len() != self.assignments.len() {
            return Err(format!("plan `{}` assigns a season twice", self.name));
        }
        if self.train_seasons().is_empty() {
            return Err(format!("plan `{}` has no training season", self.name));
        }
        if self.test_seasons().is_empty() {
            return Err(format!("plan `{}` has no test season", self.name));
        }
        Ok(())
    }

    /// The five layouts over seasons 15-16 to 19-20: the original split
    /// and four rotations.
    pub fn presets() -> Vec<RotationPlan> {
        use SplitTag::{Test as E, Train as T};
        let layouts: [(&str, [SplitTag; 5]); 5] = [
            ("Original", [T, T, T, E, E]),
            ("Test 1", [E, E, T, T, T]),
            ("Test 2", [E, T, E, T, T]),
            ("Test 3", [E, T, T, E, T]),
            ("Test 4", [T, E, T, T, E]),
        ];
        layouts
            .iter()
            .map(|(name, tags)| {
                let a: Vec<(Season, SplitTag)> =
                    tags.iter().enumerate().map(|(i, &t)| (Season::new(2015 + i as i32), t)).collect();
                RotationPlan::new(*name, &a)
            })
            .collect()
    }

    pub fn preset(name: &str) -> Option<RotationPlan> {
        Self::presets().into_iter().find(|p| p.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationRow {
    pub plan: String,
    pub train_seasons: Vec<Season>,
    pub test_seasons: Vec<Season>,
    pub mse: f64,
    pub mape: f64,
    /// MAPE with the exclusion window left out.
    pub mape_excluding: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationReport {
    pub setup: RunSetup,
    pub plans: Vec<RotationPlan>,
    pub rows: Vec<RotationRow>,
    /// `(max − min) / min` of the MAPE across plans, percent.
    pub mape_spread_pct: f64,
    pub runs: Vec<RunOutcome>,
}

impl RotationReport {
    pub fn to_csv(&self) -> String {
        let join = |s: &[Season]| s.iter().map(Season::label).collect::<Vec<_>>().join(" ");
        let mut out = String::from("plan,train_seasons,test_seasons,mse,mape,mape_excluding\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.plan,
                join(&r.train_seasons),
                join(&r.test_seasons),
                r.mse,
                r.mape,
                r.mape_excluding.map(|v| v.to_string()).unwrap_or_default()
            );
        }
        out
    }
}

/// Retrain and evaluate under every plan with the setup's window and seeds.
/// The setup's own season split is ignored.
pub fn rotation_robustness(
    load: &LoadSeries,
    temp: &TempSeries,
    setup: &RunSetup,
    plans: &[RotationPlan],
) -> Result<RotationReport> {
    if plans.is_empty() {
        return Err(Error::config("robustness.plans", "needs at least one plan"));
    }
    for p in plans {
        p.validate().map_err(|m| Error::config("robustness.plans", m))?;
    }
    let runs = plans
        .par_iter()
        .map(|p| {
            let s = RunSetup { train_seasons: p.train_seasons(), test_seasons: p.test_seasons(), ..setup.clone() };
            run_configuration(load, temp, &s, &setup.window, p.name.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    check_seeds(setup, &runs)?;
    let rows: Vec<RotationRow> = plans
        .iter()
        .zip(&runs)
        .map(|(p, r)| RotationRow {
            plan: p.name.clone(),
            train_seasons: p.train_seasons().into_iter().collect(),
            test_seasons: p.test_seasons().into_iter().collect(),
            mse: r.metrics.mse,
            mape: r.metrics.mape,
            mape_excluding: r.metrics_excluding.as_ref().map(|m| m.mape),
        })
        .collect();
    let lo = rows.iter().map(|r| r.mape).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.mape).fold(f64::NEG_INFINITY, f64::max);
    Ok(RotationReport {
        setup: setup.clone(),
        plans: plans.to_vec(),
        rows,
        mape_spread_pct: (hi - lo) / lo * 100.0,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_layouts() {
        let p = RotationPlan::preset("test 1").unwrap();
        let labels = |s: BTreeSet<Season>| s.iter().map(Season::label).collect::<Vec<_>>();
        assert_eq!(labels(p.test_seasons()), ["15-16", "16-17"]);
        assert_eq!(labels(p.train_seasons()), ["17-18", "18-19", "19-20"]);
        let o = RotationPlan::preset("Original").unwrap();
        assert_eq!(labels(o.test_seasons()), ["18-19", "19-20"]);
        assert!(RotationPlan::presets().iter().all(|p| p.validate().is_ok()));
    }

    #[test]
    fn all_train_is_rejected() {
        let a: Vec<_> = (2015..2020).map(|y| (Season::new(y), SplitTag::Train)).collect();
        assert!(RotationPlan::new("x", &a).validate().is_err());
        let dup = [(Season::new(2015), SplitTag::Train), (Season::new(2015), SplitTag::Test)];
        assert!(RotationPlan::new("y", &dup).validate().is_err());
    }
}
