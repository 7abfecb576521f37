//! Annual saving from a MAPE reduction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostBenefitInput {
    pub annual_consumption_twh: f64,
    pub mape_baseline: f64,
    pub mape_method: f64,
    /// Currency per kWh.
    pub tariff_per_kwh: f64,
    /// Significant figures kept in the energy reduction.
    #[serde(default)]
    pub round_sig_figs: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBenefit {
    pub energy_reduction_twh: f64,
    /// Currency per year.
    pub saving: f64,
    pub saving_millions: f64,
}

pub fn round_sig_figs(x: f64, figs: u32) -> f64 {
    if x == 0.0 || !x.is_finite() || figs == 0 {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32 + 1;
    let scale = 10f64.powi(figs as i32 - magnitude);
    (x * scale).round() / scale
}

pub fn cost_benefit(input: &CostBenefitInput) -> Result<CostBenefit> {
    let CostBenefitInput { annual_consumption_twh: e, mape_baseline: b, mape_method: m, tariff_per_kwh: t, .. } =
        *input;
    for (name, v) in [("annual_consumption_twh", e), ("mape_method", m), ("tariff_per_kwh", t)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::config(format!("cost_benefit.{name}"), format!("must be non-negative, got {v}")));
        }
    }
    if !(b >= m) {
        return Err(Error::Invalid(format!("negative reduction: baseline MAPE {b} is below method MAPE {m}")));
    }
    let mut reduction = e * (b - m) / 100.0;
    if let Some(figs) = input.round_sig_figs {
        reduction = round_sig_figs(reduction, figs);
    }
    let saving = reduction * 1e9 * t;
    Ok(CostBenefit { energy_reduction_twh: reduction, saving, saving_millions: saving / 1e6 })
}
