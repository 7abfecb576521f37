//! Annual saving from lowering forecast MAPE across a state's consumption.
//!
//! cargo run --example cost_benefit

use loadcast::experiments::{cost_benefit, CostBenefitInput};

fn main() -> loadcast::Result<()> {
    for (label, method, figs) in [("best correlation", 3.24, Some(2)), ("three temperatures", 3.42, Some(2)), ("best correlation, unrounded", 3.24, None)] {
        let r = cost_benefit(&CostBenefitInput {
            annual_consumption_twh: 44.3,
            mape_baseline: 3.86,
            mape_method: method,
            tariff_per_kwh: 0.298,
            round_sig_figs: figs,
        })?;
        println!("{label:>28}: {:.4} TWh -> AU${:.2} million per year", r.energy_reduction_twh, r.saving_millions);
    }
    Ok(())
}
