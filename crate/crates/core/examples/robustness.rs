//! Retrain under the five season layouts and measure the off-peak
//! uptick's share of the error.
//!
//! cargo run --release --example robustness

use loadcast::experiments::{rotation_robustness, synth_generate, RotationPlan, RunSetup, SynthSpec};
use loadcast::time::TimeOfDayWindow;

fn main() -> loadcast::Result<()> {
    let data = synth_generate(&SynthSpec { seed: 6, ..Default::default() })?;
    let mut setup = RunSetup::desk(6);
    setup.train.epochs = 5;
    setup.window.stride = 8;
    setup.exclusion = Some(TimeOfDayWindow::off_peak_uptick());

    let report = rotation_robustness(&data.load, &data.temp, &setup, &RotationPlan::presets())?;
    print!("{}", report.to_csv());
    println!("MAPE spread across layouts: {:.1}%", report.mape_spread_pct);
    Ok(())
}
