//! Sweep leads, then train the condition panel: no temperature,
//! simultaneous, and the strongest lead of each kind.
//!
//! cargo run --release --example temperature_conditions

use loadcast::experiments::{step3_panel, step3_temperature_conditions, sweep_all, synth_generate, RunSetup, SynthSpec};
use loadcast::features::Season;
use loadcast::stats::best_conditions;

fn main() -> loadcast::Result<()> {
    let data = synth_generate(&SynthSpec { seasons: 2, seed: 4, ..Default::default() })?;
    let best = best_conditions(&sweep_all(&data.load, &data.temp)?)?;
    let panel = step3_panel(&best);
    println!("panel: {}", panel.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", "));

    let mut setup = RunSetup::desk(4);
    setup.train_seasons = [Season::new(2015)].into();
    setup.test_seasons = [Season::new(2016)].into();
    let report = step3_temperature_conditions(&data.load, &data.temp, &setup, &panel, Some(&best))?;
    print!("{}", report.to_csv());
    println!(
        "best {}: MAPE {:.1}% below simultaneous, {:.1}% below no temperature",
        report.best_label, report.mape_reduction_vs_simultaneous_pct, report.mape_reduction_vs_none_pct
    );
    Ok(())
}
