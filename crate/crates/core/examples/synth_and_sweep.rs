//! Generate a station with a planted 5-hour lead and recover it with the
//! lead sweep.
//!
//! cargo run --release --example synth_and_sweep

use loadcast::experiments::{sweep_all, synth_generate, SynthSpec};
use loadcast::stats::{best_conditions, classify_group};

fn main() -> loadcast::Result<()> {
    let spec = SynthSpec { days: Some(90), snr: Some(5.0), seed: 42, ..Default::default() };
    let out = synth_generate(&spec)?;
    println!("generated {} half-hours, planted lag {:?} h", out.load.len(), out.truth.planted_lag_hours);

    let sweeps = sweep_all(&out.load, &out.temp)?;
    for s in &sweeps {
        let top = s.records.iter().max_by(|a, b| a.rho.total_cmp(&b.rho)).unwrap();
        println!("{:>13}: best rho {:.3} at {:>4} h", s.kind.name(), top.rho, top.lead_hours);
    }
    let best = best_conditions(&sweeps)?;
    println!("best condition {}, group {:?}", best.best_rho_condition(), classify_group(&best));
    Ok(())
}
