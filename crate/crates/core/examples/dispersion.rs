//! Daily load percentile bands, quartile dispersion and the density of
//! half-hourly loads.
//!
//! cargo run --release --example dispersion

use loadcast::experiments::{synth_generate, SynthSpec};
use loadcast::features::CalendarConfig;
use loadcast::stats::{cqv, daily_profile, kde, kde_grid};

fn main() -> loadcast::Result<()> {
    let out = synth_generate(&SynthSpec { seasons: 1, ..Default::default() })?;
    let values = out.load.values();
    let profile = daily_profile(&out.load.times(), &values, &CalendarConfig::default())?;
    for s in profile.slots.iter().step_by(6) {
        println!(
            "slot {:>2}: p5 {:5.2}  median {:5.2}  p95 {:5.2}  weekday {:5.2}  weekend {:5.2}",
            s.slot,
            s.p5,
            s.p50,
            s.p95,
            s.mean_weekday.unwrap_or(f64::NAN),
            s.mean_weekend.unwrap_or(f64::NAN)
        );
    }
    println!("CQV {:.4}", cqv(&values)?);
    let density = kde(&values, &kde_grid(&values, 64, 3.0)?)?;
    println!("KDE bandwidth {:.3} MW, mass {:.4}", density.bandwidth, density.cumulative.last().unwrap());
    Ok(())
}
