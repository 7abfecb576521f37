//! Compare day-label schemes on a station with a deep weekend dip and
//! a few public holidays.
//!
//! cargo run --release --example calendar_labels

use chrono::NaiveDate;
use loadcast::experiments::{step2_calendar_comparison, synth_generate, RunSetup, SynthSpec};
use loadcast::features::{CalendarConfig, DayLabelScheme, Season};

fn main() -> loadcast::Result<()> {
    let data = synth_generate(&SynthSpec { seasons: 2, weekend_factor: 0.7, seed: 2, ..Default::default() })?;
    let mut setup = RunSetup::desk(2);
    setup.train_seasons = [Season::new(2015)].into();
    setup.test_seasons = [Season::new(2016)].into();
    setup.calendar = CalendarConfig::with_holidays(
        ["2015-12-25", "2016-01-01", "2016-01-26", "2016-12-26", "2017-01-26"]
            .iter()
            .map(|d| d.parse::<NaiveDate>().unwrap()),
    );

    let schemes = [DayLabelScheme::None, DayLabelScheme::ThreeType, DayLabelScheme::EightType];
    let report = step2_calendar_comparison(&data.load, &data.temp, &setup, &schemes)?;
    print!("{}", report.to_csv());
    for r in &report.rows {
        if let Some(k) = &r.error_kde {
            let peak = k.grid[k.density.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0];
            println!("{:>10}: error density peaks at {peak:+.2}% (bandwidth {:.3})", r.scheme.name(), k.bandwidth);
        }
    }
    Ok(())
}
