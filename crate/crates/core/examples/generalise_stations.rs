//! Four synthetic stations, two per correlation group: classify each and
//! build the three-condition comparison table.
//!
//! cargo run --release --example generalise_stations

use loadcast::experiments::{group_spec, step4_generalise, synth_generate, RunSetup, SynthSpec};
use loadcast::features::Season;
use loadcast::ingest::{StationData, StationMeta};
use loadcast::stats::Group;

fn main() -> loadcast::Result<()> {
    let mut stations = Vec::new();
    for (k, group) in [Group::Group1, Group::Group1, Group::Group2, Group::Group2].into_iter().enumerate() {
        let spec = SynthSpec { seasons: 2, ..group_spec(group, k as u64) };
        let out = synth_generate(&spec)?;
        let mut meta = StationMeta { station_id: spec.station_id, lat: 0.0, lon: 0.0, region_factors: Default::default() };
        meta.region_factors.insert("rural_share".into(), 0.2 * k as f64);
        stations.push(StationData { meta, load: out.load, temp: out.temp });
    }
    let mut setup = RunSetup::desk(0);
    setup.train_seasons = [Season::new(2015)].into();
    setup.test_seasons = [Season::new(2016)].into();

    let report = step4_generalise(&stations, &setup)?;
    print!("{}", report.to_csv());
    for f in &report.factor_correlations {
        println!("MAPE ({}) vs {}: rho = {:.3}", f.condition, f.factor, f.rho);
    }
    Ok(())
}
