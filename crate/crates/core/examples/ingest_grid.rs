//! Round-trip station data through the on-disk formats: write a coarse
//! 3-hourly temperature grid and a load CSV, then interpolate, extract the
//! station point and align.
//!
//! cargo run --release --example ingest_grid

use loadcast::experiments::{synth_generate, SynthSpec};
use loadcast::ingest::{load_station, write_load_csv, write_temp_grid, StationMeta, TempGrid, TempSource};

fn main() -> loadcast::Result<()> {
    let dir = std::env::temp_dir().join("loadcast-ingest-example");
    std::fs::create_dir_all(&dir).map_err(|e| loadcast::Error::io("creating example dir", e))?;
    let synth = synth_generate(&SynthSpec { days: Some(14), ..Default::default() })?;

    // 2 x 2 grid around the station, every sixth half-hour, warmer to the north-east.
    let (lats, lons) = (vec![-38.0, -37.5], vec![144.5, 145.0]);
    let coarse: Vec<_> = synth.temp.points.iter().step_by(6).collect();
    let mut values = Vec::new();
    for (_, t) in &coarse {
        for i in 0..2 {
            for j in 0..2 {
                values.push(t + i as f64 + 0.5 * j as f64);
            }
        }
    }
    let grid = TempGrid::new(lats, lons, coarse.iter().map(|p| p.0).collect(), values)?;
    let grid_path = dir.join("grid.txt");
    let load_path = dir.join("load.csv");
    write_temp_grid(&grid_path, &grid)?;
    write_load_csv(&load_path, &synth.load)?;

    let meta = StationMeta { station_id: "dn01".into(), lat: -37.75, lon: 144.75, region_factors: Default::default() };
    let station = load_station(meta, &load_path, &TempSource::Grid(grid_path))?;
    println!("aligned {} samples", station.load.len());
    // At grid times the bilinear weights are all 1/4, so the extracted
    // value sits 0.75 C above the source series.
    for (p, q) in station.temp.points.iter().zip(&synth.temp.points).step_by(6).take(6) {
        println!("{}  extracted {:6.2} C  source {:6.2} C", p.0, p.1, q.1);
    }
    Ok(())
}
