//! Compare input lengths and cell types.
//!
//! cargo run --release --example input_length

use loadcast::experiments::{step1_input_length_sweep, synth_generate, RunSetup, SynthSpec};
use loadcast::features::Season;
use loadcast::neural::CellKind;

fn main() -> loadcast::Result<()> {
    let data = synth_generate(&SynthSpec { seasons: 2, seed: 1, ..Default::default() })?;
    let mut setup = RunSetup::desk(1);
    setup.train_seasons = [Season::new(2015)].into();
    setup.test_seasons = [Season::new(2016)].into();

    let report = step1_input_length_sweep(&data.load, &data.temp, &setup, &[4, 16, 32], &[CellKind::Gru, CellKind::Lstm])?;
    print!("{}", report.to_csv());
    for p in &report.plateaus {
        println!("{} plateau at n = {}", p.cell_kind.name(), p.n_points);
    }
    for c in &report.gru_vs_lstm {
        println!("n = {:>2}: GRU better by {:.1}% MSE, {:.1}% MAPE", c.n_points, c.mse_improvement_pct, c.mape_improvement_pct);
    }
    Ok(())
}
