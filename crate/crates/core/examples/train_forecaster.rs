//! Train a small forecaster with the instantaneous 5-hour temperature,
//! save it, reload it and evaluate on the held-out seasons.
//!
//! cargo run --release --example train_forecaster

use loadcast::experiments::{evaluate, synth_generate, RunSetup, SynthSpec};
use loadcast::features::{make_dataset, TemperatureCondition, WindowSpec};
use loadcast::neural::{load_checkpoint, predict, save_checkpoint, train, Checkpoint};

fn main() -> loadcast::Result<()> {
    let data = synth_generate(&SynthSpec { seed: 3, ..Default::default() })?;
    let setup = RunSetup::desk(3);
    let window = WindowSpec::new(16, setup.window.scheme, &[TemperatureCondition::instantaneous(5.0)]).with_stride(4);
    let (train_set, test_set) =
        make_dataset(&data.load, &data.temp, &window, &setup.calendar, &setup.train_seasons, &setup.test_seasons)?;
    println!("{} training windows of shape {:?}", train_set.len(), train_set.windows[0].shape());

    let model = train(&train_set, &setup.train, &setup.model_for(&window))?;
    for (epoch, loss) in model.loss_trace.iter().enumerate() {
        println!("epoch {epoch:>2}: loss {loss:.5}");
    }

    let path = std::env::temp_dir().join("loadcast-example-model.json");
    save_checkpoint(&path, &Checkpoint { model, window: Some(window), calendar: Some(setup.calendar.clone()) })?;
    let restored = load_checkpoint(&path)?;
    let predicted = predict(&restored.model, &test_set)?;
    let m = evaluate(&test_set.target_times(), &test_set.targets_mw, &predicted, None)?;
    println!("test MAPE {:.2}%, MSE {:.3} MW², daily error variance {:.4} MW²", m.mape, m.mse, m.daily_error_variance);
    Ok(())
}
