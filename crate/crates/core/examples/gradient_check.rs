//! Compare back-propagated gradients with central finite differences for
//! small GRU and LSTM stacks.
//!
//! cargo run --release --example gradient_check

use loadcast::features::FeatureWindow;
use loadcast::neural::{compute_gradients, CellKind, ModelConfig, Network};
use loadcast::Instant;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> loadcast::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let windows: Vec<FeatureWindow> = (0..3)
        .map(|_| FeatureWindow {
            rows: 3,
            cols: 6,
            data: (0..18).map(|_| rng.random_range(0.0..1.0)).collect(),
            target: rng.random_range(0.0..1.0),
            target_time: Instant::from_epoch_minutes(0),
        })
        .collect();
    let batch: Vec<&FeatureWindow> = windows.iter().collect();

    for kind in [CellKind::Gru, CellKind::Lstm] {
        let cfg = ModelConfig { dense_sizes: vec![3, 1], ..ModelConfig::new(kind, 3).with_layers(&[4, 3]).with_seed(9) };
        let mut net = Network::new(&cfg)?;
        let analytic = compute_gradients(&batch, &net)?.values;
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..net.param_count() {
            let orig = net.params()[i];
            net.params_mut()[i] = orig + h;
            let up = compute_gradients(&batch, &net)?.loss;
            net.params_mut()[i] = orig - h;
            let down = compute_gradients(&batch, &net)?.loss;
            net.params_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let scale = analytic[i].abs().max(numeric.abs()).max(1e-2);
            worst = worst.max((analytic[i] - numeric).abs() / scale);
        }
        println!("{}: {} parameters, worst relative error {worst:.2e}", kind.name(), net.param_count());
    }
    Ok(())
}
