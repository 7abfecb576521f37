//! Stacked recurrent layers with a dense head, stored in one flat
//! parameter vector.

use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cell::{
    gemv_acc, gemv_t_acc, gru_step, gru_step_backward, init_cell, lstm_step, lstm_step_backward, outer_acc,
    param_count, CellKind, CellWeights, GruStep, LstmStep,
};
use crate::error::{Error, Result};
use crate::features::FeatureWindow;

/// Architecture of the forecaster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub cell_kind: CellKind,
    /// Recurrent layer widths, bottom to top.
    pub layer_sizes: Vec<usize>,
    /// Dense head widths; the last must be 1. Hidden dense layers use tanh.
    pub dense_sizes: Vec<usize>,
    /// Feature rows per time step, `1 + m + k`.
    pub input_dim: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(cell_kind: CellKind, input_dim: usize) -> Self {
        ModelConfig { cell_kind, layer_sizes: vec![64, 64, 64], dense_sizes: vec![16, 1], input_dim, seed: 0 }
    }

    pub fn with_layers(mut self, layers: &[usize]) -> Self {
        self.layer_sizes = layers.to_vec();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.layer_sizes.is_empty() {
            return Err("at least one recurrent layer is required".into());
        }
        if self.layer_sizes.iter().chain(&self.dense_sizes).any(|&w| w == 0) || self.input_dim == 0 {
            return Err("all widths must be at least 1".into());
        }
        if self.dense_sizes.last() != Some(&1) {
            return Err("the last dense layer must have width 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct LayerSlot {
    input_dim: usize,
    hidden: usize,
    offset: usize,
    len: usize,
}

#[derive(Clone, Debug, PartialEq)]
struct DenseSlot {
    inputs: usize,
    outputs: usize,
    /// Weights at `offset`, biases right after.
    offset: usize,
}

impl DenseSlot {
    fn len(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }
}

/// A named parameter tensor inside the flat vector.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorInfo {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parameters and layout of a recurrent forecaster.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    config: ModelConfig,
    layers: Vec<LayerSlot>,
    dense: Vec<DenseSlot>,
    params: Vec<f64>,
}

struct LayerCache {
    /// `h_0 ..= h_n`
    hs: Vec<Vec<f64>>,
    /// `c_0 ..= c_n` for LSTM layers.
    cs: Vec<Vec<f64>>,
    gru: Vec<GruStep>,
    lstm: Vec<LstmStep>,
}

struct ForwardCache {
    layers: Vec<LayerCache>,
    /// Dense activations, starting with the top hidden state.
    dense_acts: Vec<Vec<f64>>,
    output: f64,
}

impl Network {
    /// All-zero parameters.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate().map_err(|m| Error::Invalid(format!("model config: {m}")))?;
        let mut layers = Vec::new();
        let mut offset = 0;
        let mut input_dim = config.input_dim;
        for &hidden in &config.layer_sizes {
            let len = param_count(config.cell_kind, input_dim, hidden);
            layers.push(LayerSlot { input_dim, hidden, offset, len });
            offset += len;
            input_dim = hidden;
        }
        let mut dense = Vec::new();
        for &outputs in &config.dense_sizes {
            let slot = DenseSlot { inputs: input_dim, outputs, offset };
            offset += slot.len();
            dense.push(slot);
            input_dim = outputs;
        }
        Ok(Network { config: config.clone(), layers, dense, params: vec![0.0; offset] })
    }

    /// Seeded initialisation: uniform `±1/√fan_in` per matrix, zero biases
    /// except the LSTM forget bias of 1.
    pub fn new(config: &ModelConfig) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for slot in &net.layers {
            init_cell(
                &mut net.params[slot.offset..slot.offset + slot.len],
                config.cell_kind,
                slot.input_dim,
                slot.hidden,
                &mut rng,
            );
        }
        for slot in &net.dense {
            let bound = 1.0 / (slot.inputs as f64).sqrt();
            for v in &mut net.params[slot.offset..slot.offset + slot.inputs * slot.outputs] {
                *v = rng.random_range(-bound..=bound);
            }
        }
        Ok(net)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Shape(format!("network has {} parameters, got {}", self.params.len(), params.len())));
        }
        self.params = params;
        Ok(())
    }

    /// Named tensors in storage order.
    pub fn tensors(&self) -> Vec<TensorInfo> {
        let mut out = Vec::new();
        let kind = self.config.cell_kind;
        for (l, slot) in self.layers.iter().enumerate() {
            let gate_len = slot.len / kind.gates();
            for (g, gname) in kind.gate_names().iter().enumerate() {
                let base = slot.offset + g * gate_len;
                let (h, i) = (slot.hidden, slot.input_dim);
                out.push(TensorInfo { name: format!("layer{l}.{gname}.w"), shape: vec![h, i], offset: base });
                out.push(TensorInfo { name: format!("layer{l}.{gname}.u"), shape: vec![h, h], offset: base + h * i });
                out.push(TensorInfo { name: format!("layer{l}.{gname}.b"), shape: vec![h], offset: base + h * i + h * h });
            }
        }
        for (d, slot) in self.dense.iter().enumerate() {
            out.push(TensorInfo { name: format!("dense{d}.w"), shape: vec![slot.outputs, slot.inputs], offset: slot.offset });
            out.push(TensorInfo {
                name: format!("dense{d}.b"),
                shape: vec![slot.outputs],
                offset: slot.offset + slot.inputs * slot.outputs,
            });
        }
        out
    }

    fn cell(&self, l: usize) -> CellWeights<'_> {
        let s = &self.layers[l];
        CellWeights::new(self.config.cell_kind, s.input_dim, s.hidden, &self.params[s.offset..s.offset + s.len])
            .expect("layout matches config")
    }

    fn sequence(&self, window: &FeatureWindow) -> Result<Vec<Vec<f64>>> {
        if window.rows != self.config.input_dim {
            return Err(Error::Shape(format!(
                "window has {} feature rows, model expects {}",
                window.rows, self.config.input_dim
            )));
        }
        if window.cols == 0 {
            return Err(Error::Shape("window has no time steps".into()));
        }
        Ok((0..window.cols).map(|c| window.column(c)).collect())
    }

    fn forward_cached(&self, seq: &[Vec<f64>]) -> ForwardCache {
        let mut inputs: Vec<Vec<f64>> = seq.to_vec();
        let mut layers = Vec::with_capacity(self.layers.len());
        for (l, slot) in self.layers.iter().enumerate() {
            let w = self.cell(l);
            let mut cache = LayerCache {
                hs: vec![vec![0.0; slot.hidden]],
                cs: vec![vec![0.0; slot.hidden]],
                gru: Vec::new(),
                lstm: Vec::new(),
            };
            for x in &inputs {
                let h_prev = cache.hs.last().unwrap();
                match self.config.cell_kind {
                    CellKind::Gru => {
                        let (h, step) = gru_step(x, h_prev, &w);
                        cache.gru.push(step);
                        cache.hs.push(h);
                    }
                    CellKind::Lstm => {
                        let (h, c, step) = lstm_step(x, h_prev, cache.cs.last().unwrap(), &w);
                        cache.lstm.push(step);
                        cache.hs.push(h);
                        cache.cs.push(c);
                    }
                }
            }
            inputs = cache.hs[1..].to_vec();
            layers.push(cache);
        }

        let mut dense_acts = vec![layers.last().unwrap().hs.last().unwrap().clone()];
        let last = self.dense.len() - 1;
        for (d, slot) in self.dense.iter().enumerate() {
            let w = &self.params[slot.offset..slot.offset + slot.inputs * slot.outputs];
            let b = &self.params[slot.offset + slot.inputs * slot.outputs..slot.offset + slot.len()];
            let mut z = b.to_vec();
            gemv_acc(w, slot.inputs, dense_acts.last().unwrap(), &mut z);
            if d < last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            dense_acts.push(z);
        }
        let output = dense_acts.last().unwrap()[0];
        ForwardCache { layers, dense_acts, output }
    }

    /// Accumulate `d output / d params · dy` into `grad`.
    fn backward(&self, seq: &[Vec<f64>], cache: &ForwardCache, dy: f64, grad: &mut [f64]) {
        let mut delta = vec![dy];
        let last = self.dense.len() - 1;
        for (d, slot) in self.dense.iter().enumerate().rev() {
            let a_in = &cache.dense_acts[d];
            if d < last {
                let a_out = &cache.dense_acts[d + 1];
                for (dv, a) in delta.iter_mut().zip(a_out) {
                    *dv *= 1.0 - a * a;
                }
            }
            let nw = slot.inputs * slot.outputs;
            let (gw, gb) = grad[slot.offset..slot.offset + slot.len()].split_at_mut(nw);
            outer_acc(gw, slot.inputs, &delta, a_in);
            gb.iter_mut().zip(&delta).for_each(|(b, d)| *b += d);
            let mut prev = vec![0.0; slot.inputs];
            gemv_t_acc(&self.params[slot.offset..slot.offset + nw], slot.inputs, &delta, &mut prev);
            delta = prev;
        }

        let n = seq.len();
        let top = self.layers.len() - 1;
        // gradient arriving at each h_t from above
        let mut external: Vec<Vec<f64>> = vec![vec![0.0; self.layers[top].hidden]; n];
        external[n - 1] = delta;
        for l in (0..self.layers.len()).rev() {
            let slot = &self.layers[l];
            let w = self.cell(l);
            let lc = &cache.layers[l];
            let layer_grad = &mut grad[slot.offset..slot.offset + slot.len];
            let mut dxs = vec![vec![0.0; slot.input_dim]; if l > 0 { n } else { 0 }];
            let mut scratch_dx = vec![0.0; slot.input_dim];
            let mut dh_next = vec![0.0; slot.hidden];
            let mut dc_next = vec![0.0; slot.hidden];
            for t in (0..n).rev() {
                let x: &[f64] = if l == 0 { &seq[t] } else { &cache.layers[l - 1].hs[t + 1] };
                let dh: Vec<f64> = external[t].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
                let dx = if l > 0 { &mut dxs[t] } else { &mut scratch_dx };
                match self.config.cell_kind {
                    CellKind::Gru => {
                        dh_next = gru_step_backward(x, &lc.hs[t], &lc.gru[t], &dh, &w, layer_grad, dx);
                    }
                    CellKind::Lstm => {
                        let (dhp, dcp) = lstm_step_backward(
                            x,
                            &lc.hs[t],
                            &lc.cs[t],
                            &lc.lstm[t],
                            &dh,
                            &dc_next,
                            &w,
                            layer_grad,
                            dx,
                        );
                        dh_next = dhp;
                        dc_next = dcp;
                    }
                }
            }
            external = dxs;
        }
    }

    /// Scaled prediction for one window.
    pub fn forward(&self, window: &FeatureWindow) -> Result<f64> {
        let seq = self.sequence(window)?;
        Ok(self.forward_cached(&seq).output)
    }
}

/// Scaled prediction for one window: columns are fed oldest to newest, the
/// final top-layer state goes through the dense head.
pub fn model_forward(window: &FeatureWindow, net: &Network) -> Result<f64> {
    net.forward(window)
}

/// Gradient of the batch-mean squared error.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub values: Vec<f64>,
    /// Mean squared error over the batch.
    pub loss: f64,
}

// Fixed chunking keeps the reduction order independent of thread count.
const GRAD_CHUNK: usize = 8;

/// Mean-squared-error loss and its gradient over a batch of scaled windows.
pub fn compute_gradients(batch: &[&FeatureWindow], net: &Network) -> Result<Gradients> {
    if batch.is_empty() {
        return Err(Error::InsufficientData("empty batch".into()));
    }
    let scale = 2.0 / batch.len() as f64;
    let partials: Vec<(Vec<f64>, f64)> = batch
        .par_chunks(GRAD_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut grad = vec![0.0; net.param_count()];
            let mut sq = 0.0;
            for (k, w) in chunk.iter().enumerate() {
                let seq = net.sequence(w)?;
                let cache = net.forward_cached(&seq);
                let resid = cache.output - w.target;
                if !resid.is_finite() {
                    return Err(Error::NonFiniteLoss { index: c * GRAD_CHUNK + k });
                }
                sq += resid * resid;
                net.backward(&seq, &cache, scale * resid, &mut grad);
            }
            Ok((grad, sq))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values = vec![0.0; net.param_count()];
    let mut sq = 0.0;
    for (g, s) in partials {
        values.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        sq += s;
    }
    Ok(Gradients { values, loss: sq / batch.len() as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Instant;

    fn window(rows: usize, cols: usize, data: Vec<f64>, target: f64) -> FeatureWindow {
        FeatureWindow { rows, cols, data, target, target_time: Instant::from_epoch_minutes(0) }
    }

    #[test]
    fn zero_network_outputs_final_bias() {
        let cfg = ModelConfig::new(CellKind::Gru, 3).with_layers(&[4, 4]);
        let mut net = Network::zeros(&cfg).unwrap();
        let n = net.param_count();
        net.params_mut()[n - 1] = 0.37;
        let w = window(3, 5, (0..15).map(|v| v as f64).collect(), 0.0);
        assert_eq!(model_forward(&w, &net).unwrap(), 0.37);
    }

    #[test]
    fn forward_is_deterministic() {
        let cfg = ModelConfig::new(CellKind::Lstm, 2).with_layers(&[5, 3]).with_seed(4);
        let net = Network::new(&cfg).unwrap();
        let w = window(2, 4, vec![0.1, 0.5, 0.2, 0.9, 1.0, 0.0, 0.3, 0.3], 0.0);
        assert_eq!(net.forward(&w).unwrap().to_bits(), net.forward(&w.clone()).unwrap().to_bits());
        assert_eq!(Network::new(&cfg).unwrap(), net);
    }

    #[test]
    fn hand_rollout_one_unit_gru() {
        // 1 feature, 1 GRU unit, dense [1] (linear), n = 2
        let cfg = ModelConfig { cell_kind: CellKind::Gru, layer_sizes: vec![1], dense_sizes: vec![1], input_dim: 1, seed: 0 };
        let mut net = Network::zeros(&cfg).unwrap();
        // gates: update (w,u,b), reset (w,u,b), candidate (w,u,b); dense w, b
        let p = [0.5, -0.3, 0.1, 0.2, 0.4, -0.1, 1.2, 0.7, 0.05, 2.0, -0.5];
        net.set_params(p.to_vec()).unwrap();
        let s = |v: f64| 1.0 / (1.0 + (-v).exp());
        let step = |x: f64, h: f64| {
            let z = s(p[0] * x + p[1] * h + p[2]);
            let r = s(p[3] * x + p[4] * h + p[5]);
            let c = (p[6] * x + p[7] * r * h + p[8]).tanh();
            (1.0 - z) * h + z * c
        };
        let (x1, x2) = (0.8, -0.6);
        let h2 = step(x2, step(x1, 0.0));
        let want = p[9] * h2 + p[10];
        let got = net.forward(&window(1, 2, vec![x1, x2], 0.0)).unwrap();
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let net = Network::new(&ModelConfig::new(CellKind::Gru, 3).with_layers(&[2])).unwrap();
        assert!(net.forward(&window(2, 2, vec![0.0; 4], 0.0)).is_err());
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let net = Network::new(&ModelConfig::new(CellKind::Gru, 2).with_layers(&[3]).with_seed(2)).unwrap();
        let mut w = window(2, 3, vec![0.2, 0.4, 0.1, 0.9, 0.5, 0.3], 0.0);
        w.target = net.forward(&w).unwrap();
        let g = compute_gradients(&[&w], &net).unwrap();
        assert_eq!(g.loss, 0.0);
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicated_batch_keeps_gradient() {
        let net = Network::new(&ModelConfig::new(CellKind::Lstm, 2).with_layers(&[3, 2]).with_seed(5)).unwrap();
        let a = window(2, 3, vec![0.2, 0.4, 0.1, 0.9, 0.5, 0.3], 0.7);
        let b = window(2, 3, vec![0.6, 0.1, 0.0, 0.2, 0.8, 0.4], 0.1);
        let g1 = compute_gradients(&[&a, &b], &net).unwrap();
        let g2 = compute_gradients(&[&a, &b, &a, &b], &net).unwrap();
        assert!((g1.loss - g2.loss).abs() < 1e-15);
        for (x, y) in g1.values.iter().zip(&g2.values) {
            assert!((x - y).abs() <= 1e-14 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn tensors_cover_all_params() {
        let net = Network::new(&ModelConfig::new(CellKind::Lstm, 4).with_layers(&[3, 2])).unwrap();
        let total: usize = net.tensors().iter().map(|t| t.len()).sum();
        assert_eq!(total, net.param_count());
        let t = net.tensors();
        for pair in t.windows(2) {
            assert_eq!(pair[0].offset + pair[0].len(), pair[1].offset);
        }
    }
}
