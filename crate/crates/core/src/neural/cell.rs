//! GRU and LSTM cells: forward steps and their hand-derived backward passes.
//!
//! Each cell stores its gates back to back; a gate is `W` (hidden × input),
//! `U` (hidden × hidden) and `b` (hidden), all row-major.
//!
//! GRU (gate order update, reset, candidate):
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! h~ = tanh(W_h x + U_h (r ∘ h) + b_h)
//! h' = (1 - z) ∘ h + z ∘ h~
//! ```
//!
//! LSTM (gate order input, forget, output, candidate), no peepholes:
//!
//! ```text
//! c' = f ∘ c + i ∘ g
//! h' = o ∘ tanh(c')
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Gru,
    Lstm,
}

impl CellKind {
    pub fn gates(self) -> usize {
        match self {
            CellKind::Gru => 3,
            CellKind::Lstm => 4,
        }
    }

    pub fn gate_names(self) -> &'static [&'static str] {
        match self {
            CellKind::Gru => &["update", "reset", "candidate"],
            CellKind::Lstm => &["input", "forget", "output", "candidate"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Gru => "gru",
            CellKind::Lstm => "lstm",
        }
    }
}

pub(crate) const LSTM_FORGET: usize = 1;

pub fn param_count(kind: CellKind, input_dim: usize, hidden: usize) -> usize {
    kind.gates() * gate_len(input_dim, hidden)
}

fn gate_len(input_dim: usize, hidden: usize) -> usize {
    hidden * input_dim + hidden * hidden + hidden
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `out += M x` for a row-major `rows × cols` matrix.
#[inline]
pub(crate) fn gemv_acc(m: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += Mᵀ v`.
#[inline]
pub(crate) fn gemv_t_acc(m: &[f64], cols: usize, v: &[f64], out: &mut [f64]) {
    for (&vr, row) in v.iter().zip(m.chunks_exact(cols)) {
        if vr != 0.0 {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vr;
            }
        }
    }
}

/// `g += v xᵀ`.
#[inline]
pub(crate) fn outer_acc(g: &mut [f64], cols: usize, v: &[f64], x: &[f64]) {
    for (&vr, row) in v.iter().zip(g.chunks_exact_mut(cols)) {
        if vr != 0.0 {
            for (o, a) in row.iter_mut().zip(x) {
                *o += vr * a;
            }
        }
    }
}

/// Borrowed view of one gate.
#[derive(Clone, Copy, Debug)]
pub struct Gate<'a> {
    pub w: &'a [f64],
    pub u: &'a [f64],
    pub b: &'a [f64],
}

struct GateMut<'a> {
    w: &'a mut [f64],
    u: &'a mut [f64],
    b: &'a mut [f64],
}

/// Borrowed view of one cell's parameters.
#[derive(Clone, Copy, Debug)]
pub struct CellWeights<'a> {
    pub kind: CellKind,
    pub input_dim: usize,
    pub hidden: usize,
    data: &'a [f64],
}

impl<'a> CellWeights<'a> {
    pub fn new(kind: CellKind, input_dim: usize, hidden: usize, data: &'a [f64]) -> Result<Self> {
        let want = param_count(kind, input_dim, hidden);
        if data.len() != want {
            return Err(Error::Shape(format!("{} cell needs {want} parameters, got {}", kind.name(), data.len())));
        }
        Ok(CellWeights { kind, input_dim, hidden, data })
    }

    pub fn gate(&self, g: usize) -> Gate<'a> {
        let (i, h) = (self.input_dim, self.hidden);
        let chunk = &self.data[g * gate_len(i, h)..(g + 1) * gate_len(i, h)];
        let (w, rest) = chunk.split_at(h * i);
        let (u, b) = rest.split_at(h * h);
        Gate { w, u, b }
    }

    /// `W x + U hu + b` for gate `g`.
    fn preactivation(&self, g: usize, x: &[f64], hu: &[f64]) -> Vec<f64> {
        let gate = self.gate(g);
        let mut a = gate.b.to_vec();
        gemv_acc(gate.w, self.input_dim, x, &mut a);
        gemv_acc(gate.u, self.hidden, hu, &mut a);
        a
    }
}

fn gate_mut(data: &mut [f64], g: usize, input_dim: usize, hidden: usize) -> GateMut<'_> {
    let len = gate_len(input_dim, hidden);
    let chunk = &mut data[g * len..(g + 1) * len];
    let (w, rest) = chunk.split_at_mut(hidden * input_dim);
    let (u, b) = rest.split_at_mut(hidden * hidden);
    GateMut { w, u, b }
}

/// Owned parameters of one GRU or LSTM cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellParams {
    pub kind: CellKind,
    pub input_dim: usize,
    pub hidden: usize,
    pub values: Vec<f64>,
}

pub type GruParams = CellParams;
pub type LstmParams = CellParams;

impl CellParams {
    pub fn zeros(kind: CellKind, input_dim: usize, hidden: usize) -> Self {
        CellParams { kind, input_dim, hidden, values: vec![0.0; param_count(kind, input_dim, hidden)] }
    }

    /// Uniform `±1/√fan_in` weights, zero biases (LSTM forget bias 1).
    pub fn init(kind: CellKind, input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(kind, input_dim, hidden);
        init_cell(&mut p.values, kind, input_dim, hidden, rng);
        p
    }

    pub fn weights(&self) -> CellWeights<'_> {
        CellWeights { kind: self.kind, input_dim: self.input_dim, hidden: self.hidden, data: &self.values }
    }

    pub fn gate_mut(&mut self, g: usize) -> (&mut [f64], &mut [f64], &mut [f64]) {
        let gm = gate_mut(&mut self.values, g, self.input_dim, self.hidden);
        (gm.w, gm.u, gm.b)
    }
}

pub(crate) fn init_cell(data: &mut [f64], kind: CellKind, input_dim: usize, hidden: usize, rng: &mut impl Rng) {
    let bw = 1.0 / (input_dim as f64).sqrt();
    let bu = 1.0 / (hidden as f64).sqrt();
    for g in 0..kind.gates() {
        let gm = gate_mut(data, g, input_dim, hidden);
        gm.w.iter_mut().for_each(|v| *v = rng.random_range(-bw..=bw));
        gm.u.iter_mut().for_each(|v| *v = rng.random_range(-bu..=bu));
        let bias = if kind == CellKind::Lstm && g == LSTM_FORGET { 1.0 } else { 0.0 };
        gm.b.iter_mut().for_each(|v| *v = bias);
    }
}

fn check_dims(w: &CellWeights<'_>, kind: CellKind, x: &[f64], h: &[f64]) -> Result<()> {
    if w.kind != kind {
        return Err(Error::Shape(format!("expected {} weights, got {}", kind.name(), w.kind.name())));
    }
    if x.len() != w.input_dim || h.len() != w.hidden {
        return Err(Error::Shape(format!(
            "cell expects input {} / hidden {}, got {} / {}",
            w.input_dim,
            w.hidden,
            x.len(),
            h.len()
        )));
    }
    Ok(())
}

/// Activations kept for the backward pass of one GRU step.
#[derive(Clone, Debug)]
pub(crate) struct GruStep {
    z: Vec<f64>,
    r: Vec<f64>,
    cand: Vec<f64>,
    rh: Vec<f64>,
}

pub(crate) fn gru_step(x: &[f64], h_prev: &[f64], w: &CellWeights<'_>) -> (Vec<f64>, GruStep) {
    let z: Vec<f64> = w.preactivation(0, x, h_prev).into_iter().map(sigmoid).collect();
    let r: Vec<f64> = w.preactivation(1, x, h_prev).into_iter().map(sigmoid).collect();
    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
    let cand: Vec<f64> = w.preactivation(2, x, &rh).into_iter().map(f64::tanh).collect();
    let h = (0..w.hidden).map(|k| (1.0 - z[k]) * h_prev[k] + z[k] * cand[k]).collect();
    (h, GruStep { z, r, cand, rh })
}

/// Backward through one GRU step. Accumulates parameter gradients into
/// `grad`, input gradients into `dx`, and returns the gradient for `h_prev`.
pub(crate) fn gru_step_backward(
    x: &[f64],
    h_prev: &[f64],
    step: &GruStep,
    dh: &[f64],
    w: &CellWeights<'_>,
    grad: &mut [f64],
    dx: &mut [f64],
) -> Vec<f64> {
    let (i, h) = (w.input_dim, w.hidden);
    let mut da_z = vec![0.0; h];
    let mut da_c = vec![0.0; h];
    let mut dh_prev = vec![0.0; h];
    for k in 0..h {
        let z = step.z[k];
        da_z[k] = dh[k] * (step.cand[k] - h_prev[k]) * z * (1.0 - z);
        da_c[k] = dh[k] * z * (1.0 - step.cand[k] * step.cand[k]);
        dh_prev[k] = dh[k] * (1.0 - z);
    }
    let cand_gate = w.gate(2);
    let mut drh = vec![0.0; h];
    gemv_t_acc(cand_gate.u, h, &da_c, &mut drh);
    let mut da_r = vec![0.0; h];
    for k in 0..h {
        let r = step.r[k];
        da_r[k] = drh[k] * h_prev[k] * r * (1.0 - r);
        dh_prev[k] += drh[k] * r;
    }

    for (g, da, hu) in [(0, &da_z, h_prev), (1, &da_r, h_prev), (2, &da_c, &step.rh[..])] {
        let gate = w.gate(g);
        gemv_t_acc(gate.w, i, da, dx);
        if g < 2 {
            gemv_t_acc(gate.u, h, da, &mut dh_prev);
        }
        let gm = gate_mut(grad, g, i, h);
        outer_acc(gm.w, i, da, x);
        outer_acc(gm.u, h, da, hu);
        gm.b.iter_mut().zip(da.iter()).for_each(|(b, d)| *b += d);
    }
    dh_prev
}

/// One GRU step.
pub fn gru_cell_forward(x: &[f64], h_prev: &[f64], w: &CellWeights<'_>) -> Result<Vec<f64>> {
    check_dims(w, CellKind::Gru, x, h_prev)?;
    Ok(gru_step(x, h_prev, w).0)
}

#[derive(Clone, Debug)]
pub(crate) struct LstmStep {
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    tanh_c: Vec<f64>,
}

pub(crate) fn lstm_step(x: &[f64], h_prev: &[f64], c_prev: &[f64], w: &CellWeights<'_>) -> (Vec<f64>, Vec<f64>, LstmStep) {
    let act = |g: usize, f: fn(f64) -> f64| -> Vec<f64> { w.preactivation(g, x, h_prev).into_iter().map(f).collect() };
    let i = act(0, sigmoid);
    let f = act(1, sigmoid);
    let o = act(2, sigmoid);
    let g = act(3, f64::tanh);
    let c: Vec<f64> = (0..w.hidden).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h = (0..w.hidden).map(|k| o[k] * tanh_c[k]).collect();
    (h, c, LstmStep { i, f, o, g, tanh_c })
}

/// Backward through one LSTM step; returns `(dh_prev, dc_prev)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn lstm_step_backward(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    step: &LstmStep,
    dh: &[f64],
    dc_next: &[f64],
    w: &CellWeights<'_>,
    grad: &mut [f64],
    dx: &mut [f64],
) -> (Vec<f64>, Vec<f64>) {
    let (n_in, h) = (w.input_dim, w.hidden);
    let mut da = [vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]];
    let mut dc_prev = vec![0.0; h];
    for k in 0..h {
        let tc = step.tanh_c[k];
        let dc = dc_next[k] + dh[k] * step.o[k] * (1.0 - tc * tc);
        let (i, f, o, g) = (step.i[k], step.f[k], step.o[k], step.g[k]);
        da[0][k] = dc * g * i * (1.0 - i);
        da[1][k] = dc * c_prev[k] * f * (1.0 - f);
        da[2][k] = dh[k] * tc * o * (1.0 - o);
        da[3][k] = dc * i * (1.0 - g * g);
        dc_prev[k] = dc * f;
    }
    let mut dh_prev = vec![0.0; h];
    for (g, d) in da.iter().enumerate() {
        let gate = w.gate(g);
        gemv_t_acc(gate.w, n_in, d, dx);
        gemv_t_acc(gate.u, h, d, &mut dh_prev);
        let gm = gate_mut(grad, g, n_in, h);
        outer_acc(gm.w, n_in, d, x);
        outer_acc(gm.u, h, d, h_prev);
        gm.b.iter_mut().zip(d.iter()).for_each(|(b, v)| *b += v);
    }
    (dh_prev, dc_prev)
}

/// One LSTM step, returning `(h, c)`.
pub fn lstm_cell_forward(x: &[f64], h_prev: &[f64], c_prev: &[f64], w: &CellWeights<'_>) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(w, CellKind::Lstm, x, h_prev)?;
    if c_prev.len() != w.hidden {
        return Err(Error::Shape(format!("cell state has {} entries, expected {}", c_prev.len(), w.hidden)));
    }
    let (h, c, _) = lstm_step(x, h_prev, c_prev, w);
    Ok((h, c))
}
