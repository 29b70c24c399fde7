//! LSTM and GRU cells with hand-derived backpropagation through time.
//!
//! LSTM (no peepholes), gates `i, f, g, o`:
//! `c' = f⊙c + i⊙g`, `h' = o⊙tanh(c')`.
//!
//! GRU with the reset gate applied before the recurrent product, gates `z, r, n`:
//! `n = tanh(W_n x + U_n (r⊙h) + b_n)`, `h' = z⊙h + (1−z)⊙n`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::init::{glorot_uniform, orthogonal};
use crate::error::{Error, Result};
use crate::numkit::{matvec_t_acc, outer_acc, sigmoid, vecmat_acc, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Lstm,
    Gru,
}

impl CellKind {
    pub fn gate_count(self) -> usize {
        match self {
            CellKind::Lstm => 4,
            CellKind::Gru => 3,
        }
    }

    pub fn gate_names(self) -> &'static [&'static str] {
        match self {
            CellKind::Lstm => &["i", "f", "g", "o"],
            CellKind::Gru => &["z", "r", "h"],
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        })
    }
}

impl FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lstm" => Ok(CellKind::Lstm),
            "gru" => Ok(CellKind::Gru),
            other => Err(Error::Config(format!("unknown cell kind `{other}`"))),
        }
    }
}

/// Weights of one gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// `[input_dim×units]`
    pub input_kernel: Tensor,
    /// `[units×units]`
    pub recurrent_kernel: Tensor,
    /// `[units]`
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub kind: CellKind,
    pub input_dim: usize,
    pub units: usize,
    /// LSTM: `i, f, g, o`. GRU: `z, r, h`.
    pub gates: Vec<GateParams>,
}

const LSTM_I: usize = 0;
const LSTM_F: usize = 1;
const LSTM_G: usize = 2;
const LSTM_O: usize = 3;
const GRU_Z: usize = 0;
const GRU_R: usize = 1;
const GRU_N: usize = 2;

impl CellParams {
    pub fn new(kind: CellKind, gates: Vec<GateParams>) -> Result<Self> {
        if gates.len() != kind.gate_count() {
            return Err(Error::Config(format!(
                "{kind} needs {} gates, got {}",
                kind.gate_count(),
                gates.len()
            )));
        }
        let input_dim = gates[0].input_kernel.shape()[0];
        let units = gates[0].input_kernel.cols();
        for g in &gates {
            if g.input_kernel.shape() != [input_dim, units] {
                return Err(Error::dim(
                    "cell input kernel",
                    &[input_dim, units],
                    g.input_kernel.shape(),
                ));
            }
            if g.recurrent_kernel.shape() != [units, units] {
                return Err(Error::dim(
                    "cell recurrent kernel",
                    &[units, units],
                    g.recurrent_kernel.shape(),
                ));
            }
            if g.bias.shape() != [units] {
                return Err(Error::dim("cell bias", &[units], g.bias.shape()));
            }
        }
        Ok(CellParams {
            kind,
            input_dim,
            units,
            gates,
        })
    }

    pub fn zeros(kind: CellKind, input_dim: usize, units: usize) -> Self {
        let gates = (0..kind.gate_count())
            .map(|_| GateParams {
                input_kernel: Tensor::zeros(&[input_dim, units]),
                recurrent_kernel: Tensor::zeros(&[units, units]),
                bias: Tensor::zeros(&[units]),
            })
            .collect();
        CellParams {
            kind,
            input_dim,
            units,
            gates,
        }
    }

    /// Glorot-uniform input kernels, orthogonal recurrent kernels, zero
    /// biases except the LSTM forget gate which starts at one.
    pub fn init<R: Rng + ?Sized>(
        kind: CellKind,
        input_dim: usize,
        units: usize,
        rng: &mut R,
    ) -> Self {
        let gates = (0..kind.gate_count())
            .map(|gate| {
                let bias = if kind == CellKind::Lstm && gate == LSTM_F {
                    Tensor::filled(&[units], 1.0)
                } else {
                    Tensor::zeros(&[units])
                };
                GateParams {
                    input_kernel: glorot_uniform(input_dim, units, rng),
                    recurrent_kernel: orthogonal(units, rng),
                    bias,
                }
            })
            .collect();
        CellParams {
            kind,
            input_dim,
            units,
            gates,
        }
    }

    pub fn zeros_like(&self) -> Self {
        CellParams::zeros(self.kind, self.input_dim, self.units)
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        self.gates
            .iter()
            .flat_map(|g| [&g.input_kernel, &g.recurrent_kernel, &g.bias])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.gates
            .iter_mut()
            .flat_map(|g| [&mut g.input_kernel, &mut g.recurrent_kernel, &mut g.bias])
            .collect()
    }

    /// `(name, tensor)` pairs such as `i.input_kernel`.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let names = self.kind.gate_names();
        self.gates
            .iter()
            .zip(names)
            .flat_map(|(g, n)| {
                [
                    (format!("{n}.input_kernel"), &g.input_kernel),
                    (format!("{n}.recurrent_kernel"), &g.recurrent_kernel),
                    (format!("{n}.bias"), &g.bias),
                ]
            })
            .collect()
    }

    fn check_kind(&self, want: CellKind) -> Result<()> {
        if self.kind != want {
            return Err(Error::Config(format!(
                "expected {want} parameters, got {}",
                self.kind
            )));
        }
        Ok(())
    }

    fn check_vec(&self, what: &'static str, v: &Tensor, n: usize) -> Result<()> {
        if v.len() != n {
            return Err(Error::dim(what, &[n], v.shape()));
        }
        Ok(())
    }

    /// `b + x·W_in + h·W_rec` for one gate.
    fn preactivation(&self, gate: usize, x: &[f64], h: &[f64]) -> Vec<f64> {
        let g = &self.gates[gate];
        let mut a = g.bias.data().to_vec();
        vecmat_acc(x, g.input_kernel.data(), &mut a);
        vecmat_acc(h, g.recurrent_kernel.data(), &mut a);
        a
    }

    fn lstm_raw(&self, x: &[f64], h: &[f64], c: &[f64]) -> LstmStep {
        let mut i = self.preactivation(LSTM_I, x, h);
        let mut f = self.preactivation(LSTM_F, x, h);
        let mut g = self.preactivation(LSTM_G, x, h);
        let mut o = self.preactivation(LSTM_O, x, h);
        i.iter_mut().for_each(|v| *v = sigmoid(*v));
        f.iter_mut().for_each(|v| *v = sigmoid(*v));
        g.iter_mut().for_each(|v| *v = v.tanh());
        o.iter_mut().for_each(|v| *v = sigmoid(*v));
        let c_new: Vec<f64> = (0..self.units).map(|u| f[u] * c[u] + i[u] * g[u]).collect();
        let h_new: Vec<f64> = (0..self.units).map(|u| o[u] * c_new[u].tanh()).collect();
        LstmStep {
            gates: [i, f, g, o],
            c: c_new,
            h: h_new,
        }
    }

    fn gru_raw(&self, x: &[f64], h: &[f64]) -> GruStep {
        let mut z = self.preactivation(GRU_Z, x, h);
        let mut r = self.preactivation(GRU_R, x, h);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));
        r.iter_mut().for_each(|v| *v = sigmoid(*v));
        let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
        let mut n = self.preactivation(GRU_N, x, &rh);
        n.iter_mut().for_each(|v| *v = v.tanh());
        let h_new = (0..self.units)
            .map(|u| z[u] * h[u] + (1.0 - z[u]) * n[u])
            .collect();
        GruStep {
            gates: [z, r, n],
            h: h_new,
        }
    }

    /// Run over `seq[len×input_dim]` from a zero state, keeping everything
    /// the backward pass needs. `reverse` consumes the sequence back to front.
    pub fn trace(&self, seq: &Tensor, reverse: bool) -> Result<SequenceTrace> {
        if seq.shape().len() != 2 {
            return Err(Error::dim(
                "run_sequence",
                seq.shape(),
                &[0, self.input_dim],
            ));
        }
        if seq.shape()[1] != self.input_dim {
            return Err(Error::dim(
                "run_sequence",
                seq.shape(),
                &[seq.shape()[0], self.input_dim],
            ));
        }
        Ok(self.trace_raw(seq.data(), seq.shape()[0], reverse))
    }

    pub(crate) fn trace_raw(&self, seq: &[f64], len: usize, reverse: bool) -> SequenceTrace {
        let u = self.units;
        let d = self.input_dim;
        let gate_count = self.kind.gate_count();
        let mut trace = SequenceTrace {
            kind: self.kind,
            reverse,
            len,
            units: u,
            input_dim: d,
            inputs: Vec::with_capacity(len * d),
            h_prev: Vec::with_capacity(len * u),
            c_prev: Vec::new(),
            gates: vec![Vec::with_capacity(len * u); gate_count],
            cells: Vec::new(),
            hs: Vec::with_capacity(len * u),
        };
        let mut h = vec![0.0; u];
        let mut c = vec![0.0; u];
        for s in 0..len {
            let p = trace.position(s);
            let x = &seq[p * d..(p + 1) * d];
            trace.inputs.extend_from_slice(x);
            trace.h_prev.extend_from_slice(&h);
            match self.kind {
                CellKind::Lstm => {
                    trace.c_prev.extend_from_slice(&c);
                    let step = self.lstm_raw(x, &h, &c);
                    for (store, g) in trace.gates.iter_mut().zip(&step.gates) {
                        store.extend_from_slice(g);
                    }
                    trace.cells.extend_from_slice(&step.c);
                    h = step.h;
                    c = step.c;
                }
                CellKind::Gru => {
                    let step = self.gru_raw(x, &h);
                    for (store, g) in trace.gates.iter_mut().zip(&step.gates) {
                        store.extend_from_slice(g);
                    }
                    h = step.h;
                }
            }
            trace.hs.extend_from_slice(&h);
        }
        trace
    }

    /// Backpropagate `d_out` (gradient wrt the hidden output at each
    /// original position, `[len×units]`) through the trace. Parameter
    /// gradients accumulate into `grads`; returns the input gradient
    /// `[len×input_dim]` at original positions.
    pub fn backward(
        &self,
        trace: &SequenceTrace,
        d_out: &[f64],
        grads: &mut CellParams,
    ) -> Vec<f64> {
        let u = self.units;
        let d = self.input_dim;
        let len = trace.len;
        let mut dx = vec![0.0; len * d];
        let mut dh_next = vec![0.0; u];
        let mut dc_next = vec![0.0; u];
        let row = |s: usize| s * u..(s + 1) * u;

        for s in (0..len).rev() {
            let p = trace.position(s);
            let x = &trace.inputs[s * d..(s + 1) * d];
            let hp = &trace.h_prev[row(s)];
            let dh: Vec<f64> = d_out[p * u..(p + 1) * u]
                .iter()
                .zip(&dh_next)
                .map(|(a, b)| a + b)
                .collect();
            let dx_row = &mut dx[p * d..(p + 1) * d];
            let mut dh_prev = vec![0.0; u];

            match self.kind {
                CellKind::Lstm => {
                    let gi = &trace.gates[LSTM_I][row(s)];
                    let gf = &trace.gates[LSTM_F][row(s)];
                    let gg = &trace.gates[LSTM_G][row(s)];
                    let go = &trace.gates[LSTM_O][row(s)];
                    let c = &trace.cells[row(s)];
                    let cp = &trace.c_prev[row(s)];
                    let mut da = [vec![0.0; u], vec![0.0; u], vec![0.0; u], vec![0.0; u]];
                    for k in 0..u {
                        let tc = c[k].tanh();
                        let d_o = dh[k] * tc;
                        let dc = dc_next[k] + dh[k] * go[k] * (1.0 - tc * tc);
                        da[LSTM_I][k] = dc * gg[k] * gi[k] * (1.0 - gi[k]);
                        da[LSTM_F][k] = dc * cp[k] * gf[k] * (1.0 - gf[k]);
                        da[LSTM_G][k] = dc * gi[k] * (1.0 - gg[k] * gg[k]);
                        da[LSTM_O][k] = d_o * go[k] * (1.0 - go[k]);
                        dc_next[k] = dc * gf[k];
                    }
                    for (gate, dag) in da.iter().enumerate() {
                        self.accumulate_gate(gate, x, hp, dag, grads, dx_row, &mut dh_prev);
                    }
                }
                CellKind::Gru => {
                    let z = &trace.gates[GRU_Z][row(s)];
                    let r = &trace.gates[GRU_R][row(s)];
                    let n = &trace.gates[GRU_N][row(s)];
                    let mut da_n = vec![0.0; u];
                    let mut da_z = vec![0.0; u];
                    for k in 0..u {
                        da_z[k] = dh[k] * (hp[k] - n[k]) * z[k] * (1.0 - z[k]);
                        da_n[k] = dh[k] * (1.0 - z[k]) * (1.0 - n[k] * n[k]);
                        dh_prev[k] += dh[k] * z[k];
                    }
                    // candidate gate sees r⊙h on its recurrent side
                    let rh: Vec<f64> = r.iter().zip(hp).map(|(a, b)| a * b).collect();
                    let gn = &self.gates[GRU_N];
                    let gn_grad = &mut grads.gates[GRU_N];
                    outer_acc(x, &da_n, gn_grad.input_kernel.data_mut());
                    outer_acc(&rh, &da_n, gn_grad.recurrent_kernel.data_mut());
                    add_into(gn_grad.bias.data_mut(), &da_n);
                    matvec_t_acc(gn.input_kernel.data(), &da_n, dx_row);
                    let mut drh = vec![0.0; u];
                    matvec_t_acc(gn.recurrent_kernel.data(), &da_n, &mut drh);
                    let mut da_r = vec![0.0; u];
                    for k in 0..u {
                        da_r[k] = drh[k] * hp[k] * r[k] * (1.0 - r[k]);
                        dh_prev[k] += drh[k] * r[k];
                    }
                    self.accumulate_gate(GRU_Z, x, hp, &da_z, grads, dx_row, &mut dh_prev);
                    self.accumulate_gate(GRU_R, x, hp, &da_r, grads, dx_row, &mut dh_prev);
                }
            }
            dh_next = dh_prev;
        }
        dx
    }

    #[allow(clippy::too_many_arguments)]
    fn accumulate_gate(
        &self,
        gate: usize,
        x: &[f64],
        h_prev: &[f64],
        da: &[f64],
        grads: &mut CellParams,
        dx: &mut [f64],
        dh_prev: &mut [f64],
    ) {
        let g = &self.gates[gate];
        let gg = &mut grads.gates[gate];
        outer_acc(x, da, gg.input_kernel.data_mut());
        outer_acc(h_prev, da, gg.recurrent_kernel.data_mut());
        add_into(gg.bias.data_mut(), da);
        matvec_t_acc(g.input_kernel.data(), da, dx);
        matvec_t_acc(g.recurrent_kernel.data(), da, dh_prev);
    }
}

#[inline]
fn add_into(dst: &mut [f64], src: &[f64]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a += b;
    }
}

struct LstmStep {
    gates: [Vec<f64>; 4],
    c: Vec<f64>,
    h: Vec<f64>,
}

struct GruStep {
    gates: [Vec<f64>; 3],
    h: Vec<f64>,
}

/// Forward activations of one directional run, indexed by processing step.
#[derive(Debug, Clone)]
pub struct SequenceTrace {
    kind: CellKind,
    reverse: bool,
    len: usize,
    units: usize,
    input_dim: usize,
    inputs: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gates: Vec<Vec<f64>>,
    cells: Vec<f64>,
    hs: Vec<f64>,
}

impl SequenceTrace {
    /// Original sequence position consumed at processing step `s`.
    #[inline]
    pub fn position(&self, s: usize) -> usize {
        if self.reverse {
            self.len - 1 - s
        } else {
            s
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Hidden state after the last processing step.
    pub fn final_state(&self) -> &[f64] {
        &self.hs[(self.len - 1) * self.units..]
    }

    /// Original position whose output is the final state.
    pub fn final_position(&self) -> usize {
        self.position(self.len - 1)
    }

    /// Hidden outputs re-aligned to original positions, `[len×units]`.
    pub fn outputs_raw(&self) -> Vec<f64> {
        let u = self.units;
        let mut out = vec![0.0; self.len * u];
        for s in 0..self.len {
            let p = self.position(s);
            out[p * u..(p + 1) * u].copy_from_slice(&self.hs[s * u..(s + 1) * u]);
        }
        out
    }

    pub fn outputs(&self) -> Tensor {
        Tensor::new(vec![self.len, self.units], self.outputs_raw()).expect("trace shape")
    }
}

pub fn lstm_step(x_t: &Tensor, h: &Tensor, c: &Tensor, p: &CellParams) -> Result<(Tensor, Tensor)> {
    p.check_kind(CellKind::Lstm)?;
    p.check_vec("lstm_step input", x_t, p.input_dim)?;
    p.check_vec("lstm_step hidden", h, p.units)?;
    p.check_vec("lstm_step cell", c, p.units)?;
    let step = p.lstm_raw(x_t.data(), h.data(), c.data());
    Ok((Tensor::vector(step.h), Tensor::vector(step.c)))
}

pub fn gru_step(x_t: &Tensor, h: &Tensor, p: &CellParams) -> Result<Tensor> {
    p.check_kind(CellKind::Gru)?;
    p.check_vec("gru_step input", x_t, p.input_dim)?;
    p.check_vec("gru_step hidden", h, p.units)?;
    Ok(Tensor::vector(p.gru_raw(x_t.data(), h.data()).h))
}

/// Iterate a cell over `seq[len×dim]` from a zero state. Returns `[len×units]`
/// aligned to original positions, or the final state `[units]`.
pub fn run_sequence(
    seq: &Tensor,
    p: &CellParams,
    return_sequences: bool,
    reverse: bool,
) -> Result<Tensor> {
    if seq.shape().first() == Some(&0) || seq.is_empty() {
        return Err(Error::EmptyInput("recurrent sequence"));
    }
    let trace = p.trace(seq, reverse)?;
    if return_sequences {
        Ok(trace.outputs())
    } else {
        Ok(Tensor::vector(trace.final_state().to_vec()))
    }
}

/// Forward and reversed runs of a sequence, concatenated per position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bidirectional {
    pub forward: CellParams,
    pub backward: CellParams,
}

impl Bidirectional {
    pub fn new(forward: CellParams, backward: CellParams) -> Result<Self> {
        if forward.units != backward.units || forward.input_dim != backward.input_dim {
            return Err(Error::Config(format!(
                "bidirectional halves disagree: forward {}→{}, backward {}→{}",
                forward.input_dim, forward.units, backward.input_dim, backward.units
            )));
        }
        Ok(Bidirectional { forward, backward })
    }

    pub fn units(&self) -> usize {
        self.forward.units
    }

    pub fn output_width(&self) -> usize {
        2 * self.forward.units
    }

    pub fn zeros_like(&self) -> Self {
        Bidirectional {
            forward: self.forward.zeros_like(),
            backward: self.backward.zeros_like(),
        }
    }

    pub fn trace(&self, seq: &Tensor) -> Result<(SequenceTrace, SequenceTrace)> {
        Ok((
            self.forward.trace(seq, false)?,
            self.backward.trace(seq, true)?,
        ))
    }

    pub(crate) fn trace_raw(&self, seq: &[f64], len: usize) -> (SequenceTrace, SequenceTrace) {
        (
            self.forward.trace_raw(seq, len, false),
            self.backward.trace_raw(seq, len, true),
        )
    }

    /// `[len×2u]`: forward outputs then re-aligned backward outputs per row.
    pub fn merge_sequences(fwd: &SequenceTrace, bwd: &SequenceTrace) -> Vec<f64> {
        let u = fwd.units;
        let (of, ob) = (fwd.outputs_raw(), bwd.outputs_raw());
        let mut out = Vec::with_capacity(fwd.len * 2 * u);
        for p in 0..fwd.len {
            out.extend_from_slice(&of[p * u..(p + 1) * u]);
            out.extend_from_slice(&ob[p * u..(p + 1) * u]);
        }
        out
    }

    /// `[2u]`: last forward state then last backward state.
    pub fn merge_final(fwd: &SequenceTrace, bwd: &SequenceTrace) -> Vec<f64> {
        let mut out = fwd.final_state().to_vec();
        out.extend_from_slice(bwd.final_state());
        out
    }

    /// Backward for sequence outputs; `d_out` is `[len×2u]`.
    pub fn backward_sequences(
        &self,
        fwd: &SequenceTrace,
        bwd: &SequenceTrace,
        d_out: &[f64],
        grads: &mut Bidirectional,
    ) -> Vec<f64> {
        let u = self.units();
        let len = fwd.len;
        let mut df = vec![0.0; len * u];
        let mut db = vec![0.0; len * u];
        for p in 0..len {
            df[p * u..(p + 1) * u].copy_from_slice(&d_out[p * 2 * u..p * 2 * u + u]);
            db[p * u..(p + 1) * u].copy_from_slice(&d_out[p * 2 * u + u..(p + 1) * 2 * u]);
        }
        let mut dx = self.forward.backward(fwd, &df, &mut grads.forward);
        add_into(
            &mut dx,
            &self.backward.backward(bwd, &db, &mut grads.backward),
        );
        dx
    }

    /// Backward for the merged final states; `d_final` is `[2u]`.
    pub fn backward_final(
        &self,
        fwd: &SequenceTrace,
        bwd: &SequenceTrace,
        d_final: &[f64],
        grads: &mut Bidirectional,
    ) -> Vec<f64> {
        let u = self.units();
        let dx_f =
            directional_final_backward(&self.forward, fwd, &d_final[..u], &mut grads.forward);
        let dx_b =
            directional_final_backward(&self.backward, bwd, &d_final[u..], &mut grads.backward);
        dx_f.iter().zip(&dx_b).map(|(a, b)| a + b).collect()
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut v = self.forward.tensors();
        v.extend(self.backward.tensors());
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.forward.tensors_mut();
        v.extend(self.backward.tensors_mut());
        v
    }
}

/// Backward for a run whose only consumer is its final state.
pub(crate) fn directional_final_backward(
    cell: &CellParams,
    trace: &SequenceTrace,
    d_final: &[f64],
    grads: &mut CellParams,
) -> Vec<f64> {
    let u = cell.units;
    let mut d_out = vec![0.0; trace.len * u];
    let p = trace.final_position();
    d_out[p * u..(p + 1) * u].copy_from_slice(d_final);
    cell.backward(trace, &d_out, grads)
}

pub fn bidirectional(
    seq: &Tensor,
    p_fwd: &CellParams,
    p_bwd: &CellParams,
    return_sequences: bool,
) -> Result<Tensor> {
    if seq.is_empty() {
        return Err(Error::EmptyInput("recurrent sequence"));
    }
    let bi = Bidirectional::new(p_fwd.clone(), p_bwd.clone())?;
    let (f, b) = bi.trace(seq)?;
    if return_sequences {
        Tensor::new(
            vec![f.len, bi.output_width()],
            Bidirectional::merge_sequences(&f, &b),
        )
    } else {
        Ok(Tensor::vector(Bidirectional::merge_final(&f, &b)))
    }
}
