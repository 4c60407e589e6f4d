//! Per-cell one-hidden-layer tanh network and Hebbian slot coupling.
//!
//! Vector layouts (`N` = connection slots):
//!
//! * inputs:  `[S_0, L_0, E_0, …, S_{N-1}, L_{N-1}, E_{N-1}, red, green, blue, touch]`
//! * outputs: `[S_0, L_0, E_0, …, S_{N-1}, L_{N-1}, E_{N-1}, READ, EAT, FUSION, LIGHT]`
//!
//! Weights are flat: the `n_h × (n_in + 1)` input→hidden matrix (row-major,
//! bias in the last column) followed by the `n_out × (n_h + 1)` hidden→output
//! matrix in the same form.

use crate::error::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NetShape {
    pub n_slots: usize,
    pub n_hidden: usize,
}

impl NetShape {
    pub const fn new(n_slots: usize, n_hidden: usize) -> Self {
        NetShape { n_slots, n_hidden }
    }

    pub const fn n_in(&self) -> usize {
        3 * self.n_slots + 4
    }

    pub const fn n_out(&self) -> usize {
        3 * self.n_slots + 4
    }

    pub const fn weight_count(&self) -> usize {
        (self.n_in() + 1) * self.n_hidden + (self.n_hidden + 1) * self.n_out()
    }

    /// Flat index of the input→hidden weight from input `i` (or the bias when
    /// `i == n_in`) to hidden unit `j`.
    pub const fn w_in(&self, j: usize, i: usize) -> usize {
        j * (self.n_in() + 1) + i
    }

    /// Flat index of the hidden→output weight from hidden `j` (or the bias when
    /// `j == n_hidden`) to output `k`.
    pub const fn w_out(&self, k: usize, j: usize) -> usize {
        (self.n_in() + 1) * self.n_hidden + k * (self.n_hidden + 1) + j
    }
}

/// Named positions in the input and output vectors.
pub mod port {
    pub const fn slot_s(k: usize) -> usize {
        3 * k
    }
    pub const fn slot_l(k: usize) -> usize {
        3 * k + 1
    }
    pub const fn slot_e(k: usize) -> usize {
        3 * k + 2
    }
    pub const fn red(n_slots: usize) -> usize {
        3 * n_slots
    }
    pub const fn green(n_slots: usize) -> usize {
        3 * n_slots + 1
    }
    pub const fn blue(n_slots: usize) -> usize {
        3 * n_slots + 2
    }
    pub const fn touch(n_slots: usize) -> usize {
        3 * n_slots + 3
    }
    pub const fn read(n_slots: usize) -> usize {
        3 * n_slots
    }
    pub const fn eat(n_slots: usize) -> usize {
        3 * n_slots + 1
    }
    pub const fn fusion(n_slots: usize) -> usize {
        3 * n_slots + 2
    }
    pub const fn light(n_slots: usize) -> usize {
        3 * n_slots + 3
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralNet {
    shape: NetShape,
    weights: Vec<f64>,
}

impl NeuralNet {
    pub fn new(shape: NetShape, weights: Vec<f64>) -> Result<Self, NetError> {
        if weights.len() != shape.weight_count() {
            return Err(NetError::Weights {
                expected: shape.weight_count(),
                got: weights.len(),
            });
        }
        Ok(NeuralNet { shape, weights })
    }

    pub fn zeros(shape: NetShape) -> Self {
        NeuralNet {
            shape,
            weights: vec![0.0; shape.weight_count()],
        }
    }

    pub fn shape(&self) -> NetShape {
        self.shape
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn forward(&self, inputs: &[f64]) -> Result<Vec<f64>, NetError> {
        let mut hidden = vec![0.0; self.shape.n_hidden];
        let mut out = vec![0.0; self.shape.n_out()];
        self.forward_into(inputs, &mut hidden, &mut out)?;
        Ok(out)
    }

    /// Allocation-free forward pass; `hidden` and `out` are scratch buffers of
    /// length `n_hidden` and `n_out`.
    pub fn forward_into(&self, inputs: &[f64], hidden: &mut [f64], out: &mut [f64]) -> Result<(), NetError> {
        let n_in = self.shape.n_in();
        if inputs.len() != n_in {
            return Err(NetError::Shape {
                expected: n_in,
                got: inputs.len(),
            });
        }
        let (w1, w2) = self.weights.split_at((n_in + 1) * self.shape.n_hidden);
        for (h, row) in hidden.iter_mut().zip(w1.chunks_exact(n_in + 1)) {
            *h = activation(dot(&row[..n_in], inputs) + row[n_in]);
        }
        let nh = self.shape.n_hidden;
        for (o, row) in out.iter_mut().zip(w2.chunks_exact(nh + 1)) {
            *o = activation(dot(&row[..nh], hidden) + row[nh]);
        }
        Ok(())
    }
}

/// Dot product with four interleaved partial sums, combined as
/// `(s0 + s1) + (s2 + s3)` plus the tail in order.
#[inline]
fn dot(w: &[f64], x: &[f64]) -> f64 {
    let n = w.len().min(x.len());
    let (w, x) = (&w[..n], &x[..n]);
    let mut s = [0.0f64; 4];
    let wc = w.chunks_exact(4);
    let xc = x.chunks_exact(4);
    let (wr, xr) = (wc.remainder(), xc.remainder());
    for (a, b) in wc.zip(xc) {
        for k in 0..4 {
            s[k] += a[k] * b[k];
        }
    }
    let mut acc = (s[0] + s[1]) + (s[2] + s[3]);
    for (a, b) in wr.iter().zip(xr) {
        acc += a * b;
    }
    acc
}

/// Hyperbolic tangent evaluated as `1 - 2 / (e^{2x} + 1)`.
#[inline]
pub fn activation(x: f64) -> f64 {
    if x > 20.0 {
        return 1.0;
    }
    if x < -20.0 {
        return -1.0;
    }
    1.0 - 2.0 / ((2.0 * x).exp() + 1.0)
}

/// Simplified Hebb rule for the coupling strength of one slot.
#[inline]
pub fn hebb_update(s_prime: f64, s_out: f64, delta_s: f64) -> f64 {
    s_prime + delta_s * s_out
}

/// What one occupied slot contributes to the input vector: the partner's
/// outputs on the slot facing this cell, and this cell's coupling strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotSignal {
    pub s_out: f64,
    pub l_out: f64,
    pub e_out: f64,
    pub s_prime: f64,
}

/// Fraction of each color in the incident light; zeros when nothing arrived.
pub fn light_ratios(intensity: [f64; 3]) -> [f64; 3] {
    let total: f64 = intensity.iter().sum();
    if total > 0.0 {
        intensity.map(|c| c / total)
    } else {
        [0.0; 3]
    }
}

/// Writes the input vector for one cell into `out` (length `n_in`).
pub fn gather_inputs_into(
    shape: NetShape,
    slots: &[Option<SlotSignal>],
    light: [f64; 3],
    touched: bool,
    out: &mut [f64],
) -> Result<(), NetError> {
    let occupied = slots.iter().filter(|s| s.is_some()).count();
    if slots.iter().skip(shape.n_slots).any(Option::is_some) {
        return Err(NetError::Capacity {
            occupied,
            capacity: shape.n_slots,
        });
    }
    if out.len() != shape.n_in() {
        return Err(NetError::Shape {
            expected: shape.n_in(),
            got: out.len(),
        });
    }
    out.fill(0.0);
    for (k, slot) in slots.iter().enumerate() {
        if let Some(sig) = slot {
            out[port::slot_s(k)] = sig.s_out * sig.s_prime;
            out[port::slot_l(k)] = sig.l_out;
            out[port::slot_e(k)] = sig.e_out;
        }
    }
    let ratios = light_ratios(light);
    let n = shape.n_slots;
    out[port::red(n)] = ratios[0];
    out[port::green(n)] = ratios[1];
    out[port::blue(n)] = ratios[2];
    out[port::touch(n)] = if touched { 1.0 } else { 0.0 };
    Ok(())
}

pub fn gather_inputs(
    shape: NetShape,
    slots: &[Option<SlotSignal>],
    light: [f64; 3],
    touched: bool,
) -> Result<Vec<f64>, NetError> {
    let mut out = vec![0.0; shape.n_in()];
    gather_inputs_into(shape, slots, light, touched, &mut out)?;
    Ok(out)
}
