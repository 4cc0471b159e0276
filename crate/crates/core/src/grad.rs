//! Gradients of circuit outputs and of the hybrid loss with respect to the
//! circuit angles.
//!
//! [`param_shift_jacobian`] evaluates every shifted circuit by resuming from
//! the cached state just before the shifted gate, so the prefix is simulated
//! once per layer position rather than once per parameter. Everything here is
//! exact-mode; shot noise never enters a training gradient.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::hybrid::{softmax_pair, HybridModel, Label};
use crate::qsim::{Gate1q, MeasurementMode, Statevector};
use crate::vqc::{cnot_ring, encode_tpe, fused_rotation, vqc_forward, CircuitParams};

/// Gradient over all circuit angles, in `[layer][qubit][axis]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(pub Vec<f64>);

impl GradientVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum()
    }

    pub fn max_abs_diff(&self, other: &GradientVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `∂⟨Z_q⟩/∂θ_k` for every parameter `k` and qubit `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    num_qubits: usize,
    data: Vec<f64>,
}

impl Jacobian {
    pub fn num_params(&self) -> usize {
        self.data.len().checked_div(self.num_qubits).unwrap_or(0)
    }

    pub fn get(&self, param: usize, qubit: usize) -> f64 {
        self.data[param * self.num_qubits + qubit]
    }

    /// Gradient of one qubit's expectation.
    pub fn column(&self, qubit: usize) -> GradientVector {
        GradientVector((0..self.num_params()).map(|k| self.get(k, qubit)).collect())
    }
}

fn check_observable(params: &CircuitParams, qubit: usize) -> Result<()> {
    if qubit >= params.num_qubits() {
        return Err(Error::QubitOutOfRange {
            index: qubit,
            num_qubits: params.num_qubits(),
        });
    }
    Ok(())
}

fn check_features(params: &CircuitParams, features: &[f64]) -> Result<()> {
    if features.len() != params.num_qubits() {
        return Err(Error::shape(
            "feature vector length",
            params.num_qubits(),
            features.len(),
        ));
    }
    Ok(())
}

struct Suffix<'a> {
    gates: &'a [Gate1q],
    num_qubits: usize,
    depth: usize,
}

impl Suffix<'_> {
    /// Applies the remaining rotations of `layer` from qubit `next`, then all
    /// later layers, and reads out every qubit.
    fn finish(&self, mut state: Statevector, layer: usize, next: usize) -> Vec<f64> {
        let n = self.num_qubits;
        for q in next..n {
            state.apply_1q_unchecked(q, &self.gates[layer * n + q]);
        }
        for l in layer + 1..self.depth {
            cnot_ring(&mut state);
            for q in 0..n {
                state.apply_1q_unchecked(q, &self.gates[l * n + q]);
            }
        }
        state.expectations_z()
    }
}

/// Parameter-shift Jacobian of all qubit expectations:
/// `g_k = [f(θ_k + π/2) - f(θ_k - π/2)] / 2`.
pub fn param_shift_jacobian(params: &CircuitParams, features: &[f64]) -> Result<Jacobian> {
    check_features(params, features)?;
    let encoded = encode_tpe(features)?;
    Ok(jacobian_from_state(params, encoded))
}

pub(crate) fn jacobian_from_state(params: &CircuitParams, encoded: Statevector) -> Jacobian {
    let n = params.num_qubits();
    let depth = params.depth();
    let layers: Vec<Vec<[f64; 3]>> = (0..depth).map(|l| params.layer(l)).collect();
    let gates: Vec<Gate1q> = layers.iter().flatten().map(|&a| fused_rotation(a)).collect();
    let suffix = Suffix {
        gates: &gates,
        num_qubits: n,
        depth,
    };

    let mut data = vec![0.0; params.num_params() * n];
    let mut state = encoded;
    for (l, layer) in layers.iter().enumerate() {
        cnot_ring(&mut state);
        for q in 0..n {
            for axis in 0..3 {
                let mut plus = layer[q];
                plus[axis] += FRAC_PI_2;
                let mut minus = layer[q];
                minus[axis] -= FRAC_PI_2;

                let mut s = state.clone();
                s.apply_1q_unchecked(q, &fused_rotation(plus));
                let e_plus = suffix.finish(s, l, q + 1);
                let mut s = state.clone();
                s.apply_1q_unchecked(q, &fused_rotation(minus));
                let e_minus = suffix.finish(s, l, q + 1);

                let k = (l * n + q) * 3 + axis;
                for (obs, (p, m)) in e_plus.iter().zip(&e_minus).enumerate() {
                    data[k * n + obs] = (p - m) / 2.0;
                }
            }
            state.apply_1q_unchecked(q, &gates[l * n + q]);
        }
    }
    Jacobian { num_qubits: n, data }
}

/// Parameter-shift gradient of `⟨Z_qubit_obs⟩`.
pub fn param_shift_grad(params: &CircuitParams, features: &[f64], qubit_obs: usize) -> Result<GradientVector> {
    check_observable(params, qubit_obs)?;
    Ok(param_shift_jacobian(params, features)?.column(qubit_obs))
}

/// Central finite differences `[f(θ+h) - f(θ-h)] / 2h`, evaluated by full
/// forward passes. Test oracle for [`param_shift_grad`].
pub fn finite_diff_grad(params: &CircuitParams, features: &[f64], qubit_obs: usize, h: f64) -> Result<GradientVector> {
    check_observable(params, qubit_obs)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("finite-difference step {h}")));
    }
    let eval = |p: &CircuitParams| -> Result<f64> {
        Ok(vqc_forward(p, features, MeasurementMode::Exact)?.expectations[qubit_obs])
    };
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(params.num_params());
    for k in 0..params.num_params() {
        let base = params.angles()[k];
        probe.angles_mut()[k] = base + h;
        let up = eval(&probe)?;
        probe.angles_mut()[k] = base - h;
        let down = eval(&probe)?;
        probe.angles_mut()[k] = base;
        out.push((up - down) / (2.0 * h));
    }
    Ok(GradientVector(out))
}

/// Loss, exact logits and loss gradient for one sample given its extracted
/// features.
pub fn loss_and_grad_from_features(
    params: &CircuitParams,
    readout: (usize, usize),
    features: &[f64],
    label: Label,
) -> Result<(f64, [f64; 2], GradientVector)> {
    check_features(params, features)?;
    let encoded = encode_tpe(features)?;
    let jac = jacobian_from_state(params, encoded.clone());

    let mut state = encoded;
    for l in 0..params.depth() {
        crate::vqc::pqc_layer_in_place(&mut state, &params.layer(l));
    }
    let z = state.expectations_z();
    let logits = [z[readout.0], z[readout.1]];
    let probs = softmax_pair(logits);
    let y = label.one_hot();
    let loss = crate::hybrid::softmax_cross_entropy(logits, label);
    let resid = [probs[0] - y[0], probs[1] - y[1]];
    let grad = (0..params.num_params())
        .map(|k| resid[0] * jac.get(k, readout.0) + resid[1] * jac.get(k, readout.1))
        .collect();
    Ok((loss, logits, GradientVector(grad)))
}

/// Gradient of the softmax cross-entropy of the hybrid model with respect to
/// the circuit angles. The extractor is frozen and contributes no terms.
pub fn loss_grad(model: &HybridModel, x: &[f64], label: u8) -> Result<GradientVector> {
    let label = Label::try_from(label)?;
    let features = model.extractor().apply(x)?;
    Ok(loss_and_grad_from_features(model.params(), model.readout(), &features, label)?.2)
}
