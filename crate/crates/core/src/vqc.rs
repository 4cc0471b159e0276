//! The variational circuit: tensor-product encoding, layered PQC and
//! Pauli-Z readout.
//!
//! Each PQC layer applies a CNOT ring (`i -> (i+1) mod U`) followed by
//! `RX(α_i)`, `RY(β_i)`, `RZ(γ_i)` on every qubit. A single qubit has no
//! entangler, and on two qubits the ring collapses to one `CNOT(0 -> 1)`
//! (the closing `1 -> 0` edge would duplicate the pair).

use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{matmul_1q, rotation_matrix, sample_from_expectation, Axis, Gate1q, MeasurementMode, Statevector};
use crate::seed::{derive_seed, rng_from_seed};

/// Trainable rotation angles, flattened as `[layer][qubit][axis]` with axis
/// order (α: X, β: Y, γ: Z).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    num_qubits: usize,
    depth: usize,
    angles: Vec<f64>,
}

impl CircuitParams {
    pub fn new(num_qubits: usize, depth: usize, angles: Vec<f64>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > crate::qsim::MAX_QUBITS {
            return Err(Error::Capacity {
                requested: num_qubits,
                max: crate::qsim::MAX_QUBITS,
            });
        }
        let expected = 3 * num_qubits * depth;
        if angles.len() != expected {
            return Err(Error::shape("circuit angle count", expected, angles.len()));
        }
        if let Some(&bad) = angles.iter().find(|a| !a.is_finite()) {
            return Err(Error::NonFiniteAngle(bad));
        }
        Ok(Self {
            num_qubits,
            depth,
            angles,
        })
    }

    pub fn zeros(num_qubits: usize, depth: usize) -> Result<Self> {
        Self::new(num_qubits, depth, vec![0.0; 3 * num_qubits * depth])
    }

    /// Angles drawn uniformly from `[-scale, scale)`.
    pub fn random(num_qubits: usize, depth: usize, scale: f64, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let angles = (0..3 * num_qubits * depth)
            .map(|_| rng.gen_range(-scale..scale))
            .collect();
        Self::new(num_qubits, depth, angles)
    }

    /// Builds from nested `[layer][qubit][axis]` arrays.
    pub fn from_layers(layers: &[Vec<[f64; 3]>]) -> Result<Self> {
        let num_qubits = layers.first().map_or(0, Vec::len);
        if layers.iter().any(|l| l.len() != num_qubits) {
            return Err(Error::InvalidArgument("ragged layer angle array".into()));
        }
        let angles = layers.iter().flatten().flatten().copied().collect();
        Self::new(num_qubits, layers.len(), angles)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_params(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn index(&self, layer: usize, qubit: usize, axis: Axis) -> usize {
        let a = match axis {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        };
        (layer * self.num_qubits + qubit) * 3 + a
    }

    pub fn angle(&self, layer: usize, qubit: usize, axis: Axis) -> f64 {
        self.angles[self.index(layer, qubit, axis)]
    }

    /// Angles of one layer as `[qubit][axis]`.
    pub fn layer(&self, layer: usize) -> Vec<[f64; 3]> {
        let start = layer * self.num_qubits * 3;
        self.angles[start..start + 3 * self.num_qubits]
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect()
    }

    /// `θ ← θ - step`, keeping every angle finite.
    pub fn apply_update(&mut self, step: &[f64]) -> Result<()> {
        if step.len() != self.angles.len() {
            return Err(Error::shape("update length", self.angles.len(), step.len()));
        }
        for (a, d) in self.angles.iter_mut().zip(step) {
            let next = *a - d;
            if !next.is_finite() {
                return Err(Error::NonFinite("circuit angle after update".into()));
            }
            *a = next;
        }
        Ok(())
    }

    pub(crate) fn angles_mut(&mut self) -> &mut [f64] {
        &mut self.angles
    }
}

/// Per-qubit `⟨σ_z⟩` after the circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct VqcOutput {
    pub expectations: Vec<f64>,
}

/// Logistic sigmoid, evaluated without overflow for any finite input.
pub fn sigmoid_phi(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Encoding angle fed to `RY` for a feature value. Under the half-angle
/// convention `RY(π·φ(x))|0⟩ = [cos(π/2·φ(x)), sin(π/2·φ(x))]`.
pub fn encoding_angle(x: f64) -> f64 {
    PI * sigmoid_phi(x)
}

fn check_features(features: &[f64], num_qubits: usize) -> Result<()> {
    if features.len() != num_qubits {
        return Err(Error::shape("feature vector length", num_qubits, features.len()));
    }
    if features.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("feature value".into()));
    }
    Ok(())
}

/// Tensor-product encoding of `features` into a product state.
pub fn encode_tpe(features: &[f64]) -> Result<Statevector> {
    if features.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("feature value".into()));
    }
    let factors: Vec<[f64; 2]> = features
        .iter()
        .map(|&x| {
            let (s, c) = (encoding_angle(x) / 2.0).sin_cos();
            [c, s]
        })
        .collect();
    Statevector::product(&factors)
}

/// `RZ(γ)·RY(β)·RX(α)`: the three rotations of one qubit in one layer.
pub(crate) fn fused_rotation(angles: [f64; 3]) -> Gate1q {
    let rx = rotation_matrix(Axis::X, angles[0]);
    let ry = rotation_matrix(Axis::Y, angles[1]);
    let rz = rotation_matrix(Axis::Z, angles[2]);
    matmul_1q(&rz, &matmul_1q(&ry, &rx))
}

pub(crate) fn cnot_ring(state: &mut Statevector) {
    let n = state.num_qubits();
    match n {
        0 | 1 => return,
        2 => {
            state.cnot_unchecked(0, 1);
            return;
        }
        _ => {}
    }
    for i in 0..n {
        state.cnot_unchecked(i, (i + 1) % n);
    }
}

/// One PQC layer applied in place.
pub(crate) fn pqc_layer_in_place(state: &mut Statevector, layer_angles: &[[f64; 3]]) {
    cnot_ring(state);
    for (q, &a) in layer_angles.iter().enumerate() {
        state.apply_1q_unchecked(q, &fused_rotation(a));
    }
}

pub fn apply_pqc_layer(state: &Statevector, layer_angles: &[[f64; 3]]) -> Result<Statevector> {
    if layer_angles.len() != state.num_qubits() {
        return Err(Error::shape("layer angle rows", state.num_qubits(), layer_angles.len()));
    }
    if let Some(&bad) = layer_angles.iter().flatten().find(|a| !a.is_finite()) {
        return Err(Error::NonFiniteAngle(bad));
    }
    let mut out = state.clone();
    pqc_layer_in_place(&mut out, layer_angles);
    Ok(out)
}

/// Encoded-and-evolved state before measurement.
pub fn vqc_state(params: &CircuitParams, features: &[f64]) -> Result<Statevector> {
    check_features(features, params.num_qubits())?;
    let mut state = encode_tpe(features)?;
    for l in 0..params.depth() {
        pqc_layer_in_place(&mut state, &params.layer(l));
    }
    Ok(state)
}

/// Full forward pass. In `Shots` mode qubit `q` is sampled with seed
/// `derive_seed(seed, q)`.
pub fn vqc_forward(params: &CircuitParams, features: &[f64], mode: MeasurementMode) -> Result<VqcOutput> {
    let state = vqc_state(params, features)?;
    let exact = state.expectations_z();
    let expectations = match mode {
        MeasurementMode::Exact => exact,
        MeasurementMode::Shots { shots, seed } => exact
            .iter()
            .enumerate()
            .map(|(q, &e)| {
                sample_from_expectation(
                    e,
                    MeasurementMode::Shots {
                        shots,
                        seed: derive_seed(seed, q as u64),
                    },
                )
            })
            .collect::<Result<_>>()?,
    };
    Ok(VqcOutput { expectations })
}
