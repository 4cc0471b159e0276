//! Dense statevector simulator.
//!
//! Amplitudes are stored little-endian: qubit `q` is bit `q` of the basis
//! index, so `|10⟩` written as (qubit0, qubit1) = (1, 0) is index 1.
//! Rotations use the half-angle convention `R_A(θ) = exp(-iθA/2)`.

use num_complex::Complex64;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Largest register the simulator will allocate (2^24 amplitudes).
pub const MAX_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// How a Pauli-Z expectation is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MeasurementMode {
    #[default]
    Exact,
    /// Average of `shots` sampled ±1 outcomes drawn from a ChaCha8 stream
    /// seeded with `seed`.
    Shots { shots: u32, seed: u64 },
}

impl MeasurementMode {
    pub fn shots(shots: u32, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        Ok(MeasurementMode::Shots { shots, seed })
    }
}

/// A 2x2 complex matrix in row-major order.
pub type Gate1q = [[Complex64; 2]; 2];

pub fn rotation_matrix(axis: Axis, angle: f64) -> Gate1q {
    let (s, c) = (angle / 2.0).sin_cos();
    match axis {
        Axis::X => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        Axis::Y => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        Axis::Z => [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, s)]],
    }
}

/// `a · b` for 2x2 matrices (apply `b` first).
pub fn matmul_1q(a: &Gate1q, b: &Gate1q) -> Gate1q {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    amplitudes: Vec<Complex64>,
    num_qubits: usize,
}

fn check_capacity(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(Error::Capacity {
            requested: num_qubits,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

impl Statevector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    /// Computational basis state `|index⟩` (little-endian).
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_capacity(num_qubits)?;
        let len = 1usize << num_qubits;
        if index >= len {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![ZERO; len];
        amplitudes[index] = ONE;
        Ok(Self { amplitudes, num_qubits })
    }

    /// Wraps an amplitude vector. The length must be a power of two and the
    /// vector must be normalized to within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_capacity(num_qubits)?;
        let state = Self { amplitudes, num_qubits };
        let norm = state.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "amplitudes are not normalized (norm {norm})"
            )));
        }
        Ok(state)
    }

    /// Product state from per-qubit `[a0, a1]` amplitude pairs, qubit 0 first.
    pub(crate) fn product(factors: &[[f64; 2]]) -> Result<Self> {
        check_capacity(factors.len())?;
        let mut amplitudes = Vec::with_capacity(1 << factors.len());
        amplitudes.push(ONE);
        for f in factors {
            let n = amplitudes.len();
            amplitudes.extend_from_within(..);
            for a in &mut amplitudes[..n] {
                *a *= f[0];
            }
            for a in &mut amplitudes[n..] {
                *a *= f[1];
            }
        }
        Ok(Self {
            amplitudes,
            num_qubits: factors.len(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Applies an arbitrary 2x2 matrix to `qubit` in place. The caller is
    /// responsible for unitarity.
    pub fn apply_1q(&mut self, qubit: usize, gate: &Gate1q) -> Result<()> {
        self.check_qubit(qubit)?;
        self.apply_1q_unchecked(qubit, gate);
        Ok(())
    }

    pub(crate) fn apply_1q_unchecked(&mut self, qubit: usize, gate: &Gate1q) {
        let stride = 1usize << qubit;
        let [[g00, g01], [g10, g11]] = *gate;
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = g00 * x0 + g01 * x1;
                *a1 = g10 * x0 + g11 * x1;
            }
        }
    }

    /// In-place `R_axis(angle)` on `qubit`.
    pub fn rotate(&mut self, axis: Axis, qubit: usize, angle: f64) -> Result<()> {
        if !angle.is_finite() {
            return Err(Error::NonFiniteAngle(angle));
        }
        self.apply_1q(qubit, &rotation_matrix(axis, angle))
    }

    /// Pure variant of [`Statevector::rotate`].
    pub fn apply_rotation(&self, axis: Axis, qubit: usize, angle: f64) -> Result<Self> {
        let mut out = self.clone();
        out.rotate(axis, qubit, angle)?;
        Ok(out)
    }

    /// In-place CNOT.
    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::InvalidTopology(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        self.cnot_unchecked(control, target);
        Ok(())
    }

    pub(crate) fn cnot_unchecked(&mut self, control: usize, target: usize) {
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amplitudes.swap(i, i | tbit);
            }
        }
    }

    /// Pure variant of [`Statevector::cnot`].
    pub fn apply_cnot(&self, control: usize, target: usize) -> Result<Self> {
        let mut out = self.clone();
        out.cnot(control, target)?;
        Ok(out)
    }

    /// Exact `⟨σ_z⟩` on `qubit`.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        Ok(self.expectation_z_unchecked(qubit))
    }

    pub(crate) fn expectation_z_unchecked(&self, qubit: usize) -> f64 {
        let bit = 1usize << qubit;
        let mut acc = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if i & bit == 0 {
                acc += a.norm_sqr();
            } else {
                acc -= a.norm_sqr();
            }
        }
        acc.clamp(-1.0, 1.0)
    }

    /// All per-qubit Z expectations in one pass over the amplitudes.
    pub fn expectations_z(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_qubits];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, e) in out.iter_mut().enumerate() {
                if (i >> q) & 1 == 0 {
                    *e += p;
                } else {
                    *e -= p;
                }
            }
        }
        out.iter_mut().for_each(|e| *e = e.clamp(-1.0, 1.0));
        out
    }

    /// Z expectation read out according to `mode`.
    ///
    /// In `Shots` mode this draws `shots` Bernoulli outcomes with
    /// `p(+1) = (1 + ⟨Z⟩)/2` from `ChaCha8Rng::seed_from_u64(seed)` (one
    /// uniform `f64` per shot, outcome +1 when `u < p(+1)`) and returns their
    /// arithmetic mean.
    pub fn sample_expectation_z(&self, qubit: usize, mode: MeasurementMode) -> Result<f64> {
        let exact = self.expectation_z(qubit)?;
        sample_from_expectation(exact, mode)
    }
}

/// Shot-samples a ±1 observable with the given exact mean.
pub fn sample_from_expectation(exact: f64, mode: MeasurementMode) -> Result<f64> {
    match mode {
        MeasurementMode::Exact => Ok(exact),
        MeasurementMode::Shots { shots, seed } => {
            if shots == 0 {
                return Err(Error::ZeroShots);
            }
            let p_plus = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
            let mut rng = rng_from_seed(seed);
            let mut plus = 0u64;
            for _ in 0..shots {
                if rng.gen::<f64>() < p_plus {
                    plus += 1;
                }
            }
            let m = f64::from(shots);
            Ok((2.0 * plus as f64 - m) / m)
        }
    }
}
