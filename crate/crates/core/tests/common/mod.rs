#![allow(dead_code)]

use num_complex::Complex64;
use vqc_transfer::frontend::{Dense, ExtractorParams, Mlp};
use vqc_transfer::{FrozenExtractor, Provenance};

pub type Matrix = Vec<Vec<Complex64>>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Written out from the Pauli exponentials, independent of the library tables.
pub fn rot(axis: char, t: f64) -> [[Complex64; 2]; 2] {
    let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
    match axis {
        'x' => [[c(co, 0.0), c(0.0, -si)], [c(0.0, -si), c(co, 0.0)]],
        'y' => [[c(co, 0.0), c(-si, 0.0)], [c(si, 0.0), c(co, 0.0)]],
        'z' => [[c(co, -si), c(0.0, 0.0)], [c(0.0, 0.0), c(co, si)]],
        _ => unreachable!(),
    }
}

pub fn identity(n: usize) -> Matrix {
    let dim = 1 << n;
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
                .collect()
        })
        .collect()
}

/// Full 2^n matrix of a single-qubit gate on qubit `q` (bit `q` of the index).
pub fn embed_1q(n: usize, q: usize, g: &[[Complex64; 2]; 2]) -> Matrix {
    let dim = 1 << n;
    let mut m = vec![vec![c(0.0, 0.0); dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            if (i & !(1 << q)) == (j & !(1 << q)) {
                *e = g[(i >> q) & 1][(j >> q) & 1];
            }
        }
    }
    m
}

pub fn cnot_matrix(n: usize, control: usize, target: usize) -> Matrix {
    let dim = 1 << n;
    let mut m = vec![vec![c(0.0, 0.0); dim]; dim];
    for j in 0..dim {
        let i = if (j >> control) & 1 == 1 { j ^ (1 << target) } else { j };
        m[i][j] = c(1.0, 0.0);
    }
    m
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn apply(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Dense unitary of the layered circuit: ring of CNOTs (a single 0→1 for two
/// qubits) then RZ·RY·RX per qubit.
pub fn circuit_unitary(n: usize, layers: &[Vec<[f64; 3]>]) -> Matrix {
    let mut u = identity(n);
    for layer in layers {
        let pairs: Vec<(usize, usize)> = match n {
            1 => vec![],
            2 => vec![(0, 1)],
            _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        };
        for (a, b) in pairs {
            u = matmul(&cnot_matrix(n, a, b), &u);
        }
        for (q, ang) in layer.iter().enumerate() {
            for (axis, t) in [('x', ang[0]), ('y', ang[1]), ('z', ang[2])] {
                u = matmul(&embed_1q(n, q, &rot(axis, t)), &u);
            }
        }
    }
    u
}

/// Product state with qubit amplitudes `[cos(π/2·φ), sin(π/2·φ)]`.
pub fn encoded(features: &[f64]) -> Vec<Complex64> {
    let n = features.len();
    let phi: Vec<f64> = features.iter().map(|x| 1.0 / (1.0 + (-x).exp())).collect();
    (0..1usize << n)
        .map(|i| {
            let mut a = 1.0;
            for (q, p) in phi.iter().enumerate() {
                let t = std::f64::consts::FRAC_PI_2 * p;
                a *= if (i >> q) & 1 == 1 { t.sin() } else { t.cos() };
            }
            c(a, 0.0)
        })
        .collect()
}

pub fn z_expectation(v: &[Complex64], q: usize) -> f64 {
    v.iter()
        .enumerate()
        .map(|(i, a)| if (i >> q) & 1 == 1 { -a.norm_sqr() } else { a.norm_sqr() })
        .sum()
}

/// `y = W x + b` as a one-layer MLP extractor.
pub fn linear_extractor(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> FrozenExtractor {
    let outputs = weights.len();
    let inputs = weights[0].len();
    let layer = Dense {
        inputs,
        outputs,
        weights: weights.into_iter().flatten().collect(),
        bias,
    };
    FrozenExtractor::new(
        ExtractorParams::Mlp(Mlp::from_layers(vec![layer]).unwrap()),
        Provenance::default(),
    )
    .unwrap()
}

pub fn identity_extractor(n: usize) -> FrozenExtractor {
    let w = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    linear_extractor(w, vec![0.0; n])
}
