//! Fully connected extractor: ReLU hidden layers, linear output.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn init(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        // He-uniform for the ReLU stack.
        let bound = (6.0 / inputs as f64).sqrt();
        let weights = (0..inputs * outputs).map(|_| rng.gen_range(-bound..bound)).collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    /// `W x + b`, skipping zero inputs (one-hot sequences are mostly zeros).
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let nz: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
        let mut y = self.bias.clone();
        for (o, yo) in y.iter_mut().enumerate() {
            let row = &self.weights[o * self.inputs..][..self.inputs];
            *yo += nz.iter().map(|&i| row[i] * x[i]).sum::<f64>();
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
}

impl Mlp {
    /// `widths = [D, h_1, …, U]`.
    pub fn init(widths: &[usize], rng: &mut Rng) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidArgument(format!("invalid MLP widths {widths:?}")));
        }
        let layers = widths.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("MLP needs at least one layer".into()));
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs {
                return Err(Error::shape("dense weights", l.inputs * l.outputs, l.weights.len()));
            }
            if l.bias.len() != l.outputs {
                return Err(Error::shape("dense bias", l.outputs, l.bias.len()));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::shape("dense layer chaining", pair[0].outputs, pair[1].inputs));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").outputs
    }

    pub(crate) fn params(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut y = layer.apply(acts.last().expect("input"));
            if k < last {
                for v in &mut y {
                    *v = v.max(0.0);
                }
            }
            acts.push(y);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::shape("MLP input length", self.input_dim(), x.len()));
        }
        Ok(self.activations(x).pop().expect("output"))
    }

    /// Same contract as the tensor-train backward pass: `head` maps the
    /// output to its upstream gradient and parameter gradients are added to
    /// `grads` in [`Self::params`] order.
    pub(crate) fn forward_backward(
        &self,
        x: &[f64],
        head: impl FnOnce(&[f64]) -> Vec<f64>,
        grads: &mut [f64],
    ) -> Vec<f64> {
        let acts = self.activations(x);
        let out = acts.last().expect("output").clone();
        let mut g = head(&out);

        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.weights.len() + l.bias.len();
        }
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[k];
            let (gw, rest) = grads[offsets[k]..].split_at_mut(layer.weights.len());
            let gb = &mut rest[..layer.outputs];
            let nz: Vec<usize> = (0..input.len()).filter(|&i| input[i] != 0.0).collect();
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                gb[o] += go;
                let row = &mut gw[o * layer.inputs..][..layer.inputs];
                for &i in &nz {
                    row[i] += go * input[i];
                }
            }
            if k == 0 {
                break;
            }
            let mut g_in = vec![0.0; layer.inputs];
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..][..layer.inputs];
                for (gi, w) in g_in.iter_mut().zip(row) {
                    *gi += go * w;
                }
            }
            // ReLU mask from the stored post-activation.
            for (gi, a) in g_in.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *gi = 0.0;
                }
            }
            g = g_in;
        }
        out
    }
}
