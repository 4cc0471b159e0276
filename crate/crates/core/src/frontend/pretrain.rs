//! Source-task pre-training of an extractor with a throwaway linear-softmax
//! head.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{ExtractorParams, FrozenExtractor, Mlp, Provenance, SiteTensorTrain};
use crate::datagen::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    /// Hidden widths; the final layer has width `output_dim`.
    Mlp { hidden: Vec<usize> },
    /// Windowed tensor train over `D / site_width` sites.
    Ttn {
        site_width: usize,
        window: usize,
        bond: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub architecture: Architecture,
    pub output_dim: usize,
    pub head_dim: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Global gradient-norm clip per update; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl PretrainConfig {
    pub fn mlp(hidden: Vec<usize>, output_dim: usize, epochs: usize, lr: f64, seed: u64) -> Self {
        Self {
            architecture: Architecture::Mlp { hidden },
            output_dim,
            head_dim: 2,
            epochs,
            lr,
            batch_size: 16,
            clip_norm: Some(5.0),
            seed,
        }
    }

    pub fn ttn(
        site_width: usize,
        window: usize,
        bond: usize,
        output_dim: usize,
        epochs: usize,
        lr: f64,
        seed: u64,
    ) -> Self {
        Self {
            architecture: Architecture::Ttn {
                site_width,
                window,
                bond,
            },
            output_dim,
            head_dim: 2,
            epochs,
            lr,
            batch_size: 8,
            clip_norm: Some(1.0),
            seed,
        }
    }
}

enum Net {
    Mlp(Mlp),
    Ttn(SiteTensorTrain),
}

impl Net {
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Mlp(m) => m.forward(x).expect("input length validated"),
            Self::Ttn(t) => t.forward(x).expect("input length validated"),
        }
    }

    fn forward_backward(&self, x: &[f64], head: impl FnOnce(&[f64]) -> Vec<f64>, grads: &mut [f64]) -> Vec<f64> {
        match self {
            Self::Mlp(m) => m.forward_backward(x, head, grads),
            Self::Ttn(t) => t.forward_backward(x, head, grads),
        }
    }

    fn num_params(&self) -> usize {
        match self {
            Self::Mlp(m) => m.params().iter().map(|p| p.len()).sum(),
            Self::Ttn(t) => t.params().iter().map(|p| p.len()).sum(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Self::Mlp(m) => m.params_mut(),
            Self::Ttn(t) => t.params_mut().into_iter().collect(),
        }
    }
}

/// Linear-softmax head: `logits = W f + b`, `W` row-major `classes × U`.
struct Head {
    classes: usize,
    width: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Head {
    fn logits(&self, f: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|c| {
                self.bias[c]
                    + self.weights[c * self.width..][..self.width]
                        .iter()
                        .zip(f)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect()
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn cross_entropy(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(f64::MIN_POSITIVE).ln()
}

fn evaluate(net: &Net, head: &Head, source: &LabeledDataset) -> (f64, f64) {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for s in source.samples() {
        let p = softmax(&head.logits(&net.forward(&s.x)));
        loss += cross_entropy(&p, usize::from(s.label));
        let pred = (0..p.len()).fold(0, |best, c| if p[c] > p[best] { c } else { best });
        correct += usize::from(pred == usize::from(s.label));
    }
    let n = source.len() as f64;
    (loss / n, correct as f64 / n)
}

/// Trains extractor and head jointly by minibatch SGD on the source task's
/// cross-entropy, then discards the head. Deterministic given the seed.
pub fn pretrain_extractor(config: &PretrainConfig, source: &LabeledDataset) -> Result<FrozenExtractor> {
    if source.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.output_dim == 0 || config.head_dim < 2 {
        return Err(Error::InvalidArgument(
            "pre-training needs output_dim ≥ 1 and head_dim ≥ 2".into(),
        ));
    }
    if !(config.lr >= 0.0 && config.lr.is_finite()) || config.batch_size == 0 {
        return Err(Error::InvalidArgument(
            "pre-training needs lr ≥ 0 and batch_size ≥ 1".into(),
        ));
    }
    if let Some(s) = source
        .samples()
        .iter()
        .find(|s| usize::from(s.label) >= config.head_dim)
    {
        return Err(Error::InvalidLabel(s.label));
    }
    let d = source.dim();
    let mut rng = rng_from_seed(config.seed);
    let mut net = match &config.architecture {
        Architecture::Mlp { hidden } => {
            let mut widths = vec![d];
            widths.extend(hidden);
            widths.push(config.output_dim);
            Net::Mlp(Mlp::init(&widths, &mut rng)?)
        }
        Architecture::Ttn {
            site_width,
            window,
            bond,
        } => {
            if *site_width == 0 || !d.is_multiple_of(*site_width) {
                return Err(Error::InvalidArgument(format!(
                    "input dimension {d} is not a multiple of site width {site_width}"
                )));
            }
            Net::Ttn(SiteTensorTrain::init(
                *site_width,
                d / site_width,
                *window,
                *bond,
                config.output_dim,
                &mut rng,
            )?)
        }
    };
    let u = config.output_dim;
    let bound = 1.0 / (u as f64).sqrt();
    let mut head = Head {
        classes: config.head_dim,
        width: u,
        weights: (0..config.head_dim * u).map(|_| rng.gen_range(-bound..bound)).collect(),
        bias: vec![0.0; config.head_dim],
    };

    let (initial_loss, mut accuracy) = evaluate(&net, &head, source);
    if !initial_loss.is_finite() {
        return Err(Error::NonFinite("source loss is not finite at initialization".into()));
    }
    let mut final_loss = initial_loss;

    let n_net = net.num_params();
    let n_head = head.weights.len() + head.bias.len();
    let mut order: Vec<usize> = (0..source.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng_from_seed(derive_seed(config.seed, epoch as u64)));
        for batch in order.chunks(config.batch_size) {
            let mut g_net = vec![0.0; n_net];
            let mut g_head = vec![0.0; n_head];
            let mut batch_loss = 0.0;
            for &i in batch {
                let sample = &source.samples()[i];
                let label = usize::from(sample.label);
                let (gw, gb) = g_head.split_at_mut(head.weights.len());
                let head_ref = &head;
                let mut loss = 0.0;
                net.forward_backward(
                    &sample.x,
                    |f| {
                        let p = softmax(&head_ref.logits(f));
                        loss = cross_entropy(&p, label);
                        let mut grad_f = vec![0.0; u];
                        for c in 0..head_ref.classes {
                            let r = p[c] - if c == label { 1.0 } else { 0.0 };
                            gb[c] += r;
                            for k in 0..u {
                                gw[c * u + k] += r * f[k];
                                grad_f[k] += r * head_ref.weights[c * u + k];
                            }
                        }
                        grad_f
                    },
                    &mut g_net,
                );
                batch_loss += loss;
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "source loss became non-finite in epoch {epoch}"
                )));
            }
            let scale = 1.0 / batch.len() as f64;
            let norm = (g_net.iter().chain(&g_head).map(|g| g * g).sum::<f64>()).sqrt() * scale;
            if !norm.is_finite() {
                return Err(Error::NonFinite(format!("gradient became non-finite in epoch {epoch}")));
            }
            let clip = config.clip_norm.map_or(1.0, |c| if norm > c { c / norm } else { 1.0 });
            let step = config.lr * scale * clip;
            let mut g = g_net.iter();
            for part in net.params_mut() {
                for (p, gi) in part.iter_mut().zip(&mut g) {
                    *p -= step * gi;
                }
            }
            let (gw, gb) = g_head.split_at(head.weights.len());
            for (p, gi) in head.weights.iter_mut().zip(gw) {
                *p -= step * gi;
            }
            for (p, gi) in head.bias.iter_mut().zip(gb) {
                *p -= step * gi;
            }
        }
        let (loss, acc) = evaluate(&net, &head, source);
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "source loss became non-finite in epoch {epoch}"
            )));
        }
        final_loss = loss;
        accuracy = acc;
    }

    let provenance = Provenance {
        source_id: source.id(),
        source_size: source.len(),
        epochs: config.epochs,
        seed: config.seed,
        initial_source_loss: Some(initial_loss),
        final_source_loss: Some(final_loss),
        final_source_accuracy: Some(accuracy),
        warnings: Vec::new(),
    };
    let params = match net {
        Net::Mlp(m) => ExtractorParams::Mlp(m),
        Net::Ttn(t) => ExtractorParams::SiteTtn(t),
    };
    FrozenExtractor::new(params, provenance)
}
