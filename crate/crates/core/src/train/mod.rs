//! Fine-tuning of the circuit angles on a target task, with the error
//! decomposition and constant estimators used by the bound reports.

mod bounds;
mod sweep;

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datagen::LabeledDataset;
use crate::error::{Error, Result};
use crate::frontend::FrozenExtractor;
use crate::grad::{jacobian_from_state, loss_and_grad_from_features};
use crate::hybrid::{evaluate_features, Evaluation, FeatureSet, HybridModel};
use crate::qsim::MeasurementMode;
use crate::seed::{derive_seed, rng_from_seed, standard_normal};
use crate::vqc::{encode_tpe, CircuitParams};

pub use bounds::{bound_table, opt_error_bound, theorem3_lr, BoundColumn, BoundConstants, BoundReport, BoundTerm};
pub use sweep::{sweep, SweepAxis, SweepRow, SweepTable, SWEEP_CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LrMode {
    Fixed {
        lr: f64,
    },
    /// Step size from the Theorem-3 schedule with `T_sgd = epochs`; gradient
    /// norms above `r` are clipped to `r`.
    Theorem3 {
        r: f64,
        l: f64,
        beta: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr_mode: LrMode,
    pub batch_size: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl TrainConfig {
    pub fn fixed(epochs: usize, lr: f64, seed: u64) -> Self {
        Self {
            epochs,
            lr_mode: LrMode::Fixed { lr },
            batch_size: 1,
            seed,
            shuffle: true,
        }
    }

    /// Step size and optional clip radius.
    pub fn step(&self) -> Result<(f64, Option<f64>)> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        match self.lr_mode {
            LrMode::Fixed { lr } => {
                if !(lr.is_finite() && lr >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "learning rate must be finite and ≥ 0, got {lr}"
                    )));
                }
                Ok((lr, None))
            }
            LrMode::Theorem3 { r, l, beta } => Ok((theorem3_lr(r, l, beta, self.epochs as u64)?, Some(r))),
        }
    }
}

/// Circuit shape and initialization used to build a model around an
/// extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub depth: usize,
    /// Angles start uniform in `[−init_scale, init_scale)`.
    pub init_scale: f64,
    pub init_seed: u64,
    pub readout: (usize, usize),
    pub mode: MeasurementMode,
}

impl Default for CircuitSpec {
    fn default() -> Self {
        Self {
            depth: 2,
            init_scale: std::f64::consts::PI,
            init_seed: 0,
            readout: (0, 1),
            mode: MeasurementMode::Exact,
        }
    }
}

impl CircuitSpec {
    pub fn build(&self, extractor: FrozenExtractor) -> Result<HybridModel> {
        let params = CircuitParams::random(extractor.output_dim(), self.depth, self.init_scale, self.init_seed)?;
        HybridModel::with_readout(extractor, params, self.readout, self.mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    pub grad_norm_mean: f64,
    pub grad_norm_max: f64,
}

pub const TRACE_CSV_HEADER: &str = "epoch,train_loss,train_acc,test_loss,test_acc,grad_norm_mean,grad_norm_max";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub learning_rate: f64,
    pub clip_radius: Option<f64>,
    /// Train and test evaluation before the first update.
    pub initial_train: (f64, f64),
    pub initial_test: (f64, f64),
    pub records: Vec<EpochRecord>,
    pub extractor_checksum: String,
}

impl TrainTrace {
    pub fn last(&self) -> &EpochRecord {
        self.records.last().expect("training runs at least one epoch")
    }

    pub fn min_train_loss(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.train_loss)
            .fold(self.initial_train.0, f64::min)
    }

    /// One row per epoch under [`TRACE_CSV_HEADER`]. Floats use the shortest
    /// round-trip representation, so equal traces give equal bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.epoch, r.train_loss, r.train_acc, r.test_loss, r.test_acc, r.grad_norm_mean, r.grad_norm_max
            )
            .expect("writing to a String");
        }
        out
    }
}

fn as_pair(e: Evaluation) -> (f64, f64) {
    (e.loss, e.accuracy)
}

/// SGD on the circuit angles only. Features are extracted once; each epoch
/// visits the training set in a seeded shuffled order, averages per-sample
/// exact gradients over each batch (in sample order) and steps
/// `θ ← θ − η·g`. Evaluation uses the model's measurement mode.
pub fn sgd_train(
    model: &HybridModel,
    target_train: &LabeledDataset,
    target_test: &LabeledDataset,
    config: &TrainConfig,
) -> Result<(HybridModel, TrainTrace)> {
    let train = FeatureSet::extract(model.extractor(), target_train)?;
    let test = FeatureSet::extract(model.extractor(), target_test)?;
    sgd_train_features(model, &train, &test, config)
}

/// [`sgd_train`] on pre-extracted features.
pub fn sgd_train_features(
    model: &HybridModel,
    train: &FeatureSet,
    test: &FeatureSet,
    config: &TrainConfig,
) -> Result<(HybridModel, TrainTrace)> {
    let (lr, clip) = config.step()?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let checksum = model.extractor().checksum();
    let mut model = model.clone();
    let initial_train = as_pair(evaluate_features(&model, train)?);
    let initial_test = as_pair(evaluate_features(&model, test)?);

    let n_params = model.params().num_params();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut records = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng_from_seed(derive_seed(config.seed, epoch as u64)));
        }
        let mut norm_sum = 0.0;
        let mut norm_max: f64 = 0.0;
        let mut steps = 0usize;
        for batch in order.chunks(config.batch_size) {
            let mut g = vec![0.0; n_params];
            for &i in batch {
                let (loss, _, gi) =
                    loss_and_grad_from_features(model.params(), model.readout(), &train.features[i], train.labels[i])?;
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "training loss became non-finite in epoch {epoch}"
                    )));
                }
                for (a, b) in g.iter_mut().zip(gi.values()) {
                    *a += b;
                }
            }
            let inv = 1.0 / batch.len() as f64;
            g.iter_mut().for_each(|v| *v *= inv);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(Error::NonFinite(format!("gradient became non-finite in epoch {epoch}")));
            }
            norm_sum += norm;
            norm_max = norm_max.max(norm);
            steps += 1;
            let scale = match clip {
                Some(r) if norm > r => lr * r / norm,
                _ => lr,
            };
            if scale != 0.0 {
                for (theta, gk) in model.params_mut().angles_mut().iter_mut().zip(&g) {
                    *theta -= scale * gk;
                }
            }
        }
        let tr = evaluate_features(&model, train)?;
        let te = evaluate_features(&model, test)?;
        if !(tr.loss.is_finite() && te.loss.is_finite()) {
            return Err(Error::NonFinite(format!(
                "evaluation loss became non-finite in epoch {epoch}"
            )));
        }
        records.push(EpochRecord {
            epoch,
            train_loss: tr.loss,
            train_acc: tr.accuracy,
            test_loss: te.loss,
            test_acc: te.accuracy,
            grad_norm_mean: norm_sum / steps as f64,
            grad_norm_max: norm_max,
        });
    }
    let after = model.extractor().checksum();
    if after != checksum {
        return Err(Error::InvalidArgument(
            "extractor parameters changed during training".into(),
        ));
    }
    Ok((
        model,
        TrainTrace {
            learning_rate: lr,
            clip_radius: clip,
            initial_train,
            initial_test,
            records,
            extractor_checksum: checksum,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    pub approx_proxy: f64,
    pub est_proxy: f64,
    pub opt_proxy: f64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub oracle_min_train_loss: f64,
    pub oracle_epochs: usize,
    pub notes: DecompositionNotes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionNotes {
    pub approx_proxy: String,
    pub est_proxy: String,
    pub opt_proxy: String,
}

impl Default for DecompositionNotes {
    fn default() -> Self {
        Self {
            approx_proxy: "proxy: minimum training loss reached by a longer oracle run from the same initialization"
                .into(),
            est_proxy: "proxy: test loss minus training loss of the final model".into(),
            opt_proxy: "proxy: final training loss minus the oracle minimum training loss".into(),
        }
    }
}

/// Splits the final test loss into three proxies that add up to it:
/// `approx = oracle minimum`, `opt = train − oracle minimum`,
/// `est = test − train`. The oracle run is `sgd_train` from `model_init`
/// under `oracle`; the final model's own training loss also counts as a
/// candidate minimum.
pub fn decompose_errors(
    model_final: &HybridModel,
    model_init: &HybridModel,
    target_train: &LabeledDataset,
    target_test: &LabeledDataset,
    oracle: &TrainConfig,
) -> Result<ErrorDecomposition> {
    let train = FeatureSet::extract(model_final.extractor(), target_train)?;
    let test = FeatureSet::extract(model_final.extractor(), target_test)?;
    let (_, trace) = sgd_train_features(model_init, &train, &test, oracle)?;
    let train_loss = evaluate_features(model_final, &train)?.loss;
    let test_loss = evaluate_features(model_final, &test)?.loss;
    Ok(decompose_from_losses(
        train_loss,
        test_loss,
        trace.min_train_loss(),
        oracle.epochs,
    ))
}

/// The decomposition given the three losses.
pub fn decompose_from_losses(
    train_loss: f64,
    test_loss: f64,
    oracle_min: f64,
    oracle_epochs: usize,
) -> ErrorDecomposition {
    let min = oracle_min.min(train_loss);
    ErrorDecomposition {
        approx_proxy: min,
        est_proxy: test_loss - train_loss,
        opt_proxy: train_loss - min,
        train_loss,
        test_loss,
        oracle_min_train_loss: min,
        oracle_epochs,
        notes: DecompositionNotes::default(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimates {
    pub beta_hat: f64,
    pub l_hat: f64,
}

/// Finite-difference step for the Hessian-vector probes.
const HVP_STEP: f64 = 1e-4;

/// `L̂² = mean ‖∇⟨Z_r⟩‖²` and `β̂² = mean max_v ‖(∇⟨Z_r⟩(θ+hv) − ∇⟨Z_r⟩(θ))/h‖²`
/// over samples and the listed observables, with `probe_count` seeded
/// random unit directions `v` shared by all samples.
pub fn estimate_constants_from_features(
    params: &CircuitParams,
    features: &[Vec<f64>],
    observables: &[usize],
    probe_count: usize,
    seed: u64,
) -> Result<ConstantEstimates> {
    if probe_count == 0 {
        return Err(Error::InvalidArgument("probe_count must be at least 1".into()));
    }
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let p = params.num_params();
    if p == 0 {
        return Ok(ConstantEstimates {
            beta_hat: 0.0,
            l_hat: 0.0,
        });
    }
    let mut rng = rng_from_seed(seed);
    let probes: Vec<Vec<f64>> = (0..probe_count)
        .map(|_| {
            let v: Vec<f64> = (0..p).map(|_| standard_normal(&mut rng)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect();
    let shifted: Vec<CircuitParams> = probes
        .iter()
        .map(|v| {
            let mut q = params.clone();
            for (a, d) in q.angles_mut().iter_mut().zip(v) {
                *a += HVP_STEP * d;
            }
            q
        })
        .collect();

    let mut l_sum = 0.0;
    let mut b_sum = 0.0;
    let mut count = 0usize;
    for f in features {
        let encoded = encode_tpe(f)?;
        if encoded.num_qubits() != params.num_qubits() {
            return Err(Error::shape(
                "feature length",
                params.num_qubits(),
                encoded.num_qubits(),
            ));
        }
        let base = jacobian_from_state(params, encoded.clone());
        let moved: Vec<_> = shifted
            .iter()
            .map(|q| jacobian_from_state(q, encoded.clone()))
            .collect();
        for &obs in observables {
            if obs >= params.num_qubits() {
                return Err(Error::QubitOutOfRange {
                    index: obs,
                    num_qubits: params.num_qubits(),
                });
            }
            let g0 = base.column(obs);
            l_sum += g0.norm_sqr();
            let mut best: f64 = 0.0;
            for m in &moved {
                let hv: f64 = m
                    .column(obs)
                    .values()
                    .iter()
                    .zip(g0.values())
                    .map(|(a, b)| ((a - b) / HVP_STEP).powi(2))
                    .sum();
                best = best.max(hv);
            }
            b_sum += best;
            count += 1;
        }
    }
    let l_hat = (l_sum / count as f64).sqrt();
    let beta_hat = (b_sum / count as f64).sqrt();
    if !(l_hat.is_finite() && beta_hat.is_finite()) {
        return Err(Error::NonFinite("constant estimate is not finite".into()));
    }
    Ok(ConstantEstimates { beta_hat, l_hat })
}

/// [`estimate_constants_from_features`] over a dataset and both readouts.
pub fn estimate_constants(
    model: &HybridModel,
    dataset: &LabeledDataset,
    probe_count: usize,
    seed: u64,
) -> Result<ConstantEstimates> {
    let set = FeatureSet::extract(model.extractor(), dataset)?;
    let (a, b) = model.readout();
    estimate_constants_from_features(model.params(), &set.features, &[a, b], probe_count, seed)
}
