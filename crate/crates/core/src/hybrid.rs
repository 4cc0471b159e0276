//! Frozen extractor composed with a VQC, read out through softmax over two
//! Pauli-Z expectations.

use serde::{Deserialize, Serialize};

use crate::datagen::LabeledDataset;
use crate::error::{Error, Result};
use crate::frontend::FrozenExtractor;
use crate::qsim::MeasurementMode;
use crate::vqc::{vqc_forward, CircuitParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Zero,
    One,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Self::Zero => 0,
            Self::One => 1,
        }
    }

    pub fn one_hot(self) -> [f64; 2] {
        match self {
            Self::Zero => [1.0, 0.0],
            Self::One => [0.0, 1.0],
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Self::Zero),
            1 => Ok(Self::One),
            other => Err(Error::InvalidLabel(other)),
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.index() as u8
    }
}

/// Numerically stable two-way softmax.
pub fn softmax_pair(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// `−log softmax(z)[label]` via log-sum-exp.
pub fn softmax_cross_entropy(logits: [f64; 2], label: Label) -> f64 {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    lse - logits[label.index()]
}

/// Class with the larger probability; ties go to class 0.
pub fn predict_from_logits(logits: [f64; 2]) -> (Label, [f64; 2]) {
    let p = softmax_pair(logits);
    let class = if p[1] > p[0] { Label::One } else { Label::Zero };
    (class, p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    extractor: FrozenExtractor,
    params: CircuitParams,
    readout: (usize, usize),
    mode: MeasurementMode,
}

impl HybridModel {
    /// Model with the default readout `(0, 1)` and exact measurement.
    pub fn new(extractor: FrozenExtractor, params: CircuitParams) -> Result<Self> {
        Self::with_readout(extractor, params, (0, 1), MeasurementMode::Exact)
    }

    pub fn with_readout(
        extractor: FrozenExtractor,
        params: CircuitParams,
        readout: (usize, usize),
        mode: MeasurementMode,
    ) -> Result<Self> {
        let u = params.num_qubits();
        if extractor.output_dim() != u {
            return Err(Error::shape(
                "extractor output dim vs qubit count",
                u,
                extractor.output_dim(),
            ));
        }
        if readout.0 == readout.1 {
            return Err(Error::InvalidArgument(format!(
                "readout qubits must be distinct, got ({}, {})",
                readout.0, readout.1
            )));
        }
        for q in [readout.0, readout.1] {
            if q >= u {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits: u,
                });
            }
        }
        Ok(Self {
            extractor,
            params,
            readout,
            mode,
        })
    }

    pub fn extractor(&self) -> &FrozenExtractor {
        &self.extractor
    }

    pub fn params(&self) -> &CircuitParams {
        &self.params
    }

    pub fn readout(&self) -> (usize, usize) {
        self.readout
    }

    pub fn mode(&self) -> MeasurementMode {
        self.mode
    }

    pub fn num_qubits(&self) -> usize {
        self.params.num_qubits()
    }

    /// Same extractor and readout, new circuit angles.
    pub fn with_params(&self, params: CircuitParams) -> Result<Self> {
        Self::with_readout(self.extractor.clone(), params, self.readout, self.mode)
    }

    pub fn with_mode(&self, mode: MeasurementMode) -> Self {
        Self { mode, ..self.clone() }
    }

    pub(crate) fn params_mut(&mut self) -> &mut CircuitParams {
        &mut self.params
    }

    /// Logits from already-extracted features, in the model's mode.
    pub fn logits_from_features(&self, features: &[f64]) -> Result<[f64; 2]> {
        let out = vqc_forward(&self.params, features, self.mode)?;
        Ok([out.expectations[self.readout.0], out.expectations[self.readout.1]])
    }
}

/// Extractor, then circuit, then the two readout expectations as logits.
pub fn hybrid_forward(model: &HybridModel, x: &[f64]) -> Result<[f64; 2]> {
    let features = model.extractor.apply(x)?;
    model.logits_from_features(&features)
}

pub fn predict(model: &HybridModel, x: &[f64]) -> Result<(Label, [f64; 2])> {
    Ok(predict_from_logits(hybrid_forward(model, x)?))
}

/// Mean cross-entropy over the dataset, summed in sample order.
pub fn empirical_loss(model: &HybridModel, dataset: &LabeledDataset) -> Result<f64> {
    Ok(evaluate(model, dataset)?.loss)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

/// Loss and accuracy on a dataset.
pub fn evaluate(model: &HybridModel, dataset: &LabeledDataset) -> Result<Evaluation> {
    let features = FeatureSet::extract(model.extractor(), dataset)?;
    evaluate_features(model, &features)
}

/// Extracted features with their labels. The extractor is frozen, so
/// training extracts once and reuses the result every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
}

impl FeatureSet {
    pub fn extract(extractor: &FrozenExtractor, dataset: &LabeledDataset) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut features = Vec::with_capacity(dataset.len());
        let mut labels = Vec::with_capacity(dataset.len());
        for s in dataset.samples() {
            features.push(extractor.apply(&s.x)?);
            labels.push(Label::try_from(s.label)?);
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn evaluate_features(model: &HybridModel, set: &FeatureSet) -> Result<Evaluation> {
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (f, &label) in set.features.iter().zip(&set.labels) {
        let logits = model.logits_from_features(f)?;
        loss += softmax_cross_entropy(logits, label);
        correct += usize::from(predict_from_logits(logits).0 == label);
    }
    let n = set.len() as f64;
    Ok(Evaluation {
        loss: loss / n,
        accuracy: correct as f64 / n,
    })
}
