//! One fine-tuning run per value of a single swept setting.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{sgd_train_features, CircuitSpec, TrainConfig};
use crate::datagen::LabeledDataset;
use crate::error::{Error, Result};
use crate::frontend::FrozenExtractor;
use crate::hybrid::{evaluate_features, FeatureSet};
use crate::qsim::MeasurementMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Qubits,
    TargetSize,
    Shots,
    Epochs,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qubits" => Ok(Self::Qubits),
            "target-size" | "target_size" => Ok(Self::TargetSize),
            "shots" => Ok(Self::Shots),
            "epochs" => Ok(Self::Epochs),
            other => Err(Error::InvalidArgument(format!("unknown sweep axis '{other}'"))),
        }
    }
}

pub const SWEEP_CSV_HEADER: &str = "value,train_loss,train_acc,test_loss,test_acc,est_proxy,exact_test_loss";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: u64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    /// Test loss minus training loss at the final epoch.
    pub est_proxy: f64,
    /// Test loss of the final model under exact measurement.
    pub exact_test_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.value, r.train_loss, r.train_acc, r.test_loss, r.test_acc, r.est_proxy, r.exact_test_loss
            )
            .expect("writing to a String");
        }
        out
    }
}

/// Runs one training per value, with the circuit and training seeds fixed
/// across values. `extractor_for(U)` supplies the frozen extractor for a
/// qubit count; it is called once for a non-qubit axis and once per value
/// on the qubit axis. Duplicate values are dropped (first occurrence kept)
/// with a warning.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    axis: SweepAxis,
    values: &[u64],
    circuit: &CircuitSpec,
    config: &TrainConfig,
    base_qubits: usize,
    target_train: &LabeledDataset,
    target_test: &LabeledDataset,
    extractor_for: &mut dyn FnMut(usize) -> Result<FrozenExtractor>,
) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    let mut warnings = Vec::new();
    let mut unique: Vec<u64> = Vec::with_capacity(values.len());
    for &v in values {
        if unique.contains(&v) {
            warnings.push(format!("duplicate sweep value {v} ignored"));
        } else {
            unique.push(v);
        }
    }
    let shared = if axis == SweepAxis::Qubits {
        None
    } else {
        let e = extractor_for(base_qubits)?;
        let train = FeatureSet::extract(&e, target_train)?;
        let test = FeatureSet::extract(&e, target_test)?;
        Some((e, train, test))
    };

    let mut rows = Vec::with_capacity(unique.len());
    for &v in &unique {
        let mut circuit = circuit.clone();
        let mut config = config.clone();
        let owned;
        let (extractor, train, test) = match (&shared, axis) {
            (None, _) => {
                let u = usize::try_from(v).map_err(|_| Error::InvalidArgument(format!("qubit count {v}")))?;
                let e = extractor_for(u)?;
                let train = FeatureSet::extract(&e, target_train)?;
                let test = FeatureSet::extract(&e, target_test)?;
                owned = (e, train, test);
                (&owned.0, owned.1.clone(), &owned.2)
            }
            (Some((e, train, test)), SweepAxis::TargetSize) => {
                let n = usize::try_from(v).unwrap_or(usize::MAX);
                if n == 0 || n > train.len() {
                    return Err(Error::InvalidArgument(format!(
                        "target size {v} outside 1..={}",
                        train.len()
                    )));
                }
                let subset = FeatureSet {
                    features: train.features[..n].to_vec(),
                    labels: train.labels[..n].to_vec(),
                };
                (e, subset, test)
            }
            (Some((e, train, test)), SweepAxis::Shots) => {
                let shots = u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("shot count {v}")))?;
                let seed = match circuit.mode {
                    MeasurementMode::Shots { seed, .. } => seed,
                    MeasurementMode::Exact => config.seed,
                };
                circuit.mode = MeasurementMode::shots(shots, seed)?;
                (e, train.clone(), test)
            }
            (Some((e, train, test)), _) => {
                config.epochs = usize::try_from(v).map_err(|_| Error::InvalidArgument(format!("epoch count {v}")))?;
                (e, train.clone(), test)
            }
        };
        let model = circuit.build(extractor.clone())?;
        let (trained, trace) = sgd_train_features(&model, &train, test, &config)?;
        let last = trace.last();
        let exact = evaluate_features(&trained.with_mode(MeasurementMode::Exact), test)?;
        rows.push(SweepRow {
            value: v,
            train_loss: last.train_loss,
            train_acc: last.train_acc,
            test_loss: last.test_loss,
            test_acc: last.test_acc,
            est_proxy: last.test_loss - last.train_loss,
            exact_test_loss: exact.loss,
        });
    }
    Ok(SweepTable { axis, rows, warnings })
}
