//! Hybrid quantum-classical classifiers: a frozen classical feature
//! extractor feeding a classically simulated variational quantum circuit.
//!
//! The pipeline is
//!
//! 1. pre-train an extractor ([`frontend`]) on a source task and freeze it,
//! 2. encode its `U` outputs into `U` qubits and run a parametrized circuit
//!    ([`vqc`], simulated by [`qsim`]),
//! 3. read two Pauli-Z expectations as logits ([`hybrid`]) and fine-tune the
//!    circuit angles by SGD with parameter-shift gradients ([`grad`],
//!    [`train`]).
//!
//! [`datagen`] provides the synthetic quantum-dot and DNA-motif benchmarks,
//! and [`train`] also hosts the error decomposition and bound calculators.

pub mod checkpoint;
pub mod datagen;
pub mod error;
pub mod frontend;
pub mod fsutil;
pub mod grad;
pub mod hybrid;
pub mod qsim;
pub mod seed;
pub mod train;
pub mod vqc;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointKind};
pub use datagen::{Condition, Descriptor, LabeledDataset, Sample, Split};
pub use error::{Error, Result};
pub use frontend::{ExtractorKind, FrozenExtractor, Provenance};
pub use grad::GradientVector;
pub use hybrid::{HybridModel, Label};
pub use qsim::{MeasurementMode, Statevector};
pub use train::{BoundConstants, ErrorDecomposition, TrainConfig, TrainTrace};
pub use vqc::CircuitParams;
