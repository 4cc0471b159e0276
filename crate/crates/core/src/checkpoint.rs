//! Versioned model checkpoints.
//!
//! Layout: magic `VQCM`, format version `u16` (LE), payload length `u64`
//! (LE), then a JSON payload. Floats are written in shortest round-trip form
//! and parsed back exactly, so parameters survive bit-for-bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{ExtractorKind, FrozenExtractor};
use crate::hybrid::HybridModel;
use crate::qsim::MeasurementMode;
use crate::vqc::CircuitParams;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"VQCM";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointKind {
    /// A frozen extractor on its own.
    Extractor,
    /// Extractor plus fine-tuned circuit.
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub kind: CheckpointKind,
    pub extractor_kind: ExtractorKind,
    pub extractor: FrozenExtractor,
    pub circuit: Option<CircuitParams>,
    pub readout: Option<(usize, usize)>,
    pub mode: Option<MeasurementMode>,
}

impl Checkpoint {
    pub fn from_extractor(extractor: FrozenExtractor) -> Self {
        Self {
            kind: CheckpointKind::Extractor,
            extractor_kind: extractor.kind(),
            extractor,
            circuit: None,
            readout: None,
            mode: None,
        }
    }

    pub fn from_model(model: &HybridModel) -> Self {
        Self {
            kind: CheckpointKind::Hybrid,
            extractor_kind: model.extractor().kind(),
            extractor: model.extractor().clone(),
            circuit: Some(model.params().clone()),
            readout: Some(model.readout()),
            mode: Some(model.mode()),
        }
    }

    /// Rebuilds the hybrid model; fails for extractor-only checkpoints.
    pub fn model(&self) -> Result<HybridModel> {
        let circuit = self
            .circuit
            .clone()
            .ok_or_else(|| Error::Format("checkpoint holds an extractor only, not a trained model".into()))?;
        HybridModel::with_readout(
            self.extractor.clone(),
            circuit,
            self.readout.unwrap_or((0, 1)),
            self.mode.unwrap_or_default(),
        )
    }

    /// The extractor, checked against the qubit count a run expects.
    pub fn extractor_for(&self, qubits: usize) -> Result<&FrozenExtractor> {
        if self.extractor.output_dim() != qubits {
            return Err(Error::InvalidArgument(format!(
                "checkpoint extractor outputs {} features but the run expects U = {qubits}",
                self.extractor.output_dim()
            )));
        }
        Ok(&self.extractor)
    }
}

pub fn save_checkpoint<W: Write>(mut w: W, checkpoint: &Checkpoint) -> Result<()> {
    let payload = serde_json::to_vec(checkpoint)?;
    let mut buf = Vec::with_capacity(payload.len() + 14);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    buf.extend_from_slice(&payload);
    w.write_all(&buf)?;
    Ok(())
}

pub fn load_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    if data.len() < 14 {
        return Err(Error::Format("checkpoint truncated in header".into()));
    }
    if &data[..4] != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad magic, not a checkpoint".into()));
    }
    let version = u16::from_le_bytes([data[4], data[5]]);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            found: version,
            supported: CHECKPOINT_VERSION,
        });
    }
    let len = u64::from_le_bytes(data[6..14].try_into().expect("8 bytes"));
    let payload = &data[14..];
    if payload.len() as u64 != len {
        return Err(Error::Format(format!(
            "checkpoint payload is {} bytes, header says {len}",
            payload.len()
        )));
    }
    serde_json::from_slice(payload).map_err(|e| Error::Format(format!("checkpoint payload: {e}")))
}
