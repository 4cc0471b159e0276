//! Frozen classical feature extractors.
//!
//! Every extractor maps `ℝ^D → ℝ^U` and is immutable once built: the only
//! way to obtain one is through a fit or pre-training routine (or by
//! wrapping explicit parameters), and no method takes `&mut self`.

mod mlp;
mod pca;
mod pretrain;
mod ttn;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use mlp::{Dense, Mlp};
pub use pca::{Pca, PcaFit};
pub use pretrain::{pretrain_extractor, Architecture, PretrainConfig};
pub use ttn::{ttn_forward, ttn_forward_product, SiteTensorTrain, TtCore, TtnSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractorKind {
    Pca,
    Ttn,
    Mlp,
}

impl std::fmt::Display for ExtractorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pca => "pca",
            Self::Ttn => "ttn",
            Self::Mlp => "mlp",
        })
    }
}

impl std::str::FromStr for ExtractorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pca" => Ok(Self::Pca),
            "ttn" => Ok(Self::Ttn),
            "mlp" => Ok(Self::Mlp),
            other => Err(Error::InvalidArgument(format!("unknown extractor kind '{other}'"))),
        }
    }
}

/// Record of how an extractor was obtained.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Identifier of the source dataset (descriptor hash or a free label).
    pub source_id: String,
    pub source_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Source-task loss of the initialization, before any update.
    pub initial_source_loss: Option<f64>,
    pub final_source_loss: Option<f64>,
    pub final_source_accuracy: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExtractorParams {
    Pca(Pca),
    Mlp(Mlp),
    /// Position-shared tensor train over sequence sites.
    SiteTtn(SiteTensorTrain),
    /// Explicit TT-matrix; inputs are zero-padded to its input size.
    TtnMatrix {
        input_dim: usize,
        spec: TtnSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenExtractor {
    params: ExtractorParams,
    provenance: Provenance,
}

impl FrozenExtractor {
    pub fn new(params: ExtractorParams, provenance: Provenance) -> Result<Self> {
        if let ExtractorParams::TtnMatrix { input_dim, spec } = &params {
            if *input_dim == 0 || *input_dim > spec.input_size() {
                return Err(Error::shape(
                    "TT-matrix input dimension (max)",
                    spec.input_size(),
                    *input_dim,
                ));
            }
        }
        Ok(Self { params, provenance })
    }

    /// Fits PCA and wraps it; zero-variance warnings go into the provenance.
    pub fn fit_pca(data: &[Vec<f64>], k: usize, seed: u64, source_id: impl Into<String>) -> Result<Self> {
        let fit = Pca::fit(data, k, seed)?;
        let provenance = Provenance {
            source_id: source_id.into(),
            source_size: data.len(),
            seed,
            warnings: fit.warnings,
            ..Provenance::default()
        };
        Self::new(ExtractorParams::Pca(fit.pca), provenance)
    }

    pub fn kind(&self) -> ExtractorKind {
        match self.params {
            ExtractorParams::Pca(_) => ExtractorKind::Pca,
            ExtractorParams::Mlp(_) => ExtractorKind::Mlp,
            ExtractorParams::SiteTtn(_) | ExtractorParams::TtnMatrix { .. } => ExtractorKind::Ttn,
        }
    }

    pub fn input_dim(&self) -> usize {
        match &self.params {
            ExtractorParams::Pca(p) => p.input_dim(),
            ExtractorParams::Mlp(m) => m.input_dim(),
            ExtractorParams::SiteTtn(t) => t.input_dim(),
            ExtractorParams::TtnMatrix { input_dim, .. } => *input_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match &self.params {
            ExtractorParams::Pca(p) => p.output_dim(),
            ExtractorParams::Mlp(m) => m.output_dim(),
            ExtractorParams::SiteTtn(t) => t.output_dim(),
            ExtractorParams::TtnMatrix { spec, .. } => spec.output_dim(),
        }
    }

    /// Always true; kept so reports can state it explicitly.
    pub fn frozen(&self) -> bool {
        true
    }

    pub fn params(&self) -> &ExtractorParams {
        &self.params
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::shape("extractor input length", self.input_dim(), x.len()));
        }
        match &self.params {
            ExtractorParams::Pca(p) => p.project(x),
            ExtractorParams::Mlp(m) => m.forward(x),
            ExtractorParams::SiteTtn(t) => t.forward(x),
            ExtractorParams::TtnMatrix { spec, .. } => ttn_forward(spec, x),
        }
    }

    /// Applies the extractor to every row.
    pub fn apply_all<'a>(&self, xs: impl IntoIterator<Item = &'a [f64]>) -> Result<Vec<Vec<f64>>> {
        xs.into_iter().map(|x| self.apply(x)).collect()
    }

    fn visit_params(&self, mut f: impl FnMut(f64)) {
        match &self.params {
            ExtractorParams::Pca(p) => p.params().for_each(f),
            ExtractorParams::Mlp(m) => m.params().into_iter().flatten().copied().for_each(f),
            ExtractorParams::SiteTtn(t) => t.params().into_iter().flatten().copied().for_each(f),
            ExtractorParams::TtnMatrix { spec, .. } => {
                for core in spec.cores() {
                    core.data.iter().copied().for_each(&mut f);
                }
            }
        }
    }

    pub fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit_params(|_| n += 1);
        n
    }

    /// SHA-256 (hex) over the kind, the dimensions and the bit patterns of
    /// every parameter.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.kind().to_string().as_bytes());
        h.update((self.input_dim() as u64).to_le_bytes());
        h.update((self.output_dim() as u64).to_le_bytes());
        self.visit_params(|v| h.update(v.to_bits().to_le_bytes()));
        hex::encode(h.finalize())
    }
}
