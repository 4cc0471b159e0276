//! Synthetic datasets: quantum-dot charge-stability diagrams and one-hot DNA
//! sequences with a planted binding motif.
//!
//! Every dataset carries a [`Descriptor`] from which it can be regenerated
//! bit-identically. Sample `i` of a generated set always uses the seed
//! `derive_seed(master, i)`, so generation order never matters.

mod container;
mod dna;
mod dots;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

pub use container::{
    read_container, read_dataset, write_container, ContainerHeader, CONTAINER_MAGIC, CONTAINER_VERSION,
};
pub use dna::{
    gen_tfbs_dataset, one_hot_encode_dna, random_sequence, tfbs_sequence, DEFAULT_MOTIF, DNA_LEN, ONE_HOT_DIM,
};
pub use dots::{
    gen_dot_dataset, gen_dot_diagram, gen_dot_source, structure_report, DotDiagram, DotKind, DotParams,
    StructureReport, DOT_SIZE,
};

/// Stream index reserved for the train/test shuffle.
const SPLIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Source,
    Train,
    Test,
    /// Train records followed by test records; the first `floor(0.9·N)`
    /// records are the training part.
    All,
}

impl Split {
    pub fn code(self) -> u8 {
        match self {
            Self::Source => 0,
            Self::Train => 1,
            Self::Test => 2,
            Self::All => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Self::Source),
            1 => Ok(Self::Train),
            2 => Ok(Self::Test),
            3 => Ok(Self::All),
            other => Err(Error::Format(format!("unknown split code {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Clean,
    Noisy,
    /// Clean and noisy samples interleaved.
    Mixed,
}

impl Condition {
    pub fn code(self) -> u8 {
        match self {
            Self::Clean => 0,
            Self::Noisy => 1,
            Self::Mixed => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Self::Clean),
            1 => Ok(Self::Noisy),
            2 => Ok(Self::Mixed),
            other => Err(Error::Format(format!("unknown condition code {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Generator {
    Dots {
        n_per_condition: usize,
        seed: u64,
        params: DotParams,
    },
    DotSource {
        n: usize,
        seed: u64,
        params: DotParams,
    },
    Tfbs {
        n: usize,
        motif: String,
        background_gc: f64,
        mutation_prob: f64,
        seed: u64,
    },
    /// Data not produced by a generator in this crate; cannot be regenerated.
    External {
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub generator: Generator,
    pub condition: Condition,
    pub split: Split,
    /// Prefix length applied after selecting the split.
    pub take: Option<usize>,
}

impl Descriptor {
    pub fn external(name: impl Into<String>, condition: Condition, split: Split) -> Self {
        Self {
            generator: Generator::External { name: name.into() },
            condition,
            split,
            take: None,
        }
    }

    /// Rebuilds the dataset this descriptor was recorded from.
    pub fn regenerate(&self) -> Result<LabeledDataset> {
        let full = match &self.generator {
            Generator::Dots {
                n_per_condition,
                seed,
                params,
            } => {
                let (clean, noisy) = gen_dot_dataset(*n_per_condition, *seed, params)?;
                match self.condition {
                    Condition::Clean => clean,
                    Condition::Noisy => noisy,
                    Condition::Mixed => {
                        return Err(Error::InvalidArgument("dot target datasets are clean or noisy".into()))
                    }
                }
            }
            Generator::DotSource { n, seed, params } => gen_dot_source(*n, *seed, params)?,
            Generator::Tfbs {
                n,
                motif,
                background_gc,
                mutation_prob,
                seed,
            } => gen_tfbs_dataset(*n, motif, *background_gc, *mutation_prob, *seed)?,
            Generator::External { name } => {
                return Err(Error::InvalidArgument(format!(
                    "dataset '{name}' has no generator and cannot be regenerated"
                )))
            }
        };
        let selected = match self.split {
            Split::All | Split::Source => full.relabel_split(self.split),
            Split::Train => full.train_test()?.0,
            Split::Test => full.train_test()?.1,
        };
        Ok(match self.take {
            Some(n) => selected.take(n)?,
            None => selected,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    descriptor: Descriptor,
    dim: usize,
    samples: Vec<Sample>,
}

impl LabeledDataset {
    pub fn new(dim: usize, samples: Vec<Sample>, descriptor: Descriptor) -> Result<Self> {
        for s in &samples {
            if s.x.len() != dim {
                return Err(Error::shape("sample length", dim, s.x.len()));
            }
            if s.label > 1 {
                return Err(Error::InvalidLabel(s.label));
            }
        }
        Ok(Self {
            descriptor,
            dim,
            samples,
        })
    }

    /// In-memory dataset without a generator, e.g. for tests.
    pub fn from_xy(name: &str, xs: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if xs.len() != labels.len() {
            return Err(Error::shape("label count", xs.len(), labels.len()));
        }
        let dim = xs.first().map_or(0, Vec::len);
        let samples = xs
            .into_iter()
            .zip(labels)
            .map(|(x, label)| Sample { x, label })
            .collect();
        Self::new(dim, samples, Descriptor::external(name, Condition::Clean, Split::All))
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    pub fn split(&self) -> Split {
        self.descriptor.split
    }

    pub fn condition(&self) -> Condition {
        self.descriptor.condition
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.x.clone()).collect()
    }

    pub fn label_counts(&self) -> [usize; 2] {
        let ones = self.samples.iter().filter(|s| s.label == 1).count();
        [self.len() - ones, ones]
    }

    /// Short stable identifier derived from the descriptor.
    pub fn id(&self) -> String {
        let json = serde_json::to_vec(&self.descriptor).expect("descriptor serializes");
        let digest = Sha256::digest(json);
        let name = match &self.descriptor.generator {
            Generator::Dots { .. } => "dots",
            Generator::DotSource { .. } => "dot-source",
            Generator::Tfbs { .. } => "tfbs",
            Generator::External { .. } => "external",
        };
        format!("{name}-{}", &hex::encode(digest)[..16])
    }

    /// Number of training records under the `floor(0.9·N)` rule.
    pub fn train_count(n: usize) -> usize {
        n * 9 / 10
    }

    /// Splits an `All` dataset into its training and test parts.
    pub fn train_test(&self) -> Result<(Self, Self)> {
        if self.split() != Split::All {
            return Err(Error::InvalidArgument(format!(
                "only a combined dataset can be split, this one is {:?}",
                self.split()
            )));
        }
        let k = Self::train_count(self.len());
        let part = |split: Split, samples: &[Sample]| Self {
            descriptor: Descriptor {
                split,
                ..self.descriptor.clone()
            },
            dim: self.dim,
            samples: samples.to_vec(),
        };
        Ok((
            part(Split::Train, &self.samples[..k]),
            part(Split::Test, &self.samples[k..]),
        ))
    }

    /// First `n` records.
    pub fn take(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot take {n} records from a dataset of {}",
                self.len()
            )));
        }
        let take = Some(self.descriptor.take.map_or(n, |t| t.min(n)));
        Ok(Self {
            descriptor: Descriptor {
                take,
                ..self.descriptor.clone()
            },
            dim: self.dim,
            samples: self.samples[..n].to_vec(),
        })
    }

    pub(crate) fn relabel_split(mut self, split: Split) -> Self {
        self.descriptor.split = split;
        self
    }
}

/// Orders `n` generated samples (sample `i` has label `i % 2`) into training
/// records followed by test records. Each class is shuffled, the first
/// `floor(0.9·n)` slots go to training, and within each part the classes
/// alternate so every prefix is balanced to within one sample.
pub(crate) fn stratified_order(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(derive_seed(seed, SPLIT_STREAM));
    let mut classes: [Vec<usize>; 2] = [(0..n).step_by(2).collect(), (1..n).step_by(2).collect()];
    for c in &mut classes {
        c.shuffle(&mut rng);
    }
    let train = LabeledDataset::train_count(n);
    let t0 = train.div_ceil(2).min(classes[0].len());
    let t1 = train - t0;
    let mut order = interleave(&classes[0][..t0], &classes[1][..t1]);
    order.extend(interleave(&classes[0][t0..], &classes[1][t1..]));
    order
}

fn interleave(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut ia = a.iter();
    let mut ib = b.iter();
    loop {
        match (ia.next(), ib.next()) {
            (None, None) => break,
            (x, y) => out.extend(x.into_iter().chain(y).copied()),
        }
    }
    out
}

/// Rounds through `f32` so the binary container round-trip is exact.
pub(crate) fn quantize(x: f64) -> f64 {
    f64::from(x as f32)
}
