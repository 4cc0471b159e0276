//! One-hot DNA sequences with an optionally planted motif.

use rand::Rng as _;

use super::{quantize, stratified_order, Condition, Descriptor, Generator, LabeledDataset, Sample, Split};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed, Rng};

pub const DNA_LEN: usize = 101;
pub const ONE_HOT_DIM: usize = 4 * DNA_LEN;
/// AP-1 core site.
pub const DEFAULT_MOTIF: &str = "TGACTCA";
const BASES: [u8; 4] = *b"ACGT";
const MAX_MOTIF: usize = 20;

fn base_index(b: u8) -> Option<usize> {
    BASES.iter().position(|&c| c == b)
}

/// Position-major one-hot with base order A, C, G, T: entry `4p + base` is 1.
pub fn one_hot_encode_dna(seq: &str) -> Result<Vec<f64>> {
    if seq.len() != DNA_LEN {
        return Err(Error::shape("sequence length", DNA_LEN, seq.len()));
    }
    let mut out = vec![0.0; ONE_HOT_DIM];
    for (p, b) in seq.bytes().enumerate() {
        let i = base_index(b)
            .ok_or_else(|| Error::InvalidArgument(format!("invalid base '{}' at position {p}", char::from(b))))?;
        out[4 * p + i] = 1.0;
    }
    Ok(out)
}

/// i.i.d. bases; G or C with probability `gc`.
pub fn random_sequence(rng: &mut Rng, len: usize, gc: f64) -> Vec<u8> {
    (0..len)
        .map(|_| {
            let strong = rng.gen::<f64>() < gc;
            let pick = rng.gen::<bool>();
            match (strong, pick) {
                (true, false) => b'C',
                (true, true) => b'G',
                (false, false) => b'A',
                (false, true) => b'T',
            }
        })
        .collect()
}

fn validate_motif(motif: &str) -> Result<()> {
    if motif.is_empty() || motif.len() > MAX_MOTIF.min(DNA_LEN) {
        return Err(Error::InvalidArgument(format!(
            "motif length must be 1..={MAX_MOTIF}, got {}",
            motif.len()
        )));
    }
    if let Some(b) = motif.bytes().find(|&b| base_index(b).is_none()) {
        return Err(Error::InvalidArgument(format!(
            "invalid base '{}' in motif",
            char::from(b)
        )));
    }
    Ok(())
}

/// One sequence for the given seed. Positives carry the motif at a uniform
/// position; with probability `mutation_prob` one motif position is redrawn
/// uniformly from the four bases (so it keeps its base one time in four).
pub fn tfbs_sequence(positive: bool, motif: &str, gc: f64, mutation_prob: f64, seed: u64) -> Result<String> {
    validate_motif(motif)?;
    let mut rng = rng_from_seed(seed);
    let mut seq = random_sequence(&mut rng, DNA_LEN, gc);
    if positive {
        let mut planted = motif.as_bytes().to_vec();
        if rng.gen::<f64>() < mutation_prob {
            let at = rng.gen_range(0..planted.len());
            planted[at] = BASES[rng.gen_range(0..4)];
        }
        let pos = rng.gen_range(0..=DNA_LEN - planted.len());
        seq[pos..pos + planted.len()].copy_from_slice(&planted);
    }
    Ok(String::from_utf8(seq).expect("ASCII bases"))
}

/// Balanced motif dataset stored as `All` (training records first). Sample
/// `i` is positive (label 1) when `i` is odd.
pub fn gen_tfbs_dataset(
    n: usize,
    motif: &str,
    background_gc: f64,
    mutation_prob: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    validate_motif(motif)?;
    if !(background_gc > 0.0 && background_gc < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "background GC must be in (0, 1), got {background_gc}"
        )));
    }
    if !(0.0..=1.0).contains(&mutation_prob) {
        return Err(Error::InvalidArgument(format!(
            "mutation probability must be in [0, 1], got {mutation_prob}"
        )));
    }
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "n must be even and at least 2, got {n}"
        )));
    }
    let samples = stratified_order(n, seed)
        .into_iter()
        .map(|i| {
            let positive = i % 2 == 1;
            let seq = tfbs_sequence(
                positive,
                motif,
                background_gc,
                mutation_prob,
                derive_seed(seed, i as u64),
            )?;
            let x = one_hot_encode_dna(&seq)?.into_iter().map(quantize).collect();
            Ok(Sample {
                x,
                label: u8::from(positive),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let descriptor = Descriptor {
        generator: Generator::Tfbs {
            n,
            motif: motif.to_string(),
            background_gc,
            mutation_prob,
            seed,
        },
        condition: Condition::Clean,
        split: Split::All,
        take: None,
    };
    LabeledDataset::new(ONE_HOT_DIM, samples, descriptor)
}
