//! Binary dataset container.
//!
//! Layout (little-endian): magic `VQCD`, version `u16`, `D` as `u32`, `N` as
//! `u32`, condition `u8`, split `u8`, then `N` records of `D` `f32` values
//! followed by one label byte.

use std::io::{Read, Write};

use super::{Condition, Descriptor, LabeledDataset, Sample, Split};
use crate::error::{Error, Result};

pub const CONTAINER_MAGIC: &[u8; 4] = b"VQCD";
pub const CONTAINER_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainerHeader {
    pub version: u16,
    pub dim: u32,
    pub count: u32,
    pub condition: Condition,
    pub split: Split,
}

pub fn write_container<W: Write>(mut w: W, dataset: &LabeledDataset) -> Result<()> {
    let dim = u32::try_from(dataset.dim()).map_err(|_| Error::InvalidArgument("dimension exceeds u32".into()))?;
    let count = u32::try_from(dataset.len()).map_err(|_| Error::InvalidArgument("record count exceeds u32".into()))?;
    let mut buf = Vec::with_capacity(16 + dataset.len() * (4 * dataset.dim() + 1));
    buf.extend_from_slice(CONTAINER_MAGIC);
    buf.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    buf.extend_from_slice(&dim.to_le_bytes());
    buf.extend_from_slice(&count.to_le_bytes());
    buf.push(dataset.condition().code());
    buf.push(dataset.split().code());
    for s in dataset.samples() {
        for &v in &s.x {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        buf.push(s.label);
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Format(format!("container truncated while reading {what}")));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

/// Parses a container into its header and records.
pub fn read_container<R: Read>(mut r: R) -> Result<(ContainerHeader, Vec<Sample>)> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let mut bytes = data.as_slice();
    if take(&mut bytes, 4, "magic")? != CONTAINER_MAGIC {
        return Err(Error::Format("bad magic, not a dataset container".into()));
    }
    let version = u16::from_le_bytes(take(&mut bytes, 2, "version")?.try_into().expect("2 bytes"));
    if version != CONTAINER_VERSION {
        return Err(Error::Version {
            found: version,
            supported: CONTAINER_VERSION,
        });
    }
    let dim = u32::from_le_bytes(take(&mut bytes, 4, "dimension")?.try_into().expect("4 bytes"));
    let count = u32::from_le_bytes(take(&mut bytes, 4, "record count")?.try_into().expect("4 bytes"));
    let condition = Condition::from_code(take(&mut bytes, 1, "condition")?[0])?;
    let split = Split::from_code(take(&mut bytes, 1, "split")?[0])?;
    let d = dim as usize;
    let mut samples = Vec::with_capacity(count as usize);
    for i in 0..count {
        let rec = take(&mut bytes, 4 * d + 1, "records")?;
        let x = rec[..4 * d]
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
            .collect();
        let label = rec[4 * d];
        if label > 1 {
            return Err(Error::Format(format!("record {i} has label {label}")));
        }
        samples.push(Sample { x, label });
    }
    if !bytes.is_empty() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the last record",
            bytes.len()
        )));
    }
    Ok((
        ContainerHeader {
            version,
            dim,
            count,
            condition,
            split,
        },
        samples,
    ))
}

/// Reads a container and attaches its descriptor. A descriptor whose split
/// or condition disagrees with the header is rejected.
pub fn read_dataset<R: Read>(r: R, descriptor: Option<Descriptor>) -> Result<LabeledDataset> {
    let (header, samples) = read_container(r)?;
    let descriptor = match descriptor {
        Some(d) => {
            if d.split != header.split || d.condition != header.condition {
                return Err(Error::Format(format!(
                    "descriptor ({:?}, {:?}) does not match container header ({:?}, {:?})",
                    d.split, d.condition, header.split, header.condition
                )));
            }
            d
        }
        None => Descriptor::external("container", header.condition, header.split),
    };
    LabeledDataset::new(header.dim as usize, samples, descriptor)
}
