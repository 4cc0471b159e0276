//! Charge-stability diagram renderer.
//!
//! Coordinates: `x` is the column, `y` grows upward (`y = size − 1 − row`).
//! A line family is a set of parallel lines `n·p = offset` with unit normal
//! `n`. Single dots draw one family with slope near −1; double dots draw a
//! steep and a shallow family, cut both near every crossing and join the two
//! cut ends with a short positive-slope segment (the honeycomb anticrossing).

use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{quantize, stratified_order, Condition, Descriptor, Generator, LabeledDataset, Sample, Split};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed, standard_normal, Rng};

pub const DOT_SIZE: usize = 50;

const NOISE_STREAM: u64 = 0x6e_6f69_7365;
const SOURCE_STREAM: u64 = 0x736f_7572_6365;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotParams {
    pub min_lines: usize,
    pub max_lines: usize,
    pub min_width: f64,
    pub max_width: f64,
    /// Single-dot lines have normal angle 45° ± this, i.e. slope near −1.
    pub single_angle_jitter_deg: f64,
    /// Double-dot steep/shallow family normal angles (degrees) and jitter.
    pub steep_angle_deg: f64,
    pub shallow_angle_deg: f64,
    pub double_angle_jitter_deg: f64,
    /// Half-length of the gap cut around each crossing, in pixels.
    pub anticrossing_gap: f64,
    pub noise_sigma: f64,
    /// Maximum lateral jitter amplitude of noisy lines, in pixels.
    pub jitter_amplitude: f64,
    /// Maximum end-to-end rise of the noisy background gradient.
    pub gradient_max: f64,
}

impl Default for DotParams {
    fn default() -> Self {
        Self {
            min_lines: 3,
            max_lines: 6,
            min_width: 1.0,
            max_width: 2.0,
            single_angle_jitter_deg: 8.0,
            steep_angle_deg: 18.0,
            shallow_angle_deg: 72.0,
            double_angle_jitter_deg: 5.0,
            anticrossing_gap: 2.5,
            noise_sigma: 0.15,
            jitter_amplitude: 1.0,
            gradient_max: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DotKind {
    Single,
    Double,
}

impl DotKind {
    pub fn label(self) -> u8 {
        match self {
            Self::Single => 0,
            Self::Double => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DotDiagram {
    /// Row-major `50 × 50`, values in `[0, 1]`.
    pub pixels: Vec<f64>,
    pub label: u8,
}

impl DotDiagram {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * DOT_SIZE + col]
    }
}

struct Line {
    normal: [f64; 2],
    offset: f64,
    width: f64,
    amplitude: f64,
    /// Lateral jitter `a·sin(2πt/λ + φ)` along the line; zero when clean.
    jitter: (f64, f64, f64),
}

impl Line {
    fn distance(&self, p: [f64; 2]) -> f64 {
        let t = -self.normal[1] * p[0] + self.normal[0] * p[1];
        let (a, lambda, phase) = self.jitter;
        let shift = if a == 0.0 {
            0.0
        } else {
            a * (2.0 * PI * t / lambda + phase).sin()
        };
        self.normal[0] * p[0] + self.normal[1] * p[1] - self.offset - shift
    }
}

struct Segment {
    a: [f64; 2],
    b: [f64; 2],
    width: f64,
    amplitude: f64,
}

impl Segment {
    fn distance(&self, p: [f64; 2]) -> f64 {
        let d = [self.b[0] - self.a[0], self.b[1] - self.a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = (((p[0] - self.a[0]) * d[0] + (p[1] - self.a[1]) * d[1]) / len2).clamp(0.0, 1.0);
        let q = [self.a[0] + t * d[0], self.a[1] + t * d[1]];
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    }
}

/// Gaussian profile cut at three widths so clean backgrounds are exactly 0.
fn profile(distance: f64, width: f64) -> f64 {
    if distance.abs() > 3.0 * width {
        0.0
    } else {
        (-0.5 * (distance / width).powi(2)).exp()
    }
}

fn unit(angle_deg: f64) -> [f64; 2] {
    let a = angle_deg.to_radians();
    [a.cos(), a.sin()]
}

/// Offsets of `k` roughly evenly spaced lines across the image for normal `n`.
fn family(
    rng: &mut Rng,
    params: &DotParams,
    angle_deg: f64,
    count: usize,
    noisy: bool,
    noise_rng: &mut Rng,
) -> Vec<Line> {
    let n = unit(angle_deg);
    let s = (DOT_SIZE - 1) as f64;
    let corners = [[0.0, 0.0], [s, 0.0], [0.0, s], [s, s]];
    let proj: Vec<f64> = corners.iter().map(|c| n[0] * c[0] + n[1] * c[1]).collect();
    let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spacing = (hi - lo) / count as f64;
    (0..count)
        .map(|k| {
            let offset = lo + spacing * (k as f64 + 0.5 + rng.gen_range(-0.2..0.2));
            let width = rng.gen_range(params.min_width..=params.max_width);
            let amplitude = rng.gen_range(0.7..=1.0);
            let jitter = if noisy {
                (
                    params.jitter_amplitude * noise_rng.gen_range(0.5..=1.0),
                    noise_rng.gen_range(15.0..40.0),
                    noise_rng.gen_range(0.0..2.0 * PI),
                )
            } else {
                (0.0, 1.0, 0.0)
            };
            Line {
                normal: n,
                offset,
                width,
                amplitude,
                jitter,
            }
        })
        .collect()
}

fn intersection(a: &Line, b: &Line) -> Option<[f64; 2]> {
    let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
    if det.abs() < 1e-9 {
        return None;
    }
    Some([
        (a.offset * b.normal[1] - a.normal[1] * b.offset) / det,
        (a.normal[0] * b.offset - a.offset * b.normal[0]) / det,
    ])
}

/// Renders one diagram. Structure is drawn from `seed`; noise (when
/// requested) from a derived stream, so clean and noisy versions of the same
/// seed share their line layout.
pub fn gen_dot_diagram(kind: DotKind, condition: Condition, seed: u64, params: &DotParams) -> Result<DotDiagram> {
    if params.min_lines == 0
        || params.min_lines > params.max_lines
        || !(params.min_width > 0.0 && params.min_width <= params.max_width)
    {
        return Err(Error::InvalidArgument("invalid dot line parameters".into()));
    }
    let noisy = match condition {
        Condition::Clean => false,
        Condition::Noisy => true,
        Condition::Mixed => return Err(Error::InvalidArgument("a single diagram is clean or noisy".into())),
    };
    let mut rng = rng_from_seed(seed);
    let mut noise_rng = rng_from_seed(derive_seed(seed, NOISE_STREAM));

    let lines;
    let mut segments = Vec::new();
    let mut cuts: Vec<[f64; 2]> = Vec::new();
    match kind {
        DotKind::Single => {
            let angle = 45.0 + rng.gen_range(-params.single_angle_jitter_deg..=params.single_angle_jitter_deg);
            let count = rng.gen_range(params.min_lines..=params.max_lines);
            lines = family(&mut rng, params, angle, count, noisy, &mut noise_rng);
        }
        DotKind::Double => {
            let j = params.double_angle_jitter_deg;
            let steep = params.steep_angle_deg + rng.gen_range(-j..=j);
            let shallow = params.shallow_angle_deg + rng.gen_range(-j..=j);
            let c1 = rng.gen_range(params.min_lines..=params.max_lines);
            let c2 = rng.gen_range(params.min_lines..=params.max_lines);
            let a = family(&mut rng, params, steep, c1, noisy, &mut noise_rng);
            let b = family(&mut rng, params, shallow, c2, noisy, &mut noise_rng);
            let g = params.anticrossing_gap;
            let link = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
            for la in &a {
                for lb in &b {
                    if let Some(p) = intersection(la, lb) {
                        cuts.push(p);
                        segments.push(Segment {
                            a: [p[0] - g * link[0], p[1] - g * link[1]],
                            b: [p[0] + g * link[0], p[1] + g * link[1]],
                            width: 0.5 * (la.width + lb.width),
                            amplitude: 0.5 * (la.amplitude + lb.amplitude),
                        });
                    }
                }
            }
            lines = a.into_iter().chain(b).collect();
        }
    }

    let (grad_rise, grad_dir, base) = if noisy {
        (
            noise_rng.gen_range(0.0..=params.gradient_max),
            noise_rng.gen_range(0.0..2.0 * PI),
            noise_rng.gen_range(0.0..0.1),
        )
    } else {
        (0.0, 0.0, 0.0)
    };
    let s = (DOT_SIZE - 1) as f64;
    let cut_radius2 = 1.5 * params.anticrossing_gap.powi(2);
    let mut pixels = Vec::with_capacity(DOT_SIZE * DOT_SIZE);
    for row in 0..DOT_SIZE {
        for col in 0..DOT_SIZE {
            let p = [col as f64, s - row as f64];
            let mut v: f64 = 0.0;
            let near_cut = cuts
                .iter()
                .any(|c| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) < cut_radius2);
            if !near_cut {
                for line in &lines {
                    v = v.max(line.amplitude * profile(line.distance(p), line.width));
                }
            }
            for seg in &segments {
                v = v.max(seg.amplitude * profile(seg.distance(p), seg.width));
            }
            if noisy {
                let t = (grad_dir.cos() * p[0] + grad_dir.sin() * p[1]) / (s * std::f64::consts::SQRT_2);
                v += base + grad_rise * (t + 0.5);
                v += params.noise_sigma * standard_normal(&mut noise_rng);
            }
            pixels.push(quantize(v.clamp(0.0, 1.0)));
        }
    }
    Ok(DotDiagram {
        pixels,
        label: kind.label(),
    })
}

fn kind_of(i: usize) -> DotKind {
    if i.is_multiple_of(2) {
        DotKind::Single
    } else {
        DotKind::Double
    }
}

fn check_even(n: usize) -> Result<()> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "n must be even and at least 2, got {n}"
        )));
    }
    Ok(())
}

/// Balanced clean and noisy target datasets of `n` diagrams each, stored as
/// `All` (training records first). Sample `i` is a single dot when `i` is
/// even; clean and noisy share the per-sample structure seeds.
pub fn gen_dot_dataset(
    n_per_condition: usize,
    seed: u64,
    params: &DotParams,
) -> Result<(LabeledDataset, LabeledDataset)> {
    check_even(n_per_condition)?;
    let order = stratified_order(n_per_condition, seed);
    let build = |condition: Condition| -> Result<LabeledDataset> {
        let samples = order
            .iter()
            .map(|&i| {
                let d = gen_dot_diagram(kind_of(i), condition, derive_seed(seed, i as u64), params)?;
                Ok(Sample {
                    x: d.pixels,
                    label: d.label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let descriptor = Descriptor {
            generator: Generator::Dots {
                n_per_condition,
                seed,
                params: params.clone(),
            },
            condition,
            split: Split::All,
            take: None,
        };
        LabeledDataset::new(DOT_SIZE * DOT_SIZE, samples, descriptor)
    };
    Ok((build(Condition::Clean)?, build(Condition::Noisy)?))
}

/// Pre-training source set: `n` diagrams alternating single/double, with
/// every other pair noisy. Seeds come from a separate stream so the source
/// never repeats a target diagram generated with the same master seed.
pub fn gen_dot_source(n: usize, seed: u64, params: &DotParams) -> Result<LabeledDataset> {
    check_even(n)?;
    let master = derive_seed(seed, SOURCE_STREAM);
    let samples = (0..n)
        .map(|i| {
            let condition = if (i / 2) % 2 == 0 {
                Condition::Clean
            } else {
                Condition::Noisy
            };
            let d = gen_dot_diagram(kind_of(i), condition, derive_seed(master, i as u64), params)?;
            Ok(Sample {
                x: d.pixels,
                label: d.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let descriptor = Descriptor {
        generator: Generator::DotSource {
            n,
            seed,
            params: params.clone(),
        },
        condition: Condition::Mixed,
        split: Split::Source,
        take: None,
    };
    LabeledDataset::new(DOT_SIZE * DOT_SIZE, samples, descriptor)
}

/// Gradient-orientation summary of a diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    /// Dominant gradient (line-normal) orientation in degrees, in [0, 180).
    pub dominant_deg: f64,
    /// Structure-tensor coherence `(λ₁ − λ₂)/(λ₁ + λ₂)`, 1 for one family.
    pub coherence: f64,
    /// Per row containing an edge: the orientation of its strongest
    /// gradient, in degrees.
    pub row_orientations: Vec<f64>,
}

impl StructureReport {
    /// Largest angular distance (mod 180°) between a row orientation and the
    /// dominant one.
    pub fn max_row_deviation_deg(&self) -> f64 {
        self.row_orientations
            .iter()
            .map(|&a| {
                let d = (a - self.dominant_deg).rem_euclid(180.0);
                d.min(180.0 - d)
            })
            .fold(0.0, f64::max)
    }
}

/// Central-difference gradients and their structure tensor.
pub fn structure_report(d: &DotDiagram) -> StructureReport {
    let n = DOT_SIZE;
    let (mut jxx, mut jxy, mut jyy) = (0.0, 0.0, 0.0);
    let mut rows = Vec::new();
    for r in 1..n - 1 {
        let mut best = (0.0, 0.0);
        for c in 1..n - 1 {
            // y grows upward, so the row difference is negated.
            let gx = 0.5 * (d.at(r, c + 1) - d.at(r, c - 1));
            let gy = 0.5 * (d.at(r - 1, c) - d.at(r + 1, c));
            jxx += gx * gx;
            jxy += gx * gy;
            jyy += gy * gy;
            let m = gx * gx + gy * gy;
            if m > best.0 {
                best = (m, gy.atan2(gx).to_degrees().rem_euclid(180.0));
            }
        }
        if best.0 > 1e-3 {
            rows.push(best.1);
        }
    }
    let tr = jxx + jyy;
    let disc = ((jxx - jyy).powi(2) + 4.0 * jxy * jxy).sqrt();
    let coherence = if tr > 0.0 { disc / tr } else { 0.0 };
    let dominant = (0.5 * (2.0 * jxy).atan2(jxx - jyy)).to_degrees().rem_euclid(180.0);
    StructureReport {
        dominant_deg: dominant,
        coherence,
        row_orientations: rows,
    }
}
