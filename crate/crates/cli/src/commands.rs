use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use vqc_transfer::datagen::{
    gen_dot_dataset, gen_dot_source, gen_tfbs_dataset, read_dataset, write_container, Descriptor, DotParams,
    DEFAULT_MOTIF,
};
use vqc_transfer::frontend::{pretrain_extractor, Architecture, PretrainConfig};
use vqc_transfer::fsutil::write_atomic;
use vqc_transfer::train::{
    bound_table, decompose_errors, sgd_train, sweep, BoundConstants, CircuitSpec, LrMode, SweepAxis, TrainConfig,
};
use vqc_transfer::{load_checkpoint, save_checkpoint, Checkpoint, FrozenExtractor, LabeledDataset, MeasurementMode};

use crate::manifest::ManifestBuilder;
use crate::UsageError;

#[derive(Debug, Parser)]
#[command(
    name = "vqct",
    version,
    about = "Frozen-extractor + variational quantum circuit experiments"
)]
pub struct Cli {
    /// Flat `key = value` file of default flags; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset container and its JSON descriptor.
    Datagen(DatagenArgs),
    /// Pre-train (or fit) a feature extractor and save it as a checkpoint.
    Pretrain(PretrainArgs),
    /// Fine-tune a circuit on top of a frozen extractor.
    Train(TrainArgs),
    /// One training run per value of a swept setting.
    Sweep(SweepArgs),
    /// Evaluate the unit-constant bound table.
    Bounds(BoundsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Task {
    Dots,
    Tfbs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DatagenArgs {
    #[arg(long, value_enum)]
    task: Task,
    /// Samples per condition (dots) or in total (tfbs); must be even.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Write a pre-training source set instead of target sets.
    #[arg(long)]
    source: bool,
    #[arg(long, default_value = DEFAULT_MOTIF)]
    motif: String,
    #[arg(long, default_value_t = 0.5)]
    gc: f64,
    #[arg(long, default_value_t = 0.2)]
    mutation_prob: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Pca,
    Mlp,
    Ttn,
}

#[derive(Debug, Args, Clone)]
pub struct ExtractorArgs {
    #[arg(long, value_enum, default_value = "mlp")]
    kind: KindArg,
    /// Defaults to 10 for mlp and 15 for ttn.
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pretrain_lr: f64,
    /// Defaults to 16 for mlp and 8 for ttn.
    #[arg(long)]
    pretrain_batch: Option<usize>,
    /// Hidden widths of the MLP, comma separated.
    #[arg(long, default_value = "32,16", value_delimiter = ',')]
    hidden: Vec<usize>,
    /// Input entries per site of the tensor train (4 for one-hot DNA).
    #[arg(long, default_value_t = 4)]
    site_width: usize,
    /// Sites per tensor-train window.
    #[arg(long, default_value_t = 8)]
    window: usize,
    #[arg(long, default_value_t = 4)]
    bond: usize,
    /// Gradient-norm clip during pre-training; 0 disables it. Defaults to 5
    /// for mlp and 1 for ttn.
    #[arg(long)]
    clip: Option<f64>,
}

impl ExtractorArgs {
    fn is_ttn(&self) -> bool {
        matches!(self.kind, KindArg::Ttn)
    }

    fn pretrain_epochs(&self) -> usize {
        self.pretrain_epochs.unwrap_or(if self.is_ttn() { 15 } else { 10 })
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct PretrainArgs {
    /// Source dataset container.
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    #[arg(long, default_value_t = 8)]
    qubits: usize,
    #[command(flatten)]
    extractor: ExtractorArgs,
    /// Alias for --pretrain-epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Alias for --pretrain-lr.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq)]
pub enum LrModeArg {
    Fixed,
    Theorem3,
}

#[derive(Debug, Args, Clone)]
pub struct FineTuneArgs {
    #[arg(long, default_value_t = 8)]
    qubits: usize,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    /// Shots per expectation during evaluation; exact when omitted.
    #[arg(long)]
    shots: Option<u32>,
    #[arg(long, value_enum, default_value = "fixed")]
    lr_mode: LrModeArg,
    #[arg(long = "R")]
    r: Option<f64>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial angles are uniform in [-scale, scale).
    #[arg(long, default_value_t = std::f64::consts::PI)]
    init_scale: f64,
}

impl FineTuneArgs {
    fn train_config(&self) -> Result<TrainConfig> {
        let lr_mode = match self.lr_mode {
            LrModeArg::Fixed => LrMode::Fixed { lr: self.lr },
            LrModeArg::Theorem3 => {
                let missing: Vec<&str> = [("--R", self.r), ("--L", self.l), ("--beta", self.beta)]
                    .iter()
                    .filter(|(_, v)| v.is_none())
                    .map(|(n, _)| *n)
                    .collect();
                if !missing.is_empty() {
                    return Err(UsageError(format!("--lr-mode theorem3 requires {}", missing.join(", "))).into());
                }
                LrMode::Theorem3 {
                    r: self.r.unwrap_or_default(),
                    l: self.l.unwrap_or_default(),
                    beta: self.beta.unwrap_or_default(),
                }
            }
        };
        let config = TrainConfig {
            epochs: self.epochs,
            lr_mode,
            batch_size: self.batch_size,
            seed: self.seed,
            shuffle: true,
        };
        config.step()?;
        Ok(config)
    }

    fn circuit(&self) -> Result<CircuitSpec> {
        let mode = match self.shots {
            Some(m) => MeasurementMode::shots(m, self.seed)?,
            None => MeasurementMode::Exact,
        };
        Ok(CircuitSpec {
            depth: self.depth,
            init_scale: self.init_scale,
            init_seed: self.seed,
            readout: (0, 1),
            mode,
        })
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    /// Extractor (or model) checkpoint.
    #[arg(long, value_name = "FILE")]
    extractor: PathBuf,
    /// Combined target container; split by the floor(0.9 N) rule.
    #[arg(long, value_name = "FILE", required_unless_present = "train")]
    data: Option<PathBuf>,
    #[arg(long, value_name = "FILE", requires = "test", conflicts_with = "data")]
    train: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    test: Option<PathBuf>,
    /// Use only the first N training records.
    #[arg(long)]
    target_size: Option<usize>,
    #[command(flatten)]
    tune: FineTuneArgs,
    /// Epochs of the oracle run behind the error decomposition (default 2×epochs).
    #[arg(long)]
    oracle_epochs: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    Figure6,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    #[arg(long, value_parser = parse_axis, required_unless_present = "preset")]
    axis: Option<SweepAxis>,
    #[arg(long, value_delimiter = ',', required_unless_present = "preset")]
    values: Vec<u64>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Frozen extractor checkpoint (not used on the qubit axis).
    #[arg(long, value_name = "FILE")]
    extractor: Option<PathBuf>,
    /// Source set for pre-training one extractor per qubit count.
    #[arg(long, value_name = "FILE")]
    source: Option<PathBuf>,
    #[command(flatten)]
    pretrain: ExtractorArgs,
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    #[command(flatten)]
    tune: FineTuneArgs,
    /// Output CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

fn parse_axis(s: &str) -> std::result::Result<SweepAxis, String> {
    s.parse().map_err(|e: vqc_transfer::Error| e.to_string())
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct BoundsArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long = "L")]
    l: f64,
    #[arg(long = "R")]
    r: f64,
    /// T_sgd (epochs).
    #[arg(long = "T")]
    t: u64,
    /// Shots per expectation.
    #[arg(long = "M")]
    m: u64,
    /// Qubits.
    #[arg(long = "U")]
    u: u64,
    #[arg(long = "C-fx")]
    c_fx: f64,
    #[arg(long = "C-fv")]
    c_fv: f64,
    /// |D_A|.
    #[arg(long = "DA")]
    da: u64,
    /// |D_B|.
    #[arg(long = "DB")]
    db: u64,
    /// |D|.
    #[arg(long = "D")]
    d: u64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Datagen(a) => cmd_datagen(a),
        Command::Pretrain(a) => cmd_pretrain(a),
        Command::Train(a) => cmd_train(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bounds(a) => cmd_bounds(a),
    }
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn write_dataset(dir: &Path, stem: &str, ds: &LabeledDataset) -> Result<()> {
    let mut buf = Vec::new();
    write_container(&mut buf, ds)?;
    let container = dir.join(format!("{stem}.vqcd"));
    write_atomic(&container, &buf).with_context(|| format!("writing {}", container.display()))?;
    let json = serde_json::to_vec_pretty(ds.descriptor())?;
    write_atomic(&sidecar(&container), &json)?;
    let [c0, c1] = ds.label_counts();
    println!(
        "wrote {} ({} records, D = {}, labels {c0}/{c1})",
        container.display(),
        ds.len(),
        ds.dim()
    );
    Ok(())
}

/// Reads a container and, when present, its descriptor sidecar.
fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    let file = std::fs::File::open(path).with_context(|| format!("opening dataset {}", path.display()))?;
    let side = sidecar(path);
    let descriptor: Option<Descriptor> = if side.exists() {
        let text = std::fs::read(&side)?;
        Some(
            serde_json::from_slice(&text)
                .map_err(|e| vqc_transfer::Error::Format(format!("{}: {e}", side.display())))?,
        )
    } else {
        None
    };
    read_dataset(std::io::BufReader::new(file), descriptor).with_context(|| format!("reading {}", path.display()))
}

fn load_ckpt(path: &Path) -> Result<Checkpoint> {
    let file = std::fs::File::open(path).with_context(|| format!("opening checkpoint {}", path.display()))?;
    load_checkpoint(std::io::BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn save_ckpt(path: &Path, c: &Checkpoint) -> Result<()> {
    let mut buf = Vec::new();
    save_checkpoint(&mut buf, c)?;
    write_atomic(path, &buf).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes).with_context(|| format!("writing {}", path.display()))
}

fn cmd_datagen(a: DatagenArgs) -> Result<()> {
    if a.n < 2 || !a.n.is_multiple_of(2) {
        return Err(UsageError(format!("--n must be an even number ≥ 2 (got {})", a.n)).into());
    }
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let params = DotParams::default();
    match (a.task, a.source) {
        (Task::Dots, false) => {
            let (clean, noisy) = gen_dot_dataset(a.n, a.seed, &params)?;
            write_dataset(&a.out, "dots_clean", &clean)?;
            write_dataset(&a.out, "dots_noisy", &noisy)?;
        }
        (Task::Dots, true) => write_dataset(&a.out, "dots_source", &gen_dot_source(a.n, a.seed, &params)?)?,
        (Task::Tfbs, source) => {
            let ds = gen_tfbs_dataset(a.n, &a.motif, a.gc, a.mutation_prob, a.seed)?;
            let stem = if source { "tfbs_source" } else { "tfbs" };
            write_dataset(&a.out, stem, &ds)?;
        }
    }
    Ok(())
}

fn pretrain_config(e: &ExtractorArgs, qubits: usize, epochs: usize, lr: f64, seed: u64) -> PretrainConfig {
    let architecture = match e.kind {
        KindArg::Ttn => Architecture::Ttn {
            site_width: e.site_width,
            window: e.window,
            bond: e.bond,
        },
        _ => Architecture::Mlp {
            hidden: e.hidden.clone(),
        },
    };
    PretrainConfig {
        architecture,
        output_dim: qubits,
        head_dim: 2,
        epochs,
        lr,
        batch_size: e.pretrain_batch.unwrap_or(if e.is_ttn() { 8 } else { 16 }),
        clip_norm: Some(e.clip.unwrap_or(if e.is_ttn() { 1.0 } else { 5.0 })).filter(|c| *c > 0.0),
        seed,
    }
}

fn build_extractor(
    e: &ExtractorArgs,
    source: &LabeledDataset,
    qubits: usize,
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<FrozenExtractor> {
    Ok(match e.kind {
        KindArg::Pca => FrozenExtractor::fit_pca(&source.features(), qubits, seed, source.id())?,
        _ => pretrain_extractor(&pretrain_config(e, qubits, epochs, lr, seed), source)?,
    })
}

fn cmd_pretrain(a: PretrainArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::start("pretrain");
    manifest.input(&a.data)?;
    let source = load_dataset(&a.data)?;
    let epochs = a.epochs.unwrap_or(a.extractor.pretrain_epochs());
    let lr = a.lr.unwrap_or(a.extractor.pretrain_lr);
    let extractor = build_extractor(&a.extractor, &source, a.qubits, epochs, lr, a.seed)?;
    save_ckpt(&a.out, &Checkpoint::from_extractor(extractor.clone()))?;
    manifest.output(&a.out);
    let p = extractor.provenance();
    println!(
        "{} extractor {} -> {} saved to {} (source loss {:?} -> {:?}, accuracy {:?})",
        extractor.kind(),
        extractor.input_dim(),
        extractor.output_dim(),
        a.out.display(),
        p.initial_source_loss,
        p.final_source_loss,
        p.final_source_accuracy
    );
    for w in &p.warnings {
        eprintln!("warning: {w}");
    }
    let man_path = a.out.with_extension("manifest.json");
    manifest.output(&man_path);
    let config = json!({
        "kind": format!("{:?}", a.extractor.kind).to_lowercase(),
        "qubits": a.qubits,
        "pretrain": pretrain_config(&a.extractor, a.qubits, epochs, lr, a.seed),
    });
    let results = json!({ "checksum": extractor.checksum(), "provenance": p });
    write_json(&man_path, &manifest.finish(config, json!({ "seed": a.seed }), results))
}

fn target_sets(
    data: Option<&Path>,
    train: Option<&Path>,
    test: Option<&Path>,
    manifest: &mut ManifestBuilder,
) -> Result<(LabeledDataset, LabeledDataset)> {
    match (data, train, test) {
        (Some(d), _, _) => {
            manifest.input(d)?;
            Ok(load_dataset(d)?.train_test()?)
        }
        (None, Some(tr), Some(te)) => {
            manifest.input(tr)?;
            manifest.input(te)?;
            Ok((load_dataset(tr)?, load_dataset(te)?))
        }
        _ => Err(UsageError("give --data, or both --train and --test".into()).into()),
    }
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::start("train");
    let config = a.tune.train_config()?;
    let circuit = a.tune.circuit()?;
    manifest.input(&a.extractor)?;
    let ckpt = load_ckpt(&a.extractor)?;
    let extractor = ckpt.extractor_for(a.tune.qubits)?.clone();
    let (mut train, test) = target_sets(a.data.as_deref(), a.train.as_deref(), a.test.as_deref(), &mut manifest)?;
    if let Some(n) = a.target_size {
        train = train.take(n)?;
    }
    let init = circuit.build(extractor)?;
    let (model, trace) = sgd_train(&init, &train, &test, &config)?;
    let oracle = TrainConfig {
        epochs: a.oracle_epochs.unwrap_or(2 * config.epochs),
        ..config.clone()
    };
    let decomposition = decompose_errors(&model, &init, &train, &test, &oracle)?;

    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let model_path = a.out.join("model.vqcm");
    save_ckpt(&model_path, &Checkpoint::from_model(&model))?;
    let trace_path = a.out.join("trace.csv");
    write_atomic(&trace_path, trace.to_csv().as_bytes())?;
    let dec_path = a.out.join("decomposition.json");
    write_json(&dec_path, &decomposition)?;
    let man_path = a.out.join("manifest.json");
    for p in [&model_path, &trace_path, &dec_path, &man_path] {
        manifest.output(p);
    }
    let last = trace.last();
    println!(
        "epoch {}: train loss {:.4} acc {:.4}, test loss {:.4} acc {:.4} (lr {})",
        last.epoch, last.train_loss, last.train_acc, last.test_loss, last.test_acc, trace.learning_rate
    );
    let cfg = json!({
        "train": config,
        "circuit": circuit,
        "target_size": a.target_size,
        "oracle_epochs": oracle.epochs,
    });
    let results = json!({
        "learning_rate": trace.learning_rate,
        "clip_radius": trace.clip_radius,
        "final": last,
        "extractor_checksum": trace.extractor_checksum,
        "extractor_frozen": model.extractor().checksum() == trace.extractor_checksum,
    });
    write_json(
        &man_path,
        &manifest.finish(cfg, json!({ "seed": a.tune.seed }), results),
    )
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::start("sweep");
    let (axis, values) = match a.preset {
        Some(Preset::Figure6) => (SweepAxis::Qubits, vec![8, 12, 16]),
        None => (
            a.axis
                .ok_or_else(|| UsageError("--axis is required without --preset".into()))?,
            a.values.clone(),
        ),
    };
    if values.is_empty() {
        return Err(UsageError("--values must list at least one value".into()).into());
    }
    let config = a.tune.train_config()?;
    let circuit = a.tune.circuit()?;
    let (train, test) = target_sets(Some(&a.data), None, None, &mut manifest)?;

    let fixed = match &a.extractor {
        Some(p) if axis != SweepAxis::Qubits => {
            manifest.input(p)?;
            Some(load_ckpt(p)?.extractor_for(a.tune.qubits)?.clone())
        }
        _ => None,
    };
    let source = match (&fixed, &a.source) {
        (Some(_), _) => None,
        (None, Some(p)) => {
            manifest.input(p)?;
            Some(load_dataset(p)?)
        }
        (None, None) => {
            return Err(UsageError(
                "the sweep needs --source to build extractors (or --extractor for non-qubit axes)".into(),
            )
            .into())
        }
    };
    let pre = a.pretrain.clone();
    let seed = a.tune.seed;
    let mut extractor_for = |u: usize| -> vqc_transfer::Result<FrozenExtractor> {
        if let Some(e) = &fixed {
            return Ok(e.clone());
        }
        let src = source.as_ref().expect("source checked above");
        build_extractor(&pre, src, u, pre.pretrain_epochs(), pre.pretrain_lr, seed)
            .map_err(|e| vqc_transfer::Error::InvalidArgument(format!("{e:#}")))
    };
    let table = sweep(
        axis,
        &values,
        &circuit,
        &config,
        a.tune.qubits,
        &train,
        &test,
        &mut extractor_for,
    )?;
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    write_atomic(&a.out, table.to_csv().as_bytes()).with_context(|| format!("writing {}", a.out.display()))?;
    manifest.output(&a.out);
    println!("wrote {} ({} rows)", a.out.display(), table.rows.len());
    let man_path = a.out.with_extension("manifest.json");
    manifest.output(&man_path);
    let cfg = json!({
        "axis": axis,
        "values": values,
        "train": config,
        "circuit": circuit,
        "extractor": format!("{:?}", a.pretrain.kind).to_lowercase(),
    });
    write_json(
        &man_path,
        &manifest.finish(
            cfg,
            json!({ "seed": seed }),
            json!({ "rows": table.rows, "warnings": table.warnings }),
        ),
    )
}

fn cmd_bounds(a: BoundsArgs) -> Result<()> {
    let constants = BoundConstants {
        beta: a.beta,
        l: a.l,
        r: a.r,
        t_sgd: a.t,
        shots: a.m,
        qubits: a.u,
        c_fx: a.c_fx,
        c_fv: a.c_fv,
        source_size: a.da,
        target_size: a.db,
        dataset_size: a.d,
    };
    let report = bound_table(&constants)?;
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(out) = &a.out {
        write_atomic(out, format!("{text}\n").as_bytes())?;
    }
    Ok(())
}
