use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cgnet::harness::{
    gen_dataset, read_dataset, run_selftest, write_cg_table, write_dataset, DatasetSpec, Potential,
    SelfTestOptions,
};
use cgnet::network::{evaluate, forward, train, EpochMetrics, TrainOptions};
use cgnet::{GateKind, GateSpec, Model, ModelConfig, Nonlinearity, RepType, System};

mod config;

use config::{relative_to, KeyValues, List};

#[derive(Parser)]
#[command(name = "cgnet", version, about = "SO(3)-covariant N-body networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run every invariant suite; exit status 1 if any fails.
    Selftest(SelftestArgs),
    /// Generate a labelled synthetic dataset (JSON lines).
    GenData(GenDataArgs),
    /// Train a model and write a checkpoint and a metrics CSV.
    Train(TrainArgs),
    /// Energy errors of a checkpoint on a labelled dataset.
    Eval(EvalArgs),
    /// Energies and forces of a checkpoint on every system of a dataset.
    Forces(ForcesArgs),
    /// Write the Clebsch-Gordan table as JSON.
    DumpCg(DumpCgArgs),
}

/// Bad invocation (exit status 2).
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

fn read_config(path: Option<&Path>, known: &[&str]) -> Result<KeyValues> {
    let Some(path) = path else {
        return Ok(KeyValues::default());
    };
    let kv = KeyValues::read(path)?;
    if let Err(e) = kv.reject_unknown(known) {
        return usage(e.to_string());
    }
    Ok(kv)
}

#[derive(Args)]
struct SelftestArgs {
    /// Multiply every tolerance by this factor.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Test hook: perturb one Clebsch-Gordan coefficient by this amount.
    #[arg(long, hide = true)]
    cg_fault: Option<f64>,
}

fn selftest(a: SelftestArgs) -> Result<bool> {
    let report = run_selftest(&SelfTestOptions {
        tol_scale: a.tol_scale,
        cg_perturbation: a.cg_fault,
        seed: a.seed,
    });
    println!("{report}");
    Ok(report.passed())
}

#[derive(Args)]
struct GenDataArgs {
    /// Optional `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of systems [default: 500].
    #[arg(long)]
    n: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// lennard_jones or harmonic [default: lennard_jones].
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// [default: 2]
    #[arg(long)]
    min_atoms: Option<usize>,
    /// [default: 6]
    #[arg(long)]
    max_atoms: Option<usize>,
    /// Minimum pair distance in units of sigma (or r0) [default: 0.95].
    #[arg(long)]
    min_distance: Option<f64>,
    /// Box side is box_scale * sigma * atoms^(1/3) [default: 1.5].
    #[arg(long)]
    box_scale: Option<f64>,
}

const GEN_KEYS: &[&str] = &[
    "n",
    "seed",
    "potential",
    "out",
    "min_atoms",
    "max_atoms",
    "min_distance",
    "box_scale",
];

fn gen_data(mut a: GenDataArgs) -> Result<()> {
    let kv = read_config(a.config.as_deref(), GEN_KEYS)?;
    kv.fill("n", &mut a.n)?;
    kv.fill("seed", &mut a.seed)?;
    kv.fill("potential", &mut a.potential)?;
    kv.fill("out", &mut a.out)?;
    kv.fill("min_atoms", &mut a.min_atoms)?;
    kv.fill("max_atoms", &mut a.max_atoms)?;
    kv.fill("min_distance", &mut a.min_distance)?;
    kv.fill("box_scale", &mut a.box_scale)?;
    let Some(out) = a.out else {
        return usage("gen-data needs --out");
    };
    let d = DatasetSpec::default();
    let potential: Potential = match a.potential.as_deref().unwrap_or("lennard_jones").parse() {
        Ok(p) => p,
        Err(e) => return usage(e.to_string()),
    };
    let spec = DatasetSpec {
        n: a.n.unwrap_or(d.n),
        min_atoms: a.min_atoms.unwrap_or(d.min_atoms),
        max_atoms: a.max_atoms.unwrap_or(d.max_atoms),
        seed: a.seed.unwrap_or(d.seed),
        potential,
        min_distance: a.min_distance.unwrap_or(d.min_distance),
        box_scale: a.box_scale.unwrap_or(d.box_scale),
    };
    let data = gen_dataset(&spec)?;
    let out = relative_to(a.config.as_deref(), out);
    write_dataset(&out, &data)?;
    println!("wrote {} systems to {}", data.len(), out.display());
    Ok(())
}

#[derive(Args)]
struct TrainArgs {
    /// Optional `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint to write.
    #[arg(long)]
    out: PathBuf,
    /// Metrics CSV to write.
    #[arg(long)]
    metrics: PathBuf,
    /// Training data (JSON lines).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Separate holdout data; otherwise the tail of `data` is held out.
    #[arg(long)]
    holdout_data: Option<PathBuf>,
    /// Fraction of `data` held out when no holdout file is given [default: 0.2].
    #[arg(long)]
    holdout_fraction: Option<f64>,
    /// Seeds the shuffle and, unless model_seed is set, the initial weights [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    model_seed: Option<u64>,
    /// [default: 40]
    #[arg(long)]
    epochs: Option<usize>,
    /// [default: 0.001]
    #[arg(long)]
    learning_rate: Option<f64>,
    /// [default: 0.9]
    #[arg(long)]
    momentum: Option<f64>,
    /// [default: 16]
    #[arg(long)]
    batch_size: Option<usize>,
    /// Worker threads, 0 for all cores [default: 1].
    #[arg(long)]
    threads: Option<usize>,
    /// Stop after the epoch that crosses this wall-clock budget.
    #[arg(long)]
    max_seconds: Option<f64>,
    /// Channels per irrep [default: 4].
    #[arg(long)]
    channels: Option<usize>,
    /// Number of hidden levels [default: 1].
    #[arg(long)]
    depth: Option<usize>,
    /// Neighbourhood radius [default: 3.0].
    #[arg(long)]
    cutoff: Option<f64>,
    /// [default: 2]
    #[arg(long)]
    truncate_ell: Option<usize>,
    /// Hidden gate kind: zeroth, first_pairwise, first_relative, moment [default: moment].
    #[arg(long)]
    gate: Option<String>,
    /// [default: 2]
    #[arg(long)]
    moment_order: Option<usize>,
    /// Hidden gate radial exponents [default: 2,4,6,8,10,14].
    #[arg(long)]
    radial_powers: Option<String>,
    /// Root gate radial exponents [default: 2].
    #[arg(long)]
    root_radial_powers: Option<String>,
    /// none or shifted_softplus, on hidden levels [default: none].
    #[arg(long)]
    nonlinearity: Option<String>,
    /// Number of species [default: largest species in the data + 1].
    #[arg(long)]
    n_species: Option<usize>,
}

const TRAIN_KEYS: &[&str] = &[
    "data",
    "holdout_data",
    "holdout_fraction",
    "seed",
    "model_seed",
    "epochs",
    "learning_rate",
    "momentum",
    "batch_size",
    "threads",
    "max_seconds",
    "channels",
    "depth",
    "cutoff",
    "truncate_ell",
    "gate",
    "moment_order",
    "radial_powers",
    "root_radial_powers",
    "nonlinearity",
    "n_species",
];

fn parse_or_usage<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    match value.parse() {
        Ok(v) => Ok(v),
        Err(e) => usage(format!("bad {key} {value:?}: {e}")),
    }
}

fn build_model_config(a: &TrainArgs, n_species: usize) -> Result<ModelConfig> {
    let c = a.channels.unwrap_or(4);
    let depth = a.depth.unwrap_or(1);
    let trunc = a.truncate_ell.unwrap_or(2);
    let kind: GateKind = parse_or_usage("gate", a.gate.as_deref().unwrap_or("moment"))?;
    let powers: List<u32> = parse_or_usage(
        "radial_powers",
        a.radial_powers.as_deref().unwrap_or("2,4,6,8,10,14"),
    )?;
    let root_powers: List<u32> = parse_or_usage(
        "root_radial_powers",
        a.root_radial_powers.as_deref().unwrap_or("2"),
    )?;
    let nonlinearity = match a.nonlinearity.as_deref().unwrap_or("none") {
        "none" => None,
        "shifted_softplus" => Some(Nonlinearity::ShiftedSoftplus),
        other => return usage(format!("unknown nonlinearity {other:?}")),
    };
    let order = a.moment_order.unwrap_or(2);
    let hidden_out = RepType::uniform(c, trunc.min(2));
    let spec = |kind: GateKind, powers: &[u32], out: RepType| {
        let s = GateSpec::new(kind, powers, trunc, out);
        if kind == GateKind::Moment {
            s.with_moment_order(order)
        } else {
            s
        }
    };
    // A leaf level of relative or zeroth gates degenerates on scalar
    // children, so the first level is always a moment gate.
    let mut hidden =
        vec![spec(GateKind::Moment, &powers.0, hidden_out.clone()).with_nonlinearity(nonlinearity)];
    for _ in 1..depth {
        hidden.push(spec(kind, &powers.0, hidden_out.clone()).with_nonlinearity(nonlinearity));
    }
    if depth == 1 && kind != GateKind::Moment {
        eprintln!("note: with depth 1 the only hidden level is a moment gate; `gate` applies from level 2");
    }
    let config = ModelConfig {
        channels: c,
        n_species,
        depth,
        cutoff: a.cutoff.unwrap_or(3.0),
        hidden,
        root: spec(GateKind::Moment, &root_powers.0, RepType::scalars(c)),
    };
    if let Err(e) = config.validate() {
        return usage(e.to_string());
    }
    Ok(config)
}

fn write_metrics(path: &Path, log: &[EpochMetrics]) -> Result<()> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(w, "epoch,train_rmse,holdout_rmse,wall_seconds")?;
    for m in log {
        let holdout = m
            .holdout_rmse
            .map(|h| format!("{h:.17e}"))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{:.17e},{},{:.6}",
            m.epoch, m.train_rmse, holdout, m.wall_seconds
        )?;
    }
    w.flush()?;
    Ok(())
}

fn train_cmd(mut a: TrainArgs) -> Result<()> {
    let kv = read_config(a.config.as_deref(), TRAIN_KEYS)?;
    kv.fill("data", &mut a.data)?;
    kv.fill("holdout_data", &mut a.holdout_data)?;
    kv.fill("holdout_fraction", &mut a.holdout_fraction)?;
    kv.fill("seed", &mut a.seed)?;
    kv.fill("model_seed", &mut a.model_seed)?;
    kv.fill("epochs", &mut a.epochs)?;
    kv.fill("learning_rate", &mut a.learning_rate)?;
    kv.fill("momentum", &mut a.momentum)?;
    kv.fill("batch_size", &mut a.batch_size)?;
    kv.fill("threads", &mut a.threads)?;
    kv.fill("max_seconds", &mut a.max_seconds)?;
    kv.fill("channels", &mut a.channels)?;
    kv.fill("depth", &mut a.depth)?;
    kv.fill("cutoff", &mut a.cutoff)?;
    kv.fill("truncate_ell", &mut a.truncate_ell)?;
    kv.fill("gate", &mut a.gate)?;
    kv.fill("moment_order", &mut a.moment_order)?;
    kv.fill("radial_powers", &mut a.radial_powers)?;
    kv.fill("root_radial_powers", &mut a.root_radial_powers)?;
    kv.fill("nonlinearity", &mut a.nonlinearity)?;
    kv.fill("n_species", &mut a.n_species)?;

    let cfg_path = a.config.clone();
    let Some(data_path) = a.data.clone() else {
        return usage("train needs `data` (flag or config key)");
    };
    let mut data = read_dataset(&relative_to(cfg_path.as_deref(), data_path))?;
    let holdout = match a.holdout_data.clone() {
        Some(p) => read_dataset(&relative_to(cfg_path.as_deref(), p))?,
        None => {
            let f = a.holdout_fraction.unwrap_or(0.2);
            if !(0.0..1.0).contains(&f) {
                return usage(format!("holdout_fraction must be in [0, 1), got {f}"));
            }
            let k = (f * data.len() as f64).round() as usize;
            data.split_off(data.len() - k)
        }
    };
    if data.is_empty() {
        bail!("no training systems");
    }
    let n_species = a.n_species.unwrap_or_else(|| {
        data.iter()
            .chain(&holdout)
            .flat_map(|s| s.species.iter().copied())
            .max()
            .unwrap_or(0)
            + 1
    });
    let seed = a.seed.unwrap_or(0);
    let model = Model::new(
        build_model_config(&a, n_species)?,
        a.model_seed.unwrap_or(seed),
    )?;
    let d = TrainOptions::default();
    let opts = TrainOptions {
        learning_rate: a.learning_rate.unwrap_or(d.learning_rate),
        momentum: a.momentum.unwrap_or(d.momentum),
        batch_size: a.batch_size.unwrap_or(d.batch_size),
        epochs: a.epochs.unwrap_or(40),
        seed,
        threads: a.threads.unwrap_or(1),
        max_seconds: a.max_seconds,
    };
    let (trained, log) = train(&model, &data, &holdout, &opts)?;
    trained.save(&a.out)?;
    write_metrics(&a.metrics, &log)?;
    let (first, last) = (&log[0], log.last().expect("epoch 0 is always logged"));
    println!(
        "epochs {}  train rmse {:.6} -> {:.6}  holdout rmse {} -> {}",
        last.epoch,
        first.train_rmse,
        last.train_rmse,
        first.holdout_rmse.map_or("-".into(), |h| format!("{h:.6}")),
        last.holdout_rmse.map_or("-".into(), |h| format!("{h:.6}")),
    );
    Ok(())
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let model = Model::load(&a.ckpt).with_context(|| format!("loading {}", a.ckpt.display()))?;
    let data = read_dataset(&a.data)?;
    let m = evaluate(&model, &data, a.threads)?;
    println!("n {}", m.n);
    println!("rmse {:.17e}", m.rmse);
    println!("max_abs_error {:.17e}", m.max_abs_error);
    Ok(())
}

#[derive(Args)]
struct ForcesArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn forces_cmd(a: ForcesArgs) -> Result<()> {
    let model = Model::load(&a.ckpt).with_context(|| format!("loading {}", a.ckpt.display()))?;
    let data: Vec<System> = read_dataset(&a.data)?;
    let mut w = BufWriter::new(
        File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?,
    );
    for s in &data {
        let (energy, tape) = forward(&model, s)?;
        let forces: Vec<[f64; 3]> = cgnet::network::backward(&tape, 1.0)
            .positions
            .iter()
            .map(|g| g.map(|x| -x))
            .collect();
        serde_json::to_writer(
            &mut w,
            &serde_json::json!({ "energy": energy, "forces": forces }),
        )?;
        writeln!(w)?;
    }
    w.flush()?;
    println!(
        "wrote forces for {} systems to {}",
        data.len(),
        a.out.display()
    );
    Ok(())
}

#[derive(Args)]
struct DumpCgArgs {
    #[arg(long)]
    lmax: usize,
    #[arg(long)]
    out: PathBuf,
}

fn dump_cg(a: DumpCgArgs) -> Result<()> {
    if a.lmax > cgnet::so3::L_CG {
        return usage(format!("--lmax {} exceeds {}", a.lmax, cgnet::so3::L_CG));
    }
    let n = write_cg_table(a.lmax, &a.out)?;
    println!("wrote {n} coefficients to {}", a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Selftest(a) => selftest(a),
        Command::GenData(a) => gen_data(a).map(|_| true),
        Command::Train(a) => train_cmd(a).map(|_| true),
        Command::Eval(a) => eval_cmd(a).map(|_| true),
        Command::Forces(a) => forces_cmd(a).map(|_| true),
        Command::DumpCg(a) => dump_cg(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
