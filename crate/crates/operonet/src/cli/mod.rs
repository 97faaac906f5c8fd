//! Command-line entry point: data generation, training, evaluation,
//! parameter counting, benchmark scenarios, and raw-array conversion.
//!
//! Exit codes: 0 success, 2 usage or config error, 3 numeric failure
//! (training divergence).

pub mod config;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bench::{self, ArchSpec};
use crate::datasets::{
    gen_advection, gen_burgers, gen_differentiation, gen_identity_sensors, read_dataset,
    write_dataset, DatasetMeta, OperatorDataset,
};
use crate::diffcore::Activation;
use crate::models::{load_params, save_params, OperatorModel};
use crate::training::{evaluate, train, TrainConfig, TrainError};
use config::Config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// A failure plus the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::usage(e.to_string())
    }
}

macro_rules! usage_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::usage(e.to_string())
            }
        }
    )*};
}
usage_from!(
    crate::datasets::DataError,
    crate::models::ModelError,
    std::io::Error
);

#[derive(Parser, Debug)]
#[command(
    name = "operonet",
    about = "Operator-learning benchmark suite: DeepONet-family models, synthetic datasets, training, and pinned experiment scenarios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic operator dataset and write it as an ODNB file
    Generate {
        /// identity | differentiation | advection | burgers
        problem: String,
        /// Number of input/output function pairs
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Output ODNB path
        #[arg(long)]
        out: PathBuf,
        /// Sensor count (identity only; others are fixed by the problem)
        #[arg(long)]
        sensors: Option<usize>,
    },
    /// Train a model described by a config file
    Train {
        config: PathBuf,
        /// Override the [training] seed from the config
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on a dataset (mean/std relative L2)
    Evaluate {
        /// Model config file ([model] section)
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Print exact and K-rounded parameter counts for a model config,
    /// or the published-table comparison with --table
    CountParams {
        config: Option<PathBuf>,
        /// Print the full published parameter table comparison
        #[arg(long)]
        table: bool,
    },
    /// Run a registered benchmark scenario
    Bench {
        scenario: String,
        /// Write the per-trial CSV here (defaults to stdout only)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the published dataset sizes (1000/200) instead of desk scale
        #[arg(long)]
        paper_scale: bool,
        /// Epoch budget for --paper-scale runs
        #[arg(long, default_value_t = 20_000)]
        paper_scale_epochs: usize,
    },
    /// Convert raw little-endian f64 array dumps into an ODNB dataset
    Convert { config: PathBuf },
}

/// Cap rayon's parallelism from OPERONET_THREADS, if set.
pub fn init_threads() {
    if let Ok(v) = std::env::var("OPERONET_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate {
            problem,
            n,
            seed,
            out,
            sensors,
        } => cmd_generate(&problem, n, seed, &out, sensors),
        Command::Train { config, seed } => cmd_train(&config, seed),
        Command::Evaluate {
            config,
            checkpoint,
            dataset,
        } => cmd_evaluate(&config, &checkpoint, &dataset),
        Command::CountParams { config, table } => cmd_count_params(config.as_deref(), table),
        Command::Bench {
            scenario,
            out,
            paper_scale,
            paper_scale_epochs,
        } => cmd_bench(&scenario, out.as_deref(), paper_scale, paper_scale_epochs),
        Command::Convert { config } => cmd_convert(&config),
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn cmd_generate(
    problem: &str,
    n: usize,
    seed: u64,
    out: &Path,
    sensors: Option<usize>,
) -> Result<(), CliError> {
    if sensors.is_some() && problem != "identity" {
        return Err(CliError::usage(format!(
            "--sensors is only supported for identity, not {problem}"
        )));
    }
    let ds = match problem {
        "identity" => gen_identity_sensors(n, seed, sensors.unwrap_or(50))?,
        "differentiation" => gen_differentiation(n, seed)?,
        "advection" => gen_advection(n, seed)?,
        "burgers" => gen_burgers(n, seed)?,
        other => {
            return Err(CliError::usage(format!(
                "unknown problem `{other}`; expected identity|differentiation|advection|burgers"
            )))
        }
    };
    write_dataset(&ds, out)?;
    let bytes = std::fs::read(out)?;
    println!(
        "wrote {}: n={} m={} d_x={} d_y={} q={} ({} bytes, fnv1a {:016x})",
        out.display(),
        ds.n,
        ds.m,
        ds.d_x,
        ds.d_y,
        ds.q,
        bytes.len(),
        fnv1a(&bytes)
    );
    Ok(())
}

fn parse_activation(cfg: &mut Config) -> Result<Activation, CliError> {
    let name = cfg
        .opt_str("model.activation")
        .unwrap_or_else(|| "tanh".into());
    Ok(match name.as_str() {
        "tanh" => Activation::Tanh,
        "relu" => Activation::Relu,
        "identity" => Activation::Identity,
        "prelu" => Activation::Prelu {
            slope: cfg.opt_f64("model.prelu_slope")?.unwrap_or(bench::PRELU_SLOPE),
        },
        other => {
            return Err(CliError::usage(format!(
                "{}: model.activation must be tanh|relu|prelu|identity, got `{other}`",
                cfg.source
            )))
        }
    })
}

/// Build a model from the `[model]` section of a config.
pub fn model_from_config(cfg: &mut Config) -> Result<OperatorModel, CliError> {
    let kind = cfg.str("model.kind")?;
    let m = cfg.usize("model.sensors")?;
    let activation = parse_activation(cfg)?;
    let arch = match kind.as_str() {
        "deeponet" => ArchSpec::DeepONet {
            branch: cfg.widths("model.branch")?,
            trunk: cfg.widths("model.trunk")?,
        },
        "shift" => ArchSpec::Shift {
            scale: cfg.widths("model.scale")?,
            shift: cfg.widths("model.shift")?,
            branch: cfg.widths("model.branch")?,
            trunk: cfg.widths("model.trunk")?,
        },
        "flex" => ArchSpec::Flex {
            pre: cfg.widths("model.pre")?,
            branch: cfg.widths("model.branch")?,
            trunk: cfg.widths("model.trunk")?,
        },
        "nomad" => ArchSpec::Nomad {
            branch: cfg.widths("model.branch")?,
            target: cfg.widths("model.target")?,
        },
        "hyper" => ArchSpec::Hyper {
            hyper: cfg.widths("model.hyper")?,
            target: cfg.widths("model.target")?,
        },
        "chunked_hyper" => ArchSpec::ChunkedHyper {
            hyper: cfg.widths("model.hyper")?,
            target: cfg.widths("model.target")?,
            chunk_size: cfg.usize("model.chunk_size")?,
            latent_dim: cfg.usize("model.latent_dim")?,
        },
        other => {
            return Err(CliError::usage(format!(
                "{}: model.kind must be one of deeponet|shift|flex|nomad|hyper|chunked_hyper, got `{other}`",
                cfg.source
            )))
        }
    };
    Ok(arch.build(m, activation)?)
}

fn train_config_from(cfg: &mut Config) -> Result<TrainConfig, CliError> {
    let mut tc = TrainConfig::new(
        cfg.f64("training.lr0")?,
        cfg.f64("training.decay_rate")?,
        cfg.usize("training.batch_size")?,
        cfg.usize("training.epochs")?,
        cfg.u64("training.seed")?,
    );
    if let Some(v) = cfg.opt_usize("training.scheduler_step")? {
        tc.scheduler_step = v;
    }
    if let Some(v) = cfg.opt_f64("training.weight_decay")? {
        tc.weight_decay = v;
    }
    if let Some(v) = cfg.opt_f64("training.adam_beta1")? {
        tc.adam_beta1 = v;
    }
    if let Some(v) = cfg.opt_f64("training.adam_beta2")? {
        tc.adam_beta2 = v;
    }
    if let Some(v) = cfg.opt_f64("training.adam_eps")? {
        tc.adam_eps = v;
    }
    Ok(tc)
}

fn read_dataset_checked(path: &Path) -> Result<OperatorDataset, CliError> {
    if !path.exists() {
        return Err(CliError::usage(format!(
            "dataset file not found: {}",
            path.display()
        )));
    }
    Ok(read_dataset(path)?)
}

/// Echo the effective config next to an output artifact for provenance.
fn echo_config(cfg: &Config, artifact: &Path) -> Result<(), CliError> {
    let mut echo_path = artifact.as_os_str().to_owned();
    echo_path.push(".config");
    std::fs::write(PathBuf::from(echo_path), cfg.raw_text())?;
    Ok(())
}

fn cmd_train(config_path: &Path, seed_override: Option<u64>) -> Result<(), CliError> {
    let mut cfg = Config::load(config_path)?;
    let mut model = model_from_config(&mut cfg)?;
    let train_path = PathBuf::from(cfg.str("data.train")?);
    let test_path = PathBuf::from(cfg.str("data.test")?);
    let mut tc = train_config_from(&mut cfg)?;
    let checkpoint = PathBuf::from(cfg.str("output.checkpoint")?);
    let report_path = PathBuf::from(cfg.str("output.report")?);
    cfg.finish()?;
    if let Some(seed) = seed_override {
        tc.seed = seed;
    }

    let train_ds = read_dataset_checked(&train_path)?;
    let test_ds = read_dataset_checked(&test_path)?;
    model.init_params(tc.seed);

    match train(&mut model, &train_ds, &test_ds, &tc) {
        Ok(report) => {
            std::fs::write(&report_path, report.to_csv())?;
            echo_config(&cfg, &report_path)?;
            save_params(&model, &checkpoint)?;
            let (mean, std) = evaluate(&model, &test_ds)
                .map_err(|e| CliError::numeric(e.to_string()))?;
            println!(
                "trained {} epochs; wrote {} and {}",
                tc.epochs,
                checkpoint.display(),
                report_path.display()
            );
            println!("test rel_l2 = {mean:.6e} ± {std:.6e}");
            Ok(())
        }
        Err(TrainError::Divergence {
            last_epoch,
            what,
            report,
        }) => {
            std::fs::write(&report_path, report.to_csv())?;
            echo_config(&cfg, &report_path)?;
            Err(CliError::numeric(format!(
                "training diverged ({what}); last good epoch {last_epoch} written to {}",
                report_path.display()
            )))
        }
        Err(e) => Err(CliError::usage(e.to_string())),
    }
}

fn cmd_evaluate(config_path: &Path, checkpoint: &Path, dataset: &Path) -> Result<(), CliError> {
    let mut cfg = Config::load(config_path)?;
    let mut model = model_from_config(&mut cfg)?;
    // a full training config may be reused here; only [model] matters
    for section in ["data", "training", "output"] {
        cfg.ignore_section(section);
    }
    cfg.finish()?;
    load_params(&mut model, checkpoint)?;
    let ds = read_dataset_checked(dataset)?;
    let (mean, std) = evaluate(&model, &ds).map_err(|e| CliError::numeric(e.to_string()))?;
    println!("test rel_l2 = {mean:.6e} ± {std:.6e} over {} functions", ds.n);
    Ok(())
}

fn cmd_count_params(config: Option<&Path>, table: bool) -> Result<(), CliError> {
    if table {
        print!("{}", bench::param_table_text());
        if config.is_none() {
            return Ok(());
        }
    }
    let path = config.ok_or_else(|| {
        CliError::usage("count-params needs a model config file (or --table)")
    })?;
    let mut cfg = Config::load(path)?;
    let model = model_from_config(&mut cfg)?;
    cfg.finish()?;
    let exact = model.count_params();
    println!(
        "kind = {}, exact = {exact}, rounded = {:.1}K",
        model.kind().name(),
        exact as f64 / 1000.0
    );
    Ok(())
}

fn cmd_bench(
    scenario: &str,
    out: Option<&Path>,
    paper_scale: bool,
    paper_scale_epochs: usize,
) -> Result<(), CliError> {
    let registry = bench::registry();
    let Some(mut spec) = registry.iter().find(|s| s.name == scenario).cloned() else {
        let names: Vec<&str> = registry.iter().map(|s| s.name.as_str()).collect();
        return Err(CliError::usage(format!(
            "unknown scenario `{scenario}`; registered scenarios: {}",
            names.join(", ")
        )));
    };
    if paper_scale {
        spec = spec.paper_scale(paper_scale_epochs);
        println!(
            "paper-scale run: {} train / {} test pairs, {} epochs; published reference \
             values apply to this scale, not to desk scale",
            spec.n_train, spec.n_test, spec.epochs
        );
    }
    let result = bench::run(&spec).map_err(|e| match e {
        bench::BenchError::ParamMismatch { .. } => CliError::numeric(e.to_string()),
        bench::BenchError::ExternalDataMissing(p) => CliError::usage(format!(
            "scenario `{scenario}` is gated on external data missing at `{p}`"
        )),
        other => CliError::usage(other.to_string()),
    })?;
    let csv = result.to_csv();
    if let Some(path) = out {
        std::fs::write(path, &csv)?;
        println!("wrote {}", path.display());
    } else {
        print!("{csv}");
    }
    print!("{}", result.summary_table());
    if result.passed {
        Ok(())
    } else {
        Err(CliError::numeric(format!(
            "scenario `{scenario}` failed its expected bounds"
        )))
    }
}

fn read_f64_file(path: &str, expect: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::usage(format!("cannot read {what} array {path}: {e}")))?;
    if bytes.len() != expect * 8 {
        return Err(CliError::usage(format!(
            "{what} array {path}: expected {expect} f64 values ({} bytes), file has {} bytes",
            expect * 8,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn cmd_convert(config_path: &Path) -> Result<(), CliError> {
    let mut cfg = Config::load(config_path)?;
    let m = cfg.usize("convert.m")?;
    let d_x = cfg.usize("convert.d_x")?;
    let d_y = cfg.usize("convert.d_y")?;
    let n = cfg.usize("convert.n")?;
    let q = cfg.usize("convert.q")?;
    let name = cfg.str("convert.name")?;
    let seed = cfg.opt_u64("convert.seed")?.unwrap_or(0);
    let notes = cfg.opt_str("convert.notes").unwrap_or_default();
    let sensor_locations = read_f64_file(&cfg.str("convert.sensor_locations")?, m * d_x, "sensor")?;
    let query_points = read_f64_file(&cfg.str("convert.query_points")?, q * d_y, "query")?;
    let inputs = read_f64_file(&cfg.str("convert.inputs")?, n * m, "input")?;
    let targets = read_f64_file(&cfg.str("convert.targets")?, n * q, "target")?;
    let out = PathBuf::from(cfg.str("convert.out")?);
    cfg.finish()?;
    let ds = OperatorDataset {
        m,
        d_x,
        d_y,
        n,
        q,
        sensor_locations,
        query_points,
        inputs,
        targets,
        meta: DatasetMeta {
            name,
            seed,
            version: 0,
            notes,
        },
    };
    ds.validate()?;
    write_dataset(&ds, &out)?;
    println!("wrote {} (n={n}, m={m}, d_y={d_y}, q={q})", out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_config_round_trip() {
        let text = "[model]\nkind = deeponet\nsensors = 50\nbranch = 50,20,10\ntrunk = 1,20,10\n";
        let mut cfg = Config::parse(text, "m.cfg").unwrap();
        let model = model_from_config(&mut cfg).unwrap();
        cfg.finish().unwrap();
        assert_eq!(model.sensor_count(), 50);
    }

    #[test]
    fn unknown_model_key_rejected() {
        let text =
            "[model]\nkind = deeponet\nsensors = 50\nbranch = 50,20,10\ntrunk = 1,20,10\nbogus = 1\n";
        let mut cfg = Config::parse(text, "m.cfg").unwrap();
        model_from_config(&mut cfg).unwrap();
        let e = cfg.finish().unwrap_err().to_string();
        assert!(e.contains("model.bogus"));
    }

    #[test]
    fn bad_kind_is_usage_error() {
        let text = "[model]\nkind = perceptron\nsensors = 3\n";
        let mut cfg = Config::parse(text, "m.cfg").unwrap();
        let e = model_from_config(&mut cfg).unwrap_err();
        assert_eq!(e.code, EXIT_USAGE);
        assert!(e.message.contains("perceptron"));
    }

    #[test]
    fn prelu_slope_parsed() {
        let text = "[model]\nkind = hyper\nsensors = 4\nactivation = prelu\nprelu_slope = 0.1\nhyper = 4,5,10\ntarget = 1,3,1\n";
        let mut cfg = Config::parse(text, "m.cfg").unwrap();
        let model = model_from_config(&mut cfg).unwrap();
        cfg.finish().unwrap();
        assert_eq!(model.sensor_count(), 4);
    }
}
