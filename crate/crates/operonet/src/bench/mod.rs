//! Pinned benchmark scenarios: same-target-network comparison,
//! same-parameter-budget comparison, activation/sensor sweeps, layer-count
//! sweep, and exact parameter-count bookkeeping.

use rayon::prelude::*;
use thiserror::Error;

use crate::datasets::{
    gen_advection, gen_burgers, gen_differentiation, gen_identity_sensors, DataError,
    OperatorDataset,
};
use crate::diffcore::Activation;
use crate::models::{ChunkConfig, MlpSpec, ModelError, OperatorModel, DEFAULT_CHUNK_LATENT_DIM};
use crate::training::{evaluate, mean_std, train, TrainConfig, TrainError};

/// Slope used for PReLU sweep configurations.
pub const PRELU_SLOPE: f64 = 0.25;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("parameter-count assertion failed for {model}: expected {expected}, got {actual}")]
    ParamMismatch {
        model: String,
        expected: usize,
        actual: usize,
    },
    #[error("scenario requires external data: {0}")]
    ExternalDataMissing(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("training setup: {0}")]
    Train(String),
}

/// Which synthetic problem a scenario trains on.
#[derive(Clone, Debug, PartialEq)]
pub enum Problem {
    Identity { sensors: usize },
    Differentiation,
    Advection,
    Burgers,
    /// Gated on an externally ingested file; `run` reports it as skipped.
    External { path: String },
}

impl Problem {
    pub fn generate(&self, n: usize, seed: u64) -> Result<OperatorDataset, BenchError> {
        match self {
            Problem::Identity { sensors } => Ok(gen_identity_sensors(n, seed, *sensors)?),
            Problem::Differentiation => Ok(gen_differentiation(n, seed)?),
            Problem::Advection => Ok(gen_advection(n, seed)?),
            Problem::Burgers => Ok(gen_burgers(n, seed)?),
            Problem::External { path } => Err(BenchError::ExternalDataMissing(path.clone())),
        }
    }
}

/// A buildable architecture description.
#[derive(Clone, Debug, PartialEq)]
pub enum ArchSpec {
    DeepONet {
        branch: Vec<usize>,
        trunk: Vec<usize>,
    },
    Shift {
        scale: Vec<usize>,
        shift: Vec<usize>,
        branch: Vec<usize>,
        trunk: Vec<usize>,
    },
    Flex {
        pre: Vec<usize>,
        branch: Vec<usize>,
        trunk: Vec<usize>,
    },
    Nomad {
        branch: Vec<usize>,
        target: Vec<usize>,
    },
    Hyper {
        hyper: Vec<usize>,
        target: Vec<usize>,
    },
    ChunkedHyper {
        hyper: Vec<usize>,
        target: Vec<usize>,
        chunk_size: usize,
        latent_dim: usize,
    },
}

impl ArchSpec {
    pub fn build(&self, m: usize, activation: Activation) -> Result<OperatorModel, ModelError> {
        let mk = |w: &Vec<usize>| MlpSpec::new(w.clone(), activation);
        match self {
            ArchSpec::DeepONet { branch, trunk } => {
                OperatorModel::make_deeponet(m, mk(branch)?, mk(trunk)?)
            }
            ArchSpec::Shift {
                scale,
                shift,
                branch,
                trunk,
            } => OperatorModel::make_shift_deeponet(
                m,
                mk(scale)?,
                mk(shift)?,
                mk(branch)?,
                mk(trunk)?,
            ),
            ArchSpec::Flex { pre, branch, trunk } => {
                OperatorModel::make_flex_deeponet(m, mk(pre)?, mk(branch)?, mk(trunk)?)
            }
            ArchSpec::Nomad { branch, target } => {
                OperatorModel::make_nomad(m, mk(branch)?, mk(target)?)
            }
            ArchSpec::Hyper { hyper, target } => {
                OperatorModel::make_hyper_deeponet(m, mk(hyper)?, mk(target)?)
            }
            ArchSpec::ChunkedHyper {
                hyper,
                target,
                chunk_size,
                latent_dim,
            } => {
                let target_spec = mk(target)?;
                let n_theta = crate::models::count_params(&target_spec);
                let chunk = ChunkConfig::for_target(*chunk_size, *latent_dim, n_theta)?;
                OperatorModel::make_chunked_hyper(m, mk(hyper)?, target_spec, chunk)
            }
        }
    }
}

/// One model cell in a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelEntry {
    pub name: String,
    pub arch: ArchSpec,
    pub activation: Activation,
    pub decay_rate: f64,
    /// Exact learnable-parameter assertion, checked before any training.
    pub expected_params: Option<usize>,
    /// Published full-scale reference (mean, std), for reporting only.
    pub paper_reference: Option<(f64, f64)>,
    /// Per-model epoch cap; `None` uses the scenario-wide epoch count.
    /// Desk-scale scenarios size these so every cell gets a comparable
    /// wall-clock budget despite very different per-epoch costs.
    pub epochs: Option<usize>,
}

/// Expected relationships between per-model mean errors at desk scale.
#[derive(Clone, Debug, PartialEq)]
pub enum Bound {
    /// mean(model) < ceiling
    MeanBelow { model: String, ceiling: f64 },
    /// mean(model) > floor
    MeanAbove { model: String, floor: f64 },
    /// mean(numerator) < factor * mean(denominator)
    RatioBelow {
        numerator: String,
        denominator: String,
        factor: f64,
    },
    /// mean(numerator) < factor * mean(other) for every other model
    RatioBelowAll { numerator: String, factor: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub problem: Problem,
    pub sensor_count: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub train_data_seed: u64,
    pub test_data_seed: u64,
    pub lr0: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub trial_seeds: Vec<u64>,
    pub models: Vec<ModelEntry>,
    pub bounds: Vec<Bound>,
    /// Records how this desk-scale setup deviates from the published runs.
    pub scale_note: String,
}

impl ExperimentSpec {
    /// Switch to the published dataset sizes (1,000 train / 200 test
    /// function pairs). Epoch budgets stay explicit; long-run reference
    /// targets live in each entry's `paper_reference`.
    pub fn paper_scale(mut self, epochs: usize) -> Self {
        let old_train = self.n_train;
        self.n_train = 1000;
        self.n_test = 200;
        self.batch_size = self.batch_size * 1000 / old_train.max(1);
        self.epochs = epochs;
        for entry in self.models.iter_mut() {
            entry.epochs = None;
        }
        self.scale_note = "paper scale: 1000 train / 200 test function pairs".into();
        self.name.push_str("-paper-scale");
        self
    }

    pub fn train_config(&self, entry: &ModelEntry, trial_seed: u64) -> TrainConfig {
        let epochs = entry.epochs.unwrap_or(self.epochs);
        TrainConfig::new(self.lr0, entry.decay_rate, self.batch_size, epochs, trial_seed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub scenario: String,
    pub model: String,
    pub trial: u64,
    pub param_count: usize,
    pub final_train_mse: f64,
    pub test_rel_l2_mean: f64,
    pub test_rel_l2_std: f64,
    pub seconds: f64,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSummary {
    pub model: String,
    pub param_count: usize,
    /// Mean over trials of per-trial mean rel_l2.
    pub mean: f64,
    /// Std over trials of per-trial mean rel_l2.
    pub std: f64,
    pub paper_reference: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundResult {
    pub description: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub scenario: String,
    pub scale_note: String,
    pub rows: Vec<TrialRow>,
    pub summaries: Vec<ModelSummary>,
    pub bound_results: Vec<BoundResult>,
    pub passed: bool,
}

impl BenchResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "scenario,model,trial,param_count,final_train_mse,test_rel_l2_mean,test_rel_l2_std,seconds\n",
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.scenario,
                r.model,
                r.trial,
                r.param_count,
                r.final_train_mse,
                r.test_rel_l2_mean,
                r.test_rel_l2_std,
                r.seconds
            ));
        }
        s
    }

    pub fn summary_table(&self) -> String {
        let mut s = format!("scenario {} ({})\n", self.scenario, self.scale_note);
        s.push_str("model            params     mean_rel_l2   std_rel_l2   reference\n");
        for m in &self.summaries {
            let reference = match m.paper_reference {
                Some((mu, sd)) => format!("{mu}±{sd} (full scale)"),
                None => "-".into(),
            };
            s.push_str(&format!(
                "{:<16} {:<10} {:<13.5e} {:<12.5e} {}\n",
                m.model, m.param_count, m.mean, m.std, reference
            ));
        }
        for b in &self.bound_results {
            s.push_str(&format!(
                "[{}] {}\n",
                if b.passed { "pass" } else { "FAIL" },
                b.description
            ));
        }
        s
    }
}

fn mean_of(summaries: &[ModelSummary], model: &str) -> Option<f64> {
    summaries.iter().find(|s| s.model == model).map(|s| s.mean)
}

fn check_bound(bound: &Bound, summaries: &[ModelSummary]) -> BoundResult {
    let (description, passed) = match bound {
        Bound::MeanBelow { model, ceiling } => {
            let m = mean_of(summaries, model);
            (
                format!("mean({model}) = {:?} < {ceiling}", m),
                m.map(|v| v < *ceiling).unwrap_or(false),
            )
        }
        Bound::MeanAbove { model, floor } => {
            let m = mean_of(summaries, model);
            (
                format!("mean({model}) = {:?} > {floor}", m),
                m.map(|v| v > *floor).unwrap_or(false),
            )
        }
        Bound::RatioBelow {
            numerator,
            denominator,
            factor,
        } => {
            let a = mean_of(summaries, numerator);
            let b = mean_of(summaries, denominator);
            (
                format!("mean({numerator}) = {:?} < {factor} * mean({denominator}) = {:?}", a, b),
                match (a, b) {
                    (Some(a), Some(b)) => a < factor * b,
                    _ => false,
                },
            )
        }
        Bound::RatioBelowAll { numerator, factor } => {
            let a = mean_of(summaries, numerator);
            let ok = summaries.iter().filter(|s| s.model != *numerator).all(|s| {
                a.map(|v| v < factor * s.mean).unwrap_or(false)
            });
            (
                format!(
                    "mean({numerator}) = {:?} < {factor} * mean(every other model)",
                    a
                ),
                ok && summaries.len() > 1,
            )
        }
    };
    BoundResult { description, passed }
}

/// Run a scenario: assert parameter counts, generate data, train every
/// (model, trial) cell, aggregate, and check bounds. Deterministic apart
/// from the wall-clock `seconds` column.
pub fn run(spec: &ExperimentSpec) -> Result<BenchResult, BenchError> {
    // Fail-fast parameter assertions before any training.
    let mut built = Vec::new();
    for entry in &spec.models {
        let model = entry.arch.build(spec.sensor_count, entry.activation)?;
        if let Some(expected) = entry.expected_params {
            if model.count_params() != expected {
                return Err(BenchError::ParamMismatch {
                    model: entry.name.clone(),
                    expected,
                    actual: model.count_params(),
                });
            }
        }
        built.push(model);
    }

    let train_ds = spec.problem.generate(spec.n_train, spec.train_data_seed)?;
    let test_ds = spec.problem.generate(spec.n_test, spec.test_data_seed)?;

    let cells: Vec<(usize, u64)> = spec
        .models
        .iter()
        .enumerate()
        .flat_map(|(i, _)| spec.trial_seeds.iter().map(move |&s| (i, s)))
        .collect();

    let rows: Vec<TrialRow> = cells
        .par_iter()
        .map(|&(model_idx, trial_seed)| -> Result<TrialRow, BenchError> {
            let entry = &spec.models[model_idx];
            let started = std::time::Instant::now();
            let mut model = built[model_idx].clone();
            model.init_params(trial_seed);
            let cfg = spec.train_config(entry, trial_seed);
            let outcome = train(&mut model, &train_ds, &test_ds, &cfg);
            let (final_mse, diverged) = match &outcome {
                Ok(report) => (
                    report.final_record().map(|r| r.train_mse).unwrap_or(f64::NAN),
                    false,
                ),
                Err(TrainError::Divergence { report, .. }) => (
                    report.final_record().map(|r| r.train_mse).unwrap_or(f64::NAN),
                    true,
                ),
                Err(e) => return Err(BenchError::Train(e.to_string())),
            };
            let (rel_mean, rel_std) = if diverged {
                (f64::NAN, f64::NAN)
            } else {
                evaluate(&model, &test_ds).map_err(|e| BenchError::Train(e.to_string()))?
            };
            Ok(TrialRow {
                scenario: spec.name.clone(),
                model: entry.name.clone(),
                trial: trial_seed,
                param_count: model.count_params(),
                final_train_mse: final_mse,
                test_rel_l2_mean: rel_mean,
                test_rel_l2_std: rel_std,
                seconds: started.elapsed().as_secs_f64(),
                diverged,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut summaries = Vec::new();
    for entry in &spec.models {
        let trial_means: Vec<f64> = rows
            .iter()
            .filter(|r| r.model == entry.name && !r.diverged)
            .map(|r| r.test_rel_l2_mean)
            .collect();
        let (mean, std) = if trial_means.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            mean_std(&trial_means)
        };
        summaries.push(ModelSummary {
            model: entry.name.clone(),
            param_count: rows
                .iter()
                .find(|r| r.model == entry.name)
                .map(|r| r.param_count)
                .unwrap_or(0),
            mean,
            std,
            paper_reference: entry.paper_reference,
        });
    }

    let bound_results: Vec<BoundResult> = spec
        .bounds
        .iter()
        .map(|b| check_bound(b, &summaries))
        .collect();
    let passed = bound_results.iter().all(|b| b.passed) && !rows.iter().any(|r| r.diverged);

    Ok(BenchResult {
        scenario: spec.name.clone(),
        scale_note: spec.scale_note.clone(),
        rows,
        summaries,
        bound_results,
        passed,
    })
}

// ---------------------------------------------------------------------------
// Scenario registry
// ---------------------------------------------------------------------------

const DESK_TRAIN: usize = 200;
const DESK_TEST: usize = 50;
const DESK_NOTE: &str =
    "desk scale: 200 train / 50 test function pairs instead of the published 1000/200";
const TRIAL_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// Target-network parameter count for an MLP topology (weights + biases).
fn n_theta(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn cat(prefix: &[usize], tail: &[usize]) -> Vec<usize> {
    prefix.iter().chain(tail).copied().collect()
}

/// The five models of the same-target comparison. The linear-reconstructor
/// models mirror the target topology `[d_y, h1.., p, 1]` in their auxiliary
/// networks. The hypernetwork uses a single hidden layer: with 200 training
/// functions a deep hypernetwork memorizes the training set (train rel L2
/// falls below 0.3 while test rel L2 climbs past 1.0), whereas one hidden
/// layer generalizes — both identity and differentiation are linear in the
/// sensor values, so a shallow parameter map is the right inductive bias at
/// this data scale.
fn same_target_models(
    m: usize,
    decay: [f64; 5],
    refs: [(f64, f64); 5],
    epochs: [usize; 5],
) -> Vec<ModelEntry> {
    // target 1-20-20-10-1: trunk basis width p = 10, hidden sizes 20-20-10
    let p = 10;
    let trunk = vec![1, 20, 20, 10];
    let hidden = [20, 20, 10];
    let theta = n_theta(&[1, 20, 20, 10, 1]);
    let entry = |name: &str, arch: ArchSpec, decay: f64, reference: (f64, f64), epochs: usize| {
        ModelEntry {
            name: name.into(),
            arch,
            activation: Activation::Tanh,
            decay_rate: decay,
            expected_params: None,
            paper_reference: Some(reference),
            epochs: Some(epochs),
        }
    };
    vec![
        entry(
            "deeponet",
            ArchSpec::DeepONet {
                branch: cat(&[m], &cat(&hidden, &[p])),
                trunk: trunk.clone(),
            },
            decay[0],
            refs[0],
            epochs[0],
        ),
        entry(
            "shift",
            ArchSpec::Shift {
                scale: cat(&[m], &cat(&hidden, &[1])),
                shift: cat(&[m], &cat(&hidden, &[1])),
                branch: cat(&[m], &cat(&hidden, &[p])),
                trunk: trunk.clone(),
            },
            decay[1],
            refs[1],
            epochs[1],
        ),
        entry(
            "flex",
            ArchSpec::Flex {
                pre: cat(&[m], &cat(&hidden, &[20])),
                branch: cat(&[m], &cat(&hidden, &[p + 1])),
                trunk: trunk.clone(),
            },
            decay[2],
            refs[2],
            epochs[2],
        ),
        entry(
            "nomad",
            ArchSpec::Nomad {
                branch: cat(&[m], &cat(&hidden, &[p])),
                target: vec![p + 1, 20, 20, 10, 1],
            },
            decay[3],
            refs[3],
            epochs[3],
        ),
        entry(
            "hyper",
            ArchSpec::Hyper {
                hyper: vec![m, 20, theta],
                target: vec![1, 20, 20, 10, 1],
            },
            decay[4],
            refs[4],
            epochs[4],
        ),
    ]
}

/// Same-target-network comparison (identity or differentiation): all five
/// models share the target topology 1-20-20-10-1 with tanh.
pub fn scenario_same_target(problem: &str) -> Result<ExperimentSpec, BenchError> {
    // Published decay rates per model (DeepONet, Shift, Flex, NOMAD, Hyper)
    let decay = [0.0005, 0.0002, 0.0005, 0.0001, 0.0001];
    let (problem, name, m, refs, batch_size, epochs, bounds) = match problem {
        "identity" => (
            Problem::Identity { sensors: 50 },
            "same-target-identity",
            50,
            [
                (0.578, 0.003),
                (0.777, 0.018),
                (0.678, 0.062),
                (0.578, 0.020),
                (0.036, 0.005),
            ],
            500,
            [260, 150, 140, 140, 520],
            vec![
                Bound::RatioBelowAll {
                    numerator: "hyper".into(),
                    factor: 0.5,
                },
                Bound::MeanAbove {
                    model: "deeponet".into(),
                    floor: 0.3,
                },
            ],
        ),
        "differentiation" => (
            Problem::Differentiation,
            "same-target-differentiation",
            100,
            [
                (0.559, 0.001),
                (0.624, 0.015),
                (0.562, 0.016),
                (0.558, 0.003),
                (0.127, 0.043),
            ],
            500,
            [200, 50, 50, 50, 420],
            vec![Bound::RatioBelow {
                numerator: "hyper".into(),
                denominator: "deeponet".into(),
                factor: 0.5,
            }],
        ),
        other => {
            return Err(BenchError::Train(format!(
                "same-target scenario is defined for identity|differentiation, got {other}"
            )))
        }
    };
    Ok(ExperimentSpec {
        name: name.into(),
        problem,
        sensor_count: m,
        n_train: DESK_TRAIN,
        n_test: DESK_TEST,
        train_data_seed: 1001,
        test_data_seed: 2002,
        lr0: 1e-3,
        batch_size,
        epochs: epochs.iter().copied().max().unwrap(),
        trial_seeds: TRIAL_SEEDS.to_vec(),
        models: same_target_models(m, decay, refs, epochs),
        bounds,
        scale_note: format!(
            "{DESK_NOTE}; per-model epoch caps sized for comparable wall budgets per cell"
        ),
    })
}

/// Same-parameter-budget comparison (advection or burgers): architectures
/// copied verbatim from the published budget table, with exact parameter
/// assertions attached.
pub fn scenario_same_budget(problem: &str) -> Result<ExperimentSpec, BenchError> {
    let entry = |name: &str,
                 arch: ArchSpec,
                 decay: f64,
                 expected: Option<usize>,
                 reference: (f64, f64)| ModelEntry {
        name: name.into(),
        arch,
        activation: Activation::Relu,
        decay_rate: decay,
        expected_params: expected,
        paper_reference: Some(reference),
        epochs: None,
    };
    let (problem, name, m, models) = match problem {
        "advection" => {
            let theta = n_theta(&[1, 33, 33, 33, 33, 1]);
            assert_eq!(theta, 3466);
            (
                Problem::Advection,
                "same-budget-advection",
                40,
                vec![
                    entry(
                        "deeponet",
                        ArchSpec::DeepONet {
                            branch: vec![40, 256, 256],
                            trunk: vec![1, 256, 256, 256, 256],
                        },
                        0.0005,
                        Some(274_177),
                        (0.0046, 0.0017),
                    ),
                    entry(
                        "hyper",
                        ArchSpec::Hyper {
                            hyper: vec![40, 70, 70, 70, 70, 70, theta],
                            target: vec![1, 33, 33, 33, 33, 1],
                        },
                        0.0005,
                        Some(268_836),
                        (0.0048, 0.0009),
                    ),
                    entry(
                        "chunked-hyper",
                        ArchSpec::ChunkedHyper {
                            hyper: vec![
                                40 + DEFAULT_CHUNK_LATENT_DIM,
                                128,
                                128,
                                128,
                                128,
                                128,
                                1024,
                            ],
                            target: vec![1, 256, 256, 256, 256, 1],
                            chunk_size: 1024,
                            latent_dim: DEFAULT_CHUNK_LATENT_DIM,
                        },
                        0.0005,
                        None,
                        (0.0043, 0.0004),
                    ),
                ],
            )
        }
        "burgers" => {
            let theta = n_theta(&[1, 20, 20, 20, 20, 1]);
            assert_eq!(theta, 1321);
            (
                Problem::Burgers,
                "same-budget-burgers",
                128,
                vec![
                    entry(
                        "deeponet",
                        ArchSpec::DeepONet {
                            branch: vec![128, 128, 128, 128, 128],
                            trunk: vec![1, 128, 128, 128, 128],
                        },
                        0.0001,
                        Some(115_841),
                        (0.0391, 0.0040),
                    ),
                    entry(
                        "hyper",
                        ArchSpec::Hyper {
                            hyper: vec![128, 66, 66, 66, 66, 66, theta],
                            target: vec![1, 20, 20, 20, 20, 1],
                        },
                        0.0001,
                        Some(114_709),
                        (0.0196, 0.0044),
                    ),
                    entry(
                        "chunked-hyper",
                        ArchSpec::ChunkedHyper {
                            hyper: vec![128 + DEFAULT_CHUNK_LATENT_DIM, 66, 66, 66, 66, 66, 512],
                            target: vec![1, 128, 128, 128, 128, 1],
                            chunk_size: 512,
                            latent_dim: DEFAULT_CHUNK_LATENT_DIM,
                        },
                        0.0001,
                        None,
                        (0.0066, 0.0009),
                    ),
                ],
            )
        }
        other => {
            return Err(BenchError::Train(format!(
                "same-budget scenario is defined for advection|burgers, got {other}"
            )))
        }
    };
    let batch_size = DESK_TRAIN * m; // full batch, as in the published setup
    Ok(ExperimentSpec {
        name: name.into(),
        problem,
        sensor_count: m,
        n_train: DESK_TRAIN,
        n_test: DESK_TEST,
        train_data_seed: 1001,
        test_data_seed: 2002,
        lr0: 1e-3,
        batch_size,
        epochs: 50,
        trial_seeds: TRIAL_SEEDS.to_vec(),
        models,
        bounds: Vec::new(),
        scale_note: format!("{DESK_NOTE}; capped epoch budget (50)"),
    })
}

/// Identity-operator sweeps over activation, sensor count, and target
/// topology, plus a branch/hypernetwork depth sweep.
pub fn scenario_sweeps() -> Vec<ExperimentSpec> {
    let mut specs = Vec::new();
    for (act_name, activation) in [
        ("relu", Activation::Relu),
        ("prelu", Activation::Prelu { slope: PRELU_SLOPE }),
    ] {
        for m in [30usize, 100] {
            for target in [vec![1, 30, 30, 30, 1], vec![1, 50, 50, 1]] {
                let tshort = target[1..target.len() - 1]
                    .iter()
                    .map(|w| w.to_string())
                    .collect::<Vec<_>>()
                    .join("-");
                let hidden = &target[1..target.len() - 1];
                let p = *hidden.last().unwrap();
                let trunk = cat(&[1], hidden);
                let theta = n_theta(&target);
                let first_hidden = hidden[0];
                let entry = |name: &str, arch: ArchSpec| ModelEntry {
                    name: name.into(),
                    arch,
                    activation,
                    decay_rate: 0.0001,
                    expected_params: None,
                    paper_reference: None,
                    epochs: None,
                };
                let models = vec![
                    entry(
                        "deeponet",
                        ArchSpec::DeepONet {
                            branch: cat(&[m], &cat(hidden, &[p])),
                            trunk: trunk.clone(),
                        },
                    ),
                    entry(
                        "shift",
                        ArchSpec::Shift {
                            scale: cat(&[m], &cat(hidden, &[1])),
                            shift: cat(&[m], &cat(hidden, &[1])),
                            branch: cat(&[m], &cat(hidden, &[p])),
                            trunk: trunk.clone(),
                        },
                    ),
                    entry(
                        "flex",
                        ArchSpec::Flex {
                            pre: cat(&[m], &cat(hidden, &[first_hidden])),
                            branch: cat(&[m], &cat(hidden, &[p + 1])),
                            trunk: trunk.clone(),
                        },
                    ),
                    entry(
                        "nomad",
                        ArchSpec::Nomad {
                            branch: cat(&[m], &cat(hidden, &[p])),
                            target: cat(&[p + 1], &target[1..]),
                        },
                    ),
                    entry(
                        "hyper",
                        ArchSpec::Hyper {
                            hyper: cat(&[m], &cat(hidden, &[theta])),
                            target: target.clone(),
                        },
                    ),
                ];
                specs.push(ExperimentSpec {
                    name: format!("sweep-act-{act_name}-m{m}-target-{tshort}"),
                    problem: Problem::Identity { sensors: m },
                    sensor_count: m,
                    n_train: DESK_TRAIN,
                    n_test: DESK_TEST,
                    train_data_seed: 1001,
                    test_data_seed: 2002,
                    lr0: 1e-3,
                    batch_size: DESK_TRAIN * m / 10,
                    epochs: 200,
                    trial_seeds: TRIAL_SEEDS.to_vec(),
                    models,
                    bounds: Vec::new(),
                    scale_note: DESK_NOTE.into(),
                });
            }
        }
    }

    // Depth sweep: branch/hypernetwork hidden depth 1..=5 at the small
    // shared target 1-20-20-10-1.
    let m = 50;
    let theta = n_theta(&[1, 20, 20, 10, 1]);
    let mut models = Vec::new();
    for depth in 1..=5usize {
        let hidden = vec![20; depth];
        models.push(ModelEntry {
            name: format!("deeponet-depth{depth}"),
            arch: ArchSpec::DeepONet {
                branch: cat(&[m], &cat(&hidden, &[10])),
                trunk: vec![1, 20, 20, 10],
            },
            activation: Activation::Tanh,
            decay_rate: 0.0005,
            expected_params: None,
            paper_reference: None,
            epochs: None,
        });
        models.push(ModelEntry {
            name: format!("hyper-depth{depth}"),
            arch: ArchSpec::Hyper {
                hyper: cat(&[m], &cat(&hidden, &[theta])),
                target: vec![1, 20, 20, 10, 1],
            },
            activation: Activation::Tanh,
            decay_rate: 0.0001,
            expected_params: None,
            paper_reference: None,
            epochs: None,
        });
    }
    specs.push(ExperimentSpec {
        name: "layer-sweep-identity".into(),
        problem: Problem::Identity { sensors: m },
        sensor_count: m,
        n_train: DESK_TRAIN,
        n_test: DESK_TEST,
        train_data_seed: 1001,
        test_data_seed: 2002,
        lr0: 1e-3,
        batch_size: DESK_TRAIN * m / 10,
        epochs: 200,
        trial_seeds: TRIAL_SEEDS.to_vec(),
        models,
        bounds: Vec::new(),
        scale_note: DESK_NOTE.into(),
    });
    specs
}

/// Shallow-water scenario gated on an externally ingested ODNB file; `run`
/// reports "external data missing" unless the file exists.
pub fn scenario_shallow_water(path: &str) -> ExperimentSpec {
    let m = 256;
    let theta = n_theta(&[3, 30, 30, 30, 30, 1]);
    ExperimentSpec {
        name: "shallow-water".into(),
        problem: Problem::External { path: path.into() },
        sensor_count: m,
        n_train: 100,
        n_test: 25,
        train_data_seed: 0,
        test_data_seed: 0,
        lr0: 1e-3,
        batch_size: 25_600,
        epochs: 50,
        trial_seeds: TRIAL_SEEDS.to_vec(),
        models: vec![
            ModelEntry {
                name: "deeponet".into(),
                arch: ArchSpec::DeepONet {
                    branch: vec![m, 100, 100, 100, 100],
                    trunk: vec![3, 100, 100, 100, 100],
                },
                activation: Activation::Relu,
                decay_rate: 0.0001,
                expected_params: Some(86_701),
                paper_reference: Some((0.0279, 0.0042)),
                epochs: None,
            },
            ModelEntry {
                name: "hyper".into(),
                arch: ArchSpec::Hyper {
                    hyper: vec![m, 30, 30, 30, theta],
                    target: vec![3, 30, 30, 30, 30, 1],
                },
                activation: Activation::Relu,
                decay_rate: 0.0005,
                expected_params: Some(100_741),
                paper_reference: Some((0.0148, 0.0002)),
                epochs: None,
            },
        ],
        bounds: Vec::new(),
        scale_note: "gated on externally ingested data (not bundled)".into(),
    }
}

/// All registered scenarios, for the CLI.
pub fn registry() -> Vec<ExperimentSpec> {
    let mut v = vec![
        scenario_same_target("identity").unwrap(),
        scenario_same_target("differentiation").unwrap(),
        scenario_same_budget("advection").unwrap(),
        scenario_same_budget("burgers").unwrap(),
        scenario_shallow_water("shallow.odnb"),
    ];
    v.extend(scenario_sweeps());
    v
}

// ---------------------------------------------------------------------------
// Parameter table
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct ParamRow {
    pub problem: String,
    pub model: String,
    pub config: String,
    /// Exact learnable-parameter count, when the architecture is published.
    pub derived: Option<usize>,
    /// Printed value in thousands (e.g. 274.0 for "274K", 6.5 for "6.5K").
    pub printed_k: f64,
    /// Decimal places the printed value carries (0 for "274K", 1 for "6.5K").
    pub printed_precision: u32,
    pub matches_floor: Option<bool>,
    pub matches_nearest: Option<bool>,
    pub note: String,
}

impl ParamRow {
    pub fn matches(&self) -> Option<bool> {
        match (self.matches_floor, self.matches_nearest) {
            (Some(a), Some(b)) => Some(a || b),
            _ => None,
        }
    }
}

fn k_round(count: usize, precision: u32) -> (f64, f64) {
    let scale = 10f64.powi(precision as i32);
    let k = count as f64 / 1000.0;
    ((k * scale).floor() / scale, (k * scale).round() / scale)
}

fn derived_row(
    problem: &str,
    model: &str,
    config: &str,
    count: usize,
    printed_k: f64,
    precision: u32,
    note: &str,
) -> ParamRow {
    let (floor_k, nearest_k) = k_round(count, precision);
    ParamRow {
        problem: problem.into(),
        model: model.into(),
        config: config.into(),
        derived: Some(count),
        printed_k,
        printed_precision: precision,
        matches_floor: Some(floor_k == printed_k),
        matches_nearest: Some(nearest_k == printed_k),
        note: note.into(),
    }
}

/// Row with a derived count but no pass/fail verdict: the published total
/// depends on unpublished bookkeeping (e.g. the chunk latent dimension), so
/// the derived value is informative but a mismatch proves nothing.
fn reported_row(
    problem: &str,
    model: &str,
    config: &str,
    count: usize,
    printed_k: f64,
    precision: u32,
    note: &str,
) -> ParamRow {
    ParamRow {
        problem: problem.into(),
        model: model.into(),
        config: config.into(),
        derived: Some(count),
        printed_k,
        printed_precision: precision,
        matches_floor: None,
        matches_nearest: None,
        note: note.into(),
    }
}

fn printed_only(problem: &str, model: &str, printed_k: f64, precision: u32) -> ParamRow {
    ParamRow {
        problem: problem.into(),
        model: model.into(),
        config: "(architecture not published)".into(),
        derived: None,
        printed_k,
        printed_precision: precision,
        matches_floor: None,
        matches_nearest: None,
        note: "printed value reported; no derivation possible".into(),
    }
}

/// Exact parameter counts for every published budget-table row, with the
/// printed K-rounded values and match flags. Counts come from actually
/// constructing each architecture.
pub fn param_table() -> Vec<ParamRow> {
    let count = |m: usize, arch: &ArchSpec| -> usize {
        arch.build(m, Activation::Relu).unwrap().count_params()
    };
    let advection = scenario_same_budget("advection").unwrap();
    let burgers = scenario_same_budget("burgers").unwrap();
    let shallow = scenario_shallow_water("unused.odnb");
    let adv = |i: usize| count(40, &advection.models[i].arch);
    let bur = |i: usize| count(128, &burgers.models[i].arch);
    let sha = |i: usize| count(256, &shallow.models[i].arch);

    let shallow_small_deeponet = count(
        256,
        &ArchSpec::DeepONet {
            branch: vec![256, 20, 20, 10],
            trunk: vec![3, 20, 20, 10],
        },
    );
    let shallow_small_hyper = count(
        256,
        &ArchSpec::Hyper {
            hyper: vec![256, 10, 10, 10, n_theta(&[3, 10, 10, 10, 1])],
            target: vec![3, 10, 10, 10, 1],
        },
    );

    vec![
        derived_row("advection", "deeponet", "branch 40-256-256, trunk 1-256-256-256-256(-1)", adv(0), 274.0, 0, ""),
        derived_row("advection", "hyper", "hyper 40-70x5-3466, target 1-33-33-33-33-1", adv(1), 268.0, 0, ""),
        reported_row(
            "advection",
            "chunked-hyper",
            "hyper 48-128x5-1024 (latent dim 8), target 1-256-256-256-256-1",
            adv(2),
            208.0,
            0,
            "chunk latent dimension not published; derived count uses latent dim 8, so no parity verdict",
        ),
        derived_row("burgers", "deeponet", "branch 128-128x4, trunk 1-128-128-128-128(-1)", bur(0), 115.0, 0, ""),
        derived_row("burgers", "hyper", "hyper 128-66x5-1321, target 1-20-20-20-20-1", bur(1), 114.0, 0, ""),
        reported_row(
            "burgers",
            "chunked-hyper",
            "hyper 136-66x5-512 (latent dim 8), target 1-128-128-128-128-1",
            bur(2),
            115.0,
            0,
            "chunk latent dimension not published; derived count uses latent dim 8, so no parity verdict",
        ),
        derived_row(
            "shallow",
            "deeponet",
            "branch 256-100x4, trunk 3-100-100-100-100(-1)",
            sha(0),
            107.0,
            0,
            "printed 107K is not derivable from the stated topology (exact 86,701)",
        ),
        derived_row("shallow", "hyper", "hyper 256-30-30-30-2941, target 3-30-30-30-30-1", sha(1), 101.0, 0, ""),
        derived_row(
            "shallow-small",
            "deeponet",
            "branch 256-20-20-10, trunk 3-20-20-10(-1)",
            shallow_small_deeponet,
            6.5,
            1,
            "",
        ),
        derived_row(
            "shallow-small",
            "hyper",
            "hyper 256-10-10-10-271, target 3-10-10-10-1",
            shallow_small_hyper,
            5.7,
            1,
            "second budget table prints 5.6K for the same config; derived 5,771 sides with 5.7K",
        ),
        // Baseline columns of the cross-model parameter table: the paper
        // prints totals without the Shift/Flex/NOMAD topologies.
        printed_only("advection", "shift", 281.0, 0),
        printed_only("advection", "flex", 282.0, 0),
        printed_only("advection", "nomad", 270.0, 0),
        printed_only("burgers", "shift", 122.0, 0),
        printed_only("burgers", "flex", 122.0, 0),
        printed_only("burgers", "nomad", 117.0, 0),
        printed_only("shallow", "shift", 111.0, 0),
        printed_only("shallow", "nomad", 117.0, 0),
        printed_only("shallow-small", "shift", 8.5, 1),
        printed_only("shallow-small", "nomad", 6.4, 1),
    ]
}

pub fn param_table_text() -> String {
    let mut s = String::from("problem        model          exact      printed   match  note\n");
    for r in param_table() {
        let exact = r
            .derived
            .map(|d| d.to_string())
            .unwrap_or_else(|| "-".into());
        let printed = if r.printed_precision == 0 {
            format!("{}K", r.printed_k)
        } else {
            format!("{:.1}K", r.printed_k)
        };
        let matched = match r.matches() {
            Some(true) => "yes",
            Some(false) => "NO",
            None => "-",
        };
        s.push_str(&format!(
            "{:<14} {:<14} {:<10} {:<9} {:<6} {}\n",
            r.problem, r.model, exact, printed, matched, r.note
        ));
    }
    s
}
