//! MSE training of operator models with Adam and inverse-time-decay
//! scheduling, plus relative-L2 evaluation.

use std::collections::HashMap;
use std::time::Instant;

use thiserror::Error;

use crate::datasets::OperatorDataset;
use crate::diffcore::Matrix;
use crate::models::{ModelError, OperatorModel, SampleGroup};
use crate::rng::Rng;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training diverged after epoch {last_epoch}: {what}")]
    Divergence {
        last_epoch: usize,
        what: String,
        report: TrainReport,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    pub decay_rate: f64,
    pub scheduler_step: usize,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl TrainConfig {
    pub fn new(lr0: f64, decay_rate: f64, batch_size: usize, epochs: usize, seed: u64) -> Self {
        TrainConfig {
            lr0,
            decay_rate,
            scheduler_step: 1,
            weight_decay: 0.0,
            batch_size,
            epochs,
            seed,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.lr0 <= 0.0 {
            return Err(TrainError::Domain("lr0 must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Domain("batch_size must be >= 1".into()));
        }
        if self.scheduler_step == 0 {
            return Err(TrainError::Domain("scheduler_step must be >= 1".into()));
        }
        for (name, b) in [("beta1", self.adam_beta1), ("beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(TrainError::Domain(format!("adam {name} must be in (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: usize,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            step_count: 0,
        }
    }
}

/// Standard bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    cfg: &TrainConfig,
) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.first_moment.len());
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let bc1 = 1.0 - b1.powi(t);
    let bc2 = 1.0 - b2.powi(t);
    for i in 0..params.len() {
        let g = grads[i] + cfg.weight_decay * params[i];
        state.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * g;
        state.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * g * g;
        let m_hat = state.first_moment[i] / bc1;
        let v_hat = state.second_moment[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.adam_eps);
    }
}

/// lr0 / (1 + decay_rate * floor(t / step_size)).
pub fn inverse_time_decay(lr0: f64, decay_rate: f64, step_size: usize, t: usize) -> f64 {
    lr0 / (1.0 + decay_rate * (t / step_size) as f64)
}

/// ||pred - truth||_2 / ||truth||_2 for one function's query values.
pub fn rel_l2(pred: &[f64], truth: &[f64]) -> Result<f64, TrainError> {
    if pred.len() != truth.len() {
        return Err(TrainError::Domain(format!(
            "rel_l2: lengths {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    let denom: f64 = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if denom == 0.0 {
        return Err(TrainError::Domain("rel_l2: zero-norm truth".into()));
    }
    let num: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}

/// Mean squared error over a batch plus its parameter gradient.
pub fn mse_loss(
    model: &OperatorModel,
    groups: &[SampleGroup],
    targets: &[f64],
) -> Result<(f64, Vec<f64>), ModelError> {
    let b = targets.len() as f64;
    let mut loss = 0.0;
    let (preds, grads) = model.predict_and_grad(groups, |preds| {
        assert_eq!(preds.len(), targets.len());
        preds
            .iter()
            .zip(targets)
            .map(|(p, t)| {
                loss += (p - t) * (p - t);
                2.0 * (p - t) / b
            })
            .collect()
    })?;
    let _ = preds;
    Ok((loss / b, grads))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub test_rel_l2: f64,
    pub lr: f64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub records: Vec<EpochRecord>,
}

impl TrainReport {
    /// CSV with 17-significant-digit floats; bit-faithful round trip.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_mse,test_rel_l2,lr,wall_seconds\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.epoch, r.train_mse, r.test_rel_l2, r.lr, r.wall_seconds
            ));
        }
        s
    }

    pub fn final_record(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

/// Mean and standard deviation of per-function rel_l2 over a dataset.
pub fn evaluate(model: &OperatorModel, ds: &OperatorDataset) -> Result<(f64, f64), TrainError> {
    let groups = full_groups(ds);
    let preds = model.predict_groups(&groups)?;
    let mut errs = Vec::with_capacity(ds.n);
    for i in 0..ds.n {
        let p = &preds[i * ds.q..(i + 1) * ds.q];
        errs.push(rel_l2(p, ds.target_row(i))?);
    }
    Ok(mean_std(&errs))
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn full_groups(ds: &OperatorDataset) -> Vec<SampleGroup> {
    (0..ds.n)
        .map(|i| SampleGroup {
            sensors: ds.input_row(i).to_vec(),
            queries: Matrix::from_vec(ds.q, ds.d_y, ds.query_points.clone()).unwrap(),
        })
        .collect()
}

/// Group a slice of (function, query) triplet indices into per-function
/// sample groups, preserving encounter order; targets align with the
/// stacked prediction order.
fn batch_to_groups(
    ds: &OperatorDataset,
    triplets: &[(usize, usize)],
) -> (Vec<SampleGroup>, Vec<f64>) {
    let mut order: Vec<usize> = Vec::new();
    let mut queries: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(f, j) in triplets {
        queries.entry(f).or_insert_with(|| {
            order.push(f);
            Vec::new()
        });
        queries.get_mut(&f).unwrap().push(j);
    }
    let mut groups = Vec::with_capacity(order.len());
    let mut targets = Vec::with_capacity(triplets.len());
    for &f in &order {
        let js = &queries[&f];
        let mut ydata = Vec::with_capacity(js.len() * ds.d_y);
        for &j in js {
            ydata.extend_from_slice(ds.query_point(j));
            targets.push(ds.target_row(f)[j]);
        }
        groups.push(SampleGroup {
            sensors: ds.input_row(f).to_vec(),
            queries: Matrix::from_vec(js.len(), ds.d_y, ydata).unwrap(),
        });
    }
    (groups, targets)
}

/// Epochs of shuffled minibatch Adam over all N x Q triplets. Row `epoch=t`
/// records the learning rate inverse_time_decay(t) used for that epoch's
/// updates; the epoch-0 row is the pre-training evaluation. Deterministic
/// in (model parameters, cfg.seed, cfg) up to wall_seconds.
pub fn train(
    model: &mut OperatorModel,
    train_ds: &OperatorDataset,
    test_ds: &OperatorDataset,
    cfg: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    cfg.validate()?;
    if train_ds.m != model.sensor_count() || train_ds.d_y != model.query_dim() {
        return Err(TrainError::Domain(format!(
            "dataset shape (m={}, d_y={}) incompatible with model (m={}, d_y={})",
            train_ds.m,
            train_ds.d_y,
            model.sensor_count(),
            model.query_dim()
        )));
    }
    let start = Instant::now();
    let mut report = TrainReport::default();
    let mut state = AdamState::new(model.count_params());

    let push_record = |report: &mut TrainReport,
                       model: &OperatorModel,
                       epoch: usize,
                       train_mse: f64,
                       start: &Instant|
     -> Result<(), TrainError> {
        let (test_mean, _) = evaluate(model, test_ds)?;
        report.records.push(EpochRecord {
            epoch,
            train_mse,
            test_rel_l2: test_mean,
            lr: inverse_time_decay(cfg.lr0, cfg.decay_rate, cfg.scheduler_step, epoch),
            wall_seconds: start.elapsed().as_secs_f64(),
        });
        Ok(())
    };

    // Epoch 0: evaluation only.
    let initial_mse = full_mse(model, train_ds)?;
    push_record(&mut report, model, 0, initial_mse, &start)?;

    let mut triplets: Vec<(usize, usize)> = (0..train_ds.n)
        .flat_map(|f| (0..train_ds.q).map(move |j| (f, j)))
        .collect();

    for epoch in 1..=cfg.epochs {
        let lr = inverse_time_decay(cfg.lr0, cfg.decay_rate, cfg.scheduler_step, epoch);
        let mut rng = Rng::derive(cfg.seed, epoch as u64);
        rng.shuffle(&mut triplets);
        let mut sq_sum = 0.0;
        for batch in triplets.chunks(cfg.batch_size) {
            let (groups, targets) = batch_to_groups(train_ds, batch);
            let (loss, grads) = mse_loss(model, &groups, &targets).map_err(|e| {
                divergence(&report, epoch - 1, e.to_string())
            })?;
            if !loss.is_finite() {
                return Err(divergence(&report, epoch - 1, format!("loss = {loss}")));
            }
            sq_sum += loss * targets.len() as f64;
            adam_step(&mut model.params, &grads, &mut state, lr, cfg);
        }
        let train_mse = sq_sum / triplets.len() as f64;
        if !train_mse.is_finite() || !model.params.iter().all(|p| p.is_finite()) {
            return Err(divergence(&report, epoch - 1, "non-finite parameters".into()));
        }
        push_record(&mut report, model, epoch, train_mse, &start)?;
    }
    Ok(report)
}

fn divergence(report: &TrainReport, last_epoch: usize, what: String) -> TrainError {
    TrainError::Divergence {
        last_epoch,
        what,
        report: report.clone(),
    }
}

fn full_mse(model: &OperatorModel, ds: &OperatorDataset) -> Result<f64, TrainError> {
    let groups = full_groups(ds);
    let preds = model.predict_groups(&groups)?;
    let total: f64 = preds
        .iter()
        .zip(ds.targets.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(total / preds.len() as f64)
}
