use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::Model;
use super::system::System;
use super::tape::{backward, forward, Gradients};
use crate::error::arg_err;
use crate::{Error, Result};

/// Gradient descent settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub learning_rate: f64,
    /// Heavy-ball coefficient; 0 gives plain gradient descent.
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    /// Stop after the first epoch that ends past this many seconds.
    pub max_seconds: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            momentum: 0.9,
            batch_size: 16,
            epochs: 100,
            seed: 0,
            threads: 1,
            max_seconds: None,
        }
    }
}

/// One row of the training log. Row 0 holds the metrics of the initial
/// model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_rmse: f64,
    pub holdout_rmse: Option<f64>,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub n: usize,
    pub rmse: f64,
    pub max_abs_error: f64,
    pub predictions: Vec<f64>,
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))
}

fn target(s: &System) -> Result<f64> {
    s.target_energy
        .ok_or_else(|| Error::Argument("system has no target energy".into()))
}

fn predict_all(model: &Model, systems: &[System]) -> Result<Vec<f64>> {
    systems
        .par_iter()
        .map(|s| forward(model, s).map(|(e, _)| e))
        .collect()
}

/// Energy errors of `model` on labelled `systems`.
pub fn evaluate(model: &Model, systems: &[System], threads: usize) -> Result<EvalMetrics> {
    let targets = systems.iter().map(target).collect::<Result<Vec<_>>>()?;
    let predictions = pool(threads)?.install(|| predict_all(model, systems))?;
    Ok(metrics(&predictions, &targets))
}

fn metrics(predictions: &[f64], targets: &[f64]) -> EvalMetrics {
    let n = predictions.len();
    let (mut sq, mut max) = (0.0, 0.0f64);
    for (p, t) in predictions.iter().zip(targets) {
        let e = p - t;
        sq += e * e;
        max = max.max(e.abs());
    }
    EvalMetrics {
        n,
        rmse: if n == 0 { 0.0 } else { (sq / n as f64).sqrt() },
        max_abs_error: max,
        predictions: predictions.to_vec(),
    }
}

fn rmse(model: &Model, systems: &[System], targets: &[f64]) -> Result<f64> {
    Ok(metrics(&predict_all(model, systems)?, targets).rmse)
}

/// Minimises the mean squared energy error over `dataset` by minibatch
/// gradient descent with momentum. Results depend only on the seed: batch
/// gradients are reduced in a fixed order whatever the thread count.
pub fn train(
    model: &Model,
    dataset: &[System],
    holdout: &[System],
    opts: &TrainOptions,
) -> Result<(Model, Vec<EpochMetrics>)> {
    if dataset.is_empty() {
        return arg_err("empty training set");
    }
    if opts.batch_size == 0 {
        return arg_err("batch_size must be at least 1");
    }
    if !opts.learning_rate.is_finite() || opts.learning_rate < 0.0 {
        return arg_err(format!("bad learning rate {}", opts.learning_rate));
    }
    let train_y = dataset.iter().map(target).collect::<Result<Vec<_>>>()?;
    let hold_y = holdout.iter().map(target).collect::<Result<Vec<_>>>()?;
    for s in dataset.iter().chain(holdout) {
        model.check_system(s)?;
    }

    let start = Instant::now();
    let workers = pool(opts.threads)?;
    let mut model = model.clone();
    let mut params = model.params();
    let mut velocity = vec![0.0; params.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    let record = |model: &Model, epoch: usize| -> Result<EpochMetrics> {
        let train_rmse = rmse(model, dataset, &train_y)?;
        let holdout_rmse = if holdout.is_empty() {
            None
        } else {
            Some(rmse(model, holdout, &hold_y)?)
        };
        if !train_rmse.is_finite() || holdout_rmse.is_some_and(|h| !h.is_finite()) {
            return Err(Error::NonFinite {
                epoch,
                detail: format!("train rmse {train_rmse}, holdout rmse {holdout_rmse:?}"),
            });
        }
        Ok(EpochMetrics {
            epoch,
            train_rmse,
            holdout_rmse,
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    };

    let mut log = vec![workers.install(|| record(&model, 0))?];
    for epoch in 1..=opts.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(opts.batch_size) {
            let scale = 2.0 / batch.len() as f64;
            let results: Vec<(f64, Gradients)> = workers.install(|| {
                batch
                    .par_iter()
                    .map(|&i| {
                        let (e, tape) = forward(&model, &dataset[i])?;
                        let residual = e - train_y[i];
                        Ok((residual, backward(&tape, scale * residual)))
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            let mut total = Gradients::zeros(&model, 0);
            for (residual, g) in &results {
                if !residual.is_finite() {
                    return Err(Error::NonFinite {
                        epoch,
                        detail: format!("energy residual {residual}"),
                    });
                }
                total.accumulate_params(g, 1.0);
            }
            let grad = total.params();
            if let Some(k) = grad.iter().position(|g| !g.is_finite()) {
                return Err(Error::NonFinite {
                    epoch,
                    detail: format!("gradient of parameter {k} is {}", grad[k]),
                });
            }
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = opts.momentum * *v - opts.learning_rate * g;
                *p += *v;
            }
            model.set_params(&params)?;
        }
        log.push(workers.install(|| record(&model, epoch))?);
        if opts
            .max_seconds
            .is_some_and(|t| start.elapsed().as_secs_f64() > t)
        {
            break;
        }
    }
    Ok((model, log))
}
