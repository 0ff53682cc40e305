//! Synthetic linear-regression federated-learning harness.
//!
//! The learning task is least squares on synthetic data: a ground-truth
//! model `theta*` and all features are drawn from the standard normal
//! distribution, labels are `y = x . theta* + noise`, and each client
//! holds an equally sized shard. Per global iteration the configured
//! scheme picks the `k` delivering clients, each runs `tau` mini-batch
//! SGD steps on its shard starting from the broadcast model, and the
//! server aggregates the returned models weighted by shard size
//! (renormalized over the deliverers).
//!
//! The harness measures statistical convergence per iteration; it does not
//! model wall-clock time. Combining a loss history with the simulator's
//! iteration durations to obtain loss-versus-time curves is a
//! post-processing join done in the CLI layer.
//!
//! Loss convention: `L(theta) = (1/N) ||X theta − y||^2` with gradient
//! `(2/N) X^T (X theta − y)`; with `batch_size == samples_per_client` the
//! local step is deterministic full-batch gradient descent.
//!
//! Every repeat draws from its own RNG substream (stream id = repeat
//! index) and generates a fresh task, so repeats are independent and the
//! whole run is reproducible from the config alone.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::age_model::SystemParams;
use crate::error::{Error, Result};
use crate::protocol_sim::{draw_deliverers, SchemeKind};
use crate::rng::substream;

/// Complete description of one training experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FLConfig {
    /// Model dimension.
    pub d: usize,
    pub n_clients: usize,
    /// Training samples held by each client.
    pub samples_per_client: usize,
    /// Held-out samples for the test loss.
    pub test_samples: usize,
    /// Mini-batch size of each local step.
    pub batch_size: usize,
    /// Local SGD steps per selected client per iteration.
    pub tau: usize,
    /// Learning rate, constant across clients and steps.
    pub eta: f64,
    /// Global iterations.
    pub iterations: usize,
    /// Independent repetitions averaged in the reported history.
    pub repeats: usize,
    /// Availability quorum (earliest-k-of-m only).
    pub m: usize,
    /// Deliverers aggregated per iteration.
    pub k: usize,
    pub scheme: SchemeKind,
    /// Standard deviation of the label noise.
    pub noise_std: f64,
    /// Availability rate fed to the selection draw.
    pub lambda: f64,
    /// Uplink rate fed to the selection draw.
    pub mu_up: f64,
    /// Compute duration fed to the selection draw.
    pub c: f64,
    pub seed: u64,
}

impl Default for FLConfig {
    /// The reference experiment: a 1000-dimensional regression over 100
    /// clients with 20 samples each, single-step full-batch local SGD at
    /// learning rate 0.1, 200 iterations averaged over 5 repeats, with a
    /// quorum of 40.
    fn default() -> Self {
        Self {
            d: 1000,
            n_clients: 100,
            samples_per_client: 20,
            test_samples: 1000,
            batch_size: 20,
            tau: 1,
            eta: 0.1,
            iterations: 200,
            repeats: 5,
            m: 40,
            k: 10,
            scheme: SchemeKind::EarliestKofM,
            noise_std: 0.1,
            lambda: 1.0,
            mu_up: 1.0,
            c: 1.0,
            seed: 0,
        }
    }
}

impl FLConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::Domain("model dimension d must be >= 1".into()));
        }
        if self.samples_per_client < 1 || self.test_samples < 1 {
            return Err(Error::Domain("sample counts must be >= 1".into()));
        }
        if self.batch_size < 1 || self.batch_size > self.samples_per_client {
            return Err(Error::Domain(format!(
                "batch_size must satisfy 1 <= batch_size <= samples_per_client, got {} of {}",
                self.batch_size, self.samples_per_client
            )));
        }
        if self.tau < 1 || self.iterations < 1 || self.repeats < 1 {
            return Err(Error::Domain(
                "tau, iterations, and repeats must all be >= 1".into(),
            ));
        }
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(Error::Domain(format!(
                "learning rate eta must be positive, got {}",
                self.eta
            )));
        }
        if !self.noise_std.is_finite() || self.noise_std < 0.0 {
            return Err(Error::Domain(format!(
                "noise_std must be >= 0, got {}",
                self.noise_std
            )));
        }
        // Client-count constraints and rates are those of the protocol.
        self.selection_params().map(|_| ())
    }

    fn selection_params(&self) -> Result<SystemParams> {
        SystemParams::new(self.n_clients, self.m, self.k, self.lambda, self.mu_up, self.c)
    }
}

/// A design matrix (row-major `rows x dim`) with its label vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: usize,
    pub dim: usize,
    pub features: Vec<f64>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn new(rows: usize, dim: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if features.len() != rows * dim || labels.len() != rows {
            return Err(Error::Domain(format!(
                "dataset shape mismatch: {} features and {} labels for {rows} x {dim}",
                features.len(),
                labels.len()
            )));
        }
        Ok(Self {
            rows,
            dim,
            features,
            labels,
        })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    fn sample<R: Rng>(rng: &mut R, rows: usize, dim: usize, true_model: &[f64], noise_std: f64) -> Self {
        let mut features = Vec::with_capacity(rows * dim);
        for _ in 0..rows * dim {
            features.push(rng.sample::<f64, _>(StandardNormal));
        }
        let mut labels = Vec::with_capacity(rows);
        for i in 0..rows {
            let x = &features[i * dim..(i + 1) * dim];
            let noise = noise_std * rng.sample::<f64, _>(StandardNormal);
            labels.push(dot(x, true_model) + noise);
        }
        Self {
            rows,
            dim,
            features,
            labels,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean squared error of `model` on `data`.
pub fn mse(model: &[f64], data: &Dataset) -> Result<f64> {
    if model.len() != data.dim {
        return Err(Error::Domain(format!(
            "model dimension {} does not match dataset dimension {}",
            model.len(),
            data.dim
        )));
    }
    let sse: f64 = (0..data.rows)
        .map(|i| {
            let r = dot(data.row(i), model) - data.labels[i];
            r * r
        })
        .sum();
    Ok(sse / data.rows as f64)
}

/// Train/test losses of the global model after `iteration` rounds
/// (`iteration = 0` is the initial model).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossPoint {
    pub iteration: usize,
    pub train_loss: f64,
    pub test_loss: f64,
}

/// The mutable state of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct FLState {
    pub global_model: Vec<f64>,
    pub true_model: Vec<f64>,
    pub clients: Vec<Dataset>,
    pub test_set: Dataset,
    pub loss_history: Vec<LossPoint>,
}

/// Draws a fresh task for the first repeat's substream: ground truth,
/// equally sized client shards, and the held-out test set, with the global
/// model initialized to zero.
pub fn generate_task(config: &FLConfig) -> Result<FLState> {
    config.validate()?;
    Ok(generate_task_rng(config, &mut substream(config.seed, 0)))
}

fn generate_task_rng<R: Rng>(config: &FLConfig, rng: &mut R) -> FLState {
    let d = config.d;
    let mut true_model = Vec::with_capacity(d);
    for _ in 0..d {
        true_model.push(rng.sample::<f64, _>(StandardNormal));
    }
    let clients = (0..config.n_clients)
        .map(|_| {
            Dataset::sample(
                rng,
                config.samples_per_client,
                d,
                &true_model,
                config.noise_std,
            )
        })
        .collect();
    let test_set = Dataset::sample(rng, config.test_samples, d, &true_model, config.noise_std);
    FLState {
        global_model: vec![0.0; d],
        true_model,
        clients,
        test_set,
        loss_history: Vec::new(),
    }
}

/// Runs `tau` mini-batch SGD steps on one client's shard and returns the
/// resulting local model. With `batch_size == data.rows` every step uses
/// the full shard and the update is deterministic.
pub fn local_update<R: Rng>(
    model: &[f64],
    data: &Dataset,
    tau: usize,
    eta: f64,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if model.len() != data.dim {
        return Err(Error::Domain(format!(
            "model dimension {} does not match dataset dimension {}",
            model.len(),
            data.dim
        )));
    }
    if batch_size < 1 || batch_size > data.rows {
        return Err(Error::Domain(format!(
            "batch_size must satisfy 1 <= batch_size <= {}, got {batch_size}",
            data.rows
        )));
    }
    let mut theta = model.to_vec();
    let mut gradient = vec![0.0f64; data.dim];
    let mut batch: Vec<usize> = Vec::with_capacity(batch_size);
    for _ in 0..tau {
        batch.clear();
        if batch_size == data.rows {
            batch.extend(0..data.rows);
        } else {
            batch.extend(rand::seq::index::sample(rng, data.rows, batch_size));
            batch.sort_unstable();
        }
        gradient.fill(0.0);
        for &i in &batch {
            let x = data.row(i);
            let residual = dot(x, &theta) - data.labels[i];
            for (g, &xi) in gradient.iter_mut().zip(x) {
                *g += xi * residual;
            }
        }
        let scale = eta * 2.0 / batch_size as f64;
        for (t, g) in theta.iter_mut().zip(&gradient) {
            *t -= scale * g;
        }
    }
    Ok(theta)
}

/// Loss history of one repeat.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatHistory {
    pub repeat: usize,
    pub points: Vec<LossPoint>,
}

/// Everything a training run produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome {
    /// Pointwise mean of the repeats' loss histories
    /// (`iterations + 1` points; point 0 is the untrained model).
    pub averaged: Vec<LossPoint>,
    pub repeats: Vec<RepeatHistory>,
    /// Deliveries per client summed over all iterations and repeats.
    pub delivery_counts: Vec<usize>,
}

/// Runs the full experiment: `repeats` independent tasks, each trained for
/// `iterations` rounds under the configured selection scheme, histories
/// averaged pointwise.
pub fn train(config: &FLConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let selection = config.selection_params()?;
    let points = config.iterations + 1;
    let mut repeats = Vec::with_capacity(config.repeats);
    let mut delivery_counts = vec![0usize; config.n_clients];
    let mut avg = vec![(0.0f64, 0.0f64); points];

    for repeat in 0..config.repeats {
        let mut rng = substream(config.seed, repeat as u64);
        let mut state = generate_task_rng(config, &mut rng);
        let total_samples: usize = state.clients.iter().map(|c| c.rows).sum();
        record_losses(&mut state, 0, total_samples)?;

        let mut aggregate = vec![0.0f64; config.d];
        for iteration in 0..config.iterations {
            let deliverers = draw_deliverers(&selection, config.scheme, &mut rng)?;
            let weight_total: f64 = deliverers
                .iter()
                .map(|&j| state.clients[j].rows as f64)
                .sum();
            aggregate.fill(0.0);
            for &j in &deliverers {
                delivery_counts[j] += 1;
                let local = local_update(
                    &state.global_model,
                    &state.clients[j],
                    config.tau,
                    config.eta,
                    config.batch_size,
                    &mut rng,
                )?;
                let weight = state.clients[j].rows as f64 / weight_total;
                for (a, l) in aggregate.iter_mut().zip(&local) {
                    *a += weight * l;
                }
            }
            state.global_model.copy_from_slice(&aggregate);
            record_losses(&mut state, iteration + 1, total_samples)?;
        }

        for (acc, point) in avg.iter_mut().zip(&state.loss_history) {
            acc.0 += point.train_loss;
            acc.1 += point.test_loss;
        }
        repeats.push(RepeatHistory {
            repeat,
            points: state.loss_history,
        });
    }

    let averaged = avg
        .into_iter()
        .enumerate()
        .map(|(iteration, (train_sum, test_sum))| LossPoint {
            iteration,
            train_loss: train_sum / config.repeats as f64,
            test_loss: test_sum / config.repeats as f64,
        })
        .collect();
    Ok(TrainOutcome {
        averaged,
        repeats,
        delivery_counts,
    })
}

fn record_losses(state: &mut FLState, iteration: usize, total_samples: usize) -> Result<()> {
    let mut train_sse = 0.0;
    for client in &state.clients {
        train_sse += mse(&state.global_model, client)? * client.rows as f64;
    }
    let point = LossPoint {
        iteration,
        train_loss: train_sse / total_samples as f64,
        test_loss: mse(&state.global_model, &state.test_set)?,
    };
    state.loss_history.push(point);
    Ok(())
}
