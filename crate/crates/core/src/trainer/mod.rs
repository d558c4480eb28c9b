//! Optimization loop, training diagnostics and checkpoint persistence.

mod checkpoint;
mod diagnostic;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, FORMAT_VERSION, MAGIC,
};
pub use diagnostic::cosine_distance_diagnostic;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::corpus::{BowDocument, Language, Vocabulary};
use crate::linking::LinkTable;
use crate::model::{loss_and_grad, BatchNoise, ModelConfig, ModelState, Params};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Row pairs sampled by the cosine-distance diagnostic.
    pub diagnostic_pairs: usize,
    /// Record the trace every this many epochs (the last epoch is always
    /// recorded).
    pub diagnostic_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 200,
            learning_rate: 2e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 1,
            diagnostic_pairs: 10_000,
            diagnostic_interval: 1,
        }
    }
}

/// Below this many rows of `Φ` the diagnostic always uses all pairs.
pub const EXACT_DIAGNOSTIC_ROWS: usize = 200;

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.epochs == 0 {
            return fail("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be >= 1");
        }
        // zero is allowed and freezes the parameters
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be a non-negative number");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return fail("moment coefficients must be in [0, 1)");
        }
        if self.diagnostic_pairs == 0 || self.diagnostic_interval == 0 {
            return fail("diagnostic pairs and interval must be >= 1");
        }
        Ok(())
    }

    fn diagnostic_pairs_for(&self, rows: usize) -> usize {
        if rows < EXACT_DIAGNOSTIC_ROWS {
            usize::MAX
        } else {
            self.diagnostic_pairs
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub epoch: usize,
    pub total: f64,
    /// Alignment loss actually optimized (contrastive, or direct in the
    /// ablation), averaged over the epoch's steps.
    pub tami: f64,
    pub tm: f64,
    pub cosine_distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub records: Vec<TraceRecord>,
}

impl TrainingTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,total,tami,tm,cosine_distance\n");
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.epoch, r.total, r.tami, r.tm, r.cosine_distance
            )
            .unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] Error),

    /// The loss or its gradient became non-finite. `last_good` holds the
    /// parameters before the failing step.
    #[error("non-finite loss at step {step}")]
    NonFinite {
        step: usize,
        last_good: Box<(ModelState, TrainingTrace)>,
    },
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    fn new(params: &Params) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .tensors()
            .iter()
            .map(|t| vec![0.0; t.len()])
            .collect();
        Adam {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, params: &mut Params, grad: &Params, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= cfg.learning_rate * mh / (vh.sqrt() + cfg.adam_eps);
            }
        }
    }
}

fn draw_noise(
    rng: &mut ChaCha8Rng,
    batch: usize,
    topics: usize,
    hidden: usize,
    dropout: f64,
) -> BatchNoise {
    let eps = Array2::from_shape_fn((batch, topics), |_| rng.sample(StandardNormal));
    let dropout_mask = (dropout > 0.0).then(|| {
        let keep = 1.0 / (1.0 - dropout);
        Array2::from_shape_fn((batch, hidden), |_| {
            if rng.random::<f64>() < dropout {
                0.0
            } else {
                keep
            }
        })
    });
    BatchNoise { eps, dropout_mask }
}

/// Trains a fresh model initialized from `model_cfg`.
pub fn train(
    vocab: &Vocabulary,
    corpus: [&[BowDocument]; 2],
    table: Option<&LinkTable>,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> std::result::Result<(ModelState, TrainingTrace), TrainError> {
    let state = ModelState::new(vocab.clone(), model_cfg.clone())?;
    train_from(state, corpus, table, train_cfg)
}

/// Continues training `state` with Adam on the combined objective.
///
/// Each epoch shuffles both corpora, then alternates one first-language
/// batch and one second-language batch until both are exhausted. Every step
/// evaluates the alignment loss over the full link table.
pub fn train_from(
    mut state: ModelState,
    corpus: [&[BowDocument]; 2],
    table: Option<&LinkTable>,
    cfg: &TrainConfig,
) -> std::result::Result<(ModelState, TrainingTrace), TrainError> {
    cfg.validate()?;
    state.validate()?;
    for lang in Language::BOTH {
        if corpus[lang.slot()].is_empty() {
            return Err(Error::Config(format!("empty training corpus for {lang}")).into());
        }
    }
    if state.config.lambda > 0.0 && table.is_none_or(|t| t.n_cvl() == 0) {
        return Err(Error::Config("lambda > 0 needs a non-empty link table".into()).into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(&state.params);
    let mut trace = TrainingTrace::default();
    let k = state.config.topics;
    let hidden = state.config.hidden_dim;
    let dropout = state.config.dropout;
    let diag_seed = cfg.seed ^ 0x5eed_d1a6;
    let mut step = 0usize;

    for epoch in 1..=cfg.epochs {
        let mut orders: [Vec<usize>; 2] = [
            (0..corpus[0].len()).collect(),
            (0..corpus[1].len()).collect(),
        ];
        for o in &mut orders {
            o.shuffle(&mut rng);
        }
        let chunks: [Vec<&[usize]>; 2] = [
            orders[0].chunks(cfg.batch_size).collect(),
            orders[1].chunks(cfg.batch_size).collect(),
        ];
        let rounds = chunks[0].len().max(chunks[1].len());
        let (mut sum_total, mut sum_align, mut sum_tm, mut n_steps) = (0.0, 0.0, 0.0, 0usize);

        for round in 0..rounds {
            for lang in Language::BOTH {
                let Some(idx) = chunks[lang.slot()].get(round) else {
                    continue;
                };
                let docs: Vec<BowDocument> = idx
                    .iter()
                    .map(|&i| corpus[lang.slot()][i].clone())
                    .collect();
                let mut batches: [&[BowDocument]; 2] = [&[], &[]];
                batches[lang.slot()] = &docs;
                let mut noise = [BatchNoise::zeros(0, k), BatchNoise::zeros(0, k)];
                noise[lang.slot()] = draw_noise(&mut rng, docs.len(), k, hidden, dropout);

                let (loss, grad) = loss_and_grad(batches, &state, table, &noise)?;
                if !loss.total.is_finite() || !grad.all_finite() {
                    return Err(TrainError::NonFinite {
                        step,
                        last_good: Box::new((state, trace)),
                    });
                }
                adam.step(&mut state.params, &grad, cfg);
                step += 1;
                sum_total += loss.total;
                sum_align += loss.align;
                sum_tm += loss.tm;
                n_steps += 1;
            }
        }

        if epoch % cfg.diagnostic_interval == 0 || epoch == cfg.epochs {
            let n = n_steps as f64;
            let pairs = cfg.diagnostic_pairs_for(state.params.phi.nrows());
            trace.records.push(TraceRecord {
                epoch,
                total: sum_total / n,
                tami: sum_align / n,
                tm: sum_tm / n,
                cosine_distance: cosine_distance_diagnostic(
                    state.params.phi.view(),
                    pairs,
                    diag_seed,
                )?,
            });
            log::debug!(
                "epoch {epoch}: total {:.4} align {:.4} tm {:.4}",
                sum_total / n,
                sum_align / n,
                sum_tm / n
            );
        }
    }
    Ok((state, trace))
}
