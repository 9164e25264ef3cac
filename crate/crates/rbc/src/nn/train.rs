//! Training loops: triplet training with semi-hard negative mining for the
//! Siamese model, and binary-classification training for the CNN baseline.
//!
//! Determinism: the record order, every negative draw, and the gradient
//! reduction order depend only on the configured seed, never on thread
//! scheduling. Batches are split into a fixed number of chunks; each chunk
//! accumulates its gradients sequentially and the chunk results are merged
//! in index order.

use super::loss::{bce_with_logit, euclidean_distance, triplet_loss};
use super::model::{CnnModel, SiameseModel};
use super::optim::{AdamW, AdamWConfig};
use super::scalar::Scalar;
use super::layers::{Grads, Param};
use crate::encoding::{PlaneStack, HISTORY_CHANNELS, PAIR_CHANNELS};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Supplies training records. One record is an observation-history anchor,
/// the true board as positive, and a pool of negative boards drawn from the
/// same information set.
pub trait TripletSource: Sync {
    fn len(&self) -> usize;
    /// Observation-history stack for record `i`.
    fn anchor(&self, i: usize) -> PlaneStack;
    /// True-board stack for record `i`.
    fn positive(&self, i: usize) -> PlaneStack;
    /// Number of negative boards available for record `i`.
    fn pool_size(&self, i: usize) -> usize;
    /// Negative board `j` (0-based, `j < pool_size(i)`) for record `i`.
    fn negative(&self, i: usize, j: usize) -> PlaneStack;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub optimizer: AdamWConfig,
    /// Negatives sampled per record; the nearest to the anchor is trained on.
    pub semi_hard_x: usize,
    /// Hard ceiling for `semi_hard_x` after stall-driven doubling.
    pub semi_hard_cap: usize,
    /// Epochs without monitored-loss improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            batch_size: 1024,
            optimizer: AdamWConfig::default(),
            semi_hard_x: 3,
            semi_hard_cap: 32,
            patience: 3,
            max_epochs: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss per completed epoch.
    pub epoch_losses: Vec<f64>,
    /// Mean validation loss per epoch, when a validation source was given.
    pub val_losses: Vec<f64>,
    /// Epoch whose parameters were kept (0-based).
    pub best_epoch: usize,
    pub best_loss: f64,
    pub stopped_early: bool,
    /// Value of `semi_hard_x` when training finished.
    pub final_x: usize,
    /// Records skipped because their negative pool was empty.
    pub skipped_records: usize,
}

/// Number of parallel gradient chunks per batch. Fixed so that results do
/// not depend on the rayon thread count.
const GRAD_CHUNKS: usize = 16;

fn record_rng(seed: u64, epoch: u64, idx: u64) -> ChaCha12Rng {
    // splitmix64-style mixing keeps per-record streams decorrelated.
    let mut z = seed
        .wrapping_add(epoch.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(idx.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha12Rng::seed_from_u64(z ^ (z >> 31))
}

fn draw_negatives(rng: &mut ChaCha12Rng, pool: usize, x: usize) -> Vec<usize> {
    if pool <= x {
        return (0..pool).collect();
    }
    (0..x).map(|_| rng.random_range(0..pool)).collect()
}

fn snapshot<S: Clone>(params: &[Param<S>]) -> Vec<Vec<S>> {
    params.iter().map(|p| p.values.clone()).collect()
}

fn restore<S: Clone>(params: &mut [Param<S>], snap: &[Vec<S>]) {
    for (p, s) in params.iter_mut().zip(snap) {
        p.values.clone_from(s);
    }
}

/// Semi-hard mining: of the sampled negatives, pick the one whose embedding
/// is nearest to the anchor (first index wins ties).
pub fn semi_hard_choice<S: Scalar>(
    model: &SiameseModel<S>,
    anchor_embedding: &[S],
    source: &dyn TripletSource,
    idx: usize,
    negatives: &[usize],
) -> usize {
    let mut best: Option<(S, usize)> = None;
    for &j in negatives {
        let emb = model.embed(&source.negative(idx, j)).expect("negative shape");
        let d = euclidean_distance(anchor_embedding, &emb);
        if best.as_ref().is_none_or(|&(bd, _)| d < bd) {
            best = Some((d, j));
        }
    }
    best.expect("non-empty negative sample").1
}

/// One triplet record's contribution: loss plus parameter gradients.
fn siamese_record_pass<S: Scalar>(
    model: &SiameseModel<S>,
    source: &dyn TripletSource,
    idx: usize,
    negatives: &[usize],
    grads: &mut Grads<S>,
) -> f64 {
    let anchor_tape = model.embed_tape(&source.anchor(idx)).expect("anchor shape");
    let positive_tape = model
        .embed_tape(&source.positive(idx))
        .expect("positive shape");
    let chosen = semi_hard_choice(model, anchor_tape.embedding(), source, idx, negatives);
    let negative_tape = model
        .embed_tape(&source.negative(idx, chosen))
        .expect("negative shape");
    let g = triplet_loss(
        anchor_tape.embedding(),
        positive_tape.embedding(),
        negative_tape.embedding(),
        S::from_f64(model.config.margin),
    );
    if g.loss > S::ZERO {
        model.backward(&anchor_tape, &g.danchor, grads);
        model.backward(&positive_tape, &g.dpositive, grads);
        model.backward(&negative_tape, &g.dnegative, grads);
    }
    g.loss.to_f64()
}

/// Loss over a source without updating parameters; negatives are drawn from
/// a fixed stream so epochs are comparable.
fn siamese_eval_loss<S: Scalar>(
    model: &SiameseModel<S>,
    source: &dyn TripletSource,
    seed: u64,
    x: usize,
) -> f64 {
    let losses: Vec<f64> = (0..source.len())
        .into_par_iter()
        .map(|idx| {
            if source.pool_size(idx) == 0 {
                return None;
            }
            let mut rng = record_rng(seed, u64::MAX, idx as u64);
            let negatives = draw_negatives(&mut rng, source.pool_size(idx), x);
            let anchor = model.embed(&source.anchor(idx)).expect("anchor shape");
            let positive = model.embed(&source.positive(idx)).expect("positive shape");
            let d_pos = euclidean_distance(&anchor, &positive);
            let d_neg = negatives
                .iter()
                .map(|&j| {
                    let n = model.embed(&source.negative(idx, j)).expect("negative shape");
                    euclidean_distance(&anchor, &n)
                })
                .min_by(|a, b| a.partial_cmp(b).unwrap())
                .unwrap();
            let raw = (d_pos - d_neg + S::from_f64(model.config.margin)).to_f64();
            Some(raw.max(0.0))
        })
        .flatten()
        .collect();
    if losses.is_empty() {
        0.0
    } else {
        losses.iter().sum::<f64>() / losses.len() as f64
    }
}

pub fn train_siamese<S: Scalar>(
    model: &mut SiameseModel<S>,
    source: &dyn TripletSource,
    validation: Option<&dyn TripletSource>,
    config: &TrainConfig,
) -> TrainReport {
    assert!(config.batch_size > 0 && config.max_epochs > 0);
    let mut opt = AdamW::new(config.optimizer, &model.store);
    let mut report = TrainReport {
        final_x: config.semi_hard_x,
        best_loss: f64::INFINITY,
        ..TrainReport::default()
    };
    let mut x = config.semi_hard_x.min(config.semi_hard_cap).max(1);
    let mut best_params = snapshot(&model.store.params);
    let mut stall = 0usize;

    for epoch in 0..config.max_epochs {
        let mut order: Vec<usize> = (0..source.len()).collect();
        let mut shuffle_rng = record_rng(config.seed, epoch as u64, u64::MAX);
        order.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0;
        let mut counted = 0usize;
        for batch in order.chunks(config.batch_size) {
            // Pre-draw negatives so the parallel section is pure.
            let work: Vec<(usize, Vec<usize>)> = batch
                .iter()
                .filter_map(|&idx| {
                    let pool = source.pool_size(idx);
                    if pool == 0 {
                        report.skipped_records += 1;
                        return None;
                    }
                    let mut rng = record_rng(config.seed, epoch as u64, idx as u64);
                    Some((idx, draw_negatives(&mut rng, pool, x)))
                })
                .collect();
            if work.is_empty() {
                continue;
            }
            let chunk_size = work.len().div_ceil(GRAD_CHUNKS);
            let partials: Vec<(f64, Grads<S>)> = work
                .par_chunks(chunk_size)
                .map(|chunk| {
                    let mut grads = Grads::zeros_like(&model.store);
                    let mut loss = 0.0;
                    for (idx, negatives) in chunk {
                        loss += siamese_record_pass(model, source, *idx, negatives, &mut grads);
                    }
                    (loss, grads)
                })
                .collect();
            let mut grads = Grads::zeros_like(&model.store);
            for (loss, partial) in &partials {
                epoch_loss += loss;
                grads.accumulate(partial);
            }
            counted += work.len();
            grads.scale(S::from_f64(1.0 / work.len() as f64));
            opt.step(&mut model.store, &grads);
        }

        let train_mean = if counted == 0 {
            0.0
        } else {
            epoch_loss / counted as f64
        };
        report.epoch_losses.push(train_mean);
        let monitored = match validation {
            Some(val) => {
                let v = siamese_eval_loss(model, val, config.seed, x);
                report.val_losses.push(v);
                v
            }
            None => train_mean,
        };

        if monitored < report.best_loss {
            report.best_loss = monitored;
            report.best_epoch = epoch;
            best_params = snapshot(&model.store.params);
            stall = 0;
        } else {
            stall += 1;
            // A stalled run gets a harder negative sample before giving up.
            x = (x * 2).min(config.semi_hard_cap);
            if stall > config.patience {
                report.stopped_early = true;
                break;
            }
        }
    }
    restore(&mut model.store.params, &best_params);
    report.final_x = x;
    report
}

fn pair_stack(anchor: &PlaneStack, board: &PlaneStack) -> PlaneStack {
    debug_assert_eq!(anchor.channels, HISTORY_CHANNELS);
    let mut stack = PlaneStack::zeros(PAIR_CHANNELS);
    stack.splice(0, anchor);
    stack.splice(HISTORY_CHANNELS, board);
    stack
}

/// Trains the CNN baseline: per epoch every record yields one positive pair
/// (target 1) and one randomly drawn negative pair (target 0).
pub fn train_cnn<S: Scalar>(
    model: &mut CnnModel<S>,
    source: &dyn TripletSource,
    validation: Option<&dyn TripletSource>,
    config: &TrainConfig,
) -> TrainReport {
    assert!(config.batch_size > 0 && config.max_epochs > 0);
    let mut opt = AdamW::new(config.optimizer, &model.store);
    let mut report = TrainReport {
        final_x: 1,
        best_loss: f64::INFINITY,
        ..TrainReport::default()
    };
    let mut best_params = snapshot(&model.store.params);
    let mut stall = 0usize;

    let eval = |model: &CnnModel<S>, src: &dyn TripletSource, seed: u64| -> f64 {
        let losses: Vec<f64> = (0..src.len())
            .into_par_iter()
            .map(|idx| {
                if src.pool_size(idx) == 0 {
                    return None;
                }
                let mut rng = record_rng(seed, u64::MAX, idx as u64);
                let neg = rng.random_range(0..src.pool_size(idx));
                let anchor = src.anchor(idx);
                let pos = pair_stack(&anchor, &src.positive(idx));
                let negp = pair_stack(&anchor, &src.negative(idx, neg));
                let (lp, _) = bce_with_logit(
                    model.forward_tape(&pos).expect("pair shape").logit(),
                    S::ONE,
                );
                let (ln, _) = bce_with_logit(
                    model.forward_tape(&negp).expect("pair shape").logit(),
                    S::ZERO,
                );
                Some((lp + ln).to_f64() / 2.0)
            })
            .flatten()
            .collect();
        if losses.is_empty() {
            0.0
        } else {
            losses.iter().sum::<f64>() / losses.len() as f64
        }
    };

    for epoch in 0..config.max_epochs {
        let mut order: Vec<usize> = (0..source.len()).collect();
        let mut shuffle_rng = record_rng(config.seed, epoch as u64, u64::MAX);
        order.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0;
        let mut counted = 0usize;
        for batch in order.chunks(config.batch_size) {
            let work: Vec<(usize, usize)> = batch
                .iter()
                .filter_map(|&idx| {
                    let pool = source.pool_size(idx);
                    if pool == 0 {
                        report.skipped_records += 1;
                        return None;
                    }
                    let mut rng = record_rng(config.seed, epoch as u64, idx as u64);
                    Some((idx, rng.random_range(0..pool)))
                })
                .collect();
            if work.is_empty() {
                continue;
            }
            let chunk_size = work.len().div_ceil(GRAD_CHUNKS);
            let partials: Vec<(f64, Grads<S>)> = work
                .par_chunks(chunk_size)
                .map(|chunk| {
                    let mut grads = Grads::zeros_like(&model.store);
                    let mut loss = 0.0;
                    for &(idx, neg) in chunk {
                        let anchor = source.anchor(idx);
                        for (board, target) in [
                            (source.positive(idx), S::ONE),
                            (source.negative(idx, neg), S::ZERO),
                        ] {
                            let pair = pair_stack(&anchor, &board);
                            let tape = model.forward_tape(&pair).expect("pair shape");
                            let (l, dlogit) = bce_with_logit(tape.logit(), target);
                            loss += l.to_f64();
                            model.backward(&tape, dlogit, &mut grads);
                        }
                    }
                    (loss, grads)
                })
                .collect();
            let mut grads = Grads::zeros_like(&model.store);
            for (loss, partial) in &partials {
                epoch_loss += loss;
                grads.accumulate(partial);
            }
            counted += work.len() * 2;
            grads.scale(S::from_f64(1.0 / (work.len() * 2) as f64));
            opt.step(&mut model.store, &grads);
        }

        let train_mean = if counted == 0 {
            0.0
        } else {
            epoch_loss / counted as f64
        };
        report.epoch_losses.push(train_mean);
        let monitored = match validation {
            Some(val) => {
                let v = eval(model, val, config.seed);
                report.val_losses.push(v);
                v
            }
            None => train_mean,
        };

        if monitored < report.best_loss {
            report.best_loss = monitored;
            report.best_epoch = epoch;
            best_params = snapshot(&model.store.params);
            stall = 0;
        } else {
            stall += 1;
            if stall > config.patience {
                report.stopped_early = true;
                break;
            }
        }
    }
    restore(&mut model.store.params, &best_params);
    report
}
