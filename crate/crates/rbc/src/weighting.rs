//! Turning per-board scores into a probability weighting over an
//! information set.
//!
//! The core transform is a temperature-scaled softmin over distances: the
//! board nearest the observation-history anchor in embedding space gets the
//! most mass. Alternative providers (uniform, random, engine evaluation,
//! CNN probabilities) plug into the same interface for comparison.

use crate::encoding::{encode_board, encode_history, encode_pair, Roster};
use crate::infoset::ObservationHistory;
use crate::nn::model::{CnnModel, SiameseModel};
use crate::nn::{euclidean_distance, Scalar};
use crate::rules::Board;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Default softmin temperature.
pub const DEFAULT_TEMPERATURE: f64 = 10.0;

#[derive(Debug, Error)]
pub enum WeightingError {
    #[error("cannot weight an empty board collection")]
    Empty,
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("model rejected input: {0}")]
    Model(#[from] crate::nn::model::ModelError),
}

/// Normalized softmin: w_i proportional to exp(-d_i / t). The minimum is
/// subtracted first so large distances cannot underflow every term.
pub fn softmin_weights(distances: &[f64], temperature: f64) -> Result<Vec<f64>, WeightingError> {
    if distances.is_empty() {
        return Err(WeightingError::Empty);
    }
    if !(temperature > 0.0) {
        return Err(WeightingError::BadTemperature(temperature));
    }
    let min = distances.iter().cloned().fold(f64::INFINITY, f64::min);
    let unnorm: Vec<f64> = distances
        .iter()
        .map(|d| (-(d - min) / temperature).exp())
        .collect();
    let total: f64 = unnorm.iter().sum();
    Ok(unnorm.into_iter().map(|w| w / total).collect())
}

/// Indices sorted by descending weight; ties keep their original order, so
/// equal-weight boards rank by their canonical position in the set.
pub fn rank_by_weight(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap());
    order
}

/// Embeds the observation history once; reuse the result across every board
/// of the set.
pub fn anchor_embedding<S: Scalar>(
    model: &SiameseModel<S>,
    hist: &ObservationHistory,
    roster: &Roster,
) -> Result<Vec<S>, WeightingError> {
    Ok(model.embed(&encode_history(hist, roster))?)
}

/// Distance from a fixed anchor embedding to each board's embedding.
pub fn board_distances<S: Scalar>(
    model: &SiameseModel<S>,
    anchor: &[S],
    boards: &[Board],
) -> Result<Vec<f64>, WeightingError> {
    boards
        .par_iter()
        .map(|b| {
            let emb = model.embed(&encode_board(b))?;
            Ok(euclidean_distance(anchor, &emb).to_f64())
        })
        .collect()
}

/// A strategy for assigning weights to the boards of an information set.
pub trait Weighter: Sync {
    fn weights(
        &self,
        hist: &ObservationHistory,
        boards: &[Board],
        roster: &Roster,
    ) -> Result<Vec<f64>, WeightingError>;

    fn name(&self) -> &str;
}

/// Siamese embedding distances through the softmin.
pub struct SiameseWeighter<'a, S> {
    pub model: &'a SiameseModel<S>,
    pub temperature: f64,
}

impl<'a, S: Scalar> SiameseWeighter<'a, S> {
    pub fn new(model: &'a SiameseModel<S>) -> SiameseWeighter<'a, S> {
        SiameseWeighter {
            model,
            temperature: DEFAULT_TEMPERATURE,
        }
    }

    pub fn distances(
        &self,
        hist: &ObservationHistory,
        boards: &[Board],
        roster: &Roster,
    ) -> Result<Vec<f64>, WeightingError> {
        let anchor = anchor_embedding(self.model, hist, roster)?;
        board_distances(self.model, &anchor, boards)
    }
}

impl<S: Scalar> Weighter for SiameseWeighter<'_, S> {
    fn weights(
        &self,
        hist: &ObservationHistory,
        boards: &[Board],
        roster: &Roster,
    ) -> Result<Vec<f64>, WeightingError> {
        softmin_weights(&self.distances(hist, boards, roster)?, self.temperature)
    }

    fn name(&self) -> &str {
        "siamese"
    }
}

/// CNN per-board probabilities, normalized to sum to one.
pub struct CnnWeighter<'a, S> {
    pub model: &'a CnnModel<S>,
}

impl<S: Scalar> Weighter for CnnWeighter<'_, S> {
    fn weights(
        &self,
        hist: &ObservationHistory,
        boards: &[Board],
        roster: &Roster,
    ) -> Result<Vec<f64>, WeightingError> {
        if boards.is_empty() {
            return Err(WeightingError::Empty);
        }
        let probs: Vec<f64> = boards
            .par_iter()
            .map(|b| {
                let pair = encode_pair(hist, b, roster);
                Ok(self.model.predict(&pair)?.to_f64())
            })
            .collect::<Result<_, WeightingError>>()?;
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            // Degenerate all-zero output falls back to uniform.
            return Ok(vec![1.0 / boards.len() as f64; boards.len()]);
        }
        Ok(probs.into_iter().map(|p| p / total).collect())
    }

    fn name(&self) -> &str {
        "cnn"
    }
}

/// Every board equally likely.
pub struct UniformWeighter;

impl Weighter for UniformWeighter {
    fn weights(
        &self,
        _hist: &ObservationHistory,
        boards: &[Board],
        _roster: &Roster,
    ) -> Result<Vec<f64>, WeightingError> {
        if boards.is_empty() {
            return Err(WeightingError::Empty);
        }
        Ok(vec![1.0 / boards.len() as f64; boards.len()])
    }

    fn name(&self) -> &str {
        "uniform"
    }
}

/// Seeded random permutation of ranks fed through the softmin; the same
/// weight profile as a trained provider, attached to arbitrary boards.
pub struct RandomWeighter {
    pub seed: u64,
    pub temperature: f64,
}

impl Weighter for RandomWeighter {
    fn weights(
        &self,
        hist: &ObservationHistory,
        boards: &[Board],
        _roster: &Roster,
    ) -> Result<Vec<f64>, WeightingError> {
        if boards.is_empty() {
            return Err(WeightingError::Empty);
        }
        // Mix the turn count in so the permutation varies over a game.
        let mut rng =
            ChaCha12Rng::seed_from_u64(self.seed ^ (hist.turns.len() as u64).wrapping_mul(0x9E37));
        let mut ranks: Vec<f64> = (0..boards.len()).map(|i| i as f64).collect();
        ranks.shuffle(&mut rng);
        softmin_weights(&ranks, self.temperature)
    }

    fn name(&self) -> &str {
        "random"
    }
}

/// Weights boards by how good they are for the side to move (the opponent,
/// when weighting our information set): softmin over negated evaluations.
pub struct EngineEvalWeighter<F> {
    pub evaluate: F,
    pub temperature: f64,
}

impl<F: Fn(&Board) -> f64 + Sync> Weighter for EngineEvalWeighter<F> {
    fn weights(
        &self,
        _hist: &ObservationHistory,
        boards: &[Board],
        _roster: &Roster,
    ) -> Result<Vec<f64>, WeightingError> {
        if boards.is_empty() {
            return Err(WeightingError::Empty);
        }
        let costs: Vec<f64> = boards.par_iter().map(|b| -(self.evaluate)(b)).collect();
        softmin_weights(&costs, self.temperature)
    }

    fn name(&self) -> &str {
        "engine-eval"
    }
}
