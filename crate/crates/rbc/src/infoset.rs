//! Information-set tracking for one player.
//!
//! The set holds every board consistent with the player's observations so
//! far, ordered by canonical board key and clipped to a cap. Expansion over
//! opponent moves and the two filters (sense, own move result) are the only
//! ways the set changes.

use crate::rules::{
    self, Board, Color, MoveOutcome, MoveRequest, SenseResult, Square,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InfosetError {
    #[error("no board in the set is consistent with the observation")]
    InconsistentObservation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformationSet {
    boards: Vec<Board>,
    cap: usize,
    truncated: bool,
}

pub const DEFAULT_CAP: usize = 5000;

impl InformationSet {
    /// Singleton set holding the standard initial position. Both colors
    /// start here; the black tracker grows on its first expansion.
    pub fn initial() -> InformationSet {
        InformationSet {
            boards: vec![Board::initial()],
            cap: DEFAULT_CAP,
            truncated: false,
        }
    }

    pub fn initial_with_cap(cap: usize) -> InformationSet {
        InformationSet {
            cap,
            ..InformationSet::initial()
        }
    }

    pub fn from_boards(mut boards: Vec<Board>, cap: usize) -> InformationSet {
        boards.sort();
        boards.dedup();
        let truncated = boards.len() > cap;
        boards.truncate(cap);
        InformationSet {
            boards,
            cap,
            truncated,
        }
    }

    pub fn boards(&self) -> &[Board] {
        &self.boards
    }

    pub fn len(&self) -> usize {
        self.boards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boards.is_empty()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// True once the cap has ever clipped the set; from then on the true
    /// board may have been dropped.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn contains(&self, board: &Board) -> bool {
        self.boards.binary_search(board).is_ok()
    }

    pub fn position(&self, board: &Board) -> Option<usize> {
        self.boards.binary_search(board).ok()
    }

    /// Arena recovery hook: forget everything and restart from the known
    /// true board. Clears the truncated flag.
    pub fn reset_to(&mut self, board: Board) {
        self.boards = vec![board];
        self.truncated = false;
    }

    fn replace(&self, boards: BTreeSet<Board>) -> Result<InformationSet, InfosetError> {
        if boards.is_empty() {
            return Err(InfosetError::InconsistentObservation);
        }
        let mut boards: Vec<Board> = boards.into_iter().collect();
        // Clipping drops the largest canonical keys; deterministic and
        // independent of arrival order.
        let clipped = boards.len() > self.cap;
        boards.truncate(self.cap);
        Ok(InformationSet {
            boards,
            cap: self.cap,
            truncated: self.truncated || clipped,
        })
    }

    /// Replace every board by its possible successors under the opponent's
    /// (hidden) move, keeping only outcomes whose capture square matches the
    /// observation.
    pub fn expand_opponent(
        &self,
        observed_capture: Option<Square>,
    ) -> Result<InformationSet, InfosetError> {
        let per_board: Vec<Vec<Board>> = self
            .boards
            .par_iter()
            .map(|b| {
                rules::successor_outcomes(b)
                    .into_iter()
                    .filter(|(_, oc)| oc.capture_square == observed_capture)
                    .map(|(next, _)| next)
                    .collect()
            })
            .collect();
        let mut merged = BTreeSet::new();
        for group in per_board {
            merged.extend(group);
        }
        self.replace(merged)
    }

    /// Keep exactly the boards whose ground-truth window matches the sense.
    pub fn filter_sense(&self, result: &SenseResult) -> Result<InformationSet, InfosetError> {
        let kept: BTreeSet<Board> = self
            .boards
            .iter()
            .filter(|b| rules::sense(b, result.center) == *result)
            .cloned()
            .collect();
        self.replace(kept)
    }

    /// Advance every board by the player's own request and keep the
    /// successors whose adjudication matches the observed outcome.
    pub fn filter_own_move(&self, observed: &MoveOutcome) -> Result<InformationSet, InfosetError> {
        let kept: BTreeSet<Board> = self
            .boards
            .iter()
            .filter_map(|b| {
                let (next, oc) = rules::apply_request(b, observed.requested).ok()?;
                (oc == *observed).then_some(next)
            })
            .collect();
        self.replace(kept)
    }
}

/// One player's per-turn observation record. Optional fields are absent
/// while the turn is still in progress (the anchor at move time has the
/// sense but not yet the move).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnObservation {
    pub color: Color,
    pub opponent_capture_square: Option<Square>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sense: Option<SenseRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub own_move: Option<MoveOutcome>,
    /// The player's own pieces, fully known at all times.
    pub own_pieces: OwnPieces,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseRecord {
    pub center: Square,
    pub result: SenseResult,
}

/// 64-square partial placement holding only one color's pieces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnPieces(pub Vec<Option<crate::rules::Piece>>);

impl OwnPieces {
    pub fn from_board(board: &Board, color: Color) -> OwnPieces {
        OwnPieces(
            (0..64)
                .map(|i| match board.placement[i] {
                    Some((c, p)) if c == color => Some(p),
                    _ => None,
                })
                .collect(),
        )
    }
}

impl TurnObservation {
    pub fn new(color: Color, opponent_capture_square: Option<Square>, own_pieces: OwnPieces) -> Self {
        TurnObservation {
            color,
            opponent_capture_square,
            sense: None,
            own_move: None,
            own_pieces,
        }
    }

    pub fn last_request(&self) -> Option<MoveRequest> {
        self.own_move.as_ref().map(|m| m.requested)
    }
}

/// Chronological observation history; the anchor input of the Siamese
/// network is derived from this.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObservationHistory {
    pub turns: Vec<TurnObservation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opponent_name: Option<String>,
}

impl ObservationHistory {
    pub fn new(opponent_name: Option<String>) -> ObservationHistory {
        ObservationHistory {
            turns: Vec::new(),
            opponent_name,
        }
    }
}
