//! Game-record persistence (JSONL), triplet dataset construction, splitting
//! and epoch iteration.

use crate::encoding::{encode_board, encode_history, PlaneStack, Roster};
use crate::infoset::{InformationSet, ObservationHistory, TurnObservation, DEFAULT_CAP};
use crate::nn::TripletSource;
use crate::rules::{apply_request, Board, Color, MoveRequest, RulesError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: unsupported schema version {found}")]
    Version { line: usize, found: u32 },
    #[error("corrupt record: {0}")]
    Corrupt(String),
    #[error("rules error during replay: {0}")]
    Rules(#[from] RulesError),
    #[error("information set error during replay: {0}")]
    Infoset(#[from] crate::infoset::InfosetError),
}

/// One player's half-turn: the observation they received, the true board at
/// decision time (after sensing, before their move) and after their move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlyRecord {
    pub observation: TurnObservation,
    pub pre_fen: String,
    pub post_fen: String,
    /// Size of the mover's tracked information set at decision time.
    pub set_size: usize,
    pub truncated: bool,
}

/// A complete game from both players' perspectives, replayable through the
/// rules kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub v: u32,
    pub white: String,
    pub black: String,
    pub winner: Option<Color>,
    pub termination: String,
    pub seed: u64,
    pub plies: Vec<PlyRecord>,
}

pub fn write_games(path: &Path, games: &[GameRecord]) -> Result<(), DataError> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for game in games {
        serde_json::to_writer(&mut out, game).map_err(|source| DataError::Parse {
            line: 0,
            source,
        })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_games(path: &Path) -> Result<Vec<GameRecord>, DataError> {
    let file = BufReader::new(std::fs::File::open(path)?);
    let mut games = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let game: GameRecord =
            serde_json::from_str(&line).map_err(|source| DataError::Parse {
                line: i + 1,
                source,
            })?;
        if game.v != SCHEMA_VERSION {
            return Err(DataError::Version {
                line: i + 1,
                found: game.v,
            });
        }
        games.push(game);
    }
    Ok(games)
}

/// Reads every `.rbcl` file in a directory, sorted by file name.
pub fn read_game_dir(dir: &Path) -> Result<Vec<GameRecord>, DataError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "rbcl"))
        .collect();
    paths.sort();
    let mut games = Vec::new();
    for path in paths {
        games.extend(read_games(&path)?);
    }
    Ok(games)
}

/// Verifies that the stored true boards are exactly what replaying every
/// taken move through the rules kernel produces.
pub fn verify_replay(record: &GameRecord) -> Result<(), DataError> {
    let mut truth = Board::initial();
    for (i, ply) in record.plies.iter().enumerate() {
        if truth.to_fen() != ply.pre_fen {
            return Err(DataError::Corrupt(format!(
                "ply {i}: decision board diverged (expected {}, replayed {})",
                ply.pre_fen,
                truth.to_fen()
            )));
        }
        let outcome = ply
            .observation
            .own_move
            .as_ref()
            .ok_or_else(|| DataError::Corrupt(format!("ply {i}: missing move outcome")))?;
        let (next, oc) = apply_request(&truth, outcome.requested)?;
        if oc != *outcome {
            return Err(DataError::Corrupt(format!(
                "ply {i}: stored outcome does not match adjudication"
            )));
        }
        if next.to_fen() != ply.post_fen {
            return Err(DataError::Corrupt(format!(
                "ply {i}: post-move board diverged"
            )));
        }
        truth = next;
    }
    Ok(())
}

/// One training record: everything known at a single decision, the true
/// board, and every other board of the information set.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletRecord {
    pub anchor: ObservationHistory,
    pub positive: Board,
    pub negative_pool: Vec<Board>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub produced: usize,
    /// Decisions skipped because the set had collapsed to the true board.
    pub singleton: usize,
    /// Decisions skipped because the cap clipped the true board out.
    pub clipped: usize,
}

/// Reconstructs `player`'s information set turn by turn and emits one
/// [`TripletRecord`] per decision. The anchor contains everything up to and
/// including the turn's sense result, but not the move.
pub fn build_triplets(
    record: &GameRecord,
    player: Color,
    cap: usize,
) -> Result<(Vec<TripletRecord>, BuildStats), DataError> {
    verify_replay(record)?;
    let opponent = match player {
        Color::White => &record.black,
        Color::Black => &record.white,
    };
    let mut set = InformationSet::initial_with_cap(cap);
    let mut history = ObservationHistory::new(Some(opponent.clone()));
    let mut stats = BuildStats::default();
    let mut triplets = Vec::new();
    let mut first = true;
    for ply in &record.plies {
        if ply.observation.color != player {
            continue;
        }
        let obs = &ply.observation;
        // Once the cap has clipped the true board away, an observation can
        // refute every remaining hypothesis; reconstruction cannot recover
        // from that, so triplet production stops there.
        if !(first && player == Color::White) {
            match set.expand_opponent(obs.opponent_capture_square) {
                Ok(next) => set = next,
                Err(_) if set.truncated() => break,
                Err(e) => return Err(e.into()),
            }
        }
        first = false;
        let mut partial = obs.clone();
        partial.own_move = None;
        history.turns.push(partial);
        if let Some(sense) = &obs.sense {
            match set.filter_sense(&sense.result) {
                Ok(next) => set = next,
                Err(_) if set.truncated() => break,
                Err(e) => return Err(e.into()),
            }
        }
        let positive = Board::from_fen(&ply.pre_fen)?;
        if set.contains(&positive) {
            if set.len() == 1 {
                stats.singleton += 1;
            } else {
                triplets.push(TripletRecord {
                    anchor: history.clone(),
                    positive: positive.clone(),
                    negative_pool: set
                        .boards()
                        .iter()
                        .filter(|b| **b != positive)
                        .cloned()
                        .collect(),
                });
                stats.produced += 1;
            }
        } else if set.truncated() {
            stats.clipped += 1;
        } else {
            return Err(DataError::Corrupt(format!(
                "true board missing from an untruncated information set at turn {}",
                history.turns.len()
            )));
        }
        let outcome = obs
            .own_move
            .as_ref()
            .ok_or_else(|| DataError::Corrupt("ply without move outcome".into()))?;
        match set.filter_own_move(outcome) {
            Ok(next) => set = next,
            Err(_) if set.truncated() => break,
            Err(e) => return Err(e.into()),
        }
        history.turns.last_mut().expect("pushed above").own_move = Some(outcome.clone());
    }
    Ok((triplets, stats))
}

/// Builds triplets for both colors of every game with the default cap.
pub fn build_all_triplets(
    games: &[GameRecord],
    cap: usize,
) -> Result<(Vec<Vec<TripletRecord>>, BuildStats), DataError> {
    let mut per_game = Vec::with_capacity(games.len());
    let mut stats = BuildStats::default();
    for game in games {
        let mut records = Vec::new();
        for color in [Color::White, Color::Black] {
            let (mut t, s) = build_triplets(game, color, cap)?;
            records.append(&mut t);
            stats.produced += s.produced;
            stats.singleton += s.singleton;
            stats.clipped += s.clipped;
        }
        per_game.push(records);
    }
    Ok((per_game, stats))
}

/// Seeded split by whole game (never by turn, so no leakage between train
/// and test observations of one game).
pub fn split<T>(mut games: Vec<T>, fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..games.len()).collect();
    order.shuffle(&mut rng);
    let n_train = (games.len() as f64 * fraction).round() as usize;
    let train_set: std::collections::BTreeSet<usize> =
        order.into_iter().take(n_train).collect();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, game) in games.drain(..).enumerate() {
        if train_set.contains(&i) {
            train.push(game);
        } else {
            test.push(game);
        }
    }
    (train, test)
}

/// Visit order for one epoch: every record exactly once, shuffled by
/// (seed, epoch).
pub fn epoch_iter(len: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ epoch.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    order.shuffle(&mut rng);
    order
}

/// Encoded triplet dataset; the [`TripletSource`] the trainers consume.
pub struct TripletDataset {
    pub records: Vec<TripletRecord>,
    pub roster: Roster,
}

impl TripletDataset {
    pub fn new(records: Vec<TripletRecord>, roster: Roster) -> TripletDataset {
        TripletDataset { records, roster }
    }
}

impl TripletSource for TripletDataset {
    fn len(&self) -> usize {
        self.records.len()
    }

    fn anchor(&self, i: usize) -> PlaneStack {
        encode_history(&self.records[i].anchor, &self.roster)
    }

    fn positive(&self, i: usize) -> PlaneStack {
        encode_board(&self.records[i].positive)
    }

    fn pool_size(&self, i: usize) -> usize {
        self.records[i].negative_pool.len()
    }

    fn negative(&self, i: usize, j: usize) -> PlaneStack {
        encode_board(&self.records[i].negative_pool[j])
    }
}

/// Scripted quiet opening used by tests: plays both sides with pass-free
/// simple pawn moves and records full observations.
pub fn record_scripted_game(
    white: &str,
    black: &str,
    moves: &[MoveRequest],
    seed: u64,
) -> Result<GameRecord, DataError> {
    use crate::infoset::{OwnPieces, SenseRecord};
    use crate::rules::{outcome, sense, Outcome, Square};

    let mut truth = Board::initial();
    let mut plies = Vec::new();
    let mut white_set = InformationSet::initial();
    let mut black_set = InformationSet::initial();
    let mut last_capture: Option<Square> = None;
    let mut first_white = true;
    for &mv in moves {
        if outcome(&truth) != Outcome::Ongoing {
            break;
        }
        let mover = truth.side_to_move;
        let set = match mover {
            Color::White => &mut white_set,
            Color::Black => &mut black_set,
        };
        if !(first_white && mover == Color::White) {
            *set = set.expand_opponent(last_capture)?;
        }
        if mover == Color::White {
            first_white = false;
        }
        let mut obs = TurnObservation::new(mover, last_capture, OwnPieces::from_board(&truth, mover));
        // Sense the true board around e4/e5 - a fixed, information-bearing
        // window.
        let center = Square::parse(if mover == Color::White { "e5" } else { "e4" }).unwrap();
        let result = sense(&truth, center);
        *set = set.filter_sense(&result)?;
        obs.sense = Some(SenseRecord {
            center,
            result,
        });
        let pre_fen = truth.to_fen();
        let set_size = set.len();
        let (next, oc) = apply_request(&truth, mv)?;
        *set = set.filter_own_move(&oc)?;
        obs.own_move = Some(oc.clone());
        last_capture = oc.capture_square;
        plies.push(PlyRecord {
            observation: obs,
            pre_fen,
            post_fen: next.to_fen(),
            set_size,
            truncated: set.truncated(),
        });
        truth = next;
    }
    let winner = match crate::rules::outcome(&truth) {
        crate::rules::Outcome::Win(c) => Some(c),
        _ => None,
    };
    Ok(GameRecord {
        v: SCHEMA_VERSION,
        white: white.to_string(),
        black: black.to_string(),
        winner,
        termination: if winner.is_some() {
            "king_capture".into()
        } else {
            "script_end".into()
        },
        seed,
        plies,
    })
}

pub fn default_cap() -> usize {
    DEFAULT_CAP
}
