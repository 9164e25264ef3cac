//! The full player: sense-square selection by expected eliminated weight
//! mass, candidate generation from per-board best moves, and weighted move
//! scoring against a pluggable perfect-information evaluator.

use crate::infoset::{InfosetError, InformationSet, ObservationHistory, OwnPieces, SenseRecord, TurnObservation};
use crate::rules::{
    self, apply_request, outcome, playable_moves, successor_outcomes, Board, Color, MoveOutcome, MoveRequest, Outcome,
    Piece, RulesError, SenseResult, Square,
};
use crate::encoding::Roster;
use crate::weighting::{rank_by_weight, Weighter, WeightingError, DEFAULT_TEMPERATURE};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("information set error: {0}")]
    Infoset(#[from] InfosetError),
    #[error("weighting error: {0}")]
    Weighting(#[from] WeightingError),
    #[error("rules error: {0}")]
    Rules(#[from] RulesError),
    #[error("cannot act on an empty information set")]
    EmptySet,
    #[error("every board evaluation failed")]
    NoCandidates,
    #[error("engine failure: {0}")]
    Engine(String),
    #[error("turn protocol violation: {0}")]
    Protocol(&'static str),
}

/// Scores single fully-known boards and proposes moves on them.
pub trait Evaluator: Sync {
    /// Strongest move on this one board.
    fn best_move(&self, board: &Board) -> Result<MoveRequest, AgentError>;

    /// Static evaluation of a position in [-1, 1] from `perspective`.
    fn evaluate_board(&self, board: &Board, perspective: Color) -> Result<f64, AgentError>;

    /// f(m, e): score of requesting `mv` on `board`, via the adjudicated
    /// successor (the request may be illegal on this board and become a
    /// pass — engines cannot be asked about illegal moves directly).
    fn evaluate_move(&self, board: &Board, mv: MoveRequest) -> Result<f64, AgentError> {
        let me = board.side_to_move;
        let next = match apply_request(board, mv) {
            Ok((next, _)) => next,
            // Terminal or degenerate request: fall back to the board as-is.
            Err(_) => board.clone(),
        };
        match outcome(&next) {
            Outcome::Win(c) if c == me => Ok(1.0),
            Outcome::Win(_) => Ok(-1.0),
            Outcome::Draw => Ok(0.0),
            Outcome::Ongoing => self.evaluate_board(&next, me),
        }
    }
}

/// Centipawns to the evaluator's [-1, 1] scale.
pub fn normalize_centipawns(cp: f64) -> f64 {
    (cp / 400.0).tanh()
}

fn piece_value(piece: Piece) -> i64 {
    match piece {
        Piece::Pawn => 100,
        Piece::Knight => 320,
        Piece::Bishop => 330,
        Piece::Rook => 500,
        Piece::Queen => 900,
        Piece::King => 100_000,
    }
}

/// Built-in evaluator: alpha-beta material search. King capture dominates
/// every material swing, so a depth-2 search treats hanging the king as
/// losing.
#[derive(Debug, Clone)]
pub struct MaterialEvaluator {
    pub depth: u32,
}

impl Default for MaterialEvaluator {
    fn default() -> MaterialEvaluator {
        MaterialEvaluator { depth: 2 }
    }
}

impl MaterialEvaluator {
    fn static_cp(board: &Board) -> i64 {
        let me = board.side_to_move;
        board
            .placement
            .iter()
            .flatten()
            .map(|&(c, p)| {
                if c == me {
                    piece_value(p)
                } else {
                    -piece_value(p)
                }
            })
            .sum()
    }

    /// Centipawns from the side to move's perspective.
    fn negamax(&self, board: &Board, depth: u32, mut alpha: i64, beta: i64) -> i64 {
        match outcome(board) {
            Outcome::Win(c) => {
                return if c == board.side_to_move {
                    piece_value(Piece::King)
                } else {
                    -piece_value(Piece::King)
                }
            }
            Outcome::Draw => return 0,
            Outcome::Ongoing => {}
        }
        if depth == 0 {
            return Self::static_cp(board);
        }
        let mut best = i64::MIN;
        for mv in playable_moves(board).into_iter().chain([MoveRequest::Pass]) {
            let Ok((next, _)) = apply_request(board, mv) else {
                continue;
            };
            let val = -self.negamax(&next, depth - 1, -beta, -alpha);
            if val > best {
                best = val;
            }
            if best > alpha {
                alpha = best;
            }
            if alpha >= beta {
                break;
            }
        }
        best
    }
}

impl Evaluator for MaterialEvaluator {
    fn best_move(&self, board: &Board) -> Result<MoveRequest, AgentError> {
        if outcome(board) != Outcome::Ongoing {
            return Ok(MoveRequest::Pass);
        }
        let mut best: Option<(i64, MoveRequest)> = None;
        for mv in playable_moves(board) {
            let Ok((next, _)) = apply_request(board, mv) else {
                continue;
            };
            let val = -self.negamax(&next, self.depth.saturating_sub(1), i64::MIN + 1, i64::MAX);
            if best.as_ref().is_none_or(|&(b, _)| val > b) {
                best = Some((val, mv));
            }
        }
        Ok(best.map(|(_, mv)| mv).unwrap_or(MoveRequest::Pass))
    }

    fn evaluate_board(&self, board: &Board, perspective: Color) -> Result<f64, AgentError> {
        let cp = self.negamax(board, self.depth, i64::MIN + 1, i64::MAX);
        let signed = if board.side_to_move == perspective {
            cp
        } else {
            -cp
        };
        Ok(normalize_centipawns(signed as f64))
    }
}

/// Agent hyperparameters.
#[derive(Debug, Clone)]
pub struct AgentConfig {
    /// Softmin temperature used by distance-based providers.
    pub temperature: f64,
    /// Boards considered when scoring sense squares and moves.
    pub sense_board_budget: usize,
    /// Maximum number of candidate moves scored by the weighted sum.
    pub candidate_cap: usize,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> AgentConfig {
        AgentConfig {
            temperature: DEFAULT_TEMPERATURE,
            sense_board_budget: 100,
            candidate_cap: 64,
            seed: 0,
        }
    }
}

/// Indices of the `budget` highest-weight boards, in descending weight.
fn budget_indices(weights: &[f64], budget: usize) -> Vec<usize> {
    let mut order = rank_by_weight(weights);
    order.truncate(budget.max(1));
    order
}

fn sense_key(result: &SenseResult) -> Vec<u8> {
    let mut key = Vec::with_capacity(result.cells.len() * 2);
    for (sq, contents) in &result.cells {
        key.push(sq.index() as u8);
        key.push(match contents {
            None => 0,
            Some((color, piece)) => {
                let base = if *color == Color::White { 1 } else { 7 };
                base + match piece {
                    Piece::Pawn => 0,
                    Piece::Knight => 1,
                    Piece::Bishop => 2,
                    Piece::Rook => 3,
                    Piece::Queen => 4,
                    Piece::King => 5,
                }
            }
        });
    }
    key
}

/// Expected eliminated weight mass of sensing at `center`, over the given
/// boards and weights: bucket the boards by their window contents, and for
/// each possible result the remaining mass `res` eliminates `s - res`.
pub fn sense_score(boards: &[&Board], weights: &[f64], center: Square) -> f64 {
    let mut buckets: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    let mut total = 0.0;
    for (board, &w) in boards.iter().zip(weights) {
        *buckets.entry(sense_key(&rules::sense(board, center))).or_default() += w;
        total += w;
    }
    if total <= 0.0 {
        return 0.0;
    }
    buckets
        .values()
        .map(|&mass| (mass / total) * (total - mass))
        .sum()
}

/// Algorithm: score every interior square on the top-budget boards, return
/// the best, ties to the lowest square index.
pub fn choose_sense(
    set: &InformationSet,
    weights: &[f64],
    budget: usize,
) -> Result<Square, AgentError> {
    if set.is_empty() {
        return Err(AgentError::EmptySet);
    }
    let picked = budget_indices(weights, budget);
    let boards: Vec<&Board> = picked.iter().map(|&i| &set.boards()[i]).collect();
    let mass: Vec<f64> = picked.iter().map(|&i| weights[i]).collect();
    let mut best: Option<(f64, Square)> = None;
    for center in Square::interior() {
        let score = sense_score(&boards, &mass, center);
        if best.as_ref().is_none_or(|&(b, _)| score > b) {
            best = Some((score, center));
        }
    }
    Ok(best.expect("interior squares exist").1)
}

/// Per-board best moves, deduplicated and ordered by the total weight of
/// the boards proposing each move (descending; ties by move notation).
/// Pass is appended as a safety candidate.
pub fn candidate_moves(
    set: &InformationSet,
    weights: &[f64],
    evaluator: &dyn Evaluator,
    budget: usize,
    cap: usize,
) -> Result<Vec<MoveRequest>, AgentError> {
    if set.is_empty() {
        return Err(AgentError::EmptySet);
    }
    let picked = budget_indices(weights, budget);
    let mut mass: BTreeMap<String, (MoveRequest, f64)> = BTreeMap::new();
    let mut failures = 0usize;
    for &i in &picked {
        match evaluator.best_move(&set.boards()[i]) {
            Ok(mv) => {
                let entry = mass.entry(mv.to_string()).or_insert((mv, 0.0));
                entry.1 += weights[i];
            }
            Err(_) => failures += 1,
        }
    }
    if mass.is_empty() && failures > 0 {
        return Err(AgentError::NoCandidates);
    }
    let mut ordered: Vec<(MoveRequest, f64, String)> = mass
        .into_iter()
        .map(|(uci, (mv, w))| (mv, w, uci))
        .collect();
    ordered.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.2.cmp(&b.2)));
    let mut moves: Vec<MoveRequest> = ordered
        .into_iter()
        .take(cap.max(1))
        .map(|(mv, _, _)| mv)
        .collect();
    if !moves.contains(&MoveRequest::Pass) {
        moves.push(MoveRequest::Pass);
    }
    Ok(moves)
}

/// g(m, s) = sum_i w_i * f(m, e_i). Boards where the evaluator fails are
/// skipped; if every board fails the move cannot be scored.
pub fn score_move(
    mv: MoveRequest,
    boards: &[&Board],
    weights: &[f64],
    evaluator: &dyn Evaluator,
) -> Result<f64, AgentError> {
    let mut total = 0.0;
    let mut scored = 0usize;
    for (board, &w) in boards.iter().zip(weights) {
        match evaluator.evaluate_move(board, mv) {
            Ok(f) => {
                total += w * f;
                scored += 1;
            }
            Err(_) => {}
        }
    }
    if scored == 0 {
        return Err(AgentError::NoCandidates);
    }
    Ok(total)
}

/// Arg-max of `score_move` over the candidates; evaluation is restricted to
/// the top-budget boards with renormalized weights. Ties keep the earlier
/// candidate.
pub fn choose_move(
    set: &InformationSet,
    weights: &[f64],
    evaluator: &dyn Evaluator,
    config: &AgentConfig,
) -> Result<MoveRequest, AgentError> {
    let candidates = candidate_moves(
        set,
        weights,
        evaluator,
        config.sense_board_budget,
        config.candidate_cap,
    )?;
    let picked = budget_indices(weights, config.sense_board_budget);
    let boards: Vec<&Board> = picked.iter().map(|&i| &set.boards()[i]).collect();
    let mass: f64 = picked.iter().map(|&i| weights[i]).sum();
    let renorm: Vec<f64> = picked.iter().map(|&i| weights[i] / mass).collect();
    let mut best: Option<(f64, MoveRequest)> = None;
    for mv in candidates {
        let score = score_move(mv, &boards, &renorm, evaluator)?;
        if best.as_ref().is_none_or(|&(b, _)| score > b) {
            best = Some((score, mv));
        }
    }
    best.map(|(_, mv)| mv).ok_or(AgentError::NoCandidates)
}

/// Where the agent is inside its turn; enforces the sense-then-move order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TurnPhase {
    AwaitingTurn,
    AwaitingSenseResult,
    AwaitingMoveOutcome,
}

/// A complete player: tracks the information set, weights it, senses, and
/// moves. Driven by three calls per turn: `begin_turn` (returns the sense
/// square), `observe_sense` (returns the move request), `observe_move`.
pub struct Agent<'a> {
    pub color: Color,
    pub config: AgentConfig,
    weighter: Box<dyn Weighter + 'a>,
    evaluator: Box<dyn Evaluator + 'a>,
    pub set: InformationSet,
    pub history: ObservationHistory,
    pub roster: Roster,
    phase: TurnPhase,
    first_turn: bool,
}

impl<'a> Agent<'a> {
    pub fn new(
        color: Color,
        weighter: Box<dyn Weighter + 'a>,
        evaluator: Box<dyn Evaluator + 'a>,
        config: AgentConfig,
    ) -> Agent<'a> {
        Agent {
            color,
            config,
            weighter,
            evaluator,
            set: InformationSet::initial(),
            history: ObservationHistory::default(),
            roster: Roster::default(),
            phase: TurnPhase::AwaitingTurn,
            first_turn: true,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Agent<'a> {
        self.set = InformationSet::initial_with_cap(cap);
        self
    }

    pub fn with_opponent_name(mut self, name: &str, roster: Roster) -> Agent<'a> {
        self.history.opponent_name = Some(name.to_string());
        self.roster = roster;
        self
    }

    /// Last-resort restart when every hypothesis has been refuted: keep the
    /// (certain) own pieces of the first board and hypothesize a lone enemy
    /// king on each empty square, opponent to move. Wrong about the
    /// opponent's material, but it keeps the game playable.
    fn reconstruct_set(&self) -> InformationSet {
        let mut base = self.set.boards()[0].clone();
        for cell in base.placement.iter_mut() {
            if cell.map_or(false, |(c, _)| c != self.color) {
                *cell = None;
            }
        }
        base.side_to_move = self.color.opponent();
        base.en_passant = None;
        // The game continuing proves no draw triggered; the real progress
        // count is unknown, so restart it.
        base.progress = 0;
        match self.color {
            Color::White => {
                base.castling.black_kingside = false;
                base.castling.black_queenside = false;
            }
            Color::Black => {
                base.castling.white_kingside = false;
                base.castling.white_queenside = false;
            }
        }
        let mut boards = Vec::new();
        for sq in 0..64 {
            if base.placement[sq].is_none() {
                let mut b = base.clone();
                b.placement[sq] = Some((self.color.opponent(), Piece::King));
                boards.push(b);
            }
        }
        InformationSet::from_boards(boards, self.set.cap())
    }

    fn weights(&self) -> Result<Vec<f64>, AgentError> {
        Ok(self
            .weighter
            .weights(&self.history, self.set.boards(), &self.roster)?)
    }

    /// Expand over the opponent's hidden move (skipped on White's first
    /// turn, when the opponent has not yet acted) and pick a sense square.
    pub fn begin_turn(
        &mut self,
        opponent_capture: Option<Square>,
    ) -> Result<Square, AgentError> {
        if self.phase != TurnPhase::AwaitingTurn {
            return Err(AgentError::Protocol("begin_turn out of order"));
        }
        if !(self.first_turn && self.color == Color::White) {
            // A new turn proves the game is still running, so hypotheses
            // that already ended (we "captured the king") are wrong.
            let live: Vec<Board> = self
                .set
                .boards()
                .iter()
                .filter(|b| outcome(b) == Outcome::Ongoing)
                .cloned()
                .collect();
            if live.is_empty() {
                self.set = self.reconstruct_set();
            } else if live.len() < self.set.len() {
                self.set = InformationSet::from_boards(live, self.set.cap());
            }
            match self.set.expand_opponent(opponent_capture) {
                Ok(next) => self.set = next,
                // Clipping dropped every board consistent with the observed
                // capture square; expand without that constraint so the set
                // at least keeps the right side to move.
                Err(InfosetError::InconsistentObservation) => {
                    let boards: Vec<Board> = self
                        .set
                        .boards()
                        .iter()
                        .flat_map(|b| {
                            successor_outcomes(b).into_iter().map(|(next, _)| next)
                        })
                        .collect();
                    if boards.is_empty() {
                        return Err(AgentError::EmptySet);
                    }
                    self.set = InformationSet::from_boards(boards, self.set.cap());
                }
            }
        }
        self.first_turn = false;
        if self.set.is_empty() {
            return Err(AgentError::EmptySet);
        }
        let own_pieces = OwnPieces::from_board(&self.set.boards()[0], self.color);
        self.history
            .turns
            .push(TurnObservation::new(self.color, opponent_capture, own_pieces));
        let weights = self.weights()?;
        let square = choose_sense(&self.set, &weights, self.config.sense_board_budget)?;
        self.phase = TurnPhase::AwaitingSenseResult;
        Ok(square)
    }

    /// Filter on the sense result, re-weight with the shifted anchor, and
    /// pick the move to request.
    pub fn observe_sense(&mut self, result: SenseResult) -> Result<MoveRequest, AgentError> {
        if self.phase != TurnPhase::AwaitingSenseResult {
            return Err(AgentError::Protocol("observe_sense out of order"));
        }
        match self.set.filter_sense(&result) {
            Ok(next) => self.set = next,
            // The true board was clipped away earlier, so the window
            // contradicts every hypothesis; keep the stale set and play on.
            Err(InfosetError::InconsistentObservation) => {}
        }
        let turn = self.history.turns.last_mut().expect("turn in progress");
        turn.sense = Some(SenseRecord {
            center: result.center,
            result,
        });
        let weights = self.weights()?;
        let mv = choose_move(&self.set, &weights, &*self.evaluator, &self.config)?;
        self.phase = TurnPhase::AwaitingMoveOutcome;
        Ok(mv)
    }

    /// Advance the set by the adjudicated outcome of the agent's own move.
    pub fn observe_move(&mut self, outcome: MoveOutcome) -> Result<(), AgentError> {
        if self.phase != TurnPhase::AwaitingMoveOutcome {
            return Err(AgentError::Protocol("observe_move out of order"));
        }
        match self.set.filter_own_move(&outcome) {
            Ok(next) => self.set = next,
            // No hypothesis adjudicates the request to the observed outcome.
            // Force the taken move through instead: prefer boards where it
            // executes verbatim, otherwise accept the pass conversion so the
            // side to move still flips.
            Err(InfosetError::InconsistentObservation) => {
                let mut exact = Vec::new();
                let mut loose = Vec::new();
                for b in self.set.boards() {
                    if let Ok((next, oc)) = apply_request(b, outcome.taken) {
                        if oc.taken == outcome.taken {
                            exact.push(next);
                        } else {
                            loose.push(next);
                        }
                    }
                }
                let boards = if exact.is_empty() { loose } else { exact };
                if boards.is_empty() {
                    self.set = self.reconstruct_set();
                } else {
                    self.set = InformationSet::from_boards(boards, self.set.cap());
                }
            }
        }
        self.history.turns.last_mut().expect("turn in progress").own_move = Some(outcome);
        self.phase = TurnPhase::AwaitingTurn;
        Ok(())
    }
}

/// UCI client for an external engine process. All queries serialize through
/// a mutex; determinism then rests on the engine's own fixed-depth behavior.
pub struct UciEngineEvaluator {
    proc: Mutex<EngineProcess>,
    pub depth: u32,
}

struct EngineProcess {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl EngineProcess {
    fn send(&mut self, line: &str) -> Result<(), AgentError> {
        writeln!(self.stdin, "{line}").map_err(|e| AgentError::Engine(e.to_string()))?;
        self.stdin
            .flush()
            .map_err(|e| AgentError::Engine(e.to_string()))
    }

    fn read_until(&mut self, token: &str) -> Result<Vec<String>, AgentError> {
        let mut lines = Vec::new();
        loop {
            let mut line = String::new();
            let n = self
                .stdout
                .read_line(&mut line)
                .map_err(|e| AgentError::Engine(e.to_string()))?;
            if n == 0 {
                return Err(AgentError::Engine("engine closed its pipe".into()));
            }
            let line = line.trim().to_string();
            let done = line.starts_with(token);
            lines.push(line);
            if done {
                return Ok(lines);
            }
        }
    }
}

impl UciEngineEvaluator {
    /// Launches the engine at `path`, or `$RBC_ENGINE_PATH` when `path` is
    /// empty.
    pub fn launch(path: &str, depth: u32) -> Result<UciEngineEvaluator, AgentError> {
        let resolved = if path.is_empty() {
            std::env::var("RBC_ENGINE_PATH")
                .map_err(|_| AgentError::Engine("no engine path; set RBC_ENGINE_PATH".into()))?
        } else {
            path.to_string()
        };
        let mut child = Command::new(&resolved)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| AgentError::Engine(format!("spawn {resolved}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut proc = EngineProcess {
            child,
            stdin,
            stdout,
        };
        proc.send("uci")?;
        proc.read_until("uciok")?;
        proc.send("isready")?;
        proc.read_until("readyok")?;
        proc.send("ucinewgame")?;
        Ok(UciEngineEvaluator {
            proc: Mutex::new(proc),
            depth,
        })
    }

    /// Runs a search and returns (bestmove, score-in-[-1,1] for the side to
    /// move).
    fn query(&self, board: &Board) -> Result<(MoveRequest, f64), AgentError> {
        let mut proc = self.proc.lock().expect("engine mutex");
        proc.send(&format!("position fen {}", board.to_fen()))?;
        proc.send(&format!("go depth {}", self.depth))?;
        let lines = proc.read_until("bestmove")?;
        let mut score = 0.0;
        for line in &lines {
            if let Some(idx) = line.find("score cp ") {
                if let Ok(cp) = line[idx + 9..]
                    .split_whitespace()
                    .next()
                    .unwrap_or("")
                    .parse::<f64>()
                {
                    score = normalize_centipawns(cp);
                }
            } else if let Some(idx) = line.find("score mate ") {
                if let Ok(n) = line[idx + 11..]
                    .split_whitespace()
                    .next()
                    .unwrap_or("")
                    .parse::<i64>()
                {
                    score = if n >= 0 { 1.0 } else { -1.0 };
                }
            }
        }
        let best = lines.last().expect("bestmove line");
        let token = best
            .split_whitespace()
            .nth(1)
            .ok_or_else(|| AgentError::Engine(format!("bad bestmove line: {best}")))?;
        let mv = if token == "(none)" {
            MoveRequest::Pass
        } else {
            MoveRequest::parse(token)?
        };
        Ok((mv, score))
    }
}

impl Drop for UciEngineEvaluator {
    fn drop(&mut self) {
        if let Ok(mut proc) = self.proc.lock() {
            let _ = proc.send("quit");
            let _ = proc.child.wait();
        }
    }
}

impl Evaluator for UciEngineEvaluator {
    fn best_move(&self, board: &Board) -> Result<MoveRequest, AgentError> {
        if outcome(board) != Outcome::Ongoing {
            return Ok(MoveRequest::Pass);
        }
        Ok(self.query(board)?.0)
    }

    fn evaluate_board(&self, board: &Board, perspective: Color) -> Result<f64, AgentError> {
        // Engines reject king-less positions; settle those by rule.
        match outcome(board) {
            Outcome::Win(c) => return Ok(if c == perspective { 1.0 } else { -1.0 }),
            Outcome::Draw => return Ok(0.0),
            Outcome::Ongoing => {}
        }
        let (_, score) = self.query(board)?;
        Ok(if board.side_to_move == perspective {
            score
        } else {
            -score
        })
    }
}
