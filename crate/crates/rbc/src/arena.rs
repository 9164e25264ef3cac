//! Ranking metrics, scripted opponents, and a local self-play arena.

use crate::agent::{Agent, AgentConfig, AgentError, Evaluator, MaterialEvaluator};
use crate::data::{GameRecord, PlyRecord, TripletRecord, SCHEMA_VERSION};
use crate::encoding::Roster;
use crate::infoset::{OwnPieces, SenseRecord, TurnObservation};
use crate::rules::{
    self, apply_request, outcome, playable_moves, Board, CastlingRights, Color, MoveOutcome,
    MoveRequest, Outcome, Piece, SenseResult, Square,
};
use crate::weighting::{rank_by_weight, Weighter, WeightingError};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error("true index {0} outside ranking of length {1}")]
    BadTrueIndex(usize, usize),
    #[error("k must be in 1..=100, got {0}")]
    BadK(u32),
    #[error("weighting failed: {0}")]
    Weighting(#[from] WeightingError),
    #[error("agent failed: {0}")]
    Agent(#[from] AgentError),
    #[error("need at least two bots, got {0}")]
    TooFewBots(usize),
}

// ---------------------------------------------------------------------------
// Ranking metrics
// ---------------------------------------------------------------------------

/// 1-based rank of the true board in a ranking permutation.
pub fn pick_distance(ranking: &[usize], true_index: usize) -> Result<usize, ArenaError> {
    ranking
        .iter()
        .position(|&i| i == true_index)
        .map(|p| p + 1)
        .ok_or(ArenaError::BadTrueIndex(true_index, ranking.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingSample {
    pub set_size: usize,
    pub pick_distance: usize,
}

/// Fraction of samples whose true board ranks within the top k percent of
/// its information set (ceil(k/100 * |I|)).
pub fn top_k_percent(samples: &[RankingSample], k: u32) -> Result<f64, ArenaError> {
    if k == 0 || k > 100 {
        return Err(ArenaError::BadK(k));
    }
    if samples.is_empty() {
        return Ok(0.0);
    }
    let hits = samples
        .iter()
        .filter(|s| s.pick_distance <= (k as usize * s.set_size).div_ceil(100))
        .count();
    Ok(hits as f64 / samples.len() as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankingEval {
    pub provider: String,
    pub samples: Vec<RankingSample>,
    pub top1: f64,
    /// top-k-percent accuracy for k = 1..=100.
    pub curve: Vec<f64>,
    pub median_pick_distance: f64,
    pub p25_pick_distance: f64,
    pub p75_pick_distance: f64,
    pub per_opponent_top1: BTreeMap<String, f64>,
}

fn quantile(sorted: &[usize], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] as f64 * (1.0 - frac) + sorted[hi] as f64 * frac
}

/// Weights the boards of one recorded decision. The blanket impl covers the
/// real providers; [`CheatingOracle`] exists so tests have a known optimum.
pub trait RecordWeighter: Sync {
    fn record_weights(
        &self,
        record: &TripletRecord,
        boards: &[Board],
        roster: &Roster,
    ) -> Result<Vec<f64>, WeightingError>;

    fn provider_name(&self) -> String;
}

impl<W: Weighter + ?Sized> RecordWeighter for W {
    fn record_weights(
        &self,
        record: &TripletRecord,
        boards: &[Board],
        roster: &Roster,
    ) -> Result<Vec<f64>, WeightingError> {
        self.weights(&record.anchor, boards, roster)
    }

    fn provider_name(&self) -> String {
        self.name().to_string()
    }
}

/// Test-only upper bound: reads the true board out of the record.
pub struct CheatingOracle;

impl RecordWeighter for CheatingOracle {
    fn record_weights(
        &self,
        record: &TripletRecord,
        boards: &[Board],
        _roster: &Roster,
    ) -> Result<Vec<f64>, WeightingError> {
        if boards.is_empty() {
            return Err(WeightingError::Empty);
        }
        Ok(boards
            .iter()
            .map(|b| if *b == record.positive { 1.0 } else { 1e-9 })
            .collect())
    }

    fn provider_name(&self) -> String {
        "oracle".to_string()
    }
}

/// Ranks the true board within each recorded decision's information set and
/// aggregates ranking metrics. `records` pairs each decision with the
/// opponent name it was played against.
pub fn evaluate_records(
    provider: &(impl RecordWeighter + ?Sized),
    records: &[(String, TripletRecord)],
    roster: &Roster,
) -> Result<RankingEval, ArenaError> {
    let mut samples = Vec::with_capacity(records.len());
    let mut per_opp: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (opponent, record) in records {
        // Rebuild the full set in canonical order.
        let mut boards = record.negative_pool.clone();
        boards.push(record.positive.clone());
        boards.sort();
        let true_index = boards
            .binary_search(&record.positive)
            .expect("positive present");
        let weights = provider.record_weights(record, &boards, roster)?;
        let ranking = rank_by_weight(&weights);
        let dist = pick_distance(&ranking, true_index)?;
        samples.push(RankingSample {
            set_size: boards.len(),
            pick_distance: dist,
        });
        let entry = per_opp.entry(opponent.clone()).or_default();
        entry.0 += usize::from(dist == 1);
        entry.1 += 1;
    }
    let mut sorted: Vec<usize> = samples.iter().map(|s| s.pick_distance).collect();
    sorted.sort_unstable();
    let curve: Vec<f64> = (1..=100)
        .map(|k| top_k_percent(&samples, k).expect("valid k"))
        .collect();
    Ok(RankingEval {
        provider: provider.provider_name(),
        top1: samples
            .iter()
            .filter(|s| s.pick_distance == 1)
            .count() as f64
            / samples.len().max(1) as f64,
        curve,
        median_pick_distance: quantile(&sorted, 0.5),
        p25_pick_distance: quantile(&sorted, 0.25),
        p75_pick_distance: quantile(&sorted, 0.75),
        per_opponent_top1: per_opp
            .into_iter()
            .map(|(k, (hits, n))| (k, hits as f64 / n.max(1) as f64))
            .collect(),
        samples,
    })
}

// ---------------------------------------------------------------------------
// Bots
// ---------------------------------------------------------------------------

/// The sense-then-move turn protocol every arena player implements.
pub trait Bot {
    fn name(&self) -> &str;
    /// Called once per turn with the opponent's capture square (if any);
    /// returns the square to sense.
    fn choose_sense(&mut self, opponent_capture: Option<Square>) -> Result<Square, AgentError>;
    /// Receives the sense result; returns the move request.
    fn choose_move(&mut self, sense: SenseResult) -> Result<MoveRequest, AgentError>;
    /// Receives the adjudicated outcome of the bot's own move.
    fn observe_outcome(&mut self, outcome: MoveOutcome) -> Result<(), AgentError>;
    /// (set size, truncated) for the record, when the bot tracks a set.
    fn set_info(&self) -> Option<(usize, bool)> {
        None
    }
}

/// Tracks only the bot's own pieces - enough to generate plausible moves
/// without maintaining an information set.
struct OwnState {
    color: Color,
    placement: [Option<Piece>; 64],
}

impl OwnState {
    fn new(color: Color) -> OwnState {
        let initial = Board::initial();
        let mut placement = [None; 64];
        for (i, cell) in initial.placement.iter().enumerate() {
            if let Some((c, p)) = cell {
                if *c == color {
                    placement[i] = Some(*p);
                }
            }
        }
        OwnState { color, placement }
    }

    fn opponent_captured(&mut self, sq: Option<Square>) {
        if let Some(sq) = sq {
            self.placement[sq.index()] = None;
        }
    }

    /// A board holding only our pieces; requests generated from it are
    /// plausible and get adjudicated against the real board by the arena.
    fn proxy_board(&self) -> Board {
        let mut board = Board::empty();
        for (i, piece) in self.placement.iter().enumerate() {
            if let Some(p) = piece {
                board.placement[i] = Some((self.color, *p));
            }
        }
        board.side_to_move = self.color;
        board.castling = CastlingRights {
            white_kingside: false,
            white_queenside: false,
            black_kingside: false,
            black_queenside: false,
        };
        board
    }

    fn moves(&self) -> Vec<MoveRequest> {
        playable_moves(&self.proxy_board())
    }

    fn apply(&mut self, outcome: &MoveOutcome) {
        if let MoveRequest::Move {
            from,
            to,
            promotion,
        } = outcome.taken
        {
            let piece = self.placement[from.index()].take();
            self.placement[to.index()] = promotion.or(piece);
            // Castling moves the rook too.
            if piece == Some(Piece::King) && (from.file() - to.file()).abs() == 2 {
                let (rf, rt) = if to.file() > from.file() {
                    (7, to.file() - 1)
                } else {
                    (0, to.file() + 1)
                };
                let rank = from.rank();
                let rook_from = Square::from_file_rank(rf, rank).unwrap();
                let rook_to = Square::from_file_rank(rt, rank).unwrap();
                if self.placement[rook_from.index()] == Some(Piece::Rook) {
                    self.placement[rook_from.index()] = None;
                    self.placement[rook_to.index()] = Some(Piece::Rook);
                }
            }
        }
    }
}

/// Senses and moves uniformly at random over its own plausible options.
pub struct RandomBot {
    name: String,
    state: OwnState,
    rng: ChaCha12Rng,
}

impl RandomBot {
    pub fn new(color: Color, seed: u64) -> RandomBot {
        RandomBot {
            name: "random".into(),
            state: OwnState::new(color),
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }
}

impl Bot for RandomBot {
    fn name(&self) -> &str {
        &self.name
    }

    fn choose_sense(&mut self, opponent_capture: Option<Square>) -> Result<Square, AgentError> {
        self.state.opponent_captured(opponent_capture);
        let squares: Vec<Square> = Square::interior().collect();
        Ok(*squares.choose(&mut self.rng).expect("interior nonempty"))
    }

    fn choose_move(&mut self, _sense: SenseResult) -> Result<MoveRequest, AgentError> {
        let mut moves = self.state.moves();
        moves.push(MoveRequest::Pass);
        Ok(*moves.choose(&mut self.rng).expect("pass included"))
    }

    fn observe_outcome(&mut self, outcome: MoveOutcome) -> Result<(), AgentError> {
        self.state.apply(&outcome);
        Ok(())
    }
}

/// Follows a fixed quick-attack line against f7/f2, sensing around the
/// enemy king; falls back to random play once the script is refuted.
pub struct AttackerBot {
    name: String,
    state: OwnState,
    script: Vec<MoveRequest>,
    cursor: usize,
    refuted: bool,
    rng: ChaCha12Rng,
}

impl AttackerBot {
    pub fn new(color: Color, seed: u64) -> AttackerBot {
        let line = match color {
            // Scholar's-mate pattern: the queen goes for f7 and then the king.
            Color::White => ["e2e4", "f1c4", "d1h5", "h5f7", "f7e8"],
            Color::Black => ["e7e5", "f8c5", "d8h4", "h4f2", "f2e1"],
        };
        AttackerBot {
            name: "attacker".into(),
            state: OwnState::new(color),
            script: line.iter().map(|s| MoveRequest::parse(s).unwrap()).collect(),
            cursor: 0,
            refuted: false,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }
}

impl Bot for AttackerBot {
    fn name(&self) -> &str {
        &self.name
    }

    fn choose_sense(&mut self, opponent_capture: Option<Square>) -> Result<Square, AgentError> {
        self.state.opponent_captured(opponent_capture);
        // Watch the mating square and the enemy king area.
        let focus = match self.state.color {
            Color::White => ["f7", "e7", "f6"],
            Color::Black => ["f2", "e2", "f3"],
        };
        let pick = focus[self.rng.random_range(0..focus.len())];
        Ok(Square::parse(pick).expect("valid focus square"))
    }

    fn choose_move(&mut self, _sense: SenseResult) -> Result<MoveRequest, AgentError> {
        if !self.refuted && self.cursor < self.script.len() {
            return Ok(self.script[self.cursor]);
        }
        let mut moves = self.state.moves();
        moves.push(MoveRequest::Pass);
        Ok(*moves.choose(&mut self.rng).expect("pass included"))
    }

    fn observe_outcome(&mut self, outcome: MoveOutcome) -> Result<(), AgentError> {
        if !self.refuted && self.cursor < self.script.len() {
            if outcome.was_illegal {
                self.refuted = true;
            } else {
                self.cursor += 1;
            }
        }
        self.state.apply(&outcome);
        Ok(())
    }
}

/// Wraps the full [`Agent`] as an arena bot; the weighting provider decides
/// the personality (Siamese, uniform, ...).
pub struct AgentBot<'a> {
    name: String,
    agent: Agent<'a>,
}

impl<'a> AgentBot<'a> {
    pub fn new(
        name: &str,
        color: Color,
        weighter: Box<dyn Weighter + 'a>,
        evaluator: Box<dyn Evaluator + 'a>,
        config: AgentConfig,
    ) -> AgentBot<'a> {
        AgentBot {
            name: name.to_string(),
            agent: Agent::new(color, weighter, evaluator, config),
        }
    }

    pub fn with_cap(mut self, cap: usize) -> AgentBot<'a> {
        self.agent = self.agent.with_cap(cap);
        self
    }
}

impl Bot for AgentBot<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn choose_sense(&mut self, opponent_capture: Option<Square>) -> Result<Square, AgentError> {
        self.agent.begin_turn(opponent_capture)
    }

    fn choose_move(&mut self, sense: SenseResult) -> Result<MoveRequest, AgentError> {
        self.agent.observe_sense(sense)
    }

    fn observe_outcome(&mut self, outcome: MoveOutcome) -> Result<(), AgentError> {
        self.agent.observe_move(outcome)
    }

    fn set_info(&self) -> Option<(usize, bool)> {
        Some((self.agent.set.len(), self.agent.set.truncated()))
    }
}

/// The public-baseline stand-in: uniform weighting + shallow material
/// search, with a reduced board cap to keep it fast.
pub fn trout_bot(color: Color) -> AgentBot<'static> {
    AgentBot::new(
        "trout",
        color,
        Box::new(crate::weighting::UniformWeighter),
        Box::new(MaterialEvaluator::default()),
        AgentConfig::default(),
    )
    .with_cap(400)
}

// ---------------------------------------------------------------------------
// Game loop
// ---------------------------------------------------------------------------

pub const TURN_LIMIT: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub white: String,
    pub black: String,
    pub winner: Option<Color>,
    pub termination: String,
    pub plies: usize,
}

/// Plays one full game, returning the summary and a replayable record.
/// A bot error forfeits the game for that bot.
pub fn play_game(
    white: &mut dyn Bot,
    black: &mut dyn Bot,
    seed: u64,
) -> (GameSummary, GameRecord) {
    let mut truth = Board::initial();
    let mut plies: Vec<PlyRecord> = Vec::new();
    let mut last_capture: [Option<Square>; 2] = [None, None]; // indexed by mover color
    let mut winner = None;
    let mut termination = "draw_by_limit".to_string();

    for ply in 0..TURN_LIMIT {
        match outcome(&truth) {
            Outcome::Win(c) => {
                winner = Some(c);
                termination = "king_capture".into();
                break;
            }
            Outcome::Draw => {
                termination = "draw_progress".into();
                break;
            }
            Outcome::Ongoing => {}
        }
        let mover = truth.side_to_move;
        let bot: &mut dyn Bot = match mover {
            Color::White => white,
            Color::Black => black,
        };
        let opp_capture = last_capture[mover as usize];
        let own_pieces = OwnPieces::from_board(&truth, mover);
        let sense_sq = match bot.choose_sense(opp_capture) {
            Ok(sq) => sq,
            Err(_) => {
                winner = Some(mover.opponent());
                termination = "forfeit".into();
                break;
            }
        };
        let sense_result = rules::sense(&truth, sense_sq);
        let mv = match bot.choose_move(sense_result.clone()) {
            Ok(mv) => mv,
            Err(_) => {
                winner = Some(mover.opponent());
                termination = "forfeit".into();
                break;
            }
        };
        let pre_fen = truth.to_fen();
        let (next, oc) = apply_request(&truth, mv).expect("non-terminal board");
        if bot.observe_outcome(oc.clone()).is_err() {
            winner = Some(mover.opponent());
            termination = "forfeit".into();
            break;
        }
        last_capture[mover.opponent() as usize] = oc.capture_square;
        let (set_size, truncated) = bot.set_info().unwrap_or((0, false));
        let mut observation = TurnObservation::new(mover, opp_capture, own_pieces);
        observation.sense = Some(SenseRecord {
            center: sense_sq,
            result: sense_result,
        });
        observation.own_move = Some(oc);
        plies.push(PlyRecord {
            observation,
            pre_fen,
            post_fen: next.to_fen(),
            set_size,
            truncated,
        });
        truth = next;
        if ply + 1 == TURN_LIMIT {
            termination = "draw_by_limit".into();
        }
    }
    if termination == "draw_by_limit" && plies.len() < TURN_LIMIT {
        // Loop ended through a break that already set the fields, or the
        // script ran out; recheck the final position for completeness.
        match outcome(&truth) {
            Outcome::Win(c) => {
                winner = Some(c);
                termination = "king_capture".into();
            }
            Outcome::Draw => termination = "draw_progress".into(),
            Outcome::Ongoing => {}
        }
    }
    let summary = GameSummary {
        white: white.name().to_string(),
        black: black.name().to_string(),
        winner,
        termination: termination.clone(),
        plies: plies.len(),
    };
    let record = GameRecord {
        v: SCHEMA_VERSION,
        white: white.name().to_string(),
        black: black.name().to_string(),
        winner,
        termination,
        seed,
        plies,
    };
    (summary, record)
}

// ---------------------------------------------------------------------------
// Tournament
// ---------------------------------------------------------------------------

/// Creates a fresh bot per game; implementations capture their models and
/// configuration.
pub trait BotFactory: Sync {
    fn name(&self) -> String;
    fn create(&self, color: Color, seed: u64) -> Box<dyn Bot + '_>;
}

/// Closure-backed factory.
pub struct FnFactory<F> {
    pub bot_name: String,
    pub build: F,
}

impl<F> BotFactory for FnFactory<F>
where
    F: Fn(Color, u64) -> Box<dyn Bot + 'static> + Sync,
{
    fn name(&self) -> String {
        self.bot_name.clone()
    }

    fn create(&self, color: Color, seed: u64) -> Box<dyn Bot + '_> {
        (self.build)(color, seed)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub bot_a: String,
    pub bot_b: String,
    /// From bot_a's perspective.
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
    pub games: Vec<GameSummary>,
}

impl PairResult {
    pub fn win_rate(&self) -> f64 {
        let n = self.wins + self.draws + self.losses;
        if n == 0 {
            0.0
        } else {
            self.wins as f64 / n as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TournamentReport {
    pub seed: u64,
    pub games_per_pair: usize,
    pub pairs: Vec<PairResult>,
}

impl TournamentReport {
    /// Aligned-column text table.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<24} {:>5} {:>5} {:>5} {:>7}\n",
            "pairing (A vs B)", "W", "D", "L", "A-win%"
        ));
        for pair in &self.pairs {
            out.push_str(&format!(
                "{:<24} {:>5} {:>5} {:>5} {:>6.1}%\n",
                format!("{} vs {}", pair.bot_a, pair.bot_b),
                pair.wins,
                pair.draws,
                pair.losses,
                pair.win_rate() * 100.0
            ));
        }
        out
    }
}

fn game_seed(base: u64, a: usize, b: usize, g: usize) -> u64 {
    let mut z = base
        .wrapping_add((a as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((b as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F))
        .wrapping_add((g as u64).wrapping_mul(0x1656_67B1_9E37_79F9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^ (z >> 27)
}

/// Round-robin, color-balanced, seeded. Returns the report and every game
/// record (ordered deterministically).
pub fn tournament(
    factories: &[&dyn BotFactory],
    games_per_pair: usize,
    seed: u64,
) -> Result<(TournamentReport, Vec<GameRecord>), ArenaError> {
    if factories.len() < 2 {
        return Err(ArenaError::TooFewBots(factories.len()));
    }
    let mut report = TournamentReport {
        seed,
        games_per_pair,
        pairs: Vec::new(),
    };
    let mut records = Vec::new();
    for a in 0..factories.len() {
        for b in (a + 1)..factories.len() {
            let mut pair = PairResult {
                bot_a: factories[a].name(),
                bot_b: factories[b].name(),
                ..PairResult::default()
            };
            for g in 0..games_per_pair {
                let s = game_seed(seed, a, b, g);
                // Alternate colors: even games have A as White.
                let (wf, bf) = if g % 2 == 0 {
                    (factories[a], factories[b])
                } else {
                    (factories[b], factories[a])
                };
                let mut white = wf.create(Color::White, s);
                let mut black = bf.create(Color::Black, s.wrapping_add(1));
                let (summary, record) = play_game(white.as_mut(), black.as_mut(), s);
                let a_is_white = g % 2 == 0;
                match summary.winner {
                    Some(Color::White) if a_is_white => pair.wins += 1,
                    Some(Color::Black) if !a_is_white => pair.wins += 1,
                    Some(_) => pair.losses += 1,
                    None => pair.draws += 1,
                }
                pair.games.push(summary);
                records.push(record);
            }
            report.pairs.push(pair);
        }
    }
    Ok((report, records))
}

/// A uniformly random permutation's expected pick distance is (N+1)/2; used
/// by metric sanity checks.
pub fn random_ranking_mean_pick_distance(n: usize, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut total = 0usize;
    for _ in 0..trials {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let true_index = rng.random_range(0..n);
        total += pick_distance(&perm, true_index).expect("in range");
    }
    total as f64 / trials as f64
}
