//! Bit-plane encodings of boards and observation histories.
//!
//! Channel budgets: a board is 12 planes (piece type x color), one turn of
//! observations is 90 planes, a truncated history is 20 turns plus 50
//! opponent one-hot planes = 1850, and the board+history pair used by the
//! CNN baseline is 1862.

use crate::infoset::{ObservationHistory, TurnObservation};
use crate::rules::{Board, Color, MoveRequest, Piece, Square};
use thiserror::Error;

pub const BOARD_CHANNELS: usize = 12;
pub const MOVE_CHANNELS: usize = 73;
pub const TURN_CHANNELS: usize = 90;
pub const HISTORY_TURNS: usize = 20;
pub const ROSTER_SIZE: usize = 50;
pub const HISTORY_CHANNELS: usize = HISTORY_TURNS * TURN_CHANNELS + ROSTER_SIZE;
pub const PAIR_CHANNELS: usize = HISTORY_CHANNELS + BOARD_CHANNELS;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodingError {
    #[error("move {0} has no 73-plane encoding")]
    UnencodableMove(String),
}

/// C x 8 x 8 stack of binary planes, stored as f32 for direct network use.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneStack {
    pub channels: usize,
    pub data: Vec<f32>,
}

impl PlaneStack {
    pub fn zeros(channels: usize) -> PlaneStack {
        PlaneStack {
            channels,
            data: vec![0.0; channels * 64],
        }
    }

    pub fn set(&mut self, channel: usize, square: Square) {
        self.data[channel * 64 + square.index()] = 1.0;
    }

    pub fn get(&self, channel: usize, square: Square) -> f32 {
        self.data[channel * 64 + square.index()]
    }

    pub fn fill_channel(&mut self, channel: usize) {
        self.data[channel * 64..(channel + 1) * 64].fill(1.0);
    }

    pub fn channel(&self, channel: usize) -> &[f32] {
        &self.data[channel * 64..(channel + 1) * 64]
    }

    pub fn popcount(&self, channel: usize) -> usize {
        self.channel(channel).iter().filter(|&&v| v != 0.0).count()
    }

    pub fn splice(&mut self, offset_channel: usize, other: &PlaneStack) {
        let start = offset_channel * 64;
        self.data[start..start + other.data.len()].copy_from_slice(&other.data);
    }
}

/// Ordered roster of up to 50 opponent names; index = one-hot plane index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Roster {
    names: Vec<String>,
}

impl Roster {
    pub fn new(names: Vec<String>) -> Roster {
        assert!(names.len() <= ROSTER_SIZE, "roster holds at most 50 names");
        Roster { names }
    }

    pub fn from_text(text: &str) -> Roster {
        Roster::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .take(ROSTER_SIZE)
                .map(String::from)
                .collect(),
        )
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

fn piece_index(piece: Piece) -> usize {
    match piece {
        Piece::Pawn => 0,
        Piece::Knight => 1,
        Piece::Bishop => 2,
        Piece::Rook => 3,
        Piece::Queen => 4,
        Piece::King => 5,
    }
}

/// Plane order: white P,N,B,R,Q,K then black P,N,B,R,Q,K. Castling rights,
/// en passant and counters are deliberately dropped.
pub fn encode_board(board: &Board) -> PlaneStack {
    let mut stack = PlaneStack::zeros(BOARD_CHANNELS);
    for sq in Square::all() {
        if let Some((color, piece)) = board.piece_at(sq) {
            let base = if color == Color::White { 0 } else { 6 };
            stack.set(base + piece_index(piece), sq);
        }
    }
    stack
}

/// Inverse of [`encode_board`] up to the dropped fields: the placement is
/// recovered exactly, everything else gets defaults.
pub fn decode_board(stack: &PlaneStack) -> Board {
    assert_eq!(stack.channels, BOARD_CHANNELS);
    let mut board = Board::empty();
    for (ch, &(color, piece)) in [
        (Color::White, Piece::Pawn),
        (Color::White, Piece::Knight),
        (Color::White, Piece::Bishop),
        (Color::White, Piece::Rook),
        (Color::White, Piece::Queen),
        (Color::White, Piece::King),
        (Color::Black, Piece::Pawn),
        (Color::Black, Piece::Knight),
        (Color::Black, Piece::Bishop),
        (Color::Black, Piece::Rook),
        (Color::Black, Piece::Queen),
        (Color::Black, Piece::King),
    ]
    .iter()
    .enumerate()
    {
        for sq in Square::all() {
            if stack.get(ch, sq) != 0.0 {
                board.placement[sq.index()] = Some((color, piece));
            }
        }
    }
    board
}

const QUEEN_DIRS: [(i32, i32); 8] = [
    (0, 1),   // N
    (1, 1),   // NE
    (1, 0),   // E
    (1, -1),  // SE
    (0, -1),  // S
    (-1, -1), // SW
    (-1, 0),  // W
    (-1, 1),  // NW
];
const KNIGHT_DIRS: [(i32, i32); 8] = [
    (1, 2),
    (2, 1),
    (2, -1),
    (1, -2),
    (-1, -2),
    (-2, -1),
    (-2, 1),
    (-1, 2),
];

/// AlphaZero-style 73-plane move layout: planes 0-55 queen-style moves
/// (8 directions x 7 distances), 56-63 knight moves, 64-72 underpromotions
/// (3 pieces x 3 file directions). The bit sits at the from-square. A pass
/// has no plane (all-zero encoding).
pub fn encode_move_73(mv: MoveRequest) -> Result<Option<(usize, Square)>, EncodingError> {
    let MoveRequest::Move {
        from,
        to,
        promotion,
    } = mv
    else {
        return Ok(None);
    };
    let dfile = to.file() - from.file();
    let drank = to.rank() - from.rank();
    if let Some(promo) = promotion {
        if !matches!(promo, Piece::Queen) {
            let piece_idx = match promo {
                Piece::Knight => 0,
                Piece::Bishop => 1,
                Piece::Rook => 2,
                _ => return Err(EncodingError::UnencodableMove(mv.to_string())),
            };
            let dir_idx = match dfile {
                -1 => 0,
                0 => 1,
                1 => 2,
                _ => return Err(EncodingError::UnencodableMove(mv.to_string())),
            };
            if drank.abs() != 1 {
                return Err(EncodingError::UnencodableMove(mv.to_string()));
            }
            return Ok(Some((64 + piece_idx * 3 + dir_idx, from)));
        }
    }
    if let Some(k) = KNIGHT_DIRS.iter().position(|&d| d == (dfile, drank)) {
        return Ok(Some((56 + k, from)));
    }
    let dist = dfile.abs().max(drank.abs());
    if dist == 0 || dist > 7 {
        return Err(EncodingError::UnencodableMove(mv.to_string()));
    }
    let unit = (dfile.signum(), drank.signum());
    if dfile != unit.0 * dist || drank != unit.1 * dist {
        return Err(EncodingError::UnencodableMove(mv.to_string()));
    }
    let dir = QUEEN_DIRS
        .iter()
        .position(|&d| d == unit)
        .ok_or_else(|| EncodingError::UnencodableMove(mv.to_string()))?;
    Ok(Some((dir * 7 + (dist - 1) as usize, from)))
}

/// Table I row order, 90 channels:
/// 0 opponent capture square, 1-73 own last requested move, 74 own capture
/// square, 75 illegal flag (full plane), 76-81 own pieces by type, 82 sense
/// window, 83-88 sense result by type, 89 color (all ones for white).
pub fn encode_turn(obs: &TurnObservation) -> PlaneStack {
    let mut stack = PlaneStack::zeros(TURN_CHANNELS);
    if let Some(sq) = obs.opponent_capture_square {
        stack.set(0, sq);
    }
    if let Some(mv) = &obs.own_move {
        if let Ok(Some((plane, from))) = encode_move_73(mv.requested) {
            stack.set(1 + plane, from);
        }
        if let Some(sq) = mv.capture_square {
            stack.set(74, sq);
        }
        if mv.was_illegal {
            stack.fill_channel(75);
        }
    }
    for (i, piece) in obs.own_pieces.0.iter().enumerate() {
        if let Some(p) = piece {
            stack.set(76 + piece_index(*p), Square::new(i as u8).unwrap());
        }
    }
    if let Some(sense) = &obs.sense {
        for (sq, contents) in &sense.result.cells {
            stack.set(82, *sq);
            if let Some((_, piece)) = contents {
                stack.set(83 + piece_index(*piece), *sq);
            }
        }
    }
    if obs.color == Color::White {
        stack.fill_channel(89);
    }
    stack
}

/// The 20 most recent turns oldest-first, zero-padded at the old end, then
/// 50 opponent one-hot planes (all zero for an unknown opponent).
pub fn encode_history(hist: &ObservationHistory, roster: &Roster) -> PlaneStack {
    let mut stack = PlaneStack::zeros(HISTORY_CHANNELS);
    let turns = &hist.turns;
    let recent = &turns[turns.len().saturating_sub(HISTORY_TURNS)..];
    let pad = HISTORY_TURNS - recent.len();
    for (i, turn) in recent.iter().enumerate() {
        stack.splice((pad + i) * TURN_CHANNELS, &encode_turn(turn));
    }
    if let Some(name) = &hist.opponent_name {
        if let Some(idx) = roster.index_of(name) {
            stack.fill_channel(HISTORY_TURNS * TURN_CHANNELS + idx);
        }
    }
    stack
}

/// History + board concatenation for the CNN baseline; board planes occupy
/// channels 1850..1861.
pub fn encode_pair(hist: &ObservationHistory, board: &Board, roster: &Roster) -> PlaneStack {
    let mut stack = PlaneStack::zeros(PAIR_CHANNELS);
    stack.splice(0, &encode_history(hist, roster));
    stack.splice(HISTORY_CHANNELS, &encode_board(board));
    stack
}

/// Human-readable channel names for the encode-dump sidecar.
pub fn channel_names(channels: usize) -> Vec<String> {
    let board_names = || {
        let mut v = Vec::new();
        for color in ["white", "black"] {
            for p in ["pawn", "knight", "bishop", "rook", "queen", "king"] {
                v.push(format!("board/{color}_{p}"));
            }
        }
        v
    };
    let turn_names = |prefix: &str| {
        let mut v = Vec::new();
        v.push(format!("{prefix}/opponent_capture"));
        for i in 0..MOVE_CHANNELS {
            v.push(format!("{prefix}/request_plane_{i}"));
        }
        v.push(format!("{prefix}/own_capture"));
        v.push(format!("{prefix}/illegal"));
        for p in ["pawn", "knight", "bishop", "rook", "queen", "king"] {
            v.push(format!("{prefix}/own_{p}"));
        }
        v.push(format!("{prefix}/sense_window"));
        for p in ["pawn", "knight", "bishop", "rook", "queen", "king"] {
            v.push(format!("{prefix}/sensed_{p}"));
        }
        v.push(format!("{prefix}/color"));
        v
    };
    let history_names = || {
        let mut v = Vec::new();
        for t in 0..HISTORY_TURNS {
            v.extend(turn_names(&format!("turn_{t}")));
        }
        for i in 0..ROSTER_SIZE {
            v.push(format!("opponent/{i}"));
        }
        v
    };
    match channels {
        BOARD_CHANNELS => board_names(),
        TURN_CHANNELS => turn_names("turn"),
        HISTORY_CHANNELS => history_names(),
        PAIR_CHANNELS => {
            let mut v = history_names();
            v.extend(board_names());
            v
        }
        n => (0..n).map(|i| format!("channel_{i}")).collect(),
    }
}
