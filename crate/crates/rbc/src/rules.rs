//! Perfect-information rules kernel for Reconnaissance Blind Chess.
//!
//! RBC adjudication differs from classical chess: any move may be requested,
//! illegal requests convert to a pass, sliding moves truncate at the first
//! opposing piece, kings are captured rather than mated, and there are no
//! check-based restrictions (castling through check is fine, so is moving
//! into check).

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RulesError {
    #[error("malformed square: {0}")]
    BadSquare(String),
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error("board is terminal")]
    TerminalBoard,
    #[error("invalid FEN: {0}")]
    BadFen(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Color {
    White,
    Black,
}

impl Color {
    pub fn opponent(self) -> Color {
        match self {
            Color::White => Color::Black,
            Color::Black => Color::White,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Piece {
    Pawn,
    Knight,
    Bishop,
    Rook,
    Queen,
    King,
}

impl Piece {
    pub const ALL: [Piece; 6] = [
        Piece::Pawn,
        Piece::Knight,
        Piece::Bishop,
        Piece::Rook,
        Piece::Queen,
        Piece::King,
    ];

    fn fen_char(self, color: Color) -> char {
        let c = match self {
            Piece::Pawn => 'p',
            Piece::Knight => 'n',
            Piece::Bishop => 'b',
            Piece::Rook => 'r',
            Piece::Queen => 'q',
            Piece::King => 'k',
        };
        match color {
            Color::White => c.to_ascii_uppercase(),
            Color::Black => c,
        }
    }

    fn from_fen_char(c: char) -> Option<(Color, Piece)> {
        let color = if c.is_ascii_uppercase() {
            Color::White
        } else {
            Color::Black
        };
        let piece = match c.to_ascii_lowercase() {
            'p' => Piece::Pawn,
            'n' => Piece::Knight,
            'b' => Piece::Bishop,
            'r' => Piece::Rook,
            'q' => Piece::Queen,
            'k' => Piece::King,
            _ => return None,
        };
        Some((color, piece))
    }
}

/// 0..64, a1 = 0, h1 = 7, a8 = 56.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Square(u8);

impl Square {
    pub fn new(index: u8) -> Option<Square> {
        (index < 64).then_some(Square(index))
    }

    pub fn from_file_rank(file: i32, rank: i32) -> Option<Square> {
        if (0..8).contains(&file) && (0..8).contains(&rank) {
            Some(Square((rank * 8 + file) as u8))
        } else {
            None
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn file(self) -> i32 {
        (self.0 % 8) as i32
    }

    pub fn rank(self) -> i32 {
        (self.0 / 8) as i32
    }

    pub fn offset(self, dfile: i32, drank: i32) -> Option<Square> {
        Square::from_file_rank(self.file() + dfile, self.rank() + drank)
    }

    pub fn parse(s: &str) -> Result<Square, RulesError> {
        let bytes = s.as_bytes();
        if bytes.len() != 2 {
            return Err(RulesError::BadSquare(s.to_string()));
        }
        let file = (bytes[0] as i32) - ('a' as i32);
        let rank = (bytes[1] as i32) - ('1' as i32);
        Square::from_file_rank(file, rank).ok_or_else(|| RulesError::BadSquare(s.to_string()))
    }

    pub fn all() -> impl Iterator<Item = Square> {
        (0..64).map(Square)
    }

    /// The 36 squares on files b-g, ranks 2-7; sensing on the edge is
    /// dominated by sensing one square inward.
    pub fn interior() -> impl Iterator<Item = Square> {
        Square::all().filter(|s| (1..7).contains(&s.file()) && (1..7).contains(&s.rank()))
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}",
            (b'a' + (self.0 % 8)) as char,
            (b'1' + (self.0 / 8)) as char
        )
    }
}

impl fmt::Debug for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl TryFrom<String> for Square {
    type Error = String;
    fn try_from(s: String) -> Result<Square, String> {
        Square::parse(&s).map_err(|e| e.to_string())
    }
}

impl From<Square> for String {
    fn from(s: Square) -> String {
        s.to_string()
    }
}

/// What a player asks the arbiter to do on their move phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MoveRequest {
    Pass,
    Move {
        from: Square,
        to: Square,
        promotion: Option<Piece>,
    },
}

impl MoveRequest {
    pub fn mv(from: Square, to: Square) -> MoveRequest {
        MoveRequest::Move {
            from,
            to,
            promotion: None,
        }
    }

    pub fn is_pass(self) -> bool {
        matches!(self, MoveRequest::Pass)
    }

    /// UCI-ish notation; "0000" for a pass.
    pub fn parse(s: &str) -> Result<MoveRequest, RulesError> {
        if s == "0000" || s.eq_ignore_ascii_case("pass") {
            return Ok(MoveRequest::Pass);
        }
        if s.len() != 4 && s.len() != 5 {
            return Err(RulesError::BadRequest(s.to_string()));
        }
        let from = Square::parse(&s[0..2])?;
        let to = Square::parse(&s[2..4])?;
        let promotion = match s.as_bytes().get(4) {
            None => None,
            Some(c) => Some(
                Piece::from_fen_char((*c as char).to_ascii_lowercase())
                    .map(|(_, p)| p)
                    .filter(|p| matches!(p, Piece::Knight | Piece::Bishop | Piece::Rook | Piece::Queen))
                    .ok_or_else(|| RulesError::BadRequest(s.to_string()))?,
            ),
        };
        if from == to {
            return Err(RulesError::BadRequest(s.to_string()));
        }
        Ok(MoveRequest::Move {
            from,
            to,
            promotion,
        })
    }
}

impl fmt::Display for MoveRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MoveRequest::Pass => write!(f, "0000"),
            MoveRequest::Move {
                from,
                to,
                promotion,
            } => {
                write!(f, "{from}{to}")?;
                if let Some(p) = promotion {
                    write!(f, "{}", p.fen_char(Color::Black))?;
                }
                Ok(())
            }
        }
    }
}

/// The arbiter's verdict on a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MoveOutcome {
    pub requested: MoveRequest,
    pub taken: MoveRequest,
    pub capture_square: Option<Square>,
    pub was_illegal: bool,
}

/// Ground-truth contents of a clipped 3x3 window.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SenseResult {
    pub center: Square,
    pub cells: Vec<(Square, Option<(Color, Piece)>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Ongoing,
    Win(Color),
    Draw,
}

pub const DRAW_PROGRESS_LIMIT: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CastlingRights {
    pub white_kingside: bool,
    pub white_queenside: bool,
    pub black_kingside: bool,
    pub black_queenside: bool,
}

/// A full perfect-information RBC game state. Equality and ordering cover
/// every field, which gives the canonical key used for dedup and clipping.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Board {
    pub placement: [Option<(Color, Piece)>; 64],
    pub side_to_move: Color,
    pub castling: CastlingRights,
    pub en_passant: Option<Square>,
    /// Full turns since the last capture or pawn move; the draw threshold
    /// is reached at [`DRAW_PROGRESS_LIMIT`].
    pub progress: u32,
    pub fullmove: u32,
}

impl fmt::Debug for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Board({})", self.to_fen())
    }
}

impl Board {
    pub fn empty() -> Board {
        Board {
            placement: [None; 64],
            side_to_move: Color::White,
            castling: CastlingRights {
                white_kingside: false,
                white_queenside: false,
                black_kingside: false,
                black_queenside: false,
            },
            en_passant: None,
            progress: 0,
            fullmove: 1,
        }
    }

    pub fn initial() -> Board {
        Board::from_fen("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1")
            .expect("initial FEN")
    }

    pub fn piece_at(&self, sq: Square) -> Option<(Color, Piece)> {
        self.placement[sq.index()]
    }

    pub fn king_square(&self, color: Color) -> Option<Square> {
        Square::all().find(|&s| self.placement[s.index()] == Some((color, Piece::King)))
    }

    pub fn to_fen(&self) -> String {
        let mut out = String::new();
        for rank in (0..8).rev() {
            let mut empties = 0;
            for file in 0..8 {
                let sq = Square::from_file_rank(file, rank).unwrap();
                match self.placement[sq.index()] {
                    None => empties += 1,
                    Some((c, p)) => {
                        if empties > 0 {
                            out.push(char::from_digit(empties, 10).unwrap());
                            empties = 0;
                        }
                        out.push(p.fen_char(c));
                    }
                }
            }
            if empties > 0 {
                out.push(char::from_digit(empties, 10).unwrap());
            }
            if rank > 0 {
                out.push('/');
            }
        }
        out.push(' ');
        out.push(match self.side_to_move {
            Color::White => 'w',
            Color::Black => 'b',
        });
        out.push(' ');
        let c = &self.castling;
        if !(c.white_kingside || c.white_queenside || c.black_kingside || c.black_queenside) {
            out.push('-');
        } else {
            if c.white_kingside {
                out.push('K');
            }
            if c.white_queenside {
                out.push('Q');
            }
            if c.black_kingside {
                out.push('k');
            }
            if c.black_queenside {
                out.push('q');
            }
        }
        out.push(' ');
        match self.en_passant {
            None => out.push('-'),
            Some(sq) => out.push_str(&sq.to_string()),
        }
        out.push_str(&format!(" {} {}", self.progress, self.fullmove));
        out
    }

    pub fn from_fen(fen: &str) -> Result<Board, RulesError> {
        let err = || RulesError::BadFen(fen.to_string());
        let fields: Vec<&str> = fen.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(err());
        }
        let mut board = Board::empty();
        let ranks: Vec<&str> = fields[0].split('/').collect();
        if ranks.len() != 8 {
            return Err(err());
        }
        for (i, row) in ranks.iter().enumerate() {
            let rank = 7 - i as i32;
            let mut file = 0i32;
            for ch in row.chars() {
                if let Some(d) = ch.to_digit(10) {
                    file += d as i32;
                } else {
                    let cp = Piece::from_fen_char(ch).ok_or_else(err)?;
                    let sq = Square::from_file_rank(file, rank).ok_or_else(err)?;
                    board.placement[sq.index()] = Some(cp);
                    file += 1;
                }
            }
            if file != 8 {
                return Err(err());
            }
        }
        board.side_to_move = match fields[1] {
            "w" => Color::White,
            "b" => Color::Black,
            _ => return Err(err()),
        };
        if fields[2] != "-" {
            for ch in fields[2].chars() {
                match ch {
                    'K' => board.castling.white_kingside = true,
                    'Q' => board.castling.white_queenside = true,
                    'k' => board.castling.black_kingside = true,
                    'q' => board.castling.black_queenside = true,
                    _ => return Err(err()),
                }
            }
        }
        if fields[3] != "-" {
            board.en_passant = Some(Square::parse(fields[3]).map_err(|_| err())?);
        }
        board.progress = fields[4].parse().map_err(|_| err())?;
        board.fullmove = fields[5].parse().map_err(|_| err())?;
        Ok(board)
    }
}

pub fn outcome(board: &Board) -> Outcome {
    let white_king = board.king_square(Color::White).is_some();
    let black_king = board.king_square(Color::Black).is_some();
    if !white_king {
        return Outcome::Win(Color::Black);
    }
    if !black_king {
        return Outcome::Win(Color::White);
    }
    if board.progress >= DRAW_PROGRESS_LIMIT {
        return Outcome::Draw;
    }
    Outcome::Ongoing
}

pub fn sense(board: &Board, center: Square) -> SenseResult {
    let mut cells = Vec::with_capacity(9);
    for drank in -1..=1 {
        for dfile in -1..=1 {
            if let Some(sq) = center.offset(dfile, drank) {
                cells.push((sq, board.piece_at(sq)));
            }
        }
    }
    cells.sort_by_key(|(sq, _)| *sq);
    SenseResult { center, cells }
}

const ROOK_DIRS: [(i32, i32); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
const BISHOP_DIRS: [(i32, i32); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
const KNIGHT_DELTAS: [(i32, i32); 8] = [
    (1, 2),
    (2, 1),
    (2, -1),
    (1, -2),
    (-1, -2),
    (-2, -1),
    (-2, 1),
    (-1, 2),
];

fn slider_dirs(piece: Piece) -> &'static [(i32, i32)] {
    match piece {
        Piece::Rook => &ROOK_DIRS,
        Piece::Bishop => &BISHOP_DIRS,
        Piece::Queen => &[
            (0, 1),
            (1, 0),
            (0, -1),
            (-1, 0),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ],
        _ => &[],
    }
}

fn last_rank(color: Color) -> i32 {
    match color {
        Color::White => 7,
        Color::Black => 0,
    }
}

fn pawn_dir(color: Color) -> i32 {
    match color {
        Color::White => 1,
        Color::Black => -1,
    }
}

struct Execution {
    taken: MoveRequest,
    /// Square of the captured piece (differs from the destination for en
    /// passant).
    capture_square: Option<Square>,
    /// Set when the taken move is a castle; (rook_from, rook_to).
    rook_hop: Option<(Square, Square)>,
    promotion: Option<Piece>,
    ep_square: Option<Square>,
}

/// Resolve a request into what actually happens on the board, without
/// mutating anything. `None` means the request is illegal and passes.
fn resolve(board: &Board, from: Square, to: Square, promotion: Option<Piece>) -> Option<Execution> {
    let mover = board.side_to_move;
    let (color, piece) = board.piece_at(from)?;
    if color != mover {
        return None;
    }
    // Promotion annotations are only meaningful on pawn moves to the last
    // rank; anything else is a malformed wish and therefore illegal.
    if promotion.is_some() && !(piece == Piece::Pawn && to.rank() == last_rank(mover)) {
        return None;
    }
    if matches!(promotion, Some(Piece::Pawn | Piece::King)) {
        return None;
    }
    let quiet = |taken_to: Square| Execution {
        taken: MoveRequest::Move {
            from,
            to: taken_to,
            promotion: None,
        },
        capture_square: None,
        rook_hop: None,
        promotion: None,
        ep_square: None,
    };
    match piece {
        Piece::Knight => {
            let delta = (to.file() - from.file(), to.rank() - from.rank());
            if !KNIGHT_DELTAS.contains(&delta) {
                return None;
            }
            match board.piece_at(to) {
                Some((c, _)) if c == mover => None,
                occupant => Some(Execution {
                    capture_square: occupant.map(|_| to),
                    ..quiet(to)
                }),
            }
        }
        Piece::King => {
            let dfile = to.file() - from.file();
            let drank = to.rank() - from.rank();
            if drank == 0 && dfile.abs() == 2 {
                return resolve_castle(board, from, to);
            }
            if dfile.abs() > 1 || drank.abs() > 1 {
                return None;
            }
            match board.piece_at(to) {
                Some((c, _)) if c == mover => None,
                occupant => Some(Execution {
                    capture_square: occupant.map(|_| to),
                    ..quiet(to)
                }),
            }
        }
        Piece::Pawn => {
            let dir = pawn_dir(mover);
            let dfile = to.file() - from.file();
            let drank = to.rank() - from.rank();
            let start_rank = if mover == Color::White { 1 } else { 6 };
            let finish = |taken_to: Square, capture_square: Option<Square>| {
                let promoted = if taken_to.rank() == last_rank(mover) {
                    Some(promotion.unwrap_or(Piece::Queen))
                } else {
                    None
                };
                Some(Execution {
                    taken: MoveRequest::Move {
                        from,
                        to: taken_to,
                        promotion: promoted,
                    },
                    capture_square,
                    rook_hop: None,
                    promotion: promoted,
                    ep_square: None,
                })
            };
            if dfile == 0 && drank == dir {
                if board.piece_at(to).is_some() {
                    return None;
                }
                finish(to, None)
            } else if dfile == 0 && drank == 2 * dir && from.rank() == start_rank {
                let mid = from.offset(0, dir).unwrap();
                if board.piece_at(mid).is_some() {
                    return None;
                }
                if board.piece_at(to).is_none() {
                    let mut exec = finish(to, None)?;
                    exec.ep_square = Some(mid);
                    Some(exec)
                } else {
                    // Double push blocked at the destination truncates to the
                    // single push, like any other slide.
                    finish(mid, None)
                }
            } else if dfile.abs() == 1 && drank == dir {
                if board.en_passant == Some(to) {
                    let victim = to.offset(0, -dir).unwrap();
                    debug_assert_eq!(
                        board.piece_at(victim),
                        Some((mover.opponent(), Piece::Pawn))
                    );
                    return finish(to, Some(victim));
                }
                match board.piece_at(to) {
                    Some((c, _)) if c != mover => finish(to, Some(to)),
                    _ => None,
                }
            } else {
                None
            }
        }
        Piece::Rook | Piece::Bishop | Piece::Queen => {
            let dfile = (to.file() - from.file()).signum();
            let drank = (to.rank() - from.rank()).signum();
            let aligned = if to.file() == from.file() || to.rank() == from.rank() {
                matches!(piece, Piece::Rook | Piece::Queen)
            } else if (to.file() - from.file()).abs() == (to.rank() - from.rank()).abs() {
                matches!(piece, Piece::Bishop | Piece::Queen)
            } else {
                false
            };
            if !aligned {
                return None;
            }
            let mut sq = from;
            loop {
                sq = sq.offset(dfile, drank).unwrap();
                match board.piece_at(sq) {
                    Some((c, _)) if c == mover => return None,
                    Some(_) => {
                        // First opposing piece on the ray: capture and stop
                        // there, even short of the requested destination.
                        return Some(Execution {
                            capture_square: Some(sq),
                            ..quiet(sq)
                        });
                    }
                    None => {
                        if sq == to {
                            return Some(quiet(to));
                        }
                    }
                }
            }
        }
    }
}

fn resolve_castle(board: &Board, from: Square, to: Square) -> Option<Execution> {
    let mover = board.side_to_move;
    let home_rank = if mover == Color::White { 0 } else { 7 };
    if from != Square::from_file_rank(4, home_rank).unwrap() || to.rank() != home_rank {
        return None;
    }
    let kingside = to.file() == 6;
    let queenside = to.file() == 2;
    let right = match (mover, kingside, queenside) {
        (Color::White, true, _) => board.castling.white_kingside,
        (Color::White, _, true) => board.castling.white_queenside,
        (Color::Black, true, _) => board.castling.black_kingside,
        (Color::Black, _, true) => board.castling.black_queenside,
        _ => return None,
    };
    if !right {
        return None;
    }
    let rook_file = if kingside { 7 } else { 0 };
    let rook_from = Square::from_file_rank(rook_file, home_rank).unwrap();
    if board.piece_at(rook_from) != Some((mover, Piece::Rook)) {
        return None;
    }
    let between: &[i32] = if kingside { &[5, 6] } else { &[1, 2, 3] };
    for &f in between {
        if board.piece_at(Square::from_file_rank(f, home_rank).unwrap()).is_some() {
            return None;
        }
    }
    let rook_to = Square::from_file_rank(if kingside { 5 } else { 3 }, home_rank).unwrap();
    Some(Execution {
        taken: MoveRequest::Move {
            from,
            to,
            promotion: None,
        },
        capture_square: None,
        rook_hop: Some((rook_from, rook_to)),
        promotion: None,
        ep_square: None,
    })
}

/// Adjudicate a request on a board. Pure; never mutates its input.
pub fn apply_request(
    board: &Board,
    req: MoveRequest,
) -> Result<(Board, MoveOutcome), RulesError> {
    if outcome(board) != Outcome::Ongoing {
        return Err(RulesError::TerminalBoard);
    }
    if let MoveRequest::Move { from, to, .. } = req {
        if from == to {
            return Err(RulesError::BadRequest(format!("{from}->{to}")));
        }
    }
    let exec = match req {
        MoveRequest::Pass => None,
        MoveRequest::Move {
            from,
            to,
            promotion,
        } => resolve(board, from, to, promotion),
    };

    let mut next = board.clone();
    let mover = board.side_to_move;
    let mut capture_square = None;
    let mut pawn_moved = false;
    let taken = match &exec {
        None => MoveRequest::Pass,
        Some(exec) => {
            let MoveRequest::Move { from, to, .. } = exec.taken else {
                unreachable!()
            };
            let (_, piece) = next.placement[from.index()].unwrap();
            pawn_moved = piece == Piece::Pawn;
            if let Some(cap) = exec.capture_square {
                next.placement[cap.index()] = None;
                capture_square = Some(cap);
            }
            next.placement[from.index()] = None;
            next.placement[to.index()] = Some((mover, exec.promotion.unwrap_or(piece)));
            if let Some((rf, rt)) = exec.rook_hop {
                next.placement[rf.index()] = None;
                next.placement[rt.index()] = Some((mover, Piece::Rook));
            }
            next.en_passant = exec.ep_square;
            update_castling(&mut next, piece, mover, from, capture_square);
            exec.taken
        }
    };
    if exec.is_none() {
        next.en_passant = None;
    }
    if let Some(cap) = capture_square {
        // A captured rook on its home square also kills the right.
        update_castling_for_capture(&mut next, cap);
    }

    next.side_to_move = mover.opponent();
    if capture_square.is_some() || pawn_moved {
        next.progress = 0;
    } else if mover == Color::Black {
        next.progress += 1;
    }
    if mover == Color::Black {
        next.fullmove += 1;
    }

    // A pawn push to the last rank without an explicit promotion succeeds as
    // an auto-queen; that default fill does not make the request illegal.
    let was_illegal = match (req, taken) {
        (
            MoveRequest::Move {
                from: rf,
                to: rt,
                promotion: None,
            },
            MoveRequest::Move {
                from: tf,
                to: tt,
                promotion: Some(Piece::Queen),
            },
        ) => !(rf == tf && rt == tt),
        _ => taken != req,
    };
    Ok((
        next,
        MoveOutcome {
            requested: req,
            taken,
            capture_square,
            was_illegal,
        },
    ))
}

fn update_castling(
    board: &mut Board,
    piece: Piece,
    mover: Color,
    from: Square,
    _capture: Option<Square>,
) {
    let c = &mut board.castling;
    match (piece, mover) {
        (Piece::King, Color::White) => {
            c.white_kingside = false;
            c.white_queenside = false;
        }
        (Piece::King, Color::Black) => {
            c.black_kingside = false;
            c.black_queenside = false;
        }
        (Piece::Rook, _) => match from.index() {
            0 => c.white_queenside = false,
            7 => c.white_kingside = false,
            56 => c.black_queenside = false,
            63 => c.black_kingside = false,
            _ => {}
        },
        _ => {}
    }
}

fn update_castling_for_capture(board: &mut Board, capture: Square) {
    let c = &mut board.castling;
    match capture.index() {
        0 => c.white_queenside = false,
        7 => c.white_kingside = false,
        56 => c.black_queenside = false,
        63 => c.black_kingside = false,
        _ => {}
    }
}

/// Every geometrically playable move for the side to move: pseudo-legal
/// chess moves with RBC's missing check rules, plus executable castles.
/// Every adjudicable request either reproduces one of these outcomes or
/// collapses to a pass.
pub fn playable_moves(board: &Board) -> Vec<MoveRequest> {
    let mover = board.side_to_move;
    let mut moves = Vec::new();
    for from in Square::all() {
        let Some((color, piece)) = board.piece_at(from) else {
            continue;
        };
        if color != mover {
            continue;
        }
        match piece {
            Piece::Knight | Piece::King => {
                let deltas: &[(i32, i32)] = if piece == Piece::Knight {
                    &KNIGHT_DELTAS
                } else {
                    &[
                        (0, 1),
                        (1, 1),
                        (1, 0),
                        (1, -1),
                        (0, -1),
                        (-1, -1),
                        (-1, 0),
                        (-1, 1),
                    ]
                };
                for &(df, dr) in deltas {
                    if let Some(to) = from.offset(df, dr) {
                        match board.piece_at(to) {
                            Some((c, _)) if c == mover => {}
                            _ => moves.push(MoveRequest::mv(from, to)),
                        }
                    }
                }
                if piece == Piece::King {
                    for to_file in [6, 2] {
                        let to = Square::from_file_rank(to_file, from.rank()).unwrap();
                        if resolve_castle(board, from, to).is_some() {
                            moves.push(MoveRequest::mv(from, to));
                        }
                    }
                }
            }
            Piece::Pawn => {
                let dir = pawn_dir(mover);
                let start_rank = if mover == Color::White { 1 } else { 6 };
                let push_to = |from: Square, to: Square, moves: &mut Vec<MoveRequest>| {
                    if to.rank() == last_rank(mover) {
                        for p in [Piece::Queen, Piece::Rook, Piece::Bishop, Piece::Knight] {
                            moves.push(MoveRequest::Move {
                                from,
                                to,
                                promotion: Some(p),
                            });
                        }
                    } else {
                        moves.push(MoveRequest::mv(from, to));
                    }
                };
                if let Some(one) = from.offset(0, dir) {
                    if board.piece_at(one).is_none() {
                        push_to(from, one, &mut moves);
                        if from.rank() == start_rank {
                            let two = from.offset(0, 2 * dir).unwrap();
                            if board.piece_at(two).is_none() {
                                moves.push(MoveRequest::mv(from, two));
                            }
                        }
                    }
                }
                for df in [-1, 1] {
                    if let Some(to) = from.offset(df, dir) {
                        let capturable = matches!(board.piece_at(to), Some((c, _)) if c != mover)
                            || board.en_passant == Some(to);
                        if capturable {
                            push_to(from, to, &mut moves);
                        }
                    }
                }
            }
            Piece::Rook | Piece::Bishop | Piece::Queen => {
                for &(df, dr) in slider_dirs(piece) {
                    let mut to = from;
                    loop {
                        match to.offset(df, dr) {
                            None => break,
                            Some(next_sq) => {
                                to = next_sq;
                                match board.piece_at(to) {
                                    Some((c, _)) if c == mover => break,
                                    Some(_) => {
                                        moves.push(MoveRequest::mv(from, to));
                                        break;
                                    }
                                    None => moves.push(MoveRequest::mv(from, to)),
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    moves
}

/// All distinct ways the position can evolve on the mover's turn, keyed by
/// resulting board and capture square; every illegal or truncated request
/// collapses onto one of these. Sorted by canonical board key.
pub fn successor_outcomes(board: &Board) -> Vec<(Board, MoveOutcome)> {
    if outcome(board) != Outcome::Ongoing {
        return Vec::new();
    }
    let mut seen: std::collections::BTreeMap<(Board, Option<Square>), MoveOutcome> =
        std::collections::BTreeMap::new();
    let (pass_board, pass_outcome) = apply_request(board, MoveRequest::Pass).unwrap();
    seen.insert((pass_board, None), pass_outcome);
    for req in playable_moves(board) {
        let (next, oc) = apply_request(board, req).unwrap();
        seen.entry((next, oc.capture_square)).or_insert(oc);
    }
    seen.into_iter().map(|((b, _), oc)| (b, oc)).collect()
}
