//! Chess rules: position representation, FEN, legal move generation, game
//! termination, and the feature extractors the rest of the pipeline reads.
//!
//! Conventions frozen here and relied on everywhere else:
//!
//! - Squares are indices 0..64 with a1 = 0, b1 = 1, ..., h8 = 63.
//! - The canonical move order is ascending `(from, to, promotion)` with
//!   promotions ordered knight < bishop < rook < queen. Every consumer of a
//!   move list (predictors, the signal chain, tie-breaking) sees this order.
//! - The en-passant square is recorded only when an enemy pawn stands ready
//!   to capture onto it, so a position round-trips through FEN text without
//!   loss (a double push with no adjacent enemy pawn yields an ep field of
//!   `-`).

mod features;
mod movegen;

pub use features::{
    extract_context, extract_dist_shape, extract_sensors, material_balance, material_norm,
    ContextInputs, CONTEXT_LEN, CONTEXT_MATERIAL_IDX, SENSOR_LEN,
};
pub use movegen::{is_attacked, legal_moves, mobility_count, perft};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoardError {
    #[error("invalid FEN: {0}")]
    InvalidFen(String),
    #[error("invalid move literal: {0}")]
    InvalidMove(String),
    #[error("empty probability vector")]
    EmptyDistribution,
    #[error("probabilities must be non-negative and sum to 1 (sum = {0})")]
    NotADistribution(f64),
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    White,
    Black,
}

impl Color {
    pub fn flip(self) -> Color {
        match self {
            Color::White => Color::Black,
            Color::Black => Color::White,
        }
    }
}

/// Piece kinds in canonical order; the discriminant order doubles as the
/// promotion tie-break order and the piece-attention channel order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceType {
    Pawn,
    Knight,
    Bishop,
    Rook,
    Queen,
    King,
}

pub const PIECE_TYPES: [PieceType; 6] = [
    PieceType::Pawn,
    PieceType::Knight,
    PieceType::Bishop,
    PieceType::Rook,
    PieceType::Queen,
    PieceType::King,
];

impl PieceType {
    /// Conventional pawn-unit value (king = 0); used for material balance.
    pub fn value(self) -> i32 {
        match self {
            PieceType::Pawn => 1,
            PieceType::Knight | PieceType::Bishop => 3,
            PieceType::Rook => 5,
            PieceType::Queen => 9,
            PieceType::King => 0,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn to_char(self, color: Color) -> char {
        let c = match self {
            PieceType::Pawn => 'p',
            PieceType::Knight => 'n',
            PieceType::Bishop => 'b',
            PieceType::Rook => 'r',
            PieceType::Queen => 'q',
            PieceType::King => 'k',
        };
        match color {
            Color::White => c.to_ascii_uppercase(),
            Color::Black => c,
        }
    }

    fn from_char(c: char) -> Option<(Color, PieceType)> {
        let color = if c.is_ascii_uppercase() { Color::White } else { Color::Black };
        let kind = match c.to_ascii_lowercase() {
            'p' => PieceType::Pawn,
            'n' => PieceType::Knight,
            'b' => PieceType::Bishop,
            'r' => PieceType::Rook,
            'q' => PieceType::Queen,
            'k' => PieceType::King,
            _ => return None,
        };
        Some((color, kind))
    }
}

pub type Square = u8;

pub fn square(file: u8, rank: u8) -> Square {
    debug_assert!(file < 8 && rank < 8);
    rank * 8 + file
}

pub fn file_of(sq: Square) -> u8 {
    sq % 8
}

pub fn rank_of(sq: Square) -> u8 {
    sq / 8
}

pub fn square_name(sq: Square) -> String {
    format!("{}{}", (b'a' + file_of(sq)) as char, rank_of(sq) + 1)
}

fn parse_square(s: &str) -> Option<Square> {
    let bytes = s.as_bytes();
    if bytes.len() != 2 {
        return None;
    }
    let file = bytes[0].checked_sub(b'a')?;
    let rank = bytes[1].checked_sub(b'1')?;
    if file < 8 && rank < 8 {
        Some(square(file, rank))
    } else {
        None
    }
}

/// A move in coordinate form. Derived `Ord` is the canonical move order:
/// ascending `(from, to, promotion)`, `None` before any promotion piece.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash, Serialize, Deserialize)]
pub struct Move {
    pub from: Square,
    pub to: Square,
    pub promotion: Option<PieceType>,
}

impl Move {
    pub fn new(from: Square, to: Square) -> Move {
        Move { from, to, promotion: None }
    }

    pub fn promo(from: Square, to: Square, piece: PieceType) -> Move {
        Move { from, to, promotion: Some(piece) }
    }

    /// Coordinate ("UCI") notation: `e2e4`, `e7e8q`.
    pub fn to_uci(self) -> String {
        let mut s = format!("{}{}", square_name(self.from), square_name(self.to));
        if let Some(p) = self.promotion {
            s.push(p.to_char(Color::Black));
        }
        s
    }

    pub fn from_uci(s: &str) -> Result<Move, BoardError> {
        let err = || BoardError::InvalidMove(s.to_string());
        if s.len() != 4 && s.len() != 5 {
            return Err(err());
        }
        let from = parse_square(&s[0..2]).ok_or_else(err)?;
        let to = parse_square(&s[2..4]).ok_or_else(err)?;
        let promotion = match s.len() {
            5 => {
                let (_, kind) = PieceType::from_char(s.as_bytes()[4] as char).ok_or_else(err)?;
                if matches!(kind, PieceType::Pawn | PieceType::King) {
                    return Err(err());
                }
                Some(kind)
            }
            _ => None,
        };
        Ok(Move { from, to, promotion })
    }
}

/// Castling availability as a bitfield, FEN order `KQkq`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Hash)]
pub struct CastlingRights(u8);

const WK: u8 = 1;
const WQ: u8 = 2;
const BK: u8 = 4;
const BQ: u8 = 8;

impl CastlingRights {
    pub fn all() -> CastlingRights {
        CastlingRights(WK | WQ | BK | BQ)
    }

    fn has(self, flag: u8) -> bool {
        self.0 & flag != 0
    }

    fn clear(&mut self, flag: u8) {
        self.0 &= !flag;
    }

    fn fen(self) -> String {
        if self.0 == 0 {
            return "-".to_string();
        }
        let mut s = String::new();
        for (flag, c) in [(WK, 'K'), (WQ, 'Q'), (BK, 'k'), (BQ, 'q')] {
            if self.has(flag) {
                s.push(c);
            }
        }
        s
    }
}

/// Full game state for one position. Value semantics: `apply_move` returns a
/// new `Position` and never mutates its input.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Position {
    squares: [Option<(Color, PieceType)>; 64],
    side_to_move: Color,
    castling: CastlingRights,
    en_passant: Option<Square>,
    halfmove_clock: u32,
    fullmove_number: u32,
}

/// Identity used for threefold-repetition detection: placement, side to move,
/// castling rights, and the (capture-conditional) en-passant square.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct RepetitionKey([u8; 34]);

pub const START_FEN: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

impl Position {
    pub fn start() -> Position {
        Position::from_fen(START_FEN).expect("start FEN is valid")
    }

    pub fn piece_at(&self, sq: Square) -> Option<(Color, PieceType)> {
        self.squares[sq as usize]
    }

    pub fn side_to_move(&self) -> Color {
        self.side_to_move
    }

    pub fn en_passant(&self) -> Option<Square> {
        self.en_passant
    }

    pub fn halfmove_clock(&self) -> u32 {
        self.halfmove_clock
    }

    pub fn fullmove_number(&self) -> u32 {
        self.fullmove_number
    }

    pub fn king_square(&self, color: Color) -> Square {
        for sq in 0..64u8 {
            if self.squares[sq as usize] == Some((color, PieceType::King)) {
                return sq;
            }
        }
        unreachable!("a legal position always has both kings");
    }

    pub fn in_check(&self) -> bool {
        is_attacked(self, self.king_square(self.side_to_move), self.side_to_move.flip())
    }

    pub fn from_fen(fen: &str) -> Result<Position, BoardError> {
        let err = |msg: &str| BoardError::InvalidFen(format!("{msg}: {fen}"));
        let fields: Vec<&str> = fen.split_ascii_whitespace().collect();
        if fields.len() != 6 {
            return Err(err("expected 6 fields"));
        }

        let mut squares = [None; 64];
        let ranks: Vec<&str> = fields[0].split('/').collect();
        if ranks.len() != 8 {
            return Err(err("expected 8 ranks"));
        }
        for (i, rank_str) in ranks.iter().enumerate() {
            let rank = 7 - i as u8;
            let mut file = 0u8;
            for c in rank_str.chars() {
                if let Some(n) = c.to_digit(10) {
                    if n == 0 || n > 8 {
                        return Err(err("bad skip count"));
                    }
                    file += n as u8;
                } else {
                    let piece = PieceType::from_char(c).ok_or_else(|| err("bad piece char"))?;
                    if file >= 8 {
                        return Err(err("rank overflow"));
                    }
                    squares[square(file, rank) as usize] = Some(piece);
                    file += 1;
                }
            }
            if file != 8 {
                return Err(err("rank underflow"));
            }
        }

        let side_to_move = match fields[1] {
            "w" => Color::White,
            "b" => Color::Black,
            _ => return Err(err("bad side to move")),
        };

        let mut castling = CastlingRights::default();
        if fields[2] != "-" {
            for c in fields[2].chars() {
                castling.0 |= match c {
                    'K' => WK,
                    'Q' => WQ,
                    'k' => BK,
                    'q' => BQ,
                    _ => return Err(err("bad castling field")),
                };
            }
        }

        let en_passant = match fields[3] {
            "-" => None,
            s => Some(parse_square(s).ok_or_else(|| err("bad en-passant square"))?),
        };

        let halfmove_clock = fields[4].parse().map_err(|_| err("bad halfmove clock"))?;
        let fullmove_number = fields[5].parse().map_err(|_| err("bad fullmove number"))?;

        let pos = Position { squares, side_to_move, castling, en_passant, halfmove_clock, fullmove_number };
        for color in [Color::White, Color::Black] {
            if !pos.squares.iter().any(|&p| p == Some((color, PieceType::King))) {
                return Err(err("missing king"));
            }
        }
        Ok(pos)
    }

    pub fn to_fen(&self) -> String {
        let mut placement = String::new();
        for rank in (0..8u8).rev() {
            let mut empty = 0;
            for file in 0..8u8 {
                match self.squares[square(file, rank) as usize] {
                    None => empty += 1,
                    Some((color, kind)) => {
                        if empty > 0 {
                            placement.push_str(&empty.to_string());
                            empty = 0;
                        }
                        placement.push(kind.to_char(color));
                    }
                }
            }
            if empty > 0 {
                placement.push_str(&empty.to_string());
            }
            if rank > 0 {
                placement.push('/');
            }
        }
        let stm = match self.side_to_move {
            Color::White => "w",
            Color::Black => "b",
        };
        let ep = match self.en_passant {
            None => "-".to_string(),
            Some(sq) => square_name(sq),
        };
        format!(
            "{placement} {stm} {} {ep} {} {}",
            self.castling.fen(),
            self.halfmove_clock,
            self.fullmove_number
        )
    }

    /// Applies a move assumed to come from `legal_moves(self)`. Returns the
    /// successor; `self` is untouched.
    pub fn apply_move(&self, mv: Move) -> Position {
        let mut next = self.clone();
        let mover = self.side_to_move;
        let (color, kind) = self.squares[mv.from as usize].expect("move origin must hold a piece");
        debug_assert_eq!(color, mover, "move origin must hold the mover's piece");

        let is_capture = next.squares[mv.to as usize].is_some();
        let is_pawn = kind == PieceType::Pawn;

        // En-passant capture: pawn moves diagonally onto an empty square.
        if is_pawn && Some(mv.to) == self.en_passant && file_of(mv.to) != file_of(mv.from) {
            let victim = match mover {
                Color::White => mv.to - 8,
                Color::Black => mv.to + 8,
            };
            next.squares[victim as usize] = None;
        }

        // Castling: king moves two files; hop the rook over.
        if kind == PieceType::King && file_of(mv.from).abs_diff(file_of(mv.to)) == 2 {
            let rank = rank_of(mv.from);
            let (rook_from, rook_to) = if file_of(mv.to) == 6 {
                (square(7, rank), square(5, rank))
            } else {
                (square(0, rank), square(3, rank))
            };
            next.squares[rook_to as usize] = next.squares[rook_from as usize].take();
        }

        next.squares[mv.from as usize] = None;
        next.squares[mv.to as usize] = Some(match mv.promotion {
            Some(p) => (mover, p),
            None => (mover, kind),
        });

        // Castling rights lapse when the king or a rook moves, or a rook is
        // captured on its home square.
        for (sq, flags) in [(4u8, WK | WQ), (60, BK | BQ), (7, WK), (0, WQ), (63, BK), (56, BQ)] {
            if mv.from == sq || mv.to == sq {
                next.castling.clear(flags);
            }
        }

        // Record the en-passant target only when an enemy pawn can capture
        // onto it; this keeps FEN round-trips lossless.
        next.en_passant = None;
        if is_pawn && rank_of(mv.from).abs_diff(rank_of(mv.to)) == 2 {
            let target = square(file_of(mv.from), (rank_of(mv.from) + rank_of(mv.to)) / 2);
            let enemy = mover.flip();
            let f = file_of(mv.to);
            let adjacent = [f.checked_sub(1), if f < 7 { Some(f + 1) } else { None }];
            let capturable = adjacent.iter().flatten().any(|&af| {
                self.squares[square(af, rank_of(mv.to)) as usize] == Some((enemy, PieceType::Pawn))
            });
            if capturable {
                next.en_passant = Some(target);
            }
        }

        next.halfmove_clock = if is_pawn || is_capture { 0 } else { self.halfmove_clock + 1 };
        if mover == Color::Black {
            next.fullmove_number += 1;
        }
        next.side_to_move = mover.flip();
        next
    }

    pub fn can_castle_short(&self, color: Color) -> bool {
        self.castling.has(match color {
            Color::White => WK,
            Color::Black => BK,
        })
    }

    pub fn can_castle_long(&self, color: Color) -> bool {
        self.castling.has(match color {
            Color::White => WQ,
            Color::Black => BQ,
        })
    }

    pub fn repetition_key(&self) -> RepetitionKey {
        let mut key = [0u8; 34];
        for (i, chunk) in self.squares.chunks(2).enumerate() {
            let encode = |p: Option<(Color, PieceType)>| match p {
                None => 0u8,
                Some((c, k)) => 1 + (c as u8) * 6 + k as u8,
            };
            key[i] = encode(chunk[0]) << 4 | encode(chunk[1]);
        }
        key[32] = (self.side_to_move as u8) << 4 | self.castling.0;
        key[33] = self.en_passant.map_or(0xff, |sq| sq);
        RepetitionKey(key)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Checkmate,
    Stalemate,
    FiftyMove,
    Repetition,
    InsufficientMaterial,
    PlyCap,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct GameResult {
    /// `None` for a draw.
    pub winner: Option<Color>,
    pub termination: Termination,
}

impl GameResult {
    /// 1 / 0.5 / 0 from `perspective`.
    pub fn score_for(&self, perspective: Color) -> f64 {
        match self.winner {
            None => 0.5,
            Some(w) if w == perspective => 1.0,
            Some(_) => 0.0,
        }
    }
}

/// Terminal test for the position about to move. `history` holds the
/// repetition keys of every position reached so far, including this one.
/// `ply` counts halfmoves played; reaching `ply_cap` adjudicates a draw.
pub fn game_status(
    pos: &Position,
    history: &[RepetitionKey],
    ply: u32,
    ply_cap: u32,
) -> Option<GameResult> {
    if legal_moves(pos).is_empty() {
        return Some(if pos.in_check() {
            GameResult { winner: Some(pos.side_to_move().flip()), termination: Termination::Checkmate }
        } else {
            GameResult { winner: None, termination: Termination::Stalemate }
        });
    }
    if pos.halfmove_clock >= 100 {
        return Some(GameResult { winner: None, termination: Termination::FiftyMove });
    }
    let key = pos.repetition_key();
    if history.iter().filter(|&&k| k == key).count() >= 3 {
        return Some(GameResult { winner: None, termination: Termination::Repetition });
    }
    if insufficient_material(pos) {
        return Some(GameResult { winner: None, termination: Termination::InsufficientMaterial });
    }
    if ply >= ply_cap {
        return Some(GameResult { winner: None, termination: Termination::PlyCap });
    }
    None
}

fn insufficient_material(pos: &Position) -> bool {
    let mut minors = Vec::new();
    for sq in 0..64u8 {
        match pos.piece_at(sq) {
            None | Some((_, PieceType::King)) => {}
            Some((_, PieceType::Bishop)) | Some((_, PieceType::Knight)) => minors.push(sq),
            // Any pawn, rook, or queen is mating material.
            Some(_) => return false,
        }
    }
    match minors.len() {
        0 | 1 => true,
        2 => {
            // Two bishops on the same square color cannot mate (covers both
            // the one-each and the two-same-side cases conservatively only
            // when both are bishops).
            let both_bishops = minors
                .iter()
                .all(|&sq| matches!(pos.piece_at(sq), Some((_, PieceType::Bishop))));
            let same_shade =
                (file_of(minors[0]) + rank_of(minors[0])) % 2 == (file_of(minors[1]) + rank_of(minors[1])) % 2;
            both_bishops && same_shade
        }
        _ => false,
    }
}

/// One game per line, moves in coordinate notation separated by spaces.
pub fn game_line(moves: &[Move]) -> String {
    moves.iter().map(|m| m.to_uci()).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_fen_round_trips() {
        let pos = Position::start();
        assert_eq!(pos.to_fen(), START_FEN);
        assert_eq!(Position::from_fen(START_FEN).unwrap(), pos);
    }

    #[test]
    fn double_push_without_capturable_pawn_omits_ep_square() {
        let pos = Position::start().apply_move(Move::from_uci("e2e4").unwrap());
        assert_eq!(pos.to_fen(), "rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq - 0 1");
    }

    #[test]
    fn double_push_next_to_enemy_pawn_records_ep_square() {
        let pos = Position::from_fen("rnbqkbnr/ppp1pppp/8/8/3p4/8/PPPPPPPP/RNBQKBNR w KQkq - 0 3")
            .unwrap()
            .apply_move(Move::from_uci("e2e4").unwrap());
        assert_eq!(pos.en_passant(), Some(parse_square("e3").unwrap()));
        let fen = pos.to_fen();
        assert_eq!(Position::from_fen(&fen).unwrap(), pos);
    }

    #[test]
    fn canonical_order_sorts_promotions_by_piece() {
        let a = Move::promo(48, 56, PieceType::Knight);
        let b = Move::promo(48, 56, PieceType::Queen);
        let c = Move::new(48, 57);
        let mut moves = vec![b, c, a];
        moves.sort();
        assert_eq!(moves, vec![a, b, c]);
    }

    #[test]
    fn uci_round_trip() {
        for s in ["e2e4", "e7e8q", "a7a8n", "h1h8"] {
            assert_eq!(Move::from_uci(s).unwrap().to_uci(), s);
        }
        assert!(Move::from_uci("e9e4").is_err());
        assert!(Move::from_uci("e2e4k").is_err());
    }

    #[test]
    fn fifty_move_rule_adjudicates_draw() {
        let pos = Position::from_fen("8/8/8/4k3/8/8/4K3/4R3 w - - 100 80").unwrap();
        let result = game_status(&pos, &[pos.repetition_key()], 10, 200).unwrap();
        assert_eq!(result.termination, Termination::FiftyMove);
        assert_eq!(result.winner, None);
    }

    #[test]
    fn checkmate_reports_winner() {
        // Fool's mate.
        let pos = Position::from_fen("rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 1 3")
            .unwrap();
        let result = game_status(&pos, &[pos.repetition_key()], 4, 200).unwrap();
        assert_eq!(result.termination, Termination::Checkmate);
        assert_eq!(result.winner, Some(Color::Black));
        assert_eq!(result.score_for(Color::Black), 1.0);
        assert_eq!(result.score_for(Color::White), 0.0);
    }

    #[test]
    fn stalemate_is_a_draw() {
        let pos = Position::from_fen("7k/5Q2/6K1/8/8/8/8/8 b - - 0 1").unwrap();
        let result = game_status(&pos, &[pos.repetition_key()], 4, 200).unwrap();
        assert_eq!(result.termination, Termination::Stalemate);
        assert_eq!(result.winner, None);
    }

    #[test]
    fn bare_kings_are_insufficient() {
        let pos = Position::from_fen("8/8/8/4k3/8/8/4K3/8 w - - 10 40").unwrap();
        let result = game_status(&pos, &[pos.repetition_key()], 10, 200).unwrap();
        assert_eq!(result.termination, Termination::InsufficientMaterial);
    }

    #[test]
    fn ply_cap_adjudicates_draw() {
        let pos = Position::start();
        let result = game_status(&pos, &[pos.repetition_key()], 200, 200).unwrap();
        assert_eq!(result.termination, Termination::PlyCap);
    }

    #[test]
    fn threefold_repetition_detected() {
        let pos = Position::start();
        let key = pos.repetition_key();
        let result = game_status(&pos, &[key, key, key], 8, 200).unwrap();
        assert_eq!(result.termination, Termination::Repetition);
        assert!(game_status(&pos, &[key, key], 8, 200).is_none());
    }

    #[test]
    fn game_line_joins_uci_moves() {
        let moves = vec![Move::from_uci("e2e4").unwrap(), Move::from_uci("e7e5").unwrap()];
        assert_eq!(game_line(&moves), "e2e4 e7e5");
    }
}
