//! Position feature extraction. Everything here is a pure function of the
//! position (plus explicit game-state inputs for the context vector), always
//! read from the side to move's perspective, and always in [0, 1].
//!
//! Sensor layout (frozen; index order matters because downstream modules
//! slice this vector):
//!
//! | idx | feature                                             |
//! |-----|-----------------------------------------------------|
//! |  0  | material balance (own − opponent, 0.5 = equal)      |
//! |  1  | own king exposure (attacked king-neighborhood)      |
//! |  2  | own passed pawns / 8                                |
//! |  3  | own isolated pawns / 8                              |
//! |  4  | own doubled pawns / 8                               |
//! |  5  | center control (d4/e4/d5/e5 attacked or occupied)   |
//! |  6  | own mobility / 40                                   |
//! |  7  | opponent mobility / 40                              |
//! |  8  | rook activity (own rooks past the midline)          |
//! |  9  | bishop pair flag                                    |
//! | 10  | knight outposts / 2                                 |
//! | 11  | piece coordination (defended own pieces)            |
//! | 12  | own king pawn shield / 3                            |
//! | 13  | opponent king pawn shield / 3                       |
//! | 14  | own rooks on open files / 2                         |
//! | 15  | own rooks on semi-open files / 2                    |
//! | 16  | game phase (non-pawn material remaining)            |
//! | 17  | opponent king exposure                              |
//! | 18  | board fullness (men on board / 32)                  |
//! | 19  | own pawn advancement                                |
//!
//! Indices 0-9 form the "first ten sensors" slice that the attention module
//! consumes.

use super::{
    file_of, is_attacked, legal_moves, mobility_count, rank_of, square, Color, PieceType,
    Position, Square,
};
use crate::board::BoardError;

pub const SENSOR_LEN: usize = 20;
pub const CONTEXT_LEN: usize = 8;

/// Own-minus-opponent material in pawn units from `perspective`.
pub fn material_balance(pos: &Position, perspective: Color) -> i32 {
    let mut balance = 0;
    for sq in 0..64u8 {
        if let Some((color, kind)) = pos.piece_at(sq) {
            let v = kind.value();
            balance += if color == perspective { v } else { -v };
        }
    }
    balance
}

/// Affine map of a pawn-unit balance onto [0, 1]: 0.5 at equality, saturating
/// at a twelve-pawn swing.
pub fn material_norm(balance: i32) -> f64 {
    (0.5 + balance as f64 / 24.0).clamp(0.0, 1.0)
}

fn relative_rank(sq: Square, color: Color) -> u8 {
    match color {
        Color::White => rank_of(sq),
        Color::Black => 7 - rank_of(sq),
    }
}

fn pieces_of(pos: &Position, color: Color, kind: PieceType) -> Vec<Square> {
    (0..64u8).filter(|&sq| pos.piece_at(sq) == Some((color, kind))).collect()
}

fn king_exposure(pos: &Position, color: Color) -> f64 {
    let king = pos.king_square(color);
    let enemy = color.flip();
    let mut neighbors = 0;
    let mut attacked = 0;
    for df in -1i8..=1 {
        for dr in -1i8..=1 {
            if df == 0 && dr == 0 {
                continue;
            }
            let f = file_of(king) as i8 + df;
            let r = rank_of(king) as i8 + dr;
            if (0..8).contains(&f) && (0..8).contains(&r) {
                neighbors += 1;
                if is_attacked(pos, square(f as u8, r as u8), enemy) {
                    attacked += 1;
                }
            }
        }
    }
    attacked as f64 / neighbors as f64
}

fn pawn_files(pos: &Position, color: Color) -> [u32; 8] {
    let mut counts = [0u32; 8];
    for sq in pieces_of(pos, color, PieceType::Pawn) {
        counts[file_of(sq) as usize] += 1;
    }
    counts
}

fn passed_pawns(pos: &Position, color: Color) -> u32 {
    let enemy_pawns = pieces_of(pos, color.flip(), PieceType::Pawn);
    pieces_of(pos, color, PieceType::Pawn)
        .into_iter()
        .filter(|&sq| {
            let f = file_of(sq) as i8;
            let rel = relative_rank(sq, color);
            // Passed: no enemy pawn on this or an adjacent file strictly
            // ahead on the way to promotion.
            !enemy_pawns
                .iter()
                .any(|&e| (file_of(e) as i8 - f).abs() <= 1 && relative_rank(e, color) > rel)
        })
        .count() as u32
}

fn isolated_pawns(files: &[u32; 8]) -> u32 {
    let mut total = 0;
    for f in 0..8usize {
        if files[f] == 0 {
            continue;
        }
        let left = if f > 0 { files[f - 1] } else { 0 };
        let right = if f < 7 { files[f + 1] } else { 0 };
        if left == 0 && right == 0 {
            total += files[f];
        }
    }
    total
}

fn doubled_pawns(files: &[u32; 8]) -> u32 {
    files.iter().map(|&c| c.saturating_sub(1)).sum()
}

fn center_control(pos: &Position, color: Color) -> f64 {
    let center = [square(3, 3), square(4, 3), square(3, 4), square(4, 4)];
    let controlled = center
        .iter()
        .filter(|&&sq| {
            matches!(pos.piece_at(sq), Some((c, _)) if c == color) || is_attacked(pos, sq, color)
        })
        .count();
    controlled as f64 / 4.0
}

fn rook_activity(pos: &Position, color: Color) -> f64 {
    let rooks = pieces_of(pos, color, PieceType::Rook);
    if rooks.is_empty() {
        return 0.0;
    }
    let active = rooks.iter().filter(|&&sq| relative_rank(sq, color) >= 4).count();
    active as f64 / rooks.len() as f64
}

fn knight_outposts(pos: &Position, color: Color) -> u32 {
    let enemy = color.flip();
    pieces_of(pos, color, PieceType::Knight)
        .into_iter()
        .filter(|&sq| {
            let rel = relative_rank(sq, color);
            if !(3..=5).contains(&rel) {
                return false;
            }
            // Must be guarded by an own pawn ...
            let dr = match color {
                Color::White => -1i8,
                Color::Black => 1,
            };
            let guarded = [-1i8, 1].iter().any(|&df| {
                let f = file_of(sq) as i8 + df;
                let r = rank_of(sq) as i8 + dr;
                (0..8).contains(&f)
                    && (0..8).contains(&r)
                    && pos.piece_at(square(f as u8, r as u8)) == Some((color, PieceType::Pawn))
            });
            if !guarded {
                return false;
            }
            // ... and safe from being chased by an enemy pawn: none on an
            // adjacent file ahead of the knight.
            !pieces_of(pos, enemy, PieceType::Pawn).iter().any(|&e| {
                (file_of(e) as i8 - file_of(sq) as i8).abs() == 1
                    && relative_rank(e, color) > rel
            })
        })
        .count() as u32
}

fn coordination(pos: &Position, color: Color) -> f64 {
    let mut total = 0;
    let mut defended = 0;
    for sq in 0..64u8 {
        match pos.piece_at(sq) {
            Some((c, kind)) if c == color && kind != PieceType::King => {
                total += 1;
                if is_attacked(pos, sq, color) {
                    defended += 1;
                }
            }
            _ => {}
        }
    }
    if total == 0 {
        0.0
    } else {
        defended as f64 / total as f64
    }
}

fn king_shield(pos: &Position, color: Color) -> f64 {
    let king = pos.king_square(color);
    let dr = match color {
        Color::White => 1i8,
        Color::Black => -1,
    };
    let mut shield = 0;
    for df in -1i8..=1 {
        let f = file_of(king) as i8 + df;
        let r = rank_of(king) as i8 + dr;
        if (0..8).contains(&f)
            && (0..8).contains(&r)
            && pos.piece_at(square(f as u8, r as u8)) == Some((color, PieceType::Pawn))
        {
            shield += 1;
        }
    }
    shield as f64 / 3.0
}

/// (open, semi-open) rook counts for `color`.
fn rook_files(pos: &Position, color: Color) -> (u32, u32) {
    let own = pawn_files(pos, color);
    let their = pawn_files(pos, color.flip());
    let mut open = 0;
    let mut semi = 0;
    for sq in pieces_of(pos, color, PieceType::Rook) {
        let f = file_of(sq) as usize;
        if own[f] == 0 && their[f] == 0 {
            open += 1;
        } else if own[f] == 0 {
            semi += 1;
        }
    }
    (open, semi)
}

/// Non-pawn material remaining relative to the initial armies.
fn game_phase(pos: &Position) -> f64 {
    let mut npm = 0;
    for sq in 0..64u8 {
        if let Some((_, kind)) = pos.piece_at(sq) {
            if kind != PieceType::Pawn {
                npm += kind.value();
            }
        }
    }
    (npm as f64 / 62.0).min(1.0)
}

fn pawn_advancement(pos: &Position, color: Color) -> f64 {
    let pawns = pieces_of(pos, color, PieceType::Pawn);
    if pawns.is_empty() {
        return 0.0;
    }
    let sum: f64 =
        pawns.iter().map(|&sq| (relative_rank(sq, color) as f64 - 1.0) / 5.0).sum();
    sum / pawns.len() as f64
}

fn norm_moves(count: usize) -> f64 {
    (count as f64 / 40.0).min(1.0)
}

/// The 20-component sensor vector (see module docs for the layout).
pub fn extract_sensors(pos: &Position) -> [f64; SENSOR_LEN] {
    let own = pos.side_to_move();
    let opp = own.flip();
    let own_files = pawn_files(pos, own);
    let (open, semi) = rook_files(pos, own);
    let mut s = [0.0; SENSOR_LEN];
    s[0] = material_norm(material_balance(pos, own));
    s[1] = king_exposure(pos, own);
    s[2] = passed_pawns(pos, own) as f64 / 8.0;
    s[3] = isolated_pawns(&own_files) as f64 / 8.0;
    s[4] = doubled_pawns(&own_files) as f64 / 8.0;
    s[5] = center_control(pos, own);
    s[6] = norm_moves(mobility_count(pos, own) as usize);
    s[7] = norm_moves(mobility_count(pos, opp) as usize);
    s[8] = rook_activity(pos, own);
    s[9] = if pieces_of(pos, own, PieceType::Bishop).len() >= 2 { 1.0 } else { 0.0 };
    s[10] = (knight_outposts(pos, own) as f64 / 2.0).min(1.0);
    s[11] = coordination(pos, own);
    s[12] = king_shield(pos, own);
    s[13] = king_shield(pos, opp);
    s[14] = (open as f64 / 2.0).min(1.0);
    s[15] = (semi as f64 / 2.0).min(1.0);
    s[16] = game_phase(pos);
    s[17] = king_exposure(pos, opp);
    s[18] = pos.occupied_count() as f64 / 32.0;
    s[19] = pawn_advancement(pos, own);
    s
}

/// Game-state inputs the position alone cannot provide.
#[derive(Clone, Copy, Debug)]
pub struct ContextInputs {
    pub ply: u32,
    pub ply_cap: u32,
    pub last_move_was_capture: bool,
}

/// The 8-component game-context vector:
/// [ply progress, game phase, side-to-move flag (white = 1), in-check flag,
///  material balance, last-move-capture flag, halfmove-clock progress,
///  legal-move count / 40].
pub fn extract_context(pos: &Position, inputs: &ContextInputs) -> [f64; CONTEXT_LEN] {
    [
        (inputs.ply as f64 / inputs.ply_cap.max(1) as f64).min(1.0),
        game_phase(pos),
        match pos.side_to_move() {
            Color::White => 1.0,
            Color::Black => 0.0,
        },
        if pos.in_check() { 1.0 } else { 0.0 },
        material_norm(material_balance(pos, pos.side_to_move())),
        if inputs.last_move_was_capture { 1.0 } else { 0.0 },
        (pos.halfmove_clock() as f64 / 100.0).min(1.0),
        norm_moves(legal_moves(pos).len()),
    ]
}

/// Index of the material-balance component within the context vector; the
/// affect module reads it by position.
pub const CONTEXT_MATERIAL_IDX: usize = 4;

/// Distribution-shape summary of a move probability vector:
/// [entropy / ln(n), top-1 probability, top-1 − top-2 gap, move count / 40].
pub fn extract_dist_shape(probs: &[f64]) -> Result<[f64; 4], BoardError> {
    if probs.is_empty() {
        return Err(BoardError::EmptyDistribution);
    }
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(BoardError::NotADistribution(sum));
    }
    let n = probs.len();
    let entropy = if n == 1 {
        0.0
    } else {
        let h: f64 = probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
        h / (n as f64).ln()
    };
    let mut top1 = 0.0f64;
    let mut top2 = 0.0f64;
    for &p in probs {
        if p > top1 {
            top2 = top1;
            top1 = p;
        } else if p > top2 {
            top2 = p;
        }
    }
    Ok([entropy, top1, top1 - top2, norm_moves(n)])
}

impl Position {
    fn occupied_count(&self) -> u32 {
        (0..64u8).filter(|&sq| self.piece_at(sq).is_some()).count() as u32
    }
}
