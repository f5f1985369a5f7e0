//! Move generation: pseudo-legal generation per piece, attack detection by
//! reverse lookup, and king-safety filtering. Output is always in canonical
//! `(from, to, promotion)` order.

use super::{file_of, rank_of, square, Color, Move, PieceType, Position, Square};

const KNIGHT_DELTAS: [(i8, i8); 8] =
    [(1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2)];
const KING_DELTAS: [(i8, i8); 8] =
    [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
const BISHOP_DIRS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
const ROOK_DIRS: [(i8, i8); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

fn offset(sq: Square, df: i8, dr: i8) -> Option<Square> {
    let f = file_of(sq) as i8 + df;
    let r = rank_of(sq) as i8 + dr;
    if (0..8).contains(&f) && (0..8).contains(&r) {
        Some(square(f as u8, r as u8))
    } else {
        None
    }
}

/// True when any piece of `by` attacks `sq` (occupancy of `sq` irrelevant,
/// so this doubles as a "defended by" test).
pub fn is_attacked(pos: &Position, sq: Square, by: Color) -> bool {
    // Pawns attack diagonally toward their promotion rank, so look one rank
    // back toward the attacker's side.
    let pawn_dr = match by {
        Color::White => -1,
        Color::Black => 1,
    };
    for df in [-1, 1] {
        if let Some(from) = offset(sq, df, pawn_dr) {
            if pos.piece_at(from) == Some((by, PieceType::Pawn)) {
                return true;
            }
        }
    }
    for (df, dr) in KNIGHT_DELTAS {
        if let Some(from) = offset(sq, df, dr) {
            if pos.piece_at(from) == Some((by, PieceType::Knight)) {
                return true;
            }
        }
    }
    for (df, dr) in KING_DELTAS {
        if let Some(from) = offset(sq, df, dr) {
            if pos.piece_at(from) == Some((by, PieceType::King)) {
                return true;
            }
        }
    }
    for (dirs, straight) in [(BISHOP_DIRS, false), (ROOK_DIRS, true)] {
        for (df, dr) in dirs {
            let mut cur = sq;
            while let Some(next) = offset(cur, df, dr) {
                cur = next;
                match pos.piece_at(cur) {
                    None => continue,
                    Some((c, kind)) => {
                        if c == by
                            && (kind == PieceType::Queen
                                || kind == if straight { PieceType::Rook } else { PieceType::Bishop })
                        {
                            return true;
                        }
                        break;
                    }
                }
            }
        }
    }
    false
}

fn push_pawn_move(moves: &mut Vec<Move>, from: Square, to: Square, promo_rank: u8) {
    if rank_of(to) == promo_rank {
        for p in [PieceType::Knight, PieceType::Bishop, PieceType::Rook, PieceType::Queen] {
            moves.push(Move::promo(from, to, p));
        }
    } else {
        moves.push(Move::new(from, to));
    }
}

fn pseudo_moves(pos: &Position, mover: Color, moves: &mut Vec<Move>) {
    let (pawn_dr, start_rank, promo_rank) = match mover {
        Color::White => (1i8, 1u8, 7u8),
        Color::Black => (-1, 6, 0),
    };
    for from in 0..64u8 {
        let Some((color, kind)) = pos.piece_at(from) else { continue };
        if color != mover {
            continue;
        }
        match kind {
            PieceType::Pawn => {
                if let Some(one) = offset(from, 0, pawn_dr) {
                    if pos.piece_at(one).is_none() {
                        push_pawn_move(moves, from, one, promo_rank);
                        if rank_of(from) == start_rank {
                            let two = offset(from, 0, 2 * pawn_dr).unwrap();
                            if pos.piece_at(two).is_none() {
                                moves.push(Move::new(from, two));
                            }
                        }
                    }
                }
                for df in [-1, 1] {
                    if let Some(to) = offset(from, df, pawn_dr) {
                        match pos.piece_at(to) {
                            Some((c, _)) if c != mover => push_pawn_move(moves, from, to, promo_rank),
                            None if Some(to) == pos.en_passant() => moves.push(Move::new(from, to)),
                            _ => {}
                        }
                    }
                }
            }
            PieceType::Knight | PieceType::King => {
                let deltas = if kind == PieceType::Knight { KNIGHT_DELTAS } else { KING_DELTAS };
                for (df, dr) in deltas {
                    if let Some(to) = offset(from, df, dr) {
                        match pos.piece_at(to) {
                            Some((c, _)) if c == mover => {}
                            _ => moves.push(Move::new(from, to)),
                        }
                    }
                }
            }
            PieceType::Bishop | PieceType::Rook | PieceType::Queen => {
                let dirs: &[(i8, i8)] = match kind {
                    PieceType::Bishop => &BISHOP_DIRS,
                    PieceType::Rook => &ROOK_DIRS,
                    _ => &[BISHOP_DIRS, ROOK_DIRS].concat(),
                };
                for &(df, dr) in dirs {
                    let mut cur = from;
                    while let Some(to) = offset(cur, df, dr) {
                        cur = to;
                        match pos.piece_at(to) {
                            None => moves.push(Move::new(from, to)),
                            Some((c, _)) => {
                                if c != mover {
                                    moves.push(Move::new(from, to));
                                }
                                break;
                            }
                        }
                    }
                }
            }
        }
    }
}

fn castling_moves(pos: &Position, moves: &mut Vec<Move>) {
    let mover = pos.side_to_move();
    let rank = match mover {
        Color::White => 0u8,
        Color::Black => 7,
    };
    let (short, long) = (pos.can_castle_short(mover), pos.can_castle_long(mover));
    let enemy = mover.flip();
    let king_from = square(4, rank);
    if pos.piece_at(king_from) != Some((mover, PieceType::King)) {
        return;
    }
    if short
        && pos.piece_at(square(7, rank)) == Some((mover, PieceType::Rook))
        && pos.piece_at(square(5, rank)).is_none()
        && pos.piece_at(square(6, rank)).is_none()
        && !is_attacked(pos, king_from, enemy)
        && !is_attacked(pos, square(5, rank), enemy)
        && !is_attacked(pos, square(6, rank), enemy)
    {
        moves.push(Move::new(king_from, square(6, rank)));
    }
    if long
        && pos.piece_at(square(0, rank)) == Some((mover, PieceType::Rook))
        && pos.piece_at(square(1, rank)).is_none()
        && pos.piece_at(square(2, rank)).is_none()
        && pos.piece_at(square(3, rank)).is_none()
        && !is_attacked(pos, king_from, enemy)
        && !is_attacked(pos, square(3, rank), enemy)
        && !is_attacked(pos, square(2, rank), enemy)
    {
        moves.push(Move::new(king_from, square(2, rank)));
    }
}

/// All legal moves for the side to move, canonically ordered.
pub fn legal_moves(pos: &Position) -> Vec<Move> {
    let mover = pos.side_to_move();
    let mut moves = Vec::with_capacity(48);
    pseudo_moves(pos, mover, &mut moves);
    castling_moves(pos, &mut moves);
    moves.retain(|&mv| {
        let next = pos.apply_move(mv);
        !is_attacked(&next, next.king_square(mover), mover.flip())
    });
    moves.sort_unstable();
    moves
}

/// Pseudo-legal move count for `color` regardless of whose turn it is; the
/// mobility feature. Castling excluded; promotions counted once per target.
pub fn mobility_count(pos: &Position, color: Color) -> u32 {
    let mut moves = Vec::with_capacity(48);
    pseudo_moves(pos, color, &mut moves);
    moves
        .iter()
        .filter(|m| m.promotion.is_none() || m.promotion == Some(PieceType::Knight))
        .count() as u32
}

/// Leaf count of the legal move tree; the move generator's ground truth.
pub fn perft(pos: &Position, depth: u32) -> u64 {
    if depth == 0 {
        return 1;
    }
    let moves = legal_moves(pos);
    if depth == 1 {
        return moves.len() as u64;
    }
    moves.iter().map(|&mv| perft(&pos.apply_move(mv), depth - 1)).sum()
}
