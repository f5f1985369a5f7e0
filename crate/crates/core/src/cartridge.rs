//! Substitute move predictors ("cartridges"): deterministic sensor-weighted
//! evaluators with distinct personalities, plus a replay adapter that serves
//! externally recorded distributions from a file.
//!
//! A cartridge scores each legal move by the profile-weighted sensor vector
//! of its successor position (negated, since successor sensors speak from
//! the opponent's seat), sharpened into logits, and reports win/draw/loss
//! from material through a logistic map plus per-piece attention derived
//! from probability mass. Everything is pure and bit-reproducible.

use crate::board::{
    extract_sensors, legal_moves, material_balance, BoardError, Move, Position, PIECE_TYPES,
};
use crate::chain::{argmax_canonical, softmax};
use crate::neat::sigmoid;
use crate::rng::stream;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Number of positions in the fixed profile-distinctness benchmark.
pub const BENCHMARK_COUNT: usize = 100;
/// Stream label for the benchmark playouts.
const BENCHMARK_SEED: u64 = 0xbe9c;

#[derive(Debug, Error)]
pub enum CartridgeError {
    #[error("no legal moves in position {0}")]
    NoLegalMoves(String),
    #[error("profiles {a} and {b} agree on every benchmark position")]
    IndistinctProfiles { a: String, b: String },
    #[error("unknown cartridge profile {0:?}")]
    UnknownProfile(String),
    #[error("replay file has no record for position {0}")]
    MissingReplayPosition(String),
    #[error("replay record for {fen} does not cover the legal moves: {reason}")]
    ReplayMoveMismatch { fen: String, reason: String },
    #[error("malformed replay record on line {line}: {reason}")]
    MalformedReplay { line: usize, reason: String },
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything a cartridge says about one position.
#[derive(Clone, Debug, PartialEq)]
pub struct CartridgeOutput {
    /// One logit per legal move, canonical move order.
    pub logits: Vec<f64>,
    /// softmax(logits), same order.
    pub probs: Vec<f64>,
    /// Win/draw/loss from the side to move; sums to 1.
    pub wdl: [f64; 3],
    /// Per piece type, probability mass of moves moving that piece,
    /// normalized so the largest component is exactly 1.
    pub piece_attention: [f64; 6],
}

/// A named heuristic predictor: a linear value function over the 20 sensor
/// features, a logit sharpness, and a WDL temperature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartridgeProfile {
    pub id: String,
    pub weights: [f64; 20],
    pub sharpness: f64,
    pub wdl_temperature: f64,
}

impl CartridgeProfile {
    /// The consumer-facing profile: balanced classical evaluation, moderate
    /// sharpness so its distributions stay soft.
    pub fn expressive() -> CartridgeProfile {
        CartridgeProfile {
            id: "expressive".into(),
            weights: [
                1.2, -0.4, 0.5, -0.3, -0.25, 0.6, 0.5, -0.4, 0.35, 0.3, 0.35, 0.25, 0.35,
                -0.3, 0.3, 0.15, 0.0, 0.45, -0.1, 0.4,
            ],
            sharpness: 4.0,
            wdl_temperature: 3.0,
        }
    }

    /// Sharp material hunter.
    pub fn opponent_a() -> CartridgeProfile {
        CartridgeProfile {
            id: "opponent-a".into(),
            weights: [
                1.6, -0.55, 0.35, -0.15, -0.1, 0.25, 0.25, -0.2, 0.2, 0.15, 0.15, 0.2, 0.45,
                -0.4, 0.15, 0.1, 0.05, 0.55, -0.2, 0.2,
            ],
            sharpness: 8.0,
            wdl_temperature: 2.5,
        }
    }

    /// Sharp positional player: pawn structure, center, and activity over
    /// raw material; slightly trade-averse.
    pub fn opponent_b() -> CartridgeProfile {
        CartridgeProfile {
            id: "opponent-b".into(),
            weights: [
                0.8, -0.25, 0.65, -0.5, -0.45, 0.8, 0.65, -0.5, 0.45, 0.45, 0.55, 0.5, 0.2,
                -0.15, 0.5, 0.3, -0.05, 0.25, 0.05, 0.55,
            ],
            sharpness: 8.0,
            wdl_temperature: 4.0,
        }
    }

    /// The material hunter with its positional senses removed: the last
    /// ten sensor weights zeroed. A strictly weaker sibling of
    /// `opponent_a`, used as the outmatched side in dominant matchups.
    pub fn opponent_a_weak() -> CartridgeProfile {
        let mut profile = CartridgeProfile::opponent_a();
        profile.id = "opponent-a-weak".into();
        for w in profile.weights[10..].iter_mut() {
            *w = 0.0;
        }
        profile
    }

    pub fn named(id: &str) -> Result<CartridgeProfile, CartridgeError> {
        match id {
            "expressive" => Ok(CartridgeProfile::expressive()),
            "opponent-a" => Ok(CartridgeProfile::opponent_a()),
            "opponent-b" => Ok(CartridgeProfile::opponent_b()),
            "opponent-a-weak" => Ok(CartridgeProfile::opponent_a_weak()),
            other => Err(CartridgeError::UnknownProfile(other.into())),
        }
    }

    /// Mover's score for one successor position: the successor's sensors
    /// speak for the side then to move (the opponent), so the weighted sum
    /// is negated.
    fn successor_score(&self, successor: &Position) -> f64 {
        let s = extract_sensors(successor);
        -self.weights.iter().zip(s.iter()).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn evaluate(&self, pos: &Position) -> Result<CartridgeOutput, CartridgeError> {
        let moves = legal_moves(pos);
        if moves.is_empty() {
            return Err(CartridgeError::NoLegalMoves(pos.to_fen()));
        }
        let logits: Vec<f64> = moves
            .iter()
            .map(|m| self.sharpness * self.successor_score(&pos.apply_move(*m)))
            .collect();
        let probs = softmax(&logits);
        let wdl = material_wdl(pos, self.wdl_temperature);
        let piece_attention = attention_from_probs(pos, &moves, &probs);
        Ok(CartridgeOutput { logits, probs, wdl, piece_attention })
    }

    /// Deterministic play: argmax of the move distribution, canonical
    /// tie-break.
    pub fn opponent_move(&self, pos: &Position) -> Result<Move, CartridgeError> {
        let moves = legal_moves(pos);
        if moves.is_empty() {
            return Err(CartridgeError::NoLegalMoves(pos.to_fen()));
        }
        let out = self.evaluate(pos)?;
        Ok(moves[argmax_canonical(&out.probs)])
    }
}

/// WDL from material: win = σ(mb/T), loss = σ(−mb/T), draw mass from
/// closeness to equality, renormalized. Symmetric and monotone in material.
fn material_wdl(pos: &Position, temperature: f64) -> [f64; 3] {
    let mb = material_balance(pos, pos.side_to_move()) as f64;
    let win = sigmoid(mb / temperature);
    let loss = sigmoid(-mb / temperature);
    let draw = 1.0 - (win - loss).abs();
    let total = win + draw + loss;
    [win / total, draw / total, loss / total]
}

/// Probability mass per moved piece type, normalized to max 1.
fn attention_from_probs(pos: &Position, moves: &[Move], probs: &[f64]) -> [f64; 6] {
    let mut mass = [0.0; 6];
    for (m, p) in moves.iter().zip(probs.iter()) {
        let (_, piece) = pos.piece_at(m.from).expect("legal move has a mover");
        mass[piece.index()] += p;
    }
    let max = mass.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        for x in mass.iter_mut() {
            *x /= max;
        }
    }
    mass
}

/// Fraction of positions on which the two profiles pick the same argmax.
pub fn overlap(
    a: &CartridgeProfile,
    b: &CartridgeProfile,
    positions: &[Position],
) -> Result<f64, CartridgeError> {
    assert!(!positions.is_empty());
    let mut same = 0usize;
    for pos in positions {
        if a.opponent_move(pos)? == b.opponent_move(pos)? {
            same += 1;
        }
    }
    Ok(same as f64 / positions.len() as f64)
}

/// Construction-time check: profiles must disagree somewhere on the fixed
/// benchmark, otherwise they are the same predictor in disguise.
pub fn assert_distinct(
    a: &CartridgeProfile,
    b: &CartridgeProfile,
) -> Result<(), CartridgeError> {
    let positions = benchmark_positions();
    if overlap(a, b, &positions)? < 1.0 {
        Ok(())
    } else {
        Err(CartridgeError::IndistinctProfiles { a: a.id.clone(), b: b.id.clone() })
    }
}

/// Deterministic positions drawn from seeded random playouts; every
/// returned position has at least one legal move.
pub fn sample_positions(
    seed: u64,
    count: usize,
    min_plies: u32,
    max_plies: u32,
) -> Vec<Position> {
    let mut out = Vec::with_capacity(count);
    let mut attempt = 0u64;
    while out.len() < count {
        let mut rng = stream(seed, 0x9051_7105, attempt);
        attempt += 1;
        let target = rng.random_range(min_plies..=max_plies);
        let mut pos = Position::start();
        let mut alive = true;
        for _ in 0..target {
            let moves = legal_moves(&pos);
            if moves.is_empty() {
                alive = false;
                break;
            }
            pos = pos.apply_move(moves[rng.random_range(0..moves.len())]);
        }
        if alive && !legal_moves(&pos).is_empty() {
            out.push(pos);
        }
    }
    out
}

/// The fixed 100-position benchmark used for profile distinctness.
pub fn benchmark_positions() -> Vec<Position> {
    sample_positions(BENCHMARK_SEED, BENCHMARK_COUNT, 6, 60)
}

/// A recorded distribution for one position of a replay file.
#[derive(Clone, Debug)]
struct ReplayRecord {
    moves: Vec<(Move, f64)>,
    wdl: [f64; 3],
    piece_attention: [f64; 6],
}

/// Cartridge backed by a file of per-position distributions, so externally
/// produced model outputs can stand in for the heuristic profiles. One
/// tab-separated record per line: FEN, alternating move/logit fields, three
/// WDL values, six attention values. A position missing from the file is a
/// hard error.
#[derive(Clone, Debug, Default)]
pub struct ReplayCartridge {
    records: HashMap<String, ReplayRecord>,
}

impl ReplayCartridge {
    pub fn from_file(path: &std::path::Path) -> Result<ReplayCartridge, CartridgeError> {
        ReplayCartridge::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<ReplayCartridge, CartridgeError> {
        let mut records = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let line_no = idx + 1;
            let bad = |reason: &str| CartridgeError::MalformedReplay {
                line: line_no,
                reason: reason.into(),
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 1 + 2 + 9 {
                return Err(bad("too few fields"));
            }
            let fen = fields[0].to_string();
            Position::from_fen(&fen)?;
            let tail = &fields[1..];
            let move_fields = tail.len() - 9;
            if move_fields == 0 || move_fields % 2 != 0 {
                return Err(bad("move/logit fields must come in pairs"));
            }
            let mut moves = Vec::with_capacity(move_fields / 2);
            for pair in tail[..move_fields].chunks(2) {
                let mv = Move::from_uci(pair[0])
                    .map_err(|_| bad(&format!("bad move {:?}", pair[0])))?;
                let logit: f64 =
                    pair[1].parse().map_err(|_| bad(&format!("bad logit {:?}", pair[1])))?;
                moves.push((mv, logit));
            }
            let mut nums = [0.0; 9];
            for (slot, field) in nums.iter_mut().zip(&tail[move_fields..]) {
                *slot = field.parse().map_err(|_| bad(&format!("bad number {field:?}")))?;
            }
            let record = ReplayRecord {
                moves,
                wdl: [nums[0], nums[1], nums[2]],
                piece_attention: nums[3..9].try_into().unwrap(),
            };
            records.insert(fen, record);
        }
        Ok(ReplayCartridge { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn evaluate(&self, pos: &Position) -> Result<CartridgeOutput, CartridgeError> {
        let moves = legal_moves(pos);
        if moves.is_empty() {
            return Err(CartridgeError::NoLegalMoves(pos.to_fen()));
        }
        let fen = pos.to_fen();
        let record = self
            .records
            .get(&fen)
            .ok_or_else(|| CartridgeError::MissingReplayPosition(fen.clone()))?;
        // The record must cover the legal move set exactly; logits are
        // re-ordered into canonical order.
        if record.moves.len() != moves.len() {
            return Err(CartridgeError::ReplayMoveMismatch {
                fen,
                reason: format!("{} recorded vs {} legal", record.moves.len(), moves.len()),
            });
        }
        let mut logits = Vec::with_capacity(moves.len());
        for m in &moves {
            match record.moves.iter().find(|(rm, _)| rm == m) {
                Some((_, logit)) => logits.push(*logit),
                None => {
                    return Err(CartridgeError::ReplayMoveMismatch {
                        fen,
                        reason: format!("move {} not recorded", m.to_uci()),
                    })
                }
            }
        }
        let probs = softmax(&logits);
        Ok(CartridgeOutput {
            logits,
            probs,
            wdl: record.wdl,
            piece_attention: record.piece_attention,
        })
    }
}

/// Any move predictor the game loop can consult.
#[derive(Clone, Debug)]
pub enum Cartridge {
    Profile(CartridgeProfile),
    Replay(ReplayCartridge),
}

impl Cartridge {
    pub fn evaluate(&self, pos: &Position) -> Result<CartridgeOutput, CartridgeError> {
        match self {
            Cartridge::Profile(p) => p.evaluate(pos),
            Cartridge::Replay(r) => r.evaluate(pos),
        }
    }

    pub fn opponent_move(&self, pos: &Position) -> Result<Move, CartridgeError> {
        let moves = legal_moves(pos);
        if moves.is_empty() {
            return Err(CartridgeError::NoLegalMoves(pos.to_fen()));
        }
        let out = self.evaluate(pos)?;
        Ok(moves[argmax_canonical(&out.probs)])
    }

    pub fn id(&self) -> &str {
        match self {
            Cartridge::Profile(p) => &p.id,
            Cartridge::Replay(_) => "replay",
        }
    }
}

/// Serialize one evaluated position as a replay-file line.
pub fn replay_line(pos: &Position, out: &CartridgeOutput, moves: &[Move]) -> String {
    let mut fields = vec![pos.to_fen()];
    for (m, logit) in moves.iter().zip(&out.logits) {
        fields.push(m.to_uci());
        fields.push(format!("{logit:?}"));
    }
    for v in out.wdl.iter().chain(out.piece_attention.iter()) {
        fields.push(format!("{v:?}"));
    }
    fields.join("\t")
}

/// Total piece-type usage mass helper for behavioral probes: which piece
/// types a distribution favours.
pub fn piece_mass(pos: &Position, moves: &[Move], probs: &[f64]) -> [f64; 6] {
    let mut mass = [0.0; 6];
    for (m, p) in moves.iter().zip(probs.iter()) {
        if let Some((_, piece)) = pos.piece_at(m.from) {
            mass[piece.index()] += p;
        }
    }
    mass
}

#[allow(dead_code)]
fn piece_order_is_frozen() {
    // The attention vector is indexed by PieceType order; keep it pinned.
    const _: () = assert!(PIECE_TYPES.len() == 6);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::PieceType;

    #[test]
    fn evaluate_is_bit_deterministic() {
        let profile = CartridgeProfile::expressive();
        let pos = Position::start();
        let a = profile.evaluate(&pos).unwrap();
        let b = profile.evaluate(&pos).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn probs_are_the_shared_softmax_of_logits() {
        let profile = CartridgeProfile::opponent_a();
        for pos in sample_positions(7, 20, 4, 30) {
            let out = profile.evaluate(&pos).unwrap();
            let again = softmax(&out.logits);
            for (p, q) in out.probs.iter().zip(&again) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
            let sum: f64 = out.probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn singleton_move_gets_probability_one() {
        let pos = Position::from_fen("7k/5K2/1Q6/8/8/8/8/8 b - - 0 1").unwrap();
        let out = CartridgeProfile::expressive().evaluate(&pos).unwrap();
        assert_eq!(out.probs, vec![1.0]);
    }

    #[test]
    fn start_position_wdl_is_symmetric() {
        let out = CartridgeProfile::expressive().evaluate(&Position::start()).unwrap();
        assert!((out.wdl[0] - out.wdl[2]).abs() < 1e-6);
        let sum: f64 = out.wdl.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        // Equal material → draw mass dominates: [0.25, 0.5, 0.25].
        assert!((out.wdl[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn material_advantage_raises_win_mass() {
        // White up a queen.
        let pos = Position::from_fen("rnb1kbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1")
            .unwrap();
        let out = CartridgeProfile::expressive().evaluate(&pos).unwrap();
        assert!(out.wdl[0] > out.wdl[2]);
        assert!(out.wdl.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn attention_is_normalized_with_a_unit_component() {
        let profile = CartridgeProfile::opponent_b();
        for pos in sample_positions(11, 20, 4, 40) {
            let out = profile.evaluate(&pos).unwrap();
            assert!(out.piece_attention.iter().all(|&x| (0.0..=1.0).contains(&x)));
            assert!(out.piece_attention.iter().any(|&x| x == 1.0));
        }
        // From the start only pawns and knights can move.
        let out = profile.evaluate(&Position::start()).unwrap();
        assert!(out.piece_attention[PieceType::Pawn.index()] > 0.0);
        assert!(out.piece_attention[PieceType::Knight.index()] > 0.0);
        assert_eq!(out.piece_attention[PieceType::Queen.index()], 0.0);
    }

    #[test]
    fn opponent_move_is_the_brute_force_best_successor() {
        let profile = CartridgeProfile::expressive();
        for pos in sample_positions(13, 10, 4, 30) {
            let moves = legal_moves(&pos);
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (i, m) in moves.iter().enumerate() {
                let score = profile.successor_score(&pos.apply_move(*m));
                if score > best_score {
                    best_score = score;
                    best = i;
                }
            }
            assert_eq!(profile.opponent_move(&pos).unwrap(), moves[best]);
        }
    }

    #[test]
    fn overlap_of_a_profile_with_itself_is_one() {
        let profile = CartridgeProfile::opponent_a();
        let positions = sample_positions(17, 25, 4, 30);
        assert_eq!(overlap(&profile, &profile, &positions).unwrap(), 1.0);
    }

    #[test]
    fn shipped_profiles_are_pairwise_distinct() {
        let e = CartridgeProfile::expressive();
        let a = CartridgeProfile::opponent_a();
        let b = CartridgeProfile::opponent_b();
        assert_distinct(&e, &a).unwrap();
        assert_distinct(&e, &b).unwrap();
        assert_distinct(&a, &b).unwrap();
        // A profile is never distinct from itself.
        assert!(matches!(
            assert_distinct(&a, &a),
            Err(CartridgeError::IndistinctProfiles { .. })
        ));
    }

    #[test]
    fn benchmark_positions_are_fixed_and_playable() {
        let a = benchmark_positions();
        let b = benchmark_positions();
        assert_eq!(a.len(), BENCHMARK_COUNT);
        assert_eq!(a, b);
        for pos in &a {
            assert!(!legal_moves(pos).is_empty());
        }
    }

    #[test]
    fn replay_round_trips_an_evaluated_position() {
        let profile = CartridgeProfile::expressive();
        let pos = Position::start();
        let moves = legal_moves(&pos);
        let out = profile.evaluate(&pos).unwrap();
        let line = replay_line(&pos, &out, &moves);
        let replay = ReplayCartridge::parse(&line).unwrap();
        assert_eq!(replay.len(), 1);
        let back = replay.evaluate(&pos).unwrap();
        assert_eq!(back, out);
    }

    #[test]
    fn replay_missing_position_is_a_hard_error() {
        let replay = ReplayCartridge::parse("").unwrap();
        assert!(matches!(
            replay.evaluate(&Position::start()),
            Err(CartridgeError::MissingReplayPosition(_))
        ));
    }

    #[test]
    fn replay_rejects_incomplete_move_coverage() {
        let pos = Position::start();
        let moves = legal_moves(&pos);
        let out = CartridgeProfile::expressive().evaluate(&pos).unwrap();
        let mut line = replay_line(&pos, &out, &moves);
        // Drop one move/logit pair: strip two tab-separated fields after
        // the FEN.
        let fields: Vec<&str> = line.split('\t').collect();
        let mut kept = vec![fields[0]];
        kept.extend(&fields[3..]);
        line = kept.join("\t");
        let replay = ReplayCartridge::parse(&line).unwrap();
        assert!(matches!(
            replay.evaluate(&pos),
            Err(CartridgeError::ReplayMoveMismatch { .. })
        ));
    }

    #[test]
    fn replay_rejects_malformed_lines() {
        assert!(matches!(
            ReplayCartridge::parse("not-a-fen\ta2a3\t0.5\t1\t1\t1\t1\t1\t1\t1\t1\t1"),
            Err(CartridgeError::Board(_))
        ));
        let err = ReplayCartridge::parse("8/8/2k5/5q2/5n2/8/5K2/8 b - - 0 1\tbroken").unwrap_err();
        assert!(matches!(err, CartridgeError::MalformedReplay { line: 1, .. }));
    }

    #[test]
    fn sampled_positions_are_deterministic_and_in_depth_range() {
        let a = sample_positions(3, 30, 10, 20);
        let b = sample_positions(3, 30, 10, 20);
        assert_eq!(a, b);
        for pos in &a {
            assert!(!legal_moves(pos).is_empty());
        }
    }
}
