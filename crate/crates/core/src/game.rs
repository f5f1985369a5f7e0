//! Plays full games: the brain side builds a signal pool per decision, runs
//! the module cascade, reshapes the cartridge distribution, and selects a
//! move (imagination or argmax); the opponent side plays its model's argmax.
//! Per-move plasticity and the post-game learning pass run when enabled.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{
    extract_context, extract_dist_shape, extract_sensors, file_of, game_status, legal_moves,
    material_balance, material_norm, BoardError, Color, ContextInputs, GameResult, Move,
    PieceType, Position,
};
use crate::brain::{Brain, BrainError, GameSummary, SignalPool, IMAGINATION_K};
use crate::cartridge::{Cartridge, CartridgeError, CartridgeOutput};
use crate::chain::{argmax_canonical, reshape, ChainError, ChainParams, ReshapeInput};
use crate::hebbian::RewardState;
use crate::neat::NeatError;

/// Default halfmove cap: games are adjudicated as draws at this depth. It
/// bounds runtime without truncating normal games; quick-run presets in the
/// harness use a tighter cap.
pub const DEFAULT_PLY_CAP: u32 = 200;

#[derive(Debug, Error)]
pub enum GameError {
    #[error(transparent)]
    Board(#[from] BoardError),
    #[error(transparent)]
    Cartridge(#[from] CartridgeError),
    #[error(transparent)]
    Brain(#[from] BrainError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Net(#[from] NeatError),
}

/// Switches for one game: plasticity, lookahead, and the halfmove cap.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GameConfig {
    pub ply_cap: u32,
    pub hebbian: bool,
    pub imagination: bool,
    pub imagination_k: usize,
}

impl Default for GameConfig {
    fn default() -> GameConfig {
        GameConfig {
            ply_cap: DEFAULT_PLY_CAP,
            hebbian: true,
            imagination: true,
            imagination_k: IMAGINATION_K,
        }
    }
}

/// Everything one brain decision produced, for tracing and ablation checks.
pub struct DecisionRecord {
    /// Halfmove index at which the decision was made.
    pub ply: u32,
    pub position: Position,
    pub moves: Vec<Move>,
    pub output: CartridgeOutput,
    pub params: ChainParams,
    pub reshaped: Vec<f64>,
    pub chosen: Move,
    pub agreement: bool,
}

/// One finished game from the brain's perspective.
pub struct GameOutcome {
    pub result: GameResult,
    /// 1 win, 0.5 draw, 0 loss for the brain side.
    pub score: f64,
    /// Brain decisions made.
    pub decisions: u32,
    /// Decisions matching the cartridge argmax.
    pub agreements: u32,
    /// Sum over decisions of conf·agree + (1−conf)·(1−agree).
    pub calibration_sum: f64,
    /// Sum of cartridge top-1 probabilities at the brain's decisions.
    pub confidence_sum: f64,
    pub moves: Vec<Move>,
    pub final_position: Position,
}

impl GameOutcome {
    /// Fraction of decisions matching the cartridge argmax.
    pub fn agreement(&self) -> f64 {
        self.agreements as f64 / self.decisions.max(1) as f64
    }

    /// Mean per-decision calibration.
    pub fn calibration(&self) -> f64 {
        self.calibration_sum / self.decisions.max(1) as f64
    }
}

/// Piece type each move displaces, aligned with the move list.
pub fn moved_piece_types(pos: &Position, moves: &[Move]) -> Vec<PieceType> {
    moves
        .iter()
        .map(|m| pos.piece_at(m.from).expect("legal move has a mover").1)
        .collect()
}

/// Whether `mv` captures: destination occupied, or a pawn moving
/// diagonally onto an empty square (en passant).
pub fn is_capture(pos: &Position, mv: Move) -> bool {
    if pos.piece_at(mv.to).is_some() {
        return true;
    }
    matches!(pos.piece_at(mv.from), Some((_, PieceType::Pawn)))
        && file_of(mv.from) != file_of(mv.to)
}

/// Plays one game from the start position. The brain persists across calls
/// (its learning-rate multipliers carry over); everything game-local is
/// reset here. `observer` sees every brain decision as it happens.
pub fn play_game(
    brain: &mut Brain,
    cartridge: &Cartridge,
    opponent: &Cartridge,
    brain_color: Color,
    cfg: &GameConfig,
    mut observer: Option<&mut dyn FnMut(&DecisionRecord)>,
) -> Result<GameOutcome, GameError> {
    brain.start_game();
    let mut rewards = RewardState::new(cfg.ply_cap);

    let mut pos = Position::start();
    let mut history = vec![pos.repetition_key()];
    let mut ply = 0u32;
    let mut moves_played = Vec::new();
    let mut last_capture = false;
    let mut prev_material: Option<i32> = None;

    let mut decisions = 0u32;
    let mut agreements = 0u32;
    let mut calibration_sum = 0.0;
    let mut confidence_sum = 0.0;

    let result = loop {
        if let Some(result) = game_status(&pos, &history, ply, cfg.ply_cap) {
            break result;
        }
        let mv = if pos.side_to_move() == brain_color {
            let moves = legal_moves(&pos);
            let output = cartridge.evaluate(&pos)?;
            let sensors = extract_sensors(&pos);
            let context = extract_context(
                &pos,
                &ContextInputs { ply, ply_cap: cfg.ply_cap, last_move_was_capture: last_capture },
            );
            let dist_shape = extract_dist_shape(&output.probs)?;
            let pool = SignalPool::assemble(
                &sensors,
                &context,
                &output.wdl,
                &dist_shape,
                &output.piece_attention,
            )?;
            let cascade = brain.decide(&pool)?;
            let piece_types = moved_piece_types(&pos, &moves);
            let reshaped = reshape(&ReshapeInput {
                logits: &output.logits,
                probs: &output.probs,
                piece_types: &piece_types,
                params: &cascade.params,
            })?;
            let chosen =
                brain.select_move(&pos, &reshaped, &moves, cfg.imagination, cfg.imagination_k)?;

            let cart_argmax = argmax_canonical(&output.probs);
            let agree = chosen == moves[cart_argmax];
            let conf = output.probs[cart_argmax];
            let material = material_balance(&pos, brain_color);
            // First decision sees no delta; afterwards, the swing since the
            // brain last looked (its own move plus the reply).
            let material_delta = (material - prev_material.unwrap_or(material)) as f64;
            prev_material = Some(material);
            let affect_mean = cascade.phase.affect.iter().sum::<f64>() / 5.0;

            let rec = rewards.observe(ply, agree, conf, affect_mean, material_delta);
            if cfg.hebbian {
                brain.plastic_step(&cascade, &rec);
            }

            decisions += 1;
            agreements += u32::from(agree);
            let a = f64::from(agree);
            calibration_sum += conf * a + (1.0 - conf) * (1.0 - a);
            confidence_sum += conf;

            if let Some(obs) = observer.as_deref_mut() {
                obs(&DecisionRecord {
                    ply,
                    position: pos.clone(),
                    moves: moves.clone(),
                    output,
                    params: cascade.params,
                    reshaped: reshaped.clone(),
                    chosen,
                    agreement: agree,
                });
            }
            chosen
        } else {
            opponent.opponent_move(&pos)?
        };

        last_capture = is_capture(&pos, mv);
        pos = pos.apply_move(mv);
        history.push(pos.repetition_key());
        moves_played.push(mv);
        ply += 1;
    };

    let score = result.score_for(brain_color);
    if cfg.hebbian {
        let n = decisions.max(1) as f64;
        brain.learning_pass(&GameSummary {
            result_score: score,
            final_material_norm: material_norm(material_balance(&pos, brain_color)),
            mean_agreement: agreements as f64 / n,
            mean_confidence: confidence_sum / n,
        })?;
    }

    Ok(GameOutcome {
        result,
        score,
        decisions,
        agreements,
        calibration_sum,
        confidence_sum,
        moves: moves_played,
        final_position: pos,
    })
}

/// The move a fixed parameter set would pick: argmax of the reshaped
/// distribution, no imagination.
pub fn reshaped_argmax(
    pos: &Position,
    cartridge: &Cartridge,
    params: &ChainParams,
) -> Result<Move, GameError> {
    let moves = legal_moves(pos);
    let output = cartridge.evaluate(pos)?;
    let piece_types = moved_piece_types(pos, &moves);
    let reshaped = reshape(&ReshapeInput {
        logits: &output.logits,
        probs: &output.probs,
        piece_types: &piece_types,
        params: &params.clone(),
    })?;
    Ok(moves[argmax_canonical(&reshaped)])
}

/// Plays one game with chain parameters supplied per position instead of a
/// brain: the baseline conditions (fixed, random, or offset parameters).
pub fn play_param_game(
    params_for: &mut dyn FnMut(&Position, &CartridgeOutput) -> ChainParams,
    cartridge: &Cartridge,
    opponent: &Cartridge,
    color: Color,
    ply_cap: u32,
) -> Result<GameOutcome, GameError> {
    let mut pos = Position::start();
    let mut history = vec![pos.repetition_key()];
    let mut ply = 0u32;
    let mut moves_played = Vec::new();

    let mut decisions = 0u32;
    let mut agreements = 0u32;
    let mut calibration_sum = 0.0;
    let mut confidence_sum = 0.0;

    let result = loop {
        if let Some(result) = game_status(&pos, &history, ply, ply_cap) {
            break result;
        }
        let mv = if pos.side_to_move() == color {
            let moves = legal_moves(&pos);
            let output = cartridge.evaluate(&pos)?;
            let params = params_for(&pos, &output);
            let piece_types = moved_piece_types(&pos, &moves);
            let reshaped = reshape(&ReshapeInput {
                logits: &output.logits,
                probs: &output.probs,
                piece_types: &piece_types,
                params: &params,
            })?;
            let chosen = moves[argmax_canonical(&reshaped)];

            let cart_argmax = argmax_canonical(&output.probs);
            let agree = chosen == moves[cart_argmax];
            let conf = output.probs[cart_argmax];
            decisions += 1;
            agreements += u32::from(agree);
            let a = f64::from(agree);
            calibration_sum += conf * a + (1.0 - conf) * (1.0 - a);
            confidence_sum += conf;
            chosen
        } else {
            opponent.opponent_move(&pos)?
        };
        pos = pos.apply_move(mv);
        history.push(pos.repetition_key());
        moves_played.push(mv);
        ply += 1;
    };

    Ok(GameOutcome {
        score: result.score_for(color),
        result,
        decisions,
        agreements,
        calibration_sum,
        confidence_sum,
        moves: moves_played,
        final_position: pos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::game_line;
    use crate::cartridge::CartridgeProfile;
    use crate::neat::BrainGenome;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brain(seed: u64) -> Brain {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Brain::new(BrainGenome::new_random(0, &mut rng)).unwrap()
    }

    fn expressive() -> Cartridge {
        Cartridge::Profile(CartridgeProfile::expressive())
    }

    fn opponent() -> Cartridge {
        Cartridge::Profile(CartridgeProfile::opponent_a())
    }

    #[test]
    fn games_terminate_and_respect_the_ply_cap() {
        let mut b = brain(1);
        let cfg = GameConfig { ply_cap: 40, ..GameConfig::default() };
        let out =
            play_game(&mut b, &expressive(), &opponent(), Color::White, &cfg, None).unwrap();
        assert!(out.moves.len() <= 40);
        assert!(out.decisions >= 1);
        assert!(out.decisions <= 20);
        assert!(out.agreements <= out.decisions);
        assert!(out.calibration_sum >= 0.0 && out.calibration_sum <= out.decisions as f64);
    }

    #[test]
    fn identical_setups_replay_identically() {
        let cfg = GameConfig::default();
        let mut first = brain(7);
        let mut second = brain(7);
        let a =
            play_game(&mut first, &expressive(), &opponent(), Color::Black, &cfg, None).unwrap();
        let b =
            play_game(&mut second, &expressive(), &opponent(), Color::Black, &cfg, None).unwrap();
        assert_eq!(game_line(&a.moves), game_line(&b.moves));
        assert_eq!(a.agreements, b.agreements);
        assert_eq!(a.calibration_sum.to_bits(), b.calibration_sum.to_bits());
    }

    #[test]
    fn plasticity_off_leaves_weights_untouched_and_replays_cleanly() {
        let cfg = GameConfig { hebbian: false, ..GameConfig::default() };
        let mut b = brain(3);
        let bases: Vec<Vec<f64>> =
            b.plastic.modules.iter().map(|m| m.current.clone()).collect();
        let first =
            play_game(&mut b, &expressive(), &opponent(), Color::White, &cfg, None).unwrap();
        for (module, base) in b.plastic.modules.iter().zip(&bases) {
            assert_eq!(&module.current, base);
        }
        assert_eq!(b.plastic.multipliers, [1.0; 6]);
        let second =
            play_game(&mut b, &expressive(), &opponent(), Color::White, &cfg, None).unwrap();
        assert_eq!(game_line(&first.moves), game_line(&second.moves));
    }

    #[test]
    fn plasticity_on_moves_weights_within_the_drift_bound() {
        let cfg = GameConfig::default();
        let mut b = brain(5);
        play_game(&mut b, &expressive(), &opponent(), Color::White, &cfg, None).unwrap();
        let mut moved = false;
        for module in &b.plastic.modules {
            for (w, base) in module.current.iter().zip(&module.base) {
                assert!((w - base).abs() <= 0.3 + 1e-12);
                moved |= w != base;
            }
        }
        assert!(moved, "a full game should leave some plastic trace");
        // The learning pass ran: multipliers are live values, not defaults.
        assert!(b.plastic.multipliers.iter().all(|&m| m > 0.0 && m < 2.0));
    }

    #[test]
    fn imagination_off_selects_the_reshaped_argmax_every_move() {
        let cfg = GameConfig { imagination: false, ..GameConfig::default() };
        let mut b = brain(11);
        let mut checked = 0;
        let mut all_argmax = true;
        {
            let mut obs = |rec: &DecisionRecord| {
                checked += 1;
                all_argmax &= rec.chosen == rec.moves[argmax_canonical(&rec.reshaped)];
            };
            play_game(&mut b, &expressive(), &opponent(), Color::White, &cfg, Some(&mut obs))
                .unwrap();
        }
        assert!(checked > 0);
        assert!(all_argmax);
    }

    #[test]
    fn neutral_params_agree_with_the_cartridge_everywhere() {
        let mut neutral = |_: &Position, _: &CartridgeOutput| ChainParams::neutral();
        let out =
            play_param_game(&mut neutral, &expressive(), &opponent(), Color::White, 60).unwrap();
        assert_eq!(out.agreements, out.decisions);
        assert!((out.agreement() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reshaped_argmax_with_neutral_params_is_the_cartridge_argmax() {
        let cart = expressive();
        let pos = Position::start();
        let neutral = reshaped_argmax(&pos, &cart, &ChainParams::neutral()).unwrap();
        let direct = cart.opponent_move(&pos).unwrap();
        assert_eq!(neutral, direct);
    }

    #[test]
    fn capture_detection_covers_plain_and_en_passant_takes() {
        // 1. e4 d5 2. exd5 is a plain capture; set up en passant explicitly.
        let pos = Position::start();
        let e4 = Move::from_uci("e2e4").unwrap();
        assert!(!is_capture(&pos, e4));
        let pos = pos.apply_move(e4);
        let d5 = Move::from_uci("d7d5").unwrap();
        let pos = pos.apply_move(d5);
        let exd5 = Move::from_uci("e4d5").unwrap();
        assert!(is_capture(&pos, exd5));

        let ep = Position::from_fen("8/8/8/3pP3/8/8/8/K1k5 w - d6 0 1").unwrap();
        let take = Move::from_uci("e5d6").unwrap();
        assert!(is_capture(&ep, take));
    }
}
