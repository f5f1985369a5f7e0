//! Behavioral probes over a checkpoint: style statistics from played
//! games (openings, piece usage, game length) and a fixed-position
//! disagreement probe comparing the two best genomes against the
//! predictor's own choice.

use anyhow::{Context, Result};
use brainlab_core::board::{Color, PieceType, Position, PIECE_TYPES};
use brainlab_core::brain::Brain;
use brainlab_core::cartridge::{Cartridge, CartridgeProfile};
use brainlab_core::evolution::Checkpoint;
use brainlab_core::game::{moved_piece_types, play_game, DecisionRecord, GameConfig};
use brainlab_core::neat::BrainGenome;
use serde::{Deserialize, Serialize};

/// Style profile of one genome over M games.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StyleProfile {
    pub genome_id: u64,
    pub games: u32,
    pub agreement: f64,
    pub win_rate: f64,
    /// First brain move of each game, coordinate notation.
    pub openings: Vec<String>,
    /// Fraction of brain moves made with each piece type, canonical order.
    pub piece_usage: [f64; 6],
    pub mean_game_plies: f64,
}

/// One probe position's comparison row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeRow {
    pub fen: String,
    /// The predictor's own argmax.
    pub cartridge_move: String,
    /// Move chosen by each probed genome, in checkpoint order.
    pub genome_moves: Vec<String>,
    pub genomes_disagree: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeReport {
    pub cartridge: String,
    pub opponent: String,
    pub style: StyleProfile,
    pub positions: Vec<ProbeRow>,
}

fn style_profile(
    genome: &BrainGenome,
    cartridge: &Cartridge,
    opponent: &Cartridge,
    games: u32,
    ply_cap: u32,
) -> Result<StyleProfile> {
    let mut brain = Brain::new(genome.clone())?;
    let cfg = GameConfig { ply_cap, ..GameConfig::default() };
    let mut decisions = 0u32;
    let mut agreements = 0u32;
    let mut score = 0.0;
    let mut openings = Vec::new();
    let mut usage = [0u32; 6];
    let mut plies = 0u64;
    for game in 0..games {
        let color = if game % 2 == 0 { Color::White } else { Color::Black };
        let mut first: Option<String> = None;
        let mut observer = |rec: &DecisionRecord| {
            if first.is_none() {
                first = Some(rec.chosen.to_uci());
            }
            let (_, piece) = rec.position.piece_at(rec.chosen.from).expect("mover exists");
            usage[piece.index()] += 1;
        };
        let outcome =
            play_game(&mut brain, cartridge, opponent, color, &cfg, Some(&mut observer))?;
        decisions += outcome.decisions;
        agreements += outcome.agreements;
        score += outcome.score;
        plies += outcome.moves.len() as u64;
        openings.push(first.unwrap_or_default());
    }
    let total: u32 = usage.iter().sum();
    let piece_usage =
        std::array::from_fn(|i| f64::from(usage[i]) / f64::from(total.max(1)));
    Ok(StyleProfile {
        genome_id: genome.id,
        games,
        agreement: f64::from(agreements) / f64::from(decisions.max(1)),
        win_rate: score / f64::from(games.max(1)),
        openings,
        piece_usage,
        mean_game_plies: plies as f64 / f64::from(games.max(1)),
    })
}

/// The move a genome picks at one standalone position, treated as the
/// first decision of a fresh game.
fn standalone_choice(
    genome: &BrainGenome,
    cartridge: &Cartridge,
    pos: &Position,
    ply_cap: u32,
) -> Result<String> {
    use brainlab_core::board::{
        extract_context, extract_dist_shape, extract_sensors, legal_moves, ContextInputs,
    };
    use brainlab_core::brain::SignalPool;
    use brainlab_core::chain::{reshape, ReshapeInput};

    let mut brain = Brain::new(genome.clone())?;
    brain.start_game();
    let moves = legal_moves(pos);
    anyhow::ensure!(!moves.is_empty(), "probe position {} has no moves", pos.to_fen());
    let output = cartridge.evaluate(pos)?;
    let sensors = extract_sensors(pos);
    let context = extract_context(
        pos,
        &ContextInputs { ply: 0, ply_cap, last_move_was_capture: false },
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
    let piece_types = moved_piece_types(pos, &moves);
    let reshaped = reshape(&ReshapeInput {
        logits: &output.logits,
        probs: &output.probs,
        piece_types: &piece_types,
        params: &cascade.params,
    })?;
    let cfg = GameConfig::default();
    let chosen = brain.select_move(pos, &reshaped, &moves, cfg.imagination, cfg.imagination_k)?;
    Ok(chosen.to_uci())
}

/// Probes a checkpoint: style stats for the best genome over `games`
/// games, and per-position choices of the two best genomes on the FEN
/// list (falling back to one genome when the population has only one).
pub fn run_probe(
    checkpoint: &Checkpoint,
    fens: &[String],
    games: u32,
    opponent_id: &str,
) -> Result<ProbeReport> {
    let cartridge =
        Cartridge::Profile(CartridgeProfile::named(&checkpoint.config.cartridge)?);
    let opponent = Cartridge::Profile(CartridgeProfile::named(opponent_id)?);
    let best = checkpoint.population.first().context("empty population")?;
    let probed: Vec<&BrainGenome> = checkpoint.population.iter().take(2).collect();

    let style = style_profile(best, &cartridge, &opponent, games, checkpoint.config.ply_cap)?;

    let mut positions = Vec::new();
    for fen in fens {
        let pos = Position::from_fen(fen).with_context(|| format!("probe FEN {fen:?}"))?;
        let cartridge_move = cartridge.opponent_move(&pos)?.to_uci();
        let mut genome_moves = Vec::new();
        for genome in &probed {
            genome_moves.push(standalone_choice(genome, &cartridge, &pos, checkpoint.config.ply_cap)?);
        }
        let genomes_disagree = genome_moves.windows(2).any(|w| w[0] != w[1]);
        positions.push(ProbeRow { fen: fen.clone(), cartridge_move, genome_moves, genomes_disagree });
    }

    Ok(ProbeReport {
        cartridge: checkpoint.config.cartridge.clone(),
        opponent: opponent_id.to_string(),
        style,
        positions,
    })
}

/// Sanity helper for reports: canonical piece order used by piece_usage.
pub fn piece_order() -> [PieceType; 6] {
    PIECE_TYPES
}

#[cfg(test)]
mod tests {
    use super::*;
    use brainlab_core::evolution::{run_experiment, ExperimentConfig};

    fn tiny_checkpoint() -> Checkpoint {
        let cfg = ExperimentConfig {
            population: 4,
            generations: 2,
            games: 2,
            ply_cap: 40,
            cartridge: "opponent-a".into(),
            opponent: "opponent-b".into(),
            seed: 3,
            ..ExperimentConfig::default()
        };
        let result = run_experiment(&cfg, &mut |_| Ok(())).unwrap();
        Checkpoint::new(&cfg, &result)
    }

    #[test]
    fn probe_reports_style_and_per_position_rows() {
        let ck = tiny_checkpoint();
        let fens = vec![
            brainlab_core::board::START_FEN.to_string(),
            "r1bqkbnr/pppp1ppp/2n5/4p3/4P3/5N2/PPPP1PPP/RNBQKB1R w KQkq - 2 3".to_string(),
        ];
        let report = run_probe(&ck, &fens, 2, "opponent-b").unwrap();
        assert_eq!(report.positions.len(), 2);
        assert_eq!(report.positions[0].genome_moves.len(), 2);
        assert_eq!(report.style.openings.len(), 2);
        let usage_sum: f64 = report.style.piece_usage.iter().sum();
        assert!((usage_sum - 1.0).abs() < 1e-9);
        assert!(report.style.mean_game_plies > 0.0);

        let again = run_probe(&ck, &fens, 2, "opponent-b").unwrap();
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }
}
