//! Within-game-learning ablation: plays a checkpointed genome with
//! plasticity off, then on, against each listed opponent, with identical
//! colors and game counts, and reports each cell with its move lists so
//! behavioral differences are inspectable.

use anyhow::{Context, Result};
use brainlab_core::board::Color;
use brainlab_core::brain::Brain;
use brainlab_core::cartridge::{Cartridge, CartridgeProfile};
use brainlab_core::evolution::Checkpoint;
use brainlab_core::game::{play_game, GameConfig};
use serde::{Deserialize, Serialize};

/// One (opponent × plasticity) cell of the ablation grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationCell {
    pub opponent: String,
    pub hebbian: bool,
    pub games: u32,
    pub agreement: f64,
    pub win_rate: f64,
    /// Move lists in coordinate notation, one string per game.
    pub game_moves: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationReport {
    pub genome_id: u64,
    pub cartridge: String,
    pub opponents: Vec<String>,
    pub games_per_cell: u32,
    pub cells: Vec<AblationCell>,
}

fn play_cell(
    brain: &mut Brain,
    cartridge: &Cartridge,
    opponent_id: &str,
    games: u32,
    ply_cap: u32,
    hebbian: bool,
) -> Result<AblationCell> {
    let opponent = Cartridge::Profile(CartridgeProfile::named(opponent_id)?);
    let cfg = GameConfig { ply_cap, hebbian, ..GameConfig::default() };
    let mut decisions = 0u32;
    let mut agreements = 0u32;
    let mut score = 0.0;
    let mut game_moves = Vec::with_capacity(games as usize);
    for game in 0..games {
        let color = if game % 2 == 0 { Color::White } else { Color::Black };
        let outcome = play_game(brain, cartridge, &opponent, color, &cfg, None)
            .with_context(|| format!("vs {opponent_id}, game {game}"))?;
        decisions += outcome.decisions;
        agreements += outcome.agreements;
        score += outcome.score;
        game_moves.push(
            outcome.moves.iter().map(|m| m.to_uci()).collect::<Vec<_>>().join(" "),
        );
    }
    Ok(AblationCell {
        opponent: opponent_id.to_string(),
        hebbian,
        games,
        agreement: f64::from(agreements) / f64::from(decisions.max(1)),
        win_rate: score / f64::from(games.max(1)),
        game_moves,
    })
}

/// Plays the checkpoint's best genome with plasticity off then on against
/// each opponent. The brain is rebuilt per cell, so every cell starts from
/// the genome's base weights and multipliers.
pub fn run_hebbian_ablation(
    checkpoint: &Checkpoint,
    opponents: &[String],
    games: u32,
) -> Result<AblationReport> {
    anyhow::ensure!(!opponents.is_empty(), "no opponents listed");
    let genome = checkpoint
        .population
        .first()
        .context("checkpoint population is empty")?;
    let cartridge =
        Cartridge::Profile(CartridgeProfile::named(&checkpoint.config.cartridge)?);
    let ply_cap = checkpoint.config.ply_cap;

    let mut cells = Vec::new();
    for opponent in opponents {
        for hebbian in [false, true] {
            let mut brain = Brain::new(genome.clone())?;
            cells.push(play_cell(&mut brain, &cartridge, opponent, games, ply_cap, hebbian)?);
        }
    }
    Ok(AblationReport {
        genome_id: genome.id,
        cartridge: checkpoint.config.cartridge.clone(),
        opponents: opponents.to_vec(),
        games_per_cell: games,
        cells,
    })
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
            cartridge: "expressive".into(),
            opponent: "expressive".into(),
            seed: 5,
            ..ExperimentConfig::default()
        };
        let result = run_experiment(&cfg, &mut |_| Ok(())).unwrap();
        Checkpoint::new(&cfg, &result)
    }

    #[test]
    fn grid_has_two_cells_per_opponent_and_replays_deterministically() {
        let ck = tiny_checkpoint();
        let opponents = vec!["expressive".to_string(), "opponent-a".to_string()];
        let report = run_hebbian_ablation(&ck, &opponents, 2).unwrap();
        assert_eq!(report.cells.len(), 4);
        for opponent in &opponents {
            let of: Vec<_> = report.cells.iter().filter(|c| &c.opponent == opponent).collect();
            assert_eq!(of.len(), 2);
            assert!(!of[0].hebbian && of[1].hebbian);
        }

        let again = run_hebbian_ablation(&ck, &opponents, 2).unwrap();
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn off_cells_match_a_fresh_reset_replay() {
        let ck = tiny_checkpoint();
        let opponents = vec!["opponent-a".to_string()];
        let report = run_hebbian_ablation(&ck, &opponents, 3).unwrap();
        let off = report.cells.iter().find(|c| !c.hebbian).unwrap();

        // Replay each game with a freshly built brain: plasticity off means
        // no state can carry between games, so per-game replays must match.
        let cartridge = Cartridge::Profile(CartridgeProfile::named(&ck.config.cartridge).unwrap());
        let opponent = Cartridge::Profile(CartridgeProfile::named("opponent-a").unwrap());
        let cfg = GameConfig { ply_cap: ck.config.ply_cap, hebbian: false, ..GameConfig::default() };
        for (game, moves) in off.game_moves.iter().enumerate() {
            let mut fresh = Brain::new(ck.population[0].clone()).unwrap();
            let color = if game % 2 == 0 { Color::White } else { Color::Black };
            let outcome = play_game(&mut fresh, &cartridge, &opponent, color, &cfg, None).unwrap();
            let replay =
                outcome.moves.iter().map(|m| m.to_uci()).collect::<Vec<_>>().join(" ");
            assert_eq!(&replay, moves, "game {game} diverged from reset replay");
        }
    }
}
