//! Brainless reference points: the null chain (neutral parameters, no
//! lookahead), a random-parameter chain redrawn per position, and a
//! temperature-only sweep. Each row reports agreement with the opponent's
//! argmax on the pinned position sample plus a win rate over played games.

use anyhow::{Context, Result};
use brainlab_core::board::{Color, Position};
use brainlab_core::cartridge::{sample_positions, Cartridge, CartridgeOutput, CartridgeProfile};
use brainlab_core::chain::ChainParams;
use brainlab_core::game::{play_param_game, reshaped_argmax};
use brainlab_core::rng::stream;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Stream labels for the random-parameter baseline; disjoint from the
/// evolution labels by construction.
const LABEL_RANDOM_SAMPLE: u64 = 0xba5e_0001;
const LABEL_RANDOM_GAME: u64 = 0xba5e_0002;

/// The temperature grid swept by the temperature-only baseline.
pub const TEMPERATURE_GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// Baseline run shape. The sample block pins the positions agreement is
/// measured on; defaults mirror the golden null-overlap record.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub cartridge: String,
    pub opponent: String,
    pub games: u32,
    pub seed: u64,
    pub ply_cap: u32,
    pub sample_seed: u64,
    pub sample_count: usize,
    pub sample_min_plies: u32,
    pub sample_max_plies: u32,
}

impl Default for BaselineConfig {
    fn default() -> BaselineConfig {
        BaselineConfig {
            cartridge: "opponent-a".into(),
            opponent: "opponent-b".into(),
            games: 20,
            seed: 0,
            ply_cap: 120,
            sample_seed: 0x9e1d,
            sample_count: 500,
            sample_min_plies: 10,
            sample_max_plies: 70,
        }
    }
}

/// One baseline row: a labelled parameter policy's agreement and win rate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaselineRow {
    pub label: String,
    /// Fraction of sample positions where the policy's move equals the
    /// opponent's argmax.
    pub agreement: f64,
    /// Score rate over the played games (wins + half draws).
    pub win_rate: f64,
    pub games: u32,
    pub sample_positions: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaselineReport {
    pub config: BaselineConfig,
    pub rows: Vec<BaselineRow>,
}

fn uniform_params(rng: &mut ChaCha8Rng) -> ChainParams {
    ChainParams {
        alpha: rng.random_range(0.3..=2.5),
        tau: rng.random_range(0.0..=0.3),
        eq_gains: std::array::from_fn(|_| rng.random_range(0.1..=3.0)),
        delta_t: rng.random_range(-1.0..=1.0),
        sat_ceiling: rng.random_range(0.1..=1.0),
        explore_eps: rng.random_range(0.0..=0.3),
        piece_weights: std::array::from_fn(|_| rng.random_range(0.1..=3.0)),
    }
}

fn delta_t_params(delta_t: f64) -> ChainParams {
    ChainParams { delta_t, ..ChainParams::neutral() }
}

/// Where a parameter draw is being used: a sample position (agreement
/// measurement) or one decision of one played game. Random baselines key
/// their streams off this so both phases replay exactly.
#[derive(Clone, Copy, Debug)]
pub enum DrawSite {
    Sample { position: u64 },
    Game { game: u32, decision: u64 },
}

/// Measure one parameter policy: agreement over the sample against the
/// opponent's argmax, then `games` full games for the win rate.
fn measure<F>(
    label: &str,
    cfg: &BaselineConfig,
    cartridge: &Cartridge,
    opponent: &Cartridge,
    sample: &[Position],
    mut params_at: F,
) -> Result<BaselineRow>
where
    F: FnMut(DrawSite) -> ChainParams,
{
    let mut agree = 0usize;
    for (i, pos) in sample.iter().enumerate() {
        let params = params_at(DrawSite::Sample { position: i as u64 });
        let chosen = reshaped_argmax(pos, cartridge, &params)?;
        if chosen == opponent.opponent_move(pos)? {
            agree += 1;
        }
    }
    let agreement = agree as f64 / sample.len() as f64;

    let mut score = 0.0;
    for game in 0..cfg.games {
        let color = if game % 2 == 0 { Color::White } else { Color::Black };
        let mut decision = 0u64;
        let mut params_for = |_pos: &Position, _out: &CartridgeOutput| {
            let p = params_at(DrawSite::Game { game, decision });
            decision += 1;
            p
        };
        let outcome = play_param_game(&mut params_for, cartridge, opponent, color, cfg.ply_cap)?;
        score += outcome.score;
    }
    Ok(BaselineRow {
        label: label.to_string(),
        agreement,
        win_rate: score / f64::from(cfg.games.max(1)),
        games: cfg.games,
        sample_positions: sample.len(),
    })
}

/// Runs all three baselines: null, random-parameter, and the ΔT sweep.
pub fn run_baselines(cfg: &BaselineConfig) -> Result<BaselineReport> {
    let cartridge = Cartridge::Profile(
        CartridgeProfile::named(&cfg.cartridge).context("cartridge profile")?,
    );
    let opponent =
        Cartridge::Profile(CartridgeProfile::named(&cfg.opponent).context("opponent profile")?);
    let sample =
        sample_positions(cfg.sample_seed, cfg.sample_count, cfg.sample_min_plies, cfg.sample_max_plies);

    let mut rows = Vec::new();

    let neutral = ChainParams::neutral();
    rows.push(measure("null", cfg, &cartridge, &opponent, &sample, |_| neutral)?);

    // Random parameters, one independent draw per position: site-keyed
    // streams so agreement and games replay exactly.
    rows.push(measure("random-params", cfg, &cartridge, &opponent, &sample, |site| {
        let (label, key) = match site {
            DrawSite::Sample { position } => (LABEL_RANDOM_SAMPLE, position),
            DrawSite::Game { game, decision } => {
                (LABEL_RANDOM_GAME, (u64::from(game) << 32) | decision)
            }
        };
        uniform_params(&mut stream(cfg.seed, label, key))
    })?);

    for delta_t in TEMPERATURE_GRID {
        let label = format!("temperature({delta_t})");
        let params = delta_t_params(delta_t);
        rows.push(measure(&label, cfg, &cartridge, &opponent, &sample, |_| params)?);
    }

    Ok(BaselineReport { config: cfg.clone(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use brainlab_core::cartridge::overlap;

    fn quick() -> BaselineConfig {
        BaselineConfig {
            games: 2,
            ply_cap: 40,
            sample_count: 30,
            ..BaselineConfig::default()
        }
    }

    #[test]
    fn null_row_equals_profile_overlap_on_the_same_sample() {
        let cfg = quick();
        let report = run_baselines(&cfg).unwrap();
        let a = CartridgeProfile::named(&cfg.cartridge).unwrap();
        let b = CartridgeProfile::named(&cfg.opponent).unwrap();
        let sample = sample_positions(
            cfg.sample_seed,
            cfg.sample_count,
            cfg.sample_min_plies,
            cfg.sample_max_plies,
        );
        let want = overlap(&a, &b, &sample).unwrap();
        assert_eq!(report.rows[0].label, "null");
        assert_eq!(report.rows[0].agreement, want);
    }

    #[test]
    fn mirror_null_row_is_perfect_agreement() {
        let cfg = BaselineConfig {
            opponent: "opponent-a".into(),
            ..quick()
        };
        let report = run_baselines(&cfg).unwrap();
        assert_eq!(report.rows[0].agreement, 1.0);
    }

    #[test]
    fn zero_temperature_row_reproduces_the_null_row() {
        let report = run_baselines(&quick()).unwrap();
        let null = &report.rows[0];
        let zero = report
            .rows
            .iter()
            .find(|r| r.label == "temperature(0)")
            .expect("grid includes 0");
        assert_eq!(zero.agreement, null.agreement);
        assert_eq!(zero.win_rate, null.win_rate);
    }

    #[test]
    fn report_is_deterministic_and_has_seven_rows() {
        let once = run_baselines(&quick()).unwrap();
        let twice = run_baselines(&quick()).unwrap();
        assert_eq!(serde_json::to_string(&once).unwrap(), serde_json::to_string(&twice).unwrap());
        assert_eq!(once.rows.len(), 7);
    }
}
