//! Generation loop: parallel genome evaluation through games, fitness,
//! truncation selection with elitism, deterministic reproduction, and
//! per-generation logging. A full run is a pure function of its config.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::Color;
use crate::brain::{Brain, IMAGINATION_K};
use crate::cartridge::{Cartridge, CartridgeError, CartridgeProfile};
use crate::game::{play_game, GameConfig, GameError};
use crate::neat::{
    reproduction_stream, BrainGenome, InnovationCounter, MutationConfig, NeatError,
};
use crate::rng::{stream, stream_id};

pub const DEFAULT_POPULATION: usize = 20;
pub const DEFAULT_GENERATIONS: u32 = 50;
pub const DEFAULT_GAMES: u32 = 20;
/// Fraction of offspring produced by crossover (the rest are mutated clones).
pub const CROSSOVER_FRACTION: f64 = 0.75;
pub const CHECKPOINT_VERSION: u32 = 1;

/// Stream label for initial-population construction (b = genome index).
const LABEL_INIT: u64 = 0x1217_b009;
/// Stream label base for evaluation (a = base + generation, b = index).
/// Disjoint from the reproduction label space.
const LABEL_EVAL_BASE: u64 = 0xe0a1_0000;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Net(#[from] NeatError),
    #[error(transparent)]
    Cartridge(#[from] CartridgeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("checkpoint version {got}, this build reads {expected}")]
    CheckpointVersion { expected: u32, got: u32 },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

/// How A, C, W combine into fitness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitnessMode {
    /// 0.6·A + 0.2·C + 0.2·W.
    Multi,
    /// (A + C + W) / 3.
    Equal,
}

pub fn fitness(a: f64, c: f64, w: f64, mode: FitnessMode) -> f64 {
    match mode {
        FitnessMode::Multi => 0.6 * a + 0.2 * c + 0.2 * w,
        FitnessMode::Equal => (a + c + w) / 3.0,
    }
}

/// One experiment, fully specified: identical configs produce identical
/// logs and checkpoints, byte for byte.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub population: usize,
    pub generations: u32,
    /// Games per genome evaluation; colors alternate, brain White first.
    pub games: u32,
    pub fitness_mode: FitnessMode,
    pub hebbian: bool,
    pub imagination: bool,
    /// Named profile the brain reshapes.
    pub cartridge: String,
    /// Named profile the opponent plays.
    pub opponent: String,
    pub seed: u64,
    pub ply_cap: u32,
    pub mutation: MutationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            population: DEFAULT_POPULATION,
            generations: DEFAULT_GENERATIONS,
            games: DEFAULT_GAMES,
            fitness_mode: FitnessMode::Multi,
            hebbian: true,
            imagination: true,
            cartridge: "expressive".into(),
            opponent: "opponent-a".into(),
            seed: 0,
            ply_cap: crate::game::DEFAULT_PLY_CAP,
            mutation: MutationConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        if self.population < 4 || self.population % 2 != 0 {
            return Err(EvolutionError::Config(format!(
                "population must be even and at least 4, got {}",
                self.population
            )));
        }
        if self.games == 0 {
            return Err(EvolutionError::Config("games must be at least 1".into()));
        }
        Ok(())
    }

    fn game_config(&self) -> GameConfig {
        GameConfig {
            ply_cap: self.ply_cap,
            hebbian: self.hebbian,
            imagination: self.imagination,
            imagination_k: IMAGINATION_K,
        }
    }
}

/// One genome's evaluation scores.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// Fraction of brain moves matching the cartridge argmax.
    pub agreement: f64,
    /// Mean conf·agree + (1−conf)·(1−agree).
    pub calibration: f64,
    /// (wins + 0.5·draws) / games.
    pub win_rate: f64,
    pub fitness: f64,
    pub games: u32,
    /// Total brain decisions across all games.
    pub moves: u64,
}

/// Plays `cfg.games` games with one brain instance (learning-rate
/// multipliers persist between its games) and aggregates move-weighted A
/// and C plus the game-weighted win rate.
///
/// Evaluation is deterministic — every selection is an argmax — so the
/// stream is reserved, not consumed; a sampling opponent could use it
/// without changing any call site.
pub fn evaluate_genome(
    genome: &BrainGenome,
    cartridge: &Cartridge,
    opponent: &Cartridge,
    cfg: &ExperimentConfig,
    _rng_stream: &mut ChaCha8Rng,
) -> Result<EvalResult, GameError> {
    let mut brain = Brain::new(genome.clone())?;
    let game_cfg = cfg.game_config();
    let mut decisions = 0u64;
    let mut agreements = 0u64;
    let mut calibration_sum = 0.0;
    let mut score_sum = 0.0;
    for g in 0..cfg.games {
        let color = if g % 2 == 0 { Color::White } else { Color::Black };
        let out = play_game(&mut brain, cartridge, opponent, color, &game_cfg, None)?;
        decisions += u64::from(out.decisions);
        agreements += u64::from(out.agreements);
        calibration_sum += out.calibration_sum;
        score_sum += out.score;
    }
    let d = decisions.max(1) as f64;
    let a = agreements as f64 / d;
    let c = calibration_sum / d;
    let w = score_sum / f64::from(cfg.games);
    Ok(EvalResult {
        agreement: a,
        calibration: c,
        win_rate: w,
        fitness: fitness(a, c, w, cfg.fitness_mode),
        games: cfg.games,
        moves: decisions,
    })
}

/// One population member's row in a generation record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenomeRecord {
    pub id: u64,
    pub eval: EvalResult,
    /// Carried unchanged from the previous generation (fitness recorded,
    /// not re-evaluated).
    pub elite: bool,
}

/// Everything logged for one generation, index-aligned with the population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u32,
    pub genomes: Vec<GenomeRecord>,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_id: u64,
    /// Evaluation stream ids, logged so any single evaluation can be
    /// replayed in isolation.
    pub stream_ids: Vec<u64>,
}

/// Population indices sorted best-first: fitness descending, ties broken
/// by ascending genome id.
pub fn ranked_indices(results: &[EvalResult], population: &[BrainGenome]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&x, &y| {
        results[y]
            .fitness
            .total_cmp(&results[x].fitness)
            .then(population[x].id.cmp(&population[y].id))
    });
    order
}

/// Offspring counts (crossover, clones) for a brood of `offspring`.
pub fn offspring_split(offspring: usize) -> (usize, usize) {
    let crossover = (CROSSOVER_FRACTION * offspring as f64).round() as usize;
    (crossover, offspring - crossover)
}

/// Evaluates one population and breeds the next. `carried` is the recorded
/// result for `population[0]` when it is the elite preserved from the
/// previous generation; evaluation is skipped for it. The next population
/// holds the new elite at index 0. Evaluations run in parallel and merge
/// by index; reproduction is sequential so innovation numbering is stable.
#[allow(clippy::too_many_arguments)]
pub fn step_generation(
    population: &[BrainGenome],
    carried: Option<&EvalResult>,
    cartridge: &Cartridge,
    opponent: &Cartridge,
    cfg: &ExperimentConfig,
    generation: u32,
    counter: &InnovationCounter,
    next_id: &mut u64,
) -> Result<(Vec<BrainGenome>, EvalResult, GenerationRecord), EvolutionError> {
    let stream_ids: Vec<u64> = (0..population.len())
        .map(|i| stream_id(cfg.seed, LABEL_EVAL_BASE + u64::from(generation), i as u64))
        .collect();
    let results = population
        .par_iter()
        .enumerate()
        .map(|(i, genome)| {
            if i == 0 {
                if let Some(result) = carried {
                    return Ok(*result);
                }
            }
            let mut rng = stream(cfg.seed, LABEL_EVAL_BASE + u64::from(generation), i as u64);
            evaluate_genome(genome, cartridge, opponent, cfg, &mut rng)
        })
        .collect::<Result<Vec<EvalResult>, GameError>>()?;

    let order = ranked_indices(&results, population);
    let survivors = &order[..population.len() / 2];
    let elite_idx = order[0];

    let mut next = Vec::with_capacity(population.len());
    next.push(population[elite_idx].clone());
    let elite_result = results[elite_idx];

    let offspring = population.len() - 1;
    let (crossover_count, _) = offspring_split(offspring);
    for child in 0..offspring {
        let mut rng = reproduction_stream(cfg.seed, u64::from(generation), child as u64);
        let mut genome = if child < crossover_count {
            let i = survivors[rng.random_range(0..survivors.len())];
            let j = loop {
                let j = survivors[rng.random_range(0..survivors.len())];
                if j != i {
                    break j;
                }
            };
            BrainGenome::crossover(
                &population[i],
                &population[j],
                results[i].fitness,
                results[j].fitness,
                *next_id,
                &mut rng,
            )
        } else {
            let i = survivors[rng.random_range(0..survivors.len())];
            let mut clone = population[i].clone();
            clone.id = *next_id;
            clone
        };
        *next_id += 1;
        genome.mutate(&cfg.mutation, counter, &mut rng);
        next.push(genome);
    }

    let record = GenerationRecord {
        generation,
        genomes: population
            .iter()
            .zip(&results)
            .enumerate()
            .map(|(i, (g, r))| GenomeRecord {
                id: g.id,
                eval: *r,
                elite: i == 0 && carried.is_some(),
            })
            .collect(),
        best_fitness: results[elite_idx].fitness,
        mean_fitness: results.iter().map(|r| r.fitness).sum::<f64>() / results.len() as f64,
        best_id: population[elite_idx].id,
        stream_ids,
    };
    Ok((next, elite_result, record))
}

/// A finished (or zero-generation) experiment: all records, the final
/// population (elite at index 0 once any generation has run), and the
/// elite's recorded result.
pub struct ExperimentResult {
    pub records: Vec<GenerationRecord>,
    pub population: Vec<BrainGenome>,
    pub elite: Option<EvalResult>,
}

/// Runs the full generation loop, streaming each record to `sink` as it is
/// produced so partial logs survive an abort.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    sink: &mut dyn FnMut(&GenerationRecord) -> std::io::Result<()>,
) -> Result<ExperimentResult, EvolutionError> {
    cfg.validate()?;
    let cartridge = Cartridge::Profile(CartridgeProfile::named(&cfg.cartridge)?);
    let opponent = Cartridge::Profile(CartridgeProfile::named(&cfg.opponent)?);
    let counter = InnovationCounter::new();
    let mut population: Vec<BrainGenome> = (0..cfg.population)
        .map(|i| {
            let mut rng = stream(cfg.seed, LABEL_INIT, i as u64);
            BrainGenome::new_random(i as u64, &mut rng)
        })
        .collect();
    let mut next_id = cfg.population as u64;
    let mut carried: Option<EvalResult> = None;
    let mut records = Vec::with_capacity(cfg.generations as usize);
    for generation in 0..cfg.generations {
        let (next, elite_result, record) = step_generation(
            &population,
            carried.as_ref(),
            &cartridge,
            &opponent,
            cfg,
            generation,
            &counter,
            &mut next_id,
        )?;
        sink(&record)?;
        records.push(record);
        population = next;
        carried = Some(elite_result);
    }
    Ok(ExperimentResult { records, population, elite: carried })
}

/// Generation-log CSV column header.
pub fn csv_header() -> &'static str {
    "gen,genome_idx,A,C,W,F,is_elite"
}

/// One CSV line per genome, shortest-roundtrip float formatting so equal
/// runs produce byte-identical logs.
pub fn csv_rows(record: &GenerationRecord) -> String {
    let mut out = String::new();
    for (idx, g) in record.genomes.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{:?},{:?},{:?},{:?},{}\n",
            record.generation,
            idx,
            g.eval.agreement,
            g.eval.calibration,
            g.eval.win_rate,
            g.eval.fitness,
            u8::from(g.elite),
        ));
    }
    out
}

/// Versioned population snapshot; stable field order for diff-ability.
#[derive(Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: ExperimentConfig,
    pub generations_completed: u32,
    pub population: Vec<BrainGenome>,
    pub elite: Option<EvalResult>,
}

impl Checkpoint {
    pub fn new(cfg: &ExperimentConfig, result: &ExperimentResult) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config: cfg.clone(),
            generations_completed: result.records.len() as u32,
            population: result.population.clone(),
            elite: result.elite,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Checkpoint, EvolutionError> {
        let ck: Checkpoint = serde_json::from_str(text)
            .map_err(|e| EvolutionError::Checkpoint(e.to_string()))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(EvolutionError::CheckpointVersion {
                expected: CHECKPOINT_VERSION,
                got: ck.version,
            });
        }
        Ok(ck)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), EvolutionError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &std::path::Path) -> Result<Checkpoint, EvolutionError> {
        Checkpoint::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            population: 4,
            generations: 2,
            games: 2,
            ply_cap: 12,
            seed: 9,
            ..ExperimentConfig::default()
        }
    }

    fn no_sink() -> impl FnMut(&GenerationRecord) -> std::io::Result<()> {
        |_: &GenerationRecord| Ok(())
    }

    #[test]
    fn fitness_weights_match_both_modes() {
        assert_eq!(fitness(1.0, 0.0, 0.0, FitnessMode::Multi), 0.6);
        assert_eq!(fitness(0.0, 1.0, 0.0, FitnessMode::Multi), 0.2);
        assert_eq!(fitness(0.0, 0.0, 1.0, FitnessMode::Multi), 0.2);
        assert_eq!(fitness(0.5, 0.5, 0.5, FitnessMode::Multi), 0.5);
        assert_eq!(fitness(0.5, 0.5, 0.5, FitnessMode::Equal), 0.5);
        assert_eq!(fitness(1.0, 0.0, 0.0, FitnessMode::Equal), 1.0 / 3.0);
        assert_eq!(fitness(1.0, 1.0, 1.0, FitnessMode::Equal), 1.0);
    }

    #[test]
    fn offspring_split_matches_the_default_brood() {
        assert_eq!(offspring_split(19), (14, 5));
        assert_eq!(offspring_split(9), (7, 2));
        assert_eq!(offspring_split(3), (2, 1));
    }

    #[test]
    fn ranking_breaks_fitness_ties_by_genome_id() {
        let mut rng = stream(1, 2, 3);
        let population: Vec<BrainGenome> =
            (0..4).map(|i| BrainGenome::new_random(10 - i, &mut rng)).collect();
        let even = EvalResult {
            agreement: 0.5,
            calibration: 0.5,
            win_rate: 0.5,
            fitness: 0.5,
            games: 1,
            moves: 1,
        };
        let results = vec![even; 4];
        // Ids are 10, 9, 8, 7 at indices 0..4; equal fitness sorts by id.
        assert_eq!(ranked_indices(&results, &population), vec![3, 2, 1, 0]);
        let mut boosted = results.clone();
        boosted[1].fitness = 0.9;
        assert_eq!(ranked_indices(&boosted, &population), vec![1, 3, 2, 0]);
    }

    #[test]
    fn config_validation_rejects_odd_or_tiny_populations() {
        let mut cfg = tiny_config();
        cfg.population = 5;
        assert!(cfg.validate().is_err());
        cfg.population = 2;
        assert!(cfg.validate().is_err());
        cfg.population = 4;
        cfg.games = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn evaluation_is_deterministic_and_draws_score_half() {
        let cfg = ExperimentConfig { ply_cap: 4, games: 4, ..tiny_config() };
        let cartridge = Cartridge::Profile(CartridgeProfile::expressive());
        let opponent = Cartridge::Profile(CartridgeProfile::opponent_a());
        let mut rng = stream(0, 0, 0);
        let genome = BrainGenome::new_random(0, &mut rng);
        let a = evaluate_genome(&genome, &cartridge, &opponent, &cfg, &mut stream(1, 1, 1))
            .unwrap();
        let b = evaluate_genome(&genome, &cartridge, &opponent, &cfg, &mut stream(2, 2, 2))
            .unwrap();
        assert_eq!(a, b);
        // Every 4-ply game is adjudicated a draw at the cap.
        assert_eq!(a.win_rate, 0.5);
        assert!(a.moves >= 4);
    }

    #[test]
    fn generations_keep_size_preserve_the_elite_and_favor_survivors() {
        let cfg = tiny_config();
        let cartridge = Cartridge::Profile(CartridgeProfile::expressive());
        let opponent = Cartridge::Profile(CartridgeProfile::opponent_a());
        let counter = InnovationCounter::new();
        let mut next_id = cfg.population as u64;
        let population: Vec<BrainGenome> = (0..cfg.population)
            .map(|i| {
                let mut rng = stream(cfg.seed, LABEL_INIT, i as u64);
                BrainGenome::new_random(i as u64, &mut rng)
            })
            .collect();
        let (next, elite_result, record) = step_generation(
            &population,
            None,
            &cartridge,
            &opponent,
            &cfg,
            0,
            &counter,
            &mut next_id,
        )
        .unwrap();

        assert_eq!(next.len(), cfg.population);
        assert_eq!(record.genomes.len(), cfg.population);
        assert!(record.best_fitness >= record.mean_fitness);
        assert!(record.genomes.iter().all(|g| !g.elite), "nothing carried in generation 0");

        // The elite is the best-ranked genome, copied bit-identically.
        let results: Vec<EvalResult> = record.genomes.iter().map(|g| g.eval).collect();
        let order = ranked_indices(&results, &population);
        assert_eq!(next[0], population[order[0]]);
        assert_eq!(elite_result, results[order[0]]);
        assert_eq!(record.best_id, population[order[0]].id);

        // Survivor mean fitness at least the population mean.
        let survivor_mean: f64 =
            order[..2].iter().map(|&i| results[i].fitness).sum::<f64>() / 2.0;
        assert!(survivor_mean >= record.mean_fitness);

        // Offspring get fresh sequential ids.
        let ids: Vec<u64> = next.iter().skip(1).map(|g| g.id).collect();
        assert_eq!(ids, vec![4, 5, 6]);
    }

    #[test]
    fn carried_elite_skips_reevaluation_and_keeps_best_fitness_monotone() {
        let cfg = ExperimentConfig { generations: 3, ..tiny_config() };
        let result = run_experiment(&cfg, &mut no_sink()).unwrap();
        assert_eq!(result.records.len(), 3);
        for pair in result.records.windows(2) {
            assert!(pair[1].best_fitness >= pair[0].best_fitness);
            assert!(pair[1].genomes[0].elite);
            // The carried eval is bit-identical to the previous best.
            assert_eq!(pair[1].genomes[0].eval.fitness, pair[0].best_fitness);
        }
        assert!(result.elite.is_some());
    }

    #[test]
    fn zero_generations_yield_the_initial_population_only() {
        let cfg = ExperimentConfig { generations: 0, ..tiny_config() };
        let result = run_experiment(&cfg, &mut no_sink()).unwrap();
        assert!(result.records.is_empty());
        assert!(result.elite.is_none());
        assert_eq!(result.population.len(), cfg.population);
        assert_eq!(result.population[0].id, 0);
    }

    #[test]
    fn identical_configs_reproduce_records_and_population_exactly() {
        let cfg = tiny_config();
        let mut lines_a = String::from(csv_header());
        let a = run_experiment(&cfg, &mut |r| {
            lines_a.push_str(&csv_rows(r));
            Ok(())
        })
        .unwrap();
        let mut lines_b = String::from(csv_header());
        let b = run_experiment(&cfg, &mut |r| {
            lines_b.push_str(&csv_rows(r));
            Ok(())
        })
        .unwrap();
        assert_eq!(lines_a, lines_b);
        assert_eq!(a.population, b.population);
        assert_eq!(
            serde_json::to_string(&a.records).unwrap(),
            serde_json::to_string(&b.records).unwrap()
        );
    }

    #[test]
    fn sink_errors_abort_the_run() {
        let cfg = tiny_config();
        let err = run_experiment(&cfg, &mut |_| {
            Err(std::io::Error::other("disk full"))
        });
        assert!(matches!(err, Err(EvolutionError::Io(_))));
    }

    #[test]
    fn checkpoints_roundtrip_and_reject_foreign_versions() {
        let cfg = ExperimentConfig { generations: 1, ..tiny_config() };
        let result = run_experiment(&cfg, &mut no_sink()).unwrap();
        let ck = Checkpoint::new(&cfg, &result);
        let back = Checkpoint::from_json(&ck.to_json()).unwrap();
        assert_eq!(back.population, result.population);
        assert_eq!(back.generations_completed, 1);

        let mut bumped = ck.to_json();
        bumped = bumped.replacen(
            &format!("\"version\": {CHECKPOINT_VERSION}"),
            &format!("\"version\": {}", CHECKPOINT_VERSION + 1),
            1,
        );
        assert!(matches!(
            Checkpoint::from_json(&bumped),
            Err(EvolutionError::CheckpointVersion { .. })
        ));
    }
}
