//! brainlab-core: a neuroevolution laboratory for chess-playing "brains".
//!
//! A fixed heuristic move predictor (the *cartridge*) proposes a probability
//! distribution over legal moves. A genome of eight small evolved networks
//! (the *brain*) reads position features and the predictor's own output,
//! produces the parameters of a desirability-reshaping signal chain, applies
//! it, optionally probes candidate successors ("imagination"), and adapts
//! its weights within a game via a bounded Hebbian rule. Populations of
//! brains evolve against fixed opponents, and the stats module analyses the
//! resulting logs.
//!
//! Module map:
//! - [`board`]: chess rules, FEN, move generation, feature extraction
//! - [`cartridge`]: heuristic move predictors and the replay adapter
//! - [`neat`]: per-module network genomes, mutation, crossover, activation
//! - [`brain`]: signal pool assembly, the three-phase cascade, imagination
//! - [`chain`]: the desirability-domain reshaping pipeline
//! - [`hebbian`]: within-game plasticity state, rewards, and updates
//! - [`game`]: single-game runners shared by evolution and the harness
//! - [`evolution`]: fitness, evaluation, generation stepping, experiments
//! - [`stats`]: the statistical tests and series analyses for reports

pub mod board;
pub mod brain;
pub mod cartridge;
pub mod chain;
pub mod evolution;
pub mod game;
pub mod hebbian;
pub mod neat;
pub mod rng;
pub mod stats;
