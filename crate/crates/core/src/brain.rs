//! The modular brain runtime: signal-pool assembly, the three-phase module
//! cascade that turns pool signals into chain parameters, the post-game
//! Learning pass, and imagination (a one-ply subjective lookahead through
//! the Perception module).
//!
//! Phase 1 runs five modules on disjoint pool slices; Phase 2 (Personality)
//! reads all Phase-1 outputs plus the distribution shape; Phase 3
//! (Integration) reads Phase-1 plus Personality and emits the sixteen
//! sigmoid outputs that map affinely onto the chain parameter ranges.
//! Inter-module gains scale each upstream block on entry to Phases 2 and 3.

use crate::board::{extract_sensors, Move, Position};
use crate::chain::ChainParams;
use crate::hebbian::{self, MoveRecord, PlasticState};
use crate::neat::{Activation, BrainGenome, NeatError, Network, Slot, SLOTS};
use thiserror::Error;

/// Pool layout: sensors (20) + game context (8) + WDL (3) + shape (4).
pub const POOL_LEN: usize = 35;
/// Concatenated Phase-1 output width: 8 + 4 + 5 + 4 + 2.
pub const PHASE1_LEN: usize = 23;
/// Memory smoothing factor: ema = 0.3·raw + 0.7·previous.
pub const MEMORY_SMOOTHING: f64 = 0.3;
/// Initial (and game-start) memory state.
pub const MEMORY_INITIAL: f64 = 0.5;
/// Default number of imagination candidates.
pub const IMAGINATION_K: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum BrainError {
    #[error("pool component {name} has length {got}, expected {expected}")]
    PoolComponent { name: &'static str, expected: usize, got: usize },
    #[error(transparent)]
    Net(#[from] NeatError),
}

/// The shared signal pool one decision reads from. The first four blocks
/// form the canonical 35-vector; piece attention rides alongside for the
/// Attention module's slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalPool {
    pub sensors: [f64; 20],
    pub context: [f64; 8],
    /// Win/draw/loss from the side to move.
    pub wdl: [f64; 3],
    /// [normalized entropy, top-1, top-1 − top-2 gap, move count / 40].
    pub dist_shape: [f64; 4],
    pub piece_attention: [f64; 6],
}

impl SignalPool {
    pub fn assemble(
        sensors: &[f64],
        context: &[f64],
        wdl: &[f64],
        dist_shape: &[f64],
        piece_attention: &[f64],
    ) -> Result<SignalPool, BrainError> {
        fn take<const N: usize>(name: &'static str, xs: &[f64]) -> Result<[f64; N], BrainError> {
            xs.try_into()
                .map_err(|_| BrainError::PoolComponent { name, expected: N, got: xs.len() })
        }
        Ok(SignalPool {
            sensors: take("sensors", sensors)?,
            context: take("context", context)?,
            wdl: take("wdl", wdl)?,
            dist_shape: take("dist_shape", dist_shape)?,
            piece_attention: take("piece_attention", piece_attention)?,
        })
    }

    /// The canonical 35-vector [sensors | context | wdl | dist_shape].
    pub fn flat(&self) -> [f64; POOL_LEN] {
        let mut out = [0.0; POOL_LEN];
        out[..20].copy_from_slice(&self.sensors);
        out[20..28].copy_from_slice(&self.context);
        out[28..31].copy_from_slice(&self.wdl);
        out[31..].copy_from_slice(&self.dist_shape);
        out
    }
}

/// Sigmoid outputs of every module for one decision, memory already
/// smoothed. All components lie in (0, 1).
#[derive(Clone, Copy, Debug)]
pub struct PhaseOutputs {
    pub perception: [f64; 8],
    pub memory: [f64; 4],
    pub affect: [f64; 5],
    pub attention: [f64; 4],
    pub dynamics: [f64; 2],
    pub personality: [f64; 8],
    pub integration: [f64; 16],
}

impl PhaseOutputs {
    /// Phase-1 blocks concatenated in slot order.
    pub fn phase1(&self) -> [f64; PHASE1_LEN] {
        let mut out = [0.0; PHASE1_LEN];
        out[..8].copy_from_slice(&self.perception);
        out[8..12].copy_from_slice(&self.memory);
        out[12..17].copy_from_slice(&self.affect);
        out[17..21].copy_from_slice(&self.attention);
        out[21..].copy_from_slice(&self.dynamics);
        out
    }
}

/// Everything one cascade produced: the module outputs, the derived chain
/// parameters, and the raw activations plasticity reads presynaptic values
/// from (slots 0..=6; the Learning module does not run per move).
pub struct Cascade {
    pub phase: PhaseOutputs,
    pub params: ChainParams,
    pub activations: Vec<Activation>,
}

/// Affine map from Integration's 16 sigmoid outputs onto the chain
/// parameter ranges, in the frozen order [alpha, tau, g1..g5, delta_t,
/// sat_ceiling, explore_eps, w_pawn..w_king].
pub fn params_from_outputs(y: &[f64]) -> ChainParams {
    assert_eq!(y.len(), 16);
    let span = |lo: f64, hi: f64, v: f64| lo + v * (hi - lo);
    let mut eq_gains = [0.0; 5];
    for (g, &v) in eq_gains.iter_mut().zip(&y[2..7]) {
        *g = span(0.1, 3.0, v);
    }
    let mut piece_weights = [0.0; 6];
    for (w, &v) in piece_weights.iter_mut().zip(&y[10..16]) {
        *w = span(0.1, 3.0, v);
    }
    ChainParams {
        alpha: span(0.3, 2.5, y[0]),
        tau: span(0.0, 0.3, y[1]),
        eq_gains,
        delta_t: span(-1.0, 1.0, y[7]),
        sat_ceiling: span(0.1, 1.0, y[8]),
        explore_eps: span(0.0, 0.3, y[9]),
        piece_weights,
    }
}

/// Post-game summary the Learning module consumes, from the brain's
/// perspective: result score, final material, and evaluation-quality means.
#[derive(Clone, Copy, Debug)]
pub struct GameSummary {
    /// 1 win, 0.5 draw, 0 loss.
    pub result_score: f64,
    /// Normalized material balance of the final position.
    pub final_material_norm: f64,
    /// Mean per-move agreement with the cartridge argmax.
    pub mean_agreement: f64,
    /// Mean cartridge top-1 probability at the brain's decisions.
    pub mean_confidence: f64,
}

/// A genome instantiated for play: compiled networks, plastic weights,
/// game-local memory state, and the Learning module's stale activations.
pub struct Brain {
    pub genome: BrainGenome,
    nets: Vec<Network>,
    pub plastic: PlasticState,
    memory_ema: [f64; 4],
    /// Node values of the most recent Learning forward pass; zeros before
    /// the first, so Learning's own plasticity is silent until then.
    learning_values: Vec<f64>,
}

impl Brain {
    pub fn new(genome: BrainGenome) -> Result<Brain, NeatError> {
        genome.validate()?;
        let nets = genome.modules.iter().map(Network::compile).collect::<Result<Vec<_>, _>>()?;
        let plastic = PlasticState::new(&genome);
        let learning_values = vec![0.0; nets[Slot::Learning.index()].node_count()];
        Ok(Brain { genome, nets, plastic, memory_ema: [MEMORY_INITIAL; 4], learning_values })
    }

    /// Game-start reset: memory state and plastic weights return to their
    /// genome-defined values. Learning-rate multipliers and the stale
    /// Learning activations persist — they belong to the upcoming game.
    pub fn start_game(&mut self) {
        self.memory_ema = [MEMORY_INITIAL; 4];
        self.plastic.reset();
    }

    fn run(&self, slot: Slot, inputs: &[f64]) -> Result<Activation, NeatError> {
        self.nets[slot.index()].activate(&self.plastic.module(slot).current, inputs)
    }

    /// One full cascade over the pool. Advances the memory EMA.
    pub fn decide(&mut self, pool: &SignalPool) -> Result<Cascade, BrainError> {
        let perception = self.run(Slot::Perception, &pool.sensors)?;
        let memory = self.run(Slot::Memory, &pool.context)?;
        for (ema, raw) in self.memory_ema.iter_mut().zip(&memory.outputs) {
            *ema = MEMORY_SMOOTHING * raw + (1.0 - MEMORY_SMOOTHING) * *ema;
        }

        let mut affect_in = [0.0; 8];
        affect_in[..3].copy_from_slice(&pool.wdl);
        affect_in[3..7].copy_from_slice(&pool.dist_shape);
        affect_in[7] = pool.context[crate::board::CONTEXT_MATERIAL_IDX];
        let affect = self.run(Slot::Affect, &affect_in)?;

        let mut attention_in = [0.0; 16];
        attention_in[..10].copy_from_slice(&pool.sensors[..10]);
        attention_in[10..].copy_from_slice(&pool.piece_attention);
        let attention = self.run(Slot::Attention, &attention_in)?;

        let mut dynamics_in = [0.0; 6];
        dynamics_in[..3].copy_from_slice(&pool.wdl);
        dynamics_in[3..].copy_from_slice(&pool.dist_shape[..3]);
        let dynamics = self.run(Slot::Dynamics, &dynamics_in)?;

        let mut phase = PhaseOutputs {
            perception: perception.outputs.as_slice().try_into().unwrap(),
            memory: self.memory_ema,
            affect: affect.outputs.as_slice().try_into().unwrap(),
            attention: attention.outputs.as_slice().try_into().unwrap(),
            dynamics: dynamics.outputs.as_slice().try_into().unwrap(),
            personality: [0.0; 8],
            integration: [0.0; 16],
        };
        let phase1 = phase.phase1();

        // Block boundaries within the Phase-1 vector, in slot order.
        const BLOCKS: [(usize, usize); 5] = [(0, 8), (8, 12), (12, 17), (17, 21), (21, 23)];
        let gained = |gains: &[f64]| {
            let mut out = phase1;
            for (g, &(lo, hi)) in gains.iter().zip(BLOCKS.iter()) {
                for x in &mut out[lo..hi] {
                    *x *= g;
                }
            }
            out
        };

        let mut personality_in = [0.0; 27];
        personality_in[..PHASE1_LEN].copy_from_slice(&gained(&self.genome.personality_gains));
        personality_in[PHASE1_LEN..].copy_from_slice(&pool.dist_shape);
        let personality = self.run(Slot::Personality, &personality_in)?;

        let mut integration_in = [0.0; 31];
        integration_in[..PHASE1_LEN]
            .copy_from_slice(&gained(&self.genome.integration_gains[..5]));
        for (x, y) in integration_in[PHASE1_LEN..].iter_mut().zip(&personality.outputs) {
            *x = y * self.genome.integration_gains[5];
        }
        let integration = self.run(Slot::Integration, &integration_in)?;

        phase.personality = personality.outputs.as_slice().try_into().unwrap();
        phase.integration = integration.outputs.as_slice().try_into().unwrap();
        let params = params_from_outputs(&integration.outputs);
        let activations = vec![perception, memory, affect, attention, dynamics, personality, integration];
        Ok(Cascade { phase, params, activations })
    }

    /// Subjective quality of a position: the sum of Perception's outputs on
    /// its sensor vector, under the current plastic weights.
    pub fn feel(&self, sensors: &[f64; 20]) -> Result<f64, NeatError> {
        Ok(self.run(Slot::Perception, sensors)?.outputs.iter().sum())
    }

    /// One-ply lookahead over the top-k reshaped candidates: each candidate
    /// move's successor is felt through Perception, and the best feel wins.
    /// Candidates are drawn from positive-probability moves only (k clipped),
    /// ranked by reshaped probability with canonical tie-break. Feel ties
    /// fall back to higher reshaped probability, then canonical order.
    pub fn imagine(
        &self,
        pos: &Position,
        reshaped: &[f64],
        moves: &[Move],
        k: usize,
    ) -> Result<Move, BrainError> {
        debug_assert_eq!(reshaped.len(), moves.len());
        let mut candidates: Vec<usize> = (0..moves.len()).filter(|&i| reshaped[i] > 0.0).collect();
        candidates.sort_by(|&a, &b| {
            reshaped[b].partial_cmp(&reshaped[a]).unwrap().then(a.cmp(&b))
        });
        candidates.truncate(k.max(1));
        if candidates.len() == 1 {
            return Ok(moves[candidates[0]]);
        }
        let mut best: Option<(f64, usize)> = None;
        for &i in &candidates {
            let successor = pos.apply_move(moves[i]);
            let feel = self.feel(&extract_sensors(&successor))?;
            let better = match best {
                None => true,
                Some((best_feel, best_i)) => {
                    feel > best_feel
                        || (feel == best_feel
                            && (reshaped[i] > reshaped[best_i]
                                || (reshaped[i] == reshaped[best_i] && i < best_i)))
                }
            };
            if better {
                best = Some((feel, i));
            }
        }
        Ok(moves[best.expect("at least one candidate").1])
    }

    /// Post-game Learning pass: maps the game summary through the Learning
    /// module and installs its six doubled-sigmoid outputs as the rate
    /// multipliers for [perception..personality] in the next game. The
    /// pass's activations are retained as the Learning module's own
    /// presynaptic values.
    pub fn learning_pass(&mut self, summary: &GameSummary) -> Result<[f64; 6], NeatError> {
        let inputs = [
            summary.result_score,
            summary.final_material_norm,
            summary.mean_agreement,
            summary.mean_confidence,
        ];
        let act = self.run(Slot::Learning, &inputs)?;
        let mut mult = [0.0; 6];
        for (m, y) in mult.iter_mut().zip(&act.outputs) {
            *m = 2.0 * y;
        }
        self.plastic.multipliers = mult;
        self.learning_values = act.values;
        Ok(mult)
    }

    /// Per-move plasticity: every module's weights updated from its own
    /// reward and the presynaptic values of the cascade that chose the move.
    /// The Learning module uses its most recent post-game activations.
    pub fn plastic_step(&mut self, cascade: &Cascade, rec: &MoveRecord) {
        for slot in SLOTS {
            let i = slot.index();
            let values = match slot {
                Slot::Learning => &self.learning_values,
                _ => &cascade.activations[i].values,
            };
            let r = hebbian::module_reward(slot, rec);
            let mult = self.plastic.rate_multiplier(slot);
            hebbian::hebbian_update(
                &mut self.plastic.modules[i],
                values,
                self.nets[i].conn_from_slots(),
                r,
                mult,
            );
        }
    }

    /// Selects the brain's move for this decision: argmax of the reshaped
    /// distribution, or the imagination winner when lookahead is enabled.
    pub fn select_move(
        &self,
        pos: &Position,
        reshaped: &[f64],
        moves: &[Move],
        imagination: bool,
        k: usize,
    ) -> Result<Move, BrainError> {
        if imagination {
            self.imagine(pos, reshaped, moves, k)
        } else {
            Ok(moves[crate::chain::argmax_canonical(reshaped)])
        }
    }
}

/// Sanity check used by tests and the replay tooling: every legal-move list
/// the brain sees must be canonical (sorted, deduplicated).
pub fn moves_are_canonical(moves: &[Move]) -> bool {
    moves.windows(2).all(|w| w[0] < w[1])
}

#[allow(dead_code)]
fn assert_pool_layout() {
    // Layout arithmetic guard: 20 + 8 + 3 + 4 = 35.
    const _: () = assert!(20 + 8 + 3 + 4 == POOL_LEN);
    const _: () = assert!(8 + 4 + 5 + 4 + 2 == PHASE1_LEN);
}
