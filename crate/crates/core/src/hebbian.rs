//! Within-game plasticity: per-move reward signals per module, reward-gated
//! Hebbian weight updates with anchor decay and drift bounds, and the plastic
//! state that shadows a genome's weights during play.
//!
//! Plastic changes are strictly game-local operating state: evolution reads
//! only genome base weights, and `reset` restores them exactly at every game
//! start. The learning-rate multipliers produced by the post-game Learning
//! pass are the one piece of state that deliberately survives from one game
//! to the next within an evaluation.

use crate::neat::{BrainGenome, Slot, SLOTS};

/// Base learning rate η for the Hebbian term.
pub const ETA: f64 = 0.01;
/// Pull-back factor toward the genetic base after each update.
pub const ANCHOR_RATE: f64 = 0.01;
/// Hard bound on |current − base| per connection.
pub const DRIFT_BOUND: f64 = 0.3;
/// Reward-baseline EMA decay: b ← 0.9·b + 0.1·r.
pub const BASELINE_DECAY: f64 = 0.9;
/// Running z-scores are defined only once this many samples accumulated.
const MIN_Z_SAMPLES: u64 = 3;

/// Plastic shadow of one module: current weights drift from the genome's
/// base weights, bounded by [`DRIFT_BOUND`].
#[derive(Clone, Debug)]
pub struct ModulePlastic {
    pub base: Vec<f64>,
    pub current: Vec<f64>,
    /// Running reward baseline b.
    pub baseline: f64,
}

/// Whole-brain plastic state: one shadow per module plus the learning-rate
/// multipliers the Learning module assigned for the current game.
#[derive(Clone, Debug)]
pub struct PlasticState {
    pub modules: Vec<ModulePlastic>,
    /// Rate multipliers for [perception, memory, affect, attention,
    /// dynamics, personality]; integration and learning are fixed at 1.
    pub multipliers: [f64; 6],
}

impl PlasticState {
    pub fn new(genome: &BrainGenome) -> PlasticState {
        let modules = genome
            .modules
            .iter()
            .map(|m| {
                let base: Vec<f64> = m.connections.iter().map(|c| c.weight).collect();
                ModulePlastic { current: base.clone(), base, baseline: 0.0 }
            })
            .collect();
        PlasticState { modules, multipliers: [1.0; 6] }
    }

    /// Game-start reset: weights back to base, baselines to zero. The rate
    /// multipliers persist — they were produced for the upcoming game.
    pub fn reset(&mut self) {
        for m in self.modules.iter_mut() {
            m.current.copy_from_slice(&m.base);
            m.baseline = 0.0;
        }
    }

    pub fn rate_multiplier(&self, slot: Slot) -> f64 {
        match slot {
            Slot::Integration | Slot::Learning => 1.0,
            s => self.multipliers[s.index()],
        }
    }

    pub fn module(&self, slot: Slot) -> &ModulePlastic {
        &self.modules[slot.index()]
    }
}

/// One reward-gated update of a module's plastic weights.
///
/// Per connection: Δw = η · multiplier · a_pre · (r − b), then the anchor
/// pull w ← w + 0.01·(base − w), then the drift clamp. The baseline EMA
/// updates once afterwards. `values` are the node activations of the most
/// recent forward pass; `conn_from` maps each connection to its presynaptic
/// node slot (see [`crate::neat::Network::conn_from_slots`]).
pub fn hebbian_update(
    module: &mut ModulePlastic,
    values: &[f64],
    conn_from: &[usize],
    r: f64,
    rate_multiplier: f64,
) {
    debug_assert_eq!(module.current.len(), conn_from.len());
    let advantage = r - module.baseline;
    for (i, w) in module.current.iter_mut().enumerate() {
        let a_pre = values[conn_from[i]];
        *w += ETA * rate_multiplier * a_pre * advantage;
        let base = module.base[i];
        *w += ANCHOR_RATE * (base - *w);
        *w = w.clamp(base - DRIFT_BOUND, base + DRIFT_BOUND);
    }
    module.baseline = BASELINE_DECAY * module.baseline + (1.0 - BASELINE_DECAY) * r;
}

/// Everything a move contributes to the per-module reward signals, with the
/// running within-game statistics already folded in.
#[derive(Clone, Copy, Debug, Default)]
pub struct MoveRecord {
    /// Brain move equals the cartridge argmax.
    pub agreement: bool,
    /// Cartridge top-1 probability at this position.
    pub confidence: f64,
    /// Mean of the five affect outputs this move.
    pub affect_mean: f64,
    /// Material balance change since the brain's previous decision.
    pub material_delta: f64,
    /// Running z-score of `affect_mean` (0 until defined).
    pub affect_z: f64,
    /// Running z-score of `material_delta` (0 until defined).
    pub material_z: f64,
    /// (frozen first-half mean, running second-half mean) of agreement,
    /// populated only after the game midpoint.
    pub half_agreement: Option<(f64, f64)>,
}

/// Immediate reward for one module slot given a move record.
pub fn module_reward(slot: Slot, rec: &MoveRecord) -> f64 {
    let agree = if rec.agreement { 1.0 } else { 0.0 };
    match slot {
        // Pure prediction agreement.
        Slot::Perception | Slot::Personality | Slot::Integration | Slot::Learning => agree,
        // Calibration: rewarded for agreeing when the cartridge is
        // confident and for exploring when it is not.
        Slot::Dynamics => rec.confidence * agree + (1.0 - rec.confidence) * (1.0 - agree),
        // Psyche–material correlation via running z-scores.
        Slot::Affect => rec.affect_z * rec.material_z,
        // Agreement only counts on confident positions; neutral otherwise.
        Slot::Attention => {
            if rec.confidence > 0.5 {
                agree
            } else {
                0.5
            }
        }
        // Improvement from the first half of the game to the second.
        Slot::Memory => rec.half_agreement.map_or(0.0, |(first, second)| second - first),
    }
}

/// All eight module rewards in slot order.
pub fn all_rewards(rec: &MoveRecord) -> [f64; 8] {
    let mut out = [0.0; 8];
    for slot in SLOTS {
        out[slot.index()] = module_reward(slot, rec);
    }
    out
}

/// Welford accumulator; sample variance (n − 1 denominator).
#[derive(Clone, Copy, Debug, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Z-score of `x`, or 0 while undefined (few samples or zero variance).
    fn z(&self, x: f64) -> f64 {
        if self.n < MIN_Z_SAMPLES {
            return 0.0;
        }
        let var = self.m2 / (self.n - 1) as f64;
        if var <= 0.0 {
            return 0.0;
        }
        (x - self.mean) / var.sqrt()
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct MeanAcc {
    n: u64,
    sum: f64,
}

impl MeanAcc {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Game-local accumulator that turns raw per-move observations into
/// [`MoveRecord`]s. The game midpoint is fixed at half the ply cap; the
/// first-half agreement mean freezes there so rewards stay per-move.
#[derive(Clone, Debug)]
pub struct RewardState {
    midpoint_ply: u32,
    affect: Welford,
    material: Welford,
    first_half: MeanAcc,
    second_half: MeanAcc,
}

impl RewardState {
    pub fn new(ply_cap: u32) -> RewardState {
        RewardState {
            midpoint_ply: ply_cap / 2,
            affect: Welford::default(),
            material: Welford::default(),
            first_half: MeanAcc::default(),
            second_half: MeanAcc::default(),
        }
    }

    /// Folds one decision into the running statistics and returns the move
    /// record. The current observation enters the statistics before its own
    /// z-scores are computed.
    pub fn observe(
        &mut self,
        game_ply: u32,
        agreement: bool,
        confidence: f64,
        affect_mean: f64,
        material_delta: f64,
    ) -> MoveRecord {
        self.affect.push(affect_mean);
        self.material.push(material_delta);
        let agree = if agreement { 1.0 } else { 0.0 };
        if game_ply < self.midpoint_ply {
            self.first_half.push(agree);
        } else {
            self.second_half.push(agree);
        }
        let half_agreement = match (self.first_half.mean(), self.second_half.mean()) {
            (Some(first), Some(second)) => Some((first, second)),
            _ => None,
        };
        MoveRecord {
            agreement,
            confidence,
            affect_mean,
            material_delta,
            affect_z: self.affect.z(affect_mean),
            material_z: self.material.z(material_delta),
            half_agreement,
        }
    }
}
