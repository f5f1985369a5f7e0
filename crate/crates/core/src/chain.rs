//! The desirability signal chain: a deterministic pipeline that reshapes a
//! predictor's move distribution under brain-supplied parameters.
//!
//! Stage order is frozen:
//!
//! 1. gate      — moves with probability ≤ τ drop to −∞ desirability
//! 2. compress  — d_i = α · ln p_i
//! 3. equalize  — five rank bands, d_i += ln(g_band) · 0.4
//! 4. pieces    — d_i += ln(w_piece) · 0.4
//! 5. softmax   — at temperature T = 1 + 0.5 · ΔT
//! 6. saturate  — iterative ceiling clamp with renormalization
//! 7. explore   — blend with the uniform distribution by ε
//!
//! With neutral parameters every stage is the identity (the gate passes all
//! positive-probability moves, ln-gains are zero, T = 1, the ceiling never
//! binds, ε = 0), so reshaping reproduces the input distribution to within
//! floating-point rounding. That identity is emergent, not special-cased.

use crate::board::PieceType;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Equalizer/piece-weight sensitivity; scales every log-gain contribution.
pub const SENSITIVITY: f64 = 0.4;

pub const EQ_BANDS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("empty move distribution")]
    Empty,
    #[error("misaligned inputs: {logits} logits, {probs} probs, {pieces} piece types")]
    Misaligned { logits: usize, probs: usize, pieces: usize },
    #[error("probs[{index}] = {got} does not match softmax(logits)[{index}] = {expected}")]
    InconsistentProbs { index: usize, expected: f64, got: f64 },
}

/// The sixteen chain parameters, in the frozen order the integration module
/// emits them: α, τ, g1..g5, ΔT, ceiling, ε, then the six piece weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Desirability compression exponent, range [0.3, 2.5].
    pub alpha: f64,
    /// Gate threshold on input probability, range [0, 0.3].
    pub tau: f64,
    /// Equalizer band gains (band 1 = strongest-ranked moves), range [0.1, 3.0].
    pub eq_gains: [f64; EQ_BANDS],
    /// Temperature offset, range [−1, 1]; T = 1 + 0.5 · ΔT.
    pub delta_t: f64,
    /// Probability ceiling, range [0.1, 1.0].
    pub sat_ceiling: f64,
    /// Uniform exploration mix, range [0, 0.3].
    pub explore_eps: f64,
    /// Per-piece-type desirability weights in canonical piece order
    /// (pawn, knight, bishop, rook, queen, king), range [0.1, 3.0].
    pub piece_weights: [f64; 6],
}

impl ChainParams {
    /// The identity configuration: reshaping changes nothing.
    pub fn neutral() -> ChainParams {
        ChainParams {
            alpha: 1.0,
            tau: 0.0,
            eq_gains: [1.0; EQ_BANDS],
            delta_t: 0.0,
            sat_ceiling: 1.0,
            explore_eps: 0.0,
            piece_weights: [1.0; 6],
        }
    }
}

/// One move distribution plus what the chain needs to reshape it. `probs`
/// must equal `softmax(logits)`; both are carried so downstream consumers
/// never recompute the softmax inconsistently.
#[derive(Clone, Copy, Debug)]
pub struct ReshapeInput<'a> {
    pub logits: &'a [f64],
    pub probs: &'a [f64],
    /// The piece each move displaces, aligned with the move list.
    pub piece_types: &'a [PieceType],
    pub params: &'a ChainParams,
}

/// Numerically stable softmax; the single softmax used everywhere.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// First index holding the strictly largest value: the canonical tie-break
/// shared by every argmax in the system.
pub fn argmax_canonical(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Equalizer band (1..=5) for a move at `rank` (0 = highest probability)
/// among `n_moves`. Bands are contiguous and near-equal; when `n_moves` is
/// not divisible by five the earlier bands take the remainder, and with
/// fewer than five moves the lower bands are used first.
pub fn band_of(rank: usize, n_moves: usize) -> usize {
    debug_assert!(rank < n_moves, "rank {rank} out of range for {n_moves} moves");
    let base = n_moves / EQ_BANDS;
    let rem = n_moves % EQ_BANDS;
    let big = rem * (base + 1);
    if rank < big {
        rank / (base + 1) + 1
    } else {
        (rank - big) / base + rem + 1
    }
}

/// Runs the chain. Returns the reshaped distribution, aligned with the
/// input move order, summing to 1.
///
/// If the gate would remove every move, the single highest-probability move
/// (canonical tie-break) is exempted so the output is never empty.
pub fn reshape(input: &ReshapeInput) -> Result<Vec<f64>, ChainError> {
    let n = input.probs.len();
    if n == 0 {
        return Err(ChainError::Empty);
    }
    if input.logits.len() != n || input.piece_types.len() != n {
        return Err(ChainError::Misaligned {
            logits: input.logits.len(),
            probs: n,
            pieces: input.piece_types.len(),
        });
    }
    let check = softmax(input.logits);
    for (i, (&got, &expected)) in input.probs.iter().zip(check.iter()).enumerate() {
        if (got - expected).abs() > 1e-9 {
            return Err(ChainError::InconsistentProbs { index: i, expected, got });
        }
    }

    let p = input.probs;
    let params = input.params;

    // 1. Gate, with the never-empty fallback.
    let mut survives: Vec<bool> = p.iter().map(|&pi| pi > params.tau).collect();
    if !survives.iter().any(|&s| s) {
        survives[argmax_canonical(p)] = true;
    }

    // 2. Compression into the log desirability domain.
    let mut d: Vec<f64> = (0..n)
        .map(|i| if survives[i] { params.alpha * p[i].ln() } else { f64::NEG_INFINITY })
        .collect();

    // 3. Equalizer: rank the survivors by input probability (descending,
    // canonical tie-break) and add the band log-gain.
    let mut ranked: Vec<usize> = (0..n).filter(|&i| survives[i]).collect();
    ranked.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap().then(a.cmp(&b)));
    let n_survivors = ranked.len();
    for (rank, &i) in ranked.iter().enumerate() {
        d[i] += params.eq_gains[band_of(rank, n_survivors) - 1].ln() * SENSITIVITY;
    }

    // 4. Piece weighting.
    for i in 0..n {
        if survives[i] {
            d[i] += params.piece_weights[input.piece_types[i].index()].ln() * SENSITIVITY;
        }
    }

    // 5. Softmax at the brain's temperature. −∞ entries get exactly zero.
    let temperature = 1.0 + 0.5 * params.delta_t;
    let scaled: Vec<f64> = d.iter().map(|&di| di / temperature).collect();
    let mut out = softmax(&scaled);

    // 6. Saturation: clamp entries above the ceiling and hand the excess to
    // the rest, repeating until stable. Infeasible ceilings (ceiling ×
    // positive-move count < 1) skip the stage entirely.
    saturate(&mut out, params.sat_ceiling);

    // 7. Exploration blend.
    if params.explore_eps > 0.0 {
        let uniform = 1.0 / n as f64;
        for o in out.iter_mut() {
            *o = (1.0 - params.explore_eps) * *o + params.explore_eps * uniform;
        }
    }

    Ok(out)
}

fn saturate(p: &mut [f64], ceiling: f64) {
    let positive = p.iter().filter(|&&x| x > 0.0).count() as f64;
    if ceiling * positive < 1.0 {
        return;
    }
    let n = p.len();
    let mut clamped = vec![false; n];
    loop {
        let mut newly = false;
        for i in 0..n {
            if !clamped[i] && p[i] > ceiling + 1e-15 {
                clamped[i] = true;
                newly = true;
            }
        }
        if !newly {
            return;
        }
        let fixed: f64 = clamped.iter().filter(|&&c| c).count() as f64 * ceiling;
        let free_mass: f64 = (0..n).filter(|&i| !clamped[i]).map(|i| p[i]).sum();
        let rest = (1.0 - fixed).max(0.0);
        for i in 0..n {
            if clamped[i] {
                p[i] = ceiling;
            } else if free_mass > 0.0 {
                p[i] *= rest / free_mass;
            }
        }
    }
}

/// Optional per-move trace for the analysis pipeline: the parameters plus
/// the distributions on either side of the chain, one tab-separated line.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub params: ChainParams,
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
}

impl TraceRecord {
    pub fn tsv_line(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let p = &self.params;
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.alpha,
            p.tau,
            join(&p.eq_gains),
            p.delta_t,
            p.sat_ceiling,
            p.explore_eps,
            join(&p.piece_weights),
            join(&self.pre),
            join(&self.post),
        )
    }
}
