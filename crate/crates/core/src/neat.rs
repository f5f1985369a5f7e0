//! Evolvable network genomes: one small feed-forward network per brain
//! module, plus the whole-brain genome that bundles eight of them with the
//! inter-module gain vector.
//!
//! Genomes are strictly acyclic. Historical markings ("innovation" ids)
//! align structurally equivalent connections across the population: the
//! initial fully-connected topology uses the deterministic id
//! `from_input * outputs + to_output`, and every structural mutation draws
//! fresh ids from a run-wide shared counter, so identical ids always denote
//! identical endpoints within a run. New hidden nodes draw their ids from
//! the same counter, which starts above any initial id.

use crate::rng::stream;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

/// First id handed out by a run's shared counter; all deterministic initial
/// ids (max 31 × 16 − 1) lie below it.
pub const COUNTER_BASE: u64 = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum NeatError {
    #[error("expected {expected} inputs, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("genome contains a cycle")]
    Cyclic,
    #[error("malformed genome: {0}")]
    Malformed(String),
}

pub type NodeId = u64;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Input,
    Hidden,
    Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: NodeId,
    pub role: NodeRole,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub innovation: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
    pub enabled: bool,
}

/// Run-wide source of structural ids. Same-generation identical mutations
/// deliberately receive distinct ids; descendants share ids by inheritance.
#[derive(Debug, Default)]
pub struct InnovationCounter(AtomicU64);

impl InnovationCounter {
    pub fn new() -> InnovationCounter {
        InnovationCounter(AtomicU64::new(COUNTER_BASE))
    }

    /// Resume from a checkpointed population: continue above every id in use.
    pub fn resuming_after(max_seen: u64) -> InnovationCounter {
        InnovationCounter(AtomicU64::new(max_seen.max(COUNTER_BASE - 1) + 1))
    }

    pub fn next(&self) -> u64 {
        self.0.fetch_add(1, Ordering::Relaxed)
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One module's genome: nodes sorted by id, connections by innovation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleGenome {
    pub inputs: usize,
    pub outputs: usize,
    pub nodes: Vec<NodeGene>,
    pub connections: Vec<ConnectionGene>,
}

impl ModuleGenome {
    /// Fully connected input→output topology with uniform [−1, 1] weights.
    /// Connection (i, j) gets the deterministic innovation id
    /// `i * outputs + j` so initial genomes align across the population.
    pub fn init_minimal(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> ModuleGenome {
        assert!(inputs > 0 && outputs > 0);
        let mut nodes = Vec::with_capacity(inputs + outputs);
        for i in 0..inputs {
            nodes.push(NodeGene { id: i as NodeId, role: NodeRole::Input });
        }
        for j in 0..outputs {
            nodes.push(NodeGene { id: (inputs + j) as NodeId, role: NodeRole::Output });
        }
        let mut connections = Vec::with_capacity(inputs * outputs);
        for i in 0..inputs {
            for j in 0..outputs {
                connections.push(ConnectionGene {
                    innovation: (i * outputs + j) as u64,
                    from: i as NodeId,
                    to: (inputs + j) as NodeId,
                    weight: rng.random_range(-1.0..=1.0),
                    enabled: true,
                });
            }
        }
        ModuleGenome { inputs, outputs, nodes, connections }
    }

    pub fn node_role(&self, id: NodeId) -> Option<NodeRole> {
        self.nodes.iter().find(|n| n.id == id).map(|n| n.role)
    }

    /// Forward pass with the genome's own weights.
    pub fn activate(&self, inputs: &[f64]) -> Result<Vec<f64>, NeatError> {
        let net = Network::compile(self)?;
        let weights: Vec<f64> = self.connections.iter().map(|c| c.weight).collect();
        Ok(net.activate(&weights, inputs)?.outputs)
    }

    /// True if adding `from → to` would close a directed cycle. Disabled
    /// connections count: crossover may re-enable an inherited gene, so the
    /// structural graph must stay acyclic as a whole.
    fn creates_cycle(&self, from: NodeId, to: NodeId) -> bool {
        if from == to {
            return true;
        }
        // DFS from `to`; a path back to `from` means a cycle.
        let mut stack = vec![to];
        let mut seen = Vec::new();
        while let Some(node) = stack.pop() {
            if node == from {
                return true;
            }
            if seen.contains(&node) {
                continue;
            }
            seen.push(node);
            for c in &self.connections {
                if c.from == node {
                    stack.push(c.to);
                }
            }
        }
        false
    }

    /// Structural sanity: unique ids, endpoints present, directionality
    /// (nothing into inputs, nothing out of outputs), acyclicity.
    pub fn validate(&self) -> Result<(), NeatError> {
        let mut roles = BTreeMap::new();
        for n in &self.nodes {
            if roles.insert(n.id, n.role).is_some() {
                return Err(NeatError::Malformed(format!("duplicate node id {}", n.id)));
            }
        }
        let mut innovations = Vec::with_capacity(self.connections.len());
        for c in &self.connections {
            if innovations.contains(&c.innovation) {
                return Err(NeatError::Malformed(format!("duplicate innovation {}", c.innovation)));
            }
            innovations.push(c.innovation);
            match (roles.get(&c.from), roles.get(&c.to)) {
                (Some(f), Some(t)) => {
                    if *f == NodeRole::Output || *t == NodeRole::Input {
                        return Err(NeatError::Malformed(format!(
                            "connection {} violates direction rules",
                            c.innovation
                        )));
                    }
                }
                _ => {
                    return Err(NeatError::Malformed(format!(
                        "connection {} references a missing node",
                        c.innovation
                    )))
                }
            }
        }
        Network::compile(self).map(|_| ())
    }
}

/// A genome compiled for repeated forward passes: topological order plus
/// per-connection source indices so plasticity can read presynaptic values.
pub struct Network {
    n_inputs: usize,
    slots: Vec<NodeId>,
    roles: Vec<NodeRole>,
    order: Vec<usize>,
    /// Per node slot: (connection index, from slot) for enabled inbound edges.
    inbound: Vec<Vec<(usize, usize)>>,
    output_slots: Vec<usize>,
    conn_from_slot: Vec<usize>,
}

/// Result of one forward pass: node values by network slot, outputs in
/// module order. Hidden nodes are tanh; outputs are logistic, so every
/// output lies in (0, 1).
pub struct Activation {
    pub values: Vec<f64>,
    pub outputs: Vec<f64>,
}

impl Network {
    pub fn compile(genome: &ModuleGenome) -> Result<Network, NeatError> {
        let n = genome.nodes.len();
        let mut slot_of = BTreeMap::new();
        let mut slots = Vec::with_capacity(n);
        let mut roles = Vec::with_capacity(n);
        for (i, node) in genome.nodes.iter().enumerate() {
            slot_of.insert(node.id, i);
            slots.push(node.id);
            roles.push(node.role);
        }
        let missing =
            |id: NodeId| NeatError::Malformed(format!("connection references missing node {id}"));
        let mut conn_from_slot = Vec::with_capacity(genome.connections.len());
        let mut inbound: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        // Kahn's algorithm over the full structural graph (disabled edges
        // included) guarantees a usable order for any legal descendant.
        let mut indegree = vec![0usize; n];
        let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (ci, c) in genome.connections.iter().enumerate() {
            let from = *slot_of.get(&c.from).ok_or_else(|| missing(c.from))?;
            let to = *slot_of.get(&c.to).ok_or_else(|| missing(c.to))?;
            conn_from_slot.push(from);
            indegree[to] += 1;
            out_edges[from].push(to);
            if c.enabled {
                inbound[to].push((ci, from));
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(slot) = ready.pop() {
            order.push(slot);
            for &to in &out_edges[slot] {
                indegree[to] -= 1;
                if indegree[to] == 0 {
                    ready.push(to);
                }
            }
        }
        if order.len() != n {
            return Err(NeatError::Cyclic);
        }
        let output_slots: Vec<usize> =
            (0..n).filter(|&i| roles[i] == NodeRole::Output).collect();
        Ok(Network {
            n_inputs: genome.inputs,
            slots,
            roles,
            order,
            inbound,
            output_slots,
            conn_from_slot,
        })
    }

    /// Forward pass with externally supplied weights (aligned with the
    /// genome's connection list), e.g. the plastic weights mid-game.
    pub fn activate(&self, weights: &[f64], inputs: &[f64]) -> Result<Activation, NeatError> {
        if inputs.len() != self.n_inputs {
            return Err(NeatError::InputLength { expected: self.n_inputs, got: inputs.len() });
        }
        let mut values = vec![0.0; self.slots.len()];
        for &slot in &self.order {
            values[slot] = match self.roles[slot] {
                NodeRole::Input => inputs[slot],
                role => {
                    let sum: f64 = self.inbound[slot]
                        .iter()
                        .map(|&(ci, from)| weights[ci] * values[from])
                        .sum();
                    if role == NodeRole::Hidden {
                        sum.tanh()
                    } else {
                        sigmoid(sum)
                    }
                }
            };
        }
        let outputs = self.output_slots.iter().map(|&s| values[s]).collect();
        Ok(Activation { values, outputs })
    }

    /// Presynaptic node slot for each genome connection (enabled or not).
    pub fn conn_from_slots(&self) -> &[usize] {
        &self.conn_from_slot
    }

    pub fn node_count(&self) -> usize {
        self.slots.len()
    }
}

/// Structural and weight mutation rates.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MutationConfig {
    /// Chance each enabled connection's weight is perturbed.
    pub weight_perturb_prob: f64,
    /// Std-dev of the Gaussian perturbation (weights and gains).
    pub weight_sigma: f64,
    /// Chance of splitting a connection with a new hidden node.
    pub add_node_prob: f64,
    /// Chance of adding one new acyclic connection.
    pub add_conn_prob: f64,
    /// Chance of perturbing one inter-module gain.
    pub wiring_perturb_prob: f64,
}

impl Default for MutationConfig {
    fn default() -> MutationConfig {
        MutationConfig {
            weight_perturb_prob: 0.80,
            weight_sigma: 0.3,
            add_node_prob: 0.03,
            add_conn_prob: 0.05,
            wiring_perturb_prob: 0.10,
        }
    }
}

/// In-place mutation of one module genome. Draw order is fixed: weight
/// perturbations (one coin + optional sample per enabled connection in
/// innovation order), then the add-node roll, then the add-connection roll.
pub fn mutate(
    genome: &mut ModuleGenome,
    cfg: &MutationConfig,
    counter: &InnovationCounter,
    rng: &mut ChaCha8Rng,
) {
    let normal = Normal::new(0.0, cfg.weight_sigma).expect("sigma > 0");
    for c in genome.connections.iter_mut() {
        if c.enabled && rng.random::<f64>() < cfg.weight_perturb_prob {
            c.weight += normal.sample(rng);
        }
    }

    if rng.random::<f64>() < cfg.add_node_prob {
        let enabled: Vec<usize> =
            (0..genome.connections.len()).filter(|&i| genome.connections[i].enabled).collect();
        if !enabled.is_empty() {
            let pick = enabled[rng.random_range(0..enabled.len())];
            let old = genome.connections[pick];
            genome.connections[pick].enabled = false;
            let node_id = counter.next();
            genome.nodes.push(NodeGene { id: node_id, role: NodeRole::Hidden });
            // Split: incoming edge carries weight 1, outgoing inherits the
            // old weight, so the initial behavior change is minimal.
            genome.connections.push(ConnectionGene {
                innovation: counter.next(),
                from: old.from,
                to: node_id,
                weight: 1.0,
                enabled: true,
            });
            genome.connections.push(ConnectionGene {
                innovation: counter.next(),
                from: node_id,
                to: old.to,
                weight: old.weight,
                enabled: true,
            });
        }
    }

    if rng.random::<f64>() < cfg.add_conn_prob {
        let mut candidates = Vec::new();
        for from in &genome.nodes {
            if from.role == NodeRole::Output {
                continue;
            }
            for to in &genome.nodes {
                if to.role == NodeRole::Input || from.id == to.id {
                    continue;
                }
                if genome.connections.iter().any(|c| c.from == from.id && c.to == to.id) {
                    continue;
                }
                if genome.creates_cycle(from.id, to.id) {
                    continue;
                }
                candidates.push((from.id, to.id));
            }
        }
        if !candidates.is_empty() {
            let (from, to) = candidates[rng.random_range(0..candidates.len())];
            genome.connections.push(ConnectionGene {
                innovation: counter.next(),
                from,
                to,
                weight: rng.random_range(-1.0..=1.0),
                enabled: true,
            });
        }
    }
    debug_assert!(genome.validate().is_ok());
}

/// Innovation-aligned crossover. Matching genes come from either parent
/// uniformly (weight and enabled flag together); disjoint and excess genes
/// come from the fitter parent only (ties favor `a`). The child's topology
/// therefore equals the fitter parent's, which keeps it acyclic.
pub fn crossover(
    a: &ModuleGenome,
    b: &ModuleGenome,
    fitness_a: f64,
    fitness_b: f64,
    rng: &mut ChaCha8Rng,
) -> ModuleGenome {
    debug_assert_eq!((a.inputs, a.outputs), (b.inputs, b.outputs));
    let a_fitter = fitness_a >= fitness_b;
    let mut connections = Vec::with_capacity(a.connections.len().max(b.connections.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.connections.len() || j < b.connections.len() {
        let ca = a.connections.get(i);
        let cb = b.connections.get(j);
        match (ca, cb) {
            (Some(ca), Some(cb)) if ca.innovation == cb.innovation => {
                connections.push(if rng.random::<bool>() { *ca } else { *cb });
                i += 1;
                j += 1;
            }
            (Some(ca), Some(cb)) if ca.innovation < cb.innovation => {
                if a_fitter {
                    connections.push(*ca);
                }
                i += 1;
            }
            (Some(_), Some(cb)) => {
                if !a_fitter {
                    connections.push(*cb);
                }
                j += 1;
            }
            (Some(ca), None) => {
                if a_fitter {
                    connections.push(*ca);
                }
                i += 1;
            }
            (None, Some(cb)) => {
                if !a_fitter {
                    connections.push(*cb);
                }
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }

    // Nodes: the shared input/output frame plus every hidden node the
    // inherited connections reference.
    let mut roles: BTreeMap<NodeId, NodeRole> = BTreeMap::new();
    for n in a.nodes.iter().chain(b.nodes.iter()) {
        roles.insert(n.id, n.role);
    }
    let mut keep: Vec<NodeId> = a
        .nodes
        .iter()
        .filter(|n| n.role != NodeRole::Hidden)
        .map(|n| n.id)
        .collect();
    for c in &connections {
        for id in [c.from, c.to] {
            if roles[&id] == NodeRole::Hidden && !keep.contains(&id) {
                keep.push(id);
            }
        }
    }
    keep.sort_unstable();
    let nodes = keep.into_iter().map(|id| NodeGene { id, role: roles[&id] }).collect();
    let child = ModuleGenome { inputs: a.inputs, outputs: a.outputs, nodes, connections };
    debug_assert!(child.validate().is_ok());
    child
}

/// The eight brain module slots. Order is frozen: it is the phase-1 block
/// order, the gain vector order, and the serialization order.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Perception,
    Memory,
    Affect,
    Attention,
    Dynamics,
    Personality,
    Integration,
    Learning,
}

pub const SLOTS: [Slot; 8] = [
    Slot::Perception,
    Slot::Memory,
    Slot::Affect,
    Slot::Attention,
    Slot::Dynamics,
    Slot::Personality,
    Slot::Integration,
    Slot::Learning,
];

/// The five phase-1 slots in block order.
pub const PHASE1_SLOTS: [Slot; 5] =
    [Slot::Perception, Slot::Memory, Slot::Affect, Slot::Attention, Slot::Dynamics];

impl Slot {
    pub fn index(self) -> usize {
        self as usize
    }

    /// Fixed (inputs, outputs) for each module.
    pub fn dims(self) -> (usize, usize) {
        match self {
            Slot::Perception => (20, 8),
            Slot::Memory => (8, 4),
            Slot::Affect => (8, 5),
            Slot::Attention => (16, 4),
            Slot::Dynamics => (6, 2),
            Slot::Personality => (27, 8),
            Slot::Integration => (31, 16),
            Slot::Learning => (4, 6),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Slot::Perception => "perception",
            Slot::Memory => "memory",
            Slot::Affect => "affect",
            Slot::Attention => "attention",
            Slot::Dynamics => "dynamics",
            Slot::Personality => "personality",
            Slot::Integration => "integration",
            Slot::Learning => "learning",
        }
    }
}

/// A complete brain: eight module genomes plus the inter-module gains.
/// `personality_gains` scale the five phase-1 blocks entering personality;
/// `integration_gains` scale the five phase-1 blocks plus the personality
/// block entering integration. All gains start at 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrainGenome {
    /// Lineage id: unique per run, assigned at creation, total order for
    /// deterministic tie-breaks.
    pub id: u64,
    pub modules: Vec<ModuleGenome>,
    pub personality_gains: [f64; 5],
    pub integration_gains: [f64; 6],
}

impl BrainGenome {
    pub fn new_random(id: u64, rng: &mut ChaCha8Rng) -> BrainGenome {
        let modules = SLOTS
            .iter()
            .map(|s| {
                let (i, o) = s.dims();
                ModuleGenome::init_minimal(i, o, rng)
            })
            .collect();
        BrainGenome { id, modules, personality_gains: [1.0; 5], integration_gains: [1.0; 6] }
    }

    pub fn module(&self, slot: Slot) -> &ModuleGenome {
        &self.modules[slot.index()]
    }

    pub fn module_mut(&mut self, slot: Slot) -> &mut ModuleGenome {
        &mut self.modules[slot.index()]
    }

    pub fn validate(&self) -> Result<(), NeatError> {
        if self.modules.len() != SLOTS.len() {
            return Err(NeatError::Malformed(format!("expected 8 modules, got {}", self.modules.len())));
        }
        for slot in SLOTS {
            let m = self.module(slot);
            if (m.inputs, m.outputs) != slot.dims() {
                return Err(NeatError::Malformed(format!(
                    "{} module has dims ({}, {}), expected {:?}",
                    slot.name(),
                    m.inputs,
                    m.outputs,
                    slot.dims()
                )));
            }
            m.validate()?;
        }
        let finite = self
            .personality_gains
            .iter()
            .chain(self.integration_gains.iter())
            .all(|g| g.is_finite());
        if !finite {
            return Err(NeatError::Malformed("non-finite inter-module gain".into()));
        }
        Ok(())
    }

    /// Mutates every module, then rolls the single wiring perturbation: one
    /// uniformly chosen gain (of the eleven) gets Gaussian noise.
    pub fn mutate(&mut self, cfg: &MutationConfig, counter: &InnovationCounter, rng: &mut ChaCha8Rng) {
        for m in self.modules.iter_mut() {
            mutate(m, cfg, counter, rng);
        }
        if rng.random::<f64>() < cfg.wiring_perturb_prob {
            let normal = Normal::new(0.0, cfg.weight_sigma).expect("sigma > 0");
            let idx = rng.random_range(0..11);
            let delta = normal.sample(rng);
            if idx < 5 {
                self.personality_gains[idx] += delta;
            } else {
                self.integration_gains[idx - 5] += delta;
            }
        }
    }

    /// Module-wise crossover; gains are averaged elementwise.
    pub fn crossover(
        a: &BrainGenome,
        b: &BrainGenome,
        fitness_a: f64,
        fitness_b: f64,
        child_id: u64,
        rng: &mut ChaCha8Rng,
    ) -> BrainGenome {
        let modules = a
            .modules
            .iter()
            .zip(b.modules.iter())
            .map(|(ma, mb)| crossover(ma, mb, fitness_a, fitness_b, rng))
            .collect();
        let mut personality_gains = [0.0; 5];
        for (g, (x, y)) in personality_gains
            .iter_mut()
            .zip(a.personality_gains.iter().zip(b.personality_gains.iter()))
        {
            *g = (x + y) / 2.0;
        }
        let mut integration_gains = [0.0; 6];
        for (g, (x, y)) in integration_gains
            .iter_mut()
            .zip(a.integration_gains.iter().zip(b.integration_gains.iter()))
        {
            *g = (x + y) / 2.0;
        }
        BrainGenome { id: child_id, modules, personality_gains, integration_gains }
    }

    /// Largest structural id in use; lets a resumed run re-seat its counter.
    pub fn max_structural_id(&self) -> u64 {
        self.modules
            .iter()
            .flat_map(|m| {
                m.nodes
                    .iter()
                    .map(|n| n.id)
                    .chain(m.connections.iter().map(|c| c.innovation))
            })
            .max()
            .unwrap_or(0)
    }
}

/// Deterministic sub-stream for a genome's mutation/crossover draws.
pub fn reproduction_stream(seed: u64, generation: u64, child_index: u64) -> ChaCha8Rng {
    stream(seed, 0x5eed_0002 ^ generation, child_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn init_minimal_is_fully_connected_bipartite() {
        let g = ModuleGenome::init_minimal(20, 8, &mut rng(1));
        assert_eq!(g.nodes.len(), 28);
        assert_eq!(g.connections.len(), 160);
        assert!(g.connections.iter().all(|c| c.enabled));
        assert!(g.connections.iter().all(|c| (-1.0..=1.0).contains(&c.weight)));
        assert!(g.validate().is_ok());

        let small = ModuleGenome::init_minimal(4, 6, &mut rng(2));
        assert_eq!(small.connections.len(), 24);
    }

    #[test]
    fn zero_weight_network_outputs_one_half() {
        let mut g = ModuleGenome::init_minimal(5, 3, &mut rng(3));
        for c in g.connections.iter_mut() {
            c.weight = 0.0;
        }
        let out = g.activate(&[0.3; 5]).unwrap();
        assert_eq!(out, vec![0.5, 0.5, 0.5]);
    }

    #[test]
    fn hidden_chain_matches_hand_computation() {
        // in --1.0--> hidden --1.0--> out: output = sigmoid(tanh(1)).
        let g = ModuleGenome {
            inputs: 1,
            outputs: 1,
            nodes: vec![
                NodeGene { id: 0, role: NodeRole::Input },
                NodeGene { id: 1, role: NodeRole::Output },
                NodeGene { id: 2, role: NodeRole::Hidden },
            ],
            connections: vec![
                ConnectionGene { innovation: 0, from: 0, to: 2, weight: 1.0, enabled: true },
                ConnectionGene { innovation: 1, from: 2, to: 1, weight: 1.0, enabled: true },
            ],
        };
        let out = g.activate(&[1.0]).unwrap();
        assert!((out[0] - sigmoid(1.0f64.tanh())).abs() < 1e-15);
        assert!((out[0] - 0.6817).abs() < 1e-3);
    }

    #[test]
    fn disabled_connections_do_not_contribute() {
        let mut g = ModuleGenome::init_minimal(2, 1, &mut rng(4));
        for c in g.connections.iter_mut() {
            c.enabled = false;
        }
        assert_eq!(g.activate(&[1.0, 1.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn input_length_is_checked() {
        let g = ModuleGenome::init_minimal(4, 2, &mut rng(5));
        assert_eq!(
            g.activate(&[0.0; 3]).unwrap_err(),
            NeatError::InputLength { expected: 4, got: 3 }
        );
    }

    #[test]
    fn outputs_stay_in_open_unit_interval() {
        let mut r = rng(6);
        for _ in 0..20 {
            let mut g = ModuleGenome::init_minimal(6, 4, &mut r);
            let counter = InnovationCounter::new();
            for _ in 0..30 {
                mutate(&mut g, &MutationConfig::default(), &counter, &mut r);
            }
            let inputs: Vec<f64> = (0..6).map(|_| r.random_range(-5.0..5.0)).collect();
            let out = g.activate(&inputs).unwrap();
            assert!(out.iter().all(|&o| o > 0.0 && o < 1.0));
        }
    }

    #[test]
    fn add_node_splits_with_expected_weights() {
        let mut g = ModuleGenome::init_minimal(1, 1, &mut rng(7));
        let old_weight = g.connections[0].weight;
        let counter = InnovationCounter::new();
        // Force the structural path: probability 1 for add-node.
        let cfg = MutationConfig {
            weight_perturb_prob: 0.0,
            add_node_prob: 1.0,
            add_conn_prob: 0.0,
            ..MutationConfig::default()
        };
        let mut r = rng(8);
        mutate(&mut g, &cfg, &counter, &mut r);
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.connections.len(), 3);
        assert!(!g.connections[0].enabled, "split connection is disabled");
        assert_eq!(g.connections[1].weight, 1.0);
        assert_eq!(g.connections[2].weight, old_weight);
        assert!(g.connections[1].innovation >= COUNTER_BASE);
        assert!(g.validate().is_ok());
    }

    #[test]
    fn mutation_preserves_acyclicity_over_many_rounds() {
        let mut r = rng(9);
        let counter = InnovationCounter::new();
        let mut g = ModuleGenome::init_minimal(6, 2, &mut r);
        let cfg = MutationConfig { add_node_prob: 0.3, add_conn_prob: 0.5, ..MutationConfig::default() };
        for _ in 0..200 {
            mutate(&mut g, &cfg, &counter, &mut r);
            assert!(g.validate().is_ok());
        }
    }

    #[test]
    fn self_crossover_is_identity() {
        let mut r = rng(10);
        let g = ModuleGenome::init_minimal(5, 3, &mut r);
        let child = crossover(&g, &g, 1.0, 1.0, &mut r);
        assert_eq!(child, g);
    }

    #[test]
    fn child_innovation_set_equals_fitter_parent() {
        let mut r = rng(11);
        let counter = InnovationCounter::new();
        let base = ModuleGenome::init_minimal(4, 2, &mut r);
        let mut a = base.clone();
        let mut b = base.clone();
        let cfg = MutationConfig { add_node_prob: 1.0, add_conn_prob: 1.0, ..MutationConfig::default() };
        for _ in 0..4 {
            mutate(&mut a, &cfg, &counter, &mut r);
            mutate(&mut b, &cfg, &counter, &mut r);
        }
        let child = crossover(&a, &b, 2.0, 1.0, &mut r);
        let ids = |g: &ModuleGenome| g.connections.iter().map(|c| c.innovation).collect::<Vec<_>>();
        assert_eq!(ids(&child), ids(&a));
        assert!(child.validate().is_ok());

        let child_b = crossover(&a, &b, 1.0, 2.0, &mut r);
        assert_eq!(ids(&child_b), ids(&b));
    }

    #[test]
    fn brain_genome_has_expected_shape_and_serializes_exactly() {
        let g = BrainGenome::new_random(42, &mut rng(12));
        assert!(g.validate().is_ok());
        assert_eq!(g.module(Slot::Perception).connections.len(), 160);
        assert_eq!(g.module(Slot::Integration).connections.len(), 31 * 16);
        assert_eq!(g.personality_gains, [1.0; 5]);

        let json = serde_json::to_string(&g).unwrap();
        let back: BrainGenome = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g, "round trip must be bit-exact");
    }

    #[test]
    fn wiring_perturbation_keeps_gains_finite() {
        let mut r = rng(13);
        let mut g = BrainGenome::new_random(0, &mut r);
        let counter = InnovationCounter::new();
        // Only the wiring roll enabled; run it many times.
        let cfg = MutationConfig {
            weight_perturb_prob: 0.0,
            add_node_prob: 0.0,
            add_conn_prob: 0.0,
            wiring_perturb_prob: 1.0,
            ..MutationConfig::default()
        };
        for _ in 0..10_000 {
            g.mutate(&cfg, &counter, &mut r);
        }
        assert!(g.validate().is_ok());
        let drifted = g
            .personality_gains
            .iter()
            .chain(g.integration_gains.iter())
            .any(|&x| x != 1.0);
        assert!(drifted);
    }

    #[test]
    fn crossover_averages_gains() {
        let mut r = rng(14);
        let mut a = BrainGenome::new_random(0, &mut r);
        let mut b = BrainGenome::new_random(1, &mut r);
        a.personality_gains = [2.0; 5];
        b.personality_gains = [1.0; 5];
        a.integration_gains = [0.5; 6];
        b.integration_gains = [1.5; 6];
        let child = BrainGenome::crossover(&a, &b, 1.0, 0.5, 7, &mut r);
        assert_eq!(child.personality_gains, [1.5; 5]);
        assert_eq!(child.integration_gains, [1.0; 6]);
        assert_eq!(child.id, 7);
    }

    #[test]
    fn counter_hands_out_monotonic_ids() {
        let c = InnovationCounter::new();
        let a = c.next();
        let b = c.next();
        assert_eq!(a, COUNTER_BASE);
        assert_eq!(b, COUNTER_BASE + 1);
        let resumed = InnovationCounter::resuming_after(5000);
        assert_eq!(resumed.next(), 5001);
    }
}
