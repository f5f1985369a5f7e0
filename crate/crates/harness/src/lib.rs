//! Experiment harness for the evolved-brain laboratory: manifest-driven
//! experiment sets, brainless baselines, plasticity ablations, behavioral
//! probes, and log re-analysis.

pub mod ablate;
pub mod baselines;
pub mod manifest;
pub mod probe;
pub mod runner;
