//! Run manifests and config plumbing: the experiment-set vocabulary, the
//! override mechanism shared by manifests and CLI flags, output-directory
//! resolution, and the config hash stamped into every run directory.

use brainlab_core::evolution::{ExperimentConfig, FitnessMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Environment variable naming the root for all run output; manifest and
/// CLI paths resolve under it when relative.
pub const OUTPUT_ROOT_ENV: &str = "BRAINLAB_OUT";

/// Desk-scale run shape: small enough for a laptop acceptance pass,
/// overridable up to paper scale from the manifest or CLI.
pub const DESK_POPULATION: usize = 10;
pub const DESK_GENERATIONS: u32 = 15;
pub const DESK_GAMES: u32 = 10;
pub const DESK_PLY_CAP: u32 = 120;

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("unknown set id {0:?}")]
    UnknownSet(String),
    #[error("seed list is empty")]
    NoSeeds,
    #[error("duplicate seed {0}")]
    DuplicateSeed(u64),
    #[error("id {0:?} contains characters outside [a-z0-9-]")]
    BadName(String),
}

/// The experiment sets the runner recognizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetId {
    Set1On,
    Set1Off,
    Set2Mirror,
    Set2Dominant,
    Set3Hetero,
    Set4Equal,
    Set5Noimag,
    BaselineNull,
    BaselineRandom,
    BaselineTemperature,
    AblationHebbian,
}

impl SetId {
    pub fn as_str(self) -> &'static str {
        match self {
            SetId::Set1On => "set1-on",
            SetId::Set1Off => "set1-off",
            SetId::Set2Mirror => "set2-mirror",
            SetId::Set2Dominant => "set2-dominant",
            SetId::Set3Hetero => "set3-hetero",
            SetId::Set4Equal => "set4-equal",
            SetId::Set5Noimag => "set5-noimag",
            SetId::BaselineNull => "baseline-null",
            SetId::BaselineRandom => "baseline-random",
            SetId::BaselineTemperature => "baseline-temperature",
            SetId::AblationHebbian => "ablation-hebbian",
        }
    }
}

/// Optional overrides applied on top of a set's desk-scale defaults.
/// Manifest overrides apply first, CLI flags last.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub population: Option<usize>,
    pub generations: Option<u32>,
    pub games: Option<u32>,
    pub ply_cap: Option<u32>,
    pub fitness_mode: Option<FitnessMode>,
    pub hebbian: Option<bool>,
    pub imagination: Option<bool>,
    pub cartridge: Option<String>,
    pub opponent: Option<String>,
    /// Checkpoint path for ablation sets; ignored elsewhere.
    pub checkpoint: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = self.population {
            cfg.population = v;
        }
        if let Some(v) = self.generations {
            cfg.generations = v;
        }
        if let Some(v) = self.games {
            cfg.games = v;
        }
        if let Some(v) = self.ply_cap {
            cfg.ply_cap = v;
        }
        if let Some(v) = self.fitness_mode {
            cfg.fitness_mode = v;
        }
        if let Some(v) = self.hebbian {
            cfg.hebbian = v;
        }
        if let Some(v) = self.imagination {
            cfg.imagination = v;
        }
        if let Some(v) = &self.cartridge {
            cfg.cartridge = v.clone();
        }
        if let Some(v) = &self.opponent {
            cfg.opponent = v.clone();
        }
    }

    /// Merge another override layer on top of this one.
    pub fn layered(&self, over: &Overrides) -> Overrides {
        Overrides {
            population: over.population.or(self.population),
            generations: over.generations.or(self.generations),
            games: over.games.or(self.games),
            ply_cap: over.ply_cap.or(self.ply_cap),
            fitness_mode: over.fitness_mode.or(self.fitness_mode),
            hebbian: over.hebbian.or(self.hebbian),
            imagination: over.imagination.or(self.imagination),
            cartridge: over.cartridge.clone().or_else(|| self.cartridge.clone()),
            opponent: over.opponent.clone().or_else(|| self.opponent.clone()),
            checkpoint: over.checkpoint.clone().or_else(|| self.checkpoint.clone()),
        }
    }
}

/// One experiment request: which set, which seeds, where to write.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub name: String,
    pub set: SetId,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub overrides: Overrides,
    /// Output directory; relative paths resolve under `BRAINLAB_OUT` (or
    /// the working directory when unset).
    pub output_dir: PathBuf,
}

impl RunManifest {
    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.seeds.is_empty() {
            return Err(ManifestError::NoSeeds);
        }
        let mut seen = std::collections::HashSet::new();
        for &s in &self.seeds {
            if !seen.insert(s) {
                return Err(ManifestError::DuplicateSeed(s));
            }
        }
        if self.name.is_empty()
            || !self.name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
        {
            return Err(ManifestError::BadName(self.name.clone()));
        }
        Ok(())
    }
}

/// Desk-scale config for a set, before overrides: matchup, fitness mode,
/// and toggles are the set's identity; shape is the desk default.
pub fn set_base_config(set: SetId, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        population: DESK_POPULATION,
        generations: DESK_GENERATIONS,
        games: DESK_GAMES,
        ply_cap: DESK_PLY_CAP,
        seed,
        ..ExperimentConfig::default()
    };
    match set {
        // Set 1 measures learning's effect on cross-seed variance in the
        // heterogeneous matchup; the hebbian toggle is applied per arm.
        SetId::Set1On | SetId::Set1Off => {
            cfg.cartridge = "opponent-a".into();
            cfg.opponent = "opponent-b".into();
        }
        SetId::Set2Mirror => {
            cfg.cartridge = "expressive".into();
            cfg.opponent = "expressive".into();
        }
        SetId::Set2Dominant => {
            cfg.cartridge = "opponent-a".into();
            cfg.opponent = "opponent-a-weak".into();
        }
        SetId::Set3Hetero => {
            cfg.cartridge = "opponent-a".into();
            cfg.opponent = "opponent-b".into();
        }
        SetId::Set4Equal => {
            cfg.cartridge = "opponent-a".into();
            cfg.opponent = "opponent-b".into();
            cfg.fitness_mode = FitnessMode::Equal;
        }
        SetId::Set5Noimag => {
            cfg.cartridge = "expressive".into();
            cfg.opponent = "expressive".into();
        }
        // Baselines and ablations reuse the heterogeneous matchup so the
        // null row lands on the pinned overlap rather than 1.0.
        SetId::BaselineNull
        | SetId::BaselineRandom
        | SetId::BaselineTemperature
        | SetId::AblationHebbian => {
            cfg.cartridge = "opponent-a".into();
            cfg.opponent = "opponent-b".into();
        }
    }
    cfg
}

/// Resolve a possibly-relative path under the output root.
pub fn resolve_output_dir(dir: &Path) -> PathBuf {
    if dir.is_absolute() {
        return dir.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) => PathBuf::from(root).join(dir),
        None => dir.to_path_buf(),
    }
}

/// SHA-256 of a config's canonical JSON; stamped into header.json so a run
/// directory records exactly what produced it.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    format!("{:x}", hasher.finalize())
}
