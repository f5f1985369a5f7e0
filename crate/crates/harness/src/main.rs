//! `brainlab` CLI: run experiment sets from a manifest, measure baselines,
//! ablate plasticity on a checkpoint, probe behavior, and re-analyze logs.

use anyhow::{Context, Result};
use brainlab::ablate::run_hebbian_ablation;
use brainlab::baselines::{run_baselines, BaselineConfig};
use brainlab::manifest::{resolve_output_dir, Overrides, RunManifest, SetId};
use brainlab::probe::run_probe;
use brainlab::runner::{expand_configs, run_set};
use brainlab_core::evolution::Checkpoint;
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "brainlab",
    about = "Neuroevolution laboratory: evolved brains reshaping a chess move predictor",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config overrides accepted on the command line; they take precedence
/// over the manifest's own overrides.
#[derive(Args, Clone, Debug, Default)]
struct OverrideFlags {
    /// Replace the manifest seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    generations: Option<u32>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    games: Option<u32>,
    /// Force within-game plasticity on or off.
    #[arg(long, value_parser = parse_toggle)]
    hebbian: Option<bool>,
    /// Force successor-probing move selection on or off.
    #[arg(long, value_parser = parse_toggle)]
    imagination: Option<bool>,
}

fn parse_toggle(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected 'on' or 'off', got {other:?}")),
    }
}

impl OverrideFlags {
    fn as_overrides(&self) -> Overrides {
        Overrides {
            population: self.population,
            generations: self.generations,
            games: self.games,
            hebbian: self.hebbian,
            imagination: self.imagination,
            ..Overrides::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment set described by a manifest file.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        overrides: OverrideFlags,
    },
    /// Measure the brainless baselines (null, random-parameter, ΔT sweep).
    Baselines {
        /// Baseline config JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Play a checkpoint's best genome with plasticity off and on.
    Ablate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated opponent profile ids.
        #[arg(long, value_delimiter = ',')]
        opponents: Vec<String>,
        #[arg(long, default_value_t = 10)]
        games: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Style statistics and fixed-position disagreement probe.
    Probe {
        #[arg(long)]
        checkpoint: PathBuf,
        /// File of FEN strings, one per line.
        #[arg(long)]
        positions: PathBuf,
        #[arg(long, default_value_t = 10)]
        games: u32,
        #[arg(long, default_value = "opponent-b")]
        opponent: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute set-level analysis from the CSV logs in a run directory.
    Stats {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<PathBuf>, json: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { manifest, overrides } => {
            let text = fs::read_to_string(&manifest)
                .with_context(|| format!("reading {}", manifest.display()))?;
            let mut m: RunManifest = serde_json::from_str(&text).context("parsing manifest")?;
            if let Some(seed) = overrides.seed {
                m.seeds = vec![seed];
            }
            m.overrides = m.overrides.layered(&overrides.as_overrides());
            m.validate()?;
            match m.set {
                SetId::BaselineNull | SetId::BaselineRandom | SetId::BaselineTemperature => {
                    // Baseline sets reuse the manifest plumbing but run the
                    // baseline battery once (seeded by the first seed).
                    let base = brainlab::manifest::set_base_config(m.set, m.seeds[0]);
                    let mut merged = base.clone();
                    m.overrides.apply(&mut merged);
                    let cfg = BaselineConfig {
                        cartridge: merged.cartridge.clone(),
                        opponent: merged.opponent.clone(),
                        games: merged.games,
                        seed: merged.seed,
                        ply_cap: merged.ply_cap,
                        ..BaselineConfig::default()
                    };
                    let report = run_baselines(&cfg)?;
                    let dir = resolve_output_dir(&m.output_dir).join(&m.name);
                    fs::create_dir_all(&dir)?;
                    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
                    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
                    eprintln!("baselines written to {}", dir.display());
                }
                SetId::AblationHebbian => {
                    let path = m
                        .overrides
                        .checkpoint
                        .clone()
                        .context("ablation-hebbian manifests need overrides.checkpoint")?;
                    let ck = Checkpoint::load(&path)?;
                    let opponents = vec![m
                        .overrides
                        .opponent
                        .clone()
                        .unwrap_or_else(|| ck.config.opponent.clone())];
                    let games = m.overrides.games.unwrap_or(10);
                    let report = run_hebbian_ablation(&ck, &opponents, games)?;
                    let dir = resolve_output_dir(&m.output_dir).join(&m.name);
                    fs::create_dir_all(&dir)?;
                    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
                    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
                    eprintln!("ablation written to {}", dir.display());
                }
                _ => {
                    let configs = expand_configs(&m);
                    let report = run_set(&m, &configs)?;
                    eprintln!(
                        "set {} complete: {} conditions × {} seeds",
                        report.set.as_str(),
                        report.conditions.len(),
                        m.seeds.len()
                    );
                }
            }
        }
        Command::Baselines { config, out } => {
            let cfg: BaselineConfig = match config {
                Some(path) => serde_json::from_str(
                    &fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?,
                )
                .context("parsing baseline config")?,
                None => BaselineConfig::default(),
            };
            let report = run_baselines(&cfg)?;
            emit(out, &serde_json::to_string_pretty(&report)?)?;
        }
        Command::Ablate { checkpoint, opponents, games, out } => {
            anyhow::ensure!(!opponents.is_empty(), "--opponents must list at least one profile");
            let ck = Checkpoint::load(&checkpoint)
                .with_context(|| format!("loading {}", checkpoint.display()))?;
            let report = run_hebbian_ablation(&ck, &opponents, games)?;
            emit(out, &serde_json::to_string_pretty(&report)?)?;
        }
        Command::Probe { checkpoint, positions, games, opponent, out } => {
            let ck = Checkpoint::load(&checkpoint)
                .with_context(|| format!("loading {}", checkpoint.display()))?;
            let fens: Vec<String> = fs::read_to_string(&positions)
                .with_context(|| format!("reading {}", positions.display()))?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect();
            anyhow::ensure!(!fens.is_empty(), "no positions in {}", positions.display());
            let report = run_probe(&ck, &fens, games, &opponent)?;
            emit(out, &serde_json::to_string_pretty(&report)?)?;
        }
        Command::Stats { logs, out } => {
            let analysis = brainlab::runner::analyze_logs(&logs)?;
            emit(out, &serde_json::to_string_pretty(&analysis)?)?;
        }
    }
    Ok(())
}
