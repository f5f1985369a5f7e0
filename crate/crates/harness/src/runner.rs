//! Experiment-set execution: per-seed evolutionary runs (paired
//! conditions where the set compares two arms), per-seed CSV logs,
//! checkpoints, and the set-level report.

use crate::manifest::{config_hash, resolve_output_dir, RunManifest, SetId};
use anyhow::{Context, Result};
use brainlab_core::evolution::{
    csv_header, csv_rows, run_experiment, Checkpoint, ExperimentConfig, ExperimentResult,
    GenerationRecord,
};
use brainlab_core::stats::{
    convergence_generation, late_slope, variance_crossover, SeedSeries, TestReport,
    CONVERGENCE_TOL, SUMMARY_WINDOW,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// Agreement level treated as transparency for trajectory reporting.
pub const TRANSPARENCY_LEVEL: f64 = 0.95;

/// One evolutionary arm of a set: its label and the toggles that define it.
#[derive(Clone, Copy, Debug)]
pub struct Condition {
    pub label: &'static str,
    pub hebbian: Option<bool>,
    pub imagination: Option<bool>,
}

/// The arms a set runs. Paired sets compare two conditions on the same
/// seeds; single-condition sets run one arm labelled by its set.
pub fn conditions_for(set: SetId) -> Vec<Condition> {
    match set {
        SetId::Set1On | SetId::Set1Off => vec![
            Condition { label: "hebbian-on", hebbian: Some(true), imagination: None },
            Condition { label: "hebbian-off", hebbian: Some(false), imagination: None },
        ],
        SetId::Set5Noimag => vec![
            Condition { label: "imagination-on", hebbian: None, imagination: Some(true) },
            Condition { label: "imagination-off", hebbian: None, imagination: Some(false) },
        ],
        _ => vec![Condition { label: "main", hebbian: None, imagination: None }],
    }
}

/// Per-seed summary of one evolutionary run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub generations: u32,
    /// Best genome's agreement per generation.
    pub agreement_trajectory: Vec<f64>,
    /// Best fitness per generation.
    pub fitness_trajectory: Vec<f64>,
    pub best_agreement: f64,
    pub end_agreement: f64,
    pub end_fitness: f64,
    pub end_win_rate: f64,
    pub first_gen_at_transparency: Option<u32>,
    pub convergence_generation: Option<usize>,
    pub late_slope: f64,
}

/// One condition's results across seeds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport {
    pub label: String,
    pub per_seed: Vec<SeedSummary>,
}

/// Cross-seed endpoint dispersion for one condition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpreadReport {
    pub endpoint_agreements: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub cross_seed_variance: f64,
}

/// Per-seed on-vs-off contrast for paired sets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaRow {
    pub seed: u64,
    pub on_agreement: f64,
    pub off_agreement: f64,
    pub delta_agreement: f64,
    pub on_win_rate: f64,
    pub off_win_rate: f64,
    pub delta_win_rate: f64,
}

/// Variance-crossover section of the Set-1 report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossoverReport {
    pub var_on: Vec<f64>,
    pub var_off: Vec<f64>,
    pub ratio: Vec<Option<f64>>,
    pub crossover_generation: Option<usize>,
    pub trend: TestReport,
}

/// The set-level report written as report.json.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetReport {
    pub name: String,
    pub set: SetId,
    pub seeds: Vec<u64>,
    pub conditions: Vec<ConditionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_crossover: Option<CrossoverReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<SpreadReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<DeltaRow>>,
}

fn summarize(seed: u64, records: &[GenerationRecord]) -> SeedSummary {
    let best_of = |r: &GenerationRecord| {
        r.genomes
            .iter()
            .find(|g| g.id == r.best_id)
            .expect("best id present in its generation")
            .eval
    };
    let agreement: Vec<f64> = records.iter().map(|r| best_of(r).agreement).collect();
    let fitness: Vec<f64> = records.iter().map(|r| r.best_fitness).collect();
    let last = best_of(records.last().expect("at least one generation"));
    SeedSummary {
        seed,
        generations: records.len() as u32,
        best_agreement: agreement.iter().cloned().fold(0.0, f64::max),
        end_agreement: last.agreement,
        end_fitness: records.last().unwrap().best_fitness,
        end_win_rate: last.win_rate,
        first_gen_at_transparency: agreement
            .iter()
            .position(|&a| a >= TRANSPARENCY_LEVEL)
            .map(|g| g as u32),
        convergence_generation: if fitness.len() >= SUMMARY_WINDOW {
            convergence_generation(&fitness, CONVERGENCE_TOL, SUMMARY_WINDOW)
        } else {
            None
        },
        late_slope: if fitness.len() >= 2 {
            late_slope(&fitness, SUMMARY_WINDOW.min(fitness.len()))
        } else {
            0.0
        },
        agreement_trajectory: agreement,
        fitness_trajectory: fitness,
    }
}

fn spread(per_seed: &[SeedSummary]) -> SpreadReport {
    let endpoints: Vec<f64> = per_seed.iter().map(|s| s.end_agreement).collect();
    let mean = endpoints.iter().sum::<f64>() / endpoints.len() as f64;
    SpreadReport {
        mean,
        min: endpoints.iter().cloned().fold(f64::INFINITY, f64::min),
        max: endpoints.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        cross_seed_variance: brainlab_core::stats::variance(&endpoints),
        endpoint_agreements: endpoints,
    }
}

struct SeedRun {
    condition: &'static str,
    seed: u64,
    csv: String,
    checkpoint_json: String,
    summary: SeedSummary,
    series: SeedSeries,
}

fn run_one(cfg: &ExperimentConfig, condition: &'static str) -> Result<SeedRun> {
    let result: ExperimentResult = run_experiment(cfg, &mut |_r| Ok(()))
        .with_context(|| format!("condition {condition}, seed {}", cfg.seed))?;
    let mut csv = String::from(csv_header());
    csv.push('\n');
    for record in &result.records {
        csv.push_str(&csv_rows(record));
    }
    let summary = summarize(cfg.seed, &result.records);
    let series = SeedSeries {
        seed: cfg.seed,
        agreement: summary.agreement_trajectory.clone(),
        fitness: summary.fitness_trajectory.clone(),
    };
    let checkpoint_json = Checkpoint::new(cfg, &result).to_json();
    Ok(SeedRun { condition, seed: cfg.seed, csv, checkpoint_json, summary, series })
}

/// File name for one arm's per-seed CSV; single-condition sets drop the
/// label prefix.
fn csv_name(condition: &str, seed: u64) -> String {
    if condition == "main" {
        format!("seed-{seed}.csv")
    } else {
        format!("{condition}-seed-{seed}.csv")
    }
}

fn checkpoint_name(condition: &str, seed: u64) -> String {
    if condition == "main" {
        format!("seed-{seed}-checkpoint.json")
    } else {
        format!("{condition}-seed-{seed}-checkpoint.json")
    }
}

/// Everything a run directory must hold: manifest copy, header with config
/// hash, per-seed CSVs and checkpoints, report JSON, and (for paired
/// variance sets) the plot-ready variance CSV.
pub fn run_set(manifest: &RunManifest, configs: &[(ExperimentConfig, &'static str)]) -> Result<SetReport> {
    let dir = resolve_output_dir(&manifest.output_dir).join(&manifest.name);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let runs: Vec<SeedRun> = configs
        .par_iter()
        .map(|(cfg, label)| run_one(cfg, label))
        .collect::<Result<Vec<_>>>()?;

    for run in &runs {
        fs::write(dir.join(csv_name(run.condition, run.seed)), &run.csv)?;
        fs::write(dir.join(checkpoint_name(run.condition, run.seed)), &run.checkpoint_json)?;
    }

    let conditions: Vec<ConditionReport> = conditions_for(manifest.set)
        .iter()
        .map(|c| ConditionReport {
            label: c.label.to_string(),
            per_seed: runs
                .iter()
                .filter(|r| r.condition == c.label)
                .map(|r| r.summary.clone())
                .collect(),
        })
        .collect();

    let mut report = SetReport {
        name: manifest.name.clone(),
        set: manifest.set,
        seeds: manifest.seeds.clone(),
        conditions,
        variance_crossover: None,
        spread: None,
        deltas: None,
    };

    match manifest.set {
        SetId::Set1On | SetId::Set1Off => {
            let arm = |label: &str| -> Vec<SeedSeries> {
                runs.iter().filter(|r| r.condition == label).map(|r| r.series.clone()).collect()
            };
            let on = arm("hebbian-on");
            let off = arm("hebbian-off");
            if on.len() >= 2 && off.len() >= 2 {
                let vc = variance_crossover(&on, &off);
                let mut plot = String::from("generation,var_on,var_off,ratio\n");
                for g in 0..vc.var_on.len() {
                    let ratio = vc.ratio[g].map(|r| format!("{r:?}")).unwrap_or_default();
                    plot.push_str(&format!(
                        "{},{:?},{:?},{}\n",
                        g, vc.var_on[g], vc.var_off[g], ratio
                    ));
                }
                fs::write(dir.join("variance.csv"), plot)?;
                report.variance_crossover = Some(CrossoverReport {
                    var_on: vc.var_on,
                    var_off: vc.var_off,
                    ratio: vc.ratio,
                    crossover_generation: vc.crossover,
                    trend: vc.spearman,
                });
            }
        }
        SetId::Set2Mirror | SetId::Set2Dominant | SetId::Set3Hetero | SetId::Set4Equal => {
            report.spread = Some(spread(&report.conditions[0].per_seed));
        }
        SetId::Set5Noimag => {
            let find = |label: &str, seed: u64| -> Option<&SeedSummary> {
                runs.iter().find(|r| r.condition == label && r.seed == seed).map(|r| &r.summary)
            };
            let mut deltas = Vec::new();
            for &seed in &manifest.seeds {
                if let (Some(on), Some(off)) =
                    (find("imagination-on", seed), find("imagination-off", seed))
                {
                    deltas.push(DeltaRow {
                        seed,
                        on_agreement: on.end_agreement,
                        off_agreement: off.end_agreement,
                        delta_agreement: on.end_agreement - off.end_agreement,
                        on_win_rate: on.end_win_rate,
                        off_win_rate: off.end_win_rate,
                        delta_win_rate: on.end_win_rate - off.end_win_rate,
                    });
                }
            }
            report.deltas = Some(deltas);
        }
        _ => {}
    }

    write_run_metadata(&dir, manifest, configs)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

/// Header and manifest copy. The header is the only file carrying a
/// timestamp, so every other artifact is byte-identical across reruns.
fn write_run_metadata(
    dir: &Path,
    manifest: &RunManifest,
    configs: &[(ExperimentConfig, &'static str)],
) -> Result<()> {
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(manifest)?)?;
    let hash_input: Vec<&ExperimentConfig> = configs.iter().map(|(c, _)| c).collect();
    let header = serde_json::json!({
        "created_unix": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "config_sha256": config_hash(&hash_input),
    });
    fs::write(dir.join("header.json"), serde_json::to_string_pretty(&header)?)?;
    Ok(())
}

/// Expand a manifest into the concrete per-(condition, seed) configs.
pub fn expand_configs(manifest: &RunManifest) -> Vec<(ExperimentConfig, &'static str)> {
    let mut out = Vec::new();
    for condition in conditions_for(manifest.set) {
        for &seed in &manifest.seeds {
            let mut cfg = crate::manifest::set_base_config(manifest.set, seed);
            manifest.overrides.apply(&mut cfg);
            if let Some(h) = condition.hebbian {
                cfg.hebbian = h;
            }
            if let Some(i) = condition.imagination {
                cfg.imagination = i;
            }
            out.push((cfg, condition.label));
        }
    }
    out
}

/// Recompute a set-level analysis from the CSV logs in a run directory:
/// used by the `stats` subcommand so analysis can re-run without replaying
/// the experiments.
pub fn analyze_logs(dir: &Path) -> Result<serde_json::Value> {
    let mut paired: Vec<(String, u64, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let name = match path.file_name().and_then(|n| n.to_str()) {
            Some(n) => n.to_string(),
            None => continue,
        };
        if !name.ends_with(".csv") || name == "variance.csv" {
            continue;
        }
        let stem = name.trim_end_matches(".csv");
        let (condition, seed) = match stem.rsplit_once("seed-") {
            Some((prefix, seed)) => (
                prefix.trim_end_matches('-').to_string(),
                seed.parse::<u64>().with_context(|| format!("seed in {name}"))?,
            ),
            None => continue,
        };
        paired.push((condition, seed, path));
    }
    paired.sort();

    let mut by_condition: std::collections::BTreeMap<String, Vec<SeedSeries>> = Default::default();
    for (condition, seed, path) in &paired {
        let text = fs::read_to_string(path)?;
        let series = parse_csv_series(*seed, &text)
            .with_context(|| format!("parsing {}", path.display()))?;
        by_condition.entry(condition.clone()).or_default().push(series);
    }

    let mut out = serde_json::Map::new();
    for (condition, seeds) in &by_condition {
        let key = if condition.is_empty() { "main" } else { condition };
        let summaries: Vec<serde_json::Value> = seeds
            .iter()
            .map(|s| {
                serde_json::json!({
                    "seed": s.seed,
                    "end_agreement": s.agreement.last().cloned(),
                    "best_agreement": s.agreement.iter().cloned().fold(0.0, f64::max),
                    "end_fitness": s.fitness.last().cloned(),
                })
            })
            .collect();
        out.insert(key.to_string(), serde_json::Value::Array(summaries));
    }

    let (on, off) = (by_condition.get("hebbian-on"), by_condition.get("hebbian-off"));
    if let (Some(on), Some(off)) = (on, off) {
        if on.len() >= 2 && off.len() >= 2 {
            let vc = variance_crossover(on, off);
            out.insert(
                "variance_crossover".into(),
                serde_json::json!({
                    "var_on": vc.var_on,
                    "var_off": vc.var_off,
                    "ratio": vc.ratio,
                    "crossover_generation": vc.crossover,
                    "trend": vc.spearman,
                }),
            );
        }
    }
    Ok(serde_json::Value::Object(out))
}

/// Rebuild a best-genome series from one per-seed CSV.
fn parse_csv_series(seed: u64, text: &str) -> Result<SeedSeries> {
    let mut agreement = Vec::new();
    let mut fitness = Vec::new();
    let mut current_gen: Option<u32> = None;
    let mut best_f = f64::NEG_INFINITY;
    let mut best_a = 0.0;
    for line in text.lines().skip(1) {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        anyhow::ensure!(cols.len() == 7, "bad CSV row {line:?}");
        let generation: u32 = cols[0].parse()?;
        let a: f64 = cols[2].parse()?;
        let f: f64 = cols[5].parse()?;
        if current_gen != Some(generation) {
            if current_gen.is_some() {
                agreement.push(best_a);
                fitness.push(best_f);
            }
            current_gen = Some(generation);
            best_f = f64::NEG_INFINITY;
            best_a = 0.0;
        }
        if f > best_f {
            best_f = f;
            best_a = a;
        }
    }
    if current_gen.is_some() {
        agreement.push(best_a);
        fitness.push(best_f);
    }
    anyhow::ensure!(!agreement.is_empty(), "CSV held no generations");
    Ok(SeedSeries { seed, agreement, fitness })
}
