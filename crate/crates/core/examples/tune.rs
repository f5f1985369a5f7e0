//! Scratch probe for profile statistics and desk-scale regime checks
//! (not part of the product).

use std::time::Instant;

use brainlab_core::cartridge::{overlap, sample_positions, CartridgeProfile};
use brainlab_core::evolution::{run_experiment, ExperimentConfig, GenerationRecord};

fn prob_stats(profile: &CartridgeProfile, positions: &[brainlab_core::board::Position]) {
    let mut p1s = Vec::new();
    let mut p2s = Vec::new();
    for pos in positions {
        let out = profile.evaluate(pos).unwrap();
        let mut probs = out.probs.clone();
        probs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        p1s.push(probs[0]);
        p2s.push(if probs.len() > 1 { probs[1] } else { 0.0 });
    }
    let n = p1s.len() as f64;
    let mean_p1 = p1s.iter().sum::<f64>() / n;
    let frac_p1_below_03 = p1s.iter().filter(|&&p| p < 0.3).count() as f64 / n;
    let frac_p2_above_03 = p2s.iter().filter(|&&p| p > 0.3).count() as f64 / n;
    println!(
        "  mean p1 = {mean_p1:.3}  P(p1<0.3) = {frac_p1_below_03:.3}  P(p2>0.3) = {frac_p2_above_03:.3}"
    );
}

fn desk(cartridge: &str, opponent: &str, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        population: 10,
        generations: 15,
        games: 10,
        ply_cap: 120,
        cartridge: cartridge.into(),
        opponent: opponent.into(),
        seed,
        ..ExperimentConfig::default()
    }
}

fn run_condition(label: &str, cartridge: &str, opponent: &str, seeds: &[u64]) {
    for &seed in seeds {
        let start = Instant::now();
        let cfg = desk(cartridge, opponent, seed);
        let mut trail: Vec<(u32, f64, f64)> = Vec::new();
        let result = run_experiment(&cfg, &mut |r: &GenerationRecord| {
            let best = r
                .genomes
                .iter()
                .max_by(|a, b| a.eval.fitness.total_cmp(&b.eval.fitness))
                .unwrap();
            trail.push((r.generation, best.eval.agreement, best.eval.fitness));
            Ok(())
        })
        .unwrap();
        let best_a = trail.iter().map(|t| t.1).fold(0.0, f64::max);
        let end_a = trail.last().unwrap().1;
        let secs = start.elapsed().as_secs_f64();
        print!("{label} seed {seed}: best A = {best_a:.3}, end A = {end_a:.3}, {secs:.1}s | A trail:");
        for t in &trail {
            print!(" {:.2}", t.1);
        }
        println!();
        let _ = result;
    }
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "profiles".into());
    match mode.as_str() {
        "profiles" => {
            let positions = sample_positions(0x9e1d, 500, 10, 70);
            let expressive = CartridgeProfile::expressive();
            let opp_a = CartridgeProfile::opponent_a();
            let opp_b = CartridgeProfile::opponent_b();
            println!("expressive (k=4):");
            prob_stats(&expressive, &positions);
            println!("opponent-a (k=8):");
            prob_stats(&opp_a, &positions);
            println!("opponent-b (k=8):");
            prob_stats(&opp_b, &positions);
            println!(
                "overlap(expressive, opponent-a) = {:.4}",
                overlap(&expressive, &opp_a, &positions).unwrap()
            );
            println!(
                "overlap(expressive, opponent-b) = {:.4}",
                overlap(&expressive, &opp_b, &positions).unwrap()
            );
            println!(
                "overlap(opponent-a, opponent-b) = {:.4}",
                overlap(&opp_a, &opp_b, &positions).unwrap()
            );
        }
        "mirror" => run_condition("mirror", "expressive", "expressive", &[1, 2, 3]),
        "hetero" => run_condition("hetero", "opponent-a", "opponent-b", &[1, 2, 3]),
        other => eprintln!("unknown mode {other}"),
    }
}
