//! Pins the shipped profiles' behavior: the recorded null overlap between
//! the two opponent profiles must recompute exactly from the golden
//! parameters, and all named profiles must stay pairwise distinct.

use brainlab_core::cartridge::{assert_distinct, overlap, sample_positions, CartridgeProfile};
use serde::Deserialize;

#[derive(Deserialize)]
struct NullOverlap {
    cartridge: String,
    opponent: String,
    sample_seed: u64,
    count: usize,
    min_plies: u32,
    max_plies: u32,
    agreements: usize,
    overlap: f64,
}

fn golden() -> NullOverlap {
    serde_json::from_str(include_str!("../golden/null_overlap.json")).expect("golden parses")
}

#[test]
fn null_overlap_recomputes_exactly_from_the_golden_record() {
    let g = golden();
    let a = CartridgeProfile::named(&g.cartridge).expect("profile");
    let b = CartridgeProfile::named(&g.opponent).expect("profile");
    let sample = sample_positions(g.sample_seed, g.count, g.min_plies, g.max_plies);
    assert_eq!(sample.len(), g.count);
    let got = overlap(&a, &b, &sample).expect("overlap");
    assert_eq!(got, g.overlap, "pinned overlap drifted");
    assert_eq!(got, g.agreements as f64 / g.count as f64);
}

#[test]
fn named_profiles_are_pairwise_distinct() {
    let ids = ["expressive", "opponent-a", "opponent-b", "opponent-a-weak"];
    for (i, x) in ids.iter().enumerate() {
        for y in ids.iter().skip(i + 1) {
            let a = CartridgeProfile::named(x).unwrap();
            let b = CartridgeProfile::named(y).unwrap();
            assert_distinct(&a, &b).unwrap_or_else(|e| panic!("{x} vs {y}: {e}"));
        }
    }
}

#[test]
fn unknown_profile_names_are_rejected() {
    assert!(CartridgeProfile::named("nonesuch").is_err());
}
