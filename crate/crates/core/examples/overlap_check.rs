//! Scratch: verifies profile distinctness and prints sample overlaps.
use brainlab_core::cartridge::{assert_distinct, overlap, sample_positions, CartridgeProfile};

fn main() {
    let a = CartridgeProfile::opponent_a();
    let weak = CartridgeProfile::opponent_a_weak();
    let b = CartridgeProfile::opponent_b();
    assert_distinct(&a, &weak).expect("a vs weak distinct");
    assert_distinct(&weak, &b).expect("weak vs b distinct");
    println!("distinctness ok");
    let sample = sample_positions(0x9e1d, 500, 10, 70);
    println!("overlap(a, b)    = {}", overlap(&a, &b, &sample).unwrap());
    println!("overlap(a, weak) = {}", overlap(&a, &weak, &sample).unwrap());
    println!("overlap(expressive, a) = {}", overlap(&CartridgeProfile::expressive(), &a, &sample).unwrap());
}
