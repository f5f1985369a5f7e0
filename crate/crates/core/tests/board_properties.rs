//! Integration checks for the board layer: the frozen node-count table,
//! FEN round-trips over sampled play, and move-encoding stability.

use brainlab_core::board::{
    extract_context, extract_sensors, is_attacked, legal_moves, perft, ContextInputs, Move,
    Position, CONTEXT_LEN, SENSOR_LEN,
};
use brainlab_core::cartridge::sample_positions;

const PERFT_TABLE: &str = include_str!("../golden/perft.txt");

fn parse_table() -> Vec<(String, Vec<u64>)> {
    PERFT_TABLE
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let (fen, counts) = line.split_once(" => ").expect("malformed row");
            let counts = counts
                .trim_matches(|c| c == '[' || c == ']')
                .split(',')
                .map(|n| n.trim().parse().expect("bad count"))
                .collect();
            (fen.to_string(), counts)
        })
        .collect()
}

#[test]
fn node_counts_match_the_frozen_table() {
    let table = parse_table();
    assert_eq!(table.len(), 10, "expected 10 frozen positions");
    for (fen, counts) in table {
        let pos = Position::from_fen(&fen).expect("frozen FEN parses");
        assert_eq!(counts.len(), 4, "{fen}: expected depths 1-4");
        for (depth, &want) in counts.iter().enumerate() {
            let got = perft(&pos, depth as u32 + 1);
            assert_eq!(got, want, "{fen} depth {}", depth + 1);
        }
    }
}

#[test]
fn fen_round_trips_over_sampled_positions() {
    for pos in sample_positions(0xf3a7, 200, 2, 90) {
        let fen = pos.to_fen();
        let back = Position::from_fen(&fen).expect("own FEN parses");
        assert_eq!(back, pos, "value round-trip failed for {fen}");
        assert_eq!(back.to_fen(), fen, "string round-trip failed for {fen}");
    }
}

#[test]
fn start_fen_matches_the_constant() {
    assert_eq!(Position::start().to_fen(), brainlab_core::board::START_FEN);
}

#[test]
fn legal_moves_never_leave_the_mover_in_check() {
    for pos in sample_positions(0xbe11, 60, 0, 70) {
        let mover = pos.side_to_move();
        for mv in legal_moves(&pos) {
            let next = pos.apply_move(mv);
            assert!(
                !is_attacked(&next, next.king_square(mover), mover.flip()),
                "move {} from {} exposes the king",
                mv.to_uci(),
                pos.to_fen()
            );
        }
    }
}

#[test]
fn uci_encoding_round_trips_every_legal_move() {
    for pos in sample_positions(0x0c1d, 80, 0, 80) {
        for mv in legal_moves(&pos) {
            let text = mv.to_uci();
            assert_eq!(Move::from_uci(&text).unwrap(), mv, "uci {text}");
        }
    }
}

#[test]
fn feature_vectors_have_fixed_length_and_bounded_values() {
    for (i, pos) in sample_positions(0x5e45, 100, 0, 100).into_iter().enumerate() {
        let sensors = extract_sensors(&pos);
        assert_eq!(sensors.len(), SENSOR_LEN);
        let inputs = ContextInputs {
            ply: i as u32,
            ply_cap: 120,
            last_move_was_capture: i % 2 == 0,
        };
        let context = extract_context(&pos, &inputs);
        assert_eq!(context.len(), CONTEXT_LEN);
        for v in sensors.iter().chain(context.iter()) {
            assert!((-1.0..=1.0).contains(v), "feature {v} out of range");
            assert!(v.is_finite());
        }
    }
}
