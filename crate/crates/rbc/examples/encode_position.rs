//! Shows the network input encodings: 12 binary planes per board, 90 per
//! observed turn, 1850 for a 20-turn history with opponent one-hot, and
//! 1862 for the history+board pair the CNN baseline consumes.
//!
//! Run with: `cargo run -p rbc --example encode_position`

use rbc::arena::{play_game, AttackerBot, RandomBot};
use rbc::data::build_triplets;
use rbc::encoding::{
    channel_names, encode_board, encode_history, encode_pair, Roster, BOARD_CHANNELS,
    HISTORY_CHANNELS, PAIR_CHANNELS,
};
use rbc::rules::{Board, Color};

fn main() {
    let board = Board::initial();
    let stack = encode_board(&board);
    let names = channel_names(BOARD_CHANNELS);
    println!("board encoding: {} channels of 8x8 binary planes", stack.channels);
    for c in 0..stack.channels {
        println!("  {:<22} {:>2} set squares", names[c], stack.popcount(c));
    }

    // Build a real observation history by replaying a recorded game.
    let mut white = AttackerBot::new(Color::White, 8);
    let mut black = RandomBot::new(Color::Black, 80);
    let (_, record) = play_game(&mut white, &mut black, 8);
    let (triplets, _) = build_triplets(&record, Color::White, 200).expect("replayable");
    let last = triplets.last().expect("white made decisions");

    let roster = Roster::default();
    let hist = encode_history(&last.anchor, &roster);
    println!(
        "\nhistory encoding after {} turns: {} channels ({} non-empty)",
        last.anchor.turns.len(),
        HISTORY_CHANNELS,
        (0..hist.channels).filter(|&c| hist.popcount(c) > 0).count()
    );

    let pair = encode_pair(&last.anchor, &last.positive, &roster);
    println!(
        "pair encoding (history + candidate board): {} channels",
        PAIR_CHANNELS
    );
    assert!(pair.data.iter().all(|&v| v == 0.0 || v == 1.0));
    println!("all plane values are exactly 0 or 1");
}
