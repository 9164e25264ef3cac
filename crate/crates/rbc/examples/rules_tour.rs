//! A quick tour of the blind-chess rules engine: requests instead of legal
//! moves, silent truncation of sliding moves, sensing, and win-by-capture.
//!
//! Run with: `cargo run -p rbc --example rules_tour`

use rbc::rules::{
    apply_request, outcome, playable_moves, sense, successor_outcomes, Board, MoveRequest, Square,
};

fn main() {
    let board = Board::initial();
    println!("start position: {}", board.to_fen());
    println!(
        "distinct opening outcomes (incl. pass): {}",
        successor_outcomes(&board).len()
    );
    println!("playable requests: {}", playable_moves(&board).len());

    // In blind chess you may request any move. An illegal request is
    // converted, not rejected: this bishop is blocked by its own pawn, so
    // the request resolves to a pass.
    let blocked = MoveRequest::parse("f1b5").unwrap();
    let (_, oc) = apply_request(&board, blocked).unwrap();
    println!(
        "\nrequest {blocked}: resolved to {:?} (was_illegal = {})",
        oc.taken, oc.was_illegal
    );

    // A sliding move through an enemy piece truncates at the first capture.
    let truncating =
        Board::from_fen("rnbqkbnr/ppp1pppp/8/3p4/8/8/PPP1PPPP/RNBQKBNR w KQkq - 0 1").unwrap();
    let long = MoveRequest::parse("d1d8").unwrap();
    let (_, oc) = apply_request(&truncating, long).unwrap();
    println!(
        "request {long} (queen up the d-file, enemy pawn on d5): taken {:?}, capture at {:?}",
        oc.taken, oc.capture_square
    );

    // Sensing reveals the true contents of a 3x3 window.
    let center = Square::parse("e7").unwrap();
    let window = sense(&board, center);
    println!("\nsense at {center}:");
    for (sq, contents) in &window.cells {
        if let Some((color, piece)) = contents {
            println!("  {sq}: {color:?} {piece:?}");
        }
    }

    // The game ends when a king is captured, not by checkmate.
    let near_end = Board::from_fen("8/8/8/8/8/8/3k4/3QK3 w - - 0 1").unwrap();
    let take_king = MoveRequest::parse("d1d2").unwrap();
    let (finished, _) = apply_request(&near_end, take_king).unwrap();
    println!("\nafter capturing the king: {:?}", outcome(&finished));
}
