//! Replays a recorded self-play game from one player's point of view and
//! shows how the information set (the set of boards consistent with every
//! observation so far) grows on opponent moves and shrinks on senses.
//!
//! Run with: `cargo run -p rbc --example track_information_set`

use rbc::arena::{play_game, AttackerBot, RandomBot};
use rbc::infoset::InformationSet;
use rbc::rules::{Board, Color};

fn main() {
    // Record a short scripted game.
    let mut white = AttackerBot::new(Color::White, 3);
    let mut black = RandomBot::new(Color::Black, 99);
    let (summary, record) = play_game(&mut white, &mut black, 3);
    println!(
        "{} vs {}: winner {:?} ({}) after {} plies\n",
        record.white, record.black, summary.winner, summary.termination, summary.plies
    );

    // Track Black's knowledge ply by ply.
    let mut set = InformationSet::initial_with_cap(5000);
    println!("{:>4}  {:>6}  {:<28} event", "ply", "|set|", "");
    for (i, ply) in record.plies.iter().enumerate() {
        let obs = &ply.observation;
        let truth = Board::from_fen(&ply.post_fen).expect("valid record");
        if obs.color == Color::Black {
            set = set
                .expand_opponent(obs.opponent_capture_square)
                .expect("consistent record");
            println!(
                "{i:>4}  {:>6}  {:<28} opponent moved (capture: {:?})",
                set.len(),
                "",
                obs.opponent_capture_square
            );
            if let Some(sense) = &obs.sense {
                set = set.filter_sense(&sense.result).expect("consistent record");
                println!(
                    "{i:>4}  {:>6}  {:<28} sensed at {}",
                    set.len(),
                    "",
                    sense.center
                );
            }
            if let Some(mv) = &obs.own_move {
                set = set.filter_own_move(mv).expect("consistent record");
                println!(
                    "{i:>4}  {:>6}  {:<28} played {} -> {:?}",
                    set.len(),
                    "",
                    mv.requested,
                    mv.taken
                );
                assert!(
                    set.contains(&truth),
                    "the true board must stay in the tracked set"
                );
            }
        }
    }
    println!(
        "\nfinal set: {} boards (cap {}, truncated: {})",
        set.len(),
        set.cap(),
        set.truncated()
    );
}
