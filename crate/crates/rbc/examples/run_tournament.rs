//! Runs a small round-robin tournament between three bots: a uniform random
//! mover, an aggressive scripted opener, and the uniform-weighting agent
//! with a shallow material search.
//!
//! Run with: `cargo run -p rbc --example run_tournament`
//! (a few minutes on one core)

use rbc::arena::{tournament, AttackerBot, BotFactory, FnFactory, RandomBot};

fn main() {
    let random = FnFactory {
        bot_name: "random".to_string(),
        build: |color, seed| Box::new(RandomBot::new(color, seed)) as _,
    };
    let attacker = FnFactory {
        bot_name: "attacker".to_string(),
        build: |color, seed| Box::new(AttackerBot::new(color, seed)) as _,
    };
    let trout = FnFactory {
        bot_name: "trout".to_string(),
        build: |color, _seed| Box::new(rbc::arena::trout_bot(color)) as _,
    };
    let factories: Vec<&dyn BotFactory> = vec![&random, &attacker, &trout];

    let (report, games) = tournament(&factories, 4, 2024).expect("at least two bots");
    println!("{}", report.text_table());
    println!("{} games recorded", games.len());
    for pair in &report.pairs {
        for game in &pair.games {
            println!(
                "  {} vs {}: {:?} ({}) in {} plies",
                game.white, game.black, game.winner, game.termination, game.plies
            );
        }
    }
}
