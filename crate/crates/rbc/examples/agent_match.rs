//! Plays the full weighted agent against a random mover: the agent tracks
//! an information set, weights the candidate boards, senses where the
//! weighted uncertainty is highest, and plays the move with the best
//! weighted evaluation.
//!
//! Run with: `cargo run -p rbc --example agent_match` (about a minute)

use rbc::agent::{AgentConfig, MaterialEvaluator};
use rbc::arena::{play_game, AgentBot, RandomBot};
use rbc::nn::{NetworkConfig, SiameseModel};
use rbc::rules::Color;
use rbc::weighting::SiameseWeighter;

fn main() {
    // An untrained model still exercises the whole pipeline; load a trained
    // checkpoint with `rbc::nn::checkpoint::load_siamese` for real strength.
    let model = SiameseModel::<f32>::new(NetworkConfig::desk(), 1);
    let mut score = [0usize; 3];
    for g in 0..4u64 {
        let agent_color = if g % 2 == 0 { Color::White } else { Color::Black };
        let mut agent = AgentBot::new(
            "siamese",
            agent_color,
            Box::new(SiameseWeighter {
                model: &model,
                temperature: 10.0,
            }),
            Box::new(MaterialEvaluator::default()),
            AgentConfig {
                seed: g,
                ..AgentConfig::default()
            },
        )
        .with_cap(400);
        let mut random = RandomBot::new(agent_color.opponent(), g ^ 0x7777);
        let (summary, _) = match agent_color {
            Color::White => play_game(&mut agent, &mut random, g),
            Color::Black => play_game(&mut random, &mut agent, g),
        };
        let result = match summary.winner {
            Some(c) if c == agent_color => {
                score[0] += 1;
                "win"
            }
            None => {
                score[1] += 1;
                "draw"
            }
            Some(_) => {
                score[2] += 1;
                "loss"
            }
        };
        println!(
            "game {g}: agent as {agent_color:?} -> {result} ({}) in {} plies",
            summary.termination, summary.plies
        );
    }
    println!("\nagent score: {}W/{}D/{}L", score[0], score[1], score[2]);
}
