//! Compares weight providers on one decision: given a player's observation
//! history and tracked information set, each provider assigns a probability
//! to every candidate board. Distance-based softmin weighting should rank
//! the true board well above uniform chance.
//!
//! Run with: `cargo run -p rbc --example inspect_weights`

use rbc::arena::{play_game, AttackerBot, RandomBot};
use rbc::data::build_triplets;
use rbc::encoding::Roster;
use rbc::nn::{NetworkConfig, SiameseModel};
use rbc::rules::Color;
use rbc::weighting::{
    rank_by_weight, RandomWeighter, SiameseWeighter, UniformWeighter, Weighter,
};

fn main() {
    // Record a game and rebuild White's last decision: the anchor history,
    // the true board, and the rest of the information set.
    let mut white = AttackerBot::new(Color::White, 4);
    let mut black = RandomBot::new(Color::Black, 44);
    let (_, record) = play_game(&mut white, &mut black, 4);
    let (triplets, _) = build_triplets(&record, Color::White, 200).expect("replayable");
    let decision = triplets
        .iter()
        .rev()
        .find(|t| t.negative_pool.len() >= 9)
        .expect("a decision with a non-trivial set");

    let mut boards = vec![decision.positive.clone()];
    boards.extend(decision.negative_pool.iter().cloned());
    println!(
        "decision after {} turns, information set of {} boards (true board is #0)\n",
        decision.anchor.turns.len(),
        boards.len()
    );

    let model = SiameseModel::<f32>::new(NetworkConfig::desk(), 7);
    let roster = Roster::default();
    let providers: Vec<Box<dyn Weighter>> = vec![
        Box::new(UniformWeighter),
        Box::new(RandomWeighter {
            seed: 7,
            temperature: 10.0,
        }),
        Box::new(SiameseWeighter {
            model: &model,
            temperature: 10.0,
        }),
    ];
    println!(
        "{:<16} {:>12} {:>12} {:>14}",
        "provider", "weight(true)", "max weight", "rank of true"
    );
    for provider in &providers {
        let weights = provider
            .weights(&decision.anchor, &boards, &roster)
            .expect("weighting succeeds");
        let ranking = rank_by_weight(&weights);
        let rank = ranking.iter().position(|&i| i == 0).unwrap() + 1;
        let max = weights.iter().cloned().fold(f64::MIN, f64::max);
        println!(
            "{:<16} {:>12.4} {:>12.4} {:>10} / {}",
            provider.name(),
            weights[0],
            max,
            rank,
            boards.len()
        );
    }
    println!(
        "\n(the siamese model here is untrained; see the train_weighter example\n\
         for producing a checkpoint that separates true boards from decoys)"
    );
}
