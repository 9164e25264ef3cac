//! End-to-end training loop at toy scale: record self-play games, build
//! anchor/positive/negative triplets, train the small Siamese preset for a
//! few epochs, and save a checkpoint.
//!
//! Run with: `cargo run -p rbc --example train_weighter`
//! (takes a couple of minutes on one core)

use rbc::arena::{play_game, AttackerBot, RandomBot};
use rbc::data::{build_triplets, split, GameRecord, TripletDataset};
use rbc::encoding::Roster;
use rbc::nn::checkpoint::save_siamese;
use rbc::nn::train::train_siamese;
use rbc::nn::{NetworkConfig, SiameseModel, TrainConfig};
use rbc::rules::Color;

fn main() {
    // 1. Record a small corpus of scripted self-play games.
    let games: Vec<GameRecord> = (0..60)
        .map(|seed| {
            let mut white = AttackerBot::new(Color::White, seed);
            let mut black = RandomBot::new(Color::Black, seed ^ 0xbeef);
            play_game(&mut white, &mut black, seed).1
        })
        .collect();
    let (train_games, val_games) = split(games, 0.9, 1);

    // 2. Build triplet records: at each decision the observation history is
    // the anchor, the true board the positive, and the rest of the tracked
    // information set the negative pool.
    let build = |games: &[GameRecord]| {
        let mut records = Vec::new();
        for game in games {
            for color in [Color::White, Color::Black] {
                let (r, _) = build_triplets(game, color, 100).expect("replayable");
                records.extend(r);
            }
        }
        records
    };
    let train_records = build(&train_games);
    let val_records = build(&val_games);
    println!(
        "dataset: {} training / {} validation triplets",
        train_records.len(),
        val_records.len()
    );
    let train_set = TripletDataset::new(train_records, Roster::default());
    let val_set = TripletDataset::new(val_records, Roster::default());

    // 3. Train the small preset briefly with semi-hard negative mining.
    let mut model = SiameseModel::<f32>::new(NetworkConfig::desk(), 42);
    let config = TrainConfig {
        batch_size: 64,
        max_epochs: 3,
        seed: 42,
        ..TrainConfig::default()
    };
    let report = train_siamese(&mut model, &train_set, Some(&val_set), &config);
    for (epoch, loss) in report.epoch_losses.iter().enumerate() {
        match report.val_losses.get(epoch) {
            Some(val) => println!("epoch {epoch}: train loss {loss:.4}, val loss {val:.4}"),
            None => println!("epoch {epoch}: train loss {loss:.4}"),
        }
    }

    // 4. Save a checkpoint that the CLI and other examples can load.
    let out = std::env::temp_dir().join("rbc_example_siamese.ckpt");
    save_siamese(&out, &model, 42).expect("writable temp dir");
    println!("checkpoint saved to {}", out.display());
}
