//! Command-line wiring: self-play data generation, training, evaluation,
//! weighting inspection, encoding dumps, and arena tournaments.

use crate::agent::{AgentConfig, Evaluator as _, MaterialEvaluator};
use crate::arena::{tournament, AgentBot, AttackerBot, Bot, BotFactory, RandomBot, RankingEval};
use crate::data::{
    build_triplets, read_game_dir, read_games, split, write_games, GameRecord, TripletDataset,
    TripletRecord,
};
use crate::encoding::{
    channel_names, encode_board, encode_history, encode_pair, encode_turn, PlaneStack, Roster,
};
use crate::infoset::ObservationHistory;
use crate::nn::checkpoint::{load_cnn, load_siamese, save_cnn, save_siamese};
use crate::nn::model::{CnnModel, NetworkConfig, SiameseModel};
use crate::nn::train::{train_cnn, train_siamese, TrainConfig};
use crate::rules::{Board, Color};
use crate::weighting::{
    CnnWeighter, EngineEvalWeighter, RandomWeighter, SiameseWeighter, UniformWeighter, Weighter,
    DEFAULT_TEMPERATURE,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(#[from] crate::data::DataError),
    #[error("checkpoint error: {0}")]
    Checkpoint(#[from] crate::nn::checkpoint::CheckpointError),
    #[error("{0}")]
    Arena(#[from] crate::arena::ArenaError),
    #[error("{0}")]
    Weighting(#[from] crate::weighting::WeightingError),
    #[error("{0}")]
    Rules(#[from] crate::rules::RulesError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("refusing to overwrite {0} (pass --force)")]
    WouldOverwrite(PathBuf),
    #[error("config file error: {0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::Io(_) | CliError::WouldOverwrite(_) => 3,
            CliError::Checkpoint(_) => 4,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "rbc", about = "Reconnaissance Blind Chess toolkit", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Master seed for all randomness.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// off | info | debug
    #[arg(long, global = true)]
    pub log_level: Option<String>,
    /// TOML file with defaults; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Allow overwriting existing output paths.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Siamese,
    Cnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Paper,
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Provider {
    Uniform,
    Random,
    Material,
    Siamese,
    Cnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StackKind {
    Board,
    Turn,
    History,
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlayerArg {
    White,
    Black,
}

impl From<PlayerArg> for Color {
    fn from(p: PlayerArg) -> Color {
        match p {
            PlayerArg::White => Color::White,
            PlayerArg::Black => Color::Black,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate self-play game logs.
    Selfplay {
        #[arg(long)]
        white: String,
        #[arg(long)]
        black: String,
        #[arg(long)]
        games: usize,
        #[arg(long)]
        out: PathBuf,
        /// Checkpoint for siamese bots.
        #[arg(long)]
        ckpt: Option<PathBuf>,
        /// Information-set cap for tracking bots.
        #[arg(long, default_value_t = 400)]
        cap: usize,
    },
    /// Train a weighting model on recorded games.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        model: ModelKind,
        #[arg(long, value_enum, default_value_t = Preset::Desk)]
        preset: Preset,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 1024)]
        batch_size: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        #[arg(long, default_value_t = 5000)]
        cap: usize,
    },
    /// Rank true boards within reconstructed information sets.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        provider: Provider,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
        temperature: f64,
        #[arg(long, default_value_t = 5000)]
        cap: usize,
        /// Evaluate at most this many decisions (0 = all).
        #[arg(long, default_value_t = 0)]
        max_samples: usize,
    },
    /// Round-robin tournament between named bots.
    Arena {
        /// Comma-separated: random, attacker, trout, uniform, siamese.
        #[arg(long)]
        bots: String,
        #[arg(long)]
        games: usize,
        /// Temperature sweep for siamese entries, e.g. "1,5,10,25,50".
        #[arg(long)]
        temps: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long, default_value_t = 400)]
        cap: usize,
    },
    /// Inspect the weighting of one recorded decision.
    Weigh {
        /// A `.rbcl` game file.
        #[arg(long)]
        games: PathBuf,
        #[arg(long, default_value_t = 0)]
        game_index: usize,
        #[arg(long, value_enum)]
        player: PlayerArg,
        /// Decision index within that player's triplets (default: last).
        #[arg(long)]
        turn: Option<usize>,
        #[arg(long, value_enum, default_value_t = Provider::Uniform)]
        provider: Provider,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
        temperature: f64,
        /// Write JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 5000)]
        cap: usize,
    },
    /// Dump a plane stack as an NPY array plus a channel-name sidecar.
    EncodeDump {
        #[arg(long, value_enum)]
        kind: StackKind,
        /// Board position for --kind board.
        #[arg(long)]
        fen: Option<String>,
        /// Game file for observation-derived stacks.
        #[arg(long)]
        games: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        game_index: usize,
        /// Ply index into the game.
        #[arg(long, default_value_t = 0)]
        ply: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Default, Deserialize)]
struct FileConfig {
    seed: Option<u64>,
    threads: Option<usize>,
    log_level: Option<String>,
}

#[derive(Debug, Serialize)]
struct ResolvedConfig<'a> {
    command: String,
    seed: u64,
    threads: usize,
    log_level: &'a str,
    force: bool,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file_cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str::<FileConfig>(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file_cfg.seed).unwrap_or(0);
    let threads = cli
        .threads
        .or(file_cfg.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let log_level = cli
        .log_level
        .clone()
        .or(file_cfg.log_level)
        .unwrap_or_else(|| "info".to_string());
    // The pool may already exist when run() is called twice in-process
    // (tests); that is fine, determinism never depends on thread count.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    let resolved = ResolvedConfig {
        command: format!("{:?}", cli.command),
        seed,
        threads,
        log_level: &log_level,
        force: cli.force,
    };
    println!(
        "resolved config: {}",
        serde_json::to_string(&resolved).expect("serializable")
    );
    let ctx = Ctx {
        seed,
        force: cli.force,
        verbose: log_level != "off",
    };
    match cli.command {
        Command::Selfplay {
            white,
            black,
            games,
            out,
            ckpt,
            cap,
        } => selfplay(&ctx, &white, &black, games, &out, ckpt.as_deref(), cap),
        Command::Train {
            data,
            model,
            preset,
            out,
            epochs,
            batch_size,
            lr,
            cap,
        } => train(&ctx, &data, model, preset, &out, epochs, batch_size, lr, cap),
        Command::Eval {
            data,
            provider,
            ckpt,
            report,
            temperature,
            cap,
            max_samples,
        } => eval(
            &ctx,
            &data,
            provider,
            ckpt.as_deref(),
            &report,
            temperature,
            cap,
            max_samples,
        ),
        Command::Arena {
            bots,
            games,
            temps,
            out,
            ckpt,
            cap,
        } => arena(&ctx, &bots, games, temps.as_deref(), &out, ckpt.as_deref(), cap),
        Command::Weigh {
            games,
            game_index,
            player,
            turn,
            provider,
            ckpt,
            temperature,
            out,
            cap,
        } => weigh(
            &ctx,
            &games,
            game_index,
            player.into(),
            turn,
            provider,
            ckpt.as_deref(),
            temperature,
            out.as_deref(),
            cap,
        ),
        Command::EncodeDump {
            kind,
            fen,
            games,
            game_index,
            ply,
            out,
        } => encode_dump(&ctx, kind, fen.as_deref(), games.as_deref(), game_index, ply, &out),
    }
}

struct Ctx {
    seed: u64,
    force: bool,
    verbose: bool,
}

impl Ctx {
    fn info(&self, msg: &str) {
        if self.verbose {
            println!("{msg}");
        }
    }

    fn fresh(&self, path: &Path) -> Result<(), CliError> {
        if path.exists() && !self.force {
            return Err(CliError::WouldOverwrite(path.to_path_buf()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Bot construction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BotKind {
    Random,
    Attacker,
    Trout,
    Uniform,
    Siamese,
}

fn parse_bot(name: &str) -> Result<BotKind, CliError> {
    match name {
        "random" => Ok(BotKind::Random),
        "attacker" => Ok(BotKind::Attacker),
        "trout" => Ok(BotKind::Trout),
        "uniform" => Ok(BotKind::Uniform),
        "siamese" => Ok(BotKind::Siamese),
        other => Err(CliError::Usage(format!(
            "unknown bot '{other}' (expected random, attacker, trout, uniform, siamese)"
        ))),
    }
}

struct CliBotFactory {
    label: String,
    kind: BotKind,
    model: Option<SiameseModel<f32>>,
    temperature: f64,
    cap: usize,
}

impl CliBotFactory {
    fn new(
        label: &str,
        kind: BotKind,
        ckpt: Option<&Path>,
        temperature: f64,
        cap: usize,
    ) -> Result<CliBotFactory, CliError> {
        let model = if kind == BotKind::Siamese {
            let path = ckpt.ok_or_else(|| {
                CliError::Usage("bot 'siamese' needs --ckpt".to_string())
            })?;
            Some(load_siamese::<f32>(path)?)
        } else {
            None
        };
        Ok(CliBotFactory {
            label: label.to_string(),
            kind,
            model,
            temperature,
            cap,
        })
    }
}

impl BotFactory for CliBotFactory {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn create(&self, color: Color, seed: u64) -> Box<dyn Bot + '_> {
        match self.kind {
            BotKind::Random => Box::new(RandomBot::new(color, seed)),
            BotKind::Attacker => Box::new(AttackerBot::new(color, seed)),
            BotKind::Trout => Box::new(crate::arena::trout_bot(color).with_cap(self.cap)),
            BotKind::Uniform => Box::new(
                AgentBot::new(
                    &self.label,
                    color,
                    Box::new(UniformWeighter),
                    Box::new(MaterialEvaluator::default()),
                    AgentConfig {
                        seed,
                        ..AgentConfig::default()
                    },
                )
                .with_cap(self.cap),
            ),
            BotKind::Siamese => {
                let model = self.model.as_ref().expect("validated at construction");
                Box::new(
                    AgentBot::new(
                        &self.label,
                        color,
                        Box::new(SiameseWeighter {
                            model,
                            temperature: self.temperature,
                        }),
                        Box::new(MaterialEvaluator::default()),
                        AgentConfig {
                            temperature: self.temperature,
                            seed,
                            ..AgentConfig::default()
                        },
                    )
                    .with_cap(self.cap),
                )
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn selfplay(
    ctx: &Ctx,
    white: &str,
    black: &str,
    games: usize,
    out: &Path,
    ckpt: Option<&Path>,
    cap: usize,
) -> Result<(), CliError> {
    let white_factory =
        CliBotFactory::new(white, parse_bot(white)?, ckpt, DEFAULT_TEMPERATURE, cap)?;
    let black_factory =
        CliBotFactory::new(black, parse_bot(black)?, ckpt, DEFAULT_TEMPERATURE, cap)?;
    std::fs::create_dir_all(out)?;
    for g in 0..games {
        let path = out.join(format!("game_{g:05}.rbcl"));
        ctx.fresh(&path)?;
        let seed = ctx.seed.wrapping_add(g as u64);
        let mut w = white_factory.create(Color::White, seed.wrapping_mul(2).wrapping_add(1));
        let mut b = black_factory.create(Color::Black, seed.wrapping_mul(2).wrapping_add(2));
        let (summary, record) = crate::arena::play_game(w.as_mut(), b.as_mut(), seed);
        write_games(&path, &[record])?;
        ctx.info(&format!(
            "game {g}: {} vs {} -> {:?} ({}, {} plies)",
            summary.white, summary.black, summary.winner, summary.termination, summary.plies
        ));
    }
    println!("selfplay: wrote {games} games to {}", out.display());
    Ok(())
}

struct LabeledTriplets {
    records: Vec<TripletRecord>,
    opponents: Vec<String>,
}

fn collect_triplets(games: &[GameRecord], cap: usize) -> Result<LabeledTriplets, CliError> {
    let mut records = Vec::new();
    let mut opponents = Vec::new();
    for game in games {
        for color in [Color::White, Color::Black] {
            let opponent = match color {
                Color::White => game.black.clone(),
                Color::Black => game.white.clone(),
            };
            let (triplets, _) = build_triplets(game, color, cap)?;
            for t in triplets {
                records.push(t);
                opponents.push(opponent.clone());
            }
        }
    }
    Ok(LabeledTriplets { records, opponents })
}

#[allow(clippy::too_many_arguments)]
fn train(
    ctx: &Ctx,
    data: &Path,
    model: ModelKind,
    preset: Preset,
    out: &Path,
    epochs: usize,
    batch_size: usize,
    lr: f64,
    cap: usize,
) -> Result<(), CliError> {
    ctx.fresh(out)?;
    let games = read_game_dir(data)?;
    if games.is_empty() {
        return Err(CliError::Usage(format!(
            "no .rbcl games found in {}",
            data.display()
        )));
    }
    let (train_games, test_games) = split(games, 0.9, ctx.seed);
    let train_set = TripletDataset::new(
        collect_triplets(&train_games, cap)?.records,
        Roster::default(),
    );
    let val_set = TripletDataset::new(
        collect_triplets(&test_games, cap)?.records,
        Roster::default(),
    );
    ctx.info(&format!(
        "train: {} train / {} val triplets from {} / {} games",
        train_set.records.len(),
        val_set.records.len(),
        train_games.len(),
        test_games.len()
    ));
    let net = match preset {
        Preset::Paper => NetworkConfig::paper(),
        Preset::Desk => NetworkConfig::desk(),
    };
    let cfg = TrainConfig {
        batch_size,
        max_epochs: epochs,
        seed: ctx.seed,
        optimizer: crate::nn::AdamWConfig {
            learning_rate: lr,
            ..Default::default()
        },
        ..TrainConfig::default()
    };
    let validation: Option<&dyn crate::nn::TripletSource> = if val_set.records.is_empty() {
        None
    } else {
        Some(&val_set)
    };
    let report = match model {
        ModelKind::Siamese => {
            let mut m = SiameseModel::<f32>::new(net, ctx.seed);
            let report = train_siamese(&mut m, &train_set, validation, &cfg);
            save_siamese(out, &m, ctx.seed)?;
            report
        }
        ModelKind::Cnn => {
            let mut m = CnnModel::<f32>::new(net, ctx.seed);
            let report = train_cnn(&mut m, &train_set, validation, &cfg);
            save_cnn(out, &m, ctx.seed)?;
            report
        }
    };
    let csv_path = out.with_extension("losses.csv");
    ctx.fresh(&csv_path)?;
    let mut csv = String::from("epoch,train_loss,val_loss\n");
    for (i, loss) in report.epoch_losses.iter().enumerate() {
        let val = report
            .val_losses
            .get(i)
            .map_or(String::new(), |v| format!("{v}"));
        let _ = writeln!(csv, "{i},{loss},{val}");
    }
    std::fs::write(&csv_path, csv)?;
    println!(
        "train: best epoch {} (monitored loss {:.6}), checkpoint {}",
        report.best_epoch,
        report.best_loss,
        out.display()
    );
    Ok(())
}

fn make_weighter<'a>(
    provider: Provider,
    ckpt: Option<&Path>,
    temperature: f64,
    seed: u64,
    siamese: &'a mut Option<SiameseModel<f32>>,
    cnn: &'a mut Option<CnnModel<f32>>,
) -> Result<Box<dyn Weighter + 'a>, CliError> {
    let need_ckpt = || CliError::Usage("this provider needs --ckpt".to_string());
    match provider {
        Provider::Uniform => Ok(Box::new(UniformWeighter)),
        Provider::Random => Ok(Box::new(RandomWeighter { seed, temperature })),
        Provider::Material => Ok(Box::new(EngineEvalWeighter {
            evaluate: |b: &Board| {
                MaterialEvaluator::default()
                    .evaluate_board(b, b.side_to_move)
                    .unwrap_or(0.0)
            },
            temperature,
        })),
        Provider::Siamese => {
            *siamese = Some(load_siamese::<f32>(ckpt.ok_or_else(need_ckpt)?)?);
            Ok(Box::new(SiameseWeighter {
                model: siamese.as_ref().unwrap(),
                temperature,
            }))
        }
        Provider::Cnn => {
            *cnn = Some(load_cnn::<f32>(ckpt.ok_or_else(need_ckpt)?)?);
            Ok(Box::new(CnnWeighter {
                model: cnn.as_ref().unwrap(),
            }))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn eval(
    ctx: &Ctx,
    data: &Path,
    provider: Provider,
    ckpt: Option<&Path>,
    report_path: &Path,
    temperature: f64,
    cap: usize,
    max_samples: usize,
) -> Result<(), CliError> {
    ctx.fresh(report_path)?;
    let games = read_game_dir(data)?;
    let labeled = collect_triplets(&games, cap)?;
    let mut records: Vec<(String, TripletRecord)> = labeled
        .opponents
        .into_iter()
        .zip(labeled.records)
        .collect();
    if max_samples > 0 {
        records.truncate(max_samples);
    }
    if records.is_empty() {
        return Err(CliError::Usage("no decisions to evaluate".to_string()));
    }
    let mut siamese = None;
    let mut cnn = None;
    let weighter = make_weighter(provider, ckpt, temperature, ctx.seed, &mut siamese, &mut cnn)?;
    let eval: RankingEval =
        crate::arena::evaluate_records(weighter.as_ref(), &records, &Roster::default())?;
    let json = serde_json::to_string_pretty(&eval).expect("serializable");
    std::fs::write(report_path, json)?;
    let curve_path = report_path.with_extension("curve.csv");
    ctx.fresh(&curve_path)?;
    let mut csv = String::from("k,top_k_percent\n");
    for (k, acc) in eval.curve.iter().enumerate() {
        let _ = writeln!(csv, "{},{acc}", k + 1);
    }
    std::fs::write(&curve_path, csv)?;
    println!(
        "eval: provider {} top-1 {:.4} median pick distance {:.1} over {} samples",
        eval.provider,
        eval.top1,
        eval.median_pick_distance,
        eval.samples.len()
    );
    Ok(())
}

fn arena(
    ctx: &Ctx,
    bots: &str,
    games: usize,
    temps: Option<&str>,
    out: &Path,
    ckpt: Option<&Path>,
    cap: usize,
) -> Result<(), CliError> {
    let names: Vec<&str> = bots.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.len() < 2 {
        return Err(CliError::Usage("need at least two bots".to_string()));
    }
    let temperatures: Vec<f64> = match temps {
        None => vec![DEFAULT_TEMPERATURE],
        Some(list) => list
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("bad temperature '{t}'")))
            })
            .collect::<Result<_, _>>()?,
    };
    let mut factories: Vec<CliBotFactory> = Vec::new();
    for name in names {
        let kind = parse_bot(name)?;
        if kind == BotKind::Siamese && temperatures.len() > 1 {
            for &t in &temperatures {
                factories.push(CliBotFactory::new(
                    &format!("siamese-t{t}"),
                    kind,
                    ckpt,
                    t,
                    cap,
                )?);
            }
        } else {
            factories.push(CliBotFactory::new(name, kind, ckpt, temperatures[0], cap)?);
        }
    }
    std::fs::create_dir_all(out)?;
    let report_json = out.join("report.json");
    let report_txt = out.join("report.txt");
    let games_path = out.join("games.rbcl");
    for p in [&report_json, &report_txt, &games_path] {
        ctx.fresh(p)?;
    }
    let refs: Vec<&dyn BotFactory> = factories.iter().map(|f| f as &dyn BotFactory).collect();
    let (report, records) = tournament(&refs, games, ctx.seed)?;
    std::fs::write(
        &report_json,
        serde_json::to_string_pretty(&report).expect("serializable"),
    )?;
    std::fs::write(&report_txt, report.text_table())?;
    write_games(&games_path, &records)?;
    print!("{}", report.text_table());
    println!("arena: reports in {}", out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct WeighEntry {
    fen: String,
    distance: Option<f64>,
    weight: f64,
    rank: usize,
}

#[allow(clippy::too_many_arguments)]
fn weigh(
    ctx: &Ctx,
    games_path: &Path,
    game_index: usize,
    player: Color,
    turn: Option<usize>,
    provider: Provider,
    ckpt: Option<&Path>,
    temperature: f64,
    out: Option<&Path>,
    cap: usize,
) -> Result<(), CliError> {
    let games = read_games(games_path)?;
    let game = games
        .get(game_index)
        .ok_or_else(|| CliError::Usage(format!("game index {game_index} out of range")))?;
    let (triplets, _) = build_triplets(game, player, cap)?;
    if triplets.is_empty() {
        return Err(CliError::Usage(
            "that player has no multi-board decisions in this game".to_string(),
        ));
    }
    let idx = turn.unwrap_or(triplets.len() - 1);
    let record = triplets
        .get(idx)
        .ok_or_else(|| CliError::Usage(format!("turn {idx} out of range (0..{})", triplets.len())))?;
    let mut boards = record.negative_pool.clone();
    boards.push(record.positive.clone());
    boards.sort();
    let mut siamese = None;
    let mut cnn = None;
    let weighter = make_weighter(provider, ckpt, temperature, ctx.seed, &mut siamese, &mut cnn)?;
    let weights = weighter.weights(&record.anchor, &boards, &Roster::default())?;
    drop(weighter);
    let distances: Option<Vec<f64>> = siamese.as_ref().map(|model| {
        let sw = SiameseWeighter { model, temperature };
        sw.distances(&record.anchor, &boards, &Roster::default())
            .expect("same inputs as weights")
    });
    let order = crate::weighting::rank_by_weight(&weights);
    let mut entries: Vec<WeighEntry> = Vec::with_capacity(boards.len());
    for (rank, &i) in order.iter().enumerate() {
        entries.push(WeighEntry {
            fen: boards[i].to_fen(),
            distance: distances.as_ref().map(|d| d[i]),
            weight: weights[i],
            rank: rank + 1,
        });
    }
    let json = serde_json::to_string_pretty(&entries).expect("serializable");
    match out {
        Some(path) => {
            ctx.fresh(path)?;
            std::fs::write(path, json)?;
            println!("weigh: wrote {} entries to {}", entries.len(), path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}

/// Writes an NPY v1.0 little-endian float32 array of shape (C, 8, 8).
fn write_npy(path: &Path, stack: &PlaneStack) -> Result<(), CliError> {
    let mut header = format!(
        "{{'descr': '<f4', 'fortran_order': False, 'shape': ({}, 8, 8), }}",
        stack.channels
    );
    // Pad with spaces so magic + header is a multiple of 64 bytes.
    let base = 10 + header.len() + 1;
    header.push_str(&" ".repeat(base.div_ceil(64) * 64 - base));
    header.push('\n');
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(b"\x93NUMPY\x01\x00")?;
    file.write_all(&(header.len() as u16).to_le_bytes())?;
    file.write_all(header.as_bytes())?;
    for &v in &stack.data {
        file.write_all(&v.to_le_bytes())?;
    }
    file.flush()?;
    Ok(())
}

fn encode_dump(
    ctx: &Ctx,
    kind: StackKind,
    fen: Option<&str>,
    games_path: Option<&Path>,
    game_index: usize,
    ply: usize,
    out: &Path,
) -> Result<(), CliError> {
    ctx.fresh(out)?;
    let sidecar = out.with_extension("channels.json");
    ctx.fresh(&sidecar)?;
    let stack = match kind {
        StackKind::Board => {
            let fen = fen.ok_or_else(|| CliError::Usage("--kind board needs --fen".to_string()))?;
            encode_board(&Board::from_fen(fen)?)
        }
        StackKind::Turn | StackKind::History | StackKind::Pair => {
            let path = games_path
                .ok_or_else(|| CliError::Usage("this kind needs --games".to_string()))?;
            let games = read_games(path)?;
            let game = games
                .get(game_index)
                .ok_or_else(|| CliError::Usage(format!("game index {game_index} out of range")))?;
            let target = game
                .plies
                .get(ply)
                .ok_or_else(|| CliError::Usage(format!("ply {ply} out of range")))?;
            match kind {
                StackKind::Turn => encode_turn(&target.observation),
                _ => {
                    let mover = target.observation.color;
                    let mut history = ObservationHistory::default();
                    for p in &game.plies[..=ply] {
                        if p.observation.color == mover {
                            history.turns.push(p.observation.clone());
                        }
                    }
                    if kind == StackKind::History {
                        encode_history(&history, &Roster::default())
                    } else {
                        encode_pair(
                            &history,
                            &Board::from_fen(&target.pre_fen)?,
                            &Roster::default(),
                        )
                    }
                }
            }
        }
    };
    write_npy(out, &stack)?;
    let names = channel_names(stack.channels);
    std::fs::write(
        &sidecar,
        serde_json::to_string_pretty(&serde_json::json!({
            "shape": [stack.channels, 8, 8],
            "dtype": "<f4",
            "channels": names,
        }))
        .expect("serializable"),
    )?;
    println!(
        "encode-dump: {} channels -> {} (+ {})",
        stack.channels,
        out.display(),
        sidecar.display()
    );
    Ok(())
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit semantics: 0 for --help/--version, 2 otherwise.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
