//! Acceptance suite: one test per criterion, each printing a single
//! PASS line with its pinned tolerances when it succeeds. Criteria 1, 2
//! and 8 check the library against independently written brute-force
//! oracles; 10–12 share one set of desk-scale trained artifacts.


use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rbc::agent::{
    choose_move, sense_score, AgentConfig, AgentError, Evaluator, MaterialEvaluator,
};
use rbc::arena::{
    evaluate_records, play_game, random_ranking_mean_pick_distance, top_k_percent, AgentBot,
    CheatingOracle, PairResult, RandomBot, RankingSample, TournamentReport,
};
use rbc::data::build_triplets;
use rbc::encoding::{
    decode_board, encode_board, encode_history, encode_pair, encode_turn, PlaneStack, Roster,
    BOARD_CHANNELS, HISTORY_CHANNELS, PAIR_CHANNELS, TURN_CHANNELS,
};
use rbc::infoset::InformationSet;
use rbc::nn::layers::{elu, elu_grad_from_output, Conv, Fc, Grads, ParamStore, Planes};
use rbc::nn::train::{semi_hard_choice, train_cnn, train_siamese, TripletSource};
use rbc::nn::{
    bce_with_logit, euclidean_distance, triplet_loss, CnnModel, NetworkConfig, SiameseModel,
    TrainConfig,
};
use rbc::rules::{
    self, apply_request, outcome, playable_moves, successor_outcomes, Board, Color, MoveOutcome,
    MoveRequest, Outcome, Square,
};
use rbc::weighting::softmin_weights;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

fn passed(number: u32, name: &str, detail: &str) {
    println!("criterion {number} ({name}): PASS — {detail}");
}

fn sq(name: &str) -> Square {
    Square::parse(name).expect("valid square")
}

// ---------------------------------------------------------------------------
// 1. Rules oracle equivalence
// ---------------------------------------------------------------------------

/// Random mid-game board reached by `turns` full turns of seeded play.
fn random_prefix(rng: &mut ChaCha12Rng, turns: usize) -> Board {
    let mut board = Board::initial();
    for _ in 0..2 * turns {
        if outcome(&board) != Outcome::Ongoing {
            break;
        }
        let moves = playable_moves(&board);
        let mv = *moves.choose(rng).expect("ongoing boards have moves");
        board = apply_request(&board, mv).expect("playable move applies").0;
    }
    board
}

#[test]
fn criterion_01_rules_oracle_equivalence() {
    let start = Instant::now();
    assert_eq!(
        successor_outcomes(&Board::initial()).len(),
        21,
        "initial position must have exactly 21 distinct outcomes"
    );
    let requests = oracle::all_requests();
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0001);
    let mut boards_checked = 0usize;
    for _ in 0..1000 {
        let board = random_prefix(&mut rng, 3);
        if outcome(&board) != Outcome::Ongoing {
            continue;
        }
        boards_checked += 1;
        for &req in &requests {
            let lib = apply_request(&board, req);
            let orc = oracle::oracle_apply(&board, req);
            match (lib, orc) {
                (Ok((lb, loc)), Some((ob, ooc))) => {
                    assert_eq!(lb, ob, "boards diverge on {req:?} at {}", board.to_fen());
                    assert_eq!(loc, ooc, "outcomes diverge on {req:?} at {}", board.to_fen());
                }
                (Err(_), None) => {}
                (lib, orc) => panic!(
                    "adjudication disagreement on {req:?} at {}: lib ok={} oracle some={}",
                    board.to_fen(),
                    lib.is_ok(),
                    orc.is_some()
                ),
            }
        }
        let lib: BTreeSet<(Board, Option<Square>)> = successor_outcomes(&board)
            .into_iter()
            .map(|(b, oc)| (b, oc.capture_square))
            .collect();
        assert_eq!(
            lib,
            oracle::oracle_successors(&board),
            "successor sets diverge at {}",
            board.to_fen()
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(60),
        "runtime budget exceeded: {elapsed:?}"
    );
    passed(
        1,
        "rules oracle equivalence",
        &format!(
            "21 initial outcomes; {boards_checked} random 3-turn prefixes, every request adjudicated identically, in {:.1}s (< 60s)",
            elapsed.as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Information-set exactness
// ---------------------------------------------------------------------------

struct BruteSet {
    boards: BTreeSet<Board>,
}

impl BruteSet {
    fn expand(&mut self, observed_capture: Option<Square>) {
        let mut next = BTreeSet::new();
        for b in &self.boards {
            for (succ, capture) in oracle::oracle_actions(b) {
                if capture == observed_capture {
                    next.insert(succ);
                }
            }
        }
        self.boards = next;
    }

    fn filter_sense(&mut self, truth: &Board, center: Square) {
        let want = oracle::oracle_window(truth, center);
        self.boards.retain(|b| oracle::oracle_window(b, center) == want);
    }

    fn filter_own_move(&mut self, observed: &MoveOutcome) {
        let mut next = BTreeSet::new();
        for b in &self.boards {
            if let Some((succ, oc)) = oracle::oracle_apply(b, observed.requested) {
                if oc == *observed {
                    next.insert(succ);
                }
            }
        }
        self.boards = next;
    }
}

#[test]
fn criterion_02_information_set_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0002);
    let mut comparisons = 0usize;
    for _ in 0..200 {
        let mut truth = Board::initial();
        let mut lib = [
            InformationSet::initial_with_cap(usize::MAX),
            InformationSet::initial_with_cap(usize::MAX),
        ];
        let mut brute = [
            BruteSet {
                boards: BTreeSet::from([Board::initial()]),
            },
            BruteSet {
                boards: BTreeSet::from([Board::initial()]),
            },
        ];
        for ply in 0..6 {
            if outcome(&truth) != Outcome::Ongoing {
                break;
            }
            let mover = truth.side_to_move;
            let mi = mover as usize;
            let oi = mover.opponent() as usize;
            // The mover senses a random square, then plays a random request
            // (mostly playable, sometimes arbitrary so that illegal-request
            // observations get exercised too).
            let center = Square::all().choose(&mut rng).expect("64 squares");
            let result = rules::sense(&truth, center);
            lib[mi] = lib[mi].filter_sense(&result).expect("truth stays in set");
            brute[mi].filter_sense(&truth, center);
            let req = if rng.random_range(0..4) == 0 {
                let from = Square::all().choose(&mut rng).unwrap();
                let to = Square::all().choose(&mut rng).unwrap();
                if from == to {
                    MoveRequest::Pass
                } else {
                    MoveRequest::mv(from, to)
                }
            } else {
                *playable_moves(&truth).choose(&mut rng).expect("ongoing")
            };
            let (next, oc) = apply_request(&truth, req).expect("ongoing board");
            lib[mi] = lib[mi].filter_own_move(&oc).expect("truth stays in set");
            brute[mi].filter_own_move(&oc);
            lib[oi] = lib[oi]
                .expand_opponent(oc.capture_square)
                .expect("truth stays in set");
            brute[oi].expand(oc.capture_square);
            truth = next;
            for p in [0, 1] {
                let tracked: BTreeSet<Board> = lib[p].boards().iter().cloned().collect();
                assert_eq!(
                    tracked, brute[p].boards,
                    "sets diverge for player {p} after ply {ply}"
                );
                comparisons += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(300),
        "runtime budget exceeded: {elapsed:?}"
    );
    passed(
        2,
        "information-set exactness",
        &format!(
            "200 random 3-turn games, {comparisons} set comparisons against the brute-force oracle, all equal, in {:.1}s (< 300s)",
            elapsed.as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// 3. True-board membership
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_true_board_membership() {
    let mut checked_games = 0usize;
    let mut decisions = 0usize;
    let mut seed = 0u64;
    while checked_games < 50 {
        let record = support::scripted_game(seed);
        seed += 1;
        // Keep games short enough that the uncapped set stays tractable.
        if record.plies.len() > 14 {
            continue;
        }
        for color in [Color::White, Color::Black] {
            // An uncapped build verifies the true board's membership at
            // every decision and errors out if it is ever absent.
            let (_, stats) = build_triplets(&record, color, usize::MAX)
                .expect("true board present at every decision");
            assert_eq!(stats.clipped, 0, "uncapped sets cannot clip");
            decisions += stats.produced + stats.singleton;
        }
        checked_games += 1;
    }
    passed(
        3,
        "true-board membership",
        &format!("50 self-play games, true board present in all {decisions} tracked decisions (100%)"),
    );
}

// ---------------------------------------------------------------------------
// 4. Encoding conformance
// ---------------------------------------------------------------------------

fn assert_binary(stack: &PlaneStack, what: &str) {
    assert!(
        stack.data.iter().all(|&v| v == 0.0 || v == 1.0),
        "{what} has a non-binary plane value"
    );
}

#[test]
fn criterion_04_encoding_conformance() {
    assert_eq!(BOARD_CHANNELS, 12);
    assert_eq!(TURN_CHANNELS, 90);
    assert_eq!(1 + 73 + 1 + 1 + 6 + 1 + 6 + 1, 90);
    assert_eq!(HISTORY_CHANNELS, 20 * TURN_CHANNELS + 50);
    assert_eq!(HISTORY_CHANNELS, 1850);
    assert_eq!(PAIR_CHANNELS, HISTORY_CHANNELS + BOARD_CHANNELS);
    assert_eq!(PAIR_CHANNELS, 1862);

    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0004);
    // Round-trip spot check: decoding inverts encoding on random boards.
    for _ in 0..25 {
        let board = random_prefix(&mut rng, 4);
        let stack = encode_board(&board);
        assert_eq!(stack.channels, BOARD_CHANNELS);
        assert_binary(&stack, "board stack");
        let decoded = decode_board(&stack);
        assert_eq!(decoded.placement, board.placement, "board encode/decode round trip");
    }
    // The initial position: 8 pawns on the white pawn plane, kings on one
    // square each.
    let init = encode_board(&Board::initial());
    assert_eq!(init.popcount(0), 8, "white pawn plane");
    assert_eq!(init.popcount(5), 1, "white king plane");
    assert_eq!(init.popcount(11), 1, "black king plane");
    assert_eq!(init.get(0, sq("e2")), 1.0);
    assert_eq!(init.get(5, sq("e1")), 1.0);

    // Observation stacks from replayed games stay binary and sized.
    let record = support::scripted_game(0);
    let (triplets, _) = build_triplets(&record, Color::Black, 50).expect("replayable");
    let anchor = &triplets.last().expect("black has decisions").anchor;
    let turn_stack = encode_turn(anchor.turns.last().expect("non-empty history"));
    assert_eq!(turn_stack.channels, TURN_CHANNELS);
    assert_binary(&turn_stack, "turn stack");
    let hist_stack = encode_history(anchor, &Roster::default());
    assert_eq!(hist_stack.channels, HISTORY_CHANNELS);
    assert_binary(&hist_stack, "history stack");
    let pair_stack = encode_pair(anchor, &triplets.last().unwrap().positive, &Roster::default());
    assert_eq!(pair_stack.channels, PAIR_CHANNELS);
    assert_binary(&pair_stack, "pair stack");
    // History is oldest-first and zero-padded at the old end, so the most
    // recent turn occupies the last 90-channel turn slot.
    let last_slot = (20 - 1) * TURN_CHANNELS;
    for c in 0..TURN_CHANNELS {
        assert_eq!(
            hist_stack.channel(last_slot + c),
            turn_stack.channel(c),
            "history channel {} must equal latest turn channel {c}",
            last_slot + c
        );
    }
    passed(
        4,
        "encoding conformance",
        "budgets 90/1850/1862 hold, planes binary, round-trip and layout spot checks exact",
    );
}

// ---------------------------------------------------------------------------
// 5. Gradient correctness
// ---------------------------------------------------------------------------

const FD_TOLERANCE: f64 = 1e-4;
const FD_STEP: f64 = 1e-5;

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-10 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Checks `grad[i] ≈ dL/dparam[i]` for 20 random parameter probes.
fn probe_params<F: Fn(&ParamStore<f64>) -> f64>(
    store: &mut ParamStore<f64>,
    grads: &Grads<f64>,
    loss: F,
    rng: &mut ChaCha12Rng,
    what: &str,
) {
    for _ in 0..20 {
        let pid = rng.random_range(0..store.params.len());
        let idx = rng.random_range(0..store.params[pid].values.len());
        let orig = store.params[pid].values[idx];
        store.params[pid].values[idx] = orig + FD_STEP;
        let up = loss(store);
        store.params[pid].values[idx] = orig - FD_STEP;
        let down = loss(store);
        store.params[pid].values[idx] = orig;
        let fd = (up - down) / (2.0 * FD_STEP);
        let an = grads.bufs[pid][idx];
        assert!(
            rel_err(fd, an) < FD_TOLERANCE,
            "{what}: param {pid}[{idx}] finite-diff {fd:.8} vs analytic {an:.8}"
        );
    }
}

fn random_planes(rng: &mut ChaCha12Rng, channels: usize) -> Planes<f64> {
    let mut p = Planes::zeros(channels);
    for c in 0..channels {
        for i in 0..64 {
            p.channel_mut(c)[i] = rng.random_range(-1.0..1.0);
        }
    }
    p
}

fn random_stack(rng: &mut ChaCha12Rng, channels: usize) -> PlaneStack {
    let mut s = PlaneStack::zeros(channels);
    for c in 0..channels {
        for square in Square::all() {
            if rng.random_range(0..3) == 0 {
                s.set(c, square);
            }
        }
    }
    s
}

#[test]
fn criterion_05_gradient_correctness() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0005);

    // Convolutions (3x3 and 1x1) and the fully connected layer: probe
    // dL/dtheta of L = sum(c_i * y_i) for random fixed coefficients c.
    for kernel in [3usize, 1] {
        let mut store = ParamStore::<f64>::new();
        let conv = Conv::new(&mut store, &mut rng, "probe", 4, 5, kernel);
        let x = random_planes(&mut rng, 4);
        let coeff = random_planes(&mut rng, 5);
        let mut grads = Grads::zeros_like(&store);
        let y = conv.forward(&store, &x);
        let dy = coeff.clone();
        let dx = conv
            .backward(&store, &x, &dy, &mut grads, true)
            .expect("requested input gradient");
        let loss = |s: &ParamStore<f64>| {
            let y = conv.forward(s, &x);
            (0..5)
                .flat_map(|c| (0..64).map(move |i| (c, i)))
                .map(|(c, i)| coeff.channel(c)[i] * y.channel(c)[i])
                .sum()
        };
        let _ = y;
        probe_params(&mut store, &grads, loss, &mut rng, &format!("conv{kernel}"));
        // Input gradient probes as well.
        for _ in 0..20 {
            let c = rng.random_range(0..4);
            let i = rng.random_range(0..64);
            let mut xp = x.clone();
            xp.channel_mut(c)[i] += FD_STEP;
            let up: f64 = {
                let y = conv.forward(&store, &xp);
                (0..5)
                    .flat_map(|cc| (0..64).map(move |ii| (cc, ii)))
                    .map(|(cc, ii)| coeff.channel(cc)[ii] * y.channel(cc)[ii])
                    .sum()
            };
            xp.channel_mut(c)[i] -= 2.0 * FD_STEP;
            let down: f64 = {
                let y = conv.forward(&store, &xp);
                (0..5)
                    .flat_map(|cc| (0..64).map(move |ii| (cc, ii)))
                    .map(|(cc, ii)| coeff.channel(cc)[ii] * y.channel(cc)[ii])
                    .sum()
            };
            let fd = (up - down) / (2.0 * FD_STEP);
            assert!(
                rel_err(fd, dx.channel(c)[i]) < FD_TOLERANCE,
                "conv{kernel} input grad at {c},{i}"
            );
        }
    }

    {
        let mut store = ParamStore::<f64>::new();
        let fc = Fc::new(&mut store, &mut rng, "probe", 10, 7);
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let coeff: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut grads = Grads::zeros_like(&store);
        let _ = fc.backward(&store, &x, &coeff, &mut grads);
        let loss = |s: &ParamStore<f64>| {
            fc.forward(s, &x)
                .iter()
                .zip(&coeff)
                .map(|(y, c)| y * c)
                .sum()
        };
        probe_params(&mut store, &grads, loss, &mut rng, "fc");
    }

    // ELU activation, both sides of the kink.
    for _ in 0..20 {
        let x: f64 = rng.random_range(-3.0..3.0);
        let fd = (elu(x + FD_STEP) - elu(x - FD_STEP)) / (2.0 * FD_STEP);
        let an = elu_grad_from_output(elu(x));
        assert!(rel_err(fd, an) < FD_TOLERANCE, "elu at {x}");
    }

    // Binary cross-entropy with logits.
    for _ in 0..20 {
        let logit: f64 = rng.random_range(-4.0..4.0);
        let target = f64::from(rng.random_range(0..2u32));
        let (_, dlogit) = bce_with_logit(logit, target);
        let fd = (bce_with_logit(logit + FD_STEP, target).0
            - bce_with_logit(logit - FD_STEP, target).0)
            / (2.0 * FD_STEP);
        assert!(rel_err(fd, dlogit) < FD_TOLERANCE, "bce at {logit}, {target}");
    }

    // The composed triplet objective through a small Siamese network.
    {
        let config = NetworkConfig {
            encoder_layers: 1,
            encoder_filters: 4,
            trunk_layers: 3,
            trunk_filters: 6,
            embedding_dim: 8,
            margin: 1.0,
        };
        let model = SiameseModel::<f64>::new(config, 5);
        let anchor = random_stack(&mut rng, HISTORY_CHANNELS);
        let positive = random_stack(&mut rng, BOARD_CHANNELS);
        let negative = random_stack(&mut rng, BOARD_CHANNELS);
        let loss_of = |m: &SiameseModel<f64>| {
            let a = m.embed(&anchor).unwrap();
            let p = m.embed(&positive).unwrap();
            let n = m.embed(&negative).unwrap();
            triplet_loss(&a, &p, &n, 1.0).loss
        };
        let mut model = model;
        let mut grads = Grads::zeros_like(&model.store);
        {
            let at = model.embed_tape(&anchor).unwrap();
            let pt = model.embed_tape(&positive).unwrap();
            let nt = model.embed_tape(&negative).unwrap();
            let g = triplet_loss(at.embedding(), pt.embedding(), nt.embedding(), 1.0);
            assert!(g.loss > 0.0, "probe triplet must have an active hinge");
            model.backward(&at, &g.danchor, &mut grads);
            model.backward(&pt, &g.dpositive, &mut grads);
            model.backward(&nt, &g.dnegative, &mut grads);
        }
        for _ in 0..20 {
            let pid = rng.random_range(0..model.store.params.len());
            let idx = rng.random_range(0..model.store.params[pid].values.len());
            let orig = model.store.params[pid].values[idx];
            model.store.params[pid].values[idx] = orig + FD_STEP;
            let up = loss_of(&model);
            model.store.params[pid].values[idx] = orig - FD_STEP;
            let down = loss_of(&model);
            model.store.params[pid].values[idx] = orig;
            let fd = (up - down) / (2.0 * FD_STEP);
            let an = grads.bufs[pid][idx];
            assert!(
                rel_err(fd, an) < FD_TOLERANCE,
                "triplet objective: param {pid}[{idx}] fd {fd:.8} vs analytic {an:.8}"
            );
        }
    }

    // The composed classification objective through the CNN baseline.
    {
        let config = NetworkConfig {
            encoder_layers: 1,
            encoder_filters: 4,
            trunk_layers: 2,
            trunk_filters: 6,
            embedding_dim: 8,
            margin: 1.0,
        };
        let mut model = CnnModel::<f64>::new(config, 6);
        let input = random_stack(&mut rng, PAIR_CHANNELS);
        let mut grads = Grads::zeros_like(&model.store);
        {
            let tape = model.forward_tape(&input).unwrap();
            let (_, dlogit) = bce_with_logit(tape.logit(), 1.0);
            model.backward(&tape, dlogit, &mut grads);
        }
        for _ in 0..20 {
            let pid = rng.random_range(0..model.store.params.len());
            let idx = rng.random_range(0..model.store.params[pid].values.len());
            let orig = model.store.params[pid].values[idx];
            model.store.params[pid].values[idx] = orig + FD_STEP;
            let up = bce_with_logit(model.forward_tape(&input).unwrap().logit(), 1.0).0;
            model.store.params[pid].values[idx] = orig - FD_STEP;
            let down = bce_with_logit(model.forward_tape(&input).unwrap().logit(), 1.0).0;
            model.store.params[pid].values[idx] = orig;
            let fd = (up - down) / (2.0 * FD_STEP);
            let an = grads.bufs[pid][idx];
            assert!(
                rel_err(fd, an) < FD_TOLERANCE,
                "cnn objective: param {pid}[{idx}] fd {fd:.8} vs analytic {an:.8}"
            );
        }
    }

    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(120),
        "runtime budget exceeded: {elapsed:?}"
    );
    passed(
        5,
        "gradient correctness",
        &format!(
            "20 double-precision central-difference probes per primitive and per composed objective, rel err < 1e-4, in {:.1}s (< 120s)",
            elapsed.as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Triplet-loss identities and semi-hard selection
// ---------------------------------------------------------------------------

/// Fixed in-memory triplet source over raw plane stacks.
struct StackSource {
    anchor: PlaneStack,
    positive: PlaneStack,
    negatives: Vec<PlaneStack>,
}

impl TripletSource for StackSource {
    fn len(&self) -> usize {
        1
    }
    fn anchor(&self, _: usize) -> PlaneStack {
        self.anchor.clone()
    }
    fn positive(&self, _: usize) -> PlaneStack {
        self.positive.clone()
    }
    fn pool_size(&self, _: usize) -> usize {
        self.negatives.len()
    }
    fn negative(&self, _: usize, j: usize) -> PlaneStack {
        self.negatives[j].clone()
    }
}

#[test]
fn criterion_06_triplet_loss_identities() {
    // d_p = d_n with margin 1 gives loss exactly 1.
    let a = [0.0f64, 0.0];
    let p = [3.0, 4.0];
    let n = [-3.0, 4.0];
    let g = triplet_loss(&a, &p, &n, 1.0);
    assert_eq!(g.loss, 1.0);
    // Whenever d_n >= d_p + 1 the hinge is exactly zero.
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0006);
    for _ in 0..200 {
        let a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d_p = euclidean_distance(&a, &p);
        // Place n on a ray from a at distance d_p + 1 + slack.
        let slack: f64 = rng.random_range(0.0..2.0);
        let target = d_p + 1.0 + slack;
        let mut dir: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = euclidean_distance(&dir, &[0.0; 4]);
        for d in &mut dir {
            *d *= target / norm;
        }
        let n: Vec<f64> = a.iter().zip(&dir).map(|(av, dv)| av + dv).collect();
        let g = triplet_loss(&a, &p, &n, 1.0);
        assert_eq!(g.loss, 0.0, "hinge must be exactly zero at slack {slack}");
    }

    // Semi-hard selection returns the arg-min-distance sampled negative.
    let model = SiameseModel::<f64>::new(NetworkConfig::desk(), 3);
    for trial in 0..25 {
        let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0600 + trial);
        let source = StackSource {
            anchor: random_stack(&mut rng, HISTORY_CHANNELS),
            positive: random_stack(&mut rng, BOARD_CHANNELS),
            negatives: (0..6).map(|_| random_stack(&mut rng, BOARD_CHANNELS)).collect(),
        };
        let sampled: Vec<usize> = (0..3).map(|_| rng.random_range(0..6)).collect();
        let anchor_emb = model.embed(&source.anchor).unwrap();
        let chosen = semi_hard_choice(&model, &anchor_emb, &source, 0, &sampled);
        let best = sampled
            .iter()
            .copied()
            .min_by(|&x, &y| {
                let dx = euclidean_distance(&anchor_emb, &model.embed(&source.negatives[x]).unwrap());
                let dy = euclidean_distance(&anchor_emb, &model.embed(&source.negatives[y]).unwrap());
                dx.partial_cmp(&dy).expect("finite distances")
            })
            .expect("non-empty sample");
        let d_chosen =
            euclidean_distance(&anchor_emb, &model.embed(&source.negatives[chosen]).unwrap());
        let d_best =
            euclidean_distance(&anchor_emb, &model.embed(&source.negatives[best]).unwrap());
        assert_eq!(d_chosen, d_best, "semi-hard pick must be the nearest sampled negative");
    }
    passed(
        6,
        "triplet-loss identities",
        "loss(m=1, d_p=d_n)=1 exactly, hinge 0 whenever d_n>=d_p+1, semi-hard pick = sampled arg-min",
    );
}

// ---------------------------------------------------------------------------
// 7. Softmin properties
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_softmin_properties() {
    let t = 7.0;
    let w = softmin_weights(&[0.0, t * 3f64.ln()], t).unwrap();
    assert!((w[0] - 0.75).abs() < 1e-9, "closer board gets 0.75, got {}", w[0]);
    assert!((w[1] - 0.25).abs() < 1e-9, "farther board gets 0.25, got {}", w[1]);

    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0007);
    for _ in 0..1000 {
        let len = rng.random_range(2..12);
        let d: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..10.0)).collect();
        // Huge temperature flattens to uniform.
        let flat = softmin_weights(&d, 1e9).unwrap();
        for &w in &flat {
            assert!((w - 1.0 / len as f64).abs() < 1e-8, "t=1e9 must be uniform");
        }
        let w = softmin_weights(&d, 10.0).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        // Monotone: smaller distance, larger weight.
        for i in 0..len {
            for j in 0..len {
                if d[i] < d[j] {
                    assert!(w[i] > w[j], "monotonicity violated");
                }
            }
        }
        // Shift invariance.
        let shift: f64 = rng.random_range(-5.0..5.0);
        let shifted: Vec<f64> = d.iter().map(|x| x + shift).collect();
        let ws = softmin_weights(&shifted, 10.0).unwrap();
        for (a, b) in w.iter().zip(&ws) {
            assert!((a - b).abs() < 1e-9, "shift invariance violated");
        }
    }
    passed(
        7,
        "softmin properties",
        "[0, t ln 3] -> [0.75, 0.25] within 1e-9; t=1e9 uniform within 1e-8; monotone and shift-invariant on 1000 random vectors",
    );
}

// ---------------------------------------------------------------------------
// 8. Sense-scoring oracle equivalence
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_sense_scoring_oracle() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0008);
    for _ in 0..500 {
        let n = rng.random_range(2..=20);
        let boards: Vec<Board> = (0..n)
            .map(|_| {
                let turns = rng.random_range(1..4);
                random_prefix(&mut rng, turns)
            })
            .collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let refs: Vec<&Board> = boards.iter().collect();
        for center in Square::interior() {
            // Brute-force expected eliminated mass: bucket the boards by
            // their window contents via the independent oracle.
            let total: f64 = weights.iter().sum();
            let mut buckets: std::collections::BTreeMap<String, f64> = Default::default();
            for (b, &w) in boards.iter().zip(&weights) {
                let key = format!("{:?}", oracle::oracle_window(b, center));
                *buckets.entry(key).or_default() += w;
            }
            let expected: f64 = buckets
                .values()
                .map(|&mass| (mass / total) * (total - mass))
                .sum();
            let got = sense_score(&refs, &weights, center);
            assert!(
                (got - expected).abs() < 1e-9,
                "sense score diverges at {center}: {got} vs {expected}"
            );
        }
    }
    // Hand case: two boards weighted 0.7/0.3 that a window separates.
    let a = Board::initial();
    let b = apply_request(&a, MoveRequest::mv(sq("e2"), sq("e4")))
        .unwrap()
        .0;
    let mut b = b;
    b.side_to_move = Color::White;
    let refs = [&a, &b];
    let score = sense_score(&refs, &[0.7, 0.3], sq("e4"));
    assert!(
        (score - 0.42).abs() < 1e-12,
        "hand case [0.7, 0.3] must score exactly 0.42, got {score}"
    );
    passed(
        8,
        "sense-scoring oracle equivalence",
        "500 random weighted sets (<= 20 boards), all 36 interior squares within 1e-9 of the brute-force oracle; hand case 0.42 exact",
    );
}

// ---------------------------------------------------------------------------
// 9. Weighted move scoring scenario
// ---------------------------------------------------------------------------

struct ScenarioEvaluator {
    capture: MoveRequest,
    retreat: MoveRequest,
    pawn_near: Board,
}

impl Evaluator for ScenarioEvaluator {
    fn best_move(&self, board: &Board) -> Result<MoveRequest, AgentError> {
        Ok(if *board == self.pawn_near {
            self.capture
        } else {
            self.retreat
        })
    }
    fn evaluate_board(&self, _: &Board, _: Color) -> Result<f64, AgentError> {
        Ok(0.0)
    }
    fn evaluate_move(&self, board: &Board, mv: MoveRequest) -> Result<f64, AgentError> {
        Ok(if mv == self.retreat {
            0.99
        } else if *board == self.pawn_near {
            1.0
        } else {
            -1.0
        })
    }
}

#[test]
fn criterion_09_weighted_move_scenario() {
    // Two hypotheses: a pawn the king can safely take, or the same pawn one
    // rank further so that taking walks into disaster. The quiet king move
    // is good on both boards.
    let pawn_near = Board::from_fen("4k3/8/8/8/8/8/3p4/4K3 w - - 0 1").unwrap();
    let pawn_far = Board::from_fen("4k3/8/8/8/8/3p4/8/4K3 w - - 0 1").unwrap();
    let capture = MoveRequest::mv(sq("e1"), sq("d2"));
    let retreat = MoveRequest::mv(sq("e1"), sq("f1"));
    let eval = ScenarioEvaluator {
        capture,
        retreat,
        pawn_near: pawn_near.clone(),
    };
    let set = InformationSet::from_boards(vec![pawn_near, pawn_far], 5000);
    let weights = [0.5, 0.5];
    let refs: Vec<&Board> = set.boards().iter().collect();
    let capture_score = rbc::agent::score_move(capture, &refs, &weights, &eval).unwrap();
    assert!(
        capture_score.abs() < 1e-12,
        "opposing capture evaluations must cancel to 0, got {capture_score}"
    );
    let retreat_score = rbc::agent::score_move(retreat, &refs, &weights, &eval).unwrap();
    assert!((retreat_score - 0.99).abs() < 1e-12);
    let chosen = choose_move(&set, &weights, &eval, &AgentConfig::default()).unwrap();
    assert_eq!(chosen, retreat, "the safe king move must win");
    passed(
        9,
        "weighted move scoring scenario",
        "two-board position: captures cancel to 0 exactly, retreat scores 0.99 and is chosen",
    );
}

// ---------------------------------------------------------------------------
// 10. Learning sanity at desk scale
// ---------------------------------------------------------------------------

/// Synthetic memorization task: each record's anchor is a sparse history
/// stack whose most recent turn carries the positive board's planes, and
/// the negative pool holds other records' boards. A correctly wired model
/// can drive the triplet loss to zero by matching those channels.
struct SyntheticSource {
    anchors: Vec<PlaneStack>,
    boards: Vec<PlaneStack>,
    pools: Vec<Vec<usize>>,
}

impl SyntheticSource {
    fn generate(n: usize, pool: usize, seed: u64) -> SyntheticSource {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut boards = Vec::with_capacity(n);
        let mut anchors = Vec::with_capacity(n);
        for _ in 0..n {
            let mut board = PlaneStack::zeros(BOARD_CHANNELS);
            for _ in 0..10 {
                let c = rng.random_range(0..BOARD_CHANNELS);
                board.set(c, *Square::all().collect::<Vec<_>>().choose(&mut rng).unwrap());
            }
            let mut anchor = PlaneStack::zeros(HISTORY_CHANNELS);
            // The board planes sit where a real history's latest own-piece
            // and sense channels live, plus a little random clutter.
            anchor.splice((20 - 1) * TURN_CHANNELS + 76, &board);
            for _ in 0..8 {
                let c = rng.random_range(0..(20 - 1) * TURN_CHANNELS);
                anchor.set(c, *Square::all().collect::<Vec<_>>().choose(&mut rng).unwrap());
            }
            boards.push(board);
            anchors.push(anchor);
        }
        let pools = (0..n)
            .map(|i| {
                let mut negs = Vec::with_capacity(pool);
                while negs.len() < pool {
                    let j = rng.random_range(0..n);
                    if j != i && !negs.contains(&j) {
                        negs.push(j);
                    }
                }
                negs
            })
            .collect();
        SyntheticSource {
            anchors,
            boards,
            pools,
        }
    }
}

impl TripletSource for SyntheticSource {
    fn len(&self) -> usize {
        self.anchors.len()
    }
    fn anchor(&self, i: usize) -> PlaneStack {
        self.anchors[i].clone()
    }
    fn positive(&self, i: usize) -> PlaneStack {
        self.boards[i].clone()
    }
    fn pool_size(&self, i: usize) -> usize {
        self.pools[i].len()
    }
    fn negative(&self, i: usize, j: usize) -> PlaneStack {
        self.boards[self.pools[i][j]].clone()
    }
}

#[test]
fn criterion_10_learning_sanity() {
    let start = Instant::now();
    let source = SyntheticSource::generate(256, 4, 0xACCE_0010);

    let mut model = SiameseModel::<f32>::new(NetworkConfig::desk(), 11);
    let config = TrainConfig {
        batch_size: 32,
        max_epochs: 200,
        patience: 200,
        optimizer: rbc::nn::AdamWConfig {
            learning_rate: 1e-3,
            weight_decay: 0.0,
            ..rbc::nn::AdamWConfig::default()
        },
        seed: 11,
        ..TrainConfig::default()
    };
    let report = train_siamese(&mut model, &source, None, &config);
    let final_loss = *report.epoch_losses.last().expect("at least one epoch");

    // Training top-1: the positive must out-rank every pool negative.
    let mut top1_hits = 0usize;
    for i in 0..source.len() {
        let anchor = model.embed(&source.anchor(i)).unwrap();
        let d_pos = euclidean_distance(&anchor, &model.embed(&source.positive(i)).unwrap());
        let beaten = (0..source.pool_size(i)).all(|j| {
            let d_neg = euclidean_distance(&anchor, &model.embed(&source.negative(i, j)).unwrap());
            d_pos < d_neg
        });
        if beaten {
            top1_hits += 1;
        }
    }
    let top1 = top1_hits as f64 / source.len() as f64;

    let mut cnn = CnnModel::<f32>::new(NetworkConfig::desk(), 12);
    train_cnn(&mut cnn, &source, None, &config);
    // Classification accuracy over each record's positive pair and its
    // first pool negative.
    let pair_of = |i: usize, board: &PlaneStack| {
        let mut pair = PlaneStack::zeros(PAIR_CHANNELS);
        pair.splice(0, &source.anchors[i]);
        pair.splice(HISTORY_CHANNELS, board);
        pair
    };
    let mut correct = 0usize;
    let mut total = 0usize;
    for i in 0..source.len() {
        if cnn.predict(&pair_of(i, &source.boards[i])).unwrap() > 0.5 {
            correct += 1;
        }
        total += 1;
        let neg = &source.boards[source.pools[i][0]];
        if cnn.predict(&pair_of(i, neg)).unwrap() < 0.5 {
            correct += 1;
        }
        total += 1;
    }
    let accuracy = correct as f64 / total as f64;

    let elapsed = start.elapsed();
    assert!(
        final_loss < 0.05,
        "siamese must overfit to mean triplet loss < 0.05, got {final_loss:.4} after {} epochs",
        report.epoch_losses.len()
    );
    assert!(top1 > 0.90, "training top-1 must exceed 90%, got {top1:.4}");
    assert!(accuracy > 0.95, "CNN training accuracy must exceed 95%, got {accuracy:.4}");
    assert!(
        elapsed < Duration::from_secs(900),
        "runtime budget exceeded: {elapsed:?}"
    );
    passed(
        10,
        "learning sanity at desk scale",
        &format!(
            "256 synthetic records: siamese loss {final_loss:.4} (< 0.05), top-1 {:.1}% (> 90%), CNN accuracy {:.1}% (> 95%), in {:.0}s (< 900s)",
            top1 * 100.0,
            accuracy * 100.0,
            elapsed.as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// 11. Scaled ranking analog
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_scaled_ranking_analog() {
    let art = support::artifacts();
    let bound = 3.0 * art.uniform_expectation;
    assert_eq!(art.eval_siamese.curve.len(), 100, "full top-k curve emitted");
    assert_eq!(art.eval_cnn.curve.len(), 100, "full top-k curve emitted");
    assert!(
        art.eval_siamese.median_pick_distance >= 1.0
            && art.eval_siamese.p25_pick_distance <= art.eval_siamese.p75_pick_distance,
        "pick-distance summary emitted and ordered"
    );
    assert!(
        art.eval_siamese.top1 >= bound,
        "siamese test top-1 {:.4} must be >= 3x uniform expectation {:.4}",
        art.eval_siamese.top1,
        bound
    );
    assert!(
        art.eval_cnn.top1 >= bound,
        "cnn test top-1 {:.4} must be >= 3x uniform expectation {:.4}",
        art.eval_cnn.top1,
        bound
    );
    passed(
        11,
        "scaled ranking analog",
        &format!(
            "2000 scripted games: siamese top-1 {:.3}, cnn top-1 {:.3}, both >= 3x uniform expectation {:.3}; curves and pick-distance summaries emitted",
            art.eval_siamese.top1, art.eval_cnn.top1, art.uniform_expectation * 3.0
        ),
    );
}

// ---------------------------------------------------------------------------
// 12. Arena sanity
// ---------------------------------------------------------------------------

fn siamese_vs_random(
    model: &SiameseModel<f32>,
    temperature: f64,
    cap: usize,
    games: usize,
    seed_base: u64,
) -> (usize, usize, usize, Vec<rbc::arena::GameSummary>) {
    let mut wins = 0;
    let mut draws = 0;
    let mut losses = 0;
    let mut summaries = Vec::new();
    for g in 0..games {
        let agent_color = if g % 2 == 0 { Color::White } else { Color::Black };
        let seed = seed_base + g as u64;
        let mut agent = AgentBot::new(
            "siamese",
            agent_color,
            Box::new(support::CachedSiamese::new(model, temperature)),
            Box::new(MaterialEvaluator::default()),
            AgentConfig {
                temperature,
                seed,
                ..AgentConfig::default()
            },
        )
        .with_cap(cap);
        let mut random = RandomBot::new(agent_color.opponent(), seed ^ 0x5151);
        let (summary, _) = match agent_color {
            Color::White => play_game(&mut agent, &mut random, seed),
            Color::Black => play_game(&mut random, &mut agent, seed),
        };
        match summary.winner {
            Some(c) if c == agent_color => wins += 1,
            Some(_) => losses += 1,
            None => draws += 1,
        }
        summaries.push(summary);
    }
    (wins, draws, losses, summaries)
}

#[test]
fn criterion_12_arena_sanity() {
    let art = support::artifacts();
    let (wins, draws, losses, _) = siamese_vs_random(&art.siamese, 10.0, 5000, 50, 0xA12A);
    let rate = wins as f64 / 50.0;

    // Temperature sweep: each temperature plays a short seeded match and
    // lands in one win-percentage table.
    let mut pairs = Vec::new();
    for &t in &[1.0, 5.0, 10.0, 25.0, 50.0] {
        let (w, d, l, summaries) =
            siamese_vs_random(&art.siamese, t, 400, 4, 0xBEEF + (t as u64) * 101);
        pairs.push(PairResult {
            bot_a: format!("siamese-t{t}"),
            bot_b: "random".to_string(),
            wins: w,
            draws: d,
            losses: l,
            games: summaries,
        });
    }
    let sweep = TournamentReport {
        seed: 0xBEEF,
        games_per_pair: 4,
        pairs,
    };
    let table = sweep.text_table();
    println!("{table}");
    assert_eq!(sweep.pairs.len(), 5, "all five temperatures completed");
    assert!(table.contains("siamese-t1") && table.contains("siamese-t50"));
    assert!(
        rate >= 0.90,
        "siamese agent must beat the random bot in >= 90% of 50 games, got {wins}W/{draws}D/{losses}L"
    );
    passed(
        12,
        "arena sanity",
        &format!(
            "siamese (t=10, material) {wins}W/{draws}D/{losses}L vs random ({:.0}% >= 90%); temperature sweep table emitted",
            rate * 100.0
        ),
    );
}

// ---------------------------------------------------------------------------
// 13. Metric identities
// ---------------------------------------------------------------------------

#[test]
fn criterion_13_metric_identities() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0013);
    let samples: Vec<RankingSample> = (0..500)
        .map(|_| {
            let set_size = rng.random_range(1..400);
            RankingSample {
                set_size,
                pick_distance: rng.random_range(1..=set_size),
            }
        })
        .collect();
    let all = top_k_percent(&samples, 100).unwrap();
    assert_eq!(all, 1.0, "top_k_percent(k=100) must be exactly 1");

    let mean = random_ranking_mean_pick_distance(101, 10_000, 13);
    let expected = 51.0;
    assert!(
        (mean - expected).abs() / expected < 0.05,
        "random mean pick-distance at N=101 must be within 5% of 51, got {mean:.2}"
    );

    // The cheating oracle ranks the true board first on every decision.
    let record = support::scripted_game(2);
    let labeled = support::labeled_triplets(&[record], support::TRIPLET_CAP);
    assert!(!labeled.is_empty());
    let eval = evaluate_records(&CheatingOracle, &labeled, &Roster::default()).unwrap();
    assert_eq!(eval.top1, 1.0, "cheating oracle must score top-1 = 1.0");
    passed(
        13,
        "metric identities",
        &format!("top_k(100)=1 exact; random mean pick-distance {mean:.2} within 5% of 51; oracle top-1 = 1.0"),
    );
}

// ---------------------------------------------------------------------------
// 14. Determinism
// ---------------------------------------------------------------------------

fn run_cli(args: &[&str]) {
    let mut full = vec!["rbc"];
    full.extend_from_slice(args);
    assert_eq!(rbc::cli::main_with_args(full), 0, "subcommand failed: {args:?}");
}

fn dir_digest(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut entries = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("readable dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                entries.push((rel, std::fs::read(&path).expect("readable file")));
            }
        }
    }
    entries.sort();
    entries
}

#[test]
fn criterion_14_determinism() {
    let base = tempfile::tempdir().expect("tempdir");
    let mut digests = Vec::new();
    for round in 0..2 {
        let root = base.path().join(format!("round{round}"));
        std::fs::create_dir_all(&root).unwrap();
        let p = |name: &str| root.join(name).to_string_lossy().into_owned();
        run_cli(&[
            "selfplay", "--white", "attacker", "--black", "random", "--games", "3", "--seed",
            "42", "--out", &p("games"),
        ]);
        run_cli(&[
            "train", "--data", &p("games"), "--model", "siamese", "--preset", "desk", "--epochs",
            "2", "--batch-size", "16", "--seed", "42", "--out", &p("model.ckpt"),
        ]);
        run_cli(&[
            "eval", "--data", &p("games"), "--provider", "siamese", "--ckpt", &p("model.ckpt"),
            "--seed", "42", "--report", &p("eval.json"),
        ]);
        run_cli(&[
            "arena", "--bots", "random,attacker", "--games", "4", "--seed", "42", "--out",
            &p("arena"),
        ]);
        run_cli(&[
            "weigh", "--games", &root.join("games").join("game_00000.rbcl").to_string_lossy(),
            "--player", "black", "--provider", "siamese", "--ckpt", &p("model.ckpt"), "--seed",
            "42", "--out", &p("weigh.json"),
        ]);
        run_cli(&[
            "encode-dump", "--kind", "pair",
            "--games", &root.join("games").join("game_00001.rbcl").to_string_lossy(),
            "--ply", "2", "--out", &p("stack.npy"),
        ]);
        digests.push(dir_digest(&root));
    }
    assert_eq!(
        digests[0].len(),
        digests[1].len(),
        "reruns must produce the same files"
    );
    for (a, b) in digests[0].iter().zip(&digests[1]) {
        assert_eq!(a.0, b.0, "file sets diverge");
        assert_eq!(a.1, b.1, "file {} is not bit-identical across reruns", a.0);
    }
    let files = digests[0].len();
    passed(
        14,
        "determinism",
        &format!("all six subcommands rerun with identical seeds: {files} output files bit-identical"),
    );
}
