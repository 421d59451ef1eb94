use ndarray::{Array1, Array2};

use domsim::arena::benchmark_kingdom;
use domsim::bots::{default_decision, preset, Heuristics};
use domsim::cards::{sample_kingdom, CardId};
use domsim::engine::{DecisionKind, GameState, Step};
use domsim::rl::*;
use domsim::rng::{derive_seed, GameRng};

fn random_batch(n: usize, rng: &mut GameRng) -> (Array2<f64>, Vec<usize>, Vec<f64>) {
    let x = Array2::from_shape_fn((n, STATE_DIM), |_| rng.unit() * FEATURE_CAP);
    let actions = (0..n).map(|_| rng.index(ACTIONS)).collect();
    let targets = (0..n).map(|_| rng.unit() * 2.0 - 1.0).collect();
    (x, actions, targets)
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = GameRng::new(17);
    let net = Mlp::new(&[STATE_DIM, 256, 256, ACTIONS], &mut rng);
    let (x, actions, targets) = random_batch(8, &mut rng);
    let (_, grads) = net.loss_and_grad(x.view(), &actions, &targets);
    let analytic: Vec<f64> = grads.params().copied().collect();
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let pattern = net.active_units(x.view());
    let mut checked = 0;
    while checked < 100 {
        let k = rng.index(net.parameter_count());
        let mut plus = net.clone();
        *plus.params_mut().nth(k).unwrap() += h;
        let mut minus = net.clone();
        *minus.params_mut().nth(k).unwrap() -= h;
        // The loss is not differentiable where a step flips a rectifier.
        if plus.active_units(x.view()) != pattern || minus.active_units(x.view()) != pattern {
            continue;
        }
        checked += 1;
        let numeric = (plus.loss(x.view(), &actions, &targets) - minus.loss(x.view(), &actions, &targets)) / (2.0 * h);
        let scale = analytic[k].abs().max(numeric.abs());
        let rel = if scale < 1e-10 { 0.0 } else { (analytic[k] - numeric).abs() / scale };
        worst = worst.max(rel);
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn summed_gradient_is_sum_of_parts() {
    let mut rng = GameRng::new(4);
    let net = Mlp::new(&[STATE_DIM, 32, 32, ACTIONS], &mut rng);
    let (x, actions, targets) = random_batch(6, &mut rng);
    let (_, whole) = net.loss_and_grad(x.view(), &actions, &targets);
    let mut parts = vec![0.0; net.parameter_count()];
    for i in 0..6 {
        let xi = x.slice(ndarray::s![i..i + 1, ..]);
        let (_, g) = net.loss_and_grad(xi, &actions[i..i + 1], &targets[i..i + 1]);
        for (p, v) in parts.iter_mut().zip(g.params()) {
            *p += v / 6.0;
        }
    }
    for (a, b) in whole.params().zip(&parts) {
        assert!((a - b).abs() < 1e-12);
    }
}

fn terminal_batch(rng: &mut GameRng) -> Vec<Transition> {
    (0..32)
        .map(|_| {
            let s: State = std::array::from_fn(|_| rng.unit());
            let r = [-1.0, 0.0, 1.0][rng.index(3)];
            Transition::new(&s, rng.index(ACTIONS), r, None)
        })
        .collect()
}

#[test]
fn overfits_one_batch() {
    let mut rng = GameRng::new(8);
    let config = TrainConfig::default();
    let mut learner = Learner::from_config(&config, &mut rng);
    let batch = terminal_batch(&mut rng);
    let refs: Vec<&Transition> = batch.iter().collect();
    let start = learner.batch_loss(&refs);
    let mut steps = 0;
    while learner.batch_loss(&refs) >= 1e-3 && steps < 5000 {
        learner.train_step(&refs);
        steps += 1;
    }
    let end = learner.batch_loss(&refs);
    assert!(end < 1e-3, "loss {start} -> {end} after {steps} steps");
}

#[test]
fn bandit_prefers_better_arm() {
    // One fixed state where only Silver and declining are legal. Silver pays
    // +1 with probability 0.7 and -1 otherwise; declining pays 0.
    let mut rng = GameRng::new(21);
    let mut learner = Learner::from_config(&TrainConfig::default(), &mut rng);
    let mut s: State = [0.0; STATE_DIM];
    s[CardId::Copper.index() * 4 + 1] = 0.7;
    s[CardId::Estate.index() * 4 + 1] = 0.3;
    s[NUM_SCALARS_AT] = 3.0 / 8.0;
    let mut mask = [false; ACTIONS];
    mask[CardId::Silver.index()] = true;
    mask[DECLINE] = true;
    let mut replay = Replay::new(1000);
    for step in 0..1000 {
        let q = learner.online.forward(Array1::from(s.to_vec()).view()).unwrap();
        let eps = 1.0 - 0.9 * step as f64 / 1000.0;
        let a = epsilon_greedy(q.as_slice().unwrap(), &mask, eps, &mut rng);
        assert!(mask[a]);
        let r = if a == DECLINE {
            0.0
        } else if rng.unit() < 0.7 {
            1.0
        } else {
            -1.0
        };
        replay.push(Transition::new(&s, a, r, None));
        if replay.len() >= 32 {
            let batch = replay.sample(32, &mut rng);
            learner.train_step(&batch);
        }
    }
    let q = learner.online.forward(Array1::from(s.to_vec()).view()).unwrap();
    assert_eq!(greedy(q.as_slice().unwrap(), &mask), CardId::Silver.index(), "{q}");
    assert!((q[CardId::Silver.index()] - 0.4).abs() < 0.25, "{q}");
    assert!(q[DECLINE].abs() < 0.25, "{q}");
}

const NUM_SCALARS_AT: usize = 33 * 4;

#[test]
fn masked_actions_never_selected() {
    let mut rng = GameRng::new(5);
    let net = Mlp::new(&[STATE_DIM, 32, 32, ACTIONS], &mut rng);
    let h = Heuristics::default();
    let mut violations = 0;
    let mut decisions = 0;
    for i in 0..1000u64 {
        let seed = derive_seed(40, i);
        let kingdom = if i % 2 == 0 { benchmark_kingdom() } else { sample_kingdom(seed) };
        let mut game = GameState::with_log(seed, kingdom, (i % 2) as usize, false).unwrap();
        loop {
            if let Step::GameOver = game.step().unwrap() {
                break;
            }
            let req = game.pending().unwrap().clone();
            let choice = if req.kind == DecisionKind::ChooseBuy {
                decisions += 1;
                let mask = request_mask(&req);
                if mask != gain_mask(&game) {
                    violations += 1;
                }
                let x = encode_state(&game, req.player);
                if x.iter().any(|v| !(0.0..=FEATURE_CAP).contains(v)) {
                    violations += 1;
                }
                let q = net.forward(Array1::from(x.to_vec()).view()).unwrap();
                let q = q.as_slice().unwrap();
                let g = greedy(q, &mask);
                let a = epsilon_greedy(q, &mask, 0.5, &mut rng);
                violations += usize::from(!mask[g]) + usize::from(!mask[a]);
                action_choice(a)
            } else {
                default_decision(&req, &game, &h)
            };
            game.apply_decision(choice).unwrap();
        }
    }
    assert!(decisions > 10_000);
    assert_eq!(violations, 0);
}

#[test]
fn checkpoint_reproduces_action_values() {
    let mut rng = GameRng::new(6);
    let config = TrainConfig { seed: 6, ..TrainConfig::default() };
    let net = Mlp::new(&config.sizes(), &mut rng);
    let path = std::env::temp_dir().join(format!("domsim-ckpt-{}.bin", std::process::id()));
    save_checkpoint(&path, &net, &config).unwrap();
    let (back, back_config) = load_checkpoint(&path).unwrap();
    let _ = std::fs::remove_file(&path);
    assert_eq!(back_config, config);
    for _ in 0..50 {
        let x = Array1::from_shape_fn(STATE_DIM, |_| rng.unit());
        assert_eq!(net.forward(x.view()).unwrap(), back.forward(x.view()).unwrap());
    }
    let mut bytes = encode_checkpoint(&net, "{}");
    bytes[0] ^= 0xff;
    assert!(decode_checkpoint(&bytes).is_err());
}

#[test]
fn short_training_run_is_deterministic() {
    let config = TrainConfig {
        games: 6,
        iterations: 3,
        warmup: 64,
        updates_per_iteration: 4,
        hidden: [16, 16],
        seed: 3,
        ..TrainConfig::default()
    };
    let (a, ra) = self_play_train(&config, None).unwrap();
    let (b, rb) = self_play_train(&config, None).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
    assert_eq!(ra.games, 6);
    assert!(ra.updates > 0);
    assert!(a.is_finite());
}

#[test]
fn evaluation_counts_and_repeats() {
    let net = Mlp::new(&[STATE_DIM, 16, 16, ACTIONS], &mut GameRng::new(1));
    let bm = preset("big-money").unwrap();
    let r1 = evaluate_policy(&net, &bm, benchmark_kingdom(), 100, 4);
    let r2 = evaluate_policy(&net, &bm, benchmark_kingdom(), 100, 4);
    assert_eq!(r1.completed(), 100);
    assert_eq!((r1.wins_a, r1.ties, r1.wins_b), (r2.wins_a, r2.ties, r2.wins_b));
    assert!(r1.games.iter().all(|g| g.first_seat == 0));
}
