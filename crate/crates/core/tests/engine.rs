use rayon::prelude::*;

use domsim::arena::benchmark_kingdom;
use domsim::bots::{preset, Policy, RandomBot};
use domsim::cards::{sample_kingdom, Kingdom};
use domsim::engine::{play_game, replay, GameState, Step};
use domsim::rl::{DqnBot, Mlp, ACTIONS, STATE_DIM};
use domsim::rng::{derive_seed, GameRng};

/// Plays one game, checking card conservation after every decision.
/// Returns the number of violations.
fn conserved_game(a: &dyn Policy, b: &dyn Policy, kingdom: Kingdom, seed: u64, first: usize) -> usize {
    let mut game = GameState::with_log(seed, kingdom, first, false).unwrap();
    let mut agents = [a.agent(0), b.agent(1)];
    let mut violations = 0;
    loop {
        if game.card_totals() != *game.initial_totals() {
            violations += 1;
        }
        if let Step::GameOver = game.step().unwrap() {
            break;
        }
        let req = game.pending().unwrap().clone();
        let choice = agents[req.player].decide(&req, &game);
        game.apply_decision(choice).unwrap();
    }
    violations + usize::from(game.card_totals() != *game.initial_totals())
}

#[test]
fn conservation_over_ten_thousand_fuzzed_games() {
    let violations: usize = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(77, i);
            conserved_game(&RandomBot, &RandomBot, sample_kingdom(seed), seed, (i % 2) as usize)
        })
        .sum();
    assert_eq!(violations, 0);
}

#[test]
fn conservation_with_learned_seat() {
    let net = Mlp::new(&[STATE_DIM, 16, 16, ACTIONS], &mut GameRng::new(2));
    let dqn = DqnBot::new("dqn", net);
    let engine = preset("village-smithy-engine").unwrap();
    for i in 0..200u64 {
        let seed = derive_seed(5, i);
        assert_eq!(conserved_game(&dqn, &engine, benchmark_kingdom(), seed, (i % 2) as usize), 0);
        assert_eq!(conserved_game(&RandomBot, &dqn, sample_kingdom(seed), seed, 0), 0);
    }
}

#[test]
fn determinism_over_one_hundred_seeds() {
    let witch = preset("double-witch").unwrap();
    for i in 0..100u64 {
        let seed = derive_seed(123, i);
        let k = sample_kingdom(seed);
        let a = play_game(&RandomBot, &witch, k, seed, 0).unwrap();
        let b = play_game(&RandomBot, &witch, k, seed, 0).unwrap();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap(), "seed {seed}");
        assert_eq!(replay(&a).unwrap(), a.score);
    }
}

#[test]
fn determinism_with_learned_seat() {
    let net = Mlp::new(&[STATE_DIM, 16, 16, ACTIONS], &mut GameRng::new(9));
    let dqn = DqnBot::new("dqn", net);
    let bm = preset("big-money").unwrap();
    for seed in 0..20 {
        let a = play_game(&bm, &dqn, benchmark_kingdom(), seed, 1).unwrap();
        let b = play_game(&bm, &dqn, benchmark_kingdom(), seed, 1).unwrap();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    }
}

#[test]
fn different_seeds_differ() {
    let k = benchmark_kingdom();
    let a = play_game(&RandomBot, &RandomBot, k, 1, 0).unwrap();
    let b = play_game(&RandomBot, &RandomBot, k, 2, 0).unwrap();
    assert_ne!(a.events, b.events);
}

#[test]
fn replay_reproduces_random_games() {
    for i in 0..300u64 {
        let seed = derive_seed(31, i);
        let r = play_game(&RandomBot, &RandomBot, sample_kingdom(seed), seed, (i % 2) as usize).unwrap();
        assert_eq!(replay(&r).unwrap(), r.score, "seed {seed}");
    }
}

#[test]
fn preset_games_last_a_plausible_number_of_turns() {
    let p = preset("provincial-preset").unwrap();
    let r = domsim::arena::run_match(&domsim::arena::MatchConfig::new(&p, &p, 500, 8));
    let mean = r.games.iter().map(|g| f64::from(g.turns[0].max(g.turns[1]))).sum::<f64>() / 500.0;
    assert!((15.0..=40.0).contains(&mean), "{mean}");
}
