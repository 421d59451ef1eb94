use domsim::arena::benchmark_kingdom;
use domsim::evolve::{card_pool, evolve_run, load_candidate, EvolutionConfig};

fn small() -> EvolutionConfig {
    EvolutionConfig {
        population_size: 8,
        generations: 10,
        games_per_pairing: 4,
        yardstick_games: 40,
        final_games_per_pairing: 10,
        leaderboard_size: 3,
        seed: 2,
        ..EvolutionConfig::default()
    }
}

#[test]
fn elitism_never_loses_the_best() {
    let board = evolve_run(benchmark_kingdom(), &small()).unwrap();
    assert_eq!(board.history.len(), 10);
    for w in board.history.windows(2) {
        assert!(w[1].best_yardstick >= w[0].best_yardstick, "{} then {}", w[0].best_yardstick, w[1].best_yardstick);
    }
    let last = board.history.last().unwrap();
    assert_eq!(&last.champion, board.champion());
}

#[test]
fn leaderboard_shape_and_reload() {
    let board = evolve_run(benchmark_kingdom(), &small()).unwrap();
    let n = board.strategies.len();
    assert_eq!(n, 3);
    assert_eq!(board.win_matrix.len(), n);
    let pool = card_pool(&benchmark_kingdom());
    assert!(board.strategies.iter().all(|g| g.is_legal(&pool)));
    for i in 0..n {
        for j in 0..n {
            let total = board.win_matrix[i][j] + board.win_matrix[j][i] + board.tie_matrix[i][j];
            assert!((total - 1.0).abs() < 1e-9, "{i},{j}: {total}");
        }
    }
    let bot = load_candidate(&board.to_json(), "champ").unwrap();
    assert_eq!(bot.menu, board.champion().menu);
    assert!(!board.to_string().is_empty());
}

#[test]
fn same_seed_same_run() {
    let a = evolve_run(benchmark_kingdom(), &small()).unwrap();
    let b = evolve_run(benchmark_kingdom(), &small()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn bad_config_is_rejected() {
    let config = EvolutionConfig { yardstick_panel: vec!["nobody".into()], ..small() };
    assert!(evolve_run(benchmark_kingdom(), &config).is_err());
}
