use domsim::arena::{run_match, FirstPlayerRule, KingdomChoice, MatchConfig};
use domsim::bots::{preset, Policy, RandomBot};
use domsim::cards::CardId;
use domsim::engine::{replay, GameRecord};
use domsim::logformat::{corpus_stats, parse_log, record_to_document, summarize, write_document, write_log, EventKind};

const FIXTURE: &str = include_str!("fixtures/online_excerpt.log");

fn records(a: &dyn Policy, b: &dyn Policy, n: usize, seed: u64) -> Vec<GameRecord> {
    let config = MatchConfig {
        kingdom: KingdomChoice::Sampled,
        first_player: FirstPlayerRule::Alternate,
        keep_logs: true,
        ..MatchConfig::new(a, b, n, seed)
    };
    let r = run_match(&config);
    assert!(r.aborted.is_empty(), "{:?}", r.aborted);
    r.records
}

fn corpus() -> Vec<GameRecord> {
    let smithy = preset("big-smithy").unwrap();
    let mut all = records(&RandomBot, &RandomBot, 500, 11);
    all.extend(records(&smithy, &RandomBot, 500, 12));
    all
}

#[test]
fn fixture_round_trips() {
    let doc = parse_log(FIXTURE).unwrap();
    assert_eq!(write_document(&doc), FIXTURE);
    assert_eq!(parse_log(&write_document(&doc)).unwrap(), doc);

    assert_eq!(doc.players, ["player1".to_string(), "player2".to_string()]);
    assert_eq!(doc.supply.len(), 17);
    assert!(doc.supply.contains(&(60, CardId::Copper)));
    assert!(doc.supply.contains(&(10, CardId::ThroneRoom)));
    assert_eq!(doc.game_id(), Some(1));
    let quirks: Vec<_> = doc.events.iter().filter(|e| e.quoted).collect();
    assert_eq!(quirks.len(), 2);
    assert!(quirks.iter().all(|e| e.kind == EventKind::Gain && e.cards == vec![(1, CardId::Gold)]));
    let turn = doc.events.iter().find(|e| e.line_index == 148).unwrap();
    assert_eq!((turn.kind, turn.args.clone()), (EventKind::NewTurn, vec![10, 0]));
    let draw = doc.events.last().unwrap();
    assert_eq!(draw.card_count(), 5);
}

#[test]
fn thousand_arena_logs_round_trip() {
    let all = corpus();
    assert_eq!(all.len(), 1000);
    for (i, record) in all.iter().enumerate() {
        let text = write_log(record);
        let doc = parse_log(&text).unwrap_or_else(|e| panic!("log {i}: {e}"));
        assert_eq!(doc, record_to_document(record), "log {i}");
        assert_eq!(write_document(&doc), text, "log {i}");
    }
}

#[test]
fn logs_agree_with_engine_counters() {
    for (i, record) in corpus().iter().enumerate() {
        let s = summarize(&parse_log(&write_log(record)).unwrap());
        assert_eq!(s.vp, record.score.vp, "log {i}");
        assert_eq!(s.winner, record.score.winner, "log {i}");
        assert_eq!(s.turns, record.turns, "log {i}");
        assert_eq!(s.length, record.turns[0].max(record.turns[1]), "log {i}");
        assert_eq!(s.gains, [0, 1].map(|p| record.stats[p].gains), "log {i}");
        assert_eq!(s.plays, [0, 1].map(|p| record.stats[p].plays), "log {i}");
        assert_eq!(replay(record).unwrap(), record.score, "log {i}");
    }
}

#[test]
fn corpus_stats_match_engine_totals() {
    let all = corpus();
    let docs: Vec<_> = all.iter().map(|r| parse_log(&write_log(r)).unwrap()).collect();
    let stats = corpus_stats(&docs).unwrap();
    let n = all.len() as f64;
    let mean = |f: &dyn Fn(&GameRecord) -> f64| all.iter().map(f).sum::<f64>() / n;
    assert_eq!(stats.games, all.len());
    assert_eq!(stats.avg_game_length_turns, mean(&|r| r.turns[0].max(r.turns[1]) as f64));
    assert_eq!(stats.avg_vp_per_player, mean(&|r| (r.score.vp[0] + r.score.vp[1]) as f64 / 2.0));
    assert_eq!(stats.avg_margin_vp, mean(&|r| (r.score.vp[0] - r.score.vp[1]).abs() as f64));
    assert_eq!(stats.avg_gain_decisions_per_player, mean(&|r| (r.stats[0].gains + r.stats[1].gains) as f64 / 2.0));
    assert_eq!(stats.avg_card_plays_per_player, mean(&|r| (r.stats[0].plays + r.stats[1].plays) as f64 / 2.0));
    assert_eq!(stats.avg_mu, None);
    let ties = all.iter().filter(|r| r.score.winner == domsim::engine::Winner::Tie).count();
    assert_eq!(stats.tie_rate, ties as f64 / n);

    let json = serde_json::to_value(&stats).unwrap();
    for key in [
        "games",
        "avg_game_length_turns",
        "avg_vp_per_player",
        "avg_margin_vp",
        "avg_gain_decisions_per_player",
        "avg_card_plays_per_player",
        "avg_mu",
        "avg_phi",
        "tie_rate",
    ] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn rating_metadata_is_averaged() {
    let mut record = corpus().swap_remove(0);
    record.ratings = Some([(0.5, 0.2), (0.7, 0.4)]);
    let doc = parse_log(&write_log(&record)).unwrap();
    let stats = corpus_stats(&[doc]).unwrap();
    assert!((stats.avg_mu.unwrap() - 0.6).abs() < 1e-12);
    assert!((stats.avg_phi.unwrap() - 0.3).abs() < 1e-12);
}
