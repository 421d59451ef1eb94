//! Match harness: many seeded games between two policies, in parallel.

use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bots::Policy;
use crate::cards::{sample_kingdom, CardId, Kingdom};
use crate::engine::{play_game_with, GameRecord, PlayOptions, Winner};
use crate::rng::derive_seed;
use crate::Error;

/// Cellar, Market, Merchant, Militia, Moat, Remodel, Smithy, Village, Witch, Workshop.
pub fn benchmark_kingdom() -> Kingdom {
    use CardId::*;
    Kingdom::new(&[Cellar, Market, Merchant, Militia, Moat, Remodel, Smithy, Village, Witch, Workshop])
        .expect("ten distinct kingdom cards")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FirstPlayerRule {
    AlwaysA,
    AlwaysB,
    /// A first on even game indices.
    Alternate,
}

impl FirstPlayerRule {
    /// Seat (0 = policy A) that moves first in game `i`.
    pub fn first_seat(self, i: usize) -> usize {
        match self {
            FirstPlayerRule::AlwaysA => 0,
            FirstPlayerRule::AlwaysB => 1,
            FirstPlayerRule::Alternate => i % 2,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            FirstPlayerRule::AlwaysA => FirstPlayerRule::AlwaysB,
            FirstPlayerRule::AlwaysB => FirstPlayerRule::AlwaysA,
            FirstPlayerRule::Alternate => FirstPlayerRule::Alternate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KingdomChoice {
    Fixed(Kingdom),
    /// A fresh kingdom per game, drawn from that game's seed.
    Sampled,
}

pub struct MatchConfig<'a> {
    pub policy_a: &'a dyn Policy,
    pub policy_b: &'a dyn Policy,
    pub n_games: usize,
    pub kingdom: KingdomChoice,
    pub first_player: FirstPlayerRule,
    pub base_seed: u64,
    /// Keep full event logs in the returned records.
    pub keep_logs: bool,
}

impl<'a> MatchConfig<'a> {
    pub fn new(policy_a: &'a dyn Policy, policy_b: &'a dyn Policy, n_games: usize, base_seed: u64) -> Self {
        Self {
            policy_a,
            policy_b,
            n_games,
            kingdom: KingdomChoice::Fixed(benchmark_kingdom()),
            first_player: FirstPlayerRule::AlwaysA,
            base_seed,
            keep_logs: false,
        }
    }
}

/// Outcome of one game, from policy A's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    WinA,
    Tie,
    WinB,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub index: usize,
    pub seed: u64,
    pub kingdom: Kingdom,
    /// 0 when policy A moved first.
    pub first_seat: usize,
    /// [A, B].
    pub vp: [i32; 2],
    pub turns: [u32; 2],
    pub outcome: Outcome,
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub policy_a: String,
    pub policy_b: String,
    pub wins_a: u32,
    pub ties: u32,
    pub wins_b: u32,
    /// Games ended by an illegal policy answer: (game index, message).
    pub aborted: Vec<(usize, String)>,
    pub games: Vec<GameSummary>,
    #[serde(skip)]
    pub records: Vec<GameRecord>,
    pub mean_vp: [f64; 2],
    /// Mean |VP_A - VP_B| over all completed games.
    pub mean_margin: f64,
    /// Wins by whoever moved first / second.
    pub first_mover_wins: u32,
    pub second_mover_wins: u32,
}

impl MatchResult {
    pub fn completed(&self) -> u32 {
        self.wins_a + self.ties + self.wins_b
    }

    pub fn win_rate_a(&self) -> f64 {
        let n = self.completed();
        if n == 0 {
            0.0
        } else {
            f64::from(self.wins_a) / f64::from(n)
        }
    }

    fn tally(policy_a: String, policy_b: String, games: Vec<GameSummary>, aborted: Vec<(usize, String)>) -> Self {
        let mut r = MatchResult {
            policy_a,
            policy_b,
            wins_a: 0,
            ties: 0,
            wins_b: 0,
            aborted,
            games: Vec::new(),
            records: Vec::new(),
            mean_vp: [0.0; 2],
            mean_margin: 0.0,
            first_mover_wins: 0,
            second_mover_wins: 0,
        };
        let mut vp = [0i64; 2];
        let mut margin = 0i64;
        for g in &games {
            match g.outcome {
                Outcome::WinA => r.wins_a += 1,
                Outcome::Tie => r.ties += 1,
                Outcome::WinB => r.wins_b += 1,
            }
            let winner_seat = match g.outcome {
                Outcome::WinA => Some(0),
                Outcome::WinB => Some(1),
                Outcome::Tie => None,
            };
            match winner_seat {
                Some(s) if s == g.first_seat => r.first_mover_wins += 1,
                Some(_) => r.second_mover_wins += 1,
                None => {}
            }
            vp[0] += i64::from(g.vp[0]);
            vp[1] += i64::from(g.vp[1]);
            margin += i64::from((g.vp[0] - g.vp[1]).abs());
        }
        if !games.is_empty() {
            let n = games.len() as f64;
            r.mean_vp = [vp[0] as f64 / n, vp[1] as f64 / n];
            r.mean_margin = margin as f64 / n;
        }
        r.games = games;
        r
    }
}

impl fmt::Display for MatchResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} vs {}: W {} / T {} / L {} (aborted {}), mean VP {:.2} / {:.2}, margin {:.2}",
            self.policy_a,
            self.policy_b,
            self.wins_a,
            self.ties,
            self.wins_b,
            self.aborted.len(),
            self.mean_vp[0],
            self.mean_vp[1],
            self.mean_margin
        )
    }
}

/// Seed and kingdom of game `i`.
pub fn game_setup(config: &MatchConfig, i: usize) -> (u64, Kingdom) {
    let seed = derive_seed(config.base_seed, i as u64);
    let kingdom = match config.kingdom {
        KingdomChoice::Fixed(k) => k,
        KingdomChoice::Sampled => sample_kingdom(derive_seed(seed, 0)),
    };
    (seed, kingdom)
}

fn play_one(config: &MatchConfig, i: usize) -> Result<(GameSummary, GameRecord), Error> {
    let (seed, kingdom) = game_setup(config, i);
    let first = config.first_player.first_seat(i);
    let opts = PlayOptions { log: config.keep_logs };
    let rec = play_game_with(config.policy_a, config.policy_b, kingdom, seed, first, opts)?;
    let outcome = match rec.score.winner {
        Winner::Player(0) => Outcome::WinA,
        Winner::Player(_) => Outcome::WinB,
        Winner::Tie => Outcome::Tie,
    };
    let summary = GameSummary {
        index: i,
        seed,
        kingdom,
        first_seat: first,
        vp: rec.score.vp,
        turns: rec.turns,
        outcome,
        capped: rec.capped,
    };
    Ok((summary, rec))
}

/// Plays `config.n_games` games; game `i` uses seed `derive_seed(base_seed, i)`.
pub fn run_match(config: &MatchConfig) -> MatchResult {
    let played: Vec<Result<(GameSummary, GameRecord), Error>> =
        (0..config.n_games).into_par_iter().map(|i| play_one(config, i)).collect();
    let mut games = Vec::with_capacity(played.len());
    let mut records = Vec::new();
    let mut aborted = Vec::new();
    for (i, r) in played.into_iter().enumerate() {
        match r {
            Ok((summary, rec)) => {
                games.push(summary);
                if config.keep_logs {
                    records.push(rec);
                }
            }
            Err(e) => aborted.push((i, e.to_string())),
        }
    }
    let mut result = MatchResult::tally(config.policy_a.name(), config.policy_b.name(), games, aborted);
    result.records = records;
    result
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub reference: String,
    pub menu: String,
    pub candidate: String,
    /// From the candidate's point of view.
    pub wins: u32,
    pub ties: u32,
    pub losses: u32,
    pub aborted: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub n_games: usize,
    pub seed: u64,
    pub rows: Vec<BenchmarkRow>,
}

/// Every candidate against every reference, the reference moving first.
pub fn benchmark_table(
    candidates: &[&dyn Policy],
    references: &[&dyn Policy],
    n_games: usize,
    kingdom: Kingdom,
    seed: u64,
) -> Result<BenchmarkTable, Error> {
    if candidates.is_empty() || references.is_empty() {
        return Err(Error::Config("benchmark needs at least one candidate and one reference".into()));
    }
    let mut rows = Vec::new();
    for &reference in references {
        for &candidate in candidates {
            let config = MatchConfig {
                kingdom: KingdomChoice::Fixed(kingdom),
                first_player: FirstPlayerRule::AlwaysA,
                ..MatchConfig::new(reference, candidate, n_games, seed)
            };
            let r = run_match(&config);
            let (reference_name, mut candidate_name) = (reference.name(), candidate.name());
            if candidate_name == reference_name {
                // A mirror row: the candidate is the copy that moves second.
                candidate_name.push_str(" (second seat)");
            }
            rows.push(BenchmarkRow {
                reference: reference_name,
                menu: reference.describe(),
                candidate: candidate_name,
                wins: r.wins_b,
                ties: r.ties,
                losses: r.wins_a,
                aborted: r.aborted.len() as u32,
            });
        }
    }
    Ok(BenchmarkTable { n_games, seed, rows })
}

impl fmt::Display for BenchmarkTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wtl = |r: &BenchmarkRow| format!("{} / {} / {}", r.wins, r.ties, r.losses);
        let w_ref = self.rows.iter().map(|r| r.reference.len()).max().unwrap_or(0).max("Bot".len());
        let w_menu = self.rows.iter().map(|r| r.menu.len()).max().unwrap_or(0).max("Bot Buy Menu".len());
        let w_cand = self.rows.iter().map(|r| r.candidate.len()).max().unwrap_or(0).max("Candidate".len());
        let w_wtl = self.rows.iter().map(|r| wtl(r).len()).max().unwrap_or(0).max("Win / Tie / Lose".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<w_ref$}  {:<w_menu$}  {:<w_cand$}  {:>w_wtl$}  Aborted",
            "Bot", "Bot Buy Menu", "Candidate", "Win / Tie / Lose"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<w_ref$}  {:<w_menu$}  {:<w_cand$}  {:>w_wtl$}  {}",
                r.reference,
                r.menu,
                r.candidate,
                wtl(r),
                r.aborted
            );
        }
        f.write_str(out.trim_end())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bots::preset;

    #[test]
    fn zero_games() {
        let a = preset("big-money").unwrap();
        let r = run_match(&MatchConfig::new(&a, &a, 0, 1));
        assert_eq!((r.wins_a, r.ties, r.wins_b), (0, 0, 0));
        assert_eq!(r.mean_vp, [0.0, 0.0]);
        assert!(r.games.is_empty());
    }

    #[test]
    fn tallies_sum_and_match_records() {
        let a = preset("big-money").unwrap();
        let b = preset("big-smithy").unwrap();
        let r = run_match(&MatchConfig { first_player: FirstPlayerRule::Alternate, ..MatchConfig::new(&a, &b, 40, 3) });
        assert_eq!(r.completed(), 40);
        assert!(r.aborted.is_empty());
        let vp0: f64 = r.games.iter().map(|g| f64::from(g.vp[0])).sum::<f64>() / 40.0;
        assert!((vp0 - r.mean_vp[0]).abs() < 1e-12);
        assert_eq!(r.games.iter().filter(|g| g.first_seat == 1).count(), 20);
    }

    #[test]
    fn swapping_seats_transposes() {
        let a = preset("big-money").unwrap();
        let b = preset("double-witch").unwrap();
        let r1 = run_match(&MatchConfig::new(&a, &b, 30, 9));
        let r2 = run_match(&MatchConfig { first_player: FirstPlayerRule::AlwaysB, ..MatchConfig::new(&b, &a, 30, 9) });
        assert_eq!((r1.wins_a, r1.ties, r1.wins_b), (r2.wins_b, r2.ties, r2.wins_a));
    }

    #[test]
    fn table_shape() {
        let refs: Vec<_> = ["big-money", "big-smithy"].iter().map(|n| preset(n).unwrap()).collect();
        let cand = preset("provincial-preset").unwrap();
        let refs_dyn: Vec<&dyn Policy> = refs.iter().map(|p| p as &dyn Policy).collect();
        let t = benchmark_table(&[&cand], &refs_dyn, 10, benchmark_kingdom(), 1).unwrap();
        assert_eq!(t.rows.len(), 2);
        for row in &t.rows {
            assert_eq!(row.wins + row.ties + row.losses, 10);
        }
        let text = t.to_string();
        assert!(text.contains("(Gold, 99), (Silver, 99)"));
        assert_eq!(text.lines().count(), 3);
        assert!(benchmark_table(&[], &refs_dyn, 10, benchmark_kingdom(), 1).is_err());
    }
}
