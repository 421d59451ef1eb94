//! Competitive coevolution of buy-menu genomes.
//!
//! Each generation plays a round robin inside the population, keeps the top
//! quarter as parents, carries the elites over unchanged and fills the rest
//! with single mutations of random parents. Alongside the round-robin
//! fitness every genome is also scored against a fixed panel of presets on a
//! fixed seed schedule; the best genome on that yardstick is never dropped,
//! so the best yardstick score is non-decreasing.

use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arena::{run_match, FirstPlayerRule, KingdomChoice, MatchConfig};
use crate::bots::{preset, BuyMenu, MenuBot, MenuEntry, VictoryRule, MAX_COUNT, MAX_THRESHOLD};
use crate::cards::{CardId, Kingdom};
use crate::rng::{derive_seed, GameRng};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Genome {
    pub menu: BuyMenu,
    pub victory: VictoryRule,
}

impl Genome {
    pub fn to_bot(&self, name: impl Into<String>) -> MenuBot {
        MenuBot::new(name, self.menu.clone(), self.victory)
    }

    pub fn random(pool: &[CardId], slots: usize, rng: &mut GameRng) -> Self {
        let entries = (0..slots)
            .map(|_| {
                let card = pool[rng.index(pool.len())];
                let count = if rng.below(2) == 0 { 0 } else { 1 + rng.below(10) as u32 };
                MenuEntry { card, count }
            })
            .collect();
        let victory = VictoryRule {
            province_always: true,
            duchy_threshold: rng.below(u64::from(MAX_THRESHOLD) + 1) as u32,
            estate_threshold: rng.below(u64::from(MAX_THRESHOLD) + 1) as u32,
        };
        Self { menu: BuyMenu { entries }, victory }
    }

    /// True when every menu card is in `pool` and all numbers are in range.
    pub fn is_legal(&self, pool: &[CardId]) -> bool {
        self.menu.entries.iter().all(|e| pool.contains(&e.card) && e.count <= MAX_COUNT)
            && self.victory.duchy_threshold <= MAX_THRESHOLD
            && self.victory.estate_threshold <= MAX_THRESHOLD
    }
}

/// Cards a genome may list: the kingdom plus Silver and Gold.
pub fn card_pool(kingdom: &Kingdom) -> Vec<CardId> {
    let mut pool = vec![CardId::Silver, CardId::Gold];
    pool.extend_from_slice(kingdom.cards());
    pool
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mutation {
    ReplaceCard,
    ModifyCount,
    SwapOrder,
    ChangeThreshold,
}

impl Mutation {
    pub const ALL: [Mutation; 4] =
        [Mutation::ReplaceCard, Mutation::ModifyCount, Mutation::SwapOrder, Mutation::ChangeThreshold];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub games_per_pairing: usize,
    pub slot_count: usize,
    /// Relative weights for ReplaceCard, ModifyCount, SwapOrder, ChangeThreshold.
    pub mutation_rates: [f64; 4],
    pub elite_count: usize,
    /// Fraction of the population kept as parents.
    pub survivor_fraction: f64,
    /// Presets the yardstick score is measured against.
    pub yardstick_panel: Vec<String>,
    /// Games per panel preset in the yardstick score.
    pub yardstick_games: usize,
    /// Games per pairing in the final leaderboard matrix.
    pub final_games_per_pairing: usize,
    pub leaderboard_size: usize,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 32,
            generations: 32,
            games_per_pairing: 20,
            slot_count: 16,
            mutation_rates: [0.25; 4],
            elite_count: 2,
            survivor_fraction: 0.25,
            yardstick_panel: vec!["big-money".to_string()],
            yardstick_games: 200,
            final_games_per_pairing: 10_000,
            leaderboard_size: 5,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.elite_count >= self.population_size {
            return bad("elite_count must be below population_size");
        }
        if self.slot_count < 2 {
            return bad("slot_count must be at least 2");
        }
        if self.games_per_pairing == 0 || self.generations == 0 || self.leaderboard_size == 0 {
            return bad("generations, games_per_pairing and leaderboard_size must be positive");
        }
        if self.yardstick_panel.is_empty() || self.yardstick_games == 0 {
            return bad("yardstick needs at least one preset and one game");
        }
        for name in &self.yardstick_panel {
            preset(name)?;
        }
        if !(self.survivor_fraction > 0.0 && self.survivor_fraction <= 1.0) {
            return bad("survivor_fraction must be in (0, 1]");
        }
        if self.mutation_rates.iter().any(|r| !(*r >= 0.0)) || self.mutation_rates.iter().sum::<f64>() <= 0.0 {
            return bad("mutation rates must be non-negative with a positive sum");
        }
        Ok(())
    }
}

fn pick_mutation(rates: &[f64; 4], rng: &mut GameRng) -> Mutation {
    let total: f64 = rates.iter().sum();
    let mut x = rng.unit() * total;
    for (m, &r) in Mutation::ALL.iter().zip(rates) {
        if x < r {
            return *m;
        }
        x -= r;
    }
    *Mutation::ALL.iter().zip(rates).rev().find(|(_, &r)| r > 0.0).expect("positive rate").0
}

/// Applies exactly one mutation operator.
pub fn mutate(genome: &Genome, pool: &[CardId], rates: &[f64; 4], rng: &mut GameRng) -> (Genome, Mutation) {
    let op = pick_mutation(rates, rng);
    (apply_mutation(genome, pool, op, rng), op)
}

pub fn apply_mutation(genome: &Genome, pool: &[CardId], op: Mutation, rng: &mut GameRng) -> Genome {
    let mut g = genome.clone();
    let n = g.menu.entries.len();
    match op {
        Mutation::ReplaceCard => {
            let slot = rng.index(n);
            let old = g.menu.entries[slot].card;
            let others: Vec<CardId> = pool.iter().copied().filter(|&c| c != old).collect();
            if !others.is_empty() {
                g.menu.entries[slot].card = others[rng.index(others.len())];
            }
        }
        Mutation::ModifyCount => {
            let slot = rng.index(n);
            let step = 1 + rng.below(3) as i64;
            let delta = if rng.below(2) == 0 { -step } else { step };
            let c = &mut g.menu.entries[slot].count;
            *c = (i64::from(*c) + delta).clamp(0, i64::from(MAX_COUNT)) as u32;
        }
        Mutation::SwapOrder => {
            let i = rng.index(n);
            let j = (i + 1 + rng.index(n - 1)) % n;
            g.menu.entries.swap(i, j);
        }
        Mutation::ChangeThreshold => {
            let t = if rng.below(2) == 0 { &mut g.victory.duchy_threshold } else { &mut g.victory.estate_threshold };
            let delta: i64 = if rng.below(2) == 0 { -1 } else { 1 };
            *t = (i64::from(*t) + delta).clamp(0, i64::from(MAX_THRESHOLD)) as u32;
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRobin {
    /// Wins + 0.5 ties, summed over all opponents.
    pub fitness: Vec<f64>,
    /// `wins[i][j]`: games i won against j.
    pub wins: Vec<Vec<u32>>,
    pub ties: Vec<Vec<u32>>,
    pub games_per_pairing: usize,
}

impl RoundRobin {
    /// Win ratio of i against j. The diagonal is (1 - tie rate) / 2.
    pub fn ratio(&self, i: usize, j: usize) -> f64 {
        let n = self.games_per_pairing as f64;
        if n == 0.0 {
            return 0.0;
        }
        if i == j {
            (1.0 - f64::from(self.ties[i][i]) / n) / 2.0
        } else {
            f64::from(self.wins[i][j]) / n
        }
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let k = self.fitness.len();
        (0..k).map(|i| (0..k).map(|j| self.ratio(i, j)).collect()).collect()
    }
}

/// Every unordered pair plays `games_per_pairing` games, alternating the
/// first player. With `mirrors`, each genome also plays itself.
pub fn round_robin_fitness(
    population: &[Genome],
    kingdom: Kingdom,
    games_per_pairing: usize,
    seed: u64,
    mirrors: bool,
) -> RoundRobin {
    let k = population.len();
    let bots: Vec<MenuBot> = population.iter().enumerate().map(|(i, g)| g.to_bot(format!("g{i}"))).collect();
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i..k {
            if i != j || mirrors {
                pairs.push((i, j));
            }
        }
    }
    let results: Vec<(u32, u32, u32)> = pairs
        .par_iter()
        .enumerate()
        .map(|(p, &(i, j))| {
            let config = MatchConfig {
                kingdom: KingdomChoice::Fixed(kingdom),
                first_player: FirstPlayerRule::Alternate,
                ..MatchConfig::new(&bots[i], &bots[j], games_per_pairing, derive_seed(seed, p as u64))
            };
            let r = run_match(&config);
            (r.wins_a, r.ties, r.wins_b)
        })
        .collect();
    let mut wins = vec![vec![0u32; k]; k];
    let mut ties = vec![vec![0u32; k]; k];
    let mut fitness = vec![0.0; k];
    for (&(i, j), &(wa, t, wb)) in pairs.iter().zip(&results) {
        if i == j {
            ties[i][i] = t;
            continue;
        }
        wins[i][j] = wa;
        wins[j][i] = wb;
        ties[i][j] = t;
        ties[j][i] = t;
        fitness[i] += f64::from(wa) + 0.5 * f64::from(t);
        fitness[j] += f64::from(wb) + 0.5 * f64::from(t);
    }
    RoundRobin { fitness, wins, ties, games_per_pairing }
}

/// Score in [0, 1] against each panel preset, alternating seats, on a seed
/// schedule that depends only on `seed`.
pub fn yardstick_score(genome: &Genome, kingdom: Kingdom, panel: &[String], games: usize, seed: u64) -> f64 {
    if games == 0 || panel.is_empty() {
        return 0.0;
    }
    let bot = genome.to_bot("candidate");
    let mut points = 0.0;
    for (p, name) in panel.iter().enumerate() {
        let reference = preset(name).expect("panel validated");
        let config = MatchConfig {
            kingdom: KingdomChoice::Fixed(kingdom),
            first_player: FirstPlayerRule::Alternate,
            ..MatchConfig::new(&bot, &reference, games, derive_seed(seed, p as u64))
        };
        let r = run_match(&config);
        points += f64::from(r.wins_a) + 0.5 * f64::from(r.ties);
    }
    points / (games * panel.len()) as f64
}

/// Indices sorted best first: higher score, then fewer total menu counts, then index.
fn ranking(population: &[Genome], score: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..population.len()).collect();
    idx.sort_by(|&a, &b| {
        score[b]
            .total_cmp(&score[a])
            .then(population[a].menu.total_count().cmp(&population[b].menu.total_count()))
            .then(a.cmp(&b))
    });
    idx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    /// Best yardstick score in this generation's population.
    pub best_yardstick: f64,
    pub champion: Genome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub kingdom: Kingdom,
    pub config: EvolutionConfig,
    pub history: Vec<GenerationStats>,
    /// Best first. The first entry is the yardstick champion.
    pub strategies: Vec<Genome>,
    pub win_matrix: Vec<Vec<f64>>,
    pub tie_matrix: Vec<Vec<f64>>,
    pub matrix_games: usize,
}

impl Leaderboard {
    pub fn champion(&self) -> &Genome {
        &self.strategies[0]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("leaderboard serializes")
    }
}

impl fmt::Display for Leaderboard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "Kingdom: {}", self.kingdom);
        let _ = writeln!(out, "Win ratio (row vs column, {} games per pairing):", self.matrix_games);
        let _ = write!(out, "     ");
        for j in 0..self.strategies.len() {
            let _ = write!(out, "  S{:<4}", j + 1);
        }
        let _ = writeln!(out);
        for (i, row) in self.win_matrix.iter().enumerate() {
            let _ = write!(out, "S{:<4}", i + 1);
            for v in row {
                let _ = write!(out, "  {v:.3}");
            }
            let _ = writeln!(out);
        }
        let _ = writeln!(out, "Strategies:");
        for (i, g) in self.strategies.iter().enumerate() {
            let live = BuyMenu { entries: g.menu.entries.iter().copied().filter(|e| e.count > 0).collect() };
            let _ = writeln!(
                out,
                "S{}  duchy<={} estate<={}  {}",
                i + 1,
                g.victory.duchy_threshold,
                g.victory.estate_threshold,
                live
            );
        }
        f.write_str(out.trim_end())
    }
}

/// Runs the full evolution and builds the final leaderboard.
pub fn evolve_run(kingdom: Kingdom, config: &EvolutionConfig) -> Result<Leaderboard, Error> {
    config.validate()?;
    let pool = card_pool(&kingdom);
    let mut rng = GameRng::new(derive_seed(config.seed, 0));
    let yard_seed = derive_seed(config.seed, 1);
    let mut population: Vec<Genome> =
        (0..config.population_size).map(|_| Genome::random(&pool, config.slot_count, &mut rng)).collect();
    let mut history = Vec::with_capacity(config.generations);
    let mut hall: Option<(Genome, f64)> = None;
    let survivors = ((config.population_size as f64 * config.survivor_fraction).ceil() as usize)
        .clamp(1, config.population_size);

    for generation in 0..config.generations {
        let rr = round_robin_fitness(
            &population,
            kingdom,
            config.games_per_pairing,
            derive_seed(config.seed, 100 + generation as u64),
            false,
        );
        let yard: Vec<f64> = population
            .par_iter()
            .map(|g| yardstick_score(g, kingdom, &config.yardstick_panel, config.yardstick_games, yard_seed))
            .collect();
        let y_rank = ranking(&population, &yard);
        let best_y = y_rank[0];
        if hall.as_ref().is_none_or(|(_, s)| yard[best_y] > *s) {
            hall = Some((population[best_y].clone(), yard[best_y]));
        }
        let rank = ranking(&population, &rr.fitness);
        history.push(GenerationStats {
            generation,
            best_fitness: rr.fitness[rank[0]],
            mean_fitness: rr.fitness.iter().sum::<f64>() / population.len() as f64,
            best_yardstick: yard[best_y],
            champion: population[best_y].clone(),
        });
        if generation + 1 == config.generations {
            break;
        }
        let hall_genome = hall.as_ref().expect("set above").0.clone();
        let mut next: Vec<Genome> = Vec::with_capacity(config.population_size);
        next.push(hall_genome);
        for &i in rank.iter().take(config.elite_count) {
            if next.len() < config.population_size && !next.contains(&population[i]) {
                next.push(population[i].clone());
            }
        }
        while next.len() < config.population_size {
            let parent = &population[rank[rng.index(survivors)]];
            let (child, _) = mutate(parent, &pool, &config.mutation_rates, &mut rng);
            next.push(child);
        }
        population = next;
    }

    let champion = hall.expect("at least one generation").0;
    let last = config.generations - 1;
    let rr = round_robin_fitness(&population, kingdom, config.games_per_pairing, derive_seed(config.seed, 100 + last as u64), false);
    let mut strategies = vec![champion];
    for i in ranking(&population, &rr.fitness) {
        if strategies.len() >= config.leaderboard_size.min(population.len()) {
            break;
        }
        if !strategies.contains(&population[i]) {
            strategies.push(population[i].clone());
        }
    }
    let final_rr = round_robin_fitness(
        &strategies,
        kingdom,
        config.final_games_per_pairing,
        derive_seed(config.seed, 2),
        true,
    );
    let n = config.final_games_per_pairing as f64;
    let tie_matrix = final_rr
        .ties
        .iter()
        .map(|row| row.iter().map(|&t| if n > 0.0 { f64::from(t) / n } else { 0.0 }).collect())
        .collect();
    Ok(Leaderboard {
        kingdom,
        config: config.clone(),
        history,
        win_matrix: final_rr.matrix(),
        tie_matrix,
        strategies,
        matrix_games: config.final_games_per_pairing,
    })
}

/// Reads a candidate bot from JSON: a leaderboard (its champion), a genome, or a menu bot.
pub fn load_candidate(json: &str, name: &str) -> Result<MenuBot, Error> {
    if let Ok(board) = serde_json::from_str::<Leaderboard>(json) {
        return Ok(board.champion().to_bot(name));
    }
    if let Ok(g) = serde_json::from_str::<Genome>(json) {
        return Ok(g.to_bot(name));
    }
    serde_json::from_str::<MenuBot>(json).map_err(|e| Error::Config(format!("not a leaderboard, genome or bot: {e}")))
}
