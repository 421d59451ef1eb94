use serde::{Deserialize, Serialize};

use super::{Choice, GameState, PlayerStats, Score, Step};
use crate::bots::Policy;
use crate::cards::Kingdom;
use crate::logformat::Event;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlayOptions {
    /// Keep the event log. Off for bulk simulation.
    pub log: bool,
}

impl Default for PlayOptions {
    fn default() -> Self {
        Self { log: true }
    }
}

/// Everything needed to reproduce, score and print one finished game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub kingdom: Kingdom,
    pub seed: u64,
    pub first_player: usize,
    pub players: [String; 2],
    pub events: Vec<Event>,
    /// Policy answers in the order they were given; forced answers are not stored.
    pub decisions: Vec<Choice>,
    pub score: Score,
    pub turns: [u32; 2],
    pub stats: [PlayerStats; 2],
    pub capped: bool,
    /// Optional (mu, phi) per seat, written as log metadata.
    #[serde(default)]
    pub ratings: Option<[(f64, f64); 2]>,
}

/// Plays one game: `policy_a` sits in seat 0, `policy_b` in seat 1.
pub fn play_game(
    policy_a: &dyn Policy,
    policy_b: &dyn Policy,
    kingdom: Kingdom,
    seed: u64,
    first_player: usize,
) -> Result<GameRecord, Error> {
    play_game_with(policy_a, policy_b, kingdom, seed, first_player, PlayOptions::default())
}

pub fn play_game_with(
    policy_a: &dyn Policy,
    policy_b: &dyn Policy,
    kingdom: Kingdom,
    seed: u64,
    first_player: usize,
    opts: PlayOptions,
) -> Result<GameRecord, Error> {
    let mut game = GameState::with_log(seed, kingdom, first_player, opts.log)?;
    let mut agents = [policy_a.agent(0), policy_b.agent(1)];
    loop {
        if let Step::GameOver = game.step()? {
            break;
        }
        let req = game.pending().ok_or(Error::NoPendingDecision)?;
        let choice = agents[req.player].decide(req, &game);
        game.apply_decision(choice)?;
    }
    let score = game.score()?;
    let turns = game.turns;
    let stats = game.stats;
    let capped = game.hit_turn_cap();
    let (events, decisions) = game.into_parts();
    Ok(GameRecord {
        kingdom,
        seed,
        first_player,
        players: [policy_a.name(), policy_b.name()],
        events,
        decisions,
        score,
        turns,
        stats,
        capped,
        ratings: None,
    })
}

/// Re-runs a record's decisions through a fresh engine and returns the final score.
pub fn replay(record: &GameRecord) -> Result<Score, Error> {
    let mut game = GameState::with_log(record.seed, record.kingdom, record.first_player, false)?;
    let mut answers = record.decisions.iter();
    loop {
        match game.step()? {
            Step::GameOver => break,
            Step::Decision(_) => {
                let choice = answers.next().ok_or(Error::ReplayExhausted)?;
                game.apply_decision(choice.clone())?;
            }
        }
    }
    if answers.next().is_some() {
        return Err(Error::ReplayExhausted);
    }
    game.score()
}
