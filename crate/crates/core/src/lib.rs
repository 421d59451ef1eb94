//! Deterministic two-player Dominion simulator with heuristic, evolved and
//! learned agents.

pub mod arena;
pub mod bots;
pub mod cards;
pub mod engine;
pub mod evolve;
pub mod logformat;
pub mod rating;
pub mod rl;
pub mod rng;

use engine::DecisionKind;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown card: {0}")]
    UnknownCard(String),
    #[error("invalid kingdom: {0}")]
    InvalidKingdom(String),
    #[error("invalid buy menu: {0}")]
    InvalidMenu(String),
    #[error("unknown preset: {0}")]
    UnknownPreset(String),
    #[error("illegal choice {choice} for {kind:?} by player {player}")]
    IllegalChoice { player: usize, kind: DecisionKind, choice: String },
    #[error("no decision is pending")]
    NoPendingDecision,
    #[error("game is over")]
    GameOver,
    #[error("game is not over")]
    NotTerminal,
    #[error("replay ran out of recorded decisions or had extras")]
    ReplayExhausted,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("io: {0}")]
    Io(String),
    #[error("rating: {0}")]
    Rating(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid config: {0}")]
    Config(String),
}
