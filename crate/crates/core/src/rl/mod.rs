//! Deep Q-learning for buy decisions.
//!
//! The network only answers buy requests; every other decision goes through
//! the shared heuristic table. Training is double DQN with uniform replay
//! and a periodically synced target network, in self-play.

pub mod net;

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use net::{decode_checkpoint, encode_checkpoint, Adam, Grads, Layer, Mlp};

use crate::arena::{benchmark_kingdom, run_match, FirstPlayerRule, KingdomChoice, MatchConfig, MatchResult};
use crate::bots::{default_decision, Agent, Heuristics, Policy};
use crate::cards::{initial_supply, CardId, Kingdom, NUM_CARDS};
use crate::engine::{Choice, DecisionKind, DecisionRequest, GameState, Options, Step, Winner, TURN_CAP};
use crate::rng::{derive_seed, GameRng};
use crate::Error;

pub const STATE_DIM: usize = NUM_CARDS * 4 + 4 + 4;
pub const ACTIONS: usize = NUM_CARDS + 1;
/// Action index of declining the buy.
pub const DECLINE: usize = NUM_CARDS;
pub const FEATURE_CAP: f64 = 1.5;

pub type State = [f64; STATE_DIM];
pub type Mask = [bool; ACTIONS];

const OPPONENT_VICTORY: [CardId; 4] = [CardId::Estate, CardId::Duchy, CardId::Province, CardId::Curse];

fn cap(x: f64) -> f64 {
    x.clamp(0.0, FEATURE_CAP)
}

/// Features for `player`, who is about to buy.
///
/// Per card: supply / starting pile, deck / 10, (hand + in play) / 10,
/// discard / 10. Then coins / 8, buys / 4, Provinces left / 8, turn / 100,
/// and the opponent's Estates, Duchies, Provinces and Curses / 8.
pub fn encode_state(state: &GameState, player: usize) -> State {
    let mut x = [0.0; STATE_DIM];
    let me = &state.players[player];
    let start = initial_supply(&state.kingdom, 2).expect("two players");
    let deck = me.deck_counts();
    for c in CardId::ALL {
        let i = c.index() * 4;
        let pile = start.count(c);
        if pile > 0 {
            x[i] = cap(f64::from(state.supply.count(c)) / f64::from(pile));
        }
        x[i + 1] = cap(f64::from(deck.get(c)) / 10.0);
        x[i + 2] = cap(f64::from(me.hand.get(c) + me.in_play.get(c)) / 10.0);
        x[i + 3] = cap(f64::from(me.discard.get(c)) / 10.0);
    }
    let s = NUM_CARDS * 4;
    x[s] = cap(f64::from(state.coins) / 8.0);
    x[s + 1] = cap(f64::from(state.buys) / 4.0);
    x[s + 2] = cap(f64::from(state.supply.count(CardId::Province)) / 8.0);
    x[s + 3] = cap(f64::from(state.turn_number) / f64::from(TURN_CAP));
    let theirs = state.players[1 - player].owned();
    for (k, c) in OPPONENT_VICTORY.iter().enumerate() {
        x[s + 4 + k] = cap(f64::from(theirs.get(*c)) / 8.0);
    }
    x
}

/// Legal buys right now: pile nonempty and affordable, plus declining.
pub fn gain_mask(state: &GameState) -> Mask {
    let mut m = [false; ACTIONS];
    for c in state.supply.piles() {
        if state.supply.count(c) > 0 && c.cost() <= state.coins {
            m[c.index()] = true;
        }
    }
    m[DECLINE] = true;
    m
}

/// The mask implied by a buy request's option list.
pub fn request_mask(req: &DecisionRequest) -> Mask {
    let mut m = [false; ACTIONS];
    if let Options::Explicit(opts) = &req.options {
        for o in opts {
            match o {
                Choice::Card(c) => m[c.index()] = true,
                Choice::Pass => m[DECLINE] = true,
                _ => {}
            }
        }
    }
    m
}

pub fn action_choice(a: usize) -> Choice {
    match CardId::from_index(a) {
        Some(c) => Choice::Card(c),
        None => Choice::Pass,
    }
}

/// Highest-valued legal action; ties go to the lower index.
pub fn greedy(q: &[f64], mask: &Mask) -> usize {
    let mut best = DECLINE;
    let mut best_q = f64::NEG_INFINITY;
    for (a, &legal) in mask.iter().enumerate() {
        if legal && q[a] > best_q {
            best = a;
            best_q = q[a];
        }
    }
    best
}

pub fn epsilon_greedy(q: &[f64], mask: &Mask, epsilon: f64, rng: &mut GameRng) -> usize {
    if rng.unit() < epsilon {
        let legal: Vec<usize> = (0..ACTIONS).filter(|&a| mask[a]).collect();
        legal[rng.index(legal.len())]
    } else {
        greedy(q, mask)
    }
}

fn mask_bits(m: &Mask) -> u64 {
    m.iter().enumerate().fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
}

fn bits_mask(bits: u64) -> Mask {
    std::array::from_fn(|i| bits >> i & 1 == 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Box<[f32]>,
    pub action: u8,
    pub reward: f32,
    pub next_state: Box<[f32]>,
    next_mask: u64,
    pub terminal: bool,
}

impl Transition {
    pub fn new(state: &State, action: usize, reward: f64, next: Option<(&State, &Mask)>) -> Self {
        let pack = |s: &State| s.iter().map(|&x| x as f32).collect::<Box<[f32]>>();
        let (next_state, next_mask, terminal) = match next {
            Some((s, m)) => (pack(s), mask_bits(m), false),
            None => (vec![0.0; STATE_DIM].into_boxed_slice(), 1 << DECLINE, true),
        };
        Self { state: pack(state), action: action as u8, reward: reward as f32, next_state, next_mask, terminal }
    }

    pub fn next_mask(&self) -> Mask {
        bits_mask(self.next_mask)
    }
}

/// Fixed-capacity ring buffer sampled uniformly.
#[derive(Debug, Clone, Default)]
pub struct Replay {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl Replay {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), next: 0 }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn sample(&self, n: usize, rng: &mut GameRng) -> Vec<&Transition> {
        (0..n).map(|_| &self.items[rng.index(self.items.len())]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kingdom: Kingdom,
    /// Total self-play games.
    pub games: usize,
    /// Outer iterations; the game budget is spread evenly over them.
    pub iterations: usize,
    /// Gradient updates after each iteration's games.
    pub updates_per_iteration: usize,
    pub replay_capacity: usize,
    /// Transitions collected before learning starts.
    pub warmup: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub learning_rate: f64,
    pub target_sync: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the game budget over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    pub hidden: [usize; 2],
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            kingdom: benchmark_kingdom(),
            games: 7000,
            iterations: 1000,
            updates_per_iteration: 256,
            replay_capacity: 100_000,
            warmup: 1000,
            batch_size: 64,
            gamma: 0.99,
            learning_rate: 1e-4,
            target_sync: 1000,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.5,
            hidden: [256, 256],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.iterations == 0 || self.batch_size == 0 || self.replay_capacity == 0 || self.target_sync == 0 {
            return bad("iterations, batch_size, replay_capacity and target_sync must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be nonempty");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon must be in [0, 1]");
        }
        Ok(())
    }

    pub fn sizes(&self) -> [usize; 4] {
        [STATE_DIM, self.hidden[0], self.hidden[1], ACTIONS]
    }

    pub fn epsilon(&self, game: usize) -> f64 {
        let span = (self.games as f64 * self.epsilon_decay_fraction).max(1.0);
        let t = (game as f64 / span).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }
}

/// Online and target networks plus optimizer state.
#[derive(Debug, Clone)]
pub struct Learner {
    pub online: Mlp,
    pub target: Mlp,
    adam: Adam,
    pub gamma: f64,
    pub learning_rate: f64,
    pub target_sync: u64,
    pub updates: u64,
}

impl Learner {
    pub fn new(online: Mlp, gamma: f64, learning_rate: f64, target_sync: u64) -> Self {
        Self { target: online.clone(), adam: Adam::new(&online), online, gamma, learning_rate, target_sync, updates: 0 }
    }

    pub fn from_config(config: &TrainConfig, rng: &mut GameRng) -> Self {
        let net = Mlp::new(&config.sizes(), rng);
        Self::new(net, config.gamma, config.learning_rate, config.target_sync)
    }

    fn stack(rows: impl Iterator<Item = impl AsRef<[f32]>>, n: usize, dim: usize) -> Array2<f64> {
        let mut x = Array2::zeros((n, dim));
        for (i, row) in rows.enumerate() {
            for (j, &v) in row.as_ref().iter().enumerate() {
                x[[i, j]] = f64::from(v);
            }
        }
        x
    }

    /// r for terminal transitions; otherwise r + gamma * Q_target(s', a*)
    /// with a* the online network's best legal action in s'.
    pub fn targets(&self, batch: &[&Transition]) -> Vec<f64> {
        let dim = self.online.input_dim();
        let next = Self::stack(batch.iter().map(|t| &t.next_state), batch.len(), dim);
        let q_online = self.online.forward_batch(next.view()).expect("shape");
        let q_target = self.target.forward_batch(next.view()).expect("shape");
        batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let r = f64::from(t.reward);
                if t.terminal {
                    r
                } else {
                    let row = q_online.row(i);
                    let a = greedy(row.as_slice().expect("contiguous"), &t.next_mask());
                    r + self.gamma * q_target[[i, a]]
                }
            })
            .collect()
    }

    /// One gradient step on `batch`. Returns the loss before the step.
    pub fn train_step(&mut self, batch: &[&Transition]) -> f64 {
        let targets = self.targets(batch);
        let x = Self::stack(batch.iter().map(|t| &t.state), batch.len(), self.online.input_dim());
        let actions: Vec<usize> = batch.iter().map(|t| usize::from(t.action)).collect();
        let (loss, grads) = self.online.loss_and_grad(x.view(), &actions, &targets);
        self.adam.step(&mut self.online, &grads, self.learning_rate);
        self.updates += 1;
        if self.updates % self.target_sync == 0 {
            self.target = self.online.clone();
        }
        loss
    }

    /// Batch loss against the current targets, without updating.
    pub fn batch_loss(&self, batch: &[&Transition]) -> f64 {
        let targets = self.targets(batch);
        let x = Self::stack(batch.iter().map(|t| &t.state), batch.len(), self.online.input_dim());
        let actions: Vec<usize> = batch.iter().map(|t| usize::from(t.action)).collect();
        self.online.loss(x.view(), &actions, &targets)
    }
}

fn q_values(net: &Mlp, s: &State) -> Vec<f64> {
    net.forward(ndarray::ArrayView1::from(&s[..])).expect("state dimension").to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub games: usize,
    pub transitions: usize,
    pub updates: u64,
    /// Mean loss per iteration that trained.
    pub losses: Vec<f64>,
    pub final_epsilon: f64,
}

/// One self-play game. Both seats act from `net`; transitions go to `replay`.
fn self_play_game(
    net: &Mlp,
    kingdom: Kingdom,
    seed: u64,
    first: usize,
    epsilon: f64,
    rng: &mut GameRng,
    replay: &mut Replay,
) -> Result<usize, Error> {
    let mut game = GameState::with_log(seed, kingdom, first, false)?;
    let mut pending: [Option<(State, usize)>; 2] = [None, None];
    let mut pushed = 0;
    let h = Heuristics::default();
    loop {
        if let Step::GameOver = game.step()? {
            break;
        }
        let req = game.pending().expect("pending").clone();
        let choice = if req.kind == DecisionKind::ChooseBuy {
            let p = req.player;
            let s = encode_state(&game, p);
            let mask = request_mask(&req);
            if let Some((ps, pa)) = pending[p].take() {
                replay.push(Transition::new(&ps, pa, 0.0, Some((&s, &mask))));
                pushed += 1;
            }
            let a = epsilon_greedy(&q_values(net, &s), &mask, epsilon, rng);
            pending[p] = Some((s, a));
            action_choice(a)
        } else {
            default_decision(&req, &game, &h)
        };
        game.apply_decision(choice)?;
    }
    let winner = game.score()?.winner;
    for (p, slot) in pending.iter_mut().enumerate() {
        if let Some((s, a)) = slot.take() {
            let r = match winner {
                Winner::Tie => 0.0,
                Winner::Player(w) if w == p => 1.0,
                Winner::Player(_) => -1.0,
            };
            replay.push(Transition::new(&s, a, r, None));
            pushed += 1;
        }
    }
    Ok(pushed)
}

/// Trains a network by self-play. With `checkpoint`, the network is
/// written there every 100 iterations and at the end.
pub fn self_play_train(config: &TrainConfig, checkpoint: Option<&Path>) -> Result<(Mlp, TrainReport), Error> {
    config.validate()?;
    let mut rng = GameRng::new(derive_seed(config.seed, 0));
    let mut learner = Learner::from_config(config, &mut rng);
    let mut replay = Replay::new(config.replay_capacity);
    let mut report = TrainReport { games: 0, transitions: 0, updates: 0, losses: Vec::new(), final_epsilon: config.epsilon_start };
    let per_iter = config.games.div_ceil(config.iterations);
    for it in 0..config.iterations {
        for _ in 0..per_iter {
            if report.games >= config.games {
                break;
            }
            let g = report.games;
            let eps = config.epsilon(g);
            let seed = derive_seed(config.seed, 1_000_000 + g as u64);
            report.transitions +=
                self_play_game(&learner.online, config.kingdom, seed, g % 2, eps, &mut rng, &mut replay)?;
            report.games += 1;
            report.final_epsilon = eps;
        }
        if replay.len() >= config.warmup.max(config.batch_size) && config.updates_per_iteration > 0 {
            let mut total = 0.0;
            for _ in 0..config.updates_per_iteration {
                let batch = replay.sample(config.batch_size, &mut rng);
                total += learner.train_step(&batch);
            }
            report.losses.push(total / config.updates_per_iteration as f64);
        }
        if let Some(path) = checkpoint {
            if (it + 1) % 100 == 0 || it + 1 == config.iterations {
                save_checkpoint(path, &learner.online, config)?;
            }
        }
    }
    report.updates = learner.updates;
    Ok((learner.online, report))
}

pub fn save_checkpoint(path: &Path, net: &Mlp, config: &TrainConfig) -> Result<(), Error> {
    let json = serde_json::to_string(config).expect("config serializes");
    std::fs::write(path, encode_checkpoint(net, &json)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<(Mlp, TrainConfig), Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let (net, json) = decode_checkpoint(&bytes)?;
    let config = serde_json::from_str(&json).map_err(|e| Error::Checkpoint(format!("config echo: {e}")))?;
    if net.input_dim() != STATE_DIM || net.output_dim() != ACTIONS {
        return Err(Error::Checkpoint(format!("expected {STATE_DIM} inputs and {ACTIONS} outputs")));
    }
    Ok((net, config))
}

/// Greedy learned buyer with heuristic play.
#[derive(Debug, Clone)]
pub struct DqnBot {
    pub name: String,
    pub net: Mlp,
}

impl DqnBot {
    pub fn new(name: impl Into<String>, net: Mlp) -> Self {
        Self { name: name.into(), net }
    }
}

pub struct DqnAgent<'a> {
    net: &'a Mlp,
}

impl Agent for DqnAgent<'_> {
    fn decide(&mut self, req: &DecisionRequest, state: &GameState) -> Choice {
        if req.kind == DecisionKind::ChooseBuy {
            let s = encode_state(state, req.player);
            action_choice(greedy(&q_values(self.net, &s), &request_mask(req)))
        } else {
            default_decision(req, state, &Heuristics::default())
        }
    }
}

impl Policy for DqnBot {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn describe(&self) -> String {
        format!("DQN {:?}", self.net.sizes())
    }

    fn agent(&self, _seat: usize) -> Box<dyn Agent + '_> {
        Box::new(DqnAgent { net: &self.net })
    }
}

/// Greedy evaluation; the opponent is policy A and moves first.
pub fn evaluate_policy(net: &Mlp, opponent: &dyn Policy, kingdom: Kingdom, n_games: usize, seed: u64) -> MatchResult {
    let bot = DqnBot::new("dqn-bot", net.clone());
    run_match(&MatchConfig {
        kingdom: KingdomChoice::Fixed(kingdom),
        first_player: FirstPlayerRule::AlwaysA,
        ..MatchConfig::new(opponent, &bot, n_games, seed)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start() -> GameState {
        GameState::new(1, benchmark_kingdom(), 0).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(STATE_DIM, 140);
        assert_eq!(ACTIONS, 34);
    }

    #[test]
    fn initial_encoding_sees_starting_deck() {
        let g = start();
        let x = encode_state(&g, 0);
        let own = |c: CardId| (x[c.index() * 4 + 1] + x[c.index() * 4 + 2] + x[c.index() * 4 + 3]) * 10.0;
        assert!((own(CardId::Copper) - 7.0).abs() < 1e-9);
        assert!((own(CardId::Estate) - 3.0).abs() < 1e-9);
        assert!(x.iter().all(|&v| (0.0..=FEATURE_CAP).contains(&v)));
        assert_eq!(x, encode_state(&g.clone(), 0));
    }

    #[test]
    fn mask_follows_cost_and_stock() {
        let mut g = start();
        g.coins = 3;
        let m = gain_mask(&g);
        assert!(!m[CardId::Gold.index()]);
        assert!(m[CardId::Silver.index()]);
        assert!(m[DECLINE]);
        g.coins = 0;
        let m = gain_mask(&g);
        let legal: Vec<usize> = (0..ACTIONS).filter(|&a| m[a]).collect();
        assert_eq!(legal, vec![CardId::Copper.index(), CardId::Curse.index(), DECLINE]);
        g.coins = 8;
        while g.supply.take(CardId::Province) {}
        assert!(!gain_mask(&g)[CardId::Province.index()]);
    }

    #[test]
    fn greedy_respects_mask() {
        let mut q = vec![0.0; ACTIONS];
        q[5] = 10.0;
        q[7] = 1.0;
        let mut m = [false; ACTIONS];
        m[7] = true;
        m[DECLINE] = true;
        assert_eq!(greedy(&q, &m), 7);
        let mut rng = GameRng::new(3);
        for _ in 0..500 {
            assert!(m[epsilon_greedy(&q, &m, 0.7, &mut rng)]);
        }
    }

    #[test]
    fn terminal_target_is_reward() {
        let learner = Learner::from_config(&TrainConfig { hidden: [8, 8], ..Default::default() }, &mut GameRng::new(1));
        let s = [0.5; STATE_DIM];
        let t = Transition::new(&s, 3, -1.0, None);
        assert_eq!(learner.targets(&[&t]), vec![-1.0]);
    }

    #[test]
    fn bootstrap_uses_only_legal_next_action() {
        let mut learner =
            Learner::from_config(&TrainConfig { hidden: [8, 8], ..Default::default() }, &mut GameRng::new(1));
        // Make Decline's value distinctive: only its output bias is nonzero.
        for net in [&mut learner.online, &mut learner.target] {
            let last = net.layers.last_mut().unwrap();
            last.w.fill(0.0);
            last.b.fill(5.0);
            last.b[DECLINE] = 2.0;
        }
        let mut only_decline = [false; ACTIONS];
        only_decline[DECLINE] = true;
        let s = [0.1; STATE_DIM];
        let t = Transition::new(&s, 0, 0.0, Some((&s, &only_decline)));
        let y = learner.targets(&[&t])[0];
        assert!((y - learner.gamma * 2.0).abs() < 1e-12);
    }

    #[test]
    fn epsilon_schedule() {
        let c = TrainConfig::default();
        assert_eq!(c.epsilon(0), 1.0);
        assert!((c.epsilon(3500) - 0.05).abs() < 1e-12);
        assert!((c.epsilon(6999) - 0.05).abs() < 1e-12);
        assert!((c.epsilon(1750) - 0.525).abs() < 1e-12);
    }
}
