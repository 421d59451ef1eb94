//! The rules engine.
//!
//! [`GameState`] is a resumable state machine. [`GameState::step`] runs
//! automatic effects until some player has to choose, then hands back a
//! [`DecisionRequest`]; [`GameState::apply_decision`] feeds the answer in.
//! Card text is interpreted from the atom sequences in [`crate::cards`]
//! through a work stack, so nested effects (Throne Room, Vassal, attacks
//! with Moat reveals) suspend and resume without recursion.

mod decision;
mod play;

pub use decision::{Choice, DecisionKind, DecisionRequest, Options};
pub use play::{play_game, play_game_with, replay, GameRecord, PlayOptions};

use serde::{Deserialize, Serialize};

use crate::cards::{
    initial_supply, vp_value, Attack, CardCounts, CardId, CardType, Decision, Effect, GainTo,
    Kingdom, SupplyState, STARTING_COPPERS, STARTING_ESTATES,
};
use crate::logformat::{Event, EventKind};
use crate::rng::GameRng;
use crate::Error;

use CardId::*;

/// Each player gets at most this many turns before the game is scored as-is.
pub const TURN_CAP: u32 = 100;
pub const HAND_SIZE: u32 = 5;

#[derive(Debug, Clone, Default)]
pub struct PlayerZones {
    /// Draw pile; the last element is the top card.
    pub deck: Vec<CardId>,
    pub hand: CardCounts,
    pub discard: CardCounts,
    pub in_play: CardCounts,
    /// Revealed, looked-at or set-aside cards awaiting a decision.
    pub aside: Vec<CardId>,
}

impl PlayerZones {
    /// Every card the player owns, wherever it sits.
    pub fn owned(&self) -> CardCounts {
        let mut all = self.hand;
        all.merge(&self.discard);
        all.merge(&self.in_play);
        for &c in self.deck.iter().chain(self.aside.iter()) {
            all.add(c, 1);
        }
        all
    }

    pub fn deck_counts(&self) -> CardCounts {
        CardCounts::from_cards(self.deck.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Action,
    Buy,
    Cleanup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Winner {
    Player(usize),
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub vp: [i32; 2],
    pub winner: Winner,
}

/// Per-player counters, tallied the same way the log is written.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerStats {
    /// PLAY events (action plays, Throne Room repeats included).
    pub plays: u32,
    /// Cards gained by buying or by card effects.
    pub gains: u32,
    /// Buy decisions answered with a card.
    pub buys: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step<'a> {
    Decision(&'a DecisionRequest),
    GameOver,
}

/// Scores two holdings. Ties on VP go to the player with fewer turns.
pub fn score_holdings(owned: [&CardCounts; 2], turns: [u32; 2]) -> Score {
    let vp = [0, 1].map(|p| {
        let size = owned[p].total();
        owned[p].iter().map(|(c, n)| vp_value(c, size) * n as i32).sum::<i32>()
    });
    let winner = if vp[0] != vp[1] {
        Winner::Player(if vp[0] > vp[1] { 0 } else { 1 })
    } else if turns[0] != turns[1] {
        Winner::Player(if turns[0] < turns[1] { 0 } else { 1 })
    } else {
        Winner::Tie
    };
    Score { vp, winner }
}

/// Province pile empty, or three supply piles empty.
pub fn check_end(supply: &SupplyState) -> bool {
    supply.count(Province) == 0 || supply.empty_piles() >= 3
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Effect(Effect, CardId),
    /// Resolve a card that is already in play (Throne Room repeats, Vassal).
    Resolve(CardId),
    /// Offer the victim a reaction before an attack resolves.
    Reaction,
    GainUpTo(u32),
    LibraryDraw,
    LibraryFinish,
}

#[derive(Debug, Clone, Copy)]
enum Cont {
    Action,
    Buy,
    Reaction,
    DiscardFromHand,
    Cellar,
    Chapel,
    Harbinger,
    Vassal,
    Gain,
    Moneylender,
    RemodelTrash,
    ThroneRoom,
    Library,
    Mine,
    Sentry,
    Artisan,
    Bureaucrat,
    Bandit,
}

#[derive(Debug, Clone)]
struct Pending {
    request: DecisionRequest,
    cont: Cont,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Running,
    Over,
    /// Game over has been returned by `step` once already.
    Reported,
}

#[derive(Debug, Clone)]
pub struct GameState {
    pub kingdom: Kingdom,
    pub supply: SupplyState,
    pub players: [PlayerZones; 2],
    pub trash: CardCounts,
    /// Turn number of the active player (1-based, counted per player).
    pub turn_number: u32,
    /// Completed turns per player.
    pub turns: [u32; 2],
    pub active: usize,
    pub first_player: usize,
    pub actions: u32,
    pub buys: u32,
    pub coins: u32,
    pub phase: Phase,
    pub seed: u64,
    pub stats: [PlayerStats; 2],
    rng: GameRng,
    stack: Vec<Op>,
    pending: Option<Pending>,
    merchant_bonus: u32,
    shielded: bool,
    status: Status,
    capped: bool,
    initial_totals: CardCounts,
    log: Option<Vec<Event>>,
    decisions: Vec<Choice>,
}

impl GameState {
    /// Deals a fresh game. Setup shuffles the first player's deck first so
    /// that swapping seats and policies together replays the same game.
    pub fn new(seed: u64, kingdom: Kingdom, first_player: usize) -> Result<Self, Error> {
        Self::with_log(seed, kingdom, first_player, true)
    }

    pub fn with_log(seed: u64, kingdom: Kingdom, first_player: usize, log: bool) -> Result<Self, Error> {
        if first_player > 1 {
            return Err(Error::InvalidKingdom(format!("first player must be 0 or 1, got {first_player}")));
        }
        let supply = initial_supply(&kingdom, 2)?;
        let mut g = GameState {
            kingdom,
            supply,
            players: Default::default(),
            trash: CardCounts::new(),
            turn_number: 1,
            turns: [0, 0],
            active: first_player,
            first_player,
            actions: 1,
            buys: 1,
            coins: 0,
            phase: Phase::Action,
            seed,
            stats: Default::default(),
            rng: GameRng::new(seed),
            stack: Vec::with_capacity(16),
            pending: None,
            merchant_bonus: 0,
            shielded: false,
            status: Status::Running,
            capped: false,
            initial_totals: CardCounts::new(),
            log: log.then(Vec::new),
            decisions: Vec::new(),
        };
        g.emit(2, EventKind::GameMetaInfo, vec![seed], Vec::new());
        for p in 0..2 {
            g.emit(p, EventKind::StartsWith, vec![], vec![(STARTING_COPPERS, Copper)]);
            g.emit(p, EventKind::StartsWith, vec![], vec![(STARTING_ESTATES, Estate)]);
        }
        for p in [first_player, 1 - first_player] {
            let mut start = CardCounts::new();
            start.add(Copper, STARTING_COPPERS);
            start.add(Estate, STARTING_ESTATES);
            g.players[p].discard = start;
            g.draw(p, HAND_SIZE);
        }
        g.initial_totals = g.card_totals();
        g.emit(first_player, EventKind::NewTurn, vec![1, 0], Vec::new());
        Ok(g)
    }

    /// Advances until a decision is needed or the game ends.
    pub fn step(&mut self) -> Result<Step<'_>, Error> {
        loop {
            if self.pending.is_some() {
                break;
            }
            match self.status {
                Status::Reported => return Err(Error::GameOver),
                Status::Over => {
                    self.status = Status::Reported;
                    return Ok(Step::GameOver);
                }
                Status::Running => {}
            }
            match self.stack.pop() {
                Some(op) => self.exec(op),
                None => self.advance_phase(),
            }
        }
        Ok(Step::Decision(&self.pending.as_ref().expect("pending").request))
    }

    pub fn pending(&self) -> Option<&DecisionRequest> {
        self.pending.as_ref().map(|p| &p.request)
    }

    /// Applies a policy's answer to the pending request.
    ///
    /// An answer outside the legal set is rejected with a diagnostic and the
    /// state is left untouched.
    pub fn apply_decision(&mut self, choice: Choice) -> Result<(), Error> {
        let pending = self.pending.take().ok_or(Error::NoPendingDecision)?;
        if !pending.request.options.allows(&choice) {
            let err = Error::IllegalChoice {
                player: pending.request.player,
                kind: pending.request.kind,
                choice: choice.to_string(),
            };
            self.pending = Some(pending);
            return Err(err);
        }
        self.decisions.push(choice.clone());
        self.resolve(pending.cont, &pending.request, choice);
        Ok(())
    }

    pub fn is_over(&self) -> bool {
        self.status != Status::Running
    }

    pub fn hit_turn_cap(&self) -> bool {
        self.capped
    }

    pub fn score(&self) -> Result<Score, Error> {
        if !self.is_over() {
            return Err(Error::NotTerminal);
        }
        Ok(self.current_score())
    }

    /// Score of the position as it stands, terminal or not.
    pub fn current_score(&self) -> Score {
        let owned = [self.players[0].owned(), self.players[1].owned()];
        score_holdings([&owned[0], &owned[1]], self.turns)
    }

    /// Supply + all zones + trash, per card.
    pub fn card_totals(&self) -> CardCounts {
        let mut all = *self.supply.counts();
        all.merge(&self.trash);
        for p in &self.players {
            all.merge(&p.owned());
        }
        all
    }

    pub fn initial_totals(&self) -> &CardCounts {
        &self.initial_totals
    }

    pub fn events(&self) -> &[Event] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn decisions(&self) -> &[Choice] {
        &self.decisions
    }

    pub fn opponent(&self, player: usize) -> usize {
        1 - player
    }

    pub(crate) fn into_parts(self) -> (Vec<Event>, Vec<Choice>) {
        (self.log.unwrap_or_default(), self.decisions)
    }

    // ---- logging -------------------------------------------------------

    /// `player` is a seat (0/1) or 2 for the game-level P0 line.
    fn emit(&mut self, player: usize, kind: EventKind, args: Vec<u64>, cards: Vec<(u32, CardId)>) {
        if let Some(log) = self.log.as_mut() {
            let label = if player == 2 { 0 } else { player as u8 + 1 };
            log.push(Event {
                line_index: log.len() as u32,
                player: label,
                kind,
                args,
                cards,
                quoted: false,
            });
        }
    }

    fn emit_cards(&mut self, player: usize, kind: EventKind, cards: &[CardId]) {
        if self.log.is_some() && !cards.is_empty() {
            let grouped = group_cards(cards);
            self.emit(player, kind, vec![], grouped);
        }
    }

    // ---- zone primitives ----------------------------------------------

    fn reshuffle(&mut self, p: usize) {
        let zones = &mut self.players[p];
        let mut cards = zones.discard.to_vec();
        zones.discard.clear();
        self.rng.shuffle(&mut cards);
        // Deck is empty whenever we reshuffle.
        zones.deck = cards;
        self.emit(p, EventKind::Shuffles, vec![], Vec::new());
    }

    /// Takes up to `n` cards off the top of the deck, reshuffling the
    /// discard pile into a new deck when the deck runs out.
    fn take_top(&mut self, p: usize, n: u32) -> Vec<CardId> {
        let mut out = Vec::with_capacity(n as usize);
        for _ in 0..n {
            if self.players[p].deck.is_empty() {
                if self.players[p].discard.is_empty() {
                    break;
                }
                self.reshuffle(p);
            }
            out.push(self.players[p].deck.pop().expect("deck nonempty"));
        }
        out
    }

    fn draw(&mut self, p: usize, n: u32) {
        let drawn = self.take_top(p, n);
        for &c in &drawn {
            self.players[p].hand.add(c, 1);
        }
        self.emit_cards(p, EventKind::Draw, &drawn);
    }

    fn gain(&mut self, p: usize, card: CardId, to: GainTo, kind: EventKind) -> bool {
        if !self.supply.take(card) {
            return false;
        }
        let zones = &mut self.players[p];
        match to {
            GainTo::Discard => zones.discard.add(card, 1),
            GainTo::Deck => zones.deck.push(card),
            GainTo::Hand => zones.hand.add(card, 1),
        }
        self.stats[p].gains += 1;
        self.emit(p, kind, vec![], vec![(1, card)]);
        true
    }

    fn discard_from_hand(&mut self, p: usize, cards: &[CardId]) {
        for &c in cards {
            let ok = self.players[p].hand.remove(c, 1);
            debug_assert!(ok);
            self.players[p].discard.add(c, 1);
        }
        self.emit_cards(p, EventKind::Discard, cards);
    }

    fn trash_from_hand(&mut self, p: usize, cards: &[CardId]) {
        for &c in cards {
            let ok = self.players[p].hand.remove(c, 1);
            debug_assert!(ok);
            self.trash.add(c, 1);
        }
        self.emit_cards(p, EventKind::Trash, cards);
    }

    fn remove_aside(&mut self, p: usize, card: CardId) {
        let aside = &mut self.players[p].aside;
        let at = aside.iter().position(|&c| c == card).expect("card is set aside");
        aside.remove(at);
    }

    /// Piles with at least one card and cost at most `max`.
    fn gainable(&self, max: u32, filter: impl Fn(CardId) -> bool) -> Vec<CardId> {
        self.supply
            .piles()
            .filter(|&c| self.supply.count(c) > 0 && c.cost() <= max && filter(c))
            .collect()
    }

    // ---- decision plumbing ---------------------------------------------

    /// Routes a choice to `player`. Requests with no legal answer are
    /// skipped; requests with exactly one are answered immediately.
    fn ask(&mut self, player: usize, kind: DecisionKind, source: Option<CardId>, param: u32, options: Options, cont: Cont) {
        let request = DecisionRequest { kind, player, source, param, options };
        if let Options::Explicit(v) = &request.options {
            if v.is_empty() {
                return;
            }
        }
        match request.options.forced() {
            Some(only) => self.resolve(cont, &request, only),
            None => self.pending = Some(Pending { request, cont }),
        }
    }

    fn advance_phase(&mut self) {
        match self.phase {
            Phase::Action => {
                let p = self.active;
                if self.actions > 0 {
                    let mut opts: Vec<Choice> = self.players[p]
                        .hand
                        .distinct()
                        .filter(|c| c.is_action())
                        .map(Choice::Card)
                        .collect();
                    if !opts.is_empty() {
                        opts.push(Choice::Pass);
                        self.ask(p, DecisionKind::ChooseAction, None, self.actions, Options::Explicit(opts), Cont::Action);
                        return;
                    }
                }
                self.start_buy_phase();
            }
            Phase::Buy => {
                if self.buys == 0 {
                    self.phase = Phase::Cleanup;
                    return;
                }
                let mut opts: Vec<Choice> = self.gainable(self.coins, |_| true).into_iter().map(Choice::Card).collect();
                opts.push(Choice::Pass);
                self.ask(self.active, DecisionKind::ChooseBuy, None, self.coins, Options::Explicit(opts), Cont::Buy);
            }
            Phase::Cleanup => self.cleanup(),
        }
    }

    fn start_buy_phase(&mut self) {
        self.phase = Phase::Buy;
        let p = self.active;
        let hand = self.players[p].hand;
        let mut played = Vec::new();
        let mut value = 0;
        for (c, n) in hand.iter().filter(|(c, _)| c.is_treasure()) {
            value += c.treasure_value() * n;
            played.extend(std::iter::repeat_n(c, n as usize));
        }
        if played.is_empty() {
            return;
        }
        if hand.contains(Silver) {
            value += self.merchant_bonus;
        }
        for &c in &played {
            self.players[p].hand.remove(c, 1);
            self.players[p].in_play.add(c, 1);
        }
        self.coins += value;
        if self.log.is_some() {
            self.emit(p, EventKind::PlayTreasuresFor, vec![value as u64], group_cards(&played));
        }
    }

    fn cleanup(&mut self) {
        let p = self.active;
        let zones = &mut self.players[p];
        let hand = zones.hand;
        let in_play = zones.in_play;
        zones.discard.merge(&hand);
        zones.discard.merge(&in_play);
        zones.hand.clear();
        zones.in_play.clear();
        self.draw(p, HAND_SIZE);
        self.turns[p] += 1;

        if check_end(&self.supply) {
            self.status = Status::Over;
            return;
        }
        if self.turns[0] >= TURN_CAP && self.turns[1] >= TURN_CAP {
            self.capped = true;
            self.status = Status::Over;
            return;
        }
        self.active = 1 - p;
        self.actions = 1;
        self.buys = 1;
        self.coins = 0;
        self.merchant_bonus = 0;
        self.phase = Phase::Action;
        self.turn_number = self.turns[self.active] + 1;
        let turn = self.turn_number as u64;
        self.emit(self.active, EventKind::NewTurn, vec![turn, 0], Vec::new());
    }

    /// Starts resolving `card`, which is already in play.
    fn resolve_play(&mut self, card: CardId) {
        let p = self.active;
        self.stats[p].plays += 1;
        self.emit(p, EventKind::Play, vec![], vec![(1, card)]);
        for &e in card.spec().effect.iter().rev() {
            self.stack.push(Op::Effect(e, card));
        }
        if card.is(CardType::ATTACK) {
            self.stack.push(Op::Reaction);
        }
    }

    fn exec(&mut self, op: Op) {
        let p = self.active;
        let victim = 1 - p;
        match op {
            Op::Resolve(card) => self.resolve_play(card),
            Op::Reaction => {
                self.shielded = false;
                if self.players[victim].hand.contains(Moat) {
                    let opts = Options::Explicit(vec![Choice::Card(Moat), Choice::Pass]);
                    self.ask(victim, DecisionKind::RevealReaction, None, 0, opts, Cont::Reaction);
                }
            }
            Op::GainUpTo(max) => {
                let opts = self.gainable(max, |_| true).into_iter().map(Choice::Card).collect();
                self.ask(p, DecisionKind::GainUpToCost, Some(Remodel), max, Options::Explicit(opts), Cont::Gain);
            }
            Op::LibraryDraw => self.library_draw(),
            Op::LibraryFinish => {
                let aside = std::mem::take(&mut self.players[p].aside);
                for &c in &aside {
                    self.players[p].discard.add(c, 1);
                }
                self.emit_cards(p, EventKind::Discard, &aside);
            }
            Op::Effect(effect, source) => self.exec_effect(effect, source),
        }
    }

    fn exec_effect(&mut self, effect: Effect, source: CardId) {
        let p = self.active;
        let victim = 1 - p;
        match effect {
            Effect::PlusCards(n) => self.draw(p, n as u32),
            Effect::PlusActions(n) => {
                self.actions += n as u32;
                self.emit(p, EventKind::GetsAction, vec![n as u64], Vec::new());
            }
            Effect::PlusBuys(n) => {
                self.buys += n as u32;
                self.emit(p, EventKind::GetsBuy, vec![n as u64], Vec::new());
            }
            Effect::PlusCoins(n) => {
                self.coins += n as u32;
                self.emit(p, EventKind::GetsCoin, vec![n as u64], Vec::new());
            }
            Effect::SilverBonus => self.merchant_bonus += 1,
            Effect::VpPerTenCards => {}
            Effect::Gain(card, to) => {
                self.gain(p, card, to, EventKind::Gain);
            }
            Effect::OthersDraw(n) => self.draw(victim, n as u32),
            Effect::Attack(attack) => {
                if !self.shielded {
                    self.exec_attack(attack, source);
                }
            }
            Effect::Decision(d) => self.exec_decision(d, source),
        }
    }

    fn exec_attack(&mut self, attack: Attack, source: CardId) {
        let victim = 1 - self.active;
        match attack {
            Attack::GainCurse => {
                self.gain(victim, Curse, GainTo::Discard, EventKind::Gain);
            }
            Attack::DiscardDownTo(keep) => {
                let hand = self.players[victim].hand;
                let size = hand.total();
                let keep = keep as u32;
                if size > keep {
                    let k = size - keep;
                    let opts = Options::Subset { pool: hand, min: k, max: k };
                    self.ask(victim, DecisionKind::DiscardToHandSize, Some(source), keep, opts, Cont::DiscardFromHand);
                }
            }
            Attack::TopdeckVictory => {
                let hand = self.players[victim].hand;
                let victories: Vec<Choice> = hand
                    .distinct()
                    .filter(|c| c.is(CardType::VICTORY))
                    .map(Choice::Card)
                    .collect();
                if victories.is_empty() {
                    let shown = hand.to_vec();
                    self.emit_cards(victim, EventKind::Reveal, &shown);
                } else {
                    let opts = Options::Explicit(victories);
                    self.ask(victim, DecisionKind::BureaucratTopdeckVictory, Some(source), 0, opts, Cont::Bureaucrat);
                }
            }
            Attack::TrashRevealedTreasure => {
                let revealed = self.take_top(victim, 2);
                self.emit_cards(victim, EventKind::Reveal, &revealed);
                self.players[victim].aside.extend_from_slice(&revealed);
                let mut targets: Vec<CardId> = revealed
                    .iter()
                    .copied()
                    .filter(|c| c.is_treasure() && *c != Copper)
                    .collect();
                targets.sort_unstable();
                targets.dedup();
                if targets.is_empty() {
                    self.bandit_discard_rest(victim);
                } else {
                    let opts = Options::Explicit(targets.into_iter().map(Choice::Card).collect());
                    self.ask(victim, DecisionKind::BanditVictimTrash, Some(source), 0, opts, Cont::Bandit);
                }
            }
        }
    }

    fn bandit_discard_rest(&mut self, victim: usize) {
        let rest = std::mem::take(&mut self.players[victim].aside);
        for &c in &rest {
            self.players[victim].discard.add(c, 1);
        }
        self.emit_cards(victim, EventKind::Discard, &rest);
    }

    fn exec_decision(&mut self, d: Decision, source: CardId) {
        let p = self.active;
        let hand = self.players[p].hand;
        let src = Some(source);
        match d {
            Decision::Cellar => {
                let opts = Options::Subset { pool: hand, min: 0, max: hand.total() };
                self.ask(p, DecisionKind::DiscardAnyNumber, src, 0, opts, Cont::Cellar);
            }
            Decision::Chapel => {
                let opts = Options::Subset { pool: hand, min: 0, max: hand.total().min(4) };
                self.ask(p, DecisionKind::TrashUpToN, src, 4, opts, Cont::Chapel);
            }
            Decision::Harbinger => {
                let discard = self.players[p].discard;
                if discard.is_empty() {
                    return;
                }
                self.emit(p, EventKind::LookAt, vec![], discard.iter().map(|(c, n)| (n, c)).collect());
                let mut opts: Vec<Choice> = discard.distinct().map(Choice::Card).collect();
                opts.push(Choice::Pass);
                self.ask(p, DecisionKind::TopdeckFromDiscard, src, 0, Options::Explicit(opts), Cont::Harbinger);
            }
            Decision::Vassal => {
                let Some(&top) = self.take_top(p, 1).first() else {
                    return;
                };
                self.players[p].discard.add(top, 1);
                self.emit(p, EventKind::Discard, vec![], vec![(1, top)]);
                if top.is_action() {
                    let opts = Options::Explicit(vec![Choice::Card(top), Choice::Pass]);
                    self.ask(p, DecisionKind::VassalPlayOrDiscard, src, 0, opts, Cont::Vassal);
                }
            }
            Decision::Workshop => {
                let opts = self.gainable(4, |_| true).into_iter().map(Choice::Card).collect();
                self.ask(p, DecisionKind::GainUpToCost, src, 4, Options::Explicit(opts), Cont::Gain);
            }
            Decision::Moneylender => {
                let coppers = hand.get(Copper);
                if coppers > 0 {
                    let mut pool = CardCounts::new();
                    pool.add(Copper, coppers);
                    let opts = Options::Subset { pool, min: 0, max: 1 };
                    self.ask(p, DecisionKind::TrashUpToN, src, 1, opts, Cont::Moneylender);
                }
            }
            Decision::Poacher => {
                let empty = self.supply.empty_piles() as u32;
                let k = empty.min(hand.total());
                if k > 0 {
                    let opts = Options::Subset { pool: hand, min: k, max: k };
                    self.ask(p, DecisionKind::DiscardToHandSize, src, hand.total() - k, opts, Cont::DiscardFromHand);
                }
            }
            Decision::Remodel => {
                if !hand.is_empty() {
                    let opts = Options::Subset { pool: hand, min: 1, max: 1 };
                    self.ask(p, DecisionKind::TrashUpToN, src, 1, opts, Cont::RemodelTrash);
                }
            }
            Decision::ThroneRoom => {
                let mut opts: Vec<Choice> = hand.distinct().filter(|c| c.is_action()).map(Choice::Card).collect();
                if !opts.is_empty() {
                    opts.push(Choice::Pass);
                    self.ask(p, DecisionKind::ChooseThroneTarget, src, 0, Options::Explicit(opts), Cont::ThroneRoom);
                }
            }
            Decision::Library => {
                self.stack.push(Op::LibraryFinish);
                self.stack.push(Op::LibraryDraw);
            }
            Decision::Mine => {
                let mut opts = Vec::new();
                for t in hand.distinct().filter(|c| c.is_treasure()) {
                    for g in self.gainable(t.cost() + 3, CardId::is_treasure) {
                        opts.push(Choice::Pair(t, g));
                    }
                }
                if !opts.is_empty() {
                    opts.push(Choice::Pass);
                    self.ask(p, DecisionKind::MineTrashAndGain, src, 3, Options::Explicit(opts), Cont::Mine);
                }
            }
            Decision::Sentry => {
                let looked = self.take_top(p, 2);
                if looked.is_empty() {
                    return;
                }
                self.emit_cards(p, EventKind::LookAt, &looked);
                self.players[p].aside.extend_from_slice(&looked);
                let opts = Options::Explicit(sentry_options(&looked));
                self.ask(p, DecisionKind::SentryDisposition, src, 0, opts, Cont::Sentry);
            }
            Decision::Artisan => {
                let mut opts = Vec::new();
                for g in self.gainable(5, |_| true) {
                    let mut after = hand;
                    after.add(g, 1);
                    for t in after.distinct() {
                        opts.push(Choice::Pair(g, t));
                    }
                }
                if opts.is_empty() {
                    opts = hand.distinct().map(Choice::Card).collect();
                }
                self.ask(p, DecisionKind::ArtisanGainAndTopdeck, src, 5, Options::Explicit(opts), Cont::Artisan);
            }
        }
    }

    fn library_draw(&mut self) {
        let p = self.active;
        let mut kept = Vec::new();
        while self.players[p].hand.total() < 7 {
            let Some(&card) = self.take_top(p, 1).first() else {
                break;
            };
            if card.is_action() {
                self.emit_cards(p, EventKind::Draw, &kept);
                self.players[p].aside.push(card);
                self.stack.push(Op::LibraryDraw);
                let opts = Options::Explicit(vec![Choice::Card(card), Choice::Pass]);
                self.ask(p, DecisionKind::LibraryKeepOrSetAside, Some(Library), 7, opts, Cont::Library);
                return;
            }
            self.players[p].hand.add(card, 1);
            kept.push(card);
        }
        self.emit_cards(p, EventKind::Draw, &kept);
    }

    fn resolve(&mut self, cont: Cont, request: &DecisionRequest, choice: Choice) {
        let p = request.player;
        match (cont, choice) {
            (Cont::Action, Choice::Card(card)) => {
                self.actions -= 1;
                self.players[p].hand.remove(card, 1);
                self.players[p].in_play.add(card, 1);
                self.resolve_play(card);
            }
            (Cont::Action, _) => self.start_buy_phase(),
            (Cont::Buy, Choice::Card(card)) => {
                self.coins -= card.cost();
                self.buys -= 1;
                self.stats[p].buys += 1;
                self.gain(p, card, GainTo::Discard, EventKind::BuyAndGain);
            }
            (Cont::Buy, _) => self.phase = Phase::Cleanup,
            (Cont::Reaction, Choice::Card(card)) => {
                self.shielded = true;
                self.emit(p, EventKind::Reveal, vec![], vec![(1, card)]);
            }
            (Cont::Reaction, _) => {}
            (Cont::DiscardFromHand | Cont::Cellar, Choice::Cards(cards)) => {
                self.discard_from_hand(p, &cards);
                if matches!(cont, Cont::Cellar) {
                    self.draw(p, cards.len() as u32);
                }
            }
            (Cont::Chapel, Choice::Cards(cards)) => self.trash_from_hand(p, &cards),
            (Cont::Moneylender, Choice::Cards(cards)) => {
                if !cards.is_empty() {
                    self.trash_from_hand(p, &cards);
                    self.coins += 3;
                    self.emit(p, EventKind::GetsCoin, vec![3], Vec::new());
                }
            }
            (Cont::RemodelTrash, Choice::Cards(cards)) => {
                self.trash_from_hand(p, &cards);
                self.stack.push(Op::GainUpTo(cards[0].cost() + 2));
            }
            (Cont::Harbinger, Choice::Card(card)) => {
                self.players[p].discard.remove(card, 1);
                self.players[p].deck.push(card);
                self.emit(p, EventKind::Topdeck, vec![], vec![(1, card)]);
            }
            (Cont::Vassal, Choice::Card(card)) => {
                self.players[p].discard.remove(card, 1);
                self.players[p].in_play.add(card, 1);
                self.resolve_play(card);
            }
            (Cont::Gain, Choice::Card(card)) => {
                self.gain(p, card, GainTo::Discard, EventKind::Gain);
            }
            (Cont::ThroneRoom, Choice::Card(card)) => {
                self.players[p].hand.remove(card, 1);
                self.players[p].in_play.add(card, 1);
                self.stack.push(Op::Resolve(card));
                self.stack.push(Op::Resolve(card));
            }
            (Cont::Library, Choice::Card(_)) => {}
            (Cont::Library, Choice::Pass) => {
                let card = self.players[p].aside.pop().expect("library card set aside");
                self.players[p].hand.add(card, 1);
                self.emit(p, EventKind::Draw, vec![], vec![(1, card)]);
            }
            (Cont::Mine, Choice::Pair(trash, gain)) => {
                self.trash_from_hand(p, &[trash]);
                self.gain(p, gain, GainTo::Hand, EventKind::Gain);
            }
            (Cont::Sentry, Choice::Sentry { trash, discard, topdeck }) => {
                for &c in &trash {
                    self.remove_aside(p, c);
                    self.trash.add(c, 1);
                }
                self.emit_cards(p, EventKind::Trash, &trash);
                for &c in &discard {
                    self.remove_aside(p, c);
                    self.players[p].discard.add(c, 1);
                }
                self.emit_cards(p, EventKind::Discard, &discard);
                for &c in topdeck.iter().rev() {
                    self.remove_aside(p, c);
                    self.players[p].deck.push(c);
                }
                self.emit_cards(p, EventKind::Topdeck, &topdeck);
            }
            (Cont::Artisan, Choice::Pair(gain, top)) => {
                self.gain(p, gain, GainTo::Hand, EventKind::Gain);
                self.topdeck_from_hand(p, top);
            }
            (Cont::Artisan, Choice::Card(top)) => self.topdeck_from_hand(p, top),
            (Cont::Bureaucrat, Choice::Card(card)) => {
                self.emit(p, EventKind::Reveal, vec![], vec![(1, card)]);
                self.topdeck_from_hand(p, card);
            }
            (Cont::Bandit, Choice::Card(card)) => {
                self.remove_aside(p, card);
                self.trash.add(card, 1);
                self.emit(p, EventKind::Trash, vec![], vec![(1, card)]);
                self.bandit_discard_rest(p);
            }
            // Declines: Harbinger, Vassal, Throne Room, Mine.
            (_, Choice::Pass) => {}
            (cont, choice) => unreachable!("{choice:?} validated for {cont:?} but has no handler"),
        }
    }

    fn topdeck_from_hand(&mut self, p: usize, card: CardId) {
        self.players[p].hand.remove(card, 1);
        self.players[p].deck.push(card);
        self.emit(p, EventKind::Topdeck, vec![], vec![(1, card)]);
    }
}

/// Groups consecutive-or-not duplicates by first appearance: `[C, E, C]` -> `[(2, C), (1, E)]`.
pub(crate) fn group_cards(cards: &[CardId]) -> Vec<(u32, CardId)> {
    let mut out: Vec<(u32, CardId)> = Vec::new();
    for &c in cards {
        match out.iter_mut().find(|(_, x)| *x == c) {
            Some((n, _)) => *n += 1,
            None => out.push((1, c)),
        }
    }
    out
}

/// Every trash/discard/topdeck split of the looked-at cards, with every
/// order of the topdecked ones. Duplicates collapse.
fn sentry_options(looked: &[CardId]) -> Vec<Choice> {
    let n = looked.len();
    let mut out: Vec<Choice> = Vec::new();
    for mask in 0..3usize.pow(n as u32) {
        let mut trash = Vec::new();
        let mut discard = Vec::new();
        let mut top = Vec::new();
        let mut m = mask;
        for &c in looked {
            match m % 3 {
                0 => trash.push(c),
                1 => discard.push(c),
                _ => top.push(c),
            }
            m /= 3;
        }
        let mut orders = vec![top.clone()];
        if top.len() == 2 && top[0] != top[1] {
            orders.push(vec![top[1], top[0]]);
        }
        for order in orders {
            let choice = Choice::Sentry { trash: trash.clone(), discard: discard.clone(), topdeck: order };
            if !out.contains(&choice) {
                out.push(choice);
            }
        }
    }
    out
}
