//! Policies and the buy-menu heuristic bots.
//!
//! A buy menu is an ordered list of (card, count) entries. On each buy the
//! bot takes the leftmost entry it can afford whose count is still
//! positive, and decrements that count. A [`VictoryRule`] overlay buys
//! Provinces, Duchies and Estates ahead of the menu. Every non-buy choice
//! goes through [`default_decision`], a fixed heuristic table shared by all
//! bots, including the learned one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cards::{CardCounts, CardId, CardType, SupplyState};
use crate::engine::{Choice, DecisionKind, DecisionRequest, GameState, Options};
use crate::rng::GameRng;
use crate::Error;

use CardId::*;

/// Per-game decision maker for one seat.
pub trait Agent {
    fn decide(&mut self, request: &DecisionRequest, state: &GameState) -> Choice;
}

/// A strategy. Immutable and shareable; per-game memory lives in its [`Agent`]s.
pub trait Policy: Send + Sync {
    fn name(&self) -> String;

    /// Human-readable configuration, e.g. the buy menu.
    fn describe(&self) -> String {
        self.name()
    }

    fn agent(&self, seat: usize) -> Box<dyn Agent + '_>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MenuEntry {
    pub card: CardId,
    pub count: u32,
}

pub const MAX_COUNT: u32 = 99;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BuyMenu {
    pub entries: Vec<MenuEntry>,
}

impl BuyMenu {
    pub fn new(entries: &[(CardId, u32)]) -> Self {
        Self {
            entries: entries.iter().map(|&(card, count)| MenuEntry { card, count }).collect(),
        }
    }

    /// Sum of all counts.
    pub fn total_count(&self) -> u32 {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn cards(&self) -> impl Iterator<Item = CardId> + '_ {
        self.entries.iter().map(|e| e.card)
    }
}

impl fmt::Display for BuyMenu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|e| format!("({}, {})", e.card, e.count)).collect();
        f.write_str(&parts.join(", "))
    }
}

impl FromStr for BuyMenu {
    type Err = Error;

    /// Parses `(Gold, 99), (Silver, 99)`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let mut entries = Vec::new();
        for part in s.split(')') {
            let part = part.trim().trim_start_matches(',').trim();
            if part.is_empty() {
                continue;
            }
            let inner = part
                .strip_prefix('(')
                .ok_or_else(|| Error::InvalidMenu(format!("expected '(' in {part:?}")))?;
            let (card, count) = inner
                .split_once(',')
                .ok_or_else(|| Error::InvalidMenu(format!("expected 'card, count' in {inner:?}")))?;
            let count: u32 = count
                .trim()
                .parse()
                .map_err(|_| Error::InvalidMenu(format!("bad count in {inner:?}")))?;
            if count > MAX_COUNT {
                return Err(Error::InvalidMenu(format!("count {count} above {MAX_COUNT}")));
            }
            entries.push(MenuEntry { card: card.parse()?, count });
        }
        Ok(Self { entries })
    }
}

/// Victory-card overlay. Thresholds compare against Provinces left in the supply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VictoryRule {
    pub province_always: bool,
    pub duchy_threshold: u32,
    pub estate_threshold: u32,
}

pub const MAX_THRESHOLD: u32 = 8;

impl Default for VictoryRule {
    fn default() -> Self {
        Self { province_always: true, duchy_threshold: 4, estate_threshold: 2 }
    }
}

/// One buy from a live menu. Returns `None` to decline the buy.
pub fn buy_menu_choose(
    menu: &mut BuyMenu,
    coins: u32,
    supply: &SupplyState,
    victory: &VictoryRule,
    provinces_left: u32,
) -> Option<CardId> {
    let can = |c: CardId| supply.count(c) > 0 && c.cost() <= coins;
    if victory.province_always && can(Province) {
        return Some(Province);
    }
    if provinces_left <= victory.duchy_threshold && can(Duchy) {
        return Some(Duchy);
    }
    if provinces_left <= victory.estate_threshold && can(Estate) {
        return Some(Estate);
    }
    let entry = menu.entries.iter_mut().find(|e| e.count > 0 && can(e.card))?;
    entry.count -= 1;
    Some(entry.card)
}

/// What the play heuristics may consult besides the request and the state.
#[derive(Debug, Clone, Copy)]
pub struct Heuristics<'a> {
    pub menu: Option<&'a BuyMenu>,
    pub victory: VictoryRule,
}

impl Default for Heuristics<'_> {
    fn default() -> Self {
        Self { menu: None, victory: VictoryRule::default() }
    }
}

/// Play order: non-terminals, Throne Room, terminal draw, attacks, the rest by cost.
fn action_rank(card: CardId) -> u32 {
    const ORDER: [CardId; 16] = [
        Village, Market, Festival, Laboratory, Merchant, Poacher, Harbinger, Cellar, Sentry,
        ThroneRoom, CouncilRoom, Smithy, Witch, Militia, Bandit, Bureaucrat,
    ];
    match ORDER.iter().position(|&c| c == card) {
        Some(i) => i as u32,
        None => 100 + (10 - card.cost()) * 40 + card.index() as u32,
    }
}

fn cards_of(options: &Options) -> Vec<CardId> {
    match options {
        Options::Explicit(v) => v
            .iter()
            .filter_map(|c| if let Choice::Card(c) = c { Some(*c) } else { None })
            .collect(),
        Options::Subset { pool, .. } => pool.distinct().collect(),
    }
}

/// Green cards first, then cheapest.
fn discard_order(hand: &CardCounts) -> Vec<CardId> {
    let mut cards = hand.to_vec();
    cards.sort_by_key(|c| (!c.is_green(), c.cost(), c.index()));
    cards
}

fn provinces_left(state: &GameState) -> u32 {
    state.supply.count(Province)
}

/// Preferred card to gain among `options` with at most `max_cost` to spend.
fn preferred_gain(options: &[CardId], max_cost: u32, state: &GameState, h: &Heuristics) -> Option<CardId> {
    let has = |c: CardId| options.contains(&c) && c.cost() <= max_cost;
    let left = provinces_left(state);
    if h.victory.province_always && has(Province) {
        return Some(Province);
    }
    if left <= h.victory.duchy_threshold && has(Duchy) {
        return Some(Duchy);
    }
    if left <= h.victory.estate_threshold && has(Estate) {
        return Some(Estate);
    }
    if let Some(menu) = h.menu {
        if let Some(e) = menu.entries.iter().find(|e| e.count > 0 && has(e.card)) {
            return Some(e.card);
        }
    }
    for c in [Gold, Silver] {
        if has(c) {
            return Some(c);
        }
    }
    options
        .iter()
        .copied()
        .filter(|c| c.is_action())
        .max_by_key(|c| (c.cost(), std::cmp::Reverse(c.index())))
        .or_else(|| options.iter().copied().find(|&c| c == Copper))
        .or_else(|| options.iter().copied().find(|&c| c != Curse))
        .or_else(|| options.first().copied())
}

/// The fixed heuristic table. Pure in (request, state, heuristics).
pub fn default_decision(req: &DecisionRequest, state: &GameState, h: &Heuristics) -> Choice {
    let me = &state.players[req.player];
    let offered = cards_of(&req.options);
    let choice = match req.kind {
        DecisionKind::ChooseAction => {
            let others = |c: CardId| me.hand.to_vec().iter().filter(|&&x| x.is_action()).count() > 1 || c != ThroneRoom;
            offered
                .iter()
                .copied()
                .filter(|&c| c != ThroneRoom || others(c))
                .min_by_key(|&c| action_rank(c))
                .or_else(|| offered.first().copied())
                .map_or(Choice::Pass, Choice::Card)
        }
        DecisionKind::ChooseBuy => {
            let mut menu = h.menu.cloned().unwrap_or_else(|| BuyMenu::new(&[(Gold, 99), (Silver, 99)]));
            buy_menu_choose(&mut menu, state.coins, &state.supply, &h.victory, provinces_left(state))
                .map_or(Choice::Pass, Choice::Card)
        }
        DecisionKind::DiscardToHandSize => {
            let k = (me.hand.total() - req.param) as usize;
            Choice::Cards(discard_order(&me.hand).into_iter().take(k).collect())
        }
        DecisionKind::DiscardAnyNumber => Choice::Cards(me.hand.to_vec().into_iter().filter(|c| c.is_green()).collect()),
        DecisionKind::TrashUpToN => match req.source {
            Some(Moneylender) => Choice::Cards(vec![Copper]),
            Some(Chapel) => Choice::Cards(chapel_trash(state, req.player)),
            _ => {
                let mut hand = me.hand.to_vec();
                hand.sort_by_key(|&c| match c {
                    Curse => (0, 0, 0),
                    Estate => (1, 0, 0),
                    Copper => (2, 0, 0),
                    other => (3, other.cost(), other.index()),
                });
                Choice::Cards(hand.into_iter().take(req.param as usize).collect())
            }
        },
        DecisionKind::GainUpToCost => {
            preferred_gain(&offered, req.param, state, h).map_or(Choice::Pass, Choice::Card)
        }
        DecisionKind::TopdeckFromDiscard => offered
            .iter()
            .copied()
            .filter(|c| (c.is_action() || c.is_treasure()) && c.cost() >= 4)
            .max_by_key(|c| (c.cost(), std::cmp::Reverse(c.index())))
            .map_or(Choice::Pass, Choice::Card),
        DecisionKind::RevealReaction => Choice::Card(Moat),
        DecisionKind::ChooseThroneTarget => offered
            .iter()
            .copied()
            .max_by_key(|&c| (c != ThroneRoom, c.cost(), std::cmp::Reverse(c.index())))
            .map_or(Choice::Pass, Choice::Card),
        DecisionKind::VassalPlayOrDiscard => offered.first().copied().map_or(Choice::Pass, Choice::Card),
        DecisionKind::SentryDisposition => {
            let looked = &me.aside;
            let mut trash = Vec::new();
            let mut topdeck = Vec::new();
            for &c in looked {
                if matches!(c, Curse | Estate | Copper) {
                    trash.push(c);
                } else {
                    topdeck.push(c);
                }
            }
            Choice::Sentry { trash, discard: Vec::new(), topdeck }
        }
        DecisionKind::LibraryKeepOrSetAside => {
            if state.actions == 0 {
                offered.first().copied().map_or(Choice::Pass, Choice::Card)
            } else {
                Choice::Pass
            }
        }
        DecisionKind::MineTrashAndGain => {
            let want = [Choice::Pair(Silver, Gold), Choice::Pair(Copper, Silver)];
            want.into_iter().find(|c| req.options.allows(c)).unwrap_or(Choice::Pass)
        }
        DecisionKind::ArtisanGainAndTopdeck => artisan_choice(req, state, h),
        DecisionKind::BureaucratTopdeckVictory => offered
            .iter()
            .copied()
            .min_by_key(|c| (c.cost(), c.index()))
            .map_or(Choice::Pass, Choice::Card),
        DecisionKind::BanditVictimTrash => {
            if offered.contains(&Silver) {
                Choice::Card(Silver)
            } else {
                offered.first().copied().map_or(Choice::Pass, Choice::Card)
            }
        }
    };
    if req.options.allows(&choice) {
        choice
    } else {
        // The table should always produce a legal answer; fall back to the
        // first enumerated option rather than handing the engine garbage.
        debug_assert!(false, "heuristic produced illegal {choice:?} for {req:?}");
        req.options.enumerate().swap_remove(0)
    }
}

/// Curses, then Estates while more than 4 Provinces remain, then Coppers
/// while at least 3 other treasures would be left. At most 4 cards.
fn chapel_trash(state: &GameState, player: usize) -> Vec<CardId> {
    let me = &state.players[player];
    let hand = me.hand;
    let owned = me.owned();
    let mut treasures: u32 = owned.iter().filter(|(c, _)| c.is_treasure()).map(|(_, n)| n).sum();
    let mut out = Vec::new();
    out.extend(std::iter::repeat_n(Curse, hand.get(Curse) as usize));
    if provinces_left(state) > 4 {
        out.extend(std::iter::repeat_n(Estate, hand.get(Estate) as usize));
    }
    for _ in 0..hand.get(Copper) {
        if treasures <= 3 {
            break;
        }
        out.push(Copper);
        treasures -= 1;
    }
    out.truncate(4);
    out
}

fn artisan_choice(req: &DecisionRequest, state: &GameState, h: &Heuristics) -> Choice {
    let me = &state.players[req.player];
    let Options::Explicit(opts) = &req.options else {
        return Choice::Pass;
    };
    let gains: Vec<CardId> = opts
        .iter()
        .filter_map(|c| if let Choice::Pair(g, _) = c { Some(*g) } else { None })
        .collect();
    let victory_in_hand = me
        .hand
        .distinct()
        .filter(|c| c.is(CardType::VICTORY))
        .min_by_key(|c| c.cost());
    if gains.is_empty() {
        let top = victory_in_hand.or_else(|| discard_order(&me.hand).first().copied());
        return top.map_or(Choice::Pass, Choice::Card);
    }
    let menu_pick = h.menu.and_then(|m| {
        m.entries
            .iter()
            .filter(|e| e.count > 0 && gains.contains(&e.card))
            .map(|e| e.card)
            .max_by_key(|c| c.cost())
    });
    let gain = menu_pick
        .or_else(|| preferred_gain(&gains, 5, state, h))
        .unwrap_or(gains[0]);
    Choice::Pair(gain, victory_in_hand.unwrap_or(gain))
}

/// A buy-menu bot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MenuBot {
    pub name: String,
    pub menu: BuyMenu,
    pub victory: VictoryRule,
}

impl MenuBot {
    pub fn new(name: impl Into<String>, menu: BuyMenu, victory: VictoryRule) -> Self {
        Self { name: name.into(), menu, victory }
    }
}

pub struct MenuAgent<'a> {
    bot: &'a MenuBot,
    live: BuyMenu,
}

impl Agent for MenuAgent<'_> {
    fn decide(&mut self, request: &DecisionRequest, state: &GameState) -> Choice {
        if request.kind == DecisionKind::ChooseBuy {
            let left = provinces_left(state);
            return buy_menu_choose(&mut self.live, state.coins, &state.supply, &self.bot.victory, left)
                .map_or(Choice::Pass, Choice::Card);
        }
        let h = Heuristics { menu: Some(&self.live), victory: self.bot.victory };
        default_decision(request, state, &h)
    }
}

impl Policy for MenuBot {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn describe(&self) -> String {
        self.menu.to_string()
    }

    fn agent(&self, _seat: usize) -> Box<dyn Agent + '_> {
        Box::new(MenuAgent { bot: self, live: self.menu.clone() })
    }
}

pub const PRESET_NAMES: [&str; 6] = [
    "big-money",
    "double-witch",
    "big-smithy",
    "big-militia",
    "village-smithy-engine",
    "provincial-preset",
];

pub fn preset_menu(name: &str) -> Result<BuyMenu, Error> {
    let entries: &[(CardId, u32)] = match name {
        "big-money" => &[(Gold, 99), (Silver, 99)],
        "double-witch" => &[(Witch, 1), (Gold, 99), (Witch, 1), (Silver, 99)],
        "big-smithy" => &[(Gold, 99), (Smithy, 1), (Silver, 99)],
        "big-militia" => &[(Gold, 99), (Militia, 1), (Silver, 99)],
        "village-smithy-engine" => &[(Gold, 99), (Smithy, 5), (Militia, 1), (Village, 5), (Silver, 99)],
        "provincial-preset" => &[(Witch, 1), (Gold, 99), (Militia, 1), (Witch, 1), (Market, 3), (Silver, 99)],
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(BuyMenu::new(entries))
}

pub fn preset(name: &str) -> Result<MenuBot, Error> {
    Ok(MenuBot::new(name, preset_menu(name)?, VictoryRule::default()))
}

/// Uniformly random legal answers. For fuzzing.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomBot;

pub struct RandomAgent {
    rng: Option<GameRng>,
    seat: usize,
}

impl Agent for RandomAgent {
    fn decide(&mut self, request: &DecisionRequest, state: &GameState) -> Choice {
        // Keyed on turn order rather than seat so swapped seatings replay identically.
        let order = u64::from(self.seat != state.first_player);
        let rng = self
            .rng
            .get_or_insert_with(|| GameRng::new(crate::rng::derive_seed(state.seed, 1000 + order)));
        request.options.sample(rng)
    }
}

impl Policy for RandomBot {
    fn name(&self) -> String {
        "random".to_string()
    }

    fn agent(&self, seat: usize) -> Box<dyn Agent + '_> {
        Box::new(RandomAgent { rng: None, seat })
    }
}
