//! The 2nd-edition base set: 7 basic cards and 26 kingdom cards.
//!
//! Costs, types and effects follow the printed card text. Effects are
//! ordered atom sequences; the engine interprets them left to right.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rng::GameRng;
use crate::Error;

pub const NUM_CARDS: usize = 33;
pub const NUM_KINGDOM: usize = 26;
pub const KINGDOM_SIZE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum CardId {
    Copper,
    Silver,
    Gold,
    Estate,
    Duchy,
    Province,
    Curse,
    Cellar,
    Chapel,
    Moat,
    Harbinger,
    Merchant,
    Vassal,
    Village,
    Workshop,
    Bureaucrat,
    Gardens,
    Militia,
    Moneylender,
    Poacher,
    Remodel,
    Smithy,
    ThroneRoom,
    Bandit,
    CouncilRoom,
    Festival,
    Laboratory,
    Library,
    Market,
    Mine,
    Sentry,
    Witch,
    Artisan,
}

use CardId::*;

impl CardId {
    pub const ALL: [CardId; NUM_CARDS] = [
        Copper,
        Silver,
        Gold,
        Estate,
        Duchy,
        Province,
        Curse,
        Cellar,
        Chapel,
        Moat,
        Harbinger,
        Merchant,
        Vassal,
        Village,
        Workshop,
        Bureaucrat,
        Gardens,
        Militia,
        Moneylender,
        Poacher,
        Remodel,
        Smithy,
        ThroneRoom,
        Bandit,
        CouncilRoom,
        Festival,
        Laboratory,
        Library,
        Market,
        Mine,
        Sentry,
        Witch,
        Artisan,
    ];

    pub const BASIC: [CardId; 7] = [Copper, Silver, Gold, Estate, Duchy, Province, Curse];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<CardId> {
        Self::ALL.get(i).copied()
    }

    pub fn kingdom() -> &'static [CardId] {
        &Self::ALL[7..]
    }

    pub fn is_kingdom(self) -> bool {
        self.index() >= 7
    }

    pub fn name(self) -> &'static str {
        spec(self).name
    }

    pub fn spec(self) -> &'static CardSpec {
        spec(self)
    }

    pub fn cost(self) -> u32 {
        spec(self).cost
    }

    pub fn is(self, ty: CardType) -> bool {
        spec(self).types.contains(ty)
    }

    pub fn is_action(self) -> bool {
        self.is(CardType::ACTION)
    }

    pub fn is_treasure(self) -> bool {
        self.is(CardType::TREASURE)
    }

    /// Victory or Curse: cards that only clog a hand.
    pub fn is_green(self) -> bool {
        self.is(CardType::VICTORY) || self.is(CardType::CURSE)
    }

    /// Coins produced when played as a treasure.
    pub fn treasure_value(self) -> u32 {
        match self {
            Copper => 1,
            Silver => 2,
            Gold => 3,
            _ => 0,
        }
    }
}

impl fmt::Display for CardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CardId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let want = s.trim();
        CardId::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(want))
            .or_else(|| {
                // Accept "ThroneRoom"/"throne-room" style spellings too.
                let squash = |n: &str| {
                    n.chars()
                        .filter(|ch| ch.is_ascii_alphanumeric())
                        .collect::<String>()
                        .to_ascii_lowercase()
                };
                let key = squash(want);
                CardId::ALL.iter().copied().find(|c| squash(c.name()) == key)
            })
            .ok_or_else(|| Error::UnknownCard(want.to_string()))
    }
}

impl Serialize for CardId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for CardId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CardType(u8);

impl CardType {
    pub const ACTION: CardType = CardType(1);
    pub const TREASURE: CardType = CardType(1 << 1);
    pub const VICTORY: CardType = CardType(1 << 2);
    pub const CURSE: CardType = CardType(1 << 3);
    pub const ATTACK: CardType = CardType(1 << 4);
    pub const REACTION: CardType = CardType(1 << 5);

    pub const fn union(self, other: CardType) -> CardType {
        CardType(self.0 | other.0)
    }

    pub fn contains(self, other: CardType) -> bool {
        self.0 & other.0 == other.0
    }
}

/// Where a gained card lands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainTo {
    Discard,
    Deck,
    Hand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attack {
    /// Witch: the victim gains a Curse.
    GainCurse,
    /// Militia: the victim discards down to 3 cards.
    DiscardDownTo(u8),
    /// Bureaucrat: the victim topdecks a Victory card from hand.
    TopdeckVictory,
    /// Bandit: the victim reveals 2, trashes a non-Copper treasure, discards the rest.
    TrashRevealedTreasure,
}

/// Card text that needs a choice from the acting player.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Cellar,
    Chapel,
    Harbinger,
    Vassal,
    Workshop,
    Moneylender,
    Poacher,
    Remodel,
    ThroneRoom,
    Library,
    Mine,
    Sentry,
    Artisan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    PlusCards(u8),
    PlusActions(u8),
    PlusBuys(u8),
    PlusCoins(u8),
    Attack(Attack),
    Decision(Decision),
    Gain(CardId, GainTo),
    /// Every other player draws this many cards.
    OthersDraw(u8),
    /// Merchant: +1 coin the first time a Silver is played this turn.
    SilverBonus,
    /// Gardens: inert in play; scored by [`vp_value`].
    VpPerTenCards,
}

#[derive(Debug)]
pub struct CardSpec {
    pub id: CardId,
    pub name: &'static str,
    pub cost: u32,
    pub types: CardType,
    pub effect: &'static [Effect],
}

const A: CardType = CardType::ACTION;
const T: CardType = CardType::TREASURE;
const V: CardType = CardType::VICTORY;
const ATK: CardType = CardType::ACTION.union(CardType::ATTACK);

use Effect::*;

static CATALOG: [CardSpec; NUM_CARDS] = [
    CardSpec { id: Copper, name: "Copper", cost: 0, types: T, effect: &[PlusCoins(1)] },
    CardSpec { id: Silver, name: "Silver", cost: 3, types: T, effect: &[PlusCoins(2)] },
    CardSpec { id: Gold, name: "Gold", cost: 6, types: T, effect: &[PlusCoins(3)] },
    CardSpec { id: Estate, name: "Estate", cost: 2, types: V, effect: &[] },
    CardSpec { id: Duchy, name: "Duchy", cost: 5, types: V, effect: &[] },
    CardSpec { id: Province, name: "Province", cost: 8, types: V, effect: &[] },
    CardSpec { id: Curse, name: "Curse", cost: 0, types: CardType::CURSE, effect: &[] },
    CardSpec {
        id: Cellar,
        name: "Cellar",
        cost: 2,
        types: A,
        effect: &[PlusActions(1), Decision(self::Decision::Cellar)],
    },
    CardSpec { id: Chapel, name: "Chapel", cost: 2, types: A, effect: &[Decision(self::Decision::Chapel)] },
    CardSpec {
        id: Moat,
        name: "Moat",
        cost: 2,
        types: A.union(CardType::REACTION),
        effect: &[PlusCards(2)],
    },
    CardSpec {
        id: Harbinger,
        name: "Harbinger",
        cost: 3,
        types: A,
        effect: &[PlusCards(1), PlusActions(1), Decision(self::Decision::Harbinger)],
    },
    CardSpec {
        id: Merchant,
        name: "Merchant",
        cost: 3,
        types: A,
        effect: &[PlusCards(1), PlusActions(1), SilverBonus],
    },
    CardSpec {
        id: Vassal,
        name: "Vassal",
        cost: 3,
        types: A,
        effect: &[PlusCoins(2), Decision(self::Decision::Vassal)],
    },
    CardSpec { id: Village, name: "Village", cost: 3, types: A, effect: &[PlusCards(1), PlusActions(2)] },
    CardSpec { id: Workshop, name: "Workshop", cost: 3, types: A, effect: &[Decision(self::Decision::Workshop)] },
    CardSpec {
        id: Bureaucrat,
        name: "Bureaucrat",
        cost: 4,
        types: ATK,
        effect: &[Gain(Silver, GainTo::Deck), Attack(self::Attack::TopdeckVictory)],
    },
    CardSpec { id: Gardens, name: "Gardens", cost: 4, types: V, effect: &[VpPerTenCards] },
    CardSpec {
        id: Militia,
        name: "Militia",
        cost: 4,
        types: ATK,
        effect: &[PlusCoins(2), Attack(self::Attack::DiscardDownTo(3))],
    },
    CardSpec {
        id: Moneylender,
        name: "Moneylender",
        cost: 4,
        types: A,
        effect: &[Decision(self::Decision::Moneylender)],
    },
    CardSpec {
        id: Poacher,
        name: "Poacher",
        cost: 4,
        types: A,
        effect: &[PlusCards(1), PlusActions(1), PlusCoins(1), Decision(self::Decision::Poacher)],
    },
    CardSpec { id: Remodel, name: "Remodel", cost: 4, types: A, effect: &[Decision(self::Decision::Remodel)] },
    CardSpec { id: Smithy, name: "Smithy", cost: 4, types: A, effect: &[PlusCards(3)] },
    CardSpec {
        id: ThroneRoom,
        name: "Throne Room",
        cost: 4,
        types: A,
        effect: &[Decision(self::Decision::ThroneRoom)],
    },
    CardSpec {
        id: Bandit,
        name: "Bandit",
        cost: 5,
        types: ATK,
        effect: &[Gain(Gold, GainTo::Discard), Attack(self::Attack::TrashRevealedTreasure)],
    },
    CardSpec {
        id: CouncilRoom,
        name: "Council Room",
        cost: 5,
        types: A,
        effect: &[PlusCards(4), PlusBuys(1), OthersDraw(1)],
    },
    CardSpec {
        id: Festival,
        name: "Festival",
        cost: 5,
        types: A,
        effect: &[PlusActions(2), PlusBuys(1), PlusCoins(2)],
    },
    CardSpec {
        id: Laboratory,
        name: "Laboratory",
        cost: 5,
        types: A,
        effect: &[PlusCards(2), PlusActions(1)],
    },
    CardSpec { id: Library, name: "Library", cost: 5, types: A, effect: &[Decision(self::Decision::Library)] },
    CardSpec {
        id: Market,
        name: "Market",
        cost: 5,
        types: A,
        effect: &[PlusCards(1), PlusActions(1), PlusBuys(1), PlusCoins(1)],
    },
    CardSpec { id: Mine, name: "Mine", cost: 5, types: A, effect: &[Decision(self::Decision::Mine)] },
    CardSpec {
        id: Sentry,
        name: "Sentry",
        cost: 5,
        types: A,
        effect: &[PlusCards(1), PlusActions(1), Decision(self::Decision::Sentry)],
    },
    CardSpec {
        id: Witch,
        name: "Witch",
        cost: 5,
        types: ATK,
        effect: &[PlusCards(2), Attack(self::Attack::GainCurse)],
    },
    CardSpec { id: Artisan, name: "Artisan", cost: 6, types: A, effect: &[Decision(self::Decision::Artisan)] },
];

fn spec(id: CardId) -> &'static CardSpec {
    &CATALOG[id.index()]
}

/// All 33 card specs, indexed by [`CardId::index`].
pub fn catalog() -> &'static [CardSpec] {
    &CATALOG
}

pub fn lookup(id: CardId) -> &'static CardSpec {
    spec(id)
}

/// Victory points contributed by one copy of `card` in a deck of `deck_size` cards.
pub fn vp_value(card: CardId, deck_size: u32) -> i32 {
    match card {
        Estate => 1,
        Duchy => 3,
        Province => 6,
        Curse => -1,
        Gardens => (deck_size / 10) as i32,
        _ => 0,
    }
}

/// A multiset of cards stored as one count per [`CardId`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CardCounts([u8; NUM_CARDS]);

impl Default for CardCounts {
    fn default() -> Self {
        Self([0; NUM_CARDS])
    }
}

impl CardCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_cards<I: IntoIterator<Item = CardId>>(cards: I) -> Self {
        let mut c = Self::new();
        for card in cards {
            c.add(card, 1);
        }
        c
    }

    pub fn get(&self, card: CardId) -> u32 {
        self.0[card.index()] as u32
    }

    pub fn set(&mut self, card: CardId, n: u32) {
        self.0[card.index()] = n as u8;
    }

    pub fn add(&mut self, card: CardId, n: u32) {
        self.0[card.index()] += n as u8;
    }

    /// Removes `n` copies; returns false (and changes nothing) if fewer are present.
    pub fn remove(&mut self, card: CardId, n: u32) -> bool {
        let slot = &mut self.0[card.index()];
        if (*slot as u32) < n {
            return false;
        }
        *slot -= n as u8;
        true
    }

    pub fn contains(&self, card: CardId) -> bool {
        self.0[card.index()] > 0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&n| n as u32).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&n| n == 0)
    }

    pub fn clear(&mut self) {
        self.0 = [0; NUM_CARDS];
    }

    /// (card, count) pairs with count > 0, in card order.
    pub fn iter(&self) -> impl Iterator<Item = (CardId, u32)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, &n)| (CardId::ALL[i], n as u32))
    }

    /// Distinct cards present, in card order.
    pub fn distinct(&self) -> impl Iterator<Item = CardId> + '_ {
        self.iter().map(|(c, _)| c)
    }

    /// Expands to one entry per copy, in card order.
    pub fn to_vec(&self) -> Vec<CardId> {
        let mut v = Vec::with_capacity(self.total() as usize);
        for (c, n) in self.iter() {
            v.extend(std::iter::repeat_n(c, n as usize));
        }
        v
    }

    pub fn is_subset_of(&self, other: &CardCounts) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    pub fn merge(&mut self, other: &CardCounts) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += *b;
        }
    }

    pub fn raw(&self) -> &[u8; NUM_CARDS] {
        &self.0
    }
}

/// The ten kingdom piles of one game, kept in card order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Kingdom([CardId; KINGDOM_SIZE]);

impl Kingdom {
    pub fn new(cards: &[CardId]) -> Result<Self, Error> {
        if cards.len() != KINGDOM_SIZE {
            return Err(Error::InvalidKingdom(format!(
                "expected {KINGDOM_SIZE} kingdom cards, got {}",
                cards.len()
            )));
        }
        let mut sorted = [Copper; KINGDOM_SIZE];
        sorted.copy_from_slice(cards);
        sorted.sort_unstable();
        if let Some(c) = sorted.iter().find(|c| !c.is_kingdom()) {
            return Err(Error::InvalidKingdom(format!("{c} is not a kingdom card")));
        }
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidKingdom(format!("{} appears twice", w[0])));
        }
        Ok(Self(sorted))
    }

    /// Parses a comma-separated list of card names.
    pub fn parse(list: &str) -> Result<Self, Error> {
        let cards = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<CardId>, _>>()?;
        Self::new(&cards)
    }

    pub fn cards(&self) -> &[CardId; KINGDOM_SIZE] {
        &self.0
    }

    pub fn contains(&self, card: CardId) -> bool {
        !card.is_kingdom() || self.0.contains(&card)
    }
}

impl fmt::Display for Kingdom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(|c| c.name()).collect();
        f.write_str(&names.join(","))
    }
}

impl Serialize for Kingdom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Kingdom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<CardId>::deserialize(d)?;
        Kingdom::new(&v).map_err(serde::de::Error::custom)
    }
}

/// Uniformly samples 10 distinct kingdom cards (partial Fisher-Yates).
pub fn sample_kingdom(seed: u64) -> Kingdom {
    let mut rng = GameRng::new(seed);
    let mut pool: Vec<CardId> = CardId::kingdom().to_vec();
    for i in 0..KINGDOM_SIZE {
        let j = i + rng.index(pool.len() - i);
        pool.swap(i, j);
    }
    Kingdom::new(&pool[..KINGDOM_SIZE]).expect("sampled kingdom is valid")
}

pub const STARTING_COPPERS: u32 = 7;
pub const STARTING_ESTATES: u32 = 3;

/// Remaining pile sizes. Cards not in this game have no pile at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupplyState {
    counts: CardCounts,
    present: [bool; NUM_CARDS],
}

impl SupplyState {
    pub fn count(&self, card: CardId) -> u32 {
        self.counts.get(card)
    }

    pub fn in_game(&self, card: CardId) -> bool {
        self.present[card.index()]
    }

    /// Piles in this game, in card order.
    pub fn piles(&self) -> impl Iterator<Item = CardId> + '_ {
        CardId::ALL.iter().copied().filter(|c| self.in_game(*c))
    }

    pub fn empty_piles(&self) -> usize {
        self.piles().filter(|c| self.count(*c) == 0).count()
    }

    pub fn counts(&self) -> &CardCounts {
        &self.counts
    }

    /// Takes one card from its pile; false if the pile is empty or absent.
    pub fn take(&mut self, card: CardId) -> bool {
        self.in_game(card) && self.counts.remove(card, 1)
    }

    /// Pile sizes as printed in a log header: dealt starting cards included.
    pub fn header_totals(&self, players: u32) -> Vec<(u32, CardId)> {
        self.piles()
            .map(|c| {
                let dealt = match c {
                    Copper => STARTING_COPPERS * players,
                    Estate => STARTING_ESTATES * players,
                    _ => 0,
                };
                (self.count(c) + dealt, c)
            })
            .collect()
    }
}

/// Supply for a 2-player game over `kingdom`.
pub fn initial_supply(kingdom: &Kingdom, players: u32) -> Result<SupplyState, Error> {
    if players != 2 {
        return Err(Error::InvalidKingdom(format!(
            "only 2-player games are supported, got {players}"
        )));
    }
    let mut counts = CardCounts::new();
    let mut present = [false; NUM_CARDS];
    let mut put = |card: CardId, n: u32| {
        counts.set(card, n);
        present[card.index()] = true;
    };
    put(Curse, 10);
    put(Estate, 8);
    put(Duchy, 8);
    put(Province, 8);
    put(Copper, 60 - STARTING_COPPERS * players);
    put(Silver, 40);
    put(Gold, 30);
    for &card in kingdom.cards() {
        put(card, if card.is(CardType::VICTORY) { 8 } else { 10 });
    }
    Ok(SupplyState { counts, present })
}
