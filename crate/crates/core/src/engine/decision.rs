use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cards::{CardCounts, CardId};
use crate::rng::GameRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecisionKind {
    ChooseAction,
    ChooseBuy,
    DiscardToHandSize,
    DiscardAnyNumber,
    TrashUpToN,
    GainUpToCost,
    TopdeckFromDiscard,
    RevealReaction,
    ChooseThroneTarget,
    VassalPlayOrDiscard,
    SentryDisposition,
    LibraryKeepOrSetAside,
    MineTrashAndGain,
    ArtisanGainAndTopdeck,
    BureaucratTopdeckVictory,
    BanditVictimTrash,
}

/// A policy's answer to a [`DecisionRequest`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    /// Decline, end the phase, or keep (Library).
    Pass,
    Card(CardId),
    /// A sub-multiset of the offered pool; order is irrelevant.
    Cards(Vec<CardId>),
    /// Mine: (trash, gain). Artisan: (gain, topdeck).
    Pair(CardId, CardId),
    /// `topdeck[0]` ends up on top of the deck.
    Sentry {
        trash: Vec<CardId>,
        discard: Vec<CardId>,
        topdeck: Vec<CardId>,
    },
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[CardId]| v.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ");
        match self {
            Choice::Pass => f.write_str("pass"),
            Choice::Card(c) => write!(f, "{c}"),
            Choice::Cards(v) => write!(f, "[{}]", list(v)),
            Choice::Pair(a, b) => write!(f, "({a}, {b})"),
            Choice::Sentry { trash, discard, topdeck } => write!(
                f,
                "trash [{}] discard [{}] topdeck [{}]",
                list(trash),
                list(discard),
                list(topdeck)
            ),
        }
    }
}

/// The legal answers to a request.
///
/// Subset-style requests (discard/trash any number) are described by their
/// pool and size bounds instead of listing every sub-multiset; `enumerate`
/// expands them when an explicit list is wanted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Options {
    Explicit(Vec<Choice>),
    Subset { pool: CardCounts, min: u32, max: u32 },
}

impl Options {
    pub fn allows(&self, choice: &Choice) -> bool {
        match self {
            Options::Explicit(v) => v.contains(choice),
            Options::Subset { pool, min, max } => match choice {
                Choice::Cards(cards) => {
                    let n = cards.len() as u32;
                    n >= *min && n <= *max && CardCounts::from_cards(cards.iter().copied()).is_subset_of(pool)
                }
                _ => false,
            },
        }
    }

    /// Number of distinct legal answers.
    pub fn count(&self) -> usize {
        match self {
            Options::Explicit(v) => v.len(),
            Options::Subset { .. } => self.enumerate().len(),
        }
    }

    /// True when there is exactly one legal answer, which is then returned.
    pub fn forced(&self) -> Option<Choice> {
        match self {
            Options::Explicit(v) if v.len() == 1 => Some(v[0].clone()),
            Options::Explicit(_) => None,
            Options::Subset { pool, min, max } => {
                let total = pool.total();
                if *min == 0 && *max == 0 || total == 0 {
                    Some(Choice::Cards(Vec::new()))
                } else if min == max && (*min == total || pool.distinct().count() == 1) {
                    let card = pool.distinct().next().expect("nonempty pool");
                    if *min == total {
                        Some(Choice::Cards(pool.to_vec()))
                    } else {
                        Some(Choice::Cards(vec![card; *min as usize]))
                    }
                } else {
                    None
                }
            }
        }
    }

    pub fn enumerate(&self) -> Vec<Choice> {
        match self {
            Options::Explicit(v) => v.clone(),
            Options::Subset { pool, min, max } => {
                let groups: Vec<(CardId, u32)> = pool.iter().collect();
                let mut out = Vec::new();
                let mut current = Vec::new();
                enumerate_subsets(&groups, 0, *min, *max, &mut current, &mut out);
                out
            }
        }
    }

    /// Uniformly random legal answer for explicit lists; for subsets, a
    /// random size in bounds and then a random sub-multiset of that size.
    pub fn sample(&self, rng: &mut GameRng) -> Choice {
        match self {
            Options::Explicit(v) => v[rng.index(v.len())].clone(),
            Options::Subset { pool, min, max } => {
                let mut cards = pool.to_vec();
                let hi = (*max).min(cards.len() as u32);
                let n = *min + rng.below((hi - *min + 1) as u64) as u32;
                rng.shuffle(&mut cards);
                cards.truncate(n as usize);
                cards.sort_unstable();
                Choice::Cards(cards)
            }
        }
    }
}

fn enumerate_subsets(
    groups: &[(CardId, u32)],
    at: usize,
    min: u32,
    max: u32,
    current: &mut Vec<CardId>,
    out: &mut Vec<Choice>,
) {
    let len = current.len() as u32;
    if at == groups.len() {
        if len >= min && len <= max {
            out.push(Choice::Cards(current.clone()));
        }
        return;
    }
    let (card, n) = groups[at];
    for k in 0..=n {
        if len + k > max {
            break;
        }
        current.extend(std::iter::repeat_n(card, k as usize));
        enumerate_subsets(groups, at + 1, min, max, current, out);
        current.truncate(len as usize);
    }
}

/// A pending choice for one player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionRequest {
    pub kind: DecisionKind,
    pub player: usize,
    /// Card whose text caused the request, if any.
    pub source: Option<CardId>,
    /// Kind-specific number: target hand size, maximum cost, or trash limit.
    pub param: u32,
    pub options: Options,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cards::CardId::*;

    fn hand() -> CardCounts {
        CardCounts::from_cards([Copper, Copper, Copper, Estate, Silver])
    }

    #[test]
    fn subset_enumeration_counts_multisets() {
        let opts = Options::Subset { pool: hand(), min: 0, max: 5 };
        // (3+1) * (1+1) * (1+1) sub-multisets
        assert_eq!(opts.count(), 16);
        let exact = Options::Subset { pool: hand(), min: 2, max: 2 };
        for c in exact.enumerate() {
            assert!(exact.allows(&c));
        }
        // {CC, CE, CS, ES}
        assert_eq!(exact.count(), 4);
    }

    #[test]
    fn subset_legality() {
        let opts = Options::Subset { pool: hand(), min: 1, max: 2 };
        assert!(opts.allows(&Choice::Cards(vec![Copper, Copper])));
        assert!(!opts.allows(&Choice::Cards(vec![Gold])));
        assert!(!opts.allows(&Choice::Cards(vec![])));
        assert!(!opts.allows(&Choice::Cards(vec![Copper, Copper, Copper])));
        assert!(!opts.allows(&Choice::Pass));
    }

    #[test]
    fn forced_answers() {
        let all_copper = CardCounts::from_cards([Copper; 5]);
        assert_eq!(
            Options::Subset { pool: all_copper, min: 2, max: 2 }.forced(),
            Some(Choice::Cards(vec![Copper, Copper]))
        );
        assert_eq!(Options::Subset { pool: hand(), min: 2, max: 2 }.forced(), None);
        assert_eq!(
            Options::Subset { pool: hand(), min: 5, max: 5 }.forced(),
            Some(Choice::Cards(hand().to_vec()))
        );
        assert_eq!(Options::Explicit(vec![Choice::Pass]).forced(), Some(Choice::Pass));
    }

    #[test]
    fn sampled_choices_are_legal() {
        let mut rng = GameRng::new(5);
        let opts = Options::Subset { pool: hand(), min: 1, max: 4 };
        for _ in 0..200 {
            assert!(opts.allows(&opts.sample(&mut rng)));
        }
    }
}
