//! Dominion Online style game logs.
//!
//! ```text
//! alice~bob
//! Supply: 10 Curse, 60 Copper, 40 Silver, 30 Gold, 14 Estate, 8 Duchy, 8 Province, 10 Bandit, ...
//! # P1.mu=0.65
//! 0:P0 - GAME_META_INFO (12345):
//! 1:P1 - STARTS_WITH: 7 Copper
//! 148:P1 - NEW_TURN (10, 0):
//! 166:P1 - PLAY_TREASURES_FOR (4): 1 Copper, 1 Gold
//! 168:P1 - SHUFFLES
//! ```
//!
//! Lines starting with `#` carry optional `key=value` metadata (player
//! ratings, shuffle algorithm). The parser tolerates a stray `"` before the
//! event kind, as seen in real server logs, and reports every error with
//! its 1-based line number.

use std::fmt::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cards::{CardCounts, CardId, Kingdom};
use crate::engine::{score_holdings, GameRecord, Winner};
use crate::rng::RNG_ALGORITHM;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    GameMetaInfo,
    StartsWith,
    NewTurn,
    Play,
    Draw,
    GetsAction,
    GetsCoin,
    GetsBuy,
    LookAt,
    Topdeck,
    Discard,
    Trash,
    Gain,
    Reveal,
    PlayTreasuresFor,
    BuyAndGain,
    Shuffles,
}

impl EventKind {
    pub const ALL: [EventKind; 17] = [
        EventKind::GameMetaInfo,
        EventKind::StartsWith,
        EventKind::NewTurn,
        EventKind::Play,
        EventKind::Draw,
        EventKind::GetsAction,
        EventKind::GetsCoin,
        EventKind::GetsBuy,
        EventKind::LookAt,
        EventKind::Topdeck,
        EventKind::Discard,
        EventKind::Trash,
        EventKind::Gain,
        EventKind::Reveal,
        EventKind::PlayTreasuresFor,
        EventKind::BuyAndGain,
        EventKind::Shuffles,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            EventKind::GameMetaInfo => "GAME_META_INFO",
            EventKind::StartsWith => "STARTS_WITH",
            EventKind::NewTurn => "NEW_TURN",
            EventKind::Play => "PLAY",
            EventKind::Draw => "DRAW",
            EventKind::GetsAction => "GETS_ACTION",
            EventKind::GetsCoin => "GETS_COIN",
            EventKind::GetsBuy => "GETS_BUY",
            EventKind::LookAt => "LOOK_AT",
            EventKind::Topdeck => "TOPDECK",
            EventKind::Discard => "DISCARD",
            EventKind::Trash => "TRASH",
            EventKind::Gain => "GAIN",
            EventKind::Reveal => "REVEAL",
            EventKind::PlayTreasuresFor => "PLAY_TREASURES_FOR",
            EventKind::BuyAndGain => "BUY_AND_GAIN",
            EventKind::Shuffles => "SHUFFLES",
        }
    }

    pub fn from_tag(tag: &str) -> Option<EventKind> {
        Self::ALL.iter().copied().find(|k| k.tag() == tag)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One log line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub line_index: u32,
    /// 0 for game-level lines, 1 and 2 for the seats.
    pub player: u8,
    pub kind: EventKind,
    pub args: Vec<u64>,
    pub cards: Vec<(u32, CardId)>,
    /// The kind tag carried a stray leading `"` (seen on some GAIN lines).
    #[serde(default)]
    pub quoted: bool,
}

impl Event {
    /// Seat index (0/1) for player lines.
    pub fn seat(&self) -> Option<usize> {
        match self.player {
            1 | 2 => Some(self.player as usize - 1),
            _ => None,
        }
    }

    pub fn card_count(&self) -> u32 {
        self.cards.iter().map(|(n, _)| n).sum()
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let quote = if self.quoted { "\"" } else { "" };
        write!(f, "{}:P{} - {quote}{}", self.line_index, self.player, self.kind)?;
        if !self.args.is_empty() {
            let args: Vec<String> = self.args.iter().map(u64::to_string).collect();
            write!(f, " ({})", args.join(", "))?;
        }
        if self.kind != EventKind::Shuffles {
            f.write_char(':')?;
        }
        for (i, (n, card)) in self.cards.iter().enumerate() {
            let sep = if i == 0 { " " } else { ", " };
            write!(f, "{sep}{n} {card}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogDocument {
    pub players: [String; 2],
    pub supply: Vec<(u32, CardId)>,
    pub meta: Vec<(String, String)>,
    pub events: Vec<Event>,
}

impl LogDocument {
    /// The argument of the GAME_META_INFO line.
    pub fn game_id(&self) -> Option<u64> {
        self.events
            .iter()
            .find(|e| e.kind == EventKind::GameMetaInfo)
            .and_then(|e| e.args.first().copied())
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// (mu, phi) for seat 0/1 when the metadata carries it.
    pub fn rating(&self, seat: usize) -> Option<(f64, f64)> {
        let mu = self.meta(&format!("P{}.mu", seat + 1))?.parse().ok()?;
        let phi = self.meta(&format!("P{}.phi", seat + 1))?.parse().ok()?;
        Some((mu, phi))
    }
}

/// Header order: the basic piles as the server prints them, then kingdom piles by name.
fn header_order(card: CardId) -> (usize, &'static str) {
    use CardId::*;
    let basic = [Curse, Copper, Silver, Gold, Estate, Duchy, Province];
    match basic.iter().position(|&c| c == card) {
        Some(i) => (i, ""),
        None => (basic.len(), card.name()),
    }
}

pub fn supply_header(kingdom: &Kingdom) -> Vec<(u32, CardId)> {
    let supply = crate::cards::initial_supply(kingdom, 2).expect("valid kingdom");
    let mut header = supply.header_totals(2);
    header.sort_by_key(|(_, c)| header_order(*c));
    header
}

pub fn record_to_document(record: &GameRecord) -> LogDocument {
    let mut meta = vec![
        ("rng".to_string(), RNG_ALGORITHM.to_string()),
        ("seed".to_string(), record.seed.to_string()),
    ];
    if let Some(ratings) = record.ratings {
        for (seat, (mu, phi)) in ratings.iter().enumerate() {
            meta.push((format!("P{}.mu", seat + 1), mu.to_string()));
            meta.push((format!("P{}.phi", seat + 1), phi.to_string()));
        }
    }
    LogDocument {
        players: record.players.clone(),
        supply: supply_header(&record.kingdom),
        meta,
        events: record.events.clone(),
    }
}

pub fn write_log(record: &GameRecord) -> String {
    write_document(&record_to_document(record))
}

pub fn write_document(doc: &LogDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}~{}", doc.players[0], doc.players[1]);
    let piles: Vec<String> = doc.supply.iter().map(|(n, c)| format!("{n} {c}")).collect();
    let _ = writeln!(out, "Supply: {}", piles.join(", "));
    for (k, v) in &doc.meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    for e in &doc.events {
        let _ = writeln!(out, "{e}");
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_card_list(text: &str, line: usize) -> Result<Vec<(u32, CardId)>, Error> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|item| {
            let item = item.trim();
            let (count, name) = item
                .split_once(' ')
                .ok_or_else(|| parse_err(line, format!("malformed card entry {item:?}")))?;
            let count: u32 = count
                .parse()
                .map_err(|_| parse_err(line, format!("bad card count in {item:?}")))?;
            if count == 0 {
                return Err(parse_err(line, format!("zero card count in {item:?}")));
            }
            let card = name
                .parse()
                .map_err(|_| parse_err(line, format!("unknown card {name:?}")))?;
            Ok((count, card))
        })
        .collect()
}

pub fn parse_event(text: &str, line: usize) -> Result<Event, Error> {
    let (idx, rest) = text
        .split_once(':')
        .ok_or_else(|| parse_err(line, "missing ':' after line index"))?;
    let line_index: u32 = idx
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad line index {idx:?}")))?;
    let rest = rest
        .strip_prefix('P')
        .ok_or_else(|| parse_err(line, "expected player tag"))?;
    let (player, rest) = rest
        .split_once(" - ")
        .ok_or_else(|| parse_err(line, "expected ' - ' after player tag"))?;
    let player: u8 = match player {
        "0" => 0,
        "1" => 1,
        "2" => 2,
        other => return Err(parse_err(line, format!("bad player tag P{other}"))),
    };
    let (quoted, rest) = match rest.strip_prefix('"') {
        Some(r) => (true, r),
        None => (false, rest),
    };
    let tag_len = rest
        .find(|c: char| !(c.is_ascii_uppercase() || c == '_'))
        .unwrap_or(rest.len());
    let (tag, mut rest) = rest.split_at(tag_len);
    let kind = EventKind::from_tag(tag).ok_or_else(|| parse_err(line, format!("unknown event kind {tag:?}")))?;

    let mut args = Vec::new();
    if let Some(inner) = rest.strip_prefix(" (") {
        let close = inner
            .find(')')
            .ok_or_else(|| parse_err(line, "unterminated argument list"))?;
        for a in inner[..close].split(',') {
            let a = a.trim();
            args.push(
                a.parse()
                    .map_err(|_| parse_err(line, format!("bad numeric argument {a:?}")))?,
            );
        }
        rest = &inner[close + 1..];
    }
    let cards = match rest.strip_prefix(':') {
        Some(list) => parse_card_list(list, line)?,
        None if rest.trim().is_empty() => Vec::new(),
        None => return Err(parse_err(line, format!("unexpected text {rest:?}"))),
    };
    Ok(Event { line_index, player, kind, args, cards, quoted })
}

pub fn parse_log(text: &str) -> Result<LogDocument, Error> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.is_empty());

    let (n, first) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let (a, b) = first
        .split_once('~')
        .ok_or_else(|| parse_err(n, "bad header: expected '<player1>~<player2>'"))?;
    let players = [a.to_string(), b.to_string()];

    let (n, second) = lines.next().ok_or_else(|| parse_err(n + 1, "missing header: no supply line"))?;
    let list = second
        .strip_prefix("Supply:")
        .ok_or_else(|| parse_err(n, "bad header: expected 'Supply:' line"))?;
    let supply = parse_card_list(list, n)?;
    let mut seen = CardCounts::new();
    for &(_, c) in &supply {
        if seen.contains(c) {
            return Err(parse_err(n, format!("bad header: {c} listed twice")));
        }
        seen.add(c, 1);
    }

    let mut meta = Vec::new();
    let mut events = Vec::new();
    for (n, l) in lines {
        if let Some(m) = l.strip_prefix('#') {
            let (k, v) = m
                .trim()
                .split_once('=')
                .ok_or_else(|| parse_err(n, "metadata line must be '# key=value'"))?;
            meta.push((k.trim().to_string(), v.trim().to_string()));
            continue;
        }
        events.push(parse_event(l, n)?);
    }
    Ok(LogDocument { players, supply, meta, events })
}

pub fn read_log_file(path: &Path) -> Result<LogDocument, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_log(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Corpus-level averages in the layout of the dataset statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub games: usize,
    pub avg_game_length_turns: f64,
    pub avg_vp_per_player: f64,
    pub avg_margin_vp: f64,
    pub avg_gain_decisions_per_player: f64,
    pub avg_card_plays_per_player: f64,
    pub avg_mu: Option<f64>,
    pub avg_phi: Option<f64>,
    pub tie_rate: f64,
}

impl CorpusStats {
    /// (label, formatted value) rows in table order.
    pub fn rows(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"));
        vec![
            ("Avg game length", format!("{:.2}", self.avg_game_length_turns)),
            ("Avg VP totals/player", format!("{:.2}", self.avg_vp_per_player)),
            ("Avg margin of victory [VPs]", format!("{:.2}", self.avg_margin_vp)),
            ("Avg gain decisions/player", format!("{:.2}", self.avg_gain_decisions_per_player)),
            ("Avg card plays/player", format!("{:.2}", self.avg_card_plays_per_player)),
            ("Avg mu (skill)", opt(self.avg_mu)),
            ("Avg phi (deviation)", opt(self.avg_phi)),
            ("Ties", format!("{:.2}%", 100.0 * self.tie_rate)),
        ]
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<30} {:>10}", "Statistic", "Value")?;
        for (label, value) in self.rows() {
            writeln!(f, "{label:<30} {value:>10}")?;
        }
        write!(f, "{:<30} {:>10}", "Games", self.games)
    }
}

/// Per-game facts recovered from a log alone.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSummary {
    pub length: u32,
    pub turns: [u32; 2],
    pub vp: [i32; 2],
    pub winner: Winner,
    pub gains: [u32; 2],
    pub plays: [u32; 2],
}

/// Replays ownership (starting cards, gains, trashes) and scores it.
pub fn summarize(doc: &LogDocument) -> LogSummary {
    let mut owned = [CardCounts::new(), CardCounts::new()];
    let mut turns = [0u32; 2];
    let mut gains = [0u32; 2];
    let mut plays = [0u32; 2];
    let mut length = 0;
    for e in &doc.events {
        let Some(seat) = e.seat() else { continue };
        match e.kind {
            EventKind::StartsWith => {
                for &(n, c) in &e.cards {
                    owned[seat].add(c, n);
                }
            }
            EventKind::Gain | EventKind::BuyAndGain => {
                gains[seat] += e.card_count();
                for &(n, c) in &e.cards {
                    owned[seat].add(c, n);
                }
            }
            EventKind::Trash => {
                for &(n, c) in &e.cards {
                    owned[seat].remove(c, n);
                }
            }
            EventKind::Play => plays[seat] += e.card_count(),
            EventKind::NewTurn => {
                turns[seat] += 1;
                length = length.max(e.args.first().copied().unwrap_or(0) as u32);
            }
            _ => {}
        }
    }
    let score = score_holdings([&owned[0], &owned[1]], turns);
    LogSummary { length, turns, vp: score.vp, winner: score.winner, gains, plays }
}

pub fn corpus_stats(docs: &[LogDocument]) -> Result<CorpusStats, Error> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = docs.len() as f64;
    let mut length = 0.0;
    let mut vp = 0.0;
    let mut margin = 0.0;
    let mut gains = 0.0;
    let mut plays = 0.0;
    let mut ties = 0usize;
    let (mut mu_sum, mut phi_sum, mut rated) = (0.0, 0.0, 0usize);
    for doc in docs {
        let s = summarize(doc);
        length += s.length as f64;
        vp += (s.vp[0] + s.vp[1]) as f64 / 2.0;
        margin += (s.vp[0] - s.vp[1]).abs() as f64;
        gains += (s.gains[0] + s.gains[1]) as f64 / 2.0;
        plays += (s.plays[0] + s.plays[1]) as f64 / 2.0;
        if s.winner == Winner::Tie {
            ties += 1;
        }
        for seat in 0..2 {
            if let Some((mu, phi)) = doc.rating(seat) {
                mu_sum += mu;
                phi_sum += phi;
                rated += 1;
            }
        }
    }
    let (avg_mu, avg_phi) = if rated > 0 {
        (Some(mu_sum / rated as f64), Some(phi_sum / rated as f64))
    } else {
        (None, None)
    };
    Ok(CorpusStats {
        games: docs.len(),
        avg_game_length_turns: length / n,
        avg_vp_per_player: vp / n,
        avg_margin_vp: margin / n,
        avg_gain_decisions_per_player: gains / n,
        avg_card_plays_per_player: plays / n,
        avg_mu,
        avg_phi,
        tie_rate: ties as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use CardId::*;

    #[test]
    fn quirk_line_parses() {
        let e = parse_event("163:P1 - \"GAIN: 1 Gold", 7).unwrap();
        assert_eq!(
            e,
            Event { line_index: 163, player: 1, kind: EventKind::Gain, args: vec![], cards: vec![(1, Gold)], quoted: true }
        );
        assert_eq!(e.to_string(), "163:P1 - \"GAIN: 1 Gold");
    }

    #[test]
    fn args_and_lists() {
        let e = parse_event("148:P1 - NEW_TURN (10, 0):", 1).unwrap();
        assert_eq!(e.args, vec![10, 0]);
        assert!(e.cards.is_empty());
        let e = parse_event("166:P1 - PLAY_TREASURES_FOR (4): 1 Copper, 1 Gold", 1).unwrap();
        assert_eq!(e.args, vec![4]);
        assert_eq!(e.cards, vec![(1, Copper), (1, Gold)]);
        assert_eq!(e.to_string(), "166:P1 - PLAY_TREASURES_FOR (4): 1 Copper, 1 Gold");
        let e = parse_event("167:P1 - BUY_AND_GAIN: 1 Throne Room", 1).unwrap();
        assert_eq!(e.cards, vec![(1, ThroneRoom)]);
        let e = parse_event("168:P1 - SHUFFLES", 1).unwrap();
        assert_eq!(e.to_string(), "168:P1 - SHUFFLES");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "a~b\nSupply: 10 Curse\n0:P0 - GAME_META_INFO (1):\n1:P1 - EXPLODES: 1 Copper\n";
        match parse_log(bad) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("unknown event kind"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        match parse_log("a~b\nSupply: 10 Curse\n2:P1 - DRAW: x Copper\n") {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_log("a~b\nSupply: 10 Curse, 3 Estate, 2 Curse\n") {
            Err(Error::Parse { line: 2, message }) => assert!(message.contains("bad header")),
            other => panic!("{other:?}"),
        }
        match parse_log("justplayers\n") {
            Err(Error::Parse { line: 1, message }) => assert!(message.contains("bad header")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_input_is_missing_header() {
        match parse_log("") {
            Err(Error::Parse { message, .. }) => assert!(message.contains("missing header")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_game_length() {
        let mut text = String::from("a~b\nSupply: 8 Province\n0:P0 - GAME_META_INFO (5):\n");
        let mut idx = 1;
        for t in 1..=20 {
            for p in 1..=2 {
                text.push_str(&format!("{idx}:P{p} - NEW_TURN ({t}, 0):\n"));
                idx += 1;
            }
        }
        let doc = parse_log(&text).unwrap();
        let stats = corpus_stats(&[doc]).unwrap();
        assert_eq!(stats.avg_game_length_turns, 20.0);
        assert_eq!(stats.rows().len(), 8);
        assert!(corpus_stats(&[]).is_err());
    }
}
