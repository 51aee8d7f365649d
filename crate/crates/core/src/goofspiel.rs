//! Sequential-move Goofspiel and its Center/Deck/Opponent/Point features.
//!
//! Each round chance draws a point card from the pile, player one commits a
//! card face down, then player two commits without seeing it. The higher
//! card wins the point card's value; ties score nothing. All resolved rounds
//! are public, so an infoset key lists every completed round plus the
//! current center card.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ActionSignature, FeatureId, FeatureModel, FeatureVector};
use crate::game::{ActionId, Game, GameState, InfosetKey, Player};

/// Largest supported hand size. Keys and features store cards as bitmasks.
pub const MAX_CARDS: u8 = 16;

/// A set of cards `1..=k` stored as a bitmask (bit `c - 1` for card `c`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CardSet(pub u32);

impl CardSet {
    pub fn full(k: u8) -> Self {
        CardSet((1u32 << k) - 1)
    }

    pub fn from_cards(cards: impl IntoIterator<Item = u8>) -> Self {
        CardSet(cards.into_iter().fold(0, |acc, c| acc | (1 << (c - 1))))
    }

    pub fn contains(self, card: u8) -> bool {
        card >= 1 && self.0 & (1 << (card - 1)) != 0
    }

    pub fn insert(&mut self, card: u8) {
        self.0 |= 1 << (card - 1);
    }

    pub fn remove(&mut self, card: u8) {
        self.0 &= !(1 << (card - 1));
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Cards in ascending order.
    pub fn cards(self) -> impl Iterator<Item = u8> {
        (1..=32u8).filter(move |&c| self.contains(c))
    }

    /// The `n`-th smallest card.
    pub fn nth(self, n: usize) -> Option<u8> {
        self.cards().nth(n)
    }

    pub fn to_vec(self) -> Vec<u8> {
        self.cards().collect()
    }
}

impl fmt::Display for CardSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cards: Vec<String> = self.cards().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", cards.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UtilityMode {
    /// Point differential: u1 = points1 - points2.
    #[default]
    Differential,
    /// +1 win, 0 draw, -1 loss.
    WinLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoofspielConfig {
    pub k: u8,
    pub target_player: Player,
    pub utility_mode: UtilityMode,
}

impl GoofspielConfig {
    pub fn new(k: u8) -> Result<Self> {
        let config = GoofspielConfig {
            k,
            target_player: Player::One,
            utility_mode: UtilityMode::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_target(mut self, player: Player) -> Result<Self> {
        self.target_player = player;
        self.validate()?;
        Ok(self)
    }

    pub fn with_utility_mode(mut self, mode: UtilityMode) -> Self {
        self.utility_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::config(format!(
                "goofspiel needs k >= 2 (got {}); smaller games have no decisions",
                self.k
            )));
        }
        if self.k > MAX_CARDS {
            return Err(Error::config(format!("goofspiel k must be <= {MAX_CARDS}")));
        }
        if self.target_player == Player::Chance {
            return Err(Error::config("target player must be 1 or 2"));
        }
        Ok(())
    }

    /// Largest possible absolute point difference, k(k+1)/2.
    pub fn max_points(&self) -> i32 {
        let k = self.k as i32;
        k * (k + 1) / 2
    }
}

/// One resolved round: the point card and the card each player spent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RoundRecord {
    pub center: u8,
    pub cards: [u8; 2],
}

impl RoundRecord {
    /// Points this round gives to `player` minus points it gives the opponent.
    fn swing(&self, player: Player) -> i32 {
        let (own, opp) = match player {
            Player::One => (self.cards[0], self.cards[1]),
            _ => (self.cards[1], self.cards[0]),
        };
        match own.cmp(&opp) {
            std::cmp::Ordering::Greater => self.center as i32,
            std::cmp::Ordering::Less => -(self.center as i32),
            std::cmp::Ordering::Equal => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoofspielState {
    config: GoofspielConfig,
    deck: CardSet,
    hands: [CardSet; 2],
    center: Option<u8>,
    pending: Option<u8>,
    points: [i32; 2],
    history: Vec<RoundRecord>,
}

impl GoofspielState {
    pub fn new(config: GoofspielConfig) -> Self {
        let all = CardSet::full(config.k);
        GoofspielState {
            config,
            deck: all,
            hands: [all, all],
            center: None,
            pending: None,
            points: [0, 0],
            history: Vec::with_capacity(config.k as usize),
        }
    }

    pub fn round(&self) -> usize {
        self.history.len()
    }

    pub fn deck(&self) -> CardSet {
        self.deck
    }

    pub fn hand(&self, player: Player) -> CardSet {
        self.hands[player.index()]
    }

    pub fn center(&self) -> Option<u8> {
        self.center
    }

    pub fn points(&self, player: Player) -> i32 {
        self.points[player.index()]
    }

    pub fn history(&self) -> &[RoundRecord] {
        &self.history
    }

    fn legal_set(&self) -> CardSet {
        if self.is_terminal() {
            CardSet::default()
        } else if self.center.is_none() {
            self.deck
        } else if self.pending.is_none() {
            self.hands[0]
        } else {
            self.hands[1]
        }
    }

    fn card_for(&self, action: ActionId) -> Result<u8> {
        self.legal_set()
            .nth(action.0)
            .ok_or_else(|| Error::usage(format!("illegal action {} in goofspiel state", action.0)))
    }
}

impl GameState for GoofspielState {
    fn is_terminal(&self) -> bool {
        self.history.len() == self.config.k as usize
    }

    fn current_player(&self) -> Player {
        if self.center.is_none() {
            Player::Chance
        } else if self.pending.is_none() {
            Player::One
        } else {
            Player::Two
        }
    }

    fn num_actions(&self) -> usize {
        self.legal_set().len()
    }

    fn action_label(&self, action: ActionId) -> String {
        self.legal_set()
            .nth(action.0)
            .map(|c| c.to_string())
            .unwrap_or_else(|| "?".to_string())
    }

    fn apply(&self, action: ActionId) -> Result<Self> {
        if self.is_terminal() {
            return Err(Error::usage("apply called on a terminal goofspiel state"));
        }
        let card = self.card_for(action)?;
        let mut next = self.clone();
        match (self.center, self.pending) {
            (None, _) => {
                next.deck.remove(card);
                next.center = Some(card);
            }
            (Some(_), None) => next.pending = Some(card),
            (Some(center), Some(first)) => {
                let record = RoundRecord {
                    center,
                    cards: [first, card],
                };
                match first.cmp(&card) {
                    std::cmp::Ordering::Greater => next.points[0] += center as i32,
                    std::cmp::Ordering::Less => next.points[1] += center as i32,
                    std::cmp::Ordering::Equal => {}
                }
                next.hands[0].remove(first);
                next.hands[1].remove(card);
                next.center = None;
                next.pending = None;
                next.history.push(record);
            }
        }
        Ok(next)
    }

    fn chance_probabilities(&self) -> Vec<f64> {
        let n = self.deck.len();
        vec![1.0 / n as f64; n]
    }

    fn utility(&self, player: Player) -> f64 {
        let diff = self.points[0] - self.points[1];
        let u1 = match self.config.utility_mode {
            UtilityMode::Differential => diff as f64,
            UtilityMode::WinLoss => diff.signum() as f64,
        };
        u1 * player.sign()
    }

    fn infoset_key(&self, player: Player) -> Result<InfosetKey> {
        if self.is_terminal() || self.current_player() != player {
            return Err(Error::usage(format!(
                "infoset_key requested for player {player} who is not to act"
            )));
        }
        let center = self.center.expect("decision states have a center card");
        Ok(encode_key(self.config.k, player, &self.history, center))
    }
}

impl Game for GoofspielConfig {
    type State = GoofspielState;

    fn initial_state(&self) -> GoofspielState {
        GoofspielState::new(*self)
    }
}

/// Key layout: `gs{k}/p{player}/{c:a-b,...|-}/c{center}` where each round
/// lists its point card and the cards of player one and two.
fn encode_key(k: u8, player: Player, history: &[RoundRecord], center: u8) -> InfosetKey {
    let rounds = if history.is_empty() {
        "-".to_string()
    } else {
        history
            .iter()
            .map(|r| format!("{}:{}-{}", r.center, r.cards[0], r.cards[1]))
            .collect::<Vec<_>>()
            .join(",")
    };
    InfosetKey::new(format!("gs{k}/p{}/{rounds}/c{center}", player.id()))
}

/// Decoded contents of a Goofspiel infoset key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoofspielObservation {
    pub k: u8,
    pub player: Player,
    pub history: Vec<RoundRecord>,
    pub center: u8,
}

impl GoofspielObservation {
    pub fn parse(key: &InfosetKey) -> Result<Self> {
        let bad = || Error::Format(format!("not a goofspiel infoset key: {key}"));
        let mut parts = key.as_str().split('/');
        let k: u8 = parts
            .next()
            .and_then(|p| p.strip_prefix("gs"))
            .and_then(|p| p.parse().ok())
            .ok_or_else(bad)?;
        let player = parts
            .next()
            .and_then(|p| p.strip_prefix('p'))
            .and_then(|p| p.parse::<u8>().ok())
            .and_then(|id| Player::from_id(id).ok())
            .filter(|p| *p != Player::Chance)
            .ok_or_else(bad)?;
        let rounds = parts.next().ok_or_else(bad)?;
        let center: u8 = parts
            .next()
            .and_then(|p| p.strip_prefix('c'))
            .and_then(|p| p.parse().ok())
            .ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        let mut history = Vec::new();
        if rounds != "-" {
            for round in rounds.split(',') {
                let (c, cards) = round.split_once(':').ok_or_else(bad)?;
                let (a, b) = cards.split_once('-').ok_or_else(bad)?;
                let parse = |s: &str| s.parse::<u8>().ok().filter(|&c| c >= 1 && c <= k);
                history.push(RoundRecord {
                    center: parse(c).ok_or_else(bad)?,
                    cards: [parse(a).ok_or_else(bad)?, parse(b).ok_or_else(bad)?],
                });
            }
        }
        if center < 1 || center > k || history.len() >= k as usize {
            return Err(bad());
        }
        fn distinct(cards: impl Iterator<Item = u8>) -> bool {
            let mut seen = CardSet::default();
            for c in cards {
                if seen.contains(c) {
                    return false;
                }
                seen.insert(c);
            }
            true
        }
        let centers = history.iter().map(|r| r.center).chain(std::iter::once(center));
        if !distinct(centers)
            || !distinct(history.iter().map(|r| r.cards[0]))
            || !distinct(history.iter().map(|r| r.cards[1]))
        {
            return Err(bad());
        }
        Ok(GoofspielObservation {
            k,
            player,
            history,
            center,
        })
    }

    fn spent(&self, player: Player) -> CardSet {
        let i = player.index();
        CardSet::from_cards(self.history.iter().map(|r| r.cards[i]))
    }

    pub fn own_hand(&self) -> CardSet {
        CardSet(CardSet::full(self.k).0 & !self.spent(self.player).0)
    }

    pub fn opponent_hand(&self) -> CardSet {
        CardSet(CardSet::full(self.k).0 & !self.spent(self.player.opponent()).0)
    }

    pub fn deck(&self) -> CardSet {
        let mut deck = CardSet::full(self.k);
        for r in &self.history {
            deck.remove(r.center);
        }
        deck.remove(self.center);
        deck
    }

    pub fn point_difference(&self) -> i32 {
        self.history.iter().map(|r| r.swing(self.player)).sum()
    }

    pub fn features(&self) -> GoofspielFeatures {
        GoofspielFeatures {
            center: self.center,
            deck: self.deck(),
            opponent: self.opponent_hand(),
            points: self.point_difference(),
        }
    }
}

/// Feature ids of the Goofspiel family.
pub mod feature {
    use crate::features::FeatureId;

    pub const CENTER: FeatureId = FeatureId(0);
    pub const DECK: FeatureId = FeatureId(1);
    pub const OPPONENT: FeatureId = FeatureId(2);
    pub const POINTS: FeatureId = FeatureId(3);

    pub const NAMES: [&str; 4] = ["C", "D", "O", "P"];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GoofspielFeatures {
    pub center: u8,
    pub deck: CardSet,
    pub opponent: CardSet,
    pub points: i32,
}

impl GoofspielFeatures {
    pub fn to_vector(self) -> FeatureVector {
        FeatureVector(vec![
            self.center as i64,
            self.deck.0 as i64,
            self.opponent.0 as i64,
            self.points as i64,
        ])
    }

    pub fn to_json(self) -> serde_json::Value {
        serde_json::json!({
            "C": self.center,
            "D": self.deck.to_vec(),
            "O": self.opponent.to_vec(),
            "P": self.points,
        })
    }
}

impl GoofspielConfig {
    fn observe(&self, key: &InfosetKey) -> Result<GoofspielObservation> {
        let obs = GoofspielObservation::parse(key)?;
        if obs.k != self.k {
            return Err(Error::usage(format!("key {key} belongs to a different k")));
        }
        if obs.player != self.target_player {
            return Err(Error::usage(format!(
                "infoset {key} belongs to player {}, not the target player {}",
                obs.player, self.target_player
            )));
        }
        Ok(obs)
    }

    pub fn goofspiel_features(&self, key: &InfosetKey) -> Result<GoofspielFeatures> {
        Ok(self.observe(key)?.features())
    }

    /// The target player's remaining hand, which is also the action set.
    pub fn action_set_signature(&self, key: &InfosetKey) -> Result<CardSet> {
        Ok(self.observe(key)?.own_hand())
    }
}

impl FeatureModel for GoofspielConfig {
    fn feature_names(&self) -> &[&'static str] {
        &feature::NAMES
    }

    fn target_player(&self) -> Player {
        self.target_player
    }

    fn features(&self, key: &InfosetKey) -> Result<FeatureVector> {
        Ok(self.goofspiel_features(key)?.to_vector())
    }

    fn action_signature(&self, key: &InfosetKey) -> Result<ActionSignature> {
        Ok(ActionSignature(self.action_set_signature(key)?.0 as u64))
    }

    fn feature_value_json(&self, feature: FeatureId, value: i64) -> serde_json::Value {
        match feature {
            feature::DECK | feature::OPPONENT => {
                serde_json::Value::from(CardSet(value as u32).to_vec())
            }
            _ => serde_json::Value::from(value),
        }
    }
}
