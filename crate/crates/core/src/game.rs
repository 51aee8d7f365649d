//! The extensive-form game contract shared by every concrete game.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A participant in the game. `Chance` is nature; `One` and `Two` are the
/// two strategic players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    Chance,
    One,
    Two,
}

impl Player {
    pub const STRATEGIC: [Player; 2] = [Player::One, Player::Two];

    /// Numeric id: 0 = chance, 1 and 2 for the players.
    pub fn id(self) -> u8 {
        match self {
            Player::Chance => 0,
            Player::One => 1,
            Player::Two => 2,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(Player::Chance),
            1 => Ok(Player::One),
            2 => Ok(Player::Two),
            other => Err(Error::usage(format!("unknown player id {other}"))),
        }
    }

    /// Index into two-element per-player arrays. Panics for chance.
    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
            Player::Chance => panic!("chance has no strategy slot"),
        }
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
            Player::Chance => panic!("chance has no opponent"),
        }
    }

    /// Sign that converts a player-one payoff into this player's payoff.
    pub(crate) fn sign(self) -> f64 {
        match self {
            Player::One => 1.0,
            Player::Two => -1.0,
            Player::Chance => panic!("chance has no payoff"),
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

impl Serialize for Player {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.id())
    }
}

impl<'de> Deserialize<'de> for Player {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let id = u8::deserialize(d)?;
        Player::from_id(id).map_err(serde::de::Error::custom)
    }
}

/// Index into a state's ordered legal-action list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

/// Canonical encoding of everything a player observes at a decision point.
///
/// Keys are plain strings with a fixed field order so they survive
/// serialization and compare equal across processes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InfosetKey(String);

impl InfosetKey {
    pub fn new(key: impl Into<String>) -> Self {
        InfosetKey(key.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for InfosetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A node of the game tree. States are immutable values; `apply` returns
/// a fresh successor and leaves the receiver untouched.
pub trait GameState: Clone + Send + Sync {
    fn is_terminal(&self) -> bool;

    /// Player to act. Meaningless at terminal states.
    fn current_player(&self) -> Player;

    fn num_actions(&self) -> usize;

    fn action_label(&self, action: ActionId) -> String;

    fn apply(&self, action: ActionId) -> Result<Self>;

    /// Probabilities over the legal actions of a chance node.
    fn chance_probabilities(&self) -> Vec<f64>;

    /// Payoff of `player` at a terminal state.
    fn utility(&self, player: Player) -> f64;

    fn infoset_key(&self, player: Player) -> Result<InfosetKey>;

    fn is_chance(&self) -> bool {
        !self.is_terminal() && self.current_player() == Player::Chance
    }

    fn action_labels(&self) -> Vec<String> {
        (0..self.num_actions())
            .map(|a| self.action_label(ActionId(a)))
            .collect()
    }
}

pub trait Game: Send + Sync {
    type State: GameState;

    fn initial_state(&self) -> Self::State;
}
