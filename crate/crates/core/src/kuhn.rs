//! Three-card Kuhn poker, used to calibrate the solvers.

use crate::error::{Error, Result};
use crate::game::{ActionId, Game, GameState, InfosetKey, Player};

const CARD_NAMES: [char; 3] = ['J', 'Q', 'K'];

/// All ordered (player one, player two) deals.
const DEALS: [(u8, u8); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Kuhn;

/// `history` holds the betting sequence: `p` = pass/check/fold, `b` = bet/call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KuhnState {
    cards: Option<(u8, u8)>,
    history: String,
}

impl KuhnState {
    fn card(&self, player: Player) -> u8 {
        let (a, b) = self.cards.expect("cards are dealt");
        match player {
            Player::One => a,
            _ => b,
        }
    }
}

impl GameState for KuhnState {
    fn is_terminal(&self) -> bool {
        matches!(self.history.as_str(), "pp" | "bp" | "bb" | "pbp" | "pbb")
    }

    fn current_player(&self) -> Player {
        if self.cards.is_none() {
            Player::Chance
        } else if self.history.len().is_multiple_of(2) {
            Player::One
        } else {
            Player::Two
        }
    }

    fn num_actions(&self) -> usize {
        if self.is_terminal() {
            0
        } else if self.cards.is_none() {
            DEALS.len()
        } else {
            2
        }
    }

    fn action_label(&self, action: ActionId) -> String {
        if self.cards.is_none() {
            DEALS
                .get(action.0)
                .map(|&(a, b)| format!("{}{}", CARD_NAMES[a as usize], CARD_NAMES[b as usize]))
                .unwrap_or_else(|| "?".into())
        } else {
            match action.0 {
                0 => "p".into(),
                1 => "b".into(),
                _ => "?".into(),
            }
        }
    }

    fn apply(&self, action: ActionId) -> Result<Self> {
        if action.0 >= self.num_actions() {
            return Err(Error::usage(format!("illegal action {} in kuhn state", action.0)));
        }
        let mut next = self.clone();
        if self.cards.is_none() {
            next.cards = Some(DEALS[action.0]);
        } else {
            next.history.push(if action.0 == 0 { 'p' } else { 'b' });
        }
        Ok(next)
    }

    fn chance_probabilities(&self) -> Vec<f64> {
        vec![1.0 / DEALS.len() as f64; DEALS.len()]
    }

    fn utility(&self, player: Player) -> f64 {
        let showdown = if self.card(Player::One) > self.card(Player::Two) {
            1.0
        } else {
            -1.0
        };
        let u1 = match self.history.as_str() {
            "pp" => showdown,
            "bp" => 1.0,
            "pbp" => -1.0,
            "bb" | "pbb" => 2.0 * showdown,
            _ => 0.0,
        };
        u1 * player.sign()
    }

    fn infoset_key(&self, player: Player) -> Result<InfosetKey> {
        if self.is_terminal() || self.current_player() != player {
            return Err(Error::usage(format!(
                "infoset_key requested for player {player} who is not to act"
            )));
        }
        let card = CARD_NAMES[self.card(player) as usize];
        Ok(InfosetKey::new(format!(
            "kuhn/p{}/{card}/{}",
            player.id(),
            if self.history.is_empty() { "-" } else { &self.history }
        )))
    }
}

impl Game for Kuhn {
    type State = KuhnState;

    fn initial_state(&self) -> KuhnState {
        KuhnState {
            cards: None,
            history: String::new(),
        }
    }
}
