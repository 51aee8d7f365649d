//! Selection of a concrete game and the per-game services built on it.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::abstraction::{SlotMap, TargetFeatures};
use crate::error::{Error, Result};
use crate::eval::{self, NashValue};
use crate::features::{FeatureModel, FeatureSubset};
use crate::game::{Game, GameState, Player};
use crate::goofspiel::{GoofspielConfig, UtilityMode};
use crate::kuhn::Kuhn;
use crate::profile::StrategyProfile;
use crate::solver::{self, Algorithm, ConvergenceLog, SolverConfig};
use crate::tree::GameTree;

/// Iterations of the vanilla CFR run that pins down Kuhn's game value.
const KUHN_VALUE_ITERATIONS: u64 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameConfig {
    Goofspiel(GoofspielConfig),
    Kuhn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameName {
    Goofspiel,
    Kuhn,
}

/// Serializable game selection. `k`, `utility_mode` and `target_player`
/// apply to Goofspiel; Kuhn only accepts target player 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameDescriptor {
    pub name: GameName,
    pub k: u8,
    pub utility_mode: UtilityMode,
    pub target_player: u8,
}

impl Default for GameDescriptor {
    fn default() -> Self {
        GameDescriptor {
            name: GameName::Goofspiel,
            k: 4,
            utility_mode: UtilityMode::default(),
            target_player: 1,
        }
    }
}

impl GameDescriptor {
    pub fn to_config(&self) -> Result<GameConfig> {
        let target = match self.target_player {
            1 => Player::One,
            2 => Player::Two,
            p => return Err(Error::config(format!("target_player must be 1 or 2, got {p}"))),
        };
        match self.name {
            GameName::Goofspiel => Ok(GameConfig::Goofspiel(
                GoofspielConfig::new(self.k)?
                    .with_target(target)?
                    .with_utility_mode(self.utility_mode),
            )),
            GameName::Kuhn if target == Player::One => Ok(GameConfig::Kuhn),
            GameName::Kuhn => Err(Error::config("kuhn has no target player other than 1")),
        }
    }
}

impl GameConfig {
    pub fn descriptor(&self) -> GameDescriptor {
        match self {
            GameConfig::Goofspiel(g) => GameDescriptor {
                name: GameName::Goofspiel,
                k: g.k,
                utility_mode: g.utility_mode,
                target_player: g.target_player.id(),
            },
            GameConfig::Kuhn => GameDescriptor {
                name: GameName::Kuhn,
                k: 0,
                utility_mode: UtilityMode::default(),
                target_player: 1,
            },
        }
    }

    pub fn goofspiel(k: u8) -> Result<Self> {
        Ok(GameConfig::Goofspiel(GoofspielConfig::new(k)?))
    }

    pub fn kuhn() -> Self {
        GameConfig::Kuhn
    }

    pub fn describe(&self) -> String {
        match self {
            GameConfig::Goofspiel(g) => format!("goofspiel(k={}, {:?})", g.k, g.utility_mode),
            GameConfig::Kuhn => "kuhn".to_string(),
        }
    }

    pub fn build_tree(&self) -> Result<GameTree> {
        match self {
            GameConfig::Goofspiel(g) => GameTree::build(g),
            GameConfig::Kuhn => GameTree::build(&Kuhn),
        }
    }

    /// Feature family of the explained player, if the game defines one.
    pub fn feature_model(&self) -> Option<&dyn FeatureModel> {
        match self {
            GameConfig::Goofspiel(g) => Some(g),
            GameConfig::Kuhn => None,
        }
    }

    pub fn require_features(&self) -> Result<&dyn FeatureModel> {
        self.feature_model().ok_or_else(|| {
            Error::config(format!("{} has no feature model to explain", self.describe()))
        })
    }

    pub fn target_player(&self) -> Player {
        match self {
            GameConfig::Goofspiel(g) => g.target_player,
            GameConfig::Kuhn => Player::One,
        }
    }

    /// Game value for player one. Goofspiel is symmetric, so its value is 0.
    /// Kuhn's value is bracketed once by a long vanilla CFR solve.
    pub fn nash_value(&self) -> NashValue {
        match self {
            GameConfig::Goofspiel(_) => NashValue::exact(0.0),
            GameConfig::Kuhn => {
                static KUHN: OnceLock<NashValue> = OnceLock::new();
                *KUHN.get_or_init(|| {
                    let tree = GameTree::build(&Kuhn).expect("kuhn tree");
                    let slots = SlotMap::identity(&tree);
                    let config = SolverConfig::new(Algorithm::VanillaCfr, KUHN_VALUE_ITERATIONS, 0);
                    let out = solver::solve_on_tree(&tree, &slots, &config, NashValue::exact(0.0))
                        .expect("kuhn solve");
                    NashValue::from_approximate_equilibrium(&tree, &out.policy)
                })
            }
        }
    }

    pub fn initial_state_description(&self) -> String {
        match self {
            GameConfig::Goofspiel(g) => {
                let root = g.initial_state();
                format!("{} draws", root.num_actions())
            }
            GameConfig::Kuhn => format!("{} deals", Kuhn.initial_state().num_actions()),
        }
    }
}

/// Slot layout for a solve: raw infosets, or the target player abstracted
/// to the visible features in `subset`.
pub fn slot_map(
    game: &GameConfig,
    tree: &GameTree,
    subset: Option<FeatureSubset>,
) -> Result<SlotMap> {
    match subset {
        None => Ok(SlotMap::identity(tree)),
        Some(s) => {
            let model = game.require_features()?;
            let target = TargetFeatures::compute(tree, model)?;
            SlotMap::abstracted(tree, &target, s)
        }
    }
}

/// Solve a game from scratch and return the average profile.
pub fn solve(game: &GameConfig, config: &SolverConfig) -> Result<(StrategyProfile, ConvergenceLog)> {
    let tree = game.build_tree()?;
    let slots = slot_map(game, &tree, config.target_abstraction)?;
    let out = solver::solve_on_tree(&tree, &slots, config, game.nash_value())?;
    Ok((out.policy.to_profile(&tree), out.log))
}

/// Solve with the target player restricted to the visible features `subset`.
/// The returned profile is expressed over raw infosets.
pub fn solve_abstracted(
    game: &GameConfig,
    config: &SolverConfig,
    subset: FeatureSubset,
) -> Result<(StrategyProfile, ConvergenceLog)> {
    solve(game, &config.clone().with_abstraction(subset))
}

/// All infosets of `player` with their action counts.
pub fn enumerate_infosets(game: &GameConfig, player: Player) -> Result<Vec<(crate::game::InfosetKey, usize)>> {
    if player == Player::Chance {
        return Err(Error::usage("chance has no infosets"));
    }
    Ok(game.build_tree()?.enumerate_infosets(player))
}

/// Exact expected value of a keyed profile.
pub fn expected_value(game: &GameConfig, profile: &StrategyProfile, player: Player) -> Result<f64> {
    let tree = game.build_tree()?;
    let policy = crate::profile::TabularPolicy::from_profile(&tree, profile)?;
    Ok(eval::expected_value(&tree, &policy, player))
}
