//! Equilibrium solving and Shapley-value explanations for two-player
//! zero-sum imperfect-information games.
//!
//! The crate is organized bottom-up:
//!
//! - [`game`], [`goofspiel`], [`kuhn`], [`tree`]: the game contract, two
//!   concrete games and a materialized tree that solvers walk.
//! - [`abstraction`]: feature-subset abstractions of the explained player.
//! - [`solver`]: vanilla CFR and external-sampling MCCFR.
//! - [`eval`]: exact expected value, best response and exploitability.
//! - [`sgfi`]: game-level feature importance from abstracted equilibria.
//! - [`ssfi`]: sampled Shapley attribution of a strategy at one infoset.

pub mod abstraction;
pub mod error;
pub mod eval;
pub mod features;
pub mod game;
pub mod game_config;
pub mod goofspiel;
pub mod kuhn;
pub mod profile;
pub mod rng;
pub mod sgfi;
pub mod solver;
pub mod ssfi;
pub mod tree;

pub use error::{Error, Result};
pub use features::{FeatureId, FeatureModel, FeatureSubset, FeatureVector};
pub use game::{ActionId, Game, GameState, InfosetKey, Player};
pub use game_config::GameConfig;
pub use profile::{StrategyProfile, TabularPolicy};
pub use tree::GameTree;
