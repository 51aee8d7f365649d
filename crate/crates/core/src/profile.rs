//! Behavior strategy profiles: the keyed interchange form and the dense
//! tree-indexed form used by solvers and evaluators.

use std::borrow::Cow;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{InfosetKey, Player};
use crate::game_config::GameDescriptor;
use crate::tree::GameTree;

/// Tolerance for a stored vector to count as a probability distribution.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

pub fn check_distribution(probs: &[f64]) -> Result<()> {
    let total: f64 = probs.iter().sum();
    if probs.is_empty()
        || probs.iter().any(|p| !p.is_finite() || *p < 0.0)
        || (total - 1.0).abs() > DISTRIBUTION_TOLERANCE
    {
        return Err(Error::Format(format!("{probs:?} is not a probability distribution")));
    }
    Ok(())
}

/// Per-player mapping from infoset keys to action distributions. Lookups of
/// unknown keys fall back to the uniform distribution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StrategyProfile {
    tables: [BTreeMap<InfosetKey, Vec<f64>>; 2],
}

impl StrategyProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, player: Player, key: InfosetKey, probs: Vec<f64>) -> Result<()> {
        check_distribution(&probs)?;
        self.tables[player.index()].insert(key, probs);
        Ok(())
    }

    pub fn get(&self, player: Player, key: &InfosetKey) -> Option<&[f64]> {
        self.tables[player.index()].get(key).map(Vec::as_slice)
    }

    pub fn probs_or_uniform(&self, player: Player, key: &InfosetKey, n: usize) -> Cow<'_, [f64]> {
        match self.get(player, key) {
            Some(p) => Cow::Borrowed(p),
            None => Cow::Owned(vec![1.0 / n as f64; n]),
        }
    }

    pub fn entries(&self, player: Player) -> impl Iterator<Item = (&InfosetKey, &[f64])> {
        self.tables[player.index()].iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn len(&self, player: Player) -> usize {
        self.tables[player.index()].len()
    }

    pub fn to_document(&self) -> Vec<PlayerStrategy> {
        Player::STRATEGIC
            .iter()
            .map(|&player| PlayerStrategy {
                player,
                entries: self
                    .entries(player)
                    .map(|(k, p)| StrategyEntry {
                        infoset: k.clone(),
                        probs: p.to_vec(),
                    })
                    .collect(),
            })
            .collect()
    }

    pub fn from_document(players: &[PlayerStrategy]) -> Result<Self> {
        let mut profile = StrategyProfile::new();
        for ps in players {
            if ps.player == Player::Chance {
                return Err(Error::Format("strategy entries for the chance player".into()));
            }
            for e in &ps.entries {
                profile.insert(ps.player, e.infoset.clone(), e.probs.clone())?;
            }
        }
        Ok(profile)
    }
}

pub const STRATEGY_SCHEMA_VERSION: u32 = 1;

/// Strategy file: a profile together with the game it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyDocument {
    pub schema_version: u32,
    pub game: GameDescriptor,
    pub players: Vec<PlayerStrategy>,
}

impl StrategyDocument {
    pub fn new(game: GameDescriptor, profile: &StrategyProfile) -> Self {
        StrategyDocument {
            schema_version: STRATEGY_SCHEMA_VERSION,
            game,
            players: profile.to_document(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StrategyDocument = serde_json::from_str(text)?;
        if doc.schema_version != STRATEGY_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "strategy schema version {} is not supported (expected {STRATEGY_SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    pub fn profile(&self) -> Result<StrategyProfile> {
        StrategyProfile::from_document(&self.players)
    }
}

/// Serialized strategy of one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerStrategy {
    pub player: Player,
    pub entries: Vec<StrategyEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyEntry {
    pub infoset: InfosetKey,
    pub probs: Vec<f64>,
}

/// Dense profile indexed by the tree's infoset numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    offsets: [Vec<usize>; 2],
    probs: [Vec<f64>; 2],
}

impl TabularPolicy {
    pub fn uniform(tree: &GameTree) -> Self {
        let mut offsets = [Vec::new(), Vec::new()];
        let mut probs = [Vec::new(), Vec::new()];
        for player in Player::STRATEGIC {
            let p = player.index();
            for info in tree.infosets(player) {
                offsets[p].push(probs[p].len());
                let n = info.num_actions;
                probs[p].extend(std::iter::repeat_n(1.0 / n as f64, n));
            }
            offsets[p].push(probs[p].len());
        }
        TabularPolicy { offsets, probs }
    }

    /// Project a keyed profile onto the tree. Keys the tree does not contain
    /// are rejected; tree infosets missing from the profile stay uniform.
    pub fn from_profile(tree: &GameTree, profile: &StrategyProfile) -> Result<Self> {
        let mut policy = Self::uniform(tree);
        for player in Player::STRATEGIC {
            for (key, probs) in profile.entries(player) {
                let index = tree.infoset_index(player, key).ok_or_else(|| {
                    Error::Format(format!("infoset {key} does not exist in this game"))
                })?;
                let slot = policy.get_mut(player, index);
                if slot.len() != probs.len() {
                    return Err(Error::Format(format!(
                        "infoset {key} has {} actions but the profile lists {}",
                        slot.len(),
                        probs.len()
                    )));
                }
                slot.copy_from_slice(probs);
            }
        }
        Ok(policy)
    }

    pub fn to_profile(&self, tree: &GameTree) -> StrategyProfile {
        let mut profile = StrategyProfile::new();
        for player in Player::STRATEGIC {
            for (i, info) in tree.infosets(player).iter().enumerate() {
                profile.tables[player.index()].insert(info.key.clone(), self.get(player, i).to_vec());
            }
        }
        profile
    }

    pub fn get(&self, player: Player, infoset: usize) -> &[f64] {
        let p = player.index();
        &self.probs[p][self.offsets[p][infoset]..self.offsets[p][infoset + 1]]
    }

    pub fn get_mut(&mut self, player: Player, infoset: usize) -> &mut [f64] {
        let p = player.index();
        let (start, end) = (self.offsets[p][infoset], self.offsets[p][infoset + 1]);
        &mut self.probs[p][start..end]
    }

    pub fn num_infosets(&self, player: Player) -> usize {
        self.offsets[player.index()].len() - 1
    }

    /// Replace one player's strategy with another policy's.
    pub fn with_player_from(&self, player: Player, other: &TabularPolicy) -> Self {
        let mut out = self.clone();
        let p = player.index();
        out.probs[p].clone_from(&other.probs[p]);
        out.offsets[p].clone_from(&other.offsets[p]);
        out
    }
}
