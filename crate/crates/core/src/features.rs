//! Feature families attached to a game's target-player infosets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{InfosetKey, Player};

/// Position of a feature inside its game's feature family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureId(pub u8);

impl FeatureId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn bit(self) -> u32 {
        1 << self.0
    }
}

/// Feature values of one infoset, one integer per feature. Set-valued
/// features are stored as bitmasks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<i64>);

impl FeatureVector {
    pub fn get(&self, id: FeatureId) -> i64 {
        self.0[id.index()]
    }
}

/// Identity of an infoset's action set. Two infosets with the same signature
/// expose identical ordered action lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionSignature(pub u64);

/// A set of visible features, stored as a bitmask over feature ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FeatureSubset(pub u32);

impl FeatureSubset {
    pub const EMPTY: FeatureSubset = FeatureSubset(0);

    pub fn full(m: usize) -> Self {
        FeatureSubset(((1u64 << m) - 1) as u32)
    }

    pub fn from_ids(ids: impl IntoIterator<Item = FeatureId>) -> Self {
        FeatureSubset(ids.into_iter().fold(0, |acc, id| acc | id.bit()))
    }

    pub fn contains(self, id: FeatureId) -> bool {
        self.0 & id.bit() != 0
    }

    pub fn is_subset_of(self, other: FeatureSubset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn with(self, id: FeatureId) -> Self {
        FeatureSubset(self.0 | id.bit())
    }

    pub fn without(self, id: FeatureId) -> Self {
        FeatureSubset(self.0 & !id.bit())
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn ids(self) -> impl Iterator<Item = FeatureId> {
        (0..32u8)
            .filter(move |i| self.0 & (1 << i) != 0)
            .map(FeatureId)
    }

    /// Every subset of a family of `m` features, in mask order.
    pub fn all(m: usize) -> impl Iterator<Item = FeatureSubset> {
        (0..(1u32 << m)).map(FeatureSubset)
    }

    /// Parse the command-line spelling: letters naming features (`"CD"`),
    /// `"none"` for the empty set or `"all"` for the whole family.
    pub fn parse(text: &str, names: &[&str]) -> Result<Self> {
        match text.trim() {
            "none" | "" => return Ok(FeatureSubset::EMPTY),
            "all" => return Ok(FeatureSubset::full(names.len())),
            _ => {}
        }
        let mut subset = FeatureSubset::EMPTY;
        for ch in text.trim().chars() {
            let pos = names
                .iter()
                .position(|n| n.len() == 1 && n.starts_with(ch))
                .ok_or_else(|| {
                    Error::config(format!(
                        "unknown feature '{ch}' in subset \"{text}\" (expected letters from {})",
                        names.concat()
                    ))
                })?;
            let id = FeatureId(pos as u8);
            if subset.contains(id) {
                return Err(Error::config(format!("feature '{ch}' repeated in \"{text}\"")));
            }
            subset = subset.with(id);
        }
        Ok(subset)
    }

    /// Inverse of [`FeatureSubset::parse`].
    pub fn label(self, names: &[&str]) -> String {
        if self.is_empty() {
            "none".to_string()
        } else if self == FeatureSubset::full(names.len()) {
            "all".to_string()
        } else {
            self.ids().map(|id| names[id.index()]).collect()
        }
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}

/// Maps target-player infosets onto a finite feature family.
pub trait FeatureModel: Send + Sync {
    /// One-letter names, indexed by [`FeatureId`].
    fn feature_names(&self) -> &[&'static str];

    fn target_player(&self) -> Player;

    fn features(&self, key: &InfosetKey) -> Result<FeatureVector>;

    fn action_signature(&self, key: &InfosetKey) -> Result<ActionSignature>;

    /// JSON rendering of a single feature value.
    fn feature_value_json(&self, feature: FeatureId, value: i64) -> serde_json::Value {
        let _ = feature;
        serde_json::Value::from(value)
    }

    fn num_features(&self) -> usize {
        self.feature_names().len()
    }

    fn feature_id(&self, name: &str) -> Option<FeatureId> {
        self.feature_names()
            .iter()
            .position(|n| *n == name)
            .map(|p| FeatureId(p as u8))
    }

    fn features_json(&self, vector: &FeatureVector) -> serde_json::Value {
        let map = self
            .feature_names()
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let id = FeatureId(i as u8);
                (name.to_string(), self.feature_value_json(id, vector.get(id)))
            })
            .collect::<serde_json::Map<_, _>>();
        serde_json::Value::Object(map)
    }
}
