//! Feature-subset abstractions of the target player's infosets.
//!
//! An abstraction merges target-player infosets that share their action set
//! and the values of every visible feature. The opponent always keeps its
//! raw infosets. Abstractions are a key rewrite over the original tree: the
//! solver stores one table slot per abstract class.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::features::{ActionSignature, FeatureId, FeatureModel, FeatureSubset, FeatureVector};
use crate::game::{InfosetKey, Player};
use crate::tree::GameTree;

/// Identity of one abstract class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractKey {
    pub player: Player,
    pub action_signature: ActionSignature,
    pub visible_features: Vec<(FeatureId, i64)>,
}

impl AbstractKey {
    fn from_parts(
        player: Player,
        signature: ActionSignature,
        features: &FeatureVector,
        subset: FeatureSubset,
    ) -> Self {
        AbstractKey {
            player,
            action_signature: signature,
            visible_features: subset.ids().map(|id| (id, features.get(id))).collect(),
        }
    }
}

pub fn abstract_key(
    model: &dyn FeatureModel,
    infoset: &InfosetKey,
    subset: FeatureSubset,
) -> Result<AbstractKey> {
    check_subset(model, subset)?;
    let features = model.features(infoset)?;
    let signature = model.action_signature(infoset)?;
    Ok(AbstractKey::from_parts(model.target_player(), signature, &features, subset))
}

/// True iff the abstraction seeing `finer` refines the one seeing `coarser`,
/// i.e. `coarser ⊆ finer`.
pub fn abstraction_refines(finer: FeatureSubset, coarser: FeatureSubset) -> bool {
    coarser.is_subset_of(finer)
}

fn check_subset(model: &dyn FeatureModel, subset: FeatureSubset) -> Result<()> {
    if !subset.is_subset_of(FeatureSubset::full(model.num_features())) {
        return Err(Error::usage(format!(
            "feature subset {subset} exceeds the {} features of this game",
            model.num_features()
        )));
    }
    Ok(())
}

/// Features and action signatures of every target-player infoset in a tree,
/// computed once and shared by all coalitions and explainers.
#[derive(Debug, Clone)]
pub struct TargetFeatures {
    pub player: Player,
    pub signatures: Vec<ActionSignature>,
    pub features: Vec<FeatureVector>,
}

impl TargetFeatures {
    pub fn compute(tree: &GameTree, model: &dyn FeatureModel) -> Result<Self> {
        let player = model.target_player();
        let infosets = tree.infosets(player);
        let mut signatures = Vec::with_capacity(infosets.len());
        let mut features = Vec::with_capacity(infosets.len());
        for info in infosets {
            signatures.push(model.action_signature(&info.key)?);
            features.push(model.features(&info.key)?);
        }
        Ok(TargetFeatures {
            player,
            signatures,
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn abstract_key(&self, infoset: usize, subset: FeatureSubset) -> AbstractKey {
        AbstractKey::from_parts(
            self.player,
            self.signatures[infoset],
            &self.features[infoset],
            subset,
        )
    }
}

/// Assignment of raw infosets to solver table slots.
#[derive(Debug, Clone)]
pub struct SlotMap {
    slot_of: [Vec<u32>; 2],
    slot_actions: [Vec<usize>; 2],
}

impl SlotMap {
    /// The null abstraction for both players.
    pub fn identity(tree: &GameTree) -> Self {
        let mut slot_of = [Vec::new(), Vec::new()];
        let mut slot_actions = [Vec::new(), Vec::new()];
        for player in Player::STRATEGIC {
            let p = player.index();
            for (i, info) in tree.infosets(player).iter().enumerate() {
                slot_of[p].push(i as u32);
                slot_actions[p].push(info.num_actions);
            }
        }
        SlotMap {
            slot_of,
            slot_actions,
        }
    }

    /// Abstract the target player by `subset`; the opponent stays raw.
    pub fn abstracted(
        tree: &GameTree,
        target: &TargetFeatures,
        subset: FeatureSubset,
    ) -> Result<Self> {
        let mut map = Self::identity(tree);
        let player = target.player;
        let p = player.index();
        let mut classes: HashMap<AbstractKey, u32> = HashMap::new();
        let mut labels_of_class: Vec<usize> = Vec::new();
        map.slot_actions[p].clear();
        for i in 0..tree.num_infosets(player) {
            let key = target.abstract_key(i, subset);
            let next = classes.len() as u32;
            let slot = *classes.entry(key).or_insert(next);
            if slot == next {
                map.slot_actions[p].push(tree.infoset(player, i).num_actions);
                labels_of_class.push(i);
            } else if tree.action_labels(player, labels_of_class[slot as usize])
                != tree.action_labels(player, i)
            {
                return Err(Error::Contract(format!(
                    "infosets {} and {} share an action signature but not their actions",
                    tree.infoset(player, labels_of_class[slot as usize]).key,
                    tree.infoset(player, i).key
                )));
            }
            map.slot_of[p][i] = slot;
        }
        Ok(map)
    }

    #[inline]
    pub fn slot(&self, player: Player, infoset: usize) -> usize {
        self.slot_of[player.index()][infoset] as usize
    }

    pub fn num_slots(&self, player: Player) -> usize {
        self.slot_actions[player.index()].len()
    }

    pub fn slot_actions(&self, player: Player) -> &[usize] {
        &self.slot_actions[player.index()]
    }

    /// Raw infosets grouped by slot.
    pub fn classes(&self, player: Player) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_slots(player)];
        for (i, &s) in self.slot_of[player.index()].iter().enumerate() {
            out[s as usize].push(i);
        }
        out
    }
}
