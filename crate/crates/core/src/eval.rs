//! Exact expected values, best responses and exploitability.
//!
//! All routines walk the materialized tree depth first in action order, so
//! results are bit-reproducible for a given profile.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::game::{ActionId, InfosetKey, Player};
use crate::profile::TabularPolicy;
use crate::tree::{GameTree, NodeKind};

/// Expected payoff of `player` when everyone follows `policy`.
pub fn expected_value(tree: &GameTree, policy: &TabularPolicy, player: Player) -> f64 {
    // adding 0.0 turns -0.0 into 0.0
    value_for_player_one(tree, policy, GameTree::ROOT) * player.sign() + 0.0
}

fn value_for_player_one(tree: &GameTree, policy: &TabularPolicy, node: usize) -> f64 {
    let n = tree.node(node);
    match n.kind {
        NodeKind::Terminal => tree.terminal_utility(node),
        NodeKind::Chance => n
            .children()
            .zip(tree.chance_probs(node))
            .map(|(c, &p)| p * value_for_player_one(tree, policy, c))
            .sum(),
        NodeKind::Decision(player) => n
            .children()
            .zip(policy.get(player, n.infoset()))
            .map(|(c, &p)| {
                if p == 0.0 {
                    0.0
                } else {
                    p * value_for_player_one(tree, policy, c)
                }
            })
            .sum(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseResult {
    pub player: Player,
    /// b_i(σ_-i): the best achievable expected payoff.
    pub value: f64,
    /// Chosen action per infoset of `player`, indexed like the tree.
    pub actions: Vec<ActionId>,
}

impl BestResponseResult {
    pub fn strategy(&self, tree: &GameTree) -> BTreeMap<InfosetKey, ActionId> {
        tree.infosets(self.player)
            .iter()
            .zip(&self.actions)
            .map(|(info, &a)| (info.key.clone(), a))
            .collect()
    }

    /// `base` with the best responder's strategy replaced by the pure
    /// best response.
    pub fn as_policy(&self, base: &TabularPolicy) -> TabularPolicy {
        let mut policy = base.clone();
        for (i, a) in self.actions.iter().enumerate() {
            let probs = policy.get_mut(self.player, i);
            probs.fill(0.0);
            probs[a.0] = 1.0;
        }
        policy
    }
}

/// Exact best response of `player` against the other player's part of
/// `policy`.
///
/// First pass: opponent-and-chance reach of every node. Second pass: values
/// bottom-up, resolving each infoset by the reach-weighted counterfactual
/// value of its actions once the deeper infosets are fixed. Ties go to the
/// lowest action. Requires perfect recall for `player`.
pub fn best_response(tree: &GameTree, policy: &TabularPolicy, player: Player) -> BestResponseResult {
    let mut br = BestResponder {
        tree,
        policy,
        player,
        reach: vec![0.0; tree.len()],
        values: vec![f64::NAN; tree.len()],
        choice: vec![u32::MAX; tree.num_infosets(player)],
    };
    br.fill_reach(GameTree::ROOT, 1.0);
    let value = br.value(GameTree::ROOT);
    for i in 0..br.choice.len() {
        if br.choice[i] == u32::MAX {
            br.resolve(i);
        }
    }
    BestResponseResult {
        player,
        value,
        actions: br.choice.iter().map(|&a| ActionId(a as usize)).collect(),
    }
}

struct BestResponder<'a> {
    tree: &'a GameTree,
    policy: &'a TabularPolicy,
    player: Player,
    reach: Vec<f64>,
    values: Vec<f64>,
    choice: Vec<u32>,
}

impl BestResponder<'_> {
    fn fill_reach(&mut self, node: usize, reach: f64) {
        self.reach[node] = reach;
        let n = *self.tree.node(node);
        match n.kind {
            NodeKind::Terminal => {}
            NodeKind::Chance => {
                for (c, &p) in n.children().zip(self.tree.chance_probs(node)) {
                    self.fill_reach(c, reach * p);
                }
            }
            NodeKind::Decision(q) if q == self.player => {
                for c in n.children() {
                    self.fill_reach(c, reach);
                }
            }
            NodeKind::Decision(q) => {
                let probs = self.policy.get(q, n.infoset());
                for (c, &p) in n.children().zip(probs) {
                    self.fill_reach(c, reach * p);
                }
            }
        }
    }

    fn value(&mut self, node: usize) -> f64 {
        let memo = self.values[node];
        if !memo.is_nan() {
            return memo;
        }
        let n = *self.tree.node(node);
        let v = match n.kind {
            NodeKind::Terminal => self.tree.utility(node, self.player),
            NodeKind::Chance => {
                let mut v = 0.0;
                for (c, &p) in n.children().zip(self.tree.chance_probs(node)) {
                    v += p * self.value(c);
                }
                v
            }
            NodeKind::Decision(q) if q == self.player => {
                let infoset = n.infoset();
                if self.choice[infoset] == u32::MAX {
                    self.resolve(infoset);
                }
                self.value(n.children().start + self.choice[infoset] as usize)
            }
            NodeKind::Decision(q) => {
                let mut v = 0.0;
                for (a, c) in n.children().enumerate() {
                    let p = self.policy.get(q, n.infoset())[a];
                    v += p * self.value(c);
                }
                v
            }
        };
        self.values[node] = v;
        v
    }

    fn resolve(&mut self, infoset: usize) {
        let tree = self.tree;
        let info = tree.infoset(self.player, infoset);
        let mut totals = vec![0.0; info.num_actions];
        for &h in &info.nodes {
            let h = h as usize;
            let reach = self.reach[h];
            let first = tree.node(h).children().start;
            for (a, total) in totals.iter_mut().enumerate() {
                *total += reach * self.value(first + a);
            }
        }
        let mut best = 0;
        for a in 1..totals.len() {
            if totals[a] > totals[best] + 1e-12 * totals[best].abs().max(1.0) {
                best = a;
            }
        }
        self.choice[infoset] = best as u32;
    }
}

/// Equilibrium value of the game for player one, with an error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NashValue {
    pub player_one: f64,
    pub tolerance: f64,
}

impl NashValue {
    pub fn exact(player_one: f64) -> Self {
        NashValue {
            player_one,
            tolerance: 0.0,
        }
    }

    pub fn for_player(&self, player: Player) -> f64 {
        self.player_one * player.sign()
    }

    /// Bracket the game value with the best-response values of an
    /// approximate equilibrium: -b2(σ1) <= v1* <= b1(σ2).
    pub fn from_approximate_equilibrium(tree: &GameTree, policy: &TabularPolicy) -> Self {
        let upper = best_response(tree, policy, Player::One).value;
        let lower = -best_response(tree, policy, Player::Two).value;
        NashValue {
            player_one: 0.5 * (upper + lower),
            tolerance: 0.5 * (upper - lower).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExploitabilityReport {
    /// ε₁ = b₂(σ₁) − v₂*
    pub eps1: f64,
    /// ε₂ = b₁(σ₂) − v₁*
    pub eps2: f64,
    pub avg: f64,
    /// v₁*
    pub v_star: f64,
    /// Error bound on `v_star`, carried into every ε.
    pub tolerance: f64,
    /// b₁(σ₂) and b₂(σ₁).
    pub best_response_values: [f64; 2],
}

impl ExploitabilityReport {
    pub fn epsilon(&self, player: Player) -> f64 {
        match player {
            Player::One => self.eps1,
            _ => self.eps2,
        }
    }
}

pub fn exploitability(tree: &GameTree, policy: &TabularPolicy, nash: NashValue) -> ExploitabilityReport {
    let b1 = best_response(tree, policy, Player::One).value;
    let b2 = best_response(tree, policy, Player::Two).value;
    let eps1 = b2 - nash.for_player(Player::Two);
    let eps2 = b1 - nash.for_player(Player::One);
    ExploitabilityReport {
        eps1,
        eps2,
        avg: 0.5 * (eps1 + eps2),
        v_star: nash.player_one,
        tolerance: nash.tolerance,
        best_response_values: [b1, b2],
    }
}
