use rand::Rng;
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use super::regret::RegretTable;
use super::{Averaging, CfrVariant};
use crate::abstraction::SlotMap;
use crate::game::Player;
use crate::rng;
use crate::tree::{GameTree, NodeKind};

type ActionVec = SmallVec<[f64; 16]>;

/// External-sampling MCCFR.
///
/// One timestep is one traversal for one updating player; players alternate,
/// player one on odd timesteps. The traverser explores all of its own
/// actions, while chance and opponent actions are sampled once.
pub struct ExternalSampling<'a> {
    tree: &'a GameTree,
    slots: &'a SlotMap,
    tables: [RegretTable; 2],
    rng: ChaCha8Rng,
    visit_counts: Option<Vec<u32>>,
    averaging: Averaging,
}

impl<'a> ExternalSampling<'a> {
    pub fn new(tree: &'a GameTree, slots: &'a SlotMap, seed: u64, averaging: Averaging) -> Self {
        ExternalSampling {
            tree,
            slots,
            tables: [
                RegretTable::for_player(slots, Player::One),
                RegretTable::for_player(slots, Player::Two),
            ],
            rng: rng::stream(seed, rng::Stream::Solver),
            visit_counts: None,
            averaging,
        }
    }

    /// Count how often each tree node is entered from now on.
    pub fn record_visits(&mut self) {
        self.visit_counts = Some(vec![0; self.tree.len()]);
    }

    pub fn visit_counts(&self) -> Option<&[u32]> {
        self.visit_counts.as_deref()
    }

    /// One traversal for `traverser`; returns its sampled value at the root.
    pub fn traverse(&mut self, traverser: Player) -> f64 {
        self.walk(GameTree::ROOT, traverser, 1.0)
    }

    fn sample(&mut self, probs: &[f64]) -> usize {
        let x: f64 = self.rng.random();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if x < acc {
                return i;
            }
        }
        // rounding left x above the last partial sum; take the last
        // action with positive probability
        probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
    }

    fn walk(&mut self, node: usize, traverser: Player, own_reach: f64) -> f64 {
        if let Some(counts) = self.visit_counts.as_mut() {
            counts[node] += 1;
        }
        let tree = self.tree;
        let n = tree.node(node);
        match n.kind {
            NodeKind::Terminal => tree.utility(node, traverser),
            NodeKind::Chance => {
                let a = self.sample(tree.chance_probs(node));
                self.walk(n.children().start + a, traverser, own_reach)
            }
            NodeKind::Decision(player) => {
                let p = player.index();
                let slot = self.slots.slot(player, n.infoset());
                let table = &self.tables[p];
                let range = table.range(slot);
                let mut sigma: ActionVec = SmallVec::from_elem(0.0, range.len());
                table.current_strategy(slot, &mut sigma);
                if player != traverser {
                    if self.averaging == Averaging::OpponentSampled {
                        let table = &mut self.tables[p];
                        for (a, i) in range.clone().enumerate() {
                            table.strategy_sum[i] += sigma[a];
                        }
                    }
                    let a = self.sample(&sigma);
                    return self.walk(n.children().start + a, traverser, own_reach);
                }
                let mut values = ActionVec::new();
                let mut value = 0.0;
                for (a, child) in n.children().enumerate() {
                    let v = self.walk(child, traverser, own_reach * sigma[a]);
                    value += sigma[a] * v;
                    values.push(v);
                }
                let table = &mut self.tables[p];
                for (a, i) in range.enumerate() {
                    table.regret[i] += values[a] - value;
                    if self.averaging == Averaging::TraverserReach {
                        table.strategy_sum[i] += own_reach * sigma[a];
                    }
                }
                table.visits[slot] += 1;
                value
            }
        }
    }
}

impl CfrVariant for ExternalSampling<'_> {
    fn run_iteration(&mut self, iteration: u64) {
        let traverser = if iteration % 2 == 1 {
            Player::One
        } else {
            Player::Two
        };
        self.traverse(traverser);
    }

    fn tables(&self) -> &[RegretTable; 2] {
        &self.tables
    }

    fn into_tables(self) -> [RegretTable; 2] {
        self.tables
    }
}
