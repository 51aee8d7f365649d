use smallvec::SmallVec;

use super::regret::RegretTable;
use super::CfrVariant;
use crate::abstraction::SlotMap;
use crate::game::Player;
use crate::tree::{GameTree, NodeKind};

type ActionVec = SmallVec<[f64; 16]>;

/// Full-traversal CFR with simultaneous updates for both players.
///
/// Current strategies are frozen at the start of each iteration so every
/// raw infoset sharing an abstract slot acts on the same strategy. The
/// average strategy weights each iteration by the acting player's own reach.
pub struct VanillaCfr<'a> {
    tree: &'a GameTree,
    slots: &'a SlotMap,
    tables: [RegretTable; 2],
    /// Current regret-matched strategies, laid out like the tables.
    current: [Vec<f64>; 2],
}

impl<'a> VanillaCfr<'a> {
    pub fn new(tree: &'a GameTree, slots: &'a SlotMap) -> Self {
        let tables = [
            RegretTable::for_player(slots, Player::One),
            RegretTable::for_player(slots, Player::Two),
        ];
        let current = [
            vec![0.0; tables[0].regret.len()],
            vec![0.0; tables[1].regret.len()],
        ];
        VanillaCfr {
            tree,
            slots,
            tables,
            current,
        }
    }

    fn refresh_current(&mut self) {
        for p in 0..2 {
            let table = &self.tables[p];
            let current = &mut self.current[p];
            for slot in 0..table.num_slots() {
                let range = table.range(slot);
                table.current_strategy(slot, &mut current[range]);
            }
        }
    }

    /// Returns the player-one value of `node` under the current strategies.
    fn walk(&mut self, node: usize, reach: [f64; 2], chance: f64) -> f64 {
        let tree = self.tree;
        let n = tree.node(node);
        match n.kind {
            NodeKind::Terminal => tree.terminal_utility(node),
            NodeKind::Chance => {
                let mut value = 0.0;
                for (child, &p) in n.children().zip(tree.chance_probs(node)) {
                    value += p * self.walk(child, reach, chance * p);
                }
                value
            }
            NodeKind::Decision(player) => {
                if reach[0] == 0.0 && reach[1] == 0.0 {
                    return 0.0;
                }
                let p = player.index();
                let slot = self.slots.slot(player, n.infoset());
                let range = self.tables[p].range(slot);
                let sigma: ActionVec = self.current[p][range.clone()].iter().copied().collect();
                let mut values = ActionVec::new();
                let mut value = 0.0;
                for (a, child) in n.children().enumerate() {
                    let mut next = reach;
                    next[p] *= sigma[a];
                    let v = self.walk(child, next, chance);
                    value += sigma[a] * v;
                    values.push(v);
                }
                let counterfactual = reach[1 - p] * chance;
                let sign = player.sign();
                let table = &mut self.tables[p];
                for (a, i) in range.enumerate() {
                    table.regret[i] += counterfactual * sign * (values[a] - value);
                    table.strategy_sum[i] += reach[p] * sigma[a];
                }
                table.visits[slot] += 1;
                value
            }
        }
    }
}

impl CfrVariant for VanillaCfr<'_> {
    fn run_iteration(&mut self, _iteration: u64) {
        self.refresh_current();
        self.walk(GameTree::ROOT, [1.0, 1.0], 1.0);
    }

    fn tables(&self) -> &[RegretTable; 2] {
        &self.tables
    }

    fn into_tables(self) -> [RegretTable; 2] {
        self.tables
    }
}
