//! Materialized game trees.
//!
//! Solvers and evaluators walk a flat node array instead of re-deriving
//! states and keys. Children of a node occupy a contiguous index range and
//! every decision node carries the index of its infoset, interned per player.

use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::game::{ActionId, Game, GameState, InfosetKey, Player};

/// Default cap on materialized nodes (about 0.5 GB of node data).
pub const DEFAULT_NODE_LIMIT: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Terminal,
    Chance,
    Decision(Player),
}

#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub kind: NodeKind,
    first_child: u32,
    num_children: u32,
    /// Infoset index (decision), probability-table offset (chance) or
    /// utility index (terminal).
    data: u32,
}

impl Node {
    pub fn infoset(&self) -> usize {
        debug_assert!(matches!(self.kind, NodeKind::Decision(_)));
        self.data as usize
    }

    pub fn num_children(&self) -> usize {
        self.num_children as usize
    }

    pub fn children(&self) -> Range<usize> {
        let start = self.first_child as usize;
        start..start + self.num_children as usize
    }
}

#[derive(Debug, Clone)]
pub struct InfosetInfo {
    pub key: InfosetKey,
    pub num_actions: usize,
    labels: u32,
    /// Decision nodes belonging to this infoset, in tree order.
    pub nodes: Vec<u32>,
}

#[derive(Debug)]
pub struct GameTree {
    nodes: Vec<Node>,
    chance_probs: Vec<f64>,
    utilities: Vec<f64>,
    infosets: [Vec<InfosetInfo>; 2],
    key_index: [HashMap<InfosetKey, u32>; 2],
    label_sets: Vec<Vec<String>>,
}

impl GameTree {
    pub fn build<G: Game>(game: &G) -> Result<Self> {
        Self::build_with_limit(game, DEFAULT_NODE_LIMIT)
    }

    /// Expand the full tree, checking the game contract on the way: zero-sum
    /// terminals, normalized chance nodes, non-empty action lists and
    /// identical action lists across each infoset.
    pub fn build_with_limit<G: Game>(game: &G, node_limit: usize) -> Result<Self> {
        let mut builder = Builder {
            tree: GameTree {
                nodes: Vec::new(),
                chance_probs: Vec::new(),
                utilities: Vec::new(),
                infosets: [Vec::new(), Vec::new()],
                key_index: [HashMap::new(), HashMap::new()],
                label_sets: Vec::new(),
            },
            prob_tables: HashMap::new(),
            label_index: HashMap::new(),
            node_limit,
        };
        builder.push_placeholder()?;
        builder.expand(0, game.initial_state())?;
        let mut tree = builder.tree;
        tree.nodes.shrink_to_fit();
        Ok(tree)
    }

    pub const ROOT: usize = 0;

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, index: usize) -> &Node {
        &self.nodes[index]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn num_terminals(&self) -> usize {
        self.utilities.len()
    }

    /// Player-one payoff at a terminal node.
    pub fn terminal_utility(&self, index: usize) -> f64 {
        let node = &self.nodes[index];
        debug_assert_eq!(node.kind, NodeKind::Terminal);
        self.utilities[node.data as usize]
    }

    pub fn utility(&self, index: usize, player: Player) -> f64 {
        self.terminal_utility(index) * player.sign()
    }

    pub fn chance_probs(&self, index: usize) -> &[f64] {
        let node = &self.nodes[index];
        debug_assert_eq!(node.kind, NodeKind::Chance);
        let start = node.data as usize;
        &self.chance_probs[start..start + node.num_children as usize]
    }

    pub fn infosets(&self, player: Player) -> &[InfosetInfo] {
        &self.infosets[player.index()]
    }

    pub fn infoset(&self, player: Player, index: usize) -> &InfosetInfo {
        &self.infosets[player.index()][index]
    }

    pub fn num_infosets(&self, player: Player) -> usize {
        self.infosets[player.index()].len()
    }

    pub fn infoset_index(&self, player: Player, key: &InfosetKey) -> Option<usize> {
        self.key_index[player.index()].get(key).map(|&i| i as usize)
    }

    pub fn action_labels(&self, player: Player, infoset: usize) -> &[String] {
        let labels = self.infosets[player.index()][infoset].labels;
        &self.label_sets[labels as usize]
    }

    /// Every infoset of `player` with its action count, in discovery order.
    pub fn enumerate_infosets(&self, player: Player) -> Vec<(InfosetKey, usize)> {
        self.infosets(player)
            .iter()
            .map(|info| (info.key.clone(), info.num_actions))
            .collect()
    }

    /// Child reached from `node` by `action`.
    pub fn child(&self, node: usize, action: ActionId) -> usize {
        let n = &self.nodes[node];
        debug_assert!(action.0 < n.num_children as usize);
        n.first_child as usize + action.0
    }
}

struct Builder {
    tree: GameTree,
    prob_tables: HashMap<Vec<u64>, u32>,
    label_index: HashMap<Vec<String>, u32>,
    node_limit: usize,
}

impl Builder {
    fn push_placeholder(&mut self) -> Result<usize> {
        if self.tree.nodes.len() >= self.node_limit {
            return Err(Error::Resource(format!(
                "game tree exceeds {} nodes",
                self.node_limit
            )));
        }
        self.tree.nodes.push(Node {
            kind: NodeKind::Terminal,
            first_child: 0,
            num_children: 0,
            data: 0,
        });
        Ok(self.tree.nodes.len() - 1)
    }

    fn expand<S: GameState>(&mut self, index: usize, state: S) -> Result<()> {
        if state.is_terminal() {
            let u1 = state.utility(Player::One);
            let u2 = state.utility(Player::Two);
            if u1 + u2 != 0.0 {
                return Err(Error::Contract(format!(
                    "terminal utilities ({u1}, {u2}) are not zero-sum"
                )));
            }
            let slot = self.tree.utilities.len() as u32;
            self.tree.utilities.push(u1);
            self.tree.nodes[index].data = slot;
            return Ok(());
        }

        let n = state.num_actions();
        if n == 0 {
            return Err(Error::Contract("non-terminal state without actions".into()));
        }
        let (kind, data) = match state.current_player() {
            Player::Chance => (NodeKind::Chance, self.intern_probs(&state)?),
            player => (NodeKind::Decision(player), self.intern_infoset(&state, player, index)?),
        };
        let first = self.tree.nodes.len();
        for _ in 0..n {
            self.push_placeholder()?;
        }
        let node = &mut self.tree.nodes[index];
        node.kind = kind;
        node.data = data;
        node.first_child = first as u32;
        node.num_children = n as u32;
        for a in 0..n {
            let child = state.apply(ActionId(a))?;
            self.expand(first + a, child)?;
        }
        Ok(())
    }

    fn intern_probs<S: GameState>(&mut self, state: &S) -> Result<u32> {
        let probs = state.chance_probabilities();
        if probs.len() != state.num_actions() {
            return Err(Error::Contract("chance distribution length mismatch".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 || probs.iter().any(|&p| p < 0.0) {
            return Err(Error::Contract(format!(
                "chance probabilities sum to {total}, expected 1"
            )));
        }
        let bits: Vec<u64> = probs.iter().map(|p| p.to_bits()).collect();
        let table = &mut self.tree.chance_probs;
        Ok(*self.prob_tables.entry(bits).or_insert_with(|| {
            let offset = table.len() as u32;
            table.extend_from_slice(&probs);
            offset
        }))
    }

    fn intern_infoset<S: GameState>(
        &mut self,
        state: &S,
        player: Player,
        node: usize,
    ) -> Result<u32> {
        let key = state.infoset_key(player)?;
        let labels = state.action_labels();
        let p = player.index();
        if let Some(&existing) = self.tree.key_index[p].get(&key) {
            let info = &mut self.tree.infosets[p][existing as usize];
            if self.tree.label_sets[info.labels as usize] != labels {
                return Err(Error::Contract(format!(
                    "histories in infoset {key} expose different actions"
                )));
            }
            info.nodes.push(node as u32);
            return Ok(existing);
        }
        let label_sets = &mut self.tree.label_sets;
        let label_id = *self.label_index.entry(labels.clone()).or_insert_with(|| {
            label_sets.push(labels.clone());
            (label_sets.len() - 1) as u32
        });
        let index = self.tree.infosets[p].len() as u32;
        self.tree.infosets[p].push(InfosetInfo {
            key: key.clone(),
            num_actions: labels.len(),
            labels: label_id,
            nodes: vec![node as u32],
        });
        self.tree.key_index[p].insert(key, index);
        Ok(index)
    }
}
