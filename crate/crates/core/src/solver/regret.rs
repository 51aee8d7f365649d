//! Regret matching and the per-slot regret/strategy tables.

use crate::abstraction::SlotMap;
use crate::game::Player;

/// Strategy proportional to the positive parts of `regrets`; uniform when
/// no regret is positive.
pub fn regret_matching(regrets: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; regrets.len()];
    regret_matching_into(regrets, &mut out);
    out
}

pub fn regret_matching_into(regrets: &[f64], out: &mut [f64]) {
    debug_assert_eq!(regrets.len(), out.len());
    let positive: f64 = regrets.iter().map(|r| r.max(0.0)).sum();
    if positive > 0.0 {
        for (o, r) in out.iter_mut().zip(regrets) {
            *o = r.max(0.0) / positive;
        }
    } else {
        out.fill(1.0 / regrets.len() as f64);
    }
}

/// Cumulative regrets (stored unclipped), cumulative strategy weights and
/// visit counts for every slot of one player.
#[derive(Debug, Clone)]
pub struct RegretTable {
    offsets: Vec<usize>,
    pub(crate) regret: Vec<f64>,
    pub(crate) strategy_sum: Vec<f64>,
    pub(crate) visits: Vec<u64>,
}

impl RegretTable {
    pub fn new(slot_actions: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(slot_actions.len() + 1);
        let mut total = 0;
        for &n in slot_actions {
            offsets.push(total);
            total += n;
        }
        offsets.push(total);
        RegretTable {
            offsets,
            regret: vec![0.0; total],
            strategy_sum: vec![0.0; total],
            visits: vec![0; slot_actions.len()],
        }
    }

    pub fn for_player(slots: &SlotMap, player: Player) -> Self {
        Self::new(slots.slot_actions(player))
    }

    #[inline]
    pub fn range(&self, slot: usize) -> std::ops::Range<usize> {
        self.offsets[slot]..self.offsets[slot + 1]
    }

    pub fn num_slots(&self) -> usize {
        self.visits.len()
    }

    pub fn regrets(&self, slot: usize) -> &[f64] {
        &self.regret[self.range(slot)]
    }

    pub fn strategy_sums(&self, slot: usize) -> &[f64] {
        &self.strategy_sum[self.range(slot)]
    }

    pub fn visits(&self, slot: usize) -> u64 {
        self.visits[slot]
    }

    pub fn current_strategy(&self, slot: usize, out: &mut [f64]) {
        regret_matching_into(self.regrets(slot), out);
    }

    /// Normalized cumulative strategy; uniform for slots never weighted.
    pub fn average_strategy(&self, slot: usize) -> Vec<f64> {
        let sums = self.strategy_sums(slot);
        let total: f64 = sums.iter().sum();
        if total > 0.0 {
            sums.iter().map(|s| s / total).collect()
        } else {
            vec![1.0 / sums.len() as f64; sums.len()]
        }
    }
}
