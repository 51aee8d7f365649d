//! Counterfactual regret minimization: vanilla CFR and external-sampling
//! Monte Carlo CFR, optionally over an abstraction of the target player.

mod external;
mod regret;
mod vanilla;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::abstraction::SlotMap;
use crate::error::{Error, Result};
use crate::eval::{self, NashValue};
use crate::features::FeatureSubset;
use crate::game::Player;
use crate::profile::TabularPolicy;
use crate::tree::GameTree;

pub use external::ExternalSampling;
pub use regret::{regret_matching, regret_matching_into, RegretTable};
pub use vanilla::VanillaCfr;

/// Schema version stamped into convergence CSVs.
pub const CONVERGENCE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    VanillaCfr,
    ExternalMccfr,
}

/// How external sampling accumulates the average strategy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Add the current strategy (weight 1) at every sampled node of the
    /// non-traversing player.
    #[default]
    OpponentSampled,
    /// Add the current strategy at the traverser's own nodes, weighted by the
    /// traverser's reach. The sampling probability of those nodes is the
    /// opponent's reach, so infosets the opponent stops visiting keep their
    /// early-iteration averages; it converges noticeably worse.
    TraverserReach,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Full-tree iterations for vanilla CFR; single-player traversals
    /// ("timesteps") for external sampling.
    pub iterations: u64,
    pub seed: u64,
    /// Visible features of the target player, `None` for no abstraction.
    pub target_abstraction: Option<FeatureSubset>,
    /// Iterations after which the average profile is evaluated. The final
    /// iteration is always evaluated.
    pub eval_schedule: Vec<u64>,
    /// Average-strategy rule of external sampling; ignored by vanilla CFR.
    pub averaging: Averaging,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, iterations: u64, seed: u64) -> Self {
        SolverConfig {
            algorithm,
            iterations,
            seed,
            target_abstraction: None,
            eval_schedule: Vec::new(),
            averaging: Averaging::default(),
        }
    }

    pub fn with_abstraction(mut self, subset: FeatureSubset) -> Self {
        self.target_abstraction = Some(subset);
        self
    }

    pub fn with_schedule(mut self, schedule: Vec<u64>) -> Self {
        self.eval_schedule = schedule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("solver iterations must be at least 1"));
        }
        Ok(())
    }

    /// Sorted, de-duplicated checkpoints within range, ending at the last
    /// iteration.
    pub fn checkpoints(&self) -> Vec<u64> {
        let mut points: Vec<u64> = self
            .eval_schedule
            .iter()
            .copied()
            .filter(|&t| t >= 1 && t <= self.iterations)
            .collect();
        points.push(self.iterations);
        points.sort_unstable();
        points.dedup();
        points
    }
}

/// Logarithmically spaced checkpoints (1, 2, 5, 10, 20, 50, ...) up to `last`.
pub fn log_schedule(last: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for step in [1, 2, 5] {
            let t = decade.saturating_mul(step);
            if t > last {
                break 'outer;
            }
            out.push(t);
        }
        decade = decade.saturating_mul(10);
    }
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub iteration: u64,
    pub player: Player,
    pub expected_value: f64,
    pub exploitability: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLog {
    pub points: Vec<ConvergencePoint>,
}

impl ConvergenceLog {
    /// CSV with columns iteration, player, expected_value, exploitability
    /// and schema_version.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,player,expected_value,exploitability,schema_version\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.iteration,
                p.player.id(),
                p.expected_value,
                p.exploitability,
                CONVERGENCE_SCHEMA_VERSION
            );
        }
        out
    }

    pub fn for_player(&self, player: Player) -> impl Iterator<Item = &ConvergencePoint> {
        self.points.iter().filter(move |p| p.player == player)
    }

    pub fn first(&self, player: Player) -> Option<&ConvergencePoint> {
        self.for_player(player).next()
    }

    pub fn last(&self, player: Player) -> Option<&ConvergencePoint> {
        self.for_player(player).last()
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    /// Average strategy lifted to raw infosets.
    pub policy: TabularPolicy,
    pub log: ConvergenceLog,
    pub tables: [RegretTable; 2],
}

/// Common interface of the two CFR variants.
pub trait CfrVariant {
    fn run_iteration(&mut self, iteration: u64);
    fn tables(&self) -> &[RegretTable; 2];
    fn into_tables(self) -> [RegretTable; 2];
}

/// Solve `tree` with the slots in `slots`, logging exact expected value and
/// exploitability at each checkpoint.
pub fn solve_on_tree(
    tree: &GameTree,
    slots: &SlotMap,
    config: &SolverConfig,
    nash: NashValue,
) -> Result<SolveOutput> {
    config.validate()?;
    match config.algorithm {
        Algorithm::VanillaCfr => drive(VanillaCfr::new(tree, slots), tree, slots, config, nash),
        Algorithm::ExternalMccfr => drive(
            ExternalSampling::new(tree, slots, config.seed, config.averaging),
            tree,
            slots,
            config,
            nash,
        ),
    }
}

fn drive<V: CfrVariant>(
    mut variant: V,
    tree: &GameTree,
    slots: &SlotMap,
    config: &SolverConfig,
    nash: NashValue,
) -> Result<SolveOutput> {
    let mut log = ConvergenceLog::default();
    let mut t = 0;
    for checkpoint in config.checkpoints() {
        while t < checkpoint {
            t += 1;
            variant.run_iteration(t);
        }
        let policy = average_policy(tree, slots, variant.tables());
        let report = eval::exploitability(tree, &policy, nash);
        for player in Player::STRATEGIC {
            log.points.push(ConvergencePoint {
                iteration: t,
                player,
                expected_value: eval::expected_value(tree, &policy, player),
                exploitability: report.epsilon(player),
            });
        }
    }
    let tables = variant.into_tables();
    let policy = average_policy(tree, slots, &tables);
    Ok(SolveOutput {
        policy,
        log,
        tables,
    })
}

/// Normalized cumulative strategies, lifted from slots to raw infosets.
pub fn average_policy(tree: &GameTree, slots: &SlotMap, tables: &[RegretTable; 2]) -> TabularPolicy {
    let mut policy = TabularPolicy::uniform(tree);
    for player in Player::STRATEGIC {
        let table = &tables[player.index()];
        let averages: Vec<Vec<f64>> = (0..table.num_slots())
            .map(|s| table.average_strategy(s))
            .collect();
        for i in 0..tree.num_infosets(player) {
            policy
                .get_mut(player, i)
                .copy_from_slice(&averages[slots.slot(player, i)]);
        }
    }
    policy
}
