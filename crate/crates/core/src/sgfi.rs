//! Shapley game feature importance.
//!
//! The value of a coalition S of features is the exact expected return of
//! the target player when it can only see S (all other features merged away)
//! and both players play an approximate equilibrium of that abstracted game.
//! The Shapley stage is exact over all 2^m coalitions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abstraction::{SlotMap, TargetFeatures};
use crate::error::{Error, Result};
use crate::eval::NashValue;
use crate::features::{FeatureId, FeatureSubset};
use crate::game::Player;
use crate::game_config::GameConfig;
use crate::rng::derive_seed;
use crate::solver::{self, ConvergenceLog, SolverConfig};
use crate::tree::GameTree;

/// Largest feature family the exact Shapley stage accepts.
pub const MAX_FEATURES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionEntry {
    pub value: f64,
    pub seed: u64,
    pub iterations: u64,
    /// Exploitability of the target player's abstracted strategy at the end
    /// of the solve.
    pub exploitability: f64,
}

/// Coalition values indexed by feature subset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoalitionValueTable {
    entries: BTreeMap<FeatureSubset, CoalitionEntry>,
}

impl CoalitionValueTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// A table with bare values, `values[mask]` for every mask below 2^m.
    pub fn from_values(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .map(|(mask, &value)| {
                let entry = CoalitionEntry {
                    value,
                    seed: 0,
                    iterations: 0,
                    exploitability: 0.0,
                };
                (FeatureSubset(mask as u32), entry)
            })
            .collect();
        CoalitionValueTable { entries }
    }

    pub fn insert(&mut self, subset: FeatureSubset, entry: CoalitionEntry) {
        self.entries.insert(subset, entry);
    }

    pub fn get(&self, subset: FeatureSubset) -> Option<&CoalitionEntry> {
        self.entries.get(&subset)
    }

    pub fn value(&self, subset: FeatureSubset) -> Option<f64> {
        self.get(subset).map(|e| e.value)
    }

    pub fn entries(&self) -> impl Iterator<Item = (FeatureSubset, &CoalitionEntry)> {
        self.entries.iter().map(|(s, e)| (*s, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Values in mask order; fails unless all 2^m subsets are present.
    fn dense(&self, m: usize) -> Result<Vec<f64>> {
        if m > MAX_FEATURES {
            return Err(Error::usage(format!(
                "exact Shapley values support at most {MAX_FEATURES} features, got {m}"
            )));
        }
        FeatureSubset::all(m)
            .map(|s| {
                self.value(s).ok_or_else(|| {
                    Error::usage(format!("coalition table has no value for subset {s}"))
                })
            })
            .collect()
    }
}

/// Shapley attribution over a complete coalition table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgfiReport {
    /// φ_j, indexed by feature id.
    pub phi: Vec<f64>,
    /// v(∅)
    pub baseline: f64,
    /// v(M)
    pub full: f64,
    /// v({j}) − v(∅)
    pub single_gain: Vec<f64>,
    /// v(M) − v(M ∖ {j})
    pub leave_one_out: Vec<f64>,
}

fn factorials(m: usize) -> Vec<f64> {
    let mut f = vec![1.0; m + 1];
    for i in 1..=m {
        f[i] = f[i - 1] * i as f64;
    }
    f
}

/// Exact Shapley values of the game `v` given as `values[mask]`.
pub fn shapley_values(values: &[f64], m: usize) -> Vec<f64> {
    assert_eq!(values.len(), 1 << m, "table must hold 2^m values");
    let fact = factorials(m);
    let weight: Vec<f64> = (0..m).map(|s| fact[s] * fact[m - s - 1] / fact[m]).collect();
    (0..m)
        .map(|j| {
            let bit = 1usize << j;
            let mut phi = 0.0;
            for mask in 0..values.len() {
                if mask & bit == 0 {
                    let size = (mask as u32).count_ones() as usize;
                    phi += weight[size] * (values[mask | bit] - values[mask]);
                }
            }
            phi
        })
        .collect()
}

pub fn shapley_exact(table: &CoalitionValueTable, m: usize) -> Result<SgfiReport> {
    let values = table.dense(m)?;
    let full_mask = (1usize << m) - 1;
    let baseline = values[0];
    let full = values[full_mask];
    Ok(SgfiReport {
        phi: shapley_values(&values, m),
        baseline,
        full,
        single_gain: (0..m).map(|j| values[1 << j] - baseline).collect(),
        leave_one_out: (0..m).map(|j| full - values[full_mask & !(1 << j)]).collect(),
    })
}

/// Result of solving one abstracted game.
#[derive(Debug, Clone)]
pub struct CoalitionResult {
    pub subset: FeatureSubset,
    pub entry: CoalitionEntry,
    pub log: ConvergenceLog,
}

/// Everything the coalition solves share: the tree, target features and
/// game value.
pub struct CoalitionContext {
    tree: GameTree,
    target: TargetFeatures,
    nash: NashValue,
    m: usize,
}

impl CoalitionContext {
    pub fn new(game: &GameConfig) -> Result<Self> {
        let model = game.require_features()?;
        let tree = game.build_tree()?;
        let target = TargetFeatures::compute(&tree, model)?;
        Ok(CoalitionContext {
            tree,
            target,
            nash: game.nash_value(),
            m: model.num_features(),
        })
    }

    pub fn num_features(&self) -> usize {
        self.m
    }

    pub fn target_player(&self) -> Player {
        self.target.player
    }

    pub fn tree(&self) -> &GameTree {
        &self.tree
    }

    /// Solve the game with the target player seeing only `subset` and
    /// return its exact expected return under the final average profile.
    pub fn solve(&self, subset: FeatureSubset, config: &SolverConfig) -> Result<CoalitionResult> {
        if !subset.is_subset_of(FeatureSubset::full(self.m)) {
            return Err(Error::usage(format!(
                "feature subset {subset} exceeds the {} features of this game",
                self.m
            )));
        }
        let slots = SlotMap::abstracted(&self.tree, &self.target, subset)?;
        let out = solver::solve_on_tree(&self.tree, &slots, config, self.nash)?;
        let player = self.target.player;
        let last = out
            .log
            .last(player)
            .ok_or_else(|| Error::Contract("solver produced no checkpoint".into()))?;
        Ok(CoalitionResult {
            subset,
            entry: CoalitionEntry {
                value: last.expected_value,
                seed: config.seed,
                iterations: config.iterations,
                exploitability: last.exploitability,
            },
            log: out.log,
        })
    }
}

/// Expected return of the target player under the equilibrium of the game
/// abstracted to `subset`.
pub fn coalition_value(
    game: &GameConfig,
    subset: FeatureSubset,
    config: &SolverConfig,
) -> Result<CoalitionResult> {
    CoalitionContext::new(game)?.solve(subset, config)
}

/// Seed of the solve for `subset` in replicate `replicate`.
pub fn coalition_seed(master: u64, replicate: u64, subset: FeatureSubset) -> u64 {
    derive_seed(master, &[replicate, subset.0 as u64])
}

#[derive(Debug, Clone)]
pub struct SgfiReplicate {
    pub index: u64,
    pub table: CoalitionValueTable,
    pub report: SgfiReport,
    /// Convergence log per coalition, in mask order.
    pub logs: Vec<ConvergenceLog>,
}

/// Aggregate of several independent SGFI runs.
#[derive(Debug, Clone)]
pub struct SgfiRun {
    pub num_features: usize,
    pub target_player: Player,
    pub master_seed: u64,
    pub replicates: Vec<SgfiReplicate>,
    /// Replicate means.
    pub mean: SgfiReport,
    /// Replicate sample standard deviation of φ (0 for a single replicate).
    pub phi_stddev: Vec<f64>,
    /// Mean coalition value per subset, in mask order.
    pub coalition_means: Vec<f64>,
    pub coalition_stddev: Vec<f64>,
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// All 2^m coalition solves for `replicates` replicates, run on the rayon
/// pool. `config.seed` is the master seed; each solve gets its own derived
/// seed, so results do not depend on scheduling.
pub fn run_sgfi(game: &GameConfig, config: &SolverConfig, replicates: u64) -> Result<SgfiRun> {
    if replicates == 0 {
        return Err(Error::usage("sgfi needs at least one replicate"));
    }
    config.validate()?;
    let context = CoalitionContext::new(game)?;
    run_sgfi_with(&context, config, replicates)
}

pub fn run_sgfi_with(
    context: &CoalitionContext,
    config: &SolverConfig,
    replicates: u64,
) -> Result<SgfiRun> {
    let m = context.num_features();
    if m > MAX_FEATURES {
        return Err(Error::usage(format!(
            "exact Shapley values support at most {MAX_FEATURES} features, got {m}"
        )));
    }
    let jobs: Vec<(u64, FeatureSubset)> = (0..replicates)
        .flat_map(|r| FeatureSubset::all(m).map(move |s| (r, s)))
        .collect();
    let results: Vec<CoalitionResult> = jobs
        .par_iter()
        .map(|&(r, subset)| {
            let mut job = config.clone();
            job.seed = coalition_seed(config.seed, r, subset);
            context.solve(subset, &job)
        })
        .collect::<Result<_>>()?;

    let per = 1usize << m;
    let mut reps = Vec::with_capacity(replicates as usize);
    for (r, chunk) in results.chunks(per).enumerate() {
        let mut table = CoalitionValueTable::new();
        let mut logs = Vec::with_capacity(per);
        for res in chunk {
            table.insert(res.subset, res.entry.clone());
            logs.push(res.log.clone());
        }
        let report = shapley_exact(&table, m)?;
        reps.push(SgfiReplicate {
            index: r as u64,
            table,
            report,
            logs,
        });
    }

    let column = |f: &dyn Fn(&SgfiReplicate) -> f64| -> (f64, f64) {
        mean_std(&reps.iter().map(f).collect::<Vec<_>>())
    };
    let mut phi = Vec::with_capacity(m);
    let mut phi_stddev = Vec::with_capacity(m);
    for j in 0..m {
        let (mu, sd) = column(&|rep| rep.report.phi[j]);
        phi.push(mu);
        phi_stddev.push(sd);
    }
    let mean = SgfiReport {
        phi,
        baseline: column(&|rep| rep.report.baseline).0,
        full: column(&|rep| rep.report.full).0,
        single_gain: (0..m).map(|j| column(&|rep| rep.report.single_gain[j]).0).collect(),
        leave_one_out: (0..m).map(|j| column(&|rep| rep.report.leave_one_out[j]).0).collect(),
    };
    let (coalition_means, coalition_stddev) = FeatureSubset::all(m)
        .map(|s| column(&|rep| rep.table.value(s).unwrap_or(f64::NAN)))
        .unzip();
    Ok(SgfiRun {
        num_features: m,
        target_player: context.target_player(),
        master_seed: config.seed,
        replicates: reps,
        mean,
        phi_stddev,
        coalition_means,
        coalition_stddev,
    })
}

/// Shapley values by averaging marginal contributions over all m! feature
/// orders. Exponentially slower than [`shapley_values`]; for checking it.
pub fn shapley_by_permutations(values: &[f64], m: usize) -> Vec<f64> {
    let mut phi = vec![0.0; m];
    let mut order: Vec<usize> = (0..m).collect();
    let mut count = 0u64;
    permute(&mut order, 0, &mut |order| {
        count += 1;
        let mut mask = 0usize;
        for &j in order {
            phi[j] += values[mask | (1 << j)] - values[mask];
            mask |= 1 << j;
        }
    });
    phi.iter().map(|p| p / count as f64).collect()
}

fn permute(items: &mut [usize], k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

impl SgfiReport {
    pub fn phi_of(&self, id: FeatureId) -> f64 {
        self.phi[id.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_table_returns_coefficients() {
        let c = [0.5, -1.0, 2.0];
        let values: Vec<f64> = (0..8)
            .map(|mask: usize| (0..3).filter(|j| mask & (1 << j) != 0).map(|j| c[j]).sum())
            .collect();
        let phi = shapley_values(&values, 3);
        for j in 0..3 {
            assert!((phi[j] - c[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn glove_game() {
        // v(S) = 1 iff a ∈ S and (b ∈ S or c ∈ S)
        let values: Vec<f64> = (0..8)
            .map(|mask: usize| f64::from(mask & 1 != 0 && mask & 6 != 0))
            .collect();
        let phi = shapley_values(&values, 3);
        assert!((phi[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((phi[1] - 1.0 / 6.0).abs() < 1e-12);
        assert!((phi[2] - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn incomplete_table_is_usage_error() {
        let mut table = CoalitionValueTable::from_values(&[0.0, 1.0, 2.0, 3.0]);
        assert!(shapley_exact(&table, 2).is_ok());
        table.entries.remove(&FeatureSubset(2));
        assert!(matches!(shapley_exact(&table, 2), Err(Error::Usage(_))));
    }

    #[test]
    fn report_exposes_both_difference_columns() {
        let table = CoalitionValueTable::from_values(&[0.0, 1.0, 2.0, 5.0]);
        let r = shapley_exact(&table, 2).unwrap();
        assert_eq!(r.single_gain, vec![1.0, 2.0]);
        assert_eq!(r.leave_one_out, vec![3.0, 4.0]);
        assert_eq!((r.baseline, r.full), (0.0, 5.0));
    }
}
