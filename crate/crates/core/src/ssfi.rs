//! Shapley strategy feature importance.
//!
//! Attributes the action probabilities of a strategy at one infoset to the
//! features of that infoset. Features of the target are swapped in one at a
//! time, in random order, into a randomly drawn alternative infoset with the
//! same action set, and the change in the strategy is credited to the swapped
//! feature. Pools are uniform over distinct infosets and match feature values
//! exactly; an empty pool contributes the baseline φ₀ instead.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abstraction::TargetFeatures;
use crate::error::{Error, Result};
use crate::features::{ActionSignature, FeatureId, FeatureModel, FeatureSubset, FeatureVector};
use crate::game::{InfosetKey, Player};
use crate::profile::TabularPolicy;
use crate::rng::{self, Stream};
use crate::tree::GameTree;

pub const SSFI_SCHEMA_VERSION: u32 = 1;

/// Repetitions per independently seeded chunk of the sampled estimator.
const CHUNK: u64 = 1 << 14;

/// Upper bound on pool lookups [`ssfi_exact`] will perform.
const EXACT_LOOKUP_LIMIT: u64 = 50_000_000;

/// Target-player infosets grouped for pool queries.
#[derive(Debug, Clone)]
pub struct InfosetIndex {
    player: Player,
    names: Vec<&'static str>,
    keys: Vec<InfosetKey>,
    labels: Vec<Vec<String>>,
    by_key: HashMap<InfosetKey, u32>,
    features: TargetFeatures,
    by_action_set: BTreeMap<ActionSignature, Vec<u32>>,
}

/// Pools for one fixed set of constrained features.
#[derive(Debug, Clone)]
pub struct PartialIndex {
    mask: FeatureSubset,
    pools: HashMap<(ActionSignature, Vec<i64>), Vec<u32>>,
}

impl PartialIndex {
    fn key(&self, signature: ActionSignature, values: &FeatureVector) -> (ActionSignature, Vec<i64>) {
        (signature, self.mask.ids().map(|id| values.get(id)).collect())
    }

    /// Infosets with action set `signature` whose constrained features
    /// equal those of `values`.
    pub fn pool(&self, signature: ActionSignature, values: &FeatureVector) -> &[u32] {
        self.pools
            .get(&self.key(signature, values))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

impl InfosetIndex {
    pub fn build(tree: &GameTree, model: &dyn FeatureModel) -> Result<Self> {
        let features = TargetFeatures::compute(tree, model)?;
        let player = features.player;
        let infosets = tree.infosets(player);
        let mut by_action_set: BTreeMap<ActionSignature, Vec<u32>> = BTreeMap::new();
        for (i, sig) in features.signatures.iter().enumerate() {
            by_action_set.entry(*sig).or_default().push(i as u32);
        }
        Ok(InfosetIndex {
            player,
            names: model.feature_names().to_vec(),
            keys: infosets.iter().map(|i| i.key.clone()).collect(),
            labels: (0..infosets.len()).map(|i| tree.action_labels(player, i).to_vec()).collect(),
            by_key: infosets
                .iter()
                .enumerate()
                .map(|(i, info)| (info.key.clone(), i as u32))
                .collect(),
            features,
            by_action_set,
        })
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn feature_names(&self) -> &[&'static str] {
        &self.names
    }

    pub fn num_features(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, infoset: u32) -> &InfosetKey {
        &self.keys[infoset as usize]
    }

    pub fn lookup(&self, key: &InfosetKey) -> Option<u32> {
        self.by_key.get(key).copied()
    }

    pub fn signature(&self, infoset: u32) -> ActionSignature {
        self.features.signatures[infoset as usize]
    }

    pub fn features(&self, infoset: u32) -> &FeatureVector {
        &self.features.features[infoset as usize]
    }

    pub fn action_labels(&self, infoset: u32) -> &[String] {
        &self.labels[infoset as usize]
    }

    pub fn by_action_set(&self) -> &BTreeMap<ActionSignature, Vec<u32>> {
        &self.by_action_set
    }

    pub fn action_set(&self, signature: ActionSignature) -> &[u32] {
        self.by_action_set
            .get(&signature)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn partial(&self, mask: FeatureSubset) -> PartialIndex {
        let mut index = PartialIndex {
            mask,
            pools: HashMap::new(),
        };
        for i in 0..self.keys.len() as u32 {
            let key = index.key(self.signature(i), self.features(i));
            index.pools.entry(key).or_default().push(i);
        }
        index
    }

    /// Infosets with action set `signature` matching every constraint.
    pub fn query(&self, signature: ActionSignature, constraints: &[(FeatureId, i64)]) -> Vec<u32> {
        self.action_set(signature)
            .iter()
            .copied()
            .filter(|&i| {
                let f = self.features(i);
                constraints.iter().all(|&(id, v)| f.get(id) == v)
            })
            .collect()
    }

    /// Infosets indistinguishable from `infoset` by action set and all
    /// features.
    pub fn observation_class(&self, infoset: u32) -> Vec<u32> {
        let f = self.features(infoset);
        self.action_set(self.signature(infoset))
            .iter()
            .copied()
            .filter(|&i| self.features(i) == f)
            .collect()
    }

    fn check_feature_set(&self, set: FeatureSubset) -> Result<()> {
        if set.is_empty() {
            return Err(Error::usage("ssfi needs at least one feature"));
        }
        if !set.is_subset_of(FeatureSubset::full(self.num_features())) {
            return Err(Error::usage(format!(
                "feature set {} exceeds the {} features of this game",
                set,
                self.num_features()
            )));
        }
        Ok(())
    }

    /// Features in `set` that are a function of the action set and the other
    /// features in `set`, across all infosets with the action set of
    /// `infoset`.
    pub fn derivable_features(&self, infoset: u32, set: FeatureSubset) -> Vec<FeatureId> {
        let group = self.action_set(self.signature(infoset));
        set.ids()
            .filter(|&j| {
                let others = set.without(j);
                let mut seen: HashMap<Vec<i64>, i64> = HashMap::new();
                group.iter().all(|&i| {
                    let f = self.features(i);
                    let key: Vec<i64> = others.ids().map(|id| f.get(id)).collect();
                    *seen.entry(key).or_insert(f.get(j)) == f.get(j)
                })
            })
            .collect()
    }
}

/// Build the pool index of the explained player of `tree`.
pub fn build_index(tree: &GameTree, model: &dyn FeatureModel, player: Player) -> Result<InfosetIndex> {
    if player != model.target_player() {
        return Err(Error::usage(format!(
            "features are defined for player {} only",
            model.target_player().id()
        )));
    }
    InfosetIndex::build(tree, model)
}

/// The infoset(s) being explained. All members share an action set and every
/// feature value; the explained strategy is their mean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SsfiTarget {
    members: Vec<u32>,
}

impl SsfiTarget {
    /// A single infoset.
    pub fn infoset(index: &InfosetIndex, key: &InfosetKey) -> Result<Self> {
        let i = index
            .lookup(key)
            .ok_or_else(|| Error::usage(format!("unknown infoset {key}")))?;
        Ok(SsfiTarget { members: vec![i] })
    }

    /// Every infoset observationally equal to `key`.
    pub fn observation(index: &InfosetIndex, key: &InfosetKey) -> Result<Self> {
        let i = SsfiTarget::infoset(index, key)?.members[0];
        Ok(SsfiTarget {
            members: index.observation_class(i),
        })
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    fn representative(&self) -> u32 {
        self.members[0]
    }
}

/// Shapley strategy attribution at one target.
#[derive(Debug, Clone, PartialEq)]
pub struct SsfiReport {
    pub infoset: InfosetKey,
    pub members: Vec<InfosetKey>,
    pub actions: Vec<String>,
    /// Explained features in id order, with names.
    pub features: Vec<(FeatureId, &'static str)>,
    pub phi0: Vec<f64>,
    /// One vector per entry of `features`.
    pub phi: Vec<Vec<f64>>,
    pub reconstructed: Vec<f64>,
    /// Strategy at the target (mean over members).
    pub strategy: Vec<f64>,
    pub missing_rate: f64,
    pub t1: u64,
    pub t2: u64,
    pub seed: Option<u64>,
    pub exact: bool,
    /// Explained features determined by the action set and the others.
    pub derivable: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsfiDocument {
    pub schema_version: u32,
    pub infoset: InfosetKey,
    pub members: Vec<InfosetKey>,
    pub actions: Vec<String>,
    pub phi0: Vec<f64>,
    pub phi: BTreeMap<String, Vec<f64>>,
    pub reconstructed: Vec<f64>,
    pub strategy: Vec<f64>,
    pub missing_rate: f64,
    pub t1: u64,
    pub t2: u64,
    pub seed: Option<u64>,
    pub method: String,
    pub derivable_features: Vec<String>,
}

impl SsfiReport {
    pub fn phi_of(&self, name: &str) -> Option<&[f64]> {
        self.features
            .iter()
            .position(|(_, n)| *n == name)
            .map(|p| self.phi[p].as_slice())
    }

    pub fn to_document(&self) -> SsfiDocument {
        SsfiDocument {
            schema_version: SSFI_SCHEMA_VERSION,
            infoset: self.infoset.clone(),
            members: self.members.clone(),
            actions: self.actions.clone(),
            phi0: self.phi0.clone(),
            phi: self
                .features
                .iter()
                .zip(&self.phi)
                .map(|((_, name), v)| (name.to_string(), v.clone()))
                .collect(),
            reconstructed: self.reconstructed.clone(),
            strategy: self.strategy.clone(),
            missing_rate: self.missing_rate,
            t1: self.t1,
            t2: self.t2,
            seed: self.seed,
            method: if self.exact { "exact" } else { "sampled" }.to_string(),
            derivable_features: self.derivable.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Percentages with one decimal, one row per term, one column per action.
    pub fn render_table(&self, action_header: &str) -> String {
        let mut rows: Vec<(String, Vec<String>)> = Vec::new();
        let pct = |x: f64| format!("{:.1}%", 100.0 * x);
        let signed = |x: f64| format!("{:+.1}%", 100.0 * x);
        rows.push(("phi_0".into(), self.phi0.iter().map(|&x| pct(x)).collect()));
        for ((_, name), v) in self.features.iter().zip(&self.phi) {
            rows.push((format!("phi_{name}"), v.iter().map(|&x| signed(x)).collect()));
        }
        rows.push(("sum".into(), self.reconstructed.iter().map(|&x| pct(x)).collect()));
        rows.push(("sigma".into(), self.strategy.iter().map(|&x| pct(x)).collect()));

        let headers: Vec<String> = self
            .actions
            .iter()
            .map(|a| format!("{action_header}{a}"))
            .collect();
        let first = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let widths: Vec<usize> = (0..headers.len())
            .map(|c| {
                rows.iter()
                    .map(|r| r.1[c].len())
                    .chain([headers[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let _ = write!(out, "{:first$}", "");
        for (h, w) in headers.iter().zip(&widths) {
            let _ = write!(out, "  {h:>w$}");
        }
        out.push('\n');
        for (label, cells) in &rows {
            let _ = write!(out, "{label:first$}");
            for (c, w) in cells.iter().zip(&widths) {
                let _ = write!(out, "  {c:>w$}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "missing rate: {:.3}%", 100.0 * self.missing_rate);
        out
    }
}

/// Shared setup of the sampled and exact estimators.
struct Problem<'a> {
    policy: &'a TabularPolicy,
    index: &'a InfosetIndex,
    target: &'a SsfiTarget,
    set: FeatureSubset,
    order: Vec<FeatureId>,
    group: &'a [u32],
    signature: ActionSignature,
    pools: PartialIndex,
    n: usize,
}

impl<'a> Problem<'a> {
    fn new(
        policy: &'a TabularPolicy,
        index: &'a InfosetIndex,
        target: &'a SsfiTarget,
        set: FeatureSubset,
    ) -> Result<Self> {
        index.check_feature_set(set)?;
        if target.members.is_empty() {
            return Err(Error::usage("empty ssfi target"));
        }
        let rep = target.representative();
        let signature = index.signature(rep);
        if target
            .members
            .iter()
            .any(|&i| index.signature(i) != signature || index.features(i) != index.features(rep))
        {
            return Err(Error::usage("ssfi target members are not observationally equal"));
        }
        if policy.num_infosets(index.player) != index.len() {
            return Err(Error::usage("policy and infoset index describe different games"));
        }
        Ok(Problem {
            policy,
            index,
            target,
            set,
            order: set.ids().collect(),
            group: index.action_set(signature),
            signature,
            pools: index.partial(set),
            n: index.action_labels(rep).len(),
        })
    }

    fn sigma(&self, infoset: u32) -> &[f64] {
        self.policy.get(self.index.player, infoset as usize)
    }

    fn mean_over(&self, infosets: &[u32]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &i in infosets {
            for (o, p) in out.iter_mut().zip(self.sigma(i)) {
                *o += p;
            }
        }
        let len = infosets.len() as f64;
        out.iter_mut().for_each(|o| *o /= len);
        out
    }

    fn target_features(&self) -> &FeatureVector {
        self.index.features(self.target.representative())
    }

    /// Feature vector taking the target's values on `from_target` and the
    /// alternative's elsewhere.
    fn mix(&self, alt: u32, from_target: FeatureSubset) -> FeatureVector {
        let mut v = self.index.features(alt).clone();
        let t = self.target_features();
        for id in from_target.ids() {
            v.0[id.index()] = t.get(id);
        }
        v
    }

    fn pool(&self, values: &FeatureVector) -> &[u32] {
        self.pools.pool(self.signature, values)
    }

    fn report(
        &self,
        phi0: Vec<f64>,
        phi: Vec<Vec<f64>>,
        missing_rate: f64,
        sampling: Option<(u64, u64, u64)>,
    ) -> SsfiReport {
        let mut reconstructed = phi0.clone();
        for v in &phi {
            for (r, x) in reconstructed.iter_mut().zip(v) {
                *r += x;
            }
        }
        let names = self.index.feature_names();
        let rep = self.target.representative();
        let (t1, t2, seed) = match sampling {
            Some((t1, t2, seed)) => (t1, t2, Some(seed)),
            None => (0, 0, None),
        };
        SsfiReport {
            infoset: self.index.key(rep).clone(),
            members: self.target.members.iter().map(|&i| self.index.key(i).clone()).collect(),
            actions: self.index.action_labels(rep).to_vec(),
            features: self.order.iter().map(|&id| (id, names[id.index()])).collect(),
            phi0,
            phi,
            reconstructed,
            strategy: self.mean_over(&self.target.members),
            missing_rate,
            t1,
            t2,
            seed,
            exact: sampling.is_none(),
            derivable: self
                .index
                .derivable_features(rep, self.set)
                .into_iter()
                .map(|id| names[id.index()])
                .collect(),
        }
    }
}

fn pick(rng: &mut ChaCha8Rng, items: &[u32]) -> u32 {
    items[rng.random_range(0..items.len())]
}

/// Sampled SSFI with `t1` baseline draws and `t2` permutation samples.
///
/// Each repetition draws one alternative and one feature order, then one
/// infoset from each of the m+1 pools along that order; the draw from a
/// pool serves both adjacent features. Repetitions run in chunks with their
/// own derived streams and are summed in chunk order, so the result is
/// independent of the thread count.
pub fn ssfi(
    policy: &TabularPolicy,
    index: &InfosetIndex,
    target: &SsfiTarget,
    feature_set: FeatureSubset,
    t1: u64,
    t2: u64,
    seed: u64,
) -> Result<SsfiReport> {
    if t1 == 0 || t2 == 0 {
        return Err(Error::usage("ssfi sample counts t1 and t2 must be positive"));
    }
    let problem = Problem::new(policy, index, target, feature_set)?;
    let n = problem.n;
    let m = problem.order.len();

    let mut rng = rng::stream(seed, Stream::SsfiBaseline);
    let mut phi0 = vec![0.0; n];
    for _ in 0..t1 {
        let i = pick(&mut rng, problem.group);
        for (o, p) in phi0.iter_mut().zip(problem.sigma(i)) {
            *o += p;
        }
    }
    phi0.iter_mut().for_each(|x| *x /= t1 as f64);

    let chunks = t2.div_ceil(CHUNK);
    let partials: Vec<(Vec<f64>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let reps = CHUNK.min(t2 - c * CHUNK);
            sample_chunk(&problem, &phi0, seed, c, reps)
        })
        .collect();
    let mut sums = vec![0.0; m * n];
    let mut empties = 0u64;
    for (part, e) in partials {
        for (s, x) in sums.iter_mut().zip(part) {
            *s += x;
        }
        empties += e;
    }
    let phi = sums
        .chunks(n)
        .map(|s| s.iter().map(|x| x / t2 as f64).collect())
        .collect();
    let missing_rate = empties as f64 / (2 * m as u64 * t2) as f64;
    Ok(problem.report(phi0, phi, missing_rate, Some((t1, t2, seed))))
}

fn sample_chunk(problem: &Problem, phi0: &[f64], seed: u64, chunk: u64, reps: u64) -> (Vec<f64>, u64) {
    let n = problem.n;
    let m = problem.order.len();
    let mut rng = rng::stream(seed, Stream::SsfiChunk(chunk));
    let mut sums = vec![0.0; m * n];
    let mut empties = 0u64;
    // position in `problem.order` for each step of the permutation
    let mut perm: Vec<usize> = (0..m).collect();
    let target = problem.target_features();
    for _ in 0..reps {
        let alt = pick(&mut rng, problem.group);
        perm.shuffle(&mut rng);
        let mut values = problem.index.features(alt).clone();
        // the all-alternative pool always contains `alt`
        let mut prev: &[f64] = problem.sigma(pick(&mut rng, problem.pool(&values)));
        let mut prev_empty = false;
        for &pos in &perm {
            let id = problem.order[pos];
            values.0[id.index()] = target.get(id);
            let pool = problem.pool(&values);
            let (next, next_empty) = if pool.is_empty() {
                (phi0, true)
            } else {
                (problem.sigma(pick(&mut rng, pool)), false)
            };
            let row = &mut sums[pos * n..(pos + 1) * n];
            for a in 0..n {
                row[a] += next[a] - prev[a];
            }
            empties += u64::from(next_empty) + u64::from(prev_empty);
            prev = next;
            prev_empty = next_empty;
        }
    }
    (sums, empties)
}

/// Exact expectation of the sampled estimator: all alternatives, all
/// feature orders and uniform averages over every pool, with the exact
/// baseline. Cost grows with the action-set group times 2^m.
pub fn ssfi_exact(
    policy: &TabularPolicy,
    index: &InfosetIndex,
    target: &SsfiTarget,
    feature_set: FeatureSubset,
) -> Result<SsfiReport> {
    let problem = Problem::new(policy, index, target, feature_set)?;
    let n = problem.n;
    let m = problem.order.len();
    let lookups = (problem.group.len() as u64).saturating_mul(1 << m);
    if lookups > EXACT_LOOKUP_LIMIT {
        return Err(Error::Resource(format!(
            "exact ssfi would need {lookups} pool lookups (limit {EXACT_LOOKUP_LIMIT})"
        )));
    }
    let phi0 = problem.mean_over(problem.group);

    // Alternatives with equal explained features behave identically.
    let mut alt_classes: BTreeMap<Vec<i64>, (u32, u64)> = BTreeMap::new();
    for &i in problem.group {
        let f = problem.index.features(i);
        let key: Vec<i64> = problem.order.iter().map(|&id| f.get(id)).collect();
        alt_classes.entry(key).or_insert((i, 0)).1 += 1;
    }

    let mut fact = vec![1.0f64; m + 1];
    for i in 1..=m {
        fact[i] = fact[i - 1] * i as f64;
    }
    let total = problem.group.len() as f64;
    let mut phi = vec![vec![0.0; n]; m];
    let mut missing = 0.0;
    for &(alt, count) in alt_classes.values() {
        let share = count as f64 / total;
        // pool mean for each subset of explained features taken from the
        // target, indexed by mask over positions in `order`
        let means: Vec<Option<Vec<f64>>> = (0..1u32 << m)
            .map(|mask| {
                let from_target = FeatureSubset::from_ids(
                    (0..m).filter(|p| mask & (1 << p) != 0).map(|p| problem.order[p]),
                );
                let pool = problem.pool(&problem.mix(alt, from_target));
                (!pool.is_empty()).then(|| problem.mean_over(pool))
            })
            .collect();
        for (pos, row) in phi.iter_mut().enumerate() {
            let bit = 1u32 << pos;
            for mask in (0..1u32 << m).filter(|mask| mask & bit == 0) {
                let size = mask.count_ones() as usize;
                let w = share * fact[size] * fact[m - size - 1] / fact[m];
                let with = means[(mask | bit) as usize].as_deref();
                let without = means[mask as usize].as_deref();
                missing += w * (f64::from(with.is_none() as u8) + f64::from(without.is_none() as u8));
                let with = with.unwrap_or(&phi0);
                let without = without.unwrap_or(&phi0);
                for a in 0..n {
                    row[a] += w * (with[a] - without[a]);
                }
            }
        }
    }
    let missing_rate = missing / (2 * m) as f64;
    Ok(problem.report(phi0, phi, missing_rate, None))
}
