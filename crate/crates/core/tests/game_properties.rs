use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapgame::eval::{best_response, expected_value};
use shapgame::goofspiel::{GoofspielConfig, GoofspielState, UtilityMode};
use shapgame::tree::NodeKind;
use shapgame::{ActionId, GameState, GameTree, InfosetKey, Player, TabularPolicy};

/// Walk every history of the game directly on states, collecting each
/// infoset's action labels and the total terminal reach.
fn walk<S: GameState>(
    state: &S,
    reach: f64,
    infosets: &mut [HashMap<InfosetKey, Vec<String>>; 2],
    terminal_reach: &mut f64,
) {
    if state.is_terminal() {
        assert_eq!(state.utility(Player::One), -state.utility(Player::Two));
        *terminal_reach += reach;
        return;
    }
    let n = state.num_actions();
    let labels: Vec<String> = (0..n).map(|a| state.action_label(ActionId(a))).collect();
    let player = state.current_player();
    let probs = if player == Player::Chance {
        let p = state.chance_probabilities();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        p
    } else {
        let key = state.infoset_key(player).unwrap();
        let previous = infosets[player.index()].insert(key.clone(), labels.clone());
        if let Some(previous) = previous {
            assert_eq!(previous, labels, "labels differ within {key}");
        }
        vec![1.0 / n as f64; n]
    };
    for (a, p) in probs.into_iter().enumerate() {
        walk(&state.apply(ActionId(a)).unwrap(), reach * p, infosets, terminal_reach);
    }
}

fn goofspiel(k: u8, mode: UtilityMode) -> GoofspielConfig {
    GoofspielConfig::new(k).unwrap().with_utility_mode(mode)
}

#[test]
fn tree_infosets_match_direct_enumeration() {
    for k in 2..=4 {
        let config = goofspiel(k, UtilityMode::Differential);
        let mut infosets = [HashMap::new(), HashMap::new()];
        let mut reach = 0.0;
        walk(&GoofspielState::new(config), 1.0, &mut infosets, &mut reach);
        assert!((reach - 1.0).abs() < 1e-9);

        let tree = GameTree::build(&config).unwrap();
        for player in Player::STRATEGIC {
            let expected = &infosets[player.index()];
            assert_eq!(tree.num_infosets(player), expected.len(), "k={k} player {player}");
            for (key, n) in tree.enumerate_infosets(player) {
                let labels = &expected[&key];
                assert_eq!(labels.len(), n);
                let index = tree.infoset_index(player, &key).unwrap();
                assert_eq!(tree.action_labels(player, index), labels.as_slice());
            }
        }
    }
}

#[test]
fn kuhn_has_twelve_infosets() {
    let mut infosets = [HashMap::new(), HashMap::new()];
    let mut reach = 0.0;
    walk(&shapgame::Game::initial_state(&shapgame::kuhn::Kuhn), 1.0, &mut infosets, &mut reach);
    assert_eq!(infosets[0].len(), 6);
    assert_eq!(infosets[1].len(), 6);
    assert!((reach - 1.0).abs() < 1e-12);
}

#[test]
fn tree_terminal_reach_sums_to_one() {
    let tree = GameTree::build(&goofspiel(4, UtilityMode::Differential)).unwrap();
    let mut reach = vec![0.0; tree.len()];
    reach[GameTree::ROOT] = 1.0;
    let mut total = 0.0;
    for i in 0..tree.len() {
        let node = tree.node(i);
        match node.kind {
            NodeKind::Terminal => total += reach[i],
            NodeKind::Chance => {
                for (c, p) in node.children().zip(tree.chance_probs(i)) {
                    reach[c] += reach[i] * p;
                }
            }
            NodeKind::Decision(_) => {
                let n = node.num_children() as f64;
                for c in node.children() {
                    reach[c] += reach[i] / n;
                }
            }
        }
    }
    assert!((total - 1.0).abs() < 1e-9);
}

fn random_policy(tree: &GameTree, seed: u64) -> TabularPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = TabularPolicy::uniform(tree);
    for player in Player::STRATEGIC {
        for i in 0..tree.num_infosets(player) {
            let probs = policy.get_mut(player, i);
            let raw: Vec<f64> = probs.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
            let sum: f64 = raw.iter().sum();
            for (p, r) in probs.iter_mut().zip(raw) {
                *p = r / sum;
            }
        }
    }
    policy
}

#[test]
fn uniform_play_is_fair() {
    for mode in [UtilityMode::Differential, UtilityMode::WinLoss] {
        for k in 2..=4 {
            let tree = GameTree::build(&goofspiel(k, mode)).unwrap();
            let v = expected_value(&tree, &TabularPolicy::uniform(&tree), Player::One);
            assert!(v.abs() < 1e-12, "k={k} {mode:?}: {v}");
        }
    }
}

#[test]
fn best_response_profile_attains_best_response_value() {
    let tree = GameTree::build(&goofspiel(3, UtilityMode::Differential)).unwrap();
    let uniform = TabularPolicy::uniform(&tree);
    let br = best_response(&tree, &uniform, Player::One);
    let profile = br.as_policy(&uniform);
    assert!((expected_value(&tree, &profile, Player::One) - br.value).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_playouts_are_zero_sum(k in 2u8..=5, seed in any::<u64>(), win_loss in any::<bool>()) {
        let mode = if win_loss { UtilityMode::WinLoss } else { UtilityMode::Differential };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = GoofspielState::new(goofspiel(k, mode));
        while !state.is_terminal() {
            let a = rng.random_range(0..state.num_actions());
            state = state.apply(ActionId(a)).unwrap();
        }
        let (u1, u2) = (state.utility(Player::One), state.utility(Player::Two));
        prop_assert_eq!(u1 + u2, 0.0);
        let diff = f64::from(state.points(Player::One) - state.points(Player::Two));
        match mode {
            UtilityMode::Differential => prop_assert_eq!(u1, diff),
            UtilityMode::WinLoss => prop_assert_eq!(u1, diff.signum() * f64::from(diff != 0.0)),
        }
    }

    #[test]
    fn values_are_antisymmetric_and_deterministic(k in 2u8..=3, seed in any::<u64>()) {
        let tree = GameTree::build(&goofspiel(k, UtilityMode::Differential)).unwrap();
        let policy = random_policy(&tree, seed);
        let v1 = expected_value(&tree, &policy, Player::One);
        let v2 = expected_value(&tree, &policy, Player::Two);
        prop_assert!((v1 + v2).abs() < 1e-9);
        prop_assert_eq!(v1.to_bits(), expected_value(&tree, &policy, Player::One).to_bits());
        // a best response is at least as good as the strategy it replaces
        let b1 = best_response(&tree, &policy, Player::One).value;
        let b2 = best_response(&tree, &policy, Player::Two).value;
        prop_assert!(b1 >= v1 - 1e-9 && b2 >= v2 - 1e-9);
        // symmetric game with value 0
        prop_assert!(b1 + b2 >= -1e-9);
    }
}
