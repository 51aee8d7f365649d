use shapgame::abstraction::SlotMap;
use shapgame::eval::NashValue;
use shapgame::game_config::{slot_map, solve};
use shapgame::solver::{
    log_schedule, solve_on_tree, Algorithm, Averaging, ExternalSampling, SolverConfig,
};
use shapgame::tree::NodeKind;
use shapgame::{FeatureSubset, GameConfig, GameTree, Player};

fn check_traversal(tree: &GameTree, counts: &[u32], traverser: Player) {
    assert_eq!(counts[GameTree::ROOT], 1);
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        assert_eq!(c, 1, "node {i} entered twice in one traversal");
        let node = tree.node(i);
        let entered = node.children().filter(|&ch| counts[ch] > 0).count();
        match node.kind {
            NodeKind::Terminal => {}
            NodeKind::Decision(p) if p == traverser => assert_eq!(entered, node.num_children()),
            _ => assert_eq!(entered, 1, "node {i} must sample one child"),
        }
    }
}

#[test]
fn external_sampling_explores_own_actions_and_samples_the_rest() {
    for game in [GameConfig::kuhn(), GameConfig::goofspiel(3).unwrap()] {
        let tree = game.build_tree().unwrap();
        let slots = SlotMap::identity(&tree);
        for seed in 0..20 {
            for traverser in Player::STRATEGIC {
                let mut solver = ExternalSampling::new(&tree, &slots, seed, Averaging::OpponentSampled);
                // warm up so strategies are no longer uniform
                for t in 1..=50 {
                    solver.traverse(if t % 2 == 1 { Player::One } else { Player::Two });
                }
                solver.record_visits();
                solver.traverse(traverser);
                check_traversal(&tree, solver.visit_counts().unwrap(), traverser);
            }
        }
    }
}

#[test]
fn same_seed_gives_bit_identical_profiles() {
    let game = GameConfig::goofspiel(3).unwrap();
    let config = SolverConfig::new(Algorithm::ExternalMccfr, 20_000, 11);
    let (a, log_a) = solve(&game, &config).unwrap();
    let (b, log_b) = solve(&game, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(log_a.to_csv(), log_b.to_csv());
    let (c, _) = solve(&game, &SolverConfig::new(Algorithm::ExternalMccfr, 20_000, 12)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn exploitability_falls_over_a_run() {
    let cases = [
        (GameConfig::kuhn(), Algorithm::VanillaCfr, 2_000),
        (GameConfig::kuhn(), Algorithm::ExternalMccfr, 50_000),
        (GameConfig::goofspiel(3).unwrap(), Algorithm::VanillaCfr, 500),
        (GameConfig::goofspiel(3).unwrap(), Algorithm::ExternalMccfr, 50_000),
    ];
    for (game, algorithm, iterations) in cases {
        let config = SolverConfig::new(algorithm, iterations, 3).with_schedule(log_schedule(iterations));
        let (_, log) = solve(&game, &config).unwrap();
        for player in Player::STRATEGIC {
            let first = log.first(player).unwrap().exploitability;
            let last = log.last(player).unwrap().exploitability;
            assert!(last < first, "{} {algorithm:?}: {first} -> {last}", game.describe());
        }
    }
}

#[test]
fn abstracted_infosets_share_one_strategy() {
    let game = GameConfig::goofspiel(3).unwrap();
    let tree = game.build_tree().unwrap();
    let target = game.target_player();
    for mask in [0b0000, 0b0001, 0b0110, 0b1111] {
        let subset = FeatureSubset(mask);
        let slots = slot_map(&game, &tree, Some(subset)).unwrap();
        let config = SolverConfig::new(Algorithm::ExternalMccfr, 5_000, 1).with_abstraction(subset);
        let out = solve_on_tree(&tree, &slots, &config, NashValue::exact(0.0)).unwrap();
        for class in slots.classes(target) {
            let first = out.policy.get(target, class[0]);
            for &i in &class[1..] {
                assert_eq!(out.policy.get(target, i), first);
            }
        }
        // the opponent is never abstracted
        assert_eq!(slots.num_slots(target.opponent()), tree.num_infosets(target.opponent()));
    }
}

#[test]
fn full_feature_abstraction_still_reaches_equilibrium() {
    let game = GameConfig::goofspiel(3).unwrap();
    let config = SolverConfig::new(Algorithm::VanillaCfr, 2_000, 0).with_abstraction(FeatureSubset::full(4));
    let (_, log) = solve(&game, &config).unwrap();
    let eps = log.last(Player::One).unwrap().exploitability;
    assert!(eps < 0.02, "eps1 under the full feature set: {eps}");
}

#[test]
fn traverser_reach_averaging_is_selectable() {
    let game = GameConfig::kuhn();
    let mut config = SolverConfig::new(Algorithm::ExternalMccfr, 20_000, 5);
    config.averaging = Averaging::TraverserReach;
    let (profile, _) = solve(&game, &config).unwrap();
    let (default, _) = solve(&game, &SolverConfig::new(Algorithm::ExternalMccfr, 20_000, 5)).unwrap();
    assert_ne!(profile, default);
}
