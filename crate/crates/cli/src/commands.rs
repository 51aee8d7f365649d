use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use shapgame::eval::{self, ExploitabilityReport};
use shapgame::features::{FeatureModel, FeatureSubset};
use shapgame::game_config::{slot_map, GameDescriptor};
use shapgame::profile::{StrategyDocument, TabularPolicy};
use shapgame::sgfi::{self, SgfiRun};
use shapgame::solver::{self, ConvergenceLog};
use shapgame::ssfi::{self, SsfiReport};
use shapgame::{GameConfig, GameTree, Player};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{OutputDir, RunManifest};
use crate::selector;

pub const STRATEGY_FILE: &str = "strategy.json";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const SGFI_FILE: &str = "sgfi_report.json";
pub const SSFI_FILE: &str = "ssfi_report.json";
pub const SSFI_TABLE_FILE: &str = "ssfi_table.txt";
pub const EXPLOITABILITY_FILE: &str = "exploitability.json";
pub const INFOSETS_FILE: &str = "infosets.json";
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Everything a command needs besides its own section of the config.
pub struct Run {
    pub config: ExperimentConfig,
    pub out: OutputDir,
    pub quiet: bool,
}

impl Run {
    pub fn new(mut config: ExperimentConfig, out_flag: Option<PathBuf>, quiet: bool) -> Result<Self, CliError> {
        let root = config.resolve_out_dir(out_flag);
        let mut out = OutputDir::create(root)?;
        out.write(CONFIG_FILE, config.to_toml().as_bytes())?;
        Ok(Run { config, out, quiet })
    }

    fn say(&self, text: impl AsRef<str>) {
        if !self.quiet {
            // a closed pipe (e.g. `| head`) is not an error
            let _ = writeln!(std::io::stdout().lock(), "{}", text.as_ref());
        }
    }

    fn finish(self, command: &str, summary: Value) -> Result<RunManifest, CliError> {
        let config = serde_json::to_value(&self.config).map_err(shapgame::Error::from)?;
        let root = self.out.root().display().to_string();
        let quiet = self.quiet;
        let manifest = self.out.finish(command, self.config.seed, config, summary)?;
        if !quiet {
            let _ = writeln!(
                std::io::stdout().lock(),
                "wrote {} files to {root}",
                manifest.outputs.len() + 1
            );
        }
        Ok(manifest)
    }
}

fn exploitability_json(report: &ExploitabilityReport, values: [f64; 2]) -> Value {
    json!({
        "eps1": report.eps1,
        "eps2": report.eps2,
        "avg": report.avg,
        "v_star": report.v_star,
        "nash_tolerance": report.tolerance,
        "best_response_values": report.best_response_values,
        "expected_value": values,
    })
}

fn evaluate(tree: &GameTree, game: &GameConfig, policy: &TabularPolicy) -> Value {
    let report = eval::exploitability(tree, policy, game.nash_value());
    let values = [
        eval::expected_value(tree, policy, Player::One),
        eval::expected_value(tree, policy, Player::Two),
    ];
    exploitability_json(&report, values)
}

pub fn solve(mut run: Run) -> Result<RunManifest, CliError> {
    let game = run.config.game()?;
    let solver_config = run.config.solver_config()?;
    let subset = run.config.abstraction()?;
    let tree = run.out.timed("build", || game.build_tree())?;
    let slots = slot_map(&game, &tree, subset)?;
    let output = run.out.timed("solve", || {
        solver::solve_on_tree(&tree, &slots, &solver_config, game.nash_value())
    })?;
    let final_report = run.out.timed("evaluate", || evaluate(&tree, &game, &output.policy));

    let document = StrategyDocument::new(game.descriptor(), &output.policy.to_profile(&tree));
    run.out.write_json(STRATEGY_FILE, &document)?;
    run.out.write(CONVERGENCE_FILE, output.log.to_csv().as_bytes())?;

    run.say(format!(
        "{} {:?} {} iterations: eps1 {:.6} eps2 {:.6} avg {:.6}",
        game.describe(),
        solver_config.algorithm,
        solver_config.iterations,
        final_report["eps1"].as_f64().unwrap_or(f64::NAN),
        final_report["eps2"].as_f64().unwrap_or(f64::NAN),
        final_report["avg"].as_f64().unwrap_or(f64::NAN),
    ));
    let summary = json!({
        "game": game.descriptor(),
        "iterations": solver_config.iterations,
        "abstraction": subset.map(|s| s.label(game.require_features().map(|m| m.feature_names()).unwrap_or(&[]))),
        "exploitability": final_report,
    });
    run.finish("solve", summary)
}

/// One row of a coalition convergence CSV: the target player's exact
/// expected return and exploitability at a checkpoint.
fn coalition_csv(log: &ConvergenceLog, player: Player) -> String {
    let mut out = String::from("iteration,expected_value,exploitability,schema_version\n");
    for p in log.for_player(player) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.iteration,
            p.expected_value,
            p.exploitability,
            solver::CONVERGENCE_SCHEMA_VERSION
        );
    }
    out
}

#[derive(Serialize)]
struct SgfiDocument {
    schema_version: u32,
    game: GameDescriptor,
    target_player: u8,
    master_seed: u64,
    iterations: u64,
    replicates: u64,
    features: Vec<String>,
    phi: BTreeMap<String, f64>,
    stddev: BTreeMap<String, f64>,
    baseline: f64,
    full: f64,
    /// v({j}) − v(∅)
    single_gain: BTreeMap<String, f64>,
    /// v(M) − v(M ∖ {j})
    leave_one_out: BTreeMap<String, f64>,
    coalitions: BTreeMap<String, f64>,
    coalition_stddev: BTreeMap<String, f64>,
    replicate_reports: Vec<Value>,
}

fn by_name(names: &[&str], values: &[f64]) -> BTreeMap<String, f64> {
    names.iter().map(|n| n.to_string()).zip(values.iter().copied()).collect()
}

fn sgfi_document(game: &GameConfig, names: &[&str], iterations: u64, run: &SgfiRun) -> SgfiDocument {
    let label = |s: FeatureSubset| s.label(names);
    let coalition_map = |values: &[f64]| -> BTreeMap<String, f64> {
        FeatureSubset::all(run.num_features)
            .map(label)
            .zip(values.iter().copied())
            .collect()
    };
    SgfiDocument {
        schema_version: REPORT_SCHEMA_VERSION,
        game: game.descriptor(),
        target_player: run.target_player.id(),
        master_seed: run.master_seed,
        iterations,
        replicates: run.replicates.len() as u64,
        features: names.iter().map(|n| n.to_string()).collect(),
        phi: by_name(names, &run.mean.phi),
        stddev: by_name(names, &run.phi_stddev),
        baseline: run.mean.baseline,
        full: run.mean.full,
        single_gain: by_name(names, &run.mean.single_gain),
        leave_one_out: by_name(names, &run.mean.leave_one_out),
        coalitions: coalition_map(&run.coalition_means),
        coalition_stddev: coalition_map(&run.coalition_stddev),
        replicate_reports: run
            .replicates
            .iter()
            .map(|r| {
                let coalitions: BTreeMap<String, Value> = r
                    .table
                    .entries()
                    .map(|(s, e)| (label(s), serde_json::to_value(e).unwrap_or(Value::Null)))
                    .collect();
                json!({
                    "replicate": r.index,
                    "phi": by_name(names, &r.report.phi),
                    "baseline": r.report.baseline,
                    "full": r.report.full,
                    "single_gain": by_name(names, &r.report.single_gain),
                    "leave_one_out": by_name(names, &r.report.leave_one_out),
                    "coalitions": coalitions,
                })
            })
            .collect(),
    }
}

pub fn sgfi(mut run: Run) -> Result<RunManifest, CliError> {
    let game = run.config.game()?;
    let model = game.require_features()?;
    let names = model.feature_names();
    let solver_config = run.config.solver_config()?;
    let replicates = run.config.sgfi.replicates;
    let result = run.out.timed("coalition_solves", || {
        sgfi::run_sgfi(&game, &solver_config, replicates)
    })?;

    for r in &result.replicates {
        for (mask, log) in r.logs.iter().enumerate() {
            let name = format!(
                "coalitions/r{}/{}.csv",
                r.index,
                FeatureSubset(mask as u32).label(names)
            );
            run.out.write(&name, coalition_csv(log, result.target_player).as_bytes())?;
        }
    }
    let document = sgfi_document(&game, names, solver_config.iterations, &result);
    run.out.write_json(SGFI_FILE, &document)?;

    let mut table = format!(
        "{:<8} {:>9} {:>9} {:>12} {:>14}\n",
        "feature", "phi", "stddev", "v({j})-v(0)", "v(M)-v(M-{j})"
    );
    for (j, name) in names.iter().enumerate() {
        let _ = writeln!(
            table,
            "{:<8} {:>9.4} {:>9.4} {:>12.4} {:>14.4}",
            name,
            result.mean.phi[j],
            result.phi_stddev[j],
            result.mean.single_gain[j],
            result.mean.leave_one_out[j]
        );
    }
    let _ = write!(
        table,
        "v(none) = {:.4}, v(all) = {:.4}, {} replicate(s)",
        result.mean.baseline,
        result.mean.full,
        result.replicates.len()
    );
    run.say(table);
    let summary = json!({
        "game": game.descriptor(),
        "phi": document.phi,
        "stddev": document.stddev,
        "baseline": document.baseline,
        "full": document.full,
    });
    run.finish("sgfi", summary)
}

fn read_strategy(path: &Path) -> Result<StrategyDocument, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    StrategyDocument::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_policy(path: &Path, tree: &GameTree, game: &GameConfig) -> Result<TabularPolicy, CliError> {
    let document = read_strategy(path)?;
    if document.game.to_config()? != *game {
        return Err(CliError::Config(format!(
            "{} holds a strategy for {}, but the configuration selects {}",
            path.display(),
            document.game.to_config()?.describe(),
            game.describe()
        )));
    }
    let profile = document.profile()?;
    TabularPolicy::from_profile(tree, &profile)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn ssfi(mut run: Run) -> Result<RunManifest, CliError> {
    let game = run.config.game()?;
    let GameConfig::Goofspiel(goofspiel) = game else {
        return Err(CliError::Config("ssfi needs a game with features (goofspiel)".into()));
    };
    let model: &dyn FeatureModel = &goofspiel;
    let tree = run.out.timed("build", || game.build_tree())?;
    let section = run.config.ssfi.clone();
    let policy = match &section.strategy {
        Some(path) => load_policy(path, &tree, &game)?,
        None => {
            let solver_config = run.config.solver_config()?;
            let slots = slot_map(&game, &tree, None)?;
            run.out
                .timed("solve", || {
                    solver::solve_on_tree(&tree, &slots, &solver_config, game.nash_value())
                })?
                .policy
        }
    };
    let index = ssfi::build_index(&tree, model, model.target_player())?;
    let target = selector::resolve(&section.selector, &index, model, goofspiel.k)?;
    let set = FeatureSubset::parse(&section.features, model.feature_names())?;
    let seed = run.config.seed;
    let report: SsfiReport = run.out.timed("ssfi", || {
        if section.exact {
            ssfi::ssfi_exact(&policy, &index, &target, set)
        } else {
            ssfi::ssfi(&policy, &index, &target, set, section.t1, section.t2, seed)
        }
    })?;
    if !report.derivable.is_empty() {
        eprintln!(
            "warning: feature(s) {} are determined by the hand and the other explained features",
            report.derivable.join(", ")
        );
    }
    let table = report.render_table("Card ");
    run.out.write_json(SSFI_FILE, &report.to_document())?;
    run.out.write(SSFI_TABLE_FILE, table.as_bytes())?;

    let members: Vec<String> = target
        .members()
        .iter()
        .map(|&i| selector::describe(&index, model, i))
        .collect();
    run.say(format!("explaining {}\n{}", members.join("\n          "), table));
    let summary = json!({
        "infoset": report.infoset,
        "members": report.members.len(),
        "missing_rate": report.missing_rate,
        "reconstructed": report.reconstructed,
        "strategy": report.strategy,
    });
    run.finish("ssfi", summary)
}

pub fn eval(mut run: Run, strategy: Option<PathBuf>) -> Result<RunManifest, CliError> {
    if strategy.is_some() {
        run.config.eval.strategy = strategy;
    }
    let path = run
        .config
        .eval
        .strategy
        .clone()
        .ok_or_else(|| CliError::Config("eval needs a strategy file".into()))?;
    let document = read_strategy(&path)?;
    let game = document.game.to_config()?;
    let tree = run.out.timed("build", || game.build_tree())?;
    let profile = document.profile()?;
    let policy = TabularPolicy::from_profile(&tree, &profile)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut report = run.out.timed("evaluate", || evaluate(&tree, &game, &policy));
    if let Value::Object(map) = &mut report {
        map.insert("schema_version".into(), json!(REPORT_SCHEMA_VERSION));
        map.insert("game".into(), json!(game.descriptor()));
    }
    run.out.write_json(EXPLOITABILITY_FILE, &report)?;
    run.say(format!(
        "{}: eps1 {:.6} eps2 {:.6} avg {:.6}",
        game.describe(),
        report["eps1"].as_f64().unwrap_or(f64::NAN),
        report["eps2"].as_f64().unwrap_or(f64::NAN),
        report["avg"].as_f64().unwrap_or(f64::NAN),
    ));
    run.finish("eval", report)
}

pub fn enumerate(mut run: Run, player: Option<u8>) -> Result<RunManifest, CliError> {
    let game = run.config.game()?;
    let player = match player {
        None => game.target_player(),
        Some(id) => Player::from_id(id)
            .ok()
            .filter(|p| *p != Player::Chance)
            .ok_or_else(|| CliError::Config(format!("player must be 1 or 2, got {id}")))?,
    };
    let tree = run.out.timed("build", || game.build_tree())?;
    let model = game.feature_model().filter(|m| m.target_player() == player);
    let mut listing = String::new();
    let infosets: Vec<Value> = tree
        .infosets(player)
        .iter()
        .enumerate()
        .map(|(i, info)| {
            let labels = tree.action_labels(player, i);
            let features = model
                .and_then(|m| m.features(&info.key).ok().map(|f| m.features_json(&f)));
            let _ = write!(listing, "{}  [{}]", info.key, labels.join(","));
            if let Some(f) = &features {
                let _ = write!(listing, "  {f}");
            }
            listing.push('\n');
            let mut entry = json!({ "key": info.key, "actions": labels });
            if let Some(f) = features {
                entry["features"] = f;
            }
            entry
        })
        .collect();
    let document = json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "game": game.descriptor(),
        "player": player.id(),
        "count": infosets.len(),
        "infosets": infosets,
    });
    run.out.write_json(INFOSETS_FILE, &document)?;
    run.say(format!("{listing}{} infosets of player {}", tree.num_infosets(player), player.id()));
    run.finish("enumerate", json!({ "player": player.id(), "count": tree.num_infosets(player) }))
}
