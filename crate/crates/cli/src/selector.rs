//! Resolving an `[ssfi.selector]` to the explained infoset(s).
//!
//! A selector either names an infoset key or constrains the observable
//! values: hand (the action set), center, deck, opponent and points. It must
//! pick out exactly one observation, i.e. infosets that agree on the hand and
//! every feature; several histories may share one observation.

use shapgame::features::{FeatureId, FeatureModel};
use shapgame::goofspiel::{feature, CardSet};
use shapgame::ssfi::{InfosetIndex, SsfiTarget};
use shapgame::InfosetKey;

use crate::config::Selector;
use crate::error::CliError;

const LISTED: usize = 8;

enum Constraint {
    Hand(u64),
    Feature(FeatureId, i64),
}

fn card_set(field: &str, cards: &[u8], k: u8) -> Result<CardSet, CliError> {
    if let Some(bad) = cards.iter().find(|&&c| c == 0 || c > k) {
        return Err(CliError::Config(format!(
            "selector {field} contains card {bad}, outside 1..={k}"
        )));
    }
    Ok(CardSet::from_cards(cards.iter().copied()))
}

fn constraints(selector: &Selector, k: u8) -> Result<Vec<Constraint>, CliError> {
    let mut out = Vec::new();
    if let Some(hand) = &selector.hand {
        out.push(Constraint::Hand(card_set("hand", hand, k)?.0 as u64));
    }
    if let Some(c) = selector.center {
        out.push(Constraint::Feature(feature::CENTER, i64::from(c)));
    }
    if let Some(deck) = &selector.deck {
        out.push(Constraint::Feature(feature::DECK, card_set("deck", deck, k)?.0 as i64));
    }
    if let Some(opp) = &selector.opponent {
        out.push(Constraint::Feature(feature::OPPONENT, card_set("opponent", opp, k)?.0 as i64));
    }
    if let Some(p) = selector.points {
        out.push(Constraint::Feature(feature::POINTS, p));
    }
    Ok(out)
}

fn satisfied(index: &InfosetIndex, i: u32, constraints: &[Constraint]) -> usize {
    constraints
        .iter()
        .filter(|c| match **c {
            Constraint::Hand(sig) => index.signature(i).0 == sig,
            Constraint::Feature(id, v) => index.features(i).get(id) == v,
        })
        .count()
}

/// One line describing an infoset: key, hand and features.
pub fn describe(index: &InfosetIndex, model: &dyn FeatureModel, i: u32) -> String {
    let hand = CardSet(index.signature(i).0 as u32);
    format!(
        "{}  hand={:?} {}",
        index.key(i),
        hand.to_vec(),
        model.features_json(index.features(i))
    )
}

/// Resolve `selector`. Errors list near matches.
pub fn resolve(
    selector: &Selector,
    index: &InfosetIndex,
    model: &dyn FeatureModel,
    k: u8,
) -> Result<SsfiTarget, CliError> {
    let constraints = constraints(selector, k)?;
    if let Some(key) = &selector.infoset {
        if !constraints.is_empty() {
            return Err(CliError::Config(
                "selector takes either an infoset key or observable values, not both".into(),
            ));
        }
        let key = InfosetKey::new(key.clone());
        return SsfiTarget::infoset(index, &key).map_err(|_| {
            CliError::Config(format!(
                "infoset {key} is not a decision point of player {}",
                index.player().id()
            ))
        });
    }
    if constraints.is_empty() {
        return Err(CliError::Config(
            "ssfi needs a selector: set ssfi.selector.infoset or hand/center/deck/opponent/points"
                .into(),
        ));
    }

    let all = constraints.len();
    let matches: Vec<u32> = (0..index.len() as u32)
        .filter(|&i| satisfied(index, i, &constraints) == all)
        .collect();
    if matches.is_empty() {
        let mut near: Vec<(usize, u32)> = (0..index.len() as u32)
            .map(|i| (satisfied(index, i, &constraints), i))
            .filter(|&(s, _)| s > 0)
            .collect();
        near.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let listing: Vec<String> = near
            .iter()
            .take(LISTED)
            .map(|&(s, i)| format!("  [{s}/{all}] {}", describe(index, model, i)))
            .collect();
        return Err(CliError::Config(format!(
            "selector matches no infoset; nearest:\n{}",
            listing.join("\n")
        )));
    }

    let first = matches[0];
    let class = index.observation_class(first);
    if matches.iter().all(|i| class.contains(i)) {
        return Ok(SsfiTarget::observation(index, index.key(first))?);
    }
    let mut reps: Vec<u32> = Vec::new();
    for &i in &matches {
        if !reps
            .iter()
            .any(|&r| index.signature(r) == index.signature(i) && index.features(r) == index.features(i))
        {
            reps.push(i);
        }
    }
    let listing: Vec<String> = reps
        .iter()
        .take(LISTED)
        .map(|&i| format!("  {}", describe(index, model, i)))
        .collect();
    Err(CliError::Config(format!(
        "selector matches {} distinct observations; add constraints. Candidates:\n{}",
        reps.len(),
        listing.join("\n")
    )))
}
