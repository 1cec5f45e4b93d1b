//! Over-demanded item sets.
//!
//! A set of real items is over-demanded when more buyers demand only items
//! inside it than it has items. When a demand situation admits no
//! equilibrium allocation, [`grow_over_demanded`] finds such a set by
//! closing the demand of an unmatched buyer under the maximum matching, and
//! [`mods`] shrinks it to a minimal one.

use thiserror::Error;

use crate::matching::{max_matching, Matching};
use crate::model::{BuyerId, DemandSituation, ItemId, ItemSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OverdemandError {
    #[error("item sets under test may not contain the dummy item")]
    DummyInSet,
    #[error("an equilibrium allocation exists, so no set is over-demanded")]
    EquilibriumExists,
    #[error("item {0:?} was reached by the growth but is unmatched; the matching is not maximum")]
    MatchingNotMaximum(ItemId),
}

/// Result of one over-demand search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverdemandReport {
    /// Lowest-index buyer left unmatched whose demand excludes the dummy.
    pub seed_buyer: BuyerId,
    /// Fixpoint of the growth from the seed buyer's demand.
    pub grown_set: ItemSet,
    /// Minimal over-demanded subset of `grown_set`.
    pub minimal_set: ItemSet,
}

fn reject_dummy(items: &ItemSet) -> Result<(), OverdemandError> {
    if items.contains(&ItemId::DUMMY) {
        Err(OverdemandError::DummyInSet)
    } else {
        Ok(())
    }
}

/// `|{i : D_i ⊆ X'}| > |X'|`.
pub fn is_over_demanded(demands: &DemandSituation, items: &ItemSet) -> Result<bool, OverdemandError> {
    reject_dummy(items)?;
    let confined = demands.iter().filter(|(_, d)| d.is_subset(items)).count();
    Ok(confined > items.len())
}

/// `|{i : D_i ∩ X' ≠ ∅}| ≥ |X'|`.
pub fn is_not_under_demanded(demands: &DemandSituation, items: &ItemSet) -> Result<bool, OverdemandError> {
    reject_dummy(items)?;
    let touching = demands.iter().filter(|(_, d)| !d.is_disjoint(items)).count();
    Ok(touching >= items.len())
}

fn seed_buyer(demands: &DemandSituation, matching: &Matching) -> Result<BuyerId, OverdemandError> {
    demands.real_demanders().find(|&i| !matching.contains_buyer(i)).ok_or(OverdemandError::EquilibriumExists)
}

/// Grows an over-demanded set from the lowest-index unmatched demander.
///
/// Starting from that buyer's demand, repeatedly adds the demands of the
/// buyers currently holding the reached items until nothing new appears.
/// `matching` must be a maximum matching of `BG(demands)` that leaves at
/// least one non-dummy demander unmatched.
pub fn grow_over_demanded(
    demands: &DemandSituation,
    matching: &Matching,
) -> Result<(BuyerId, ItemSet), OverdemandError> {
    let seed = seed_buyer(demands, matching)?;
    let mut grown = ItemSet::new();
    let mut frontier: ItemSet = demands.get(seed).cloned().unwrap_or_default();
    while !frontier.is_empty() {
        let mut holders = Vec::with_capacity(frontier.len());
        for &a in &frontier {
            holders.push(matching.holder_of(a).ok_or(OverdemandError::MatchingNotMaximum(a))?);
        }
        grown.extend(frontier.iter().copied());
        frontier = holders
            .into_iter()
            .filter_map(|j| demands.get(j))
            .flat_map(|d| d.iter().copied())
            .filter(|a| !grown.contains(a))
            .collect();
    }
    Ok((seed, grown))
}

/// Full over-demand search: growth followed by minimality filtering.
///
/// The filter walks the grown set in ascending item order. An item is kept
/// when dropping it (together with everything already dropped) leaves a
/// remainder in which the buyers confined to it can all be matched, i.e.
/// the remainder alone holds no over-demanded set.
pub fn find_minimal_over_demanded(
    demands: &DemandSituation,
    matching: &Matching,
) -> Result<OverdemandReport, OverdemandError> {
    let (seed_buyer, grown_set) = grow_over_demanded(demands, matching)?;

    let mut minimal_set = ItemSet::new();
    let mut remaining = grown_set.clone();
    for &a in &grown_set {
        remaining.remove(&a);
        let candidate: ItemSet = minimal_set.union(&remaining).copied().collect();
        let confined = demands.restricted(|_, d| d.is_subset(&candidate));
        if max_matching(&confined).len() == confined.len() {
            minimal_set.insert(a);
        }
    }

    Ok(OverdemandReport { seed_buyer, grown_set, minimal_set })
}

/// `MODS(D, M̂_D)`: a minimal over-demanded set.
pub fn mods(demands: &DemandSituation, matching: &Matching) -> Result<ItemSet, OverdemandError> {
    find_minimal_over_demanded(demands, matching).map(|r| r.minimal_set)
}
