//! Constrained Walrasian equilibrium verification.
//!
//! A tuple `(p, R, π)` is a constrained Walrasian equilibrium when
//!
//! 1. `p` is admissible and `R` is a rationing system;
//! 2. every buyer's item is in their constrained demand `D_i(p, R)`;
//! 3. unassigned items sit at their lower bound;
//! 4. any item someone is forbidden from demanding is at its upper bound and assigned;
//! 5. a forbidden buyer–item pair would be demanded if that single permission were restored.

use std::fmt;

use thiserror::Error;

use crate::model::{
    demand_set, Allocation, BuyerId, DemandSituation, Economy, ItemId, ItemSet, PriceVector, RationingSystem,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquilibriumError {
    #[error("{0} does not match the economy's shape")]
    Shape(&'static str),
    #[error("instance too large for exhaustive search ({buyers} buyers × {items} items > {limit})")]
    SizeGuard { buyers: usize, items: usize, limit: usize },
}

/// Why a condition failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Witness {
    Item(ItemId),
    Buyer(BuyerId),
    BuyerItem(BuyerId, ItemId),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConditionVerdict {
    pub witnesses: Vec<Witness>,
}

impl ConditionVerdict {
    pub fn holds(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn first_witness(&self) -> Option<Witness> {
        self.witnesses.first().copied()
    }
}

/// Per-condition verdicts; `conditions[k]` is condition `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumCertificate {
    pub conditions: [ConditionVerdict; 5],
}

impl EquilibriumCertificate {
    pub fn is_equilibrium(&self) -> bool {
        self.conditions.iter().all(ConditionVerdict::holds)
    }

    /// Verdict for condition `number` (1 to 5).
    pub fn condition(&self, number: usize) -> &ConditionVerdict {
        &self.conditions[number - 1]
    }

    /// Numbers of the failed conditions, ascending.
    pub fn failed(&self) -> Vec<usize> {
        (1..=5).filter(|&k| !self.condition(k).holds()).collect()
    }

    /// Human-readable report with item names from `economy`.
    pub fn display<'a>(&'a self, economy: &'a Economy) -> CertificateDisplay<'a> {
        CertificateDisplay { certificate: self, economy }
    }
}

pub struct CertificateDisplay<'a> {
    certificate: &'a EquilibriumCertificate,
    economy: &'a Economy,
}

const CONDITION_NAMES: [&str; 5] = [
    "admissible prices and valid rationing",
    "every buyer receives a demanded item",
    "unassigned items at lower bound",
    "rationed items at upper bound and assigned",
    "rationed buyers would demand the item if allowed",
];

impl fmt::Display for CertificateDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.economy;
        for (k, verdict) in self.certificate.conditions.iter().enumerate() {
            let status = if verdict.holds() { "ok" } else { "FAILED" };
            write!(f, "({}) {:<50} {}", k + 1, CONDITION_NAMES[k], status)?;
            if !verdict.holds() {
                let ws: Vec<String> = verdict
                    .witnesses
                    .iter()
                    .map(|w| match *w {
                        Witness::Item(a) => e.item_name(a).to_string(),
                        Witness::Buyer(i) => format!("buyer {i}"),
                        Witness::BuyerItem(i, a) => format!("({i},{})", e.item_name(a)),
                    })
                    .collect();
                write!(f, ": {}", ws.join(" "))?;
            }
            writeln!(f)?;
        }
        if self.certificate.is_equilibrium() {
            writeln!(f, "all conditions satisfied")
        } else {
            writeln!(f, "not a constrained Walrasian equilibrium (failed: {:?})", self.certificate.failed())
        }
    }
}

/// Checks the five conditions. Structural mismatches (wrong lengths) are
/// errors; everything else is reported in the certificate.
pub fn check_cwe(
    economy: &Economy,
    prices: &PriceVector,
    rationing: &RationingSystem,
    allocation: &Allocation,
) -> Result<EquilibriumCertificate, EquilibriumError> {
    if prices.len() != economy.item_count() {
        return Err(EquilibriumError::Shape("price vector"));
    }
    if rationing.buyer_count() != economy.buyer_count() {
        return Err(EquilibriumError::Shape("rationing system"));
    }
    if allocation.len() != economy.buyer_count() || allocation.as_slice().iter().any(|&a| !economy.contains_item(a)) {
        return Err(EquilibriumError::Shape("allocation"));
    }

    let mut c: [ConditionVerdict; 5] = Default::default();

    for a in economy.items() {
        let p = prices.get(a);
        if p < economy.lower_bounds().get(a) || p > economy.upper_bounds().get(a) {
            c[0].witnesses.push(Witness::Item(a));
        }
    }
    for i in economy.buyers() {
        if !rationing.allows(i, ItemId::DUMMY) {
            c[0].witnesses.push(Witness::BuyerItem(i, ItemId::DUMMY));
        }
    }

    for i in economy.buyers() {
        if !demand_set(economy, prices, rationing, i).contains(&allocation.item_of(i)) {
            c[1].witnesses.push(Witness::Buyer(i));
        }
    }

    for a in economy.real_items() {
        if !allocation.is_assigned(a) && prices.get(a) != economy.lower_bounds().get(a) {
            c[2].witnesses.push(Witness::Item(a));
        }
    }

    for a in economy.real_items() {
        if let Some(j) = economy.buyers().find(|&j| !rationing.allows(j, a)) {
            if prices.get(a) != economy.upper_bounds().get(a) || !allocation.is_assigned(a) {
                c[3].witnesses.push(Witness::BuyerItem(j, a));
            }
        }
    }

    for (i, a) in rationing.zeros() {
        let mut restored = rationing.clone();
        restored.allow(i, a);
        if !demand_set(economy, prices, &restored, i).contains(&a) {
            c[4].witnesses.push(Witness::BuyerItem(i, a));
        }
    }

    Ok(EquilibriumCertificate { conditions: c })
}

/// Largest `buyers × items` product the exhaustive search accepts.
pub const BRUTE_FORCE_LIMIT: usize = 25;

/// Exhaustive search for an allocation consistent with `demands` that gives
/// every buyer without the dummy in their demand one of their demanded
/// items. Buyers who demand the dummy receive it.
///
/// `item_count` includes the dummy. Independent of the matching code; used
/// as a test oracle.
pub fn brute_force_equilibrium_allocation(
    demands: &DemandSituation,
    buyer_count: usize,
    item_count: usize,
) -> Result<Option<Allocation>, EquilibriumError> {
    if buyer_count * item_count > BRUTE_FORCE_LIMIT {
        return Err(EquilibriumError::SizeGuard { buyers: buyer_count, items: item_count, limit: BRUTE_FORCE_LIMIT });
    }
    let options: Vec<Vec<ItemId>> = (0..buyer_count)
        .map(|i| {
            let mut opts: Vec<ItemId> =
                demands.get(BuyerId(i)).map(|d| d.iter().copied().collect()).unwrap_or_default();
            if !opts.contains(&ItemId::DUMMY) {
                opts.push(ItemId::DUMMY);
            }
            opts
        })
        .collect();

    let mut chosen = vec![ItemId::DUMMY; buyer_count];
    let mut used = ItemSet::new();
    if search(demands, &options, 0, &mut chosen, &mut used) {
        Ok(Some(Allocation::new(chosen).expect("search keeps real items distinct")))
    } else {
        Ok(None)
    }
}

fn search(
    demands: &DemandSituation,
    options: &[Vec<ItemId>],
    buyer: usize,
    chosen: &mut Vec<ItemId>,
    used: &mut ItemSet,
) -> bool {
    if buyer == options.len() {
        return (0..options.len()).all(|i| match demands.get(BuyerId(i)) {
            Some(d) => d.contains(&chosen[i]),
            None => true,
        });
    }
    for &a in &options[buyer] {
        if !a.is_dummy() && used.contains(&a) {
            continue;
        }
        chosen[buyer] = a;
        if !a.is_dummy() {
            used.insert(a);
        }
        let found = search(demands, options, buyer + 1, chosen, used);
        if !a.is_dummy() {
            used.remove(&a);
        }
        if found {
            return true;
        }
    }
    chosen[buyer] = ItemId::DUMMY;
    false
}
