//! Random economies and brute-force oracles shared by the integration tests.
//!
//! The oracles work on plain `usize` indices and never call the matching or
//! over-demand code, so agreement with the library is meaningful.

#![allow(dead_code)]

use std::collections::BTreeSet;

use mapr::{validate_economy, BuyerId, DemandSituation, Economy, ItemId, PriceVector, RationingSystem, RawEconomy};
use proptest::prelude::*;
use rand::Rng;

/// Shape of a random economy family. `max_items` counts real items only.
#[derive(Debug, Clone, Copy)]
pub struct Family {
    pub max_buyers: usize,
    pub max_items: usize,
    pub max_value: i64,
    pub max_bound: i64,
    pub max_spread: i64,
}

/// At most five buyers and five items counting the dummy, magnitudes up to eight.
pub const SUITE: Family = Family { max_buyers: 5, max_items: 4, max_value: 8, max_bound: 8, max_spread: 8 };

/// Two buyers, at most four items counting the dummy, spreads up to four.
pub const TWO_BUYER: Family = Family { max_buyers: 2, max_items: 3, max_value: 8, max_bound: 8, max_spread: 4 };

pub fn item_names(m: usize) -> Vec<String> {
    (0..m).map(|k| ((b'a' + k as u8) as char).to_string()).collect()
}

pub fn build(values: Vec<Vec<i64>>, lower: Vec<i64>, upper: Vec<i64>) -> Economy {
    let m = lower.len();
    let pad = |v: Vec<i64>| std::iter::once(0).chain(v).collect::<Vec<_>>();
    validate_economy(RawEconomy {
        item_names: item_names(m),
        valuations: values.into_iter().map(pad).collect(),
        lower_bounds: pad(lower),
        upper_bounds: pad(upper),
    })
    .expect("generated economies are valid")
}

/// Draws an economy. Upper bounds are capped at `max_bound`, so spreads
/// shrink near the top of the range.
pub fn random_economy<R: Rng>(rng: &mut R, f: Family, buyers: Option<usize>) -> Economy {
    let n = buyers.unwrap_or_else(|| rng.random_range(1..=f.max_buyers));
    let m = rng.random_range(1..=f.max_items);
    let values = (0..n).map(|_| (0..m).map(|_| rng.random_range(0..=f.max_value)).collect()).collect();
    let lower: Vec<i64> = (0..m).map(|_| rng.random_range(0..=f.max_bound)).collect();
    let upper = lower.iter().map(|&l| (l + rng.random_range(0..=f.max_spread)).min(f.max_bound)).collect();
    build(values, lower, upper)
}

/// Proptest counterpart of [`random_economy`] with per-field shrinking.
pub fn arb_economy(f: Family) -> impl Strategy<Value = Economy> {
    (1..=f.max_buyers, 1..=f.max_items).prop_flat_map(move |(n, m)| {
        (
            prop::collection::vec(prop::collection::vec(0..=f.max_value, m), n),
            prop::collection::vec((0..=f.max_bound, 0..=f.max_spread), m),
        )
            .prop_map(move |(values, bounds)| {
                let lower = bounds.iter().map(|&(l, _)| l).collect();
                let upper = bounds.iter().map(|&(l, s)| (l + s).min(f.max_bound)).collect();
                build(values, lower, upper)
            })
    })
}

/// An economy together with admissible prices and an arbitrary rationing system.
pub fn arb_situation(f: Family) -> impl Strategy<Value = (Economy, PriceVector, RationingSystem)> {
    arb_economy(f).prop_flat_map(|e| {
        let ranges: Vec<_> = e.real_items().map(|a| e.lower_bounds().get(a)..=e.upper_bounds().get(a)).collect();
        let cells = e.buyer_count() * (e.item_count() - 1);
        (Just(e), ranges, prop::collection::vec(prop::bool::weighted(0.2), cells)).prop_map(|(e, real, zeros)| {
            let p = PriceVector::from_real(&real);
            let r = rationing_from_mask(&e, &zeros);
            (e, p, r)
        })
    })
}

pub fn rationing_from_mask(e: &Economy, zeros: &[bool]) -> RationingSystem {
    let m = e.item_count() - 1;
    let mut r = RationingSystem::for_economy(e);
    for i in e.buyers() {
        for a in e.real_items() {
            if zeros[i.0 * m + a.0 - 1] {
                r.forbid(i, a).unwrap();
            }
        }
    }
    r
}

pub fn random_prices<R: Rng>(rng: &mut R, e: &Economy) -> PriceVector {
    let real: Vec<i64> =
        e.real_items().map(|a| rng.random_range(e.lower_bounds().get(a)..=e.upper_bounds().get(a))).collect();
    PriceVector::from_real(&real)
}

pub fn random_rationing<R: Rng>(rng: &mut R, e: &Economy, density: f64) -> RationingSystem {
    let cells = e.buyer_count() * (e.item_count() - 1);
    let mask: Vec<bool> = (0..cells).map(|_| rng.random_bool(density)).collect();
    rationing_from_mask(e, &mask)
}

/// Demand sets as plain index sets, one per buyer.
pub type Demands = Vec<BTreeSet<usize>>;

/// Argmax of `u_i(a) − p_a` over allowed items, by direct scan.
pub fn oracle_demands(e: &Economy, p: &PriceVector, r: &RationingSystem) -> Demands {
    e.buyers()
        .map(|i| {
            let allowed: Vec<usize> = (0..e.item_count()).filter(|&a| r.allows(i, ItemId(a))).collect();
            let net = |a: usize| e.value(i, ItemId(a)) - p.get(ItemId(a));
            let best = allowed.iter().map(|&a| net(a)).max().unwrap();
            allowed.into_iter().filter(|&a| net(a) == best).collect()
        })
        .collect()
}

pub fn to_situation(d: &Demands) -> DemandSituation {
    DemandSituation::from_pairs(d.iter().enumerate().map(|(i, s)| (BuyerId(i), s.iter().map(|&a| ItemId(a))))).unwrap()
}

pub fn from_situation(ds: &DemandSituation, buyers: usize) -> Vec<Option<BTreeSet<usize>>> {
    (0..buyers).map(|i| ds.get(BuyerId(i)).map(|s| s.iter().map(|a| a.0).collect())).collect()
}

/// Size of a maximum matching between buyers without the dummy in their
/// demand and the real items they demand, by exhaustive assignment.
pub fn oracle_max_matching(demands: &[Option<BTreeSet<usize>>]) -> usize {
    fn go(k: usize, demands: &[Option<BTreeSet<usize>>], used: &mut BTreeSet<usize>) -> usize {
        if k == demands.len() {
            return 0;
        }
        let skip = go(k + 1, demands, used);
        let Some(d) = &demands[k] else { return skip };
        if d.contains(&0) {
            return skip;
        }
        let mut best = skip;
        for &a in d {
            if used.insert(a) {
                best = best.max(1 + go(k + 1, demands, used));
                used.remove(&a);
            }
        }
        best
    }
    go(0, demands, &mut BTreeSet::new())
}

/// Some allocation giving every buyer a demanded item, real items used once.
pub fn oracle_equilibrium_allocation(demands: &Demands) -> Option<Vec<usize>> {
    fn go(k: usize, demands: &Demands, used: &mut BTreeSet<usize>, acc: &mut Vec<usize>) -> bool {
        if k == demands.len() {
            return true;
        }
        for &a in &demands[k] {
            if a == 0 || used.insert(a) {
                acc.push(a);
                if go(k + 1, demands, used, acc) {
                    return true;
                }
                acc.pop();
                if a != 0 {
                    used.remove(&a);
                }
            }
        }
        false
    }
    let mut acc = Vec::new();
    go(0, demands, &mut BTreeSet::new(), &mut acc).then_some(acc)
}

/// Every nonempty subset of `1..item_count`.
pub fn real_subsets(item_count: usize) -> Vec<BTreeSet<usize>> {
    let m = item_count - 1;
    (1u32..(1 << m)).map(|mask| (0..m).filter(|k| mask >> k & 1 == 1).map(|k| k + 1).collect()).collect()
}

pub fn oracle_over_demanded(demands: &Demands, set: &BTreeSet<usize>) -> bool {
    demands.iter().filter(|d| d.is_subset(set)).count() > set.len()
}

pub fn oracle_minimal_over_demanded(demands: &Demands, item_count: usize) -> Vec<BTreeSet<usize>> {
    let over: Vec<BTreeSet<usize>> =
        real_subsets(item_count).into_iter().filter(|s| oracle_over_demanded(demands, s)).collect();
    over.iter().filter(|s| !over.iter().any(|t| t != *s && t.is_subset(s))).cloned().collect()
}

pub fn ids(set: &BTreeSet<usize>) -> BTreeSet<ItemId> {
    set.iter().map(|&a| ItemId(a)).collect()
}

pub fn plain(set: &BTreeSet<ItemId>) -> BTreeSet<usize> {
    set.iter().map(|a| a.0).collect()
}

/// An alternating path from a free left vertex to a free right vertex, by DFS.
pub fn oracle_has_augmenting_path(demands: &[Option<BTreeSet<usize>>], matched: &[(usize, usize)]) -> bool {
    let holder = |a: usize| matched.iter().find(|&&(_, x)| x == a).map(|&(i, _)| i);
    let is_matched = |i: usize| matched.iter().any(|&(j, _)| j == i);
    let left: Vec<usize> =
        (0..demands.len()).filter(|&i| demands[i].as_ref().is_some_and(|d| !d.contains(&0))).collect();
    fn dfs(
        i: usize,
        demands: &[Option<BTreeSet<usize>>],
        holder: &dyn Fn(usize) -> Option<usize>,
        seen: &mut BTreeSet<usize>,
    ) -> bool {
        for &a in demands[i].as_ref().unwrap() {
            if !seen.insert(a) {
                continue;
            }
            match holder(a) {
                None => return true,
                Some(j) if dfs(j, demands, holder, seen) => return true,
                _ => {}
            }
        }
        false
    }
    left.into_iter().filter(|&i| !is_matched(i)).any(|i| dfs(i, demands, &holder, &mut BTreeSet::new()))
}
