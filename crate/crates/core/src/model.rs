//! Economies, prices, rationing systems, constrained demand and allocations.
//!
//! Item index 0 is always the dummy item `o`: it can be given to any number
//! of buyers, its price is pinned at zero and every buyer values it at zero.
//! Real items occupy indices `1..=m` in the order they were declared.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Money amounts (valuations and prices).
///
/// Inputs are bounded by what JSON integers can carry; any place that sums
/// many amounts widens to `i128` first.
pub type Money = i64;

/// Zero-based buyer index. Displayed one-based, so buyer `BuyerId(0)` prints as `1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BuyerId(pub usize);

impl BuyerId {
    /// Builds a buyer id from its one-based label.
    pub fn from_label(label: usize) -> Option<Self> {
        label.checked_sub(1).map(BuyerId)
    }

    pub fn label(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for BuyerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Item index; `ItemId::DUMMY` is the null item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub usize);

impl ItemId {
    pub const DUMMY: ItemId = ItemId(0);

    pub fn is_dummy(self) -> bool {
        self.0 == 0
    }
}

/// Ordered item set. Iteration order is ascending item index, which every
/// deterministic tie-break in the crate relies on.
pub type ItemSet = BTreeSet<ItemId>;

/// Name used for the dummy item in every rendered or serialized form.
pub const DUMMY_NAME: &str = "o";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EconomyError {
    #[error("buyer {buyer} values the dummy item at {value}, expected 0")]
    NonZeroDummyValuation { buyer: BuyerId, value: i64 },
    #[error("item {item}: lower bound {lower} exceeds upper bound {upper}")]
    BoundsCrossed { item: String, lower: i64, upper: i64 },
    #[error("dummy item bounds must be 0, found [{lower}, {upper}]")]
    NonZeroDummyBounds { lower: i64, upper: i64 },
    #[error("negative entry {value} in {location}")]
    NegativeEntry { location: String, value: i64 },
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch { what: String, expected: usize, found: usize },
    #[error("item name {0:?} is used more than once")]
    DuplicateItemName(String),
    #[error("item name {0:?} is reserved for the dummy item")]
    ReservedItemName(String),
}

/// Errors from constructing model values other than economies.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("price vector has {found} entries, economy has {expected} items")]
    PriceLength { expected: usize, found: usize },
    #[error("dummy item price must be 0, found {0}")]
    DummyPrice(Money),
    #[error("the dummy item cannot be rationed (buyer {0})")]
    RationedDummy(BuyerId),
    #[error("buyer {0} has an empty demand set")]
    EmptyDemand(BuyerId),
    #[error("item {item:?} is assigned to buyers {first} and {second}")]
    ItemAssignedTwice { item: ItemId, first: BuyerId, second: BuyerId },
    #[error("buyer {0} is out of range")]
    UnknownBuyer(BuyerId),
    #[error("item {0:?} is out of range")]
    UnknownItem(ItemId),
}

/// Unchecked economy data, dummy column included.
///
/// `valuations[i][0]`, `lower_bounds[0]` and `upper_bounds[0]` belong to the
/// dummy item; `item_names` lists only the real items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEconomy {
    pub item_names: Vec<String>,
    pub valuations: Vec<Vec<i64>>,
    pub lower_bounds: Vec<i64>,
    pub upper_bounds: Vec<i64>,
}

/// A validated economy: buyers with unit demand, items with price bounds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Economy {
    item_names: Vec<String>,
    valuations: Vec<Vec<Money>>,
    lower: PriceVector,
    upper: PriceVector,
}

/// Checks every economy assumption and reports all violations at once.
pub fn validate_economy(raw: RawEconomy) -> Result<Economy, Vec<EconomyError>> {
    let mut errors = Vec::new();
    let width = raw.item_names.len() + 1;

    let mut seen = BTreeSet::new();
    for name in &raw.item_names {
        if name == DUMMY_NAME {
            errors.push(EconomyError::ReservedItemName(name.clone()));
        } else if !seen.insert(name.as_str()) {
            errors.push(EconomyError::DuplicateItemName(name.clone()));
        }
    }

    let mut check_len = |what: String, found: usize| {
        if found != width {
            errors.push(EconomyError::DimensionMismatch { what, expected: width, found });
            false
        } else {
            true
        }
    };
    let rows_ok: Vec<bool> = raw
        .valuations
        .iter()
        .enumerate()
        .map(|(i, row)| check_len(format!("valuations of buyer {}", i + 1), row.len()))
        .collect();
    let lower_ok = check_len("lower_bounds".into(), raw.lower_bounds.len());
    let upper_ok = check_len("upper_bounds".into(), raw.upper_bounds.len());

    let name_of = |a: usize| -> String {
        if a == 0 {
            DUMMY_NAME.to_string()
        } else {
            raw.item_names[a - 1].clone()
        }
    };

    for (i, row) in raw.valuations.iter().enumerate() {
        if !rows_ok[i] {
            continue;
        }
        if row[0] != 0 {
            errors.push(EconomyError::NonZeroDummyValuation { buyer: BuyerId(i), value: row[0] });
        }
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v < 0 {
                errors.push(EconomyError::NegativeEntry {
                    location: format!("valuation of buyer {} for item {}", i + 1, name_of(a)),
                    value: v,
                });
            }
        }
    }

    for (label, bounds, ok) in
        [("lower bound", &raw.lower_bounds, lower_ok), ("upper bound", &raw.upper_bounds, upper_ok)]
    {
        if !ok {
            continue;
        }
        for (a, &v) in bounds.iter().enumerate().skip(1) {
            if v < 0 {
                errors.push(EconomyError::NegativeEntry {
                    location: format!("{label} of item {}", name_of(a)),
                    value: v,
                });
            }
        }
    }

    if lower_ok && upper_ok {
        if raw.lower_bounds[0] != 0 || raw.upper_bounds[0] != 0 {
            errors.push(EconomyError::NonZeroDummyBounds { lower: raw.lower_bounds[0], upper: raw.upper_bounds[0] });
        }
        for a in 1..width {
            let (lo, hi) = (raw.lower_bounds[a], raw.upper_bounds[a]);
            if lo > hi {
                errors.push(EconomyError::BoundsCrossed { item: name_of(a), lower: lo, upper: hi });
            }
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }

    let mut item_names = Vec::with_capacity(width);
    item_names.push(DUMMY_NAME.to_string());
    item_names.extend(raw.item_names);
    Ok(Economy {
        item_names,
        valuations: raw.valuations,
        lower: PriceVector(raw.lower_bounds),
        upper: PriceVector(raw.upper_bounds),
    })
}

impl Economy {
    pub fn buyer_count(&self) -> usize {
        self.valuations.len()
    }

    /// Number of items including the dummy.
    pub fn item_count(&self) -> usize {
        self.item_names.len()
    }

    pub fn buyers(&self) -> impl Iterator<Item = BuyerId> + Clone {
        (0..self.buyer_count()).map(BuyerId)
    }

    /// Items including the dummy, in index order.
    pub fn items(&self) -> impl Iterator<Item = ItemId> + Clone {
        (0..self.item_count()).map(ItemId)
    }

    pub fn real_items(&self) -> impl Iterator<Item = ItemId> + Clone {
        (1..self.item_count()).map(ItemId)
    }

    pub fn value(&self, buyer: BuyerId, item: ItemId) -> Money {
        self.valuations[buyer.0][item.0]
    }

    pub fn valuations(&self, buyer: BuyerId) -> &[Money] {
        &self.valuations[buyer.0]
    }

    pub fn lower_bounds(&self) -> &PriceVector {
        &self.lower
    }

    pub fn upper_bounds(&self) -> &PriceVector {
        &self.upper
    }

    pub fn item_name(&self, item: ItemId) -> &str {
        &self.item_names[item.0]
    }

    /// Real item names in declaration order.
    pub fn real_item_names(&self) -> &[String] {
        &self.item_names[1..]
    }

    /// Looks an item up by name; `"o"` resolves to the dummy.
    pub fn item_by_name(&self, name: &str) -> Option<ItemId> {
        self.item_names.iter().position(|n| n == name).map(ItemId)
    }

    pub fn contains_buyer(&self, buyer: BuyerId) -> bool {
        buyer.0 < self.buyer_count()
    }

    pub fn contains_item(&self, item: ItemId) -> bool {
        item.0 < self.item_count()
    }

    /// `Σ_a (upper_a − lower_a)`: the most price-increase rounds any run can take.
    pub fn total_price_spread(&self) -> i128 {
        self.real_items().map(|a| i128::from(self.upper.get(a)) - i128::from(self.lower.get(a))).sum()
    }

    /// Same economy with one buyer's valuation row replaced.
    pub fn with_valuations(&self, buyer: BuyerId, row: Vec<i64>) -> Result<Economy, Vec<EconomyError>> {
        let mut valuations = self.valuations.clone();
        if buyer.0 < valuations.len() {
            valuations[buyer.0] = row;
        }
        validate_economy(RawEconomy {
            item_names: self.real_item_names().to_vec(),
            valuations,
            lower_bounds: self.lower.0.clone(),
            upper_bounds: self.upper.0.clone(),
        })
    }

    /// Renders an item set as `{a,b}` with `o` for the dummy.
    pub fn format_items<'a>(&self, items: impl IntoIterator<Item = &'a ItemId>) -> String {
        let names: Vec<&str> = items.into_iter().map(|&a| self.item_name(a)).collect();
        format!("{{{}}}", names.join(","))
    }
}

/// Prices indexed by item, dummy first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PriceVector(Vec<Money>);

impl PriceVector {
    pub fn new(prices: Vec<Money>) -> Result<Self, ModelError> {
        match prices.first() {
            Some(&p) if p != 0 => Err(ModelError::DummyPrice(p)),
            _ => Ok(PriceVector(prices)),
        }
    }

    /// Builds a vector from real-item prices only, prepending the dummy's 0.
    pub fn from_real(prices: &[Money]) -> Self {
        let mut v = Vec::with_capacity(prices.len() + 1);
        v.push(0);
        v.extend_from_slice(prices);
        PriceVector(v)
    }

    pub fn get(&self, item: ItemId) -> Money {
        self.0[item.0]
    }

    pub fn as_slice(&self) -> &[Money] {
        &self.0
    }

    pub fn real(&self) -> &[Money] {
        &self.0[1..]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Raises every listed item by one unit.
    pub fn raised(&self, items: &ItemSet) -> PriceVector {
        let mut next = self.clone();
        for a in items {
            next.0[a.0] += 1;
        }
        next
    }

    /// Admissibility: `lower_a ≤ p_a ≤ upper_a` for every item, with the right length.
    pub fn is_admissible(&self, economy: &Economy) -> bool {
        self.0.len() == economy.item_count()
            && economy
                .items()
                .all(|a| economy.lower_bounds().get(a) <= self.get(a) && self.get(a) <= economy.upper_bounds().get(a))
    }

    pub fn check_shape(&self, economy: &Economy) -> Result<(), ModelError> {
        if self.0.len() != economy.item_count() {
            return Err(ModelError::PriceLength { expected: economy.item_count(), found: self.0.len() });
        }
        if self.0[0] != 0 {
            return Err(ModelError::DummyPrice(self.0[0]));
        }
        Ok(())
    }
}

/// Binary permission matrix: `allows(i, a)` means buyer `i` may demand item `a`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RationingSystem {
    allowed: Vec<Vec<bool>>,
}

impl RationingSystem {
    /// Everyone may demand everything.
    pub fn full(buyers: usize, items: usize) -> Self {
        RationingSystem { allowed: vec![vec![true; items]; buyers] }
    }

    pub fn for_economy(economy: &Economy) -> Self {
        Self::full(economy.buyer_count(), economy.item_count())
    }

    /// Full rationing with the listed (buyer, item) pairs forbidden.
    pub fn with_forbidden(
        economy: &Economy,
        zeros: impl IntoIterator<Item = (BuyerId, ItemId)>,
    ) -> Result<Self, ModelError> {
        let mut r = Self::for_economy(economy);
        for (i, a) in zeros {
            r.forbid(i, a)?;
        }
        Ok(r)
    }

    pub fn allows(&self, buyer: BuyerId, item: ItemId) -> bool {
        self.allowed[buyer.0][item.0]
    }

    pub fn forbid(&mut self, buyer: BuyerId, item: ItemId) -> Result<(), ModelError> {
        if item.is_dummy() {
            return Err(ModelError::RationedDummy(buyer));
        }
        let row = self.allowed.get_mut(buyer.0).ok_or(ModelError::UnknownBuyer(buyer))?;
        let cell = row.get_mut(item.0).ok_or(ModelError::UnknownItem(item))?;
        *cell = false;
        Ok(())
    }

    pub fn allow(&mut self, buyer: BuyerId, item: ItemId) {
        self.allowed[buyer.0][item.0] = true;
    }

    /// `U_i`: the items buyer `i` may not demand.
    pub fn forbidden(&self, buyer: BuyerId) -> ItemSet {
        self.allowed[buyer.0].iter().enumerate().filter(|(_, &ok)| !ok).map(|(a, _)| ItemId(a)).collect()
    }

    /// Every forbidden pair, buyer-major.
    pub fn zeros(&self) -> Vec<(BuyerId, ItemId)> {
        (0..self.allowed.len())
            .flat_map(|i| self.forbidden(BuyerId(i)).into_iter().map(move |a| (BuyerId(i), a)))
            .collect()
    }

    pub fn buyer_count(&self) -> usize {
        self.allowed.len()
    }

    /// Structural validity against an economy: shape matches and the dummy is never rationed.
    pub fn is_valid_for(&self, economy: &Economy) -> bool {
        self.allowed.len() == economy.buyer_count()
            && self.allowed.iter().all(|row| row.len() == economy.item_count() && row[0])
    }
}

/// `V_i(p, R)`: the best net value buyer `i` can get among allowed items.
///
/// Never negative because the dummy is always allowed and worth 0 at price 0.
pub fn indirect_utility(economy: &Economy, prices: &PriceVector, rationing: &RationingSystem, buyer: BuyerId) -> Money {
    economy
        .items()
        .filter(|&a| rationing.allows(buyer, a))
        .map(|a| economy.value(buyer, a) - prices.get(a))
        .max()
        .unwrap_or(0)
}

/// `D_i(p, R)`: the allowed items attaining the indirect utility.
pub fn demand_set(economy: &Economy, prices: &PriceVector, rationing: &RationingSystem, buyer: BuyerId) -> ItemSet {
    let best = indirect_utility(economy, prices, rationing, buyer);
    economy.items().filter(|&a| rationing.allows(buyer, a) && economy.value(buyer, a) - prices.get(a) == best).collect()
}

/// Demand sets for every buyer of the economy.
pub fn demand_situation(economy: &Economy, prices: &PriceVector, rationing: &RationingSystem) -> DemandSituation {
    demand_situation_for(economy, prices, rationing, economy.buyers())
}

/// Demand sets for a subset of buyers.
pub fn demand_situation_for(
    economy: &Economy,
    prices: &PriceVector,
    rationing: &RationingSystem,
    buyers: impl IntoIterator<Item = BuyerId>,
) -> DemandSituation {
    DemandSituation { demands: buyers.into_iter().map(|i| (i, demand_set(economy, prices, rationing, i))).collect() }
}

/// Per-buyer demand sets, possibly for a subset of the economy's buyers.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct DemandSituation {
    demands: BTreeMap<BuyerId, ItemSet>,
}

impl DemandSituation {
    pub fn new(demands: BTreeMap<BuyerId, ItemSet>) -> Result<Self, ModelError> {
        if let Some((&i, _)) = demands.iter().find(|(_, d)| d.is_empty()) {
            return Err(ModelError::EmptyDemand(i));
        }
        Ok(DemandSituation { demands })
    }

    /// Convenience constructor from `(buyer, items)` pairs.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (BuyerId, S)>,
        S: IntoIterator<Item = ItemId>,
    {
        Self::new(pairs.into_iter().map(|(i, s)| (i, s.into_iter().collect())).collect())
    }

    pub fn get(&self, buyer: BuyerId) -> Option<&ItemSet> {
        self.demands.get(&buyer)
    }

    pub fn iter(&self) -> impl Iterator<Item = (BuyerId, &ItemSet)> {
        self.demands.iter().map(|(&i, d)| (i, d))
    }

    pub fn buyers(&self) -> impl Iterator<Item = BuyerId> + '_ {
        self.demands.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    /// Buyers whose demand does not contain the dummy.
    pub fn real_demanders(&self) -> impl Iterator<Item = BuyerId> + '_ {
        self.iter().filter(|(_, d)| !d.contains(&ItemId::DUMMY)).map(|(i, _)| i)
    }

    /// Keeps only the listed buyers.
    pub fn restricted<F: Fn(BuyerId, &ItemSet) -> bool>(&self, keep: F) -> DemandSituation {
        DemandSituation { demands: self.iter().filter(|(i, d)| keep(*i, d)).map(|(i, d)| (i, d.clone())).collect() }
    }

    /// Intersects every demand with `items` and drops buyers left with nothing.
    pub fn intersected(&self, items: &ItemSet) -> DemandSituation {
        DemandSituation {
            demands: self
                .iter()
                .map(|(i, d)| (i, d.intersection(items).copied().collect::<ItemSet>()))
                .filter(|(_, d)| !d.is_empty())
                .collect(),
        }
    }
}

/// Buyer → item assignment. Real items go to at most one buyer; the dummy to any number.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    assignment: Vec<ItemId>,
}

impl Allocation {
    pub fn new(assignment: Vec<ItemId>) -> Result<Self, ModelError> {
        let mut holder: BTreeMap<ItemId, BuyerId> = BTreeMap::new();
        for (i, &a) in assignment.iter().enumerate() {
            if a.is_dummy() {
                continue;
            }
            if let Some(&first) = holder.get(&a) {
                return Err(ModelError::ItemAssignedTwice { item: a, first, second: BuyerId(i) });
            }
            holder.insert(a, BuyerId(i));
        }
        Ok(Allocation { assignment })
    }

    pub fn item_of(&self, buyer: BuyerId) -> ItemId {
        self.assignment[buyer.0]
    }

    pub fn as_slice(&self) -> &[ItemId] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn holder_of(&self, item: ItemId) -> Option<BuyerId> {
        if item.is_dummy() {
            return None;
        }
        self.assignment.iter().position(|&a| a == item).map(BuyerId)
    }

    pub fn is_assigned(&self, item: ItemId) -> bool {
        self.holder_of(item).is_some()
    }
}
