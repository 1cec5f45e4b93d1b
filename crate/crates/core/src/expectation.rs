//! Expected profits and expected prices over every lottery outcome.
//!
//! A run of the mechanism branches at each lottery, every entrant winning
//! with equal probability. [`expected_values`] evaluates the resulting tree
//! directly on allocation situations `(p, R*)`, where `R*` forbids each sold
//! item to everyone but its holder. [`enumerate_histories`] instead forks a
//! live [`Mechanism`] at every lottery and lists the leaves; the two must
//! agree exactly.
//!
//! All arithmetic is exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::matching::Matching;
use crate::mechanism::{assess, Mechanism, MechanismError, Progress, RoundDecision};
use crate::model::{
    demand_situation_for, indirect_utility, Allocation, BuyerId, Economy, ItemId, PriceVector, RationingSystem,
};

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpectationError {
    #[error("search tree exceeded {limit} nodes ({stats})")]
    TreeSizeExceeded { limit: usize, stats: TreeStats },
    #[error("rationing is not an allocation situation: item {0:?} is forbidden to several buyers but allowed to none or several")]
    NotAllocationSituation(ItemId),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpectationConfig {
    /// Maximum number of tree nodes (decision points) to visit.
    pub node_limit: usize,
}

impl Default for ExpectationConfig {
    fn default() -> Self {
        ExpectationConfig { node_limit: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TreeStats {
    /// Decision points visited, price increases included.
    pub nodes: usize,
    pub leaves: usize,
    pub lotteries: usize,
    /// Sum of leaf probabilities; exactly one for a complete tree.
    pub probability_mass: Rational,
}

impl std::fmt::Display for TreeStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} nodes, {} leaves, {} lotteries, leaf probability {}",
            self.nodes,
            self.leaves,
            self.lotteries,
            fraction(&self.probability_mass)
        )
    }
}

/// A price vector with the rationing that encodes which items are sold to whom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AllocationSituation {
    prices: PriceVector,
    rationing: RationingSystem,
}

impl AllocationSituation {
    /// Lower-bound prices, nothing sold.
    pub fn initial(economy: &Economy) -> Self {
        AllocationSituation { prices: economy.lower_bounds().clone(), rationing: RationingSystem::for_economy(economy) }
    }

    /// Checks that every item is either open to all buyers or to exactly one.
    pub fn new(economy: &Economy, prices: PriceVector, rationing: RationingSystem) -> Result<Self, ExpectationError> {
        for a in economy.real_items() {
            let allowed = economy.buyers().filter(|&i| rationing.allows(i, a)).count();
            if allowed != economy.buyer_count() && allowed != 1 {
                return Err(ExpectationError::NotAllocationSituation(a));
            }
        }
        Ok(AllocationSituation { prices, rationing })
    }

    /// `R*` for a partial matching: sold items are open only to their holder.
    pub fn from_sold(economy: &Economy, prices: PriceVector, sold: &Matching) -> Self {
        let mut rationing = RationingSystem::for_economy(economy);
        for (holder, a) in sold.pairs() {
            for i in economy.buyers().filter(|&i| i != holder) {
                rationing.forbid(i, a).expect("matched items are real");
            }
        }
        AllocationSituation { prices, rationing }
    }

    pub fn prices(&self) -> &PriceVector {
        &self.prices
    }

    pub fn rationing(&self) -> &RationingSystem {
        &self.rationing
    }

    /// Items forbidden to someone, each with the one buyer still allowed.
    pub fn sold(&self, economy: &Economy) -> Matching {
        let mut m = Matching::new();
        for a in economy.real_items() {
            let mut allowed = economy.buyers().filter(|&i| self.rationing.allows(i, a));
            if let (Some(holder), None) = (allowed.next(), allowed.next()) {
                if economy.buyer_count() > 1 {
                    m.insert(holder, a).expect("each holder is allowed exactly one sold item");
                }
            }
        }
        m
    }
}

/// Expected profit per buyer and expected price per item (dummy at index 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectationReport {
    pub expected_profit: Vec<Rational>,
    pub expected_price: Vec<Rational>,
    pub tree_stats: TreeStats,
}

impl ExpectationReport {
    pub fn profit(&self, buyer: BuyerId) -> &Rational {
        &self.expected_profit[buyer.0]
    }

    pub fn price(&self, item: ItemId) -> &Rational {
        &self.expected_price[item.0]
    }
}

struct Walk<'e> {
    economy: &'e Economy,
    limit: usize,
    stats: TreeStats,
}

struct NodeValue {
    profit: Vec<Rational>,
    price: Vec<Rational>,
}

impl Walk<'_> {
    fn visit(&mut self) -> Result<(), ExpectationError> {
        self.stats.nodes += 1;
        if self.stats.nodes > self.limit {
            return Err(ExpectationError::TreeSizeExceeded { limit: self.limit, stats: self.stats.clone() });
        }
        Ok(())
    }

    /// `(u*_i(p, R), p*_a(p, R))` for every buyer and item.
    fn evaluate(&mut self, mut node: AllocationSituation, weight: Rational) -> Result<NodeValue, ExpectationError> {
        let e = self.economy;
        loop {
            self.visit()?;
            let sold = node.sold(e);
            let unsold = e.buyers().filter(|&i| !sold.contains_buyer(i));
            let demands = demand_situation_for(e, &node.prices, &node.rationing, unsold);

            match assess(e, &node.prices, &demands)? {
                RoundDecision::Terminal => {
                    self.stats.leaves += 1;
                    self.stats.probability_mass += &weight;
                    return Ok(NodeValue {
                        profit: e
                            .buyers()
                            .map(|i| whole(indirect_utility(e, &node.prices, &node.rationing, i)))
                            .collect(),
                        price: node.prices.as_slice().iter().map(|&p| whole(p)).collect(),
                    });
                }
                RoundDecision::Raise { x_min } => {
                    node.prices = node.prices.raised(&x_min);
                }
                RoundDecision::Lottery { item, entrants, .. } => {
                    self.stats.lotteries += 1;
                    let share = Rational::new(BigInt::one(), BigInt::from(entrants.len()));
                    let child_weight = &weight * &share;
                    let mut total = NodeValue {
                        profit: vec![Rational::zero(); e.buyer_count()],
                        price: vec![Rational::zero(); e.item_count()],
                    };
                    for &winner in &entrants {
                        let mut rationing = node.rationing.clone();
                        for i in e.buyers().filter(|&i| i != winner) {
                            rationing.forbid(i, item).expect("lottery items are real");
                        }
                        let child = AllocationSituation { prices: node.prices.clone(), rationing };
                        let v = self.evaluate(child, child_weight.clone())?;
                        for (acc, x) in total.profit.iter_mut().zip(&v.profit) {
                            *acc += x;
                        }
                        for (acc, x) in total.price.iter_mut().zip(&v.price) {
                            *acc += x;
                        }
                    }
                    for x in total.profit.iter_mut().chain(total.price.iter_mut()) {
                        *x *= &share;
                    }
                    return Ok(total);
                }
            }
        }
    }
}

/// Expected values from the initial allocation situation (lower-bound prices, nothing sold).
pub fn expected_values(economy: &Economy, config: &ExpectationConfig) -> Result<ExpectationReport, ExpectationError> {
    expected_values_from(economy, AllocationSituation::initial(economy), config)
}

/// Expected values from an arbitrary allocation situation.
pub fn expected_values_from(
    economy: &Economy,
    start: AllocationSituation,
    config: &ExpectationConfig,
) -> Result<ExpectationReport, ExpectationError> {
    let mut walk = Walk { economy, limit: config.node_limit, stats: TreeStats::default() };
    let value = walk.evaluate(start, Rational::one())?;
    Ok(ExpectationReport { expected_profit: value.profit, expected_price: value.price, tree_stats: walk.stats })
}

/// One leaf of the lottery tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct History {
    pub probability: Rational,
    /// Lottery winners along the path, in order.
    pub winners: Vec<BuyerId>,
    pub prices: PriceVector,
    pub rationing: RationingSystem,
    pub allocation: Allocation,
}

impl History {
    /// `u_i(π(i)) − p_π(i)` under the given valuation row.
    pub fn realized_profit(&self, valuations: &[i64], buyer: BuyerId) -> i64 {
        let a = self.allocation.item_of(buyer);
        valuations[a.0] - self.prices.get(a)
    }
}

/// Runs the mechanism down every lottery branch and lists the leaves in
/// depth-first order (entrants ascending).
pub fn enumerate_histories(economy: &Economy, config: &ExpectationConfig) -> Result<Vec<History>, ExpectationError> {
    let mut leaves = Vec::new();
    let mut stats = TreeStats::default();
    let root = Mechanism::new(economy).without_trace();
    explore(root, Rational::one(), Vec::new(), config.node_limit, &mut stats, &mut leaves)?;
    Ok(leaves)
}

fn explore(
    mut run: Mechanism<'_>,
    probability: Rational,
    winners: Vec<BuyerId>,
    limit: usize,
    stats: &mut TreeStats,
    leaves: &mut Vec<History>,
) -> Result<(), ExpectationError> {
    loop {
        stats.nodes += 1;
        if stats.nodes > limit {
            return Err(ExpectationError::TreeSizeExceeded { limit, stats: stats.clone() });
        }
        match run.advance()? {
            Progress::Raised => {}
            Progress::Finished => {
                let outcome = run.outcome().expect("finished runs carry an outcome");
                stats.leaves += 1;
                stats.probability_mass += &probability;
                leaves.push(History {
                    probability,
                    winners,
                    prices: outcome.prices.clone(),
                    rationing: outcome.rationing.clone(),
                    allocation: outcome.allocation.clone(),
                });
                return Ok(());
            }
            Progress::Lottery(pending) => {
                stats.lotteries += 1;
                let share = &probability / Rational::from_integer(BigInt::from(pending.entrants.len()));
                for &winner in &pending.entrants {
                    let mut branch = run.clone();
                    branch.resolve(winner)?;
                    let mut path = winners.clone();
                    path.push(winner);
                    explore(branch, share.clone(), path, limit, stats, leaves)?;
                }
                return Ok(());
            }
        }
    }
}

/// Probability-weighted profits and prices of a leaf list, scoring each
/// buyer with their row in `economy`.
pub fn aggregate_histories(economy: &Economy, histories: &[History]) -> (Vec<Rational>, Vec<Rational>) {
    let mut profit = vec![Rational::zero(); economy.buyer_count()];
    let mut price = vec![Rational::zero(); economy.item_count()];
    for h in histories {
        for i in economy.buyers() {
            profit[i.0] += &h.probability * whole(h.realized_profit(economy.valuations(i), i));
        }
        for a in economy.items() {
            price[a.0] += &h.probability * whole(h.prices.get(a));
        }
    }
    (profit, price)
}

pub(crate) fn whole(x: i64) -> Rational {
    Rational::from_integer(BigInt::from(x))
}

/// `numerator/denominator`, always with an explicit denominator (`5/1`).
pub fn fraction(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Decimal rendering truncated toward zero to `places` digits, computed exactly.
pub fn decimal(r: &Rational, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = (r * Rational::from_integer(scale.clone())).trunc().to_integer();
    let negative = r.is_negative();
    let magnitude = scaled.abs();
    let int_part = &magnitude / &scale;
    let frac_part = &magnitude % &scale;
    let sign = if negative && !magnitude.is_zero() { "-" } else { "" };
    if places == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{:0>width$}", frac_part.to_string(), width = places as usize)
    }
}
