//! Misreporting one buyer's valuations.
//!
//! A strategy is a full reported value row that the manipulator follows for
//! the whole run. Its worth is the manipulator's expected profit measured
//! with the true row, over every lottery outcome of the run driven by the
//! report.

use num_bigint::BigInt;
use rayon::prelude::*;
use thiserror::Error;

use crate::expectation::{enumerate_histories, expected_values, whole, ExpectationConfig, ExpectationError, Rational};
use crate::model::{BuyerId, Economy, EconomyError, ItemId, Money};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("buyer {0} is not in the economy")]
    UnknownBuyer(BuyerId),
    #[error("strategy has {found} values, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("reported value {value} for item {item:?} is negative")]
    Negative { item: ItemId, value: Money },
    #[error("reported dummy value must be 0, got {0}")]
    DummyValue(Money),
    #[error("search over {strategies} strategies exceeds the limit of {limit}")]
    SizeGuard { strategies: u128, limit: u128 },
    #[error("cap {0} is negative")]
    NegativeCap(Money),
    #[error("case analysis needs exactly two buyers, found {0}")]
    NotTwoBuyers(usize),
    #[error("invalid modified economy: {0:?}")]
    Economy(Vec<EconomyError>),
    #[error(transparent)]
    Expectation(#[from] ExpectationError),
}

/// A reported value row, dummy first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Strategy {
    reported: Vec<Money>,
}

impl Strategy {
    pub fn new(reported: Vec<Money>) -> Result<Self, StrategyError> {
        match reported.first() {
            None => return Err(StrategyError::Length { expected: 1, found: 0 }),
            Some(&v) if v != 0 => return Err(StrategyError::DummyValue(v)),
            _ => {}
        }
        if let Some((a, &v)) = reported.iter().enumerate().find(|(_, &v)| v < 0) {
            return Err(StrategyError::Negative { item: ItemId(a), value: v });
        }
        Ok(Strategy { reported })
    }

    /// Values for the real items only; the dummy's zero is prepended.
    pub fn from_real(values: &[Money]) -> Result<Self, StrategyError> {
        let mut reported = Vec::with_capacity(values.len() + 1);
        reported.push(0);
        reported.extend_from_slice(values);
        Strategy::new(reported)
    }

    pub fn truthful(problem: &ManipulationProblem) -> Self {
        Strategy { reported: problem.true_values().to_vec() }
    }

    pub fn values(&self) -> &[Money] {
        &self.reported
    }

    pub fn real(&self) -> &[Money] {
        &self.reported[1..]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ManipulationProblem<'e> {
    economy: &'e Economy,
    manipulator: BuyerId,
}

impl<'e> ManipulationProblem<'e> {
    pub fn new(economy: &'e Economy, manipulator: BuyerId) -> Result<Self, StrategyError> {
        if !economy.contains_buyer(manipulator) {
            return Err(StrategyError::UnknownBuyer(manipulator));
        }
        Ok(ManipulationProblem { economy, manipulator })
    }

    pub fn economy(&self) -> &'e Economy {
        self.economy
    }

    pub fn manipulator(&self) -> BuyerId {
        self.manipulator
    }

    pub fn true_values(&self) -> &'e [Money] {
        self.economy.valuations(self.manipulator)
    }

    /// The economy the mechanism actually sees when the manipulator plays `strategy`.
    pub fn reported_economy(&self, strategy: &Strategy) -> Result<Economy, StrategyError> {
        if strategy.values().len() != self.economy.item_count() {
            return Err(StrategyError::Length { expected: self.economy.item_count(), found: strategy.values().len() });
        }
        self.economy.with_valuations(self.manipulator, strategy.values().to_vec()).map_err(StrategyError::Economy)
    }
}

/// Expected true profit of the manipulator when reporting `strategy`.
pub fn expected_profit_under_strategy(
    problem: &ManipulationProblem<'_>,
    strategy: &Strategy,
    config: &ExpectationConfig,
) -> Result<Rational, StrategyError> {
    let reported = problem.reported_economy(strategy)?;
    let histories = enumerate_histories(&reported, config)?;
    let truth = problem.true_values();
    let mut total = Rational::from_integer(BigInt::from(0));
    for h in &histories {
        total += &h.probability * whole(h.realized_profit(truth, problem.manipulator));
    }
    Ok(total)
}

/// `max_a p̄_a + max_a u(a)` for the manipulator.
pub fn default_cap(problem: &ManipulationProblem<'_>) -> Money {
    let top_price = problem.economy.upper_bounds().as_slice().iter().copied().max().unwrap_or(0);
    let top_value = problem.true_values().iter().copied().max().unwrap_or(0);
    top_price + top_value
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    /// Largest number of strategies the search may evaluate.
    pub strategy_limit: u128,
    pub expectation: ExpectationConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { strategy_limit: 1_000_000, expectation: ExpectationConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub best: Strategy,
    pub best_profit: Rational,
    pub truthful_profit: Rational,
    /// No strategy within the cap beats the truthful report.
    pub truthful_optimal: bool,
    pub evaluated: usize,
}

/// Evaluates every report in `[0, cap]` per real item.
///
/// Ties go to the truthful report whenever it attains the maximum, then to the
/// lexicographically smallest report.
pub fn optimal_strategy_search(
    problem: &ManipulationProblem<'_>,
    cap: Money,
    config: &SearchConfig,
) -> Result<SearchOutcome, StrategyError> {
    if cap < 0 {
        return Err(StrategyError::NegativeCap(cap));
    }
    let m = problem.economy.item_count() - 1;
    let base = cap as u128 + 1;
    let count = (0..m).try_fold(1u128, |acc, _| acc.checked_mul(base)).unwrap_or(u128::MAX);
    if count > config.strategy_limit {
        return Err(StrategyError::SizeGuard { strategies: count, limit: config.strategy_limit });
    }

    let truthful = Strategy::truthful(problem);
    let truthful_profit = expected_profit_under_strategy(problem, &truthful, &config.expectation)?;

    // index k encodes the report in base `cap + 1`, most significant item first,
    // so ascending k is lexicographic order
    let decode = |mut k: u128| {
        let mut real = vec![0; m];
        for slot in real.iter_mut().rev() {
            *slot = (k % base) as Money;
            k /= base;
        }
        Strategy::from_real(&real).expect("decoded reports are non-negative")
    };
    let profits: Vec<Result<Rational, StrategyError>> = (0..count)
        .into_par_iter()
        .map(|k| expected_profit_under_strategy(problem, &decode(k), &config.expectation))
        .collect();

    let mut best: Option<(u128, Rational)> = None;
    for (k, profit) in profits.into_iter().enumerate() {
        let profit = profit?;
        if best.as_ref().is_none_or(|(_, b)| profit > *b) {
            best = Some((k as u128, profit));
        }
    }
    let (best_index, best_profit) = best.expect("the search space is never empty");
    let truthful_optimal = truthful_profit >= best_profit;
    let (best, best_profit) =
        if truthful_optimal { (truthful, truthful_profit.clone()) } else { (decode(best_index), best_profit) };
    Ok(SearchOutcome { best, best_profit, truthful_profit, truthful_optimal, evaluated: count as usize })
}

/// How the last round of a two-buyer run is decided.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TwoBuyerCase {
    /// Lower-bound prices already clear the market.
    Uncontested,
    /// Both buyers demand exactly `{item}` at the lower bounds.
    Contested {
        item: ItemId,
        /// `p̄_a − p̲_a`.
        k: Money,
        /// Price increase at which each buyer starts demanding an alternative.
        k1: Money,
        k2: Money,
        /// The manipulator's best alternative to `item` at lower bounds.
        b1: ItemId,
        k_hat: Money,
        resolution: ContestResolution,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContestResolution {
    /// The item reaches its upper bound and is raffled.
    Lottery,
    /// The manipulator turns to an alternative first and the opponent keeps the item.
    ManipulatorYields,
    /// The opponent turns to an alternative first.
    OpponentYields,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoBuyerVerdict {
    pub case: TwoBuyerCase,
    /// Truthful expected profit predicted from the case.
    pub closed_form: Rational,
    /// Truthful expected profit from the lottery tree.
    pub computed: Rational,
}

impl TwoBuyerVerdict {
    pub fn agrees(&self) -> bool {
        self.closed_form == self.computed
    }
}

/// Predicts the manipulator's truthful expected profit in closed form for
/// a two-buyer economy and compares it with the exact tree value.
pub fn two_buyer_case_analysis(
    problem: &ManipulationProblem<'_>,
    config: &ExpectationConfig,
) -> Result<TwoBuyerVerdict, StrategyError> {
    let e = problem.economy;
    if e.buyer_count() != 2 {
        return Err(StrategyError::NotTwoBuyers(e.buyer_count()));
    }
    let me = problem.manipulator;
    let other = BuyerId(1 - me.0);
    let low = e.lower_bounds();
    let net = |i: BuyerId, a: ItemId| e.value(i, a) - low.get(a);
    let top = |i: BuyerId| e.items().map(|a| net(i, a)).max().expect("the dummy is always present");
    let demand = |i: BuyerId| -> Vec<ItemId> { e.items().filter(|&a| net(i, a) == top(i)).collect() };

    let (d1, d2) = (demand(me), demand(other));
    let (case, closed_form) = match (d1.as_slice(), d2.as_slice()) {
        (&[a], &[b]) if a == b && !a.is_dummy() => {
            let best_other = |i: BuyerId| {
                e.items().filter(|&b| b != a).max_by_key(|&b| (net(i, b), std::cmp::Reverse(b))).expect("dummy differs")
            };
            let b1 = best_other(me);
            let b2 = best_other(other);
            let k = e.upper_bounds().get(a) - low.get(a);
            let k1 = net(me, a) - net(me, b1);
            let k2 = net(other, a) - net(other, b2);
            let k_hat = k.min(k1 - 1).min(k2 - 1);
            let (resolution, value) = if k_hat == k {
                // win: u(a) − p̲_a − k; lose: the alternative at its lower bound
                let twice = (net(me, a) - k) + net(me, b1);
                (ContestResolution::Lottery, Rational::new(BigInt::from(twice), BigInt::from(2)))
            } else if k_hat == k1 - 1 {
                (ContestResolution::ManipulatorYields, whole(net(me, b1)))
            } else {
                (ContestResolution::OpponentYields, whole(net(me, a) - k2))
            };
            (TwoBuyerCase::Contested { item: a, k, k1, k2, b1, k_hat, resolution }, value)
        }
        _ => (TwoBuyerCase::Uncontested, whole(top(me))),
    };
    let computed = expected_values(e, config)?.profit(me).clone();
    Ok(TwoBuyerVerdict { case, closed_form, computed })
}
