use crate::matching::Matching;
use crate::model::{Allocation, BuyerId, ItemId, ItemSet, PriceVector, RationingSystem};

/// A lottery for one item at its upper bound.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LotteryEvent {
    pub round: usize,
    pub item: ItemId,
    /// Unsold buyers whose whole demand lies in the minimal over-demanded set
    /// and includes `item`, ascending.
    pub entrants: Vec<BuyerId>,
    pub winner: BuyerId,
}

impl LotteryEvent {
    /// One-based position of the winner among the entrants.
    pub fn branch(&self) -> usize {
        self.entrants.iter().position(|&i| i == self.winner).map_or(0, |k| k + 1)
    }
}

/// One round as seen by the seller after the demand refresh.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoundRecord {
    pub t: usize,
    /// `t`, followed by `.k` for every earlier lottery won by its `k`-th entrant.
    pub label: String,
    pub prices: PriceVector,
    /// Empty when the round ends the run.
    pub x_min: ItemSet,
    /// `U_i`, one per buyer.
    pub forbidden: Vec<ItemSet>,
    pub sold_buyers: Vec<BuyerId>,
    /// `D_i` for unsold buyers, `None` for buyers already holding an item.
    pub demands: Vec<Option<ItemSet>>,
    pub sold_items: ItemSet,
    pub lottery: Option<LotteryEvent>,
}

/// The terminal tuple of a run.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub prices: PriceVector,
    pub rationing: RationingSystem,
    /// `M*`: lottery sales plus the final completion.
    pub matching: Matching,
    pub allocation: Allocation,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trace {
    pub rounds: Vec<RoundRecord>,
    pub outcome: Outcome,
}

impl Trace {
    pub fn lotteries(&self) -> impl Iterator<Item = &LotteryEvent> {
        self.rounds.iter().filter_map(|r| r.lottery.as_ref())
    }

    /// Winners in lottery order; feeding them to a scripted policy replays the run.
    pub fn winners(&self) -> Vec<BuyerId> {
        self.lotteries().map(|e| e.winner).collect()
    }

    /// Rounds that ended with a price increase.
    pub fn price_increase_rounds(&self) -> usize {
        self.rounds.iter().filter(|r| !r.x_min.is_empty() && r.lottery.is_none()).count()
    }
}
