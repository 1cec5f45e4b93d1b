//! The ascending mechanism with rationing.
//!
//! Each round the seller announces prices, the unsold buyers report their
//! demands (re-reporting until nobody asks for an item that is already
//! sold), and the seller looks for a minimal over-demanded set `X_min`
//! among those demands:
//!
//! * none: the run ends and [`rm`] completes the allocation;
//! * every item of `X_min` below its upper bound: all of them go up by one;
//! * otherwise the lowest-index item of `X_min` at its upper bound is
//!   raffled among the buyers whose whole demand lies in `X_min` and
//!   includes it.
//!
//! [`Mechanism`] exposes this one round at a time so lotteries can be
//! resolved externally (scripted, seeded or by cloning the state for every
//! possible winner); [`run_mapr`] drives it to the end with a
//! [`LotteryPolicy`].

mod lottery;
mod trace;

pub use lottery::LotteryPolicy;
pub use trace::{LotteryEvent, Outcome, RoundRecord, Trace};

use thiserror::Error;

use crate::matching::{build_graph, matching_to_allocation, max_matching, maximize, Matching, MatchingError};
use crate::model::{
    demand_situation_for, BuyerId, DemandSituation, Economy, ItemId, ItemSet, PriceVector, RationingSystem,
};
use crate::overdemand::{mods, OverdemandError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechanismError {
    #[error("cannot raise item {0:?} past its upper bound")]
    UpperBoundViolation(ItemId),
    #[error("no minimal over-demanded set to act on")]
    EmptyMinimalSet,
    #[error("lottery for item {0:?} has no entrants")]
    NoEntrants(ItemId),
    #[error("buyer {winner} is not an entrant of the lottery for item {item:?} (entrants {entrants:?})")]
    WinnerNotEntrant { winner: BuyerId, item: ItemId, entrants: Vec<BuyerId> },
    #[error("scripted winner list ran out at lottery #{}", .lottery + 1)]
    ScriptExhausted { lottery: usize },
    #[error("item {0:?} is not at its upper bound")]
    NotAtUpperBound(ItemId),
    #[error("a lottery is waiting to be resolved")]
    LotteryPending,
    #[error("no lottery is waiting to be resolved")]
    NoPendingLottery,
    #[error("the run has already finished")]
    Finished,
    #[error("the run has not finished yet")]
    NotFinished,
    #[error("buyer {0} demands only real items but the final completion left them unmatched")]
    UnmatchedDemander(BuyerId),
    #[error("item {0:?} is priced above its lower bound but was left unsold")]
    UnsoldAboveLowerBound(ItemId),
    #[error("run exceeded {0} rounds")]
    RoundLimit(usize),
    #[error(transparent)]
    Overdemand(#[from] OverdemandError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
}

/// Seller-side state at the start of round `t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MechanismState {
    pub round: usize,
    pub prices: PriceVector,
    /// `M^t`: items sold by lottery so far.
    pub sold: Matching,
    /// `R^t`: the permission bits each buyer keeps for themself.
    pub rationing: RationingSystem,
    /// Latest reported demands of the unsold buyers.
    pub demands: DemandSituation,
}

impl MechanismState {
    /// Lower-bound prices, nothing sold, nothing rationed.
    pub fn initial(economy: &Economy) -> Self {
        let prices = economy.lower_bounds().clone();
        let rationing = RationingSystem::for_economy(economy);
        let demands = demand_situation_for(economy, &prices, &rationing, economy.buyers());
        MechanismState { round: 0, prices, sold: Matching::new(), rationing, demands }
    }

    /// `N*`: buyers not yet holding an item.
    pub fn unsold_buyers<'a>(&'a self, economy: &Economy) -> impl Iterator<Item = BuyerId> + 'a {
        economy.buyers().filter(move |&i| !self.sold.contains_buyer(i))
    }
}

/// Re-collects the unsold buyers' demands until none of them asks for a sold item.
///
/// Every pass makes each buyer whose demand meets a sold item give up
/// permission for those items, then report again. Returns the number of
/// such passes, at most the number of items.
pub fn refresh_demands(economy: &Economy, state: &mut MechanismState) -> usize {
    let sold_items = state.sold.items();
    let buyers: Vec<BuyerId> = state.unsold_buyers(economy).collect();
    state.demands = demand_situation_for(economy, &state.prices, &state.rationing, buyers);

    let mut passes = 0;
    loop {
        let clashing: Vec<(BuyerId, ItemSet)> = state
            .demands
            .iter()
            .map(|(i, d)| (i, d.intersection(&sold_items).copied().collect::<ItemSet>()))
            .filter(|(_, clash)| !clash.is_empty())
            .collect();
        if clashing.is_empty() {
            return passes;
        }
        for (i, clash) in &clashing {
            for &a in clash {
                state.rationing.forbid(*i, a).expect("sold items are real");
            }
        }
        let updated = demand_situation_for(economy, &state.prices, &state.rationing, clashing.iter().map(|(i, _)| *i));
        let mut merged: std::collections::BTreeMap<BuyerId, ItemSet> =
            state.demands.iter().map(|(i, d)| (i, d.clone())).collect();
        merged.extend(updated.iter().map(|(i, d)| (i, d.clone())));
        state.demands = DemandSituation::new(merged).expect("the dummy keeps every demand nonempty");
        passes += 1;
    }
}

/// What the seller does at the end of a round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoundDecision {
    /// Every non-dummy demander can be matched: stop.
    Terminal,
    /// Raise every item of the minimal over-demanded set.
    Raise { x_min: ItemSet },
    /// Raffle `item` among `entrants`.
    Lottery { x_min: ItemSet, item: ItemId, entrants: Vec<BuyerId> },
}

impl RoundDecision {
    pub fn x_min(&self) -> Option<&ItemSet> {
        match self {
            RoundDecision::Terminal => None,
            RoundDecision::Raise { x_min } | RoundDecision::Lottery { x_min, .. } => Some(x_min),
        }
    }
}

/// The seller's step (6)–(8) decision given the unsold buyers' demands.
///
/// Shared by the mechanism and the expectation recursion so both make the
/// same choices.
pub fn assess(
    economy: &Economy,
    prices: &PriceVector,
    demands: &DemandSituation,
) -> Result<RoundDecision, MechanismError> {
    let matching = max_matching(demands);
    if matching.len() == demands.real_demanders().count() {
        return Ok(RoundDecision::Terminal);
    }
    let x_min = mods(demands, &matching)?;
    let capped = x_min.iter().copied().find(|&a| prices.get(a) == economy.upper_bounds().get(a));
    match capped {
        None => Ok(RoundDecision::Raise { x_min }),
        Some(item) => {
            let entrants = lottery_entrants(demands, &x_min, item);
            if entrants.is_empty() {
                return Err(MechanismError::NoEntrants(item));
            }
            Ok(RoundDecision::Lottery { x_min, item, entrants })
        }
    }
}

/// `{i : item ∈ D_i ⊆ X_min}` in ascending order.
pub fn lottery_entrants(demands: &DemandSituation, x_min: &ItemSet, item: ItemId) -> Vec<BuyerId> {
    demands.iter().filter(|(_, d)| d.contains(&item) && d.is_subset(x_min)).map(|(i, _)| i).collect()
}

/// Raises every item of `x_min` by one unit and advances the round.
pub fn price_increase_step(
    economy: &Economy,
    state: &mut MechanismState,
    x_min: &ItemSet,
) -> Result<(), MechanismError> {
    if x_min.is_empty() {
        return Err(MechanismError::EmptyMinimalSet);
    }
    if let Some(&a) = x_min.iter().find(|&&a| state.prices.get(a) >= economy.upper_bounds().get(a)) {
        return Err(MechanismError::UpperBoundViolation(a));
    }
    state.prices = state.prices.raised(x_min);
    state.round += 1;
    Ok(())
}

/// Raffles `item` among the entrants and records the sale.
pub fn lottery_step(
    economy: &Economy,
    state: &mut MechanismState,
    x_min: &ItemSet,
    item: ItemId,
    policy: &mut LotteryPolicy,
) -> Result<LotteryEvent, MechanismError> {
    let entrants = checked_entrants(economy, state, x_min, item)?;
    let winner = policy.draw(item, &entrants)?;
    sell(state, item, entrants, winner)
}

fn checked_entrants(
    economy: &Economy,
    state: &MechanismState,
    x_min: &ItemSet,
    item: ItemId,
) -> Result<Vec<BuyerId>, MechanismError> {
    if state.prices.get(item) != economy.upper_bounds().get(item) {
        return Err(MechanismError::NotAtUpperBound(item));
    }
    let entrants = lottery_entrants(&state.demands, x_min, item);
    if entrants.is_empty() {
        return Err(MechanismError::NoEntrants(item));
    }
    Ok(entrants)
}

fn sell(
    state: &mut MechanismState,
    item: ItemId,
    entrants: Vec<BuyerId>,
    winner: BuyerId,
) -> Result<LotteryEvent, MechanismError> {
    if !entrants.contains(&winner) {
        return Err(MechanismError::WinnerNotEntrant { winner, item, entrants });
    }
    state.sold.insert(winner, item)?;
    let event = LotteryEvent { round: state.round, item, entrants, winner };
    state.round += 1;
    Ok(event)
}

/// Final completion of the allocation (the RM subroutine).
///
/// `demands` are the unsold buyers' demands at the final prices. First the
/// unsold items priced above their lower bound are matched among the
/// buyers who demand them; the part of that matching inside `BG(demands)`
/// is then augmented to a maximum matching of `BG(demands)`, and the
/// remaining edges of the first matching are added back where they do not
/// clash. The result is disjoint from `sold`.
pub fn rm(
    economy: &Economy,
    demands: &DemandSituation,
    sold: &Matching,
    prices: &PriceVector,
) -> Result<Matching, MechanismError> {
    let above_lower: ItemSet = economy
        .real_items()
        .filter(|&a| !sold.contains_item(a) && prices.get(a) > economy.lower_bounds().get(a))
        .collect();
    let unsold = demands.restricted(|i, _| !sold.contains_buyer(i));

    let first = max_matching(&unsold.intersected(&above_lower));
    let graph = build_graph(&unsold);
    let completed = maximize(&graph, &first.restricted_to(&graph))?;

    let mut result = completed.clone();
    for (i, a) in first.pairs() {
        if !completed.contains_buyer(i) && !completed.contains_item(a) {
            result.insert(i, a)?;
        }
    }

    if let Some(i) = unsold.real_demanders().find(|&i| !result.contains_buyer(i)) {
        return Err(MechanismError::UnmatchedDemander(i));
    }
    if let Some(&a) = above_lower.iter().find(|&&a| !result.contains_item(a)) {
        return Err(MechanismError::UnsoldAboveLowerBound(a));
    }
    Ok(result)
}

/// A lottery the caller has to resolve before the run can continue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingLottery {
    pub item: ItemId,
    pub entrants: Vec<BuyerId>,
}

/// Result of [`Mechanism::advance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Progress {
    Raised,
    Lottery(PendingLottery),
    Finished,
}

#[derive(Debug, Clone)]
struct Pending {
    x_min: ItemSet,
    item: ItemId,
    entrants: Vec<BuyerId>,
}

/// Round-by-round driver. Cloning it forks the run, which is how the
/// expectation module explores every lottery outcome.
#[derive(Debug, Clone)]
pub struct Mechanism<'e> {
    economy: &'e Economy,
    state: MechanismState,
    record: bool,
    rounds: Vec<RoundRecord>,
    branch: String,
    pending: Option<Pending>,
    outcome: Option<Outcome>,
    round_limit: usize,
}

impl<'e> Mechanism<'e> {
    pub fn new(economy: &'e Economy) -> Self {
        let spread = usize::try_from(economy.total_price_spread()).unwrap_or(usize::MAX);
        Mechanism {
            economy,
            state: MechanismState::initial(economy),
            record: true,
            rounds: Vec::new(),
            branch: String::new(),
            pending: None,
            outcome: None,
            round_limit: spread.saturating_add(economy.item_count()).saturating_add(1),
        }
    }

    /// Skips building per-round records. Outcomes are unaffected.
    pub fn without_trace(mut self) -> Self {
        self.record = false;
        self
    }

    pub fn economy(&self) -> &'e Economy {
        self.economy
    }

    pub fn state(&self) -> &MechanismState {
        &self.state
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn pending_lottery(&self) -> Option<PendingLottery> {
        self.pending.as_ref().map(|p| PendingLottery { item: p.item, entrants: p.entrants.clone() })
    }

    /// Plays one round up to the seller's decision.
    pub fn advance(&mut self) -> Result<Progress, MechanismError> {
        if self.outcome.is_some() {
            return Err(MechanismError::Finished);
        }
        if self.pending.is_some() {
            return Err(MechanismError::LotteryPending);
        }
        if self.state.round > self.round_limit {
            return Err(MechanismError::RoundLimit(self.round_limit));
        }

        refresh_demands(self.economy, &mut self.state);
        let decision = assess(self.economy, &self.state.prices, &self.state.demands)?;
        if self.record {
            let x_min = decision.x_min().cloned().unwrap_or_default();
            self.rounds.push(self.snapshot(x_min));
        }

        match decision {
            RoundDecision::Terminal => {
                self.finish()?;
                Ok(Progress::Finished)
            }
            RoundDecision::Raise { x_min } => {
                price_increase_step(self.economy, &mut self.state, &x_min)?;
                Ok(Progress::Raised)
            }
            RoundDecision::Lottery { x_min, item, entrants } => {
                self.pending = Some(Pending { x_min, item, entrants: entrants.clone() });
                Ok(Progress::Lottery(PendingLottery { item, entrants }))
            }
        }
    }

    /// Settles the pending lottery in favour of `winner`.
    pub fn resolve(&mut self, winner: BuyerId) -> Result<LotteryEvent, MechanismError> {
        let pending = self.pending.take().ok_or(MechanismError::NoPendingLottery)?;
        let entrants = checked_entrants(self.economy, &self.state, &pending.x_min, pending.item)?;
        let event = match sell(&mut self.state, pending.item, entrants, winner) {
            Ok(event) => event,
            Err(e) => {
                self.pending = Some(pending);
                return Err(e);
            }
        };
        if self.record {
            if let Some(last) = self.rounds.last_mut() {
                last.lottery = Some(event.clone());
            }
        }
        self.branch.push_str(&format!(".{}", event.branch()));
        Ok(event)
    }

    /// Runs to completion, asking `policy` for every lottery winner.
    pub fn run(mut self, policy: &mut LotteryPolicy) -> Result<Trace, MechanismError> {
        loop {
            match self.advance()? {
                Progress::Raised => {}
                Progress::Lottery(p) => {
                    let winner = policy.draw(p.item, &p.entrants)?;
                    self.resolve(winner)?;
                }
                Progress::Finished => return self.into_trace(),
            }
        }
    }

    /// The finished trace; fails if the run has not finished.
    pub fn into_trace(self) -> Result<Trace, MechanismError> {
        match self.outcome {
            Some(outcome) => Ok(Trace { rounds: self.rounds, outcome }),
            None => {
                Err(if self.pending.is_some() { MechanismError::LotteryPending } else { MechanismError::NotFinished })
            }
        }
    }

    fn finish(&mut self) -> Result<(), MechanismError> {
        let completion = rm(self.economy, &self.state.demands, &self.state.sold, &self.state.prices)?;
        let matching = self.state.sold.union(&completion)?;
        let allocation = matching_to_allocation(&matching, self.economy.buyer_count());
        self.outcome = Some(Outcome {
            prices: self.state.prices.clone(),
            rationing: self.state.rationing.clone(),
            matching,
            allocation,
        });
        Ok(())
    }

    fn snapshot(&self, x_min: ItemSet) -> RoundRecord {
        let s = &self.state;
        let t = s.round;
        RoundRecord {
            t,
            label: format!("{t}{}", self.branch),
            prices: s.prices.clone(),
            x_min,
            forbidden: self.economy.buyers().map(|i| s.rationing.forbidden(i)).collect(),
            sold_buyers: s.sold.buyers().collect(),
            demands: self.economy.buyers().map(|i| s.demands.get(i).cloned()).collect(),
            sold_items: s.sold.items(),
            lottery: None,
        }
    }
}

/// Runs the mechanism from lower-bound prices to its terminal tuple.
pub fn run_mapr(economy: &Economy, policy: &mut LotteryPolicy) -> Result<Trace, MechanismError> {
    Mechanism::new(economy).run(policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{example1, items};
    use crate::model::{validate_economy, RawEconomy};

    fn b(i: usize) -> BuyerId {
        BuyerId(i - 1)
    }

    #[test]
    fn example1_branch_one() {
        let e = example1();
        let trace = run_mapr(&e, &mut LotteryPolicy::scripted([b(2)])).unwrap();
        assert_eq!(trace.outcome.prices, PriceVector::from_real(&[5, 4, 4, 7]));
        let pi: Vec<usize> = trace.outcome.allocation.as_slice().iter().map(|a| a.0).collect();
        assert_eq!(pi, vec![0, 3, 2, 1, 4]);
        let labels: Vec<&str> = trace.rounds.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["0", "1", "2", "3", "4.1", "5.1", "6.1"]);
    }

    #[test]
    fn example1_branch_two() {
        let e = example1();
        let trace = run_mapr(&e, &mut LotteryPolicy::scripted([b(3)])).unwrap();
        let pi: Vec<usize> = trace.outcome.allocation.as_slice().iter().map(|a| a.0).collect();
        assert_eq!(pi, vec![0, 2, 3, 1, 4]);
        assert_eq!(trace.rounds.last().unwrap().label, "6.2");
    }

    #[test]
    fn no_contention_stops_at_lower_bounds() {
        let e = validate_economy(RawEconomy {
            item_names: vec!["a".into(), "b".into()],
            valuations: vec![vec![0, 9, 1], vec![0, 1, 9]],
            lower_bounds: vec![0, 2, 2],
            upper_bounds: vec![0, 5, 5],
        })
        .unwrap();
        let trace = run_mapr(&e, &mut LotteryPolicy::seeded(0)).unwrap();
        assert_eq!(trace.rounds.len(), 1);
        assert_eq!(&trace.outcome.prices, e.lower_bounds());
        assert_eq!(trace.outcome.allocation.as_slice(), &[ItemId(1), ItemId(2)]);
    }

    #[test]
    fn refresh_without_sales_is_a_no_op() {
        let e = example1();
        let mut s = MechanismState::initial(&e);
        let before = s.clone();
        assert_eq!(refresh_demands(&e, &mut s), 0);
        assert_eq!(s, before);
    }

    #[test]
    fn refresh_after_the_lottery() {
        let e = example1();
        let mut s = MechanismState::initial(&e);
        s.prices = PriceVector::from_real(&[5, 4, 4, 5]);
        s.sold.insert(b(2), ItemId(3)).unwrap();
        assert_eq!(refresh_demands(&e, &mut s), 1);
        assert_eq!(s.rationing.forbidden(b(3)), items(&[3]));
        assert_eq!(s.demands.get(b(3)), Some(&items(&[4])));
        assert_eq!(s.demands.get(b(2)), None);
    }

    #[test]
    fn refresh_follows_a_chain_of_sold_items() {
        // Buyer 2 prefers a, then b, then c; a and b are already sold to buyer 1 and 3.
        let e = validate_economy(RawEconomy {
            item_names: ["a", "b", "c"].map(String::from).to_vec(),
            valuations: vec![vec![0, 5, 0, 0], vec![0, 9, 7, 5], vec![0, 0, 5, 0]],
            lower_bounds: vec![0, 1, 1, 1],
            upper_bounds: vec![0, 1, 1, 1],
        })
        .unwrap();
        let mut s = MechanismState::initial(&e);
        s.sold.insert(b(1), ItemId(1)).unwrap();
        s.sold.insert(b(3), ItemId(2)).unwrap();
        assert_eq!(refresh_demands(&e, &mut s), 2);
        assert_eq!(s.rationing.forbidden(b(2)), items(&[1, 2]));
        assert_eq!(s.demands.get(b(2)), Some(&items(&[3])));
    }

    #[test]
    fn price_increase_checks_bounds() {
        let e = example1();
        let mut s = MechanismState::initial(&e);
        price_increase_step(&e, &mut s, &items(&[3])).unwrap();
        assert_eq!(s.prices, PriceVector::from_real(&[5, 4, 2, 5]));
        assert_eq!(s.round, 1);
        s.prices = PriceVector::from_real(&[5, 4, 4, 5]);
        assert_eq!(price_increase_step(&e, &mut s, &items(&[3])), Err(MechanismError::UpperBoundViolation(ItemId(3))));
        assert_eq!(price_increase_step(&e, &mut s, &items(&[])), Err(MechanismError::EmptyMinimalSet));
    }

    #[test]
    fn lottery_at_round_three() {
        let e = example1();
        let mut s = MechanismState::initial(&e);
        s.prices = PriceVector::from_real(&[5, 4, 4, 5]);
        s.round = 3;
        refresh_demands(&e, &mut s);
        let decision = assess(&e, &s.prices, &s.demands).unwrap();
        assert_eq!(
            decision,
            RoundDecision::Lottery { x_min: items(&[3]), item: ItemId(3), entrants: vec![b(2), b(3)] }
        );
        let event = lottery_step(&e, &mut s, &items(&[3]), ItemId(3), &mut LotteryPolicy::scripted([b(3)])).unwrap();
        assert_eq!(event.winner, b(3));
        assert_eq!(event.round, 3);
        assert_eq!(s.sold.item_of(b(3)), Some(ItemId(3)));
        assert_eq!(s.prices, PriceVector::from_real(&[5, 4, 4, 5]));
    }

    #[test]
    fn rm_completes_the_sample_terminal_state() {
        let e = example1();
        let mut s = MechanismState::initial(&e);
        s.prices = PriceVector::from_real(&[5, 4, 4, 7]);
        s.sold.insert(b(2), ItemId(3)).unwrap();
        s.rationing.forbid(b(1), ItemId(3)).unwrap();
        refresh_demands(&e, &mut s);
        let m = rm(&e, &s.demands, &s.sold, &s.prices).unwrap();
        assert_eq!(m.pairs().collect::<Vec<_>>(), vec![(b(3), ItemId(2)), (b(4), ItemId(1)), (b(5), ItemId(4))]);
    }

    #[test]
    fn advance_guards() {
        let e = example1();
        let mut m = Mechanism::new(&e);
        assert_eq!(m.resolve(b(1)), Err(MechanismError::NoPendingLottery));
        while let Progress::Raised = m.advance().unwrap() {}
        assert!(m.pending_lottery().is_some());
        assert_eq!(m.advance(), Err(MechanismError::LotteryPending));
        assert!(matches!(m.resolve(b(1)), Err(MechanismError::WinnerNotEntrant { .. })));
        m.resolve(b(2)).unwrap();
        while m.advance().unwrap() != Progress::Finished {}
        assert_eq!(m.advance(), Err(MechanismError::Finished));
    }
}
