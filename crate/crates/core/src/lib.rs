//! Selling indivisible items under price rigidities.
//!
//! Each item carries a lower and an upper price bound. The ascending
//! mechanism in [`mechanism`] raises the prices of a minimal over-demanded
//! set of items one unit at a time and, once such an item sits at its upper
//! bound, rations it by a fair lottery among the buyers who want nothing
//! else. It always stops at a constrained Walrasian equilibrium, which
//! [`equilibrium`] can verify independently.
//!
//! Because lotteries make a run nondeterministic, [`expectation`] computes
//! every buyer's expected profit and every item's expected price exactly,
//! and [`strategy`] measures what a single buyer can gain by misreporting.

pub mod cli;
pub mod equilibrium;
pub mod expectation;
pub mod io;
pub mod matching;
pub mod mechanism;
pub mod model;
pub mod overdemand;
pub mod strategy;

pub use model::{
    demand_set, demand_situation, indirect_utility, validate_economy, Allocation, BuyerId, DemandSituation, Economy,
    ItemId, ItemSet, Money, PriceVector, RationingSystem, RawEconomy,
};
