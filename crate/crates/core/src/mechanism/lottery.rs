use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MechanismError;
use crate::model::{BuyerId, ItemId};

/// Decides lottery winners.
///
/// `Seeded` draws uniformly with a ChaCha8 stream seeded through
/// `SeedableRng::seed_from_u64`; each draw consumes one
/// `random_range(0..entrants.len())` sample and picks that position in the
/// ascending entrant list. `Scripted` replays a fixed list of winners, one
/// per lottery, in order.
///
/// Exhaustive enumeration of every outcome is done by driving a
/// [`super::Mechanism`] directly; see `expectation::enumerate_histories`.
#[derive(Debug, Clone)]
pub enum LotteryPolicy {
    Seeded(Box<ChaCha8Rng>),
    Scripted { winners: Vec<BuyerId>, next: usize },
}

impl LotteryPolicy {
    pub fn seeded(seed: u64) -> Self {
        LotteryPolicy::Seeded(Box::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    pub fn scripted(winners: impl IntoIterator<Item = BuyerId>) -> Self {
        LotteryPolicy::Scripted { winners: winners.into_iter().collect(), next: 0 }
    }

    /// Picks a winner among `entrants` (ascending, nonempty) for `item`.
    pub fn draw(&mut self, item: ItemId, entrants: &[BuyerId]) -> Result<BuyerId, MechanismError> {
        if entrants.is_empty() {
            return Err(MechanismError::NoEntrants(item));
        }
        match self {
            LotteryPolicy::Seeded(rng) => Ok(entrants[rng.random_range(0..entrants.len())]),
            LotteryPolicy::Scripted { winners, next } => {
                let winner = *winners.get(*next).ok_or(MechanismError::ScriptExhausted { lottery: *next })?;
                if !entrants.contains(&winner) {
                    return Err(MechanismError::WinnerNotEntrant { winner, item, entrants: entrants.to_vec() });
                }
                *next += 1;
                Ok(winner)
            }
        }
    }
}
