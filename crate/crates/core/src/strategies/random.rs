use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{BetDecision, EtaWeights, Ledger, Outcome, Strategy};
use crate::rational::{int, ratio};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomConfig {
    /// Allow `beta_t < 0` (partial or full repayment).
    pub allow_repay: bool,
    /// Largest borrow per round, in halves.
    pub max_borrow_halves: i64,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig { allow_repay: false, max_borrow_halves: 4 }
    }
}

/// Pseudorandom but predictable: every decision is a deterministic function
/// of `(seed, round, X_1..X_{t-1})`, so replaying a prefix replays the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomStrategy {
    seed: u64,
    config: RandomConfig,
}

impl RandomStrategy {
    pub fn new(seed: u64, config: RandomConfig) -> Self {
        RandomStrategy { seed, config }
    }

    pub fn config(&self) -> RandomConfig {
        self.config
    }
}

fn prefix_rng(seed: u64, salt: u64, past: &[Outcome]) -> ChaCha8Rng {
    let mask = past.iter().enumerate().filter(|(_, o)| **o == Outcome::Heads).fold(0u64, |m, (i, _)| m | 1 << i);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt.rotate_left(17));
    rng.set_stream(mask);
    rng.set_word_pos(u128::from(past.len() as u64) << 8);
    rng
}

impl Strategy for RandomStrategy {
    fn decide(&self, history: &Ledger) -> BetDecision {
        let mut rng = prefix_rng(self.seed, 0x5eed_0001, history.outcomes());
        let lambda = ratio(rng.gen_range(-6..=6), 6);
        let wealth = &history.last().wealth;
        let beta = match rng.gen_range(0..6) {
            0 | 1 => int(0),
            2 if self.config.allow_repay => -(wealth * ratio(rng.gen_range(1..=4), 4)),
            _ => ratio(rng.gen_range(1..=self.config.max_borrow_halves.max(1)), 2),
        };
        BetDecision::new(beta, lambda)
    }

    fn describe(&self) -> String {
        format!("random:seed={},repay={}", self.seed, self.config.allow_repay)
    }
}

/// Predictable weights `eta_t in {1, 3/2, 2, 5/2, 3}` drawn from the prefix.
pub fn random_eta(seed: u64) -> EtaWeights {
    EtaWeights::from_fn(format!("random-eta:{seed}"), move |past: &[Outcome]| {
        let mut rng = prefix_rng(seed, 0xe7a0_0002, past);
        int(1) + ratio(rng.gen_range(0..=4), 2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{run_game, Path, PayoffSchedule};

    #[test]
    fn decisions_depend_only_on_the_prefix() {
        let s = RandomStrategy::new(11, RandomConfig { allow_repay: true, max_borrow_halves: 4 });
        for mask in 0..64u64 {
            let a = run_game(&s, &Path::from_mask(mask, 6), &PayoffSchedule::fair()).unwrap();
            let b = run_game(&s, &Path::from_mask(mask ^ (1 << 5), 6), &PayoffSchedule::fair()).unwrap();
            assert_eq!(a.decisions(), b.decisions());
            let c = run_game(&s, &Path::from_mask(mask ^ (1 << 4), 6), &PayoffSchedule::fair()).unwrap();
            assert_eq!(a.decisions()[..5], c.decisions()[..5]);
        }
    }

    #[test]
    fn without_repay_borrowings_are_non_negative() {
        let s = RandomStrategy::new(3, RandomConfig::default());
        for mask in 0..256u64 {
            let l = run_game(&s, &Path::from_mask(mask, 8), &PayoffSchedule::fair()).unwrap();
            assert!(l.decisions().iter().all(|d| d.beta >= int(0)));
        }
    }

    #[test]
    fn random_eta_is_at_least_one() {
        let eta = random_eta(5);
        for mask in 0..64u64 {
            let p = Path::from_mask(mask, 6);
            for t in 0..=6 {
                assert!(eta.weight(&p.outcomes()[..t]) >= int(1));
            }
        }
    }
}
