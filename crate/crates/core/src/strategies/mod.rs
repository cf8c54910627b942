//! Predictable strategies used throughout the crate.

mod guard;
mod random;
mod save;
mod spec;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::game::{BetDecision, EtaWeights, GameError, Ledger, PayoffSchedule, Strategy};
use crate::rational::{ParseRationalError, Rational};

pub use guard::{net_floor_guard, NetFloorGuard};
pub use random::{random_eta, RandomConfig, RandomStrategy};
pub use save::{bet_and_save, period_e_values, BetAndSave, PeriodEValues, PeriodRule, SaveSchedule};
pub use spec::{parse_strategy, BuiltStrategy, StrategySpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("over-bet: |lambda| = |{0}| exceeds 1")]
    OverBet(Rational),
    #[error("net floor {0} must be strictly below 1")]
    FloorTooHigh(Rational),
    #[error("save schedule: {0}")]
    Schedule(String),
    #[error("bet-and-save identity violated: {0}")]
    IdentityViolated(String),
    #[error("unknown strategy `{0}`")]
    Unknown(String),
    #[error("strategy `{strategy}` is missing parameter `{param}`")]
    MissingParam { strategy: String, param: &'static str },
    #[error("strategy `{strategy}`: unknown parameter `{param}`")]
    UnknownParam { strategy: String, param: String },
    #[error("bad value for `{param}`: {source}")]
    BadRational {
        param: String,
        #[source]
        source: ParseRationalError,
    },
    #[error("bad value for `{param}`: {value}")]
    BadValue { param: String, value: String },
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Sub-liability weights by name: `unit`, `penalize-after-loss` or
/// `random:SEED`.
pub fn parse_eta(name: &str) -> Result<EtaWeights, StrategyError> {
    match name.trim() {
        "unit" => Ok(EtaWeights::unit()),
        "penalize-after-loss" => Ok(EtaWeights::penalize_after_loss()),
        other => match other.strip_prefix("random:").map(str::parse::<u64>) {
            Some(Ok(seed)) => Ok(random_eta(seed)),
            _ => Err(StrategyError::BadValue { param: "eta".into(), value: other.into() }),
        },
    }
}

/// Emits the same `(beta, lambda)` every round; a repayment larger than the
/// current wealth is clamped to `-W_{t-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constant {
    lambda: Rational,
    beta: Rational,
}

pub fn constant_strategy(lambda: Rational, beta: Rational) -> Result<Constant, StrategyError> {
    if lambda.abs() > Rational::one() {
        return Err(StrategyError::OverBet(lambda));
    }
    Ok(Constant { lambda, beta })
}

pub fn idle() -> Constant {
    Constant { lambda: Rational::zero(), beta: Rational::zero() }
}

impl Strategy for Constant {
    fn decide(&self, history: &Ledger) -> BetDecision {
        let floor = -history.last().wealth.clone();
        BetDecision::new(self.beta.clone().max(floor), self.lambda.clone())
    }

    fn describe(&self) -> String {
        if self.lambda.is_zero() && self.beta.is_zero() {
            "idle".into()
        } else {
            format!("constant:lambda={},beta={}", self.lambda, self.beta)
        }
    }
}

/// The 50-50 risk-free combination (`lambda = 0`) plus a fixed borrow each
/// round, intended for a mispriced schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arbitrage {
    schedule: PayoffSchedule,
    beta: Rational,
}

pub fn arbitrage_strategy(schedule: PayoffSchedule, beta: Rational) -> Arbitrage {
    Arbitrage { schedule, beta }
}

impl Arbitrage {
    pub fn schedule(&self) -> &PayoffSchedule {
        &self.schedule
    }
}

impl Strategy for Arbitrage {
    fn decide(&self, history: &Ledger) -> BetDecision {
        let floor = -history.last().wealth.clone();
        BetDecision::new(self.beta.clone().max(floor), Rational::zero())
    }

    fn describe(&self) -> String {
        format!("arbitrage:{},beta={}", self.schedule.describe(), self.beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{run_game, LedgerOptions, Path, Series};
    use crate::rational::{int, pow, ratio};

    #[test]
    fn constant_table_strategy() {
        let s = constant_strategy(ratio(1, 2), int(1)).unwrap();
        let l = run_game(&s, &Path::parse("+1,+1").unwrap(), &PayoffSchedule::fair()).unwrap();
        assert_eq!(l.current(Series::Gross), Some(int(6)));
        assert_eq!(s.describe(), "constant:lambda=1/2,beta=1");
    }

    #[test]
    fn idle_keeps_unit_wealth() {
        let l = run_game(&idle(), &Path::parse("+1,-1,-1").unwrap(), &PayoffSchedule::fair()).unwrap();
        assert!(l.series(Series::Gross).unwrap().iter().all(|w| *w == int(1)));
    }

    #[test]
    fn all_in_doubling() {
        let s = constant_strategy(int(1), int(0)).unwrap();
        let l = run_game(&s, &Path::parse("+1,+1,+1").unwrap(), &PayoffSchedule::fair()).unwrap();
        assert_eq!(l.series(Series::Gross).unwrap(), vec![int(1), int(2), int(4), int(8)]);
        let l = run_game(&s, &Path::parse("+1,-1,+1").unwrap(), &PayoffSchedule::fair()).unwrap();
        assert_eq!(l.series(Series::Gross).unwrap(), vec![int(1), int(2), int(0), int(0)]);
    }

    #[test]
    fn constant_rejects_over_bet() {
        assert!(matches!(constant_strategy(ratio(3, 2), int(0)), Err(StrategyError::OverBet(_))));
    }

    #[test]
    fn constant_clamps_large_repayment() {
        let s = constant_strategy(int(0), int(-5)).unwrap();
        let l = run_game(&s, &Path::parse("+1,+1").unwrap(), &PayoffSchedule::fair()).unwrap();
        assert_eq!(l.series(Series::Gross).unwrap(), vec![int(1), int(0), int(0)]);
        assert_eq!(l.current(Series::Liabilities), Some(int(-1)));
    }

    #[test]
    fn arbitrage_grows_risk_free() {
        let sched = PayoffSchedule::constant(ratio(1, 10)).unwrap();
        let s = arbitrage_strategy(sched.clone(), int(0));
        for mask in 0..8u64 {
            let l = run_game(&s, &Path::from_mask(mask, 3), s.schedule()).unwrap();
            for t in 0..=3 {
                assert_eq!(l.value(Series::Gross, t), Some(pow(&ratio(11, 10), t)));
            }
        }
    }

    #[test]
    fn arbitrage_without_bonus_is_idle() {
        let s = arbitrage_strategy(PayoffSchedule::fair(), int(0));
        let l = run_game(&s, &Path::parse("-1,+1").unwrap(), s.schedule()).unwrap();
        assert!(l.series(Series::Gross).unwrap().iter().all(|w| *w == int(1)));
    }

    #[test]
    fn arbitrage_with_borrowing_inflates_net_wealth() {
        let sched = PayoffSchedule::constant(ratio(1, 10)).unwrap();
        let s = arbitrage_strategy(sched, int(1));
        let opts = LedgerOptions { eta: None, compound: true };
        for mask in 0..16u64 {
            let l = crate::game::run_game_with(&s, &Path::from_mask(mask, 4), s.schedule(), &opts).unwrap();
            let net = l.series(Series::Net).unwrap();
            for t in 1..net.len() {
                assert!(net[t] > net[t - 1]);
                let w_prev = l.value(Series::Gross, t - 1).unwrap();
                assert_eq!(&net[t] - &net[t - 1], (w_prev + int(1)) * ratio(1, 10));
            }
            assert!(l.series(Series::AdjustedNet).unwrap().iter().all(|n| *n == int(1)));
        }
    }
}
