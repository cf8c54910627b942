use num_traits::{One, Signed, Zero};

use super::StrategyError;
use crate::evidence::net_floor_constraint;
use crate::game::{BetDecision, Ledger, Strategy};
use crate::rational::Rational;

/// Wraps a base strategy so that net wealth never falls below `n_min`.
///
/// The worst case of a round loses the stake `|lambda| (W + beta)`, so the
/// floor survives iff the stake is at most the cushion `N_{t-1} - n_min`.
/// Violating proposals first lose borrowing (down to zero), then exposure.
/// Meant for the fair game.
#[derive(Debug, Clone)]
pub struct NetFloorGuard<S> {
    base: S,
    n_min: Rational,
}

pub fn net_floor_guard<S: Strategy>(base: S, n_min: Rational) -> Result<NetFloorGuard<S>, StrategyError> {
    if n_min >= Rational::one() {
        return Err(StrategyError::FloorTooHigh(n_min));
    }
    Ok(NetFloorGuard { base, n_min })
}

impl<S> NetFloorGuard<S> {
    pub fn floor(&self) -> &Rational {
        &self.n_min
    }
}

fn shrink(wealth: &Rational, cushion: &Rational, proposal: BetDecision) -> BetDecision {
    let BetDecision { mut beta, lambda } = proposal;
    if cushion.is_negative() {
        return BetDecision::idle();
    }
    let exposure = lambda.abs();
    if beta.is_positive() && exposure.is_positive() {
        let cap = cushion / &exposure - wealth;
        if !cap.is_negative() {
            return BetDecision::new(beta.min(cap), lambda);
        }
        beta = Rational::zero();
    }
    let at_table = wealth + &beta;
    if !at_table.is_positive() || &exposure * &at_table <= *cushion {
        return BetDecision::new(beta, lambda);
    }
    let allowed = cushion / at_table;
    let lambda = if lambda.is_negative() { -allowed } else { allowed };
    BetDecision::new(beta, lambda)
}

impl<S: Strategy> Strategy for NetFloorGuard<S> {
    fn decide(&self, history: &Ledger) -> BetDecision {
        let proposal = self.base.decide(history);
        let row = history.last();
        if net_floor_constraint(&row.wealth, &row.liabilities, &proposal.beta, &proposal.lambda, &self.n_min) {
            return proposal;
        }
        let cushion = &row.net - &self.n_min;
        let out = shrink(&row.wealth, &cushion, proposal);
        debug_assert!(net_floor_constraint(&row.wealth, &row.liabilities, &out.beta, &out.lambda, &self.n_min));
        out
    }

    fn describe(&self) -> String {
        format!("guard(n_min={}):{}", self.n_min, self.base.describe())
    }
}
