//! Bet-and-save: borrow a tranche at the start of each period, bet only the
//! tranche, bank everything else.
//!
//! Period `n` runs from save time `tau_n` to `tau_{n+1}`. The borrow
//! `beta_{tau_n + 1}` is the only money on the table; the inner strategy's
//! `lambda` is read as the fraction of the *tranche* `W_t - W_{tau_n}` to
//! stake, so `W_t >= W_{tau_n}` holds on every path within the period.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use super::StrategyError;
use crate::game::{BetDecision, Ledger, Strategy};
use crate::rational::Rational;

/// When a period ends. Both variants are stopping rules on the running game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PeriodRule {
    /// Every period lasts exactly this many rounds.
    Fixed(usize),
    /// Ends once the tranche reaches `target` times its borrow or is wiped
    /// out, and after `max_len` rounds at the latest.
    FirstCrossing { target: Rational, max_len: usize },
}

impl PeriodRule {
    fn max_len(&self) -> usize {
        match self {
            PeriodRule::Fixed(len) => *len,
            PeriodRule::FirstCrossing { max_len, .. } => *max_len,
        }
    }

    fn ends(&self, elapsed: usize, tranche: &Rational, borrowed: &Rational) -> bool {
        match self {
            PeriodRule::Fixed(len) => elapsed >= *len,
            PeriodRule::FirstCrossing { target, max_len } => {
                elapsed >= *max_len || tranche.is_zero() || *tranche >= target * borrowed
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaveSchedule {
    borrows: Vec<Rational>,
    period: PeriodRule,
    total: Rational,
}

impl SaveSchedule {
    pub fn new(borrows: Vec<Rational>, period: PeriodRule) -> Result<Self, StrategyError> {
        if borrows.is_empty() {
            return Err(StrategyError::Schedule("at least one period is required".into()));
        }
        if let Some(b) = borrows.iter().find(|b| !b.is_positive()) {
            return Err(StrategyError::Schedule(format!("period borrow {b} must be positive")));
        }
        match &period {
            PeriodRule::Fixed(0) | PeriodRule::FirstCrossing { max_len: 0, .. } => {
                return Err(StrategyError::Schedule("save times must be strictly increasing".into()));
            }
            PeriodRule::FirstCrossing { target, .. } if !target.is_positive() => {
                return Err(StrategyError::Schedule(format!("crossing target {target} must be positive")));
            }
            _ => {}
        }
        let total = borrows.iter().fold(Rational::zero(), |acc, b| acc + b);
        Ok(SaveSchedule { borrows, period, total })
    }

    /// Like [`SaveSchedule::new`], also requiring the borrows to sum to `target`.
    pub fn with_liability_target(
        borrows: Vec<Rational>,
        period: PeriodRule,
        target: Rational,
    ) -> Result<Self, StrategyError> {
        let s = Self::new(borrows, period)?;
        if s.total != target {
            return Err(StrategyError::Schedule(format!(
                "borrows sum to {} but the liability target is {target}",
                s.total
            )));
        }
        Ok(s)
    }

    pub fn periods(&self) -> usize {
        self.borrows.len()
    }

    pub fn borrows(&self) -> &[Rational] {
        &self.borrows
    }

    /// Terminal liabilities `L = sum_n beta_{tau_n + 1}`.
    pub fn total_liabilities(&self) -> &Rational {
        &self.total
    }

    pub fn period_rule(&self) -> &PeriodRule {
        &self.period
    }

    /// Horizon by which every path has reached `tau_B`.
    pub fn max_duration(&self) -> usize {
        self.periods() * self.period.max_len()
    }

    /// Save times `tau_0 = 0 < tau_1 < ...` reached within the ledger.
    pub fn save_times(&self, ledger: &Ledger) -> Vec<usize> {
        let mut taus = vec![0];
        for s in 1..=ledger.rounds() {
            let n = taus.len() - 1;
            if n == self.periods() {
                break;
            }
            let start = taus[n];
            let tranche = &ledger.row(s).wealth - &ledger.row(start).wealth;
            if self.period.ends(s - start, &tranche, &self.borrows[n]) {
                taus.push(s);
            }
        }
        taus
    }

    pub fn describe(&self) -> String {
        let borrows: Vec<String> = self.borrows.iter().map(ToString::to_string).collect();
        let period = match &self.period {
            PeriodRule::Fixed(len) => format!("period={len}"),
            PeriodRule::FirstCrossing { target, max_len } => format!("crossing={target},max-len={max_len}"),
        };
        format!("borrows={},{period}", borrows.join("|"))
    }
}

#[derive(Clone)]
pub struct BetAndSave {
    schedule: SaveSchedule,
    inner: Arc<dyn Strategy>,
}

pub fn bet_and_save(schedule: SaveSchedule, inner: Arc<dyn Strategy>) -> BetAndSave {
    BetAndSave { schedule, inner }
}

impl BetAndSave {
    pub fn schedule(&self) -> &SaveSchedule {
        &self.schedule
    }
}

impl std::fmt::Debug for BetAndSave {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BetAndSave").field("schedule", &self.schedule).field("inner", &self.inner.describe()).finish()
    }
}

impl Strategy for BetAndSave {
    fn decide(&self, history: &Ledger) -> BetDecision {
        let taus = self.schedule.save_times(history);
        let n = taus.len() - 1;
        if n == self.schedule.periods() {
            return BetDecision::idle();
        }
        let start = taus[n];
        let now = history.rounds();
        let wealth = &history.last().wealth;
        let (beta, tranche) = if now == start {
            let b = self.schedule.borrows[n].clone();
            (b.clone(), b)
        } else {
            (Rational::zero(), wealth - &history.row(start).wealth)
        };
        let fraction = self.inner.decide(history).lambda.clamp(-Rational::one(), Rational::one());
        let at_table = wealth + &beta;
        let lambda = if at_table.is_positive() { fraction * tranche / at_table } else { Rational::zero() };
        BetDecision::new(beta, lambda)
    }

    fn describe(&self) -> String {
        format!("bet-and-save:{};inner={}", self.schedule.describe(), self.inner.describe())
    }
}

/// Per-period e-values and the two equivalent aggregate e-values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodEValues {
    pub save_times: Vec<usize>,
    /// `E_n = (W_{tau_{n+1}} - W_{tau_n}) / beta_{tau_n + 1}`.
    pub per_period: Vec<Rational>,
    /// Borrow-weighted average of the `E_n`.
    pub averaged: Rational,
    /// `(N_{tau_B} - N_min) / (1 - N_min)` with `N_min = 1 - L`.
    pub net: Rational,
}

/// Computes the period e-values of a completed bet-and-save ledger and
/// checks `E = E' = (W_{tau_B} - 1) / L` exactly.
pub fn period_e_values(ledger: &Ledger, schedule: &SaveSchedule) -> Result<PeriodEValues, StrategyError> {
    let taus = schedule.save_times(ledger);
    if taus.len() != schedule.periods() + 1 {
        return Err(StrategyError::Schedule(format!(
            "ledger of {} rounds completes only {} of {} periods",
            ledger.rounds(),
            taus.len() - 1,
            schedule.periods()
        )));
    }
    let total = schedule.total_liabilities();
    let end = *taus.last().expect("non-empty");
    if ledger.row(end).liabilities != *total {
        return Err(StrategyError::IdentityViolated(format!(
            "liabilities at tau_B are {} instead of {total}",
            ledger.row(end).liabilities
        )));
    }
    let per_period: Vec<Rational> = taus
        .windows(2)
        .zip(schedule.borrows())
        .map(|(w, beta)| (&ledger.row(w[1]).wealth - &ledger.row(w[0]).wealth) / beta)
        .collect();
    let averaged =
        per_period.iter().zip(schedule.borrows()).fold(Rational::zero(), |acc, (e, beta)| acc + e * beta) / total;
    let n_min = Rational::one() - total;
    let net = (&ledger.row(end).net - &n_min) / (Rational::one() - &n_min);
    let direct = (&ledger.row(end).wealth - Rational::one()) / total;
    if averaged != net || net != direct {
        return Err(StrategyError::IdentityViolated(format!("E = {averaged}, E' = {net}, (W - 1)/L = {direct}")));
    }
    Ok(PeriodEValues { save_times: taus, per_period, averaged, net })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{run_game, Path, PayoffSchedule};
    use crate::rational::{int, ratio};
    use crate::strategies::{constant_strategy, idle};

    fn all_in() -> Arc<dyn Strategy> {
        Arc::new(constant_strategy(int(1), int(0)).unwrap())
    }

    #[test]
    fn single_period_single_round() {
        let sched = SaveSchedule::new(vec![int(1)], PeriodRule::Fixed(1)).unwrap();
        let s = bet_and_save(sched.clone(), all_in());
        for (path, e0) in [("+1", int(2)), ("-1", int(0))] {
            let l = run_game(&s, &Path::parse(path).unwrap(), &PayoffSchedule::fair()).unwrap();
            let ev = period_e_values(&l, &sched).unwrap();
            assert_eq!(ev.per_period, vec![e0.clone()]);
            assert_eq!(&l.row(1).wealth - &l.row(0).wealth, e0);
        }
    }

    #[test]
    fn two_periods_average() {
        let sched = SaveSchedule::new(vec![int(1), int(1)], PeriodRule::Fixed(1)).unwrap();
        let s = bet_and_save(sched.clone(), all_in());
        let l = run_game(&s, &Path::parse("+1,+1").unwrap(), &PayoffSchedule::fair()).unwrap();
        let ev = period_e_values(&l, &sched).unwrap();
        assert_eq!(ev.per_period, vec![int(2), int(2)]);
        assert_eq!(ev.averaged, int(2));
        assert_eq!(ev.net, int(2));
        assert_eq!(l.current(crate::game::Series::Gross), Some(int(5)));
        for mask in 0..4 {
            let l = run_game(&s, &Path::from_mask(mask, 2), &PayoffSchedule::fair()).unwrap();
            let ev = period_e_values(&l, &sched).unwrap();
            assert!(ev.per_period.iter().all(|e| *e == int(0) || *e == int(2)));
            assert_eq!(ev.averaged, (&ev.per_period[0] + &ev.per_period[1]) / int(2));
        }
    }

    #[test]
    fn zero_inner_bets_return_the_tranche() {
        let sched = SaveSchedule::new(vec![int(1), ratio(1, 2)], PeriodRule::Fixed(2)).unwrap();
        let s = bet_and_save(sched.clone(), Arc::new(idle()));
        let l = run_game(&s, &Path::parse("+1,-1,-1,+1").unwrap(), &PayoffSchedule::fair()).unwrap();
        let ev = period_e_values(&l, &sched).unwrap();
        assert_eq!(ev.per_period, vec![int(1), int(1)]);
        assert_eq!(ev.averaged, int(1));
    }

    #[test]
    fn saved_wealth_is_never_risked() {
        let sched = SaveSchedule::new(
            vec![int(1), int(2), ratio(1, 2)],
            PeriodRule::FirstCrossing { target: int(2), max_len: 3 },
        )
        .unwrap();
        let s = bet_and_save(sched.clone(), Arc::new(constant_strategy(ratio(-3, 4), int(0)).unwrap()));
        for mask in 0..(1u64 << 9) {
            let l = run_game(&s, &Path::from_mask(mask, 9), &PayoffSchedule::fair()).unwrap();
            let taus = sched.save_times(&l);
            assert_eq!(taus.len(), 4);
            for w in taus.windows(2) {
                for t in w[0]..=w[1] {
                    assert!(l.row(t).wealth >= l.row(w[0]).wealth);
                }
            }
            period_e_values(&l, &sched).unwrap();
        }
    }

    #[test]
    fn incomplete_ledger_is_rejected() {
        let sched = SaveSchedule::new(vec![int(1), int(1)], PeriodRule::Fixed(2)).unwrap();
        let s = bet_and_save(sched.clone(), all_in());
        let l = run_game(&s, &Path::parse("+1,+1,+1").unwrap(), &PayoffSchedule::fair()).unwrap();
        assert!(matches!(period_e_values(&l, &sched), Err(StrategyError::Schedule(_))));
    }

    #[test]
    fn schedule_validation() {
        assert!(SaveSchedule::new(vec![], PeriodRule::Fixed(1)).is_err());
        assert!(SaveSchedule::new(vec![int(0)], PeriodRule::Fixed(1)).is_err());
        assert!(SaveSchedule::new(vec![int(1)], PeriodRule::Fixed(0)).is_err());
        assert!(SaveSchedule::new(vec![int(1)], PeriodRule::FirstCrossing { target: int(0), max_len: 2 }).is_err());
        assert!(SaveSchedule::with_liability_target(vec![int(1), int(2)], PeriodRule::Fixed(1), int(3)).is_ok());
        assert!(SaveSchedule::with_liability_target(vec![int(1), int(2)], PeriodRule::Fixed(1), int(4)).is_err());
    }

    #[test]
    fn borrows_only_at_period_starts() {
        let sched = SaveSchedule::new(vec![int(1), int(1)], PeriodRule::Fixed(2)).unwrap();
        let s = bet_and_save(sched, all_in());
        let l = run_game(&s, &Path::parse("+1,-1,+1,+1,-1").unwrap(), &PayoffSchedule::fair()).unwrap();
        let betas: Vec<Rational> = l.decisions().iter().map(|d| d.beta.clone()).collect();
        assert_eq!(betas, vec![int(1), int(0), int(1), int(0), int(0)]);
        assert_eq!(l.decisions()[4], BetDecision::idle());
    }
}
